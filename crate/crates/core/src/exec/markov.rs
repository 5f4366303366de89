use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Time-homogeneous transition matrix over labelled states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantMarkovModel {
    pub states: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
    /// Observed transition counts behind `matrix`, when fitted from data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<Vec<u64>>>,
}

/// Counts transitions between consecutive labels of every sequence and
/// normalizes each row. States never seen as a source stay put.
pub fn fit_constant_markov<S: AsRef<str>>(sequences: &[Vec<S>]) -> Result<ConstantMarkovModel> {
    let states: Vec<String> = sequences
        .iter()
        .flatten()
        .map(|s| s.as_ref().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if states.is_empty() {
        return Err(Error::InsufficientData("no state sequences".into()));
    }
    let k = states.len();
    let index = |s: &str| states.binary_search_by(|x| x.as_str().cmp(s)).unwrap();
    let mut counts = vec![vec![0u64; k]; k];
    let mut total = 0u64;
    for seq in sequences {
        for w in seq.windows(2) {
            counts[index(w[0].as_ref())][index(w[1].as_ref())] += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::InsufficientData("no observed transitions".into()));
    }
    let matrix = counts
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let n: u64 = row.iter().sum();
            if n == 0 {
                (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect()
            } else {
                row.iter().map(|&c| c as f64 / n as f64).collect()
            }
        })
        .collect();
    Ok(ConstantMarkovModel {
        states,
        matrix,
        counts: Some(counts),
    })
}

impl ConstantMarkovModel {
    pub fn new(states: Vec<String>, matrix: Vec<Vec<f64>>) -> Result<Self> {
        let m = Self {
            states,
            matrix,
            counts: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.states.len();
        if k == 0 || self.matrix.len() != k || self.matrix.iter().any(|r| r.len() != k) {
            return Err(Error::shape(format!("transition matrix must be {k}x{k}")));
        }
        let uniq: BTreeSet<&String> = self.states.iter().collect();
        if uniq.len() != k {
            return Err(Error::config("duplicate state labels"));
        }
        for (i, row) in self.matrix.iter().enumerate() {
            if row.iter().any(|&p| !p.is_finite() || p < 0.0) {
                return Err(Error::domain(format!("row '{}' has a negative or non-finite entry", self.states[i])));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::domain(format!("row '{}' sums to {s}", self.states[i])));
            }
        }
        Ok(())
    }

    /// Identity transitions (nothing ever changes).
    pub fn identity(states: Vec<String>) -> Self {
        let k = states.len();
        let matrix = (0..k).map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Self {
            states,
            matrix,
            counts: None,
        }
    }

    pub fn state_index(&self, label: &str) -> Result<usize> {
        self.states
            .iter()
            .position(|s| s == label)
            .ok_or_else(|| Error::domain(format!("unknown state '{label}'")))
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.matrix[state]
    }

    /// Next state index for a given uniform draw `u` in [0, 1).
    pub fn next_index(&self, state: usize, u: f64) -> usize {
        sample_index(&self.matrix[state], u)
    }

    pub fn step<R: Rng + ?Sized>(&self, current: &str, rng: &mut R) -> Result<&str> {
        let i = self.state_index(current)?;
        Ok(&self.states[self.next_index(i, rng.random())])
    }
}

/// Inverse-cdf draw from a probability vector. Zero-probability entries are
/// never selected; the last positive entry absorbs rounding slack.
pub fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (j, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = j;
            if u < acc {
                return j;
            }
        }
    }
    last
}
