//! Rank statistics: Kendall's tau-b, empirical margins and pseudo-observations.

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// Tie-corrected Kendall tau-b in O(n log n) (Knight's algorithm).
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::shape(format!(
            "kendall tau on sequences of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::shape("kendall tau needs at least 2 observations"));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::domain("kendall tau on NaN input"));
    }

    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let tie_sum = |groups: &mut dyn Iterator<Item = u64>| groups.map(|t| t * (t - 1) / 2).sum::<u64>();

    let n1 = tie_sum(&mut run_lengths(&pairs, |a, b| a.0 == b.0).into_iter());
    let n3 = tie_sum(&mut run_lengths(&pairs, |a, b| a == b).into_iter());

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf);

    let n2 = tie_sum(&mut run_lengths(&ys, |a, b| a == b).into_iter());

    if n0 == n1 || n0 == n2 {
        return Err(Error::UndefinedCorrelation(
            "kendall tau of a constant sequence".into(),
        ));
    }
    let numer = n0 as f64 - n1 as f64 - n2 as f64 + n3 as f64 - 2.0 * swaps as f64;
    let denom = ((n0 - n1) as f64).sqrt() * ((n0 - n2) as f64).sqrt();
    Ok((numer / denom).clamp(-1.0, 1.0))
}

fn run_lengths<T>(sorted: &[T], same: impl Fn(&T, &T) -> bool) -> Vec<u64> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || !same(&sorted[i - 1], &sorted[i]) {
            out.push((i - start) as u64);
            start = i;
        }
    }
    out
}

/// Sorts `v` ascending, returning the number of strict inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (left, right) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(left, bl) + merge_count(right, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Empirical distribution of one column, scaled so that the cdf at sample
/// points lies in [1/(n+1), n/(n+1)].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMargin {
    sorted_values: Vec<f64>,
}

impl EmpiricalMargin {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData("empty margin".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("margin contains non-finite values"));
        }
        let mut sorted_values = values.to_vec();
        sorted_values.sort_by(f64::total_cmp);
        Ok(Self { sorted_values })
    }

    /// Rebuilds a margin from an already sorted sample.
    pub fn from_sorted(sorted_values: Vec<f64>) -> Result<Self> {
        if sorted_values.is_empty() {
            return Err(Error::InsufficientData("empty margin".into()));
        }
        if sorted_values.iter().any(|v| !v.is_finite()) || sorted_values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::domain("margin values must be finite and sorted"));
        }
        Ok(Self { sorted_values })
    }

    pub fn n(&self) -> usize {
        self.sorted_values.len()
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted_values
    }

    /// (number of sample values ≤ x) / (n + 1).
    pub fn cdf(&self, x: f64) -> f64 {
        let count = self.sorted_values.partition_point(|&v| v <= x);
        count as f64 / (self.n() as f64 + 1.0)
    }

    /// Smallest sample value whose cdf is ≥ u, clamped to the sample range.
    pub fn pseudo_inverse(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::domain(format!("pseudo-inverse needs u in (0,1), got {u}")));
        }
        Ok(self.pseudo_inverse_unchecked(u))
    }

    pub(crate) fn pseudo_inverse_unchecked(&self, u: f64) -> f64 {
        let n = self.n();
        let k = (u * (n as f64 + 1.0) - 1e-9).ceil();
        let idx = (k.max(1.0) as usize - 1).min(n - 1);
        self.sorted_values[idx]
    }
}

/// Pseudo-observations on (0,1) by rank/(n+1).
///
/// Tied values share a block of ranks; each tied observation receives a
/// uniform position inside its block (continuous extension), so the output
/// has no ties. Untied observations are deterministic.
pub fn pseudo_observations<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; n];
    let denom = n as f64 + 1.0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]].total_cmp(&values[order[start]]) == Ordering::Equal {
            end += 1;
        }
        let c = end - start;
        for &idx in &order[start..end] {
            out[idx] = if c == 1 {
                (start as f64 + 1.0) / denom
            } else {
                let w: f64 = rng.random();
                (start as f64 + 0.5 + c as f64 * w) / denom
            };
        }
        start = end;
    }
    out
}
