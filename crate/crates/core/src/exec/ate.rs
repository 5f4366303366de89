//! Average treatment effect on paired virtual arms.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Outcomes of the same patients under exposure (`y1`) and no exposure (`y0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedOutcomes {
    y1: Vec<f64>,
    y0: Vec<f64>,
}

impl PairedOutcomes {
    pub fn new(y1: Vec<f64>, y0: Vec<f64>) -> Result<Self> {
        if y1.len() != y0.len() {
            return Err(Error::shape(format!("arms have {} and {} patients", y1.len(), y0.len())));
        }
        if y1.is_empty() {
            return Err(Error::InsufficientData("no paired outcomes".into()));
        }
        Ok(Self { y1, y0 })
    }

    pub fn n(&self) -> usize {
        self.y1.len()
    }

    pub fn exposed(&self) -> &[f64] {
        &self.y1
    }

    pub fn unexposed(&self) -> &[f64] {
        &self.y0
    }
}

/// Mean of per-patient differences.
pub fn ate_paired(p: &PairedOutcomes) -> f64 {
    p.y1.iter().zip(&p.y0).map(|(a, b)| a - b).sum::<f64>() / p.n() as f64
}

/// Difference of arm means; arms may have different sizes.
pub fn ate_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("both arms need at least one outcome".into()));
    }
    Ok(a.iter().sum::<f64>() / a.len() as f64 - b.iter().sum::<f64>() / b.len() as f64)
}
