use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Which side of each interval is closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    /// Intervals `[c_{i-1}, c_i)`: a value equal to a cut point moves up.
    LeftClosed,
    /// Intervals `(c_{i-1}, c_i]`: a value equal to a cut point stays down.
    RightClosed,
}

/// Maps a real value to the label of the interval containing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdDiscretizer {
    cut_points: Vec<f64>,
    labels: Vec<String>,
    closure: Closure,
}

impl ThresholdDiscretizer {
    pub fn new<S: Into<String>>(
        cut_points: Vec<f64>,
        labels: impl IntoIterator<Item = S>,
        closure: Closure,
    ) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() != cut_points.len() + 1 {
            return Err(Error::config(format!(
                "{} cut points need {} labels, got {}",
                cut_points.len(),
                cut_points.len() + 1,
                labels.len()
            )));
        }
        if cut_points.iter().any(|c| !c.is_finite()) || cut_points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("cut points must be finite and strictly ascending"));
        }
        let mut uniq = labels.clone();
        uniq.sort();
        uniq.dedup();
        if uniq.len() != labels.len() {
            return Err(Error::config("discretizer labels must be unique"));
        }
        Ok(Self {
            cut_points,
            labels,
            closure,
        })
    }

    /// Viral load (copies/ml) into modalities 0 (< 50), 1 ([50, 10000)), 2 (≥ 10000).
    pub fn viral_load() -> Self {
        Self::new(vec![50.0, 10_000.0], ["0", "1", "2"], Closure::LeftClosed).unwrap()
    }

    /// Glomerular filtration flow into creatinine-clearance classes
    /// 3 (≤ 29), 2 ((29, 89]), 1 (> 89).
    pub fn creatinine_clearance() -> Self {
        Self::new(vec![29.0, 89.0], ["3", "2", "1"], Closure::RightClosed).unwrap()
    }

    /// Body-mass index classes (≤ 25, (25, 35], > 35).
    pub fn body_mass_index() -> Self {
        Self::new(vec![25.0, 35.0], ["<=25", "25-35", ">35"], Closure::RightClosed).unwrap()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn cut_points(&self) -> &[f64] {
        &self.cut_points
    }

    pub fn closure(&self) -> Closure {
        self.closure
    }

    /// Index of the interval containing `value` (0 = lowest).
    pub fn interval_index(&self, value: f64) -> Result<usize> {
        if !value.is_finite() {
            return Err(Error::domain(format!("cannot discretize {value}")));
        }
        Ok(match self.closure {
            Closure::LeftClosed => self.cut_points.partition_point(|&c| c <= value),
            Closure::RightClosed => self.cut_points.partition_point(|&c| c < value),
        })
    }

    pub fn discretize(&self, value: f64) -> Result<&str> {
        Ok(&self.labels[self.interval_index(value)?])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn viral_load_rule() {
        let d = ThresholdDiscretizer::viral_load();
        assert_eq!(d.discretize(30.0).unwrap(), "0");
        assert_eq!(d.discretize(0.0).unwrap(), "0");
        assert_eq!(d.discretize(50.0).unwrap(), "1");
        assert_eq!(d.discretize(9_999.9).unwrap(), "1");
        assert_eq!(d.discretize(10_000.0).unwrap(), "2");
    }

    #[test]
    fn creatinine_rule() {
        let d = ThresholdDiscretizer::creatinine_clearance();
        assert_eq!(d.discretize(29.0).unwrap(), "3");
        assert_eq!(d.discretize(29.5).unwrap(), "2");
        assert_eq!(d.discretize(89.0).unwrap(), "2");
        assert_eq!(d.discretize(89.1).unwrap(), "1");
    }

    #[test]
    fn bmi_rule() {
        let d = ThresholdDiscretizer::body_mass_index();
        assert_eq!(d.discretize(25.0).unwrap(), "<=25");
        assert_eq!(d.discretize(35.0).unwrap(), "25-35");
        assert_eq!(d.discretize(35.01).unwrap(), ">35");
    }

    #[test]
    fn invalid_construction_and_input() {
        assert!(ThresholdDiscretizer::new(vec![2.0, 1.0], ["a", "b", "c"], Closure::LeftClosed).is_err());
        assert!(ThresholdDiscretizer::new(vec![1.0], ["a"], Closure::LeftClosed).is_err());
        assert!(ThresholdDiscretizer::new(vec![1.0], ["a", "a"], Closure::LeftClosed).is_err());
        assert!(ThresholdDiscretizer::viral_load().discretize(f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn monotone(a in -1e5f64..1e5, b in -1e5f64..1e5) {
            for d in [ThresholdDiscretizer::viral_load(), ThresholdDiscretizer::creatinine_clearance()] {
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                prop_assert!(d.interval_index(lo).unwrap() <= d.interval_index(hi).unwrap());
            }
        }
    }
}
