//! Scenario parameters, tariff paths and generic conversion probabilities.
//!
//! Dates are semester indices on a common calendar; period `u` (1-based)
//! covers semester `start_semester + u - 1`.

use super::catalog::Treatment;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Which tariff path prices the no-switch arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CounterfactualTariffs {
    /// Both arms follow the scenario's branded tariffs; the arms then differ
    /// only through generic conversion.
    #[default]
    Shared,
    /// The no-switch arm keeps the baseline branded tariff throughout.
    PreGeneric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Long-run probability of converting to the generic, per period.
    pub penrate: f64,
    /// Years from branded to generic marketing authorization.
    pub ammgm_offset_years: f64,
    /// Years from generic authorization until `penrate` is reached.
    pub pentime_offset_years: f64,
    pub generic_price_fraction: f64,
    pub branded_drop_at_generic: f64,
    pub annual_tariff_decay: f64,
    /// Number of simulated periods (semesters).
    pub horizon: usize,
    pub start_semester: i64,
    pub incident_cases_per_step: usize,
    /// Share of the national population represented by the cohort.
    pub population_fraction: f64,
    pub n_runs: usize,
    pub counterfactual_tariffs: CounterfactualTariffs,
    /// Use IR = 1 for CREA = 3 instead of CREA ∈ {1, 2}.
    pub invert_ir: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            penrate: 0.4,
            ammgm_offset_years: 13.0,
            pentime_offset_years: 1.0,
            generic_price_fraction: 0.4,
            branded_drop_at_generic: 0.2,
            annual_tariff_decay: 0.034,
            horizon: 10,
            start_semester: 0,
            incident_cases_per_step: 455,
            population_fraction: 0.228,
            n_runs: 100,
            counterfactual_tariffs: CounterfactualTariffs::Shared,
            invert_ir: false,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::config(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        unit("penrate", self.penrate)?;
        unit("generic_price_fraction", self.generic_price_fraction)?;
        unit("branded_drop_at_generic", self.branded_drop_at_generic)?;
        unit("annual_tariff_decay", self.annual_tariff_decay)?;
        if !(self.population_fraction > 0.0 && self.population_fraction <= 1.0) {
            return Err(Error::config(format!("population_fraction must lie in (0, 1], got {}", self.population_fraction)));
        }
        if !self.pentime_offset_years.is_finite() || self.pentime_offset_years < 0.0 {
            return Err(Error::config("pentime_offset_years must be finite and ≥ 0 (PENTIME ≥ AMMGM)"));
        }
        if !self.ammgm_offset_years.is_finite() || self.ammgm_offset_years < 0.0 {
            return Err(Error::config("ammgm_offset_years must be finite and ≥ 0 (AMMGM ≥ AMMT)"));
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon must be at least one period"));
        }
        if self.n_runs == 0 {
            return Err(Error::config("n_runs must be at least 1"));
        }
        Ok(())
    }

    /// Semester of the generic's marketing authorization.
    pub fn ammgm(&self, treatment: &Treatment) -> f64 {
        treatment.ammt + 2.0 * self.ammgm_offset_years
    }

    /// Semester at which the conversion probability reaches `penrate`.
    pub fn pentime(&self, treatment: &Treatment) -> f64 {
        self.ammgm(treatment) + 2.0 * self.pentime_offset_years
    }

    /// Calendar semester of 1-based period `u`.
    pub fn semester(&self, period: usize) -> f64 {
        (self.start_semester + period as i64 - 1) as f64
    }

    /// Tariff multiplier `s` semesters after the generic release.
    fn decay(&self, semesters: f64) -> f64 {
        (1.0 - self.annual_tariff_decay).powf(semesters / 2.0)
    }

    /// Branded price in the scenario arm.
    pub fn branded_price(&self, t: f64, treatment: &Treatment) -> f64 {
        let ammgm = self.ammgm(treatment);
        if !treatment.has_generic || t < ammgm {
            treatment.medcost_b
        } else {
            treatment.medcost_b * (1.0 - self.branded_drop_at_generic) * self.decay(t - ammgm)
        }
    }

    /// Generic price; only defined from the generic's authorization onwards.
    pub fn generic_price(&self, t: f64, treatment: &Treatment) -> Result<f64> {
        let ammgm = self.ammgm(treatment);
        if !treatment.has_generic {
            return Err(Error::domain(format!("treatment '{}' has no generic", treatment.name)));
        }
        if t < ammgm {
            return Err(Error::domain(format!(
                "generic price of '{}' requested at semester {t} before authorization at {ammgm}",
                treatment.name
            )));
        }
        Ok(self.generic_price_fraction * treatment.medcost_b * self.decay(t - ammgm))
    }

    /// Price of the branded drug in the no-switch arm.
    pub fn counterfactual_price(&self, t: f64, treatment: &Treatment) -> f64 {
        match self.counterfactual_tariffs {
            CounterfactualTariffs::Shared => self.branded_price(t, treatment),
            CounterfactualTariffs::PreGeneric => treatment.medcost_b,
        }
    }

    pub fn price_at(&self, t: f64, treatment: &Treatment, arm: Arm) -> Result<f64> {
        match arm {
            Arm::Branded => Ok(self.branded_price(t, treatment)),
            Arm::Generic => self.generic_price(t, treatment),
        }
    }

    pub fn prob_conv(&self, t: f64, treatment: &Treatment) -> f64 {
        if !treatment.has_generic {
            return 0.0;
        }
        prob_conv(t, self.ammgm(treatment), self.pentime(treatment), self.penrate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Branded,
    Generic,
}

/// Conversion probability: zero before `ammgm`, a linear ramp up to
/// `penrate` at `pentime`, then flat.
pub fn prob_conv(t: f64, ammgm: f64, pentime: f64, penrate: f64) -> f64 {
    if t < ammgm {
        0.0
    } else if t >= pentime {
        penrate
    } else {
        penrate * (t - ammgm) / (pentime - ammgm)
    }
}

/// Empirical prediction interval at `level` (e.g. 0.9) from order statistics:
/// ranks ⌈αn⌉ and ⌈(1−α)n⌉ with α = (1 − level)/2, 1-based.
pub fn prediction_interval(values: &[f64], level: f64) -> Result<(f64, f64)> {
    if values.len() < 20 {
        return Err(Error::InsufficientData(format!(
            "prediction intervals need at least 20 values, got {}",
            values.len()
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!("interval level must lie in (0, 1), got {level}")));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::domain("prediction interval input contains NaN"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let alpha = (1.0 - level) / 2.0;
    // The small offset keeps exact products such as 0.05·100 from rounding up.
    let rank = |q: f64| ((q * n - 1e-9).ceil() as usize).clamp(1, sorted.len());
    Ok((sorted[rank(alpha) - 1], sorted[rank(1.0 - alpha) - 1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drug(has_generic: bool) -> Treatment {
        Treatment {
            name: "T".into(),
            medcost_b: 100.0,
            ammt: -20.0,
            has_generic,
        }
    }

    #[test]
    fn calendar_offsets() {
        let cfg = ScenarioConfig::default();
        let d = drug(true);
        assert_eq!(cfg.ammgm(&d), 6.0);
        assert_eq!(cfg.pentime(&d), 8.0);
        assert_eq!(cfg.semester(1), 0.0);
        assert_eq!(cfg.semester(10), 9.0);
    }

    #[test]
    fn conversion_branches() {
        assert_eq!(prob_conv(1.0, 2.0, 4.0, 0.4), 0.0);
        assert_eq!(prob_conv(4.0, 2.0, 4.0, 0.4), 0.4);
        assert_eq!(prob_conv(3.0, 2.0, 4.0, 0.4), 0.2);
        assert_eq!(prob_conv(9.0, 2.0, 4.0, 0.4), 0.4);
        // Degenerate ramp is a step at AMMGM.
        assert_eq!(prob_conv(1.999, 2.0, 2.0, 0.7), 0.0);
        assert_eq!(prob_conv(2.0, 2.0, 2.0, 0.7), 0.7);
        let cfg = ScenarioConfig::default();
        assert_eq!(cfg.prob_conv(100.0, &drug(false)), 0.0);
    }

    #[test]
    fn tariff_paths() {
        let cfg = ScenarioConfig::default();
        let d = drug(true);
        let at = cfg.ammgm(&d);
        assert_eq!(cfg.branded_price(at - 1.0, &d), 100.0);
        assert!((cfg.branded_price(at, &d) - 80.0).abs() < 1e-12);
        assert!((cfg.generic_price(at, &d).unwrap() - 40.0).abs() < 1e-12);
        assert!((cfg.branded_price(at + 2.0, &d) - 77.28).abs() < 1e-12);
        assert!((cfg.generic_price(at + 2.0, &d).unwrap() - 40.0 * 0.966).abs() < 1e-12);
        // One semester is the square root of the annual factor.
        assert!((cfg.branded_price(at + 1.0, &d) - 80.0 * 0.966f64.sqrt()).abs() < 1e-12);
        assert!(cfg.generic_price(at - 0.5, &d).is_err());
        assert!(cfg.generic_price(at, &drug(false)).is_err());
        assert_eq!(cfg.branded_price(at + 4.0, &drug(false)), 100.0);
        // On-generic saving at the release date.
        let saving = cfg.price_at(at, &d, Arm::Branded).unwrap() - cfg.price_at(at, &d, Arm::Generic).unwrap();
        assert!((saving - 40.0).abs() < 1e-12);
    }

    #[test]
    fn counterfactual_paths() {
        let mut cfg = ScenarioConfig::default();
        let d = drug(true);
        let at = cfg.ammgm(&d);
        assert_eq!(cfg.counterfactual_price(at + 3.0, &d), cfg.branded_price(at + 3.0, &d));
        cfg.counterfactual_tariffs = CounterfactualTariffs::PreGeneric;
        assert_eq!(cfg.counterfactual_price(at + 3.0, &d), 100.0);
    }

    #[test]
    fn intervals_on_ranks() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(prediction_interval(&v, 0.9).unwrap(), (5.0, 95.0));
        assert_eq!(prediction_interval(&v, 0.8).unwrap(), (10.0, 90.0));
        let mut rev = v.clone();
        rev.reverse();
        assert_eq!(prediction_interval(&rev, 0.9).unwrap(), (5.0, 95.0));
        assert_eq!(prediction_interval(&[3.5; 40], 0.9).unwrap(), (3.5, 3.5));
        let v30: Vec<f64> = (1..=30).map(f64::from).collect();
        // ⌈1.5⌉ = 2 and ⌈28.5⌉ = 29.
        assert_eq!(prediction_interval(&v30, 0.9).unwrap(), (2.0, 29.0));
        assert!(prediction_interval(&v[..19], 0.9).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ScenarioConfig::default().validate().is_ok());
        let bad = ScenarioConfig {
            penrate: 1.5,
            ..ScenarioConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = ScenarioConfig {
            population_fraction: 0.0,
            ..ScenarioConfig::default()
        };
        assert!(bad.validate().is_err());
        let json = r#"{"penrate": 0.25, "n_runs": 30}"#;
        let cfg: ScenarioConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.penrate, 0.25);
        assert_eq!(cfg.incident_cases_per_step, 455);
        assert!(serde_json::from_str::<ScenarioConfig>(r#"{"penratee": 0.2}"#).is_err());
    }
}
