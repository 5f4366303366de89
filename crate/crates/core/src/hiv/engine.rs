//! Period-by-period cohort evolution and cost accounting.

use super::catalog::TreatmentCatalog;
use super::models::{ExecModels, SwitchRow};
use super::patient::{col, renal_failure, start_row, PatientState, TransitionRow, TRANSITION_COLUMNS};
use super::scenario::{prediction_interval, ScenarioConfig};
use crate::error::{Error, Result};
use crate::exec::{sample_index, BoundLogit};
use crate::rng::{self, SimRng};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Aggregates of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run: usize,
    /// Differential cost per patient, in euros.
    pub dc: Vec<f64>,
    /// Follow-up per patient, in semesters alive within the horizon.
    pub fd: Vec<u32>,
    /// `dc / fd` per patient.
    pub ndc: Vec<f64>,
    pub total_dc: f64,
    /// `total_dc / population_fraction`.
    pub total_dc_scaled: f64,
    pub mean_ndc: f64,
    /// Share of alive patients on a generic, per period.
    pub generic_uptake_by_period: Vec<f64>,
    /// Share of patients prescribed a generic at least once.
    pub ever_generic_fraction: f64,
    pub n_patients: usize,
    pub n_deaths: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub period: usize,
    pub treatment: usize,
    pub on_generic: bool,
    pub alive: bool,
    pub cost_b: f64,
    pub cost_g: f64,
}

/// Per-patient records of every period the patient spent in the cohort.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub patients: Vec<Vec<TrajectoryPoint>>,
}

impl TrajectoryLog {
    /// Periods where a patient went from generic back to branded without a
    /// change of treatment.
    pub fn generic_reversions(&self) -> usize {
        self.patients
            .iter()
            .flat_map(|traj| traj.windows(2))
            .filter(|w| w[0].on_generic && !w[1].on_generic && w[0].treatment == w[1].treatment)
            .count()
    }
}

/// Bound execution models ready for stepping.
pub struct Engine<'a> {
    catalog: &'a TreatmentCatalog,
    cfg: &'a ScenarioConfig,
    models: &'a ExecModels,
    arn: BoundLogit<'a>,
    crea: BoundLogit<'a>,
    switching: Vec<Option<BoundLogit<'a>>>,
}

/// Uniform draws consumed by one patient in one period.
#[derive(Debug, Clone, Copy)]
pub struct PeriodDraws {
    pub heart: f64,
    pub diab: f64,
    pub vihs: f64,
    pub death: f64,
    pub arn: f64,
    pub crea: f64,
    pub switch: f64,
    pub destination: f64,
}

impl PeriodDraws {
    pub fn draw<R: Rng + ?Sized>(r: &mut R) -> Self {
        Self {
            heart: r.random(),
            diab: r.random(),
            vihs: r.random(),
            death: r.random(),
            arn: r.random(),
            crea: r.random(),
            switch: r.random(),
            destination: r.random(),
        }
    }
}

impl<'a> Engine<'a> {
    /// Validates the configuration and models before anything runs.
    pub fn new(catalog: &'a TreatmentCatalog, models: &'a ExecModels, cfg: &'a ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        catalog.validate()?;
        models.validate(catalog)?;
        let switching = models
            .switching
            .rows
            .iter()
            .map(|row| match row {
                SwitchRow::Logistic { model, .. } => model.bind(&TRANSITION_COLUMNS).map(Some),
                SwitchRow::Constant { .. } => Ok(None),
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            catalog,
            cfg,
            models,
            arn: models.arn.bind(&TRANSITION_COLUMNS)?,
            crea: models.crea.bind(&TRANSITION_COLUMNS)?,
            switching,
        })
    }

    /// Ages the patient by one semester and draws the new clinical state.
    /// Returns the transition row used by the treatment step.
    pub fn step1_update_covariates(&self, s: &mut PatientState, d: &PeriodDraws) -> TransitionRow {
        let mut row = start_row(s);
        if !s.is_alive() {
            return row;
        }
        s.age += 6.0;
        s.vihd += 6.0;
        s.treatd += 6.0;
        let m = self.models;
        s.heart = m.heart.next_index(s.heart.into(), d.heart) as u8;
        s.diab = m.diab.next_index(s.diab.into(), d.diab) as u8;
        s.vihs = m.vihs.next_index(s.vihs.into(), d.vihs) as u8;
        let mut probs = [0.0; 3];
        self.arn.probs_into(&row, &mut probs);
        s.arn = sample_index(&probs, d.arn) as u8;
        row[col::ARN_NEXT] = s.arn.into();
        self.crea.probs_into(&row, &mut probs);
        s.crea = sample_index(&probs, d.crea) as u8 + 1;
        s.ir = renal_failure(s.crea, self.cfg.invert_ir);
        s.death = m.death.next_index(s.death.into(), d.death) as u8;
        row[col::VIHS_NEXT] = s.vihs.into();
        row[col::HEART_NEXT] = s.heart.into();
        row[col::DIAB_NEXT] = s.diab.into();
        row[col::CREA_NEXT] = f64::from(s.crea) - 1.0;
        row
    }

    /// Applies the switch model, then generic conversion for patients who kept
    /// their treatment. Returns whether the treatment changed.
    pub fn step2_update_treatment(&self, s: &mut PatientState, row: &TransitionRow, t: f64, d: &PeriodDraws, u_conv: f64) -> bool {
        if !s.is_alive() {
            return false;
        }
        let src = s.treatment;
        let dest = match (&self.models.switching.rows[src], &self.switching[src]) {
            (SwitchRow::Constant { probabilities }, _) => sample_index(probabilities, d.switch),
            (SwitchRow::Logistic { destinations, .. }, Some(bound)) => {
                let mut p = [0.0; 2];
                bound.probs_into(row, &mut p);
                if d.switch < p[1] {
                    sample_index(destinations, d.destination)
                } else {
                    src
                }
            }
            (SwitchRow::Logistic { .. }, None) => unreachable!("logistic rows are bound at construction"),
        };
        if dest != src {
            s.treatment = dest;
            s.on_generic = false;
            s.treatd = 0.0;
            return true;
        }
        if !s.on_generic && u_conv < self.cfg.prob_conv(t, &self.catalog.treatments[src]) {
            s.on_generic = true;
        }
        false
    }

    /// Adds incident cases: baseline covariates drawn with replacement from
    /// `pool`, treatment and generic status copied from a random alive member
    /// of the current cohort.
    pub fn step3_update_cohort(&self, cohort: &mut Vec<PatientState>, pool: &[PatientState], r: &mut SimRng) {
        let alive: Vec<usize> = (0..cohort.len()).filter(|&i| cohort[i].is_alive()).collect();
        for _ in 0..self.cfg.incident_cases_per_step {
            let mut p = pool[r.random_range(0..pool.len())].clone();
            let donor = r.random_range(0..alive.len().max(1));
            if let Some(&i) = alive.get(donor) {
                p.treatment = cohort[i].treatment;
                p.on_generic = cohort[i].on_generic;
            } else {
                p.on_generic = false;
            }
            p.treatd = 0.0;
            p.death = 1;
            cohort.push(p);
        }
    }

    /// Costs of one period in the no-switch and scenario arms.
    pub fn step4_period_costs(&self, s: &PatientState, t: f64) -> (f64, f64) {
        if !s.is_alive() {
            return (0.0, 0.0);
        }
        let tr = &self.catalog.treatments[s.treatment];
        let cost_b = self.cfg.counterfactual_price(t, tr);
        let cost_g = if s.on_generic {
            self.cfg
                .generic_price(t, tr)
                .expect("patients only convert once the generic is authorized")
        } else {
            self.cfg.branded_price(t, tr)
        };
        (cost_b, cost_g)
    }

    /// One full run. Covariate, switch and incident draws come from the
    /// `hiv/cohort` stream and conversion draws (one per patient per period)
    /// from `hiv/conversion`, so runs sharing a seed differ only in conversion.
    pub fn run(&self, baseline: &[PatientState], master_seed: u64, run: usize, record: bool) -> Result<(RunResult, Option<TrajectoryLog>)> {
        if baseline.is_empty() {
            return Err(Error::InsufficientData("baseline pool is empty".into()));
        }
        let mut cohort_rng = rng::indexed_stream(master_seed, "hiv/cohort", run);
        let mut conv_rng = rng::indexed_stream(master_seed, "hiv/conversion", run);
        let mut cohort: Vec<PatientState> = baseline.to_vec();
        let mut dc: Vec<f64> = vec![0.0; cohort.len()];
        let mut fd: Vec<u32> = vec![0; cohort.len()];
        let mut ever: Vec<bool> = vec![false; cohort.len()];
        let mut log = record.then(|| TrajectoryLog {
            patients: vec![Vec::new(); cohort.len()],
        });
        let mut uptake = Vec::with_capacity(self.cfg.horizon);
        for period in 1..=self.cfg.horizon {
            let t = self.cfg.semester(period);
            if period >= 2 {
                for s in cohort.iter_mut() {
                    let u_conv: f64 = conv_rng.random();
                    if !s.is_alive() {
                        continue;
                    }
                    let draws = PeriodDraws::draw(&mut cohort_rng);
                    let row = self.step1_update_covariates(s, &draws);
                    self.step2_update_treatment(s, &row, t, &draws, u_conv);
                }
                self.step3_update_cohort(&mut cohort, baseline, &mut cohort_rng);
                dc.resize(cohort.len(), 0.0);
                fd.resize(cohort.len(), 0);
                ever.resize(cohort.len(), false);
                if let Some(l) = log.as_mut() {
                    l.patients.resize(cohort.len(), Vec::new());
                }
            }
            let (mut alive, mut generic) = (0usize, 0usize);
            for (i, s) in cohort.iter().enumerate() {
                let (b, g) = self.step4_period_costs(s, t);
                dc[i] += b - g;
                if s.is_alive() {
                    fd[i] += 1;
                    alive += 1;
                    if s.on_generic {
                        generic += 1;
                        ever[i] = true;
                    }
                }
                if let Some(l) = log.as_mut() {
                    l.patients[i].push(TrajectoryPoint {
                        period,
                        treatment: s.treatment,
                        on_generic: s.on_generic,
                        alive: s.is_alive(),
                        cost_b: b,
                        cost_g: g,
                    });
                }
            }
            uptake.push(if alive == 0 { 0.0 } else { generic as f64 / alive as f64 });
        }
        let ndc: Vec<f64> = dc.iter().zip(&fd).map(|(d, &f)| if f == 0 { 0.0 } else { d / f64::from(f) }).collect();
        let total_dc: f64 = dc.iter().sum();
        let n = cohort.len();
        let result = RunResult {
            run,
            total_dc_scaled: total_dc / self.cfg.population_fraction,
            total_dc,
            mean_ndc: ndc.iter().sum::<f64>() / n as f64,
            generic_uptake_by_period: uptake,
            ever_generic_fraction: ever.iter().filter(|&&e| e).count() as f64 / n as f64,
            n_patients: n,
            n_deaths: cohort.iter().filter(|s| !s.is_alive()).count(),
            dc,
            fd,
            ndc,
        };
        Ok((result, log))
    }
}

/// Runs `cfg.n_runs` independent replicates in parallel; output order and
/// values depend only on `master_seed`.
pub fn run_simulation(
    baseline: &[PatientState],
    catalog: &TreatmentCatalog,
    models: &ExecModels,
    cfg: &ScenarioConfig,
    master_seed: u64,
) -> Result<Vec<RunResult>> {
    let engine = Engine::new(catalog, models, cfg)?;
    (0..cfg.n_runs)
        .into_par_iter()
        .map(|k| engine.run(baseline, master_seed, k, false).map(|(r, _)| r))
        .collect()
}

/// Same as [`run_simulation`] but keeps every trajectory.
pub fn run_simulation_logged(
    baseline: &[PatientState],
    catalog: &TreatmentCatalog,
    models: &ExecModels,
    cfg: &ScenarioConfig,
    master_seed: u64,
) -> Result<Vec<(RunResult, TrajectoryLog)>> {
    let engine = Engine::new(catalog, models, cfg)?;
    (0..cfg.n_runs)
        .into_par_iter()
        .map(|k| engine.run(baseline, master_seed, k, true).map(|(r, l)| (r, l.unwrap_or_default())))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub median: f64,
    pub pi80: (f64, f64),
    pub pi90: (f64, f64),
}

impl Distribution {
    pub fn of(values: &[f64]) -> Result<Self> {
        Ok(Self {
            median: median(values),
            pi80: prediction_interval(values, 0.8)?,
            pi90: prediction_interval(values, 0.9)?,
        })
    }
}

/// Cross-run summary of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub penrate: f64,
    pub n_runs: usize,
    pub total_dc_scaled: Distribution,
    pub mean_ndc: Distribution,
    pub ever_generic_fraction: Distribution,
    /// Median uptake per period.
    pub uptake_median: Vec<f64>,
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn summarize(penrate: f64, results: &[RunResult]) -> Result<ScenarioSummary> {
    let pick = |f: fn(&RunResult) -> f64| results.iter().map(f).collect::<Vec<_>>();
    let horizon = results.first().map_or(0, |r| r.generic_uptake_by_period.len());
    let uptake_median = (0..horizon)
        .map(|u| median(&results.iter().map(|r| r.generic_uptake_by_period[u]).collect::<Vec<_>>()))
        .collect();
    Ok(ScenarioSummary {
        penrate,
        n_runs: results.len(),
        total_dc_scaled: Distribution::of(&pick(|r| r.total_dc_scaled))?,
        mean_ndc: Distribution::of(&pick(|r| r.mean_ndc))?,
        ever_generic_fraction: Distribution::of(&pick(|r| r.ever_generic_fraction))?,
        uptake_median,
    })
}
