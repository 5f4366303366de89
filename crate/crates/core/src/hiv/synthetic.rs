//! A desk-scale synthetic HIV world: treatment catalog, baseline cohort and
//! calibration histories drawn from a fixed ground-truth process.

use super::catalog::{Treatment, TreatmentCatalog};
use super::patient::{history_schema, patients_to_dataset, renal_failure, PatientState};
use crate::dataset::{Column, MixedDataset};
use crate::error::Result;
use crate::exec::sample_index;
use crate::rng::{self, SimRng};
use rand::Rng;
use rand_distr::{Distribution, Gamma};

#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    pub catalog: TreatmentCatalog,
    pub baseline: MixedDataset,
    pub histories: MixedDataset,
}

/// Ten treatments: seven lose exclusivity between semesters −2 and 6 under the
/// default 13-year offset, three have no generic.
pub fn desk_catalog() -> TreatmentCatalog {
    let entries: [(&str, f64, f64, bool); 10] = [
        ("TDF-FTC-EFV", 3150.0, -28.0, true),
        ("ABC-3TC-DTG", 5480.0, -26.0, true),
        ("TDF-FTC-RPV", 4320.0, -25.0, true),
        ("AZT-3TC-LPV", 4890.0, -24.0, true),
        ("TDF-FTC-DRV", 5930.0, -23.0, true),
        ("ABC-3TC-RAL", 5210.0, -22.0, true),
        ("TDF-FTC-ATV", 4760.0, -20.0, true),
        ("TAF-FTC-BIC", 6480.0, -6.0, false),
        ("TAF-FTC-EVG", 6270.0, -8.0, false),
        ("DOR-3TC-TDF", 4980.0, -4.0, false),
    ];
    TreatmentCatalog::new(
        entries.iter()
            .map(|&(name, cost, ammt, has_generic)| Treatment {
                name: name.into(),
                medcost_b: cost,
                ammt,
                has_generic,
            })
            .collect(),
    )
    .expect("static catalog is valid")
}

/// Prescription popularity used for baseline and switch destinations.
const POPULARITY: [f64; 10] = [0.18, 0.14, 0.12, 0.08, 0.10, 0.07, 0.06, 0.11, 0.09, 0.05];

fn bern(r: &mut SimRng, p: f64) -> u8 {
    u8::from(r.random::<f64>() < p)
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn softmax3(eta: [f64; 3]) -> [f64; 3] {
    let m = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = eta.map(|v| (v - m).exp());
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}

fn baseline_patient(r: &mut SimRng) -> PatientState {
    let age_years: f64 = (22.0 + Gamma::<f64>::new(5.0, 4.5).unwrap().sample(r)).min(85.0);
    let sex = bern(r, 0.3);
    let vihd_years: f64 = r.random_range(0.0..(age_years - 18.0).min(30.0));
    let vihd = (vihd_years * 12.0).round();
    let treatd = (r.random::<f64>() * vihd.min(120.0)).round();
    let arn_eta = [0.0, -1.0 - 0.01 * treatd, -1.5 - 0.02 * treatd];
    let arn = sample_index(&softmax3(arn_eta), r.random()) as u8;
    let crea_p = {
        let a = (age_years - 45.0) / 10.0;
        softmax3([0.0, -0.6 + 0.6 * a, -3.5 + 0.8 * a])
    };
    let crea = sample_index(&crea_p, r.random()) as u8 + 1;
    PatientState {
        sex,
        age: (age_years * 12.0).round(),
        bc: bern(r, 0.6),
        conta: bern(r, if sex == 0 { 0.45 } else { 0.02 }),
        vihs: bern(r, (0.1 + 0.01 * vihd_years).min(0.5)),
        vihd,
        treatd,
        arn,
        heart: bern(r, logistic(-3.0 + 0.07 * (age_years - 45.0))),
        diab: bern(r, logistic(-2.6 + 0.05 * (age_years - 45.0))),
        ir: renal_failure(crea, false),
        crea,
        death: 1,
        treatment: sample_index(&POPULARITY, r.random()),
        on_generic: false,
    }
}

/// Ground-truth one-period transition used to generate histories.
fn true_step(s: &mut PatientState, r: &mut SimRng) -> bool {
    let age_years = s.age / 12.0;
    let dies = r.random::<f64>() < 0.004 + 0.006 * f64::from(s.vihs) + 0.0002 * (age_years - 40.0).max(0.0);
    let prev = s.clone();
    s.age += 6.0;
    s.vihd += 6.0;
    s.treatd += 6.0;
    if prev.heart == 0 {
        s.heart = bern(r, 0.012);
    }
    if prev.diab == 0 {
        s.diab = bern(r, 0.009);
    }
    if prev.vihs == 0 {
        s.vihs = bern(r, 0.01);
    }
    let lvl = |v: u8, k: u8| f64::from(u8::from(v == k));
    let arn_eta = [
        0.0,
        -2.2 + 3.0 * lvl(prev.arn, 1) + 2.5 * lvl(prev.arn, 2) - 0.004 * prev.treatd + 0.4 * f64::from(prev.vihs),
        -3.5 + 1.5 * lvl(prev.arn, 1) + 4.5 * lvl(prev.arn, 2) - 0.004 * prev.treatd + 0.6 * f64::from(prev.vihs),
    ];
    s.arn = sample_index(&softmax3(arn_eta), r.random()) as u8;
    let a = (prev.age / 12.0 - 45.0) / 10.0;
    let crea_eta = [
        0.0,
        -3.0 + 4.5 * lvl(prev.crea, 2) + 3.5 * lvl(prev.crea, 3) + 0.3 * a,
        -6.5 + 2.5 * lvl(prev.crea, 2) + 8.0 * lvl(prev.crea, 3) + 0.6 * lvl(s.arn, 2),
    ];
    s.crea = sample_index(&softmax3(crea_eta), r.random()) as u8 + 1;
    s.ir = renal_failure(s.crea, false);
    let p_switch = logistic(-1.3 - 0.01 * prev.treatd + 0.9 * lvl(s.arn, 2) + 0.4 * f64::from(s.heart));
    let u_switch: f64 = r.random();
    let u_dest: f64 = r.random();
    if u_switch < p_switch {
        let mut w = POPULARITY;
        w[prev.treatment] = 0.0;
        let total: f64 = w.iter().sum();
        let dest = sample_index(&w.map(|x| x / total), u_dest);
        s.treatment = dest;
        s.treatd = 0.0;
    }
    if dies {
        s.death = 0;
    }
    !dies
}

/// Baseline cohort of `n_baseline` patients and `n_history` patients followed
/// for `periods` semesters under the ground-truth process.
pub fn synthetic_world(n_baseline: usize, n_history: usize, periods: usize, seed: u64) -> Result<SyntheticWorld> {
    let catalog = desk_catalog();
    let mut r = rng::stream(seed, "hiv/world/baseline");
    let baseline: Vec<PatientState> = (0..n_baseline).map(|_| baseline_patient(&mut r)).collect();
    let mut r = rng::stream(seed, "hiv/world/history");
    let schema = history_schema(&catalog);
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); schema.len()];
    for _ in 0..n_history {
        let mut s = baseline_patient(&mut r);
        for _ in 0..periods {
            let prev = s.clone();
            let alive = true_step(&mut s, &mut r);
            let values = [
                prev.sex.into(),
                prev.age,
                prev.bc.into(),
                prev.conta.into(),
                prev.vihs.into(),
                prev.vihd,
                prev.treatd,
                prev.arn.into(),
                prev.heart.into(),
                prev.diab.into(),
                f64::from(prev.crea) - 1.0,
                prev.ir.into(),
                prev.treatment as f64,
                s.vihs.into(),
                s.arn.into(),
                s.heart.into(),
                s.diab.into(),
                f64::from(s.crea) - 1.0,
                s.treatment as f64,
                f64::from(u8::from(alive)),
            ];
            for (c, v) in cols.iter_mut().zip(values) {
                c.push(v);
            }
            if !alive {
                break;
            }
        }
    }
    let columns = schema
        .iter()
        .zip(cols)
        .map(|(s, c)| {
            if s.is_categorical() {
                Column::Categorical(c.into_iter().map(|v| v as u32).collect())
            } else {
                Column::Continuous(c)
            }
        })
        .collect();
    Ok(SyntheticWorld {
        baseline: patients_to_dataset(&baseline, &catalog)?,
        histories: MixedDataset::new(schema, columns)?,
        catalog,
    })
}
