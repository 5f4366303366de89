use super::*;
use crate::exec::{ConstantMarkovModel, CovariateMarkovModel, Term};
use std::collections::BTreeMap;

fn binary_identity() -> ConstantMarkovModel {
    ConstantMarkovModel::identity(vec!["0".into(), "1".into()])
}

/// A three-state logit that keeps the previous state with overwhelming probability.
fn sticky(covariate: &str, labels: [&str; 3]) -> CovariateMarkovModel {
    let terms = vec![
        Term::Intercept,
        Term::Level(covariate.into(), labels[1].into()),
        Term::Level(covariate.into(), labels[2].into()),
    ];
    CovariateMarkovModel {
        states: labels.iter().map(|s| s.to_string()).collect(),
        reference_state: labels[0].into(),
        categorical_covariates: BTreeMap::from([(covariate.to_string(), labels.iter().map(|s| s.to_string()).collect())]),
        terms,
        coefficients: vec![vec![0.0; 3], vec![-60.0, 120.0, 0.0], vec![-60.0, 0.0, 120.0]],
        log_likelihood: 0.0,
        aic: 0.0,
        n_obs: 0,
        diagnostics: vec![],
    }
}

fn identity_models(catalog: &TreatmentCatalog) -> ExecModels {
    ExecModels {
        heart: binary_identity(),
        diab: binary_identity(),
        vihs: binary_identity(),
        death: binary_identity(),
        arn: sticky("ARN", ["0", "1", "2"]),
        crea: sticky("CREA", ["1", "2", "3"]),
        switching: SwitchModel::never(catalog.names()),
        diagnostics: vec![],
    }
}

fn patient(treatment: usize) -> PatientState {
    PatientState {
        sex: 0,
        age: 480.0,
        bc: 1,
        conta: 0,
        vihs: 0,
        vihd: 100.0,
        treatd: 30.0,
        arn: 1,
        heart: 0,
        diab: 1,
        ir: 1,
        crea: 2,
        death: 1,
        treatment,
        on_generic: false,
    }
}

fn draws(u: f64) -> PeriodDraws {
    PeriodDraws {
        heart: u,
        diab: u,
        vihs: u,
        death: u,
        arn: u,
        crea: u,
        switch: u,
        destination: u,
    }
}

/// Catalog with one drug whose generic is authorized at semester 2 (PENTIME 4).
fn small_catalog() -> TreatmentCatalog {
    TreatmentCatalog::new(vec![
        Treatment {
            name: "G".into(),
            medcost_b: 100.0,
            ammt: -24.0,
            has_generic: true,
        },
        Treatment {
            name: "N".into(),
            medcost_b: 150.0,
            ammt: -24.0,
            has_generic: false,
        },
    ])
    .unwrap()
}

#[test]
fn identity_models_only_age_the_patient() {
    let cat = small_catalog();
    let models = identity_models(&cat);
    let cfg = ScenarioConfig::default();
    let engine = Engine::new(&cat, &models, &cfg).unwrap();
    for u in [0.01, 0.5, 0.99] {
        let mut s = patient(0);
        let row = engine.step1_update_covariates(&mut s, &draws(u));
        let mut expected = patient(0);
        expected.age += 6.0;
        expected.vihd += 6.0;
        expected.treatd += 6.0;
        assert_eq!(s, expected);
        assert_eq!(row[13], 1.0);
        assert!(!engine.step2_update_treatment(&mut s, &row, 0.0, &draws(u), u));
        assert_eq!(s, expected);
    }
}

#[test]
fn crea_three_clears_renal_failure() {
    let cat = small_catalog();
    let mut models = identity_models(&cat);
    // Every patient moves to CREA = 3.
    models.crea.coefficients = vec![vec![0.0; 3], vec![0.0; 3], vec![80.0, 0.0, 0.0]];
    let cfg = ScenarioConfig::default();
    let engine = Engine::new(&cat, &models, &cfg).unwrap();
    let mut s = patient(0);
    engine.step1_update_covariates(&mut s, &draws(0.5));
    assert_eq!((s.crea, s.ir), (3, 0));
    let inverted = ScenarioConfig {
        invert_ir: true,
        ..ScenarioConfig::default()
    };
    let engine = Engine::new(&cat, &models, &inverted).unwrap();
    let mut s = patient(0);
    engine.step1_update_covariates(&mut s, &draws(0.5));
    assert_eq!((s.crea, s.ir), (3, 1));
}

#[test]
fn dead_patients_are_frozen_and_free() {
    let cat = small_catalog();
    let mut models = identity_models(&cat);
    models.death = ConstantMarkovModel::new(vec!["0".into(), "1".into()], vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
    let cfg = ScenarioConfig::default();
    let engine = Engine::new(&cat, &models, &cfg).unwrap();
    let mut s = patient(0);
    engine.step1_update_covariates(&mut s, &draws(0.3));
    assert!(!s.is_alive());
    let frozen = s.clone();
    let row = engine.step1_update_covariates(&mut s, &draws(0.3));
    engine.step2_update_treatment(&mut s, &row, 9.0, &draws(0.0), 0.0);
    assert_eq!(s, frozen);
    assert_eq!(engine.step4_period_costs(&s, 9.0), (0.0, 0.0));
}

#[test]
fn conversion_follows_prob_conv_and_is_sticky() {
    let cat = small_catalog();
    let models = identity_models(&cat);
    let cfg = ScenarioConfig {
        penrate: 0.5,
        ..ScenarioConfig::default()
    };
    let engine = Engine::new(&cat, &models, &cfg).unwrap();
    // Semester 3 is the ramp midpoint: prob_conv = 0.25.
    assert_eq!(cfg.prob_conv(3.0, &cat.treatments[0]), 0.25);
    let mut r = crate::rng::from_seed(17);
    let n = 10_000;
    let mut converted = 0;
    for _ in 0..n {
        let mut s = patient(0);
        let row = start_row(&s);
        engine.step2_update_treatment(&mut s, &row, 3.0, &draws(0.5), rand::Rng::random(&mut r));
        converted += usize::from(s.on_generic);
    }
    let share = converted as f64 / n as f64;
    assert!((share - 0.25).abs() < 0.02, "{share}");

    let mut s = patient(0);
    s.on_generic = true;
    let row = start_row(&s);
    engine.step2_update_treatment(&mut s, &row, 8.0, &draws(0.5), 0.999);
    assert!(s.on_generic);
    // Before the generic exists nothing converts, whatever the draw.
    let mut s = patient(0);
    engine.step2_update_treatment(&mut s, &row, 1.0, &draws(0.5), 0.0);
    assert!(!s.on_generic);
    // Drugs without a generic never convert.
    let mut s = patient(1);
    engine.step2_update_treatment(&mut s, &row, 9.0, &draws(0.5), 0.0);
    assert!(!s.on_generic);
}

#[test]
fn switching_resets_generic_and_duration() {
    let cat = small_catalog();
    let mut models = identity_models(&cat);
    models.switching.rows[0] = SwitchRow::Constant {
        probabilities: vec![0.0, 1.0],
    };
    let cfg = ScenarioConfig::default();
    let engine = Engine::new(&cat, &models, &cfg).unwrap();
    let mut s = patient(0);
    s.on_generic = true;
    let row = start_row(&s);
    assert!(engine.step2_update_treatment(&mut s, &row, 8.0, &draws(0.5), 0.0));
    assert_eq!((s.treatment, s.on_generic, s.treatd), (1, false, 0.0));
}

#[test]
fn incident_cases_grow_the_cohort() {
    let cat = small_catalog();
    let models = identity_models(&cat);
    let mut cfg = ScenarioConfig::default();
    let pool = vec![patient(1); 3];
    let mut r = crate::rng::from_seed(1);
    let mut cohort = vec![patient(0); 10];
    cohort[0].on_generic = true;
    {
        let engine = Engine::new(&cat, &models, &cfg).unwrap();
        engine.step3_update_cohort(&mut cohort, &pool, &mut r);
    }
    assert_eq!(cohort.len(), 465);
    // Treatments come from the current cohort, not the pool's baseline.
    assert!(cohort[10..].iter().all(|p| p.treatment == 0 && p.treatd == 0.0));
    assert!(cohort[10..].iter().any(|p| p.on_generic));
    cfg.incident_cases_per_step = 0;
    let engine = Engine::new(&cat, &models, &cfg).unwrap();
    engine.step3_update_cohort(&mut cohort, &pool, &mut r);
    assert_eq!(cohort.len(), 465);
}

#[test]
fn period_costs() {
    let cat = small_catalog();
    let models = identity_models(&cat);
    let cfg = ScenarioConfig::default();
    let engine = Engine::new(&cat, &models, &cfg).unwrap();
    let s = patient(0);
    assert_eq!(engine.step4_period_costs(&s, 5.0).0, engine.step4_period_costs(&s, 5.0).1);
    let mut g = patient(0);
    g.on_generic = true;
    let (b, c) = engine.step4_period_costs(&g, 2.0);
    assert!((b - 80.0).abs() < 1e-12 && (c - 40.0).abs() < 1e-12);
}

fn world_models(world: &SyntheticWorld) -> ExecModels {
    calibrate(&world.histories, &world.catalog, &CalibrationOptions::default()).unwrap()
}

#[test]
fn full_runs_satisfy_accounting_and_rule_four() {
    let world = synthetic_world(300, 1500, 6, 5).unwrap();
    let models = world_models(&world);
    let baseline = patients_from_dataset(&world.baseline, &world.catalog, false).unwrap();
    let cfg = ScenarioConfig {
        n_runs: 4,
        penrate: 0.55,
        incident_cases_per_step: 40,
        ..ScenarioConfig::default()
    };
    let logged = run_simulation_logged(&baseline, &world.catalog, &models, &cfg, 99).unwrap();
    assert_eq!(logged.len(), 4);
    for (res, log) in &logged {
        assert_eq!(res.n_patients, 300 + 9 * 40);
        assert_eq!(log.generic_reversions(), 0);
        let mut total = 0.0;
        for (i, traj) in log.patients.iter().enumerate() {
            let mut dc = 0.0;
            for p in traj {
                dc += p.cost_b - p.cost_g;
            }
            assert_eq!(dc, res.dc[i]);
            total += dc;
        }
        assert_eq!(total, res.total_dc);
        assert_eq!(res.total_dc_scaled, res.total_dc / 0.228);
        assert!(res.total_dc > 0.0);
        assert!(res.fd.iter().all(|&f| (1..=10).contains(&f)));
    }
    let again = run_simulation(&baseline, &world.catalog, &models, &cfg, 99).unwrap();
    let first: Vec<RunResult> = logged.into_iter().map(|(r, _)| r).collect();
    assert_eq!(again, first);
}

#[test]
fn zero_penetration_means_zero_cost_difference() {
    let world = synthetic_world(200, 1500, 6, 6).unwrap();
    let models = world_models(&world);
    let baseline = patients_from_dataset(&world.baseline, &world.catalog, false).unwrap();
    let cfg = ScenarioConfig {
        n_runs: 3,
        penrate: 0.0,
        incident_cases_per_step: 20,
        ..ScenarioConfig::default()
    };
    for r in run_simulation(&baseline, &world.catalog, &models, &cfg, 3).unwrap() {
        assert!(r.dc.iter().all(|&d| d == 0.0));
        assert_eq!(r.total_dc, 0.0);
        assert!(r.generic_uptake_by_period.iter().all(|&u| u == 0.0));
    }
}

#[test]
fn conversions_are_coupled_across_rates() {
    let world = synthetic_world(200, 1500, 6, 8).unwrap();
    let models = world_models(&world);
    let baseline = patients_from_dataset(&world.baseline, &world.catalog, false).unwrap();
    let mut prev: Option<Vec<RunResult>> = None;
    for rate in [0.1, 0.25, 0.4, 0.55, 0.7] {
        let cfg = ScenarioConfig {
            n_runs: 3,
            penrate: rate,
            incident_cases_per_step: 20,
            ..ScenarioConfig::default()
        };
        let runs = run_simulation(&baseline, &world.catalog, &models, &cfg, 21).unwrap();
        if let Some(p) = &prev {
            for (a, b) in p.iter().zip(&runs) {
                assert!(b.total_dc >= a.total_dc);
                for (x, y) in a.generic_uptake_by_period.iter().zip(&b.generic_uptake_by_period) {
                    assert!(y >= x);
                }
            }
        }
        prev = Some(runs);
    }
}

#[test]
fn calibration_recovers_structure() {
    let world = synthetic_world(50, 3000, 6, 2).unwrap();
    let m = world_models(&world);
    assert_eq!(m.death.row(0), &[1.0, 0.0]);
    assert!(m.heart.row(0)[1] > 0.005 && m.heart.row(0)[1] < 0.02);
    assert_eq!(m.heart.row(1), &[0.0, 1.0]);
    // The previous viral load must survive stepwise selection.
    assert!(m.arn.covariates().contains(&"ARN"));
    assert!(m.crea.covariates().contains(&"CREA"));
    assert!(m.switching.rows.iter().any(|r| matches!(r, SwitchRow::Logistic { .. })));
    let strict = CalibrationOptions {
        min_switches_for_logit: usize::MAX,
        ..CalibrationOptions::default()
    };
    let constant = calibrate(&world.histories, &world.catalog, &strict).unwrap();
    assert!(constant.switching.rows.iter().all(|r| matches!(r, SwitchRow::Constant { .. })));
    let json = serde_json::to_string(&m).unwrap();
    let back: ExecModels = serde_json::from_str(&json).unwrap();
    assert_eq!(back, m);
}

#[test]
fn engine_rejects_incomplete_models() {
    let cat = small_catalog();
    let mut models = identity_models(&cat);
    models.switching.rows.pop();
    assert!(Engine::new(&cat, &models, &ScenarioConfig::default()).is_err());
    let mut models = identity_models(&cat);
    models.arn.terms.push(Term::Value("WEIGHT".into()));
    models.arn.coefficients.iter_mut().for_each(|c| c.push(0.0));
    assert!(Engine::new(&cat, &models, &ScenarioConfig::default()).is_err());
}
