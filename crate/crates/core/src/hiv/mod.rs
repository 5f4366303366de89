//! Generic-switch scenario engine for an HIV treatment cohort.

mod catalog;
mod engine;
mod models;
mod patient;
mod scenario;
mod synthetic;

pub use catalog::{Treatment, TreatmentCatalog};
pub use engine::{
    median, run_simulation, run_simulation_logged, summarize, Distribution, Engine, PeriodDraws, RunResult, ScenarioSummary,
    TrajectoryLog, TrajectoryPoint,
};
pub use models::{
    calibrate, CalibrationOptions, ExecModels, SwitchModel, SwitchRow, ARN_CANDIDATES, CREA_CANDIDATES, SWITCH_CANDIDATES,
};
pub use patient::{
    baseline_schema, history_schema, patients_from_dataset, patients_to_dataset, renal_failure, start_row, PatientState,
    TransitionRow, TRANSITION_COLUMNS,
};
pub use scenario::{prediction_interval, prob_conv, Arm, CounterfactualTariffs, ScenarioConfig};
pub use synthetic::{desk_catalog, synthetic_world, SyntheticWorld};

#[cfg(test)]
mod tests;
