//! Validation of generated cohorts and simulated outcomes against source data.

mod association;
mod experiment;
mod fidelity;

pub use association::{association_pvalue, association_test, AssociationTest, TestKind, TTestVariant};
pub use experiment::{pvalue_experiment, write_pvalue_csv, CovariatePValues, ExperimentOptions, PValueExperiment};
pub use fidelity::{fidelity, ks_two_sample, ks_uniform, total_variation, ColumnFidelity, FidelityReport, MarginalMetric, PairFidelity};
