//! Execution models: state transitions, outcome classifiers and noise.

mod ate;
mod classifier;
mod confusion;
mod logit;
mod markov;

pub use ate::{ate_paired, ate_two_sample, PairedOutcomes};
pub use classifier::{
    feature_rows, fit_classifier, BaggedTrees, Classifier, ClassifierKind, ClassifierModel, DecisionTree, ForestOptions,
    TreeNode,
};
pub use confusion::{confusion_matrix, ConfusionMatrix, OutcomeGenerator, SimulatedOutcomes};
pub use logit::{
    fit_multinomial_logit, BoundLogit, CovariateMarkovModel, LogitDesign, LogitFit, LogitOptions, Term, COEFFICIENT_CAP,
};
pub use markov::{fit_constant_markov, sample_index, ConstantMarkovModel};
