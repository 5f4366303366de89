//! Confusion matrices and noisy outcome generation.

use super::classifier::Classifier;
use super::markov::sample_index;
use crate::dataset::MixedDataset;
use crate::error::{Error, Result};
use crate::rng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// `counts[true][predicted]` over an evaluation set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = labels.len();
        if counts.len() != k || counts.iter().any(|r| r.len() != k) {
            return Err(Error::shape(format!("confusion counts must be {k}x{k}")));
        }
        Ok(Self { labels, counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Share of evaluation rows where prediction and truth disagree.
    pub fn error_rate(&self) -> f64 {
        let off: u64 = (0..self.labels.len())
            .flat_map(|i| (0..self.labels.len()).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| self.counts[i][j])
            .sum();
        off as f64 / self.total() as f64
    }

    /// Distribution of the true label given predicted label `pred`, or `None`
    /// when that column has no mass.
    pub fn true_given_predicted(&self, pred: usize) -> Option<Vec<f64>> {
        let col: Vec<f64> = self.counts.iter().map(|r| r[pred] as f64).collect();
        let s: f64 = col.iter().sum();
        (s > 0.0).then(|| col.into_iter().map(|c| c / s).collect())
    }
}

/// Tallies the classifier's predictions against `outcome` in `data`.
pub fn confusion_matrix(classifier: &Classifier, data: &MixedDataset, outcome: &str) -> Result<ConfusionMatrix> {
    let j = data.index_of(outcome)?;
    let schema = &data.schema()[j];
    if !schema.is_categorical() {
        return Err(Error::Schema(format!("outcome '{outcome}' must be categorical")));
    }
    let labels = schema.categories.clone();
    // Classifier label indices map onto the evaluation data's categories by name.
    let remap: Vec<usize> = classifier
        .labels
        .iter()
        .map(|l| {
            labels
                .iter()
                .position(|x| x == l)
                .ok_or_else(|| Error::Schema(format!("classifier label '{l}' is not a category of '{outcome}'")))
        })
        .collect::<Result<_>>()?;
    let pred = classifier.predict_dataset(data)?;
    let k = labels.len();
    let mut counts = vec![vec![0u64; k]; k];
    for (r, p) in pred.into_iter().enumerate() {
        counts[data.value(r, j) as usize][remap[p]] += 1;
    }
    ConfusionMatrix::new(labels, counts)
}

/// Classifier plus optional confusion-matrix noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeGenerator {
    pub classifier: Classifier,
    pub noise: ConfusionMatrix,
    pub noise_enabled: bool,
}

/// Simulated labels for a batch plus the number of zero-mass fallbacks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulatedOutcomes {
    pub labels: Vec<u32>,
    pub fallbacks: usize,
}

impl OutcomeGenerator {
    pub fn new(classifier: Classifier, noise: ConfusionMatrix, noise_enabled: bool) -> Result<Self> {
        if classifier.labels != noise.labels {
            return Err(Error::Schema("confusion matrix labels differ from classifier labels".into()));
        }
        Ok(Self {
            classifier,
            noise,
            noise_enabled,
        })
    }

    /// Reported label for prediction `pred` and uniform draw `u`. The flag is
    /// set when the predicted column is empty and the prediction is kept.
    pub fn perturb(&self, pred: usize, u: f64) -> (usize, bool) {
        if !self.noise_enabled {
            return (pred, false);
        }
        match self.noise.true_given_predicted(pred) {
            Some(p) => (sample_index(&p, u), false),
            None => (pred, true),
        }
    }

    pub fn simulate_outcome(&self, patient: &HashMap<String, f64>, seed: u64) -> Result<String> {
        let pred = self.classifier.predict(patient)?;
        let u: f64 = rng::stream(seed, "outcome/noise").random();
        let (label, fell_back) = self.perturb(pred, u);
        if fell_back {
            log::warn!("confusion column for '{}' is empty; keeping the prediction", self.noise.labels[pred]);
        }
        Ok(self.classifier.labels[label].clone())
    }

    /// Outcomes for every row of `data`, one uniform per row from a single stream.
    pub fn simulate_dataset(&self, data: &MixedDataset, seed: u64) -> Result<SimulatedOutcomes> {
        let pred = self.classifier.predict_dataset(data)?;
        let mut r = rng::stream(seed, "outcome/noise");
        let mut fallbacks = 0;
        let labels = pred
            .into_iter()
            .map(|p| {
                let (l, f) = self.perturb(p, r.random());
                fallbacks += usize::from(f);
                l as u32
            })
            .collect();
        if fallbacks > 0 {
            log::warn!("{fallbacks} outcome draws fell back to the prediction (empty confusion column)");
        }
        Ok(SimulatedOutcomes { labels, fallbacks })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Column, ColumnSchema};
    use crate::exec::classifier::{fit_classifier, ClassifierKind, ClassifierModel};

    fn labels() -> Vec<String> {
        vec!["no".into(), "yes".into()]
    }

    fn constant(label: usize) -> Classifier {
        Classifier {
            outcome: "y".into(),
            labels: labels(),
            features: vec!["x".into()],
            model: ClassifierModel::Constant { label },
        }
    }

    fn data(x: Vec<f64>, y: Vec<u32>) -> MixedDataset {
        MixedDataset::new(
            vec![ColumnSchema::continuous("x"), ColumnSchema::categorical("y", ["no", "yes"])],
            vec![Column::Continuous(x), Column::Categorical(y)],
        )
        .unwrap()
    }

    #[test]
    fn perfect_classifier_is_diagonal() {
        let x: Vec<f64> = (0..100).map(|i| i as f64 - 49.5).collect();
        let y: Vec<u32> = x.iter().map(|&v| u32::from(v > 0.0)).collect();
        let d = data(x, y);
        let c = fit_classifier(ClassifierKind::Forest, &d, "y", &["x"], 1).unwrap();
        let m = confusion_matrix(&c, &d, "y").unwrap();
        assert_eq!(m.counts, vec![vec![50, 0], vec![0, 50]]);
    }

    #[test]
    fn constant_classifier_fills_one_column() {
        let d = data(vec![0.0; 10], (0..10).map(|i| i % 2).collect());
        let m = confusion_matrix(&constant(1), &d, "y").unwrap();
        assert_eq!(m.counts, vec![vec![0, 5], vec![0, 5]]);
    }

    #[test]
    fn known_error_rate() {
        // Truth follows x > 0 except every tenth row, which is flipped.
        let x: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let y: Vec<u32> = (0..1000).map(|i| u32::from((i % 2 == 0) != (i % 10 == 0))).collect();
        let d = data(x.clone(), y.clone());
        let c = Classifier {
            model: ClassifierModel::Forest(crate::exec::classifier::BaggedTrees {
                trees: vec![crate::exec::classifier::DecisionTree {
                    nodes: vec![
                        crate::exec::classifier::TreeNode::Split { feature: 0, threshold: 0.0, left: 1, right: 2 },
                        crate::exec::classifier::TreeNode::Leaf { label: 0 },
                        crate::exec::classifier::TreeNode::Leaf { label: 1 },
                    ],
                }],
                n_labels: 2,
            }),
            ..constant(0)
        };
        let m = confusion_matrix(&c, &d, "y").unwrap();
        let flipped = x.iter().zip(&y).filter(|(&xv, &yv)| (xv > 0.0) != (yv == 1)).count();
        assert_eq!(flipped, 100);
        assert!((m.error_rate() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn foreign_label_rejected() {
        let mut c = constant(0);
        c.labels = vec!["maybe".into(), "yes".into()];
        let d = data(vec![0.0; 4], vec![0, 1, 0, 1]);
        assert!(confusion_matrix(&c, &d, "y").is_err());
    }

    #[test]
    fn identity_noise_keeps_prediction() {
        let m = ConfusionMatrix::new(labels(), vec![vec![7, 0], vec![0, 3]]).unwrap();
        let g = OutcomeGenerator::new(constant(1), m, true).unwrap();
        let p = HashMap::from([("x".to_string(), 0.0)]);
        for s in 0..50 {
            assert_eq!(g.simulate_outcome(&p, s).unwrap(), "yes");
        }
    }

    #[test]
    fn noise_matches_column_mass() {
        // Predicted "yes" column holds 10 true-no and 90 true-yes.
        let m = ConfusionMatrix::new(labels(), vec![vec![80, 10], vec![5, 90]]).unwrap();
        let g = OutcomeGenerator::new(constant(1), m, true).unwrap();
        let d = data(vec![0.0; 10_000], vec![0; 10_000]);
        let out = g.simulate_dataset(&d, 3).unwrap();
        let no = out.labels.iter().filter(|&&l| l == 0).count() as f64 / 1e4;
        assert!((no - 0.1).abs() < 0.01, "{no}");
    }

    #[test]
    fn disabled_noise_and_empty_column() {
        let m = ConfusionMatrix::new(labels(), vec![vec![0, 10], vec![0, 90]]).unwrap();
        let quiet = OutcomeGenerator::new(constant(1), m.clone(), false).unwrap();
        let d = data(vec![0.0; 100], vec![0; 100]);
        assert!(quiet.simulate_dataset(&d, 1).unwrap().labels.iter().all(|&l| l == 1));
        let g = OutcomeGenerator::new(constant(0), m, true).unwrap();
        let out = g.simulate_dataset(&d, 1).unwrap();
        assert_eq!(out.fallbacks, 100);
        assert!(out.labels.iter().all(|&l| l == 0));
    }
}
