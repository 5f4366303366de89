//! Outcome classifiers: covariates → predicted label.

use super::logit::{fit_multinomial_logit, CovariateMarkovModel, LogitOptions};
use crate::dataset::MixedDataset;
use crate::error::{Error, Result};
use crate::rng;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassifierKind {
    Logistic,
    Forest,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestOptions {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features tried per split; `None` uses ⌈√p⌉.
    pub mtry: Option<usize>,
}

impl Default for ForestOptions {
    fn default() -> Self {
        Self {
            n_trees: 25,
            max_depth: 6,
            min_leaf: 5,
            mtry: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TreeNode {
    Leaf { label: usize },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// A CART tree stored as a flat node list rooted at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn predict(&self, row: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf { label } => return label,
                TreeNode::Split { feature, threshold, left, right } => {
                    at = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize]) -> usize {
    // Ties resolve to the lowest label index.
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

struct TreeBuilder<'a, R: Rng> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    k: usize,
    opts: ForestOptions,
    mtry: usize,
    rng: &'a mut R,
    nodes: Vec<TreeNode>,
}

impl<R: Rng> TreeBuilder<'_, R> {
    fn build(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let mut counts = vec![0usize; self.k];
        for &r in rows.iter() {
            counts[self.y[r]] += 1;
        }
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { label: majority(&counts) });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.opts.max_depth || rows.len() < 2 * self.opts.min_leaf {
            return id;
        }
        let p = self.x[0].len();
        let parent = gini(&counts, rows.len());
        let mut best: Option<(f64, usize, f64)> = None;
        for feature in index::sample(self.rng, p, self.mtry.min(p)).into_iter() {
            rows.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]));
            let mut left = vec![0usize; self.k];
            let n = rows.len();
            for i in 0..n - 1 {
                left[self.y[rows[i]]] += 1;
                let nl = i + 1;
                let (xa, xb) = (self.x[rows[i]][feature], self.x[rows[i + 1]][feature]);
                if xa == xb || nl < self.opts.min_leaf || n - nl < self.opts.min_leaf {
                    continue;
                }
                let right: Vec<usize> = counts.iter().zip(&left).map(|(c, l)| c - l).collect();
                let impurity = (nl as f64 * gini(&left, nl) + (n - nl) as f64 * gini(&right, n - nl)) / n as f64;
                if impurity < parent - 1e-12 && best.is_none_or(|(b, _, _)| impurity < b) {
                    best = Some((impurity, feature, 0.5 * (xa + xb)));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return id;
        };
        let split = partition_rows(rows, |r| self.x[r][feature] <= threshold);
        let (l, r) = rows.split_at_mut(split);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = TreeNode::Split { feature, threshold, left, right };
        id
    }
}

/// Stable in-place partition; returns the number of rows satisfying `pred`.
fn partition_rows(rows: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let (yes, no): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| pred(r));
    let k = yes.len();
    rows[..k].copy_from_slice(&yes);
    rows[k..].copy_from_slice(&no);
    k
}

/// Bootstrap-aggregated CART trees with majority vote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaggedTrees {
    pub trees: Vec<DecisionTree>,
    pub n_labels: usize,
}

impl BaggedTrees {
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_labels: usize, opts: ForestOptions, seed: u64) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::shape("forest needs equally many feature rows and labels"));
        }
        if x[0].is_empty() {
            return Err(Error::config("forest needs at least one feature"));
        }
        let p = x[0].len();
        let mtry = opts.mtry.unwrap_or_else(|| (p as f64).sqrt().ceil() as usize).max(1);
        let n = x.len();
        let mut trees = Vec::with_capacity(opts.n_trees);
        for t in 0..opts.n_trees {
            let mut r = rng::indexed_stream(seed, "forest/tree", t);
            let mut rows: Vec<usize> = (0..n).map(|_| r.random_range(0..n)).collect();
            let mut builder = TreeBuilder {
                x,
                y,
                k: n_labels,
                opts,
                mtry,
                rng: &mut r,
                nodes: Vec::new(),
            };
            builder.build(&mut rows, 0);
            trees.push(DecisionTree { nodes: builder.nodes });
        }
        Ok(Self { trees, n_labels })
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        let mut votes = vec![0usize; self.n_labels];
        for t in &self.trees {
            votes[t.predict(row)] += 1;
        }
        majority(&votes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierModel {
    Logistic(CovariateMarkovModel),
    Forest(BaggedTrees),
    Constant { label: usize },
}

/// A fitted classifier together with the feature order it expects and the
/// outcome labels it emits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    pub outcome: String,
    pub labels: Vec<String>,
    pub features: Vec<String>,
    pub model: ClassifierModel,
}

/// Fits a classifier for categorical `outcome` on `features`.
pub fn fit_classifier(
    kind: ClassifierKind,
    data: &MixedDataset,
    outcome: &str,
    features: &[&str],
    seed: u64,
) -> Result<Classifier> {
    let j = data.index_of(outcome)?;
    let schema = &data.schema()[j];
    if !schema.is_categorical() {
        return Err(Error::Schema(format!("outcome '{outcome}' must be categorical")));
    }
    for f in features {
        data.index_of(f)?;
    }
    let y: Vec<usize> = (0..data.n_rows()).map(|r| data.value(r, j) as usize).collect();
    let k = schema.categories.len();
    let model = match kind {
        ClassifierKind::Constant => {
            let mut counts = vec![0usize; k];
            for &c in &y {
                counts[c] += 1;
            }
            ClassifierModel::Constant { label: majority(&counts) }
        }
        ClassifierKind::Logistic => {
            let opts = LogitOptions {
                ridge: 1.0,
                stepwise: false,
                ..LogitOptions::default()
            };
            ClassifierModel::Logistic(fit_multinomial_logit(data, outcome, features, &opts)?)
        }
        ClassifierKind::Forest => {
            let x = feature_rows(data, features)?;
            ClassifierModel::Forest(BaggedTrees::fit(&x, &y, k, ForestOptions::default(), rng::stream_u64(seed, "classifier/forest"))?)
        }
    };
    Ok(Classifier {
        outcome: outcome.to_string(),
        labels: schema.categories.clone(),
        features: features.iter().map(|s| s.to_string()).collect(),
        model,
    })
}

/// Row-major feature matrix in the order given by `features`.
pub fn feature_rows(data: &MixedDataset, features: &[&str]) -> Result<Vec<Vec<f64>>> {
    let idx: Vec<usize> = features.iter().map(|f| data.index_of(f)).collect::<Result<_>>()?;
    Ok((0..data.n_rows()).map(|r| idx.iter().map(|&j| data.value(r, j)).collect()).collect())
}

impl Classifier {
    /// Predicted label index for a row laid out in `self.features` order.
    pub fn predict_row(&self, row: &[f64]) -> Result<usize> {
        if row.len() != self.features.len() {
            return Err(Error::shape(format!("expected {} features, got {}", self.features.len(), row.len())));
        }
        Ok(match &self.model {
            ClassifierModel::Constant { label } => *label,
            ClassifierModel::Forest(f) => f.predict(row),
            ClassifierModel::Logistic(m) => {
                let names: Vec<&str> = self.features.iter().map(String::as_str).collect();
                argmax(&m.bind(&names)?.probs(row))
            }
        })
    }

    /// Predicted label index for named covariate values.
    pub fn predict(&self, patient: &HashMap<String, f64>) -> Result<usize> {
        let row: Vec<f64> = self
            .features
            .iter()
            .map(|f| patient.get(f).copied().ok_or_else(|| Error::domain(format!("missing covariate '{f}'"))))
            .collect::<Result<_>>()?;
        self.predict_row(&row)
    }

    /// Predictions for every row of `data`.
    pub fn predict_dataset(&self, data: &MixedDataset) -> Result<Vec<usize>> {
        let names: Vec<&str> = self.features.iter().map(String::as_str).collect();
        let rows = feature_rows(data, &names)?;
        match &self.model {
            ClassifierModel::Logistic(m) => {
                let bound = m.bind(&names)?;
                Ok(rows.iter().map(|r| argmax(&bound.probs(r))).collect())
            }
            _ => rows.iter().map(|r| self.predict_row(r)).collect(),
        }
    }
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Column, ColumnSchema};
    use rand_distr::StandardNormal;

    fn toy(n: usize, seed: u64) -> MixedDataset {
        let mut r = rng::from_seed(seed);
        let x: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
        let z: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
        let y: Vec<u32> = x.iter().map(|&v| u32::from(v > 0.2)).collect();
        MixedDataset::new(
            vec![
                ColumnSchema::continuous("x"),
                ColumnSchema::continuous("z"),
                ColumnSchema::categorical("y", ["no", "yes"]),
            ],
            vec![Column::Continuous(x), Column::Continuous(z), Column::Categorical(y)],
        )
        .unwrap()
    }

    fn accuracy(c: &Classifier, data: &MixedDataset) -> f64 {
        let pred = c.predict_dataset(data).unwrap();
        let y = data.column_by_name("y").unwrap();
        pred.iter().enumerate().filter(|(r, &p)| y.value(*r) as usize == p).count() as f64 / pred.len() as f64
    }

    #[test]
    fn forest_learns_threshold() {
        let train = toy(400, 1);
        let test = toy(400, 2);
        let c = fit_classifier(ClassifierKind::Forest, &train, "y", &["x", "z"], 5).unwrap();
        assert!(accuracy(&c, &test) > 0.93);
        if let ClassifierModel::Forest(f) = &c.model {
            assert_eq!(f.trees.len(), 25);
        }
    }

    #[test]
    fn logistic_learns_threshold() {
        let train = toy(400, 3);
        let test = toy(400, 4);
        let c = fit_classifier(ClassifierKind::Logistic, &train, "y", &["x", "z"], 5).unwrap();
        assert!(accuracy(&c, &test) > 0.93);
    }

    #[test]
    fn constant_predicts_majority() {
        let data = toy(101, 6);
        let c = fit_classifier(ClassifierKind::Constant, &data, "y", &["x"], 0).unwrap();
        let y = data.column_by_name("y").unwrap().numeric();
        let yes = y.iter().filter(|&&v| v == 1.0).count();
        let expect = usize::from(yes * 2 > y.len());
        assert!(c.predict_dataset(&data).unwrap().iter().all(|&p| p == expect));
    }

    #[test]
    fn forest_is_deterministic_and_serializes() {
        let data = toy(200, 7);
        let a = fit_classifier(ClassifierKind::Forest, &data, "y", &["x", "z"], 11).unwrap();
        let b = fit_classifier(ClassifierKind::Forest, &data, "y", &["x", "z"], 11).unwrap();
        assert_eq!(a, b);
        let back: Classifier = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn tree_respects_min_leaf_and_depth() {
        let data = toy(300, 8);
        let x = feature_rows(&data, &["x", "z"]).unwrap();
        let y: Vec<usize> = data.column_by_name("y").unwrap().numeric().iter().map(|&v| v as usize).collect();
        let opts = ForestOptions { n_trees: 1, max_depth: 2, ..ForestOptions::default() };
        let f = BaggedTrees::fit(&x, &y, 2, opts, 0).unwrap();
        // Depth 2 allows at most 3 splits and 4 leaves.
        assert!(f.trees[0].nodes.len() <= 7);
    }

    #[test]
    fn missing_feature_is_reported() {
        let data = toy(100, 9);
        let c = fit_classifier(ClassifierKind::Logistic, &data, "y", &["x"], 0).unwrap();
        let err = c.predict(&HashMap::new()).unwrap_err();
        assert!(err.to_string().contains("'x'"));
    }
}
