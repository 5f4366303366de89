//! Regular-vine copula generator.

use super::copula::{fit_pair_copula_detailed, fit_pair_copula_mixed, Observation, PairCopula, INDEPENDENCE_TEST_LEVEL};
use crate::dataset::{Column, ColumnSchema, MixedDataset};
use crate::error::{Error, Result};
use crate::rng::{self, SimRng};
use crate::stats::{kendall_tau, pseudo_observations, EmpiricalMargin};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Largest dimension handled (variable sets are stored as 64-bit masks).
pub const MAX_VINE_DIM: usize = 64;

/// One pair copula of the vine: the dependence between `conditioned[0]` and
/// `conditioned[1]` given the `conditioning` variables. The copula's first
/// argument is the distribution of `conditioned[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VineEdge {
    pub conditioned: [usize; 2],
    pub conditioning: Vec<usize>,
    /// Indices of the two edges of the previous tree this edge joins.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub children: Option<[usize; 2]>,
    pub copula: PairCopula,
    /// Empirical Kendall's tau of the inputs the copula was fitted on.
    pub tau: f64,
}

impl VineEdge {
    fn mask(&self) -> u64 {
        let mut m = bit(self.conditioned[0]) | bit(self.conditioned[1]);
        for &c in &self.conditioning {
            m |= bit(c);
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Margin {
    Continuous { values: Vec<f64> },
    Categorical { probabilities: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VineCopulaModel {
    pub schema: Vec<ColumnSchema>,
    pub margins: Vec<Margin>,
    pub trees: Vec<Vec<VineEdge>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VineFitOptions {
    /// Seeds the jitter that breaks ties in pseudo-observations.
    pub seed: u64,
    /// Level of the per-edge independence pre-test; `None` uses AIC alone.
    pub independence_level: Option<f64>,
}

impl Default for VineFitOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            independence_level: Some(INDEPENDENCE_TEST_LEVEL),
        }
    }
}

#[inline]
fn bit(i: usize) -> u64 {
    1u64 << i
}

/// Maximum spanning forest by Kruskal. Candidates are `(weight, a, b)` over
/// node indices; ties are resolved by the lexicographic order of `(a, b)`.
fn max_spanning_tree(n_nodes: usize, mut candidates: Vec<(f64, usize, usize)>) -> Vec<(usize, usize)> {
    candidates.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    let mut parent: Vec<usize> = (0..n_nodes).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut chosen = Vec::with_capacity(n_nodes.saturating_sub(1));
    for (_, a, b) in candidates {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            chosen.push((a, b));
            if chosen.len() + 1 == n_nodes {
                break;
            }
        }
    }
    chosen
}

/// Per-edge conditional samples: F(c0 | rest) and F(c1 | rest).
struct EdgeData {
    edge: VineEdge,
    given_second: Vec<f64>,
    given_first: Vec<f64>,
}

impl EdgeData {
    /// Conditional sample of `var` given all other variables of this edge.
    fn conditional_of(&self, var: usize) -> &[f64] {
        if self.edge.conditioned[0] == var {
            &self.given_second
        } else {
            &self.given_first
        }
    }
}

/// Margin observations of a first-tree edge whose variables include a categorical column.
type MixedObservations<'a> = Option<(&'a [Observation], &'a [Observation])>;

#[allow(clippy::too_many_arguments)]
fn fit_edge(
    a: usize,
    b: usize,
    conditioning: Vec<usize>,
    children: Option<[usize; 2]>,
    x: &[f64],
    y: &[f64],
    mixed: MixedObservations<'_>,
    opts: &VineFitOptions,
) -> Result<EdgeData> {
    let fit = match mixed {
        Some((ox, oy)) => fit_pair_copula_mixed(x, y, ox, oy, opts.independence_level)?,
        None => fit_pair_copula_detailed(x, y, opts.independence_level)?,
    };
    for name in &fit.excluded {
        log::info!("vine edge ({a},{b}) candidate {name} excluded: optimizer did not converge");
    }
    let c = fit.copula;
    let t = c.transpose();
    let given_second = x.iter().zip(y).map(|(&u, &v)| c.h_unchecked(u, v)).collect();
    let given_first = x.iter().zip(y).map(|(&u, &v)| t.h_unchecked(v, u)).collect();
    Ok(EdgeData {
        edge: VineEdge {
            conditioned: [a, b],
            conditioning,
            children,
            copula: c,
            tau: kendall_tau(x, y)?,
        },
        given_second,
        given_first,
    })
}

/// Fits margins, then selects and estimates the vine tree by tree.
pub fn fit_vine(data: &MixedDataset, opts: &VineFitOptions) -> Result<VineCopulaModel> {
    let d = data.n_cols();
    let n = data.n_rows();
    if d < 2 {
        return Err(Error::InsufficientData(format!("a vine needs at least 2 columns, got {d}")));
    }
    if d > MAX_VINE_DIM {
        return Err(Error::InsufficientData(format!("vine dimension {d} exceeds {MAX_VINE_DIM}")));
    }
    if n < 30 {
        return Err(Error::InsufficientData(format!("vine fitting needs at least 30 rows, got {n}")));
    }

    let mut jitter = rng::stream(opts.seed, "vine/pseudo-observations");
    let mut margins = Vec::with_capacity(d);
    let mut pseudo = Vec::with_capacity(d);
    for (j, col) in data.columns().iter().enumerate() {
        let values = col.numeric();
        margins.push(match col {
            Column::Continuous(v) => Margin::Continuous {
                values: EmpiricalMargin::new(v)?.sorted_values().to_vec(),
            },
            Column::Categorical(_) => Margin::Categorical {
                probabilities: data.category_proportions(j)?,
            },
        });
        pseudo.push(pseudo_observations(&values, &mut jitter));
    }
    // Categorical values occupy the band [F(k−), F(k)] of their category.
    let observations: Vec<Vec<Observation>> = data
        .columns()
        .iter()
        .enumerate()
        .map(|(j, col)| match (col, &margins[j]) {
            (Column::Categorical(codes), Margin::Categorical { probabilities }) => {
                let mut bounds = Vec::with_capacity(probabilities.len() + 1);
                let mut acc = 0.0;
                bounds.push(0.0);
                for p in probabilities {
                    acc += p;
                    bounds.push(acc.min(1.0));
                }
                *bounds.last_mut().expect("non-empty") = 1.0;
                codes.iter().map(|&k| Observation::Interval(bounds[k as usize], bounds[k as usize + 1])).collect()
            }
            _ => pseudo[j].iter().map(|&u| Observation::Point(u)).collect(),
        })
        .collect();
    let is_categorical = |j: usize| matches!(margins[j], Margin::Categorical { .. });

    // First tree: nodes are variables.
    let mut candidates = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            candidates.push((kendall_tau(&pseudo[i], &pseudo[j])?.abs(), i, j));
        }
    }
    let mut level: Vec<EdgeData> = Vec::with_capacity(d - 1);
    for (a, b) in max_spanning_tree(d, candidates) {
        let mixed = (is_categorical(a) || is_categorical(b)).then(|| (observations[a].as_slice(), observations[b].as_slice()));
        level.push(fit_edge(a, b, Vec::new(), None, &pseudo[a], &pseudo[b], mixed, opts)?);
    }
    let mut trees = Vec::with_capacity(d - 1);

    while level.len() > 1 {
        let m = level.len();
        let masks: Vec<u64> = level.iter().map(|e| e.edge.mask()).collect();
        // Proximity: two edges may be joined when they share a node of the
        // previous tree, i.e. their variable sets differ in exactly one element each.
        let mut joinable = Vec::new();
        let mut candidates = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                let common = masks[i] & masks[j];
                if (masks[i] ^ masks[j]).count_ones() != 2 || common.count_ones() as usize + 1 != masks[i].count_ones() as usize {
                    continue;
                }
                let a = (masks[i] & !common).trailing_zeros() as usize;
                let b = (masks[j] & !common).trailing_zeros() as usize;
                let x = level[i].conditional_of(a);
                let y = level[j].conditional_of(b);
                candidates.push((kendall_tau(x, y)?.abs(), i, j));
                joinable.push((i, j, a, b, common));
            }
        }
        let mut next = Vec::with_capacity(m - 1);
        for (i, j) in max_spanning_tree(m, candidates) {
            let &(_, _, a, b, common) = joinable.iter().find(|t| t.0 == i && t.1 == j).expect("candidate exists");
            let conditioning: Vec<usize> = (0..d).filter(|&k| common & bit(k) != 0).collect();
            let (a, b, ci, cj) = if a < b { (a, b, i, j) } else { (b, a, j, i) };
            let x = level[ci].conditional_of(a);
            let y = level[cj].conditional_of(b);
            next.push(fit_edge(a, b, conditioning, Some([ci, cj]), x, y, None, opts)?);
        }
        if next.len() + 1 != m {
            return Err(Error::Numerical(format!(
                "vine tree {} could not be connected under the proximity condition",
                trees.len() + 2
            )));
        }
        trees.push(level.into_iter().map(|e| e.edge).collect());
        level = next;
    }
    trees.push(level.into_iter().map(|e| e.edge).collect());
    let model = VineCopulaModel {
        schema: data.schema().to_vec(),
        margins,
        trees,
    };
    model.validate()?;
    Ok(model)
}

/// Sampling plan: variables in generation order, each with the chain of
/// edges (tree 1 upward) linking it to previously generated variables.
struct SamplingPlan {
    first: usize,
    steps: Vec<(usize, Vec<(usize, usize)>)>,
}

impl VineCopulaModel {
    pub fn dim(&self) -> usize {
        self.schema.len()
    }

    pub fn n_pair_copulas(&self) -> usize {
        self.trees.iter().map(Vec::len).sum()
    }

    /// Checks edge counts, set bookkeeping and the proximity condition.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        let bad = |msg: String| Err(Error::Schema(format!("invalid vine: {msg}")));
        if self.margins.len() != d {
            return bad(format!("{} margins for {d} columns", self.margins.len()));
        }
        if self.trees.len() != d.saturating_sub(1) {
            return bad(format!("{} trees for dimension {d}", self.trees.len()));
        }
        for (t, tree) in self.trees.iter().enumerate() {
            if tree.len() != d - 1 - t {
                return bad(format!("tree {} has {} edges, expected {}", t + 1, tree.len(), d - 1 - t));
            }
            for e in tree {
                if e.conditioning.len() != t || e.conditioned[0] == e.conditioned[1] {
                    return bad(format!("edge {:?} has the wrong shape for tree {}", e.conditioned, t + 1));
                }
                if e.conditioned.iter().chain(&e.conditioning).any(|&v| v >= d) {
                    return bad(format!("edge {:?} names a variable outside 0..{d}", e.conditioned));
                }
                if e.mask().count_ones() as usize != t + 2 {
                    return bad(format!("edge {:?} repeats a variable", e.conditioned));
                }
                match (t, e.children) {
                    (0, None) => {}
                    (0, Some(_)) | (_, None) => return bad(format!("edge {:?} has inconsistent children", e.conditioned)),
                    (_, Some([p, q])) => {
                        let prev = &self.trees[t - 1];
                        if p >= prev.len() || q >= prev.len() || p == q {
                            return bad(format!("edge {:?} has dangling children", e.conditioned));
                        }
                        let (mp, mq) = (prev[p].mask(), prev[q].mask());
                        if mp | mq != e.mask() || (mp & mq).count_ones() as usize != t {
                            return bad(format!("edge {:?} violates the proximity condition", e.conditioned));
                        }
                    }
                }
            }
            // Edges of a tree must form a spanning tree over its nodes.
            let n_nodes = tree.len() + 1;
            let links: Vec<(f64, usize, usize)> = if t == 0 {
                tree.iter().map(|e| (0.0, e.conditioned[0], e.conditioned[1])).collect()
            } else {
                tree.iter().map(|e| { let [p, q] = e.children.unwrap(); (0.0, p, q) }).collect()
            };
            if max_spanning_tree(n_nodes, links).len() != tree.len() {
                return bad(format!("tree {} contains a cycle", t + 1));
            }
        }
        Ok(())
    }

    /// Peels one variable per step from the top tree down to a single node.
    fn plan(&self) -> Result<SamplingPlan> {
        let d = self.dim();
        let mut removed: Vec<Vec<bool>> = self.trees.iter().map(|t| vec![false; t.len()]).collect();
        let mut alive = (0..d).collect::<Vec<_>>();
        let mut steps = Vec::with_capacity(d - 1);
        for size in (2..=d).rev() {
            let top = size - 2;
            let (idx, _) = self.trees[top]
                .iter()
                .enumerate()
                .find(|(i, _)| !removed[top][*i])
                .ok_or_else(|| Error::Numerical("vine top tree exhausted".into()))?;
            let var = self.trees[top][idx].conditioned.iter().copied().max().unwrap();
            let mut chain = Vec::with_capacity(top + 1);
            for t in 0..=top {
                let hits: Vec<usize> = (0..self.trees[t].len())
                    .filter(|&i| !removed[t][i] && self.trees[t][i].conditioned.contains(&var))
                    .collect();
                if hits.len() != 1 {
                    return Err(Error::Numerical(format!(
                        "variable {var} appears in {} edges of tree {}",
                        hits.len(),
                        t + 1
                    )));
                }
                removed[t][hits[0]] = true;
                chain.push((t, hits[0]));
            }
            alive.retain(|&v| v != var);
            steps.push((var, chain));
        }
        steps.reverse();
        Ok(SamplingPlan { first: alive[0], steps })
    }

    /// Draws `n` rows on the copula scale (uniform margins).
    pub fn sample_uniforms(&self, n: usize, rng: &mut SimRng) -> Result<Vec<Vec<f64>>> {
        let d = self.dim();
        let plan = self.plan()?;
        let offsets: Vec<usize> = self
            .trees
            .iter()
            .scan(0, |acc, t| {
                let o = *acc;
                *acc += t.len();
                Some(o)
            })
            .collect();
        let n_edges = self.n_pair_copulas();
        let mut memo = vec![f64::NAN; 2 * n_edges];
        let mut out = Vec::with_capacity(n);
        let mut w = vec![0.0; d];
        for _ in 0..n {
            for x in w.iter_mut() {
                *x = rng.random::<f64>();
                while *x == 0.0 {
                    *x = rng.random::<f64>();
                }
            }
            memo.iter_mut().for_each(|m| *m = f64::NAN);
            let mut u = vec![f64::NAN; d];
            u[plan.first] = w[plan.first];
            for (var, chain) in &plan.steps {
                let mut x = w[*var];
                for &(t, i) in chain.iter().rev() {
                    let e = &self.trees[t][i];
                    let (pos, partner) = if e.conditioned[0] == *var { (0, e.conditioned[1]) } else { (1, e.conditioned[0]) };
                    let given = if t == 0 {
                        u[partner]
                    } else {
                        let [p, q] = e.children.unwrap();
                        let child = if self.trees[t - 1][p].mask() & bit(*var) == 0 { p } else { q };
                        self.conditional(t - 1, child, partner, &u, &offsets, &mut memo)
                    };
                    x = if pos == 0 {
                        e.copula.inverse_h_unchecked(x, given)
                    } else {
                        e.copula.transpose().inverse_h_unchecked(x, given)
                    };
                }
                u[*var] = x;
            }
            out.push(u);
        }
        Ok(out)
    }

    /// F(var | other variables of edge (t, i)), memoized per row.
    fn conditional(&self, t: usize, i: usize, var: usize, u: &[f64], offsets: &[usize], memo: &mut [f64]) -> f64 {
        let e = &self.trees[t][i];
        let pos = if e.conditioned[0] == var { 0 } else { 1 };
        let slot = 2 * (offsets[t] + i) + pos;
        if !memo[slot].is_nan() {
            return memo[slot];
        }
        let other = e.conditioned[1 - pos];
        let (x, y) = if t == 0 {
            (u[var], u[other])
        } else {
            let [p, q] = e.children.unwrap();
            let (cv, co) = if self.trees[t - 1][p].mask() & bit(other) == 0 { (p, q) } else { (q, p) };
            (
                self.conditional(t - 1, cv, var, u, offsets, memo),
                self.conditional(t - 1, co, other, u, offsets, memo),
            )
        };
        let value = if pos == 0 {
            e.copula.h_unchecked(x, y)
        } else {
            e.copula.transpose().h_unchecked(x, y)
        };
        memo[slot] = value;
        value
    }

    /// Samples a cohort of `n` rows on the original scales.
    pub fn sample(&self, n: usize, seed: u64) -> Result<MixedDataset> {
        let mut r = rng::stream(seed, "vine/sample");
        let uniforms = self.sample_uniforms(n, &mut r)?;
        let mut columns = Vec::with_capacity(self.dim());
        for (j, margin) in self.margins.iter().enumerate() {
            columns.push(match margin {
                Margin::Continuous { values } => {
                    let m = EmpiricalMargin::from_sorted(values.clone())?;
                    Column::Continuous(uniforms.iter().map(|row| m.pseudo_inverse_unchecked(row[j])).collect())
                }
                Margin::Categorical { probabilities } => {
                    Column::Categorical(uniforms.iter().map(|row| bracket(probabilities, row[j])).collect())
                }
            });
        }
        MixedDataset::new(self.schema.clone(), columns)
    }
}

/// Category m with threshold bracket (t_{m−1}, t_m] containing x, where the
/// outer thresholds are −∞ and +∞.
pub(crate) fn bracket_values(thresholds: &[f64], x: f64) -> u32 {
    thresholds.partition_point(|&t| t < x) as u32
}

/// Category m with cumulative probability bracket (P_{m−1}, P_m] containing u.
pub(crate) fn bracket(probabilities: &[f64], u: f64) -> u32 {
    let mut acc = 0.0;
    for (m, p) in probabilities.iter().enumerate() {
        acc += p;
        if u <= acc {
            return m as u32;
        }
    }
    (probabilities.len() - 1) as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{mvn_sample, CovarianceMatrix};
    use crate::vbg::{Family, Rotation};

    fn gaussian_data(corr: &[Vec<f64>], n: usize, seed: u64) -> MixedDataset {
        let d = corr.len();
        let cov = CovarianceMatrix::from_rows(corr).unwrap();
        let mut r = rng::from_seed(seed);
        let rows = mvn_sample(&vec![0.0; d], &cov, n, &mut r).unwrap();
        let schema = (0..d).map(|j| ColumnSchema::continuous(format!("x{j}"))).collect();
        let cols = (0..d).map(|j| Column::Continuous(rows.iter().map(|row| row[j]).collect())).collect();
        MixedDataset::new(schema, cols).unwrap()
    }

    fn equicorrelated(d: usize, rho: f64) -> Vec<Vec<f64>> {
        (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { rho }).collect()).collect()
    }

    #[test]
    fn two_dimensions_single_edge() {
        let data = gaussian_data(&equicorrelated(2, 0.6), 300, 1);
        let m = fit_vine(&data, &VineFitOptions::default()).unwrap();
        assert_eq!(m.trees.len(), 1);
        assert_eq!(m.trees[0].len(), 1);
        assert_eq!(m.trees[0][0].conditioned, [0, 1]);
    }

    /// The first tree must be the spanning tree with the largest Σ|τ|.
    #[test]
    fn first_tree_joins_strongest_pairs() {
        let corr = vec![vec![1.0, 0.8, 0.6], vec![0.8, 1.0, 0.1], vec![0.6, 0.1, 1.0]];
        let data = gaussian_data(&corr, 1000, 2);
        let m = fit_vine(&data, &VineFitOptions::default()).unwrap();
        let pairs: Vec<[usize; 2]> = m.trees[0].iter().map(|e| e.conditioned).collect();
        // Oracle: enumerate the three spanning trees of K3.
        let cols: Vec<Vec<f64>> = (0..3).map(|j| data.column(j).numeric()).collect();
        let t = |i: usize, j: usize| kendall_tau(&cols[i], &cols[j]).unwrap().abs();
        let trees = [[[0, 1], [0, 2]], [[0, 1], [1, 2]], [[0, 2], [1, 2]]];
        let best = trees
            .iter()
            .max_by(|a, b| {
                let wa: f64 = a.iter().map(|p| t(p[0], p[1])).sum();
                let wb: f64 = b.iter().map(|p| t(p[0], p[1])).sum();
                wa.total_cmp(&wb)
            })
            .unwrap();
        let mut got = pairs.clone();
        got.sort();
        assert_eq!(&got[..], &best[..]);
        assert_eq!(got, vec![[0, 1], [0, 2]]);
    }

    #[test]
    fn five_dimensions_structure() {
        let corr = vec![
            vec![1.0, 0.6, 0.3, 0.2, 0.5],
            vec![0.6, 1.0, 0.4, 0.1, 0.3],
            vec![0.3, 0.4, 1.0, 0.5, 0.2],
            vec![0.2, 0.1, 0.5, 1.0, 0.3],
            vec![0.5, 0.3, 0.2, 0.3, 1.0],
        ];
        let data = gaussian_data(&corr, 600, 3);
        let m = fit_vine(&data, &VineFitOptions::default()).unwrap();
        assert_eq!(m.n_pair_copulas(), 10);
        for (t, tree) in m.trees.iter().enumerate() {
            assert_eq!(tree.len(), 4 - t);
        }
        m.validate().unwrap();
        let json = serde_json::to_string(&m).unwrap();
        let back: VineCopulaModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn rejects_bad_inputs() {
        let data = gaussian_data(&equicorrelated(1, 0.0), 100, 4);
        assert!(fit_vine(&data, &VineFitOptions::default()).is_err());
        let data = gaussian_data(&equicorrelated(3, 0.3), 20, 4);
        assert!(fit_vine(&data, &VineFitOptions::default()).is_err());
    }

    #[test]
    fn tie_break_is_lexicographic() {
        let chosen = max_spanning_tree(4, vec![(0.5, 2, 3), (0.5, 0, 1), (0.5, 1, 2), (0.5, 0, 2)]);
        assert_eq!(chosen, vec![(0, 1), (0, 2), (2, 3)]);
    }

    fn manual_model(trees: Vec<Vec<VineEdge>>, d: usize) -> VineCopulaModel {
        VineCopulaModel {
            schema: (0..d).map(|j| ColumnSchema::continuous(format!("x{j}"))).collect(),
            margins: (0..d).map(|_| Margin::Continuous { values: vec![0.0, 1.0] }).collect(),
            trees,
        }
    }

    fn edge(a: usize, b: usize, cond: Vec<usize>, children: Option<[usize; 2]>, c: PairCopula) -> VineEdge {
        VineEdge {
            conditioned: [a, b],
            conditioning: cond,
            children,
            copula: c,
            tau: c.kendall_tau(),
        }
    }

    #[test]
    fn independence_vine_samples_uniform_independent() {
        let ind = PairCopula::independence();
        let m = manual_model(
            vec![
                vec![edge(0, 1, vec![], None, ind), edge(1, 2, vec![], None, ind)],
                vec![edge(0, 2, vec![1], Some([0, 1]), ind)],
            ],
            3,
        );
        m.validate().unwrap();
        let mut r = rng::from_seed(5);
        let u = m.sample_uniforms(10_000, &mut r).unwrap();
        for j in 0..3 {
            let col: Vec<f64> = u.iter().map(|row| row[j]).collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            assert!((mean - 0.5).abs() < 0.01);
            for k in j + 1..3 {
                let other: Vec<f64> = u.iter().map(|row| row[k]).collect();
                assert!(kendall_tau(&col, &other).unwrap().abs() < 0.05);
            }
        }
    }

    #[test]
    fn gaussian_pair_tau() {
        let g = PairCopula::new(Family::Gaussian, 0.7, Rotation::R0).unwrap();
        let m = manual_model(vec![vec![edge(0, 1, vec![], None, g)]], 2);
        let mut r = rng::from_seed(6);
        let u = m.sample_uniforms(10_000, &mut r).unwrap();
        let a: Vec<f64> = u.iter().map(|row| row[0]).collect();
        let b: Vec<f64> = u.iter().map(|row| row[1]).collect();
        let tau = kendall_tau(&a, &b).unwrap();
        let want = std::f64::consts::FRAC_2_PI * 0.7f64.asin();
        assert!((tau - want).abs() < 0.05, "{tau}");
    }

    /// Fitting on samples of a known 3-variable vine recovers each pair's tau.
    #[test]
    fn fit_sample_refit() {
        let c01 = PairCopula::new(Family::Clayton, 2.0, Rotation::R0).unwrap();
        let c12 = PairCopula::new(Family::Gumbel, 1.8, Rotation::R0).unwrap();
        let c02 = PairCopula::new(Family::Frank, -3.0, Rotation::R0).unwrap();
        let truth = manual_model(
            vec![
                vec![edge(0, 1, vec![], None, c01), edge(1, 2, vec![], None, c12)],
                vec![edge(0, 2, vec![1], Some([0, 1]), c02)],
            ],
            3,
        );
        let mut r = rng::from_seed(8);
        let u = truth.sample_uniforms(5000, &mut r).unwrap();
        let schema = (0..3).map(|j| ColumnSchema::continuous(format!("x{j}"))).collect();
        let cols = (0..3).map(|j| Column::Continuous(u.iter().map(|row| row[j]).collect())).collect();
        let data = MixedDataset::new(schema, cols).unwrap();
        let fitted = fit_vine(&data, &VineFitOptions::default()).unwrap();
        let mut first: Vec<_> = fitted.trees[0].iter().map(|e| (e.conditioned, e.copula.kendall_tau())).collect();
        first.sort_by_key(|p| p.0);
        assert_eq!(first[0].0, [0, 1]);
        assert_eq!(first[1].0, [1, 2]);
        assert!((first[0].1 - c01.kendall_tau()).abs() < 0.05);
        assert!((first[1].1 - c12.kendall_tau()).abs() < 0.05);
        let top = &fitted.trees[1][0];
        assert_eq!(top.conditioned, [0, 2]);
        assert!((top.copula.kendall_tau() - c02.kendall_tau()).abs() < 0.05);
    }

    #[test]
    fn sampling_is_deterministic_and_in_support() {
        let corr = equicorrelated(4, 0.5);
        let data = gaussian_data(&corr, 200, 9);
        let m = fit_vine(&data, &VineFitOptions::default()).unwrap();
        let a = m.sample(300, 11).unwrap();
        let b = m.sample(300, 11).unwrap();
        assert_eq!(a, b);
        for j in 0..4 {
            let src = data.column(j).numeric();
            for x in a.column(j).numeric() {
                assert!(src.contains(&x));
            }
        }
    }

    #[test]
    fn bracket_rule() {
        assert_eq!(bracket(&[0.5, 0.5], 0.5), 0);
        assert_eq!(bracket(&[0.5, 0.5], 0.5000001), 1);
        assert_eq!(bracket(&[0.2, 0.3, 0.5], 0.999_999), 2);
    }
}
