//! Multinomial logistic regression and covariate-driven transition models.

use crate::dataset::{Column, ColumnKind, MixedDataset};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

/// Coefficients are confined to ±this bound on the logit scale.
pub const COEFFICIENT_CAP: f64 = 30.0;

/// One column of the design matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Term {
    Intercept,
    /// A continuous covariate entering linearly.
    Value(String),
    /// Indicator of one non-baseline category of a categorical covariate.
    Level(String, String),
}

impl Term {
    pub fn covariate(&self) -> Option<&str> {
        match self {
            Term::Intercept => None,
            Term::Value(c) | Term::Level(c, _) => Some(c),
        }
    }
}

impl std::fmt::Display for Term {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Term::Intercept => write!(f, "(intercept)"),
            Term::Value(c) => write!(f, "{c}"),
            Term::Level(c, l) => write!(f, "{c}={l}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogitOptions {
    /// L2 penalty on non-intercept coefficients.
    pub ridge: f64,
    /// Run backward stepwise elimination by AIC over the candidate covariates.
    pub stepwise: bool,
    /// Information-criterion cost per parameter: 2 gives AIC, ln(n) gives BIC.
    pub penalty_per_parameter: f64,
    pub max_iterations: usize,
    /// Convergence threshold on the max-norm of the free score components.
    pub tolerance: f64,
}

impl Default for LogitOptions {
    fn default() -> Self {
        Self {
            ridge: 0.0,
            stepwise: true,
            penalty_per_parameter: 2.0,
            max_iterations: 200,
            tolerance: 1e-9,
        }
    }
}

/// Design matrix and outcomes for a multinomial logit. Parameters are laid
/// out state-major: `beta[(s - 1) * p + j]` for non-reference state `s`.
#[derive(Debug, Clone)]
pub struct LogitDesign {
    terms: Vec<Term>,
    /// n × p, column-major.
    x: DMatrix<f64>,
    y: Vec<usize>,
    n: usize,
    p: usize,
    k: usize,
    ridge: f64,
}

impl LogitDesign {
    /// Builds the design for `target` (categorical) on the given covariates:
    /// an intercept, one column per continuous covariate and one indicator per
    /// non-first category of each categorical covariate.
    pub fn from_dataset(data: &MixedDataset, target: &str, covariates: &[&str]) -> Result<Self> {
        let mut terms = vec![Term::Intercept];
        for &name in covariates {
            let j = data.index_of(name)?;
            let s = &data.schema()[j];
            match s.kind {
                ColumnKind::Continuous => terms.push(Term::Value(name.to_string())),
                ColumnKind::Categorical => {
                    for label in &s.categories[1..] {
                        terms.push(Term::Level(name.to_string(), label.clone()));
                    }
                }
            }
        }
        Self::with_terms(data, target, terms)
    }

    pub fn with_terms(data: &MixedDataset, target: &str, terms: Vec<Term>) -> Result<Self> {
        let t = data.index_of(target)?;
        let (y, k) = match (data.column(t), &data.schema()[t]) {
            (Column::Categorical(codes), s) => (codes.iter().map(|&c| c as usize).collect::<Vec<_>>(), s.categories.len()),
            _ => return Err(Error::Schema(format!("target '{target}' must be categorical"))),
        };
        let n = data.n_rows();
        let p = terms.len();
        let mut extract: Vec<Box<dyn Fn(usize) -> f64 + '_>> = Vec::with_capacity(p);
        for term in &terms {
            extract.push(match term {
                Term::Intercept => Box::new(|_| 1.0),
                Term::Value(c) => {
                    let col = data.column_by_name(c)?;
                    Box::new(move |r| col.value(r))
                }
                Term::Level(c, l) => {
                    let j = data.index_of(c)?;
                    let code = data.schema()[j]
                        .category_index(l)
                        .ok_or_else(|| Error::Schema(format!("'{c}' has no category '{l}'")))? as f64;
                    let col = data.column(j);
                    Box::new(move |r| if col.value(r) == code { 1.0 } else { 0.0 })
                }
            });
        }
        let x = DMatrix::from_fn(n, p, |r, c| extract[c](r));
        drop(extract);
        Ok(Self {
            terms,
            x,
            y,
            n,
            p,
            k,
            ridge: 0.0,
        })
    }

    pub fn with_ridge(mut self, ridge: f64) -> Self {
        self.ridge = ridge;
        self
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn n_params(&self) -> usize {
        (self.k - 1) * self.p
    }

    pub fn n_obs(&self) -> usize {
        self.n
    }

    /// Linear predictors of the non-reference classes, n × (k − 1).
    fn predictors(&self, beta: &[f64]) -> DMatrix<f64> {
        &self.x * DMatrix::from_column_slice(self.p, self.k - 1, beta)
    }

    /// Non-reference class probabilities, n × (k − 1).
    fn class_probs(&self, beta: &[f64]) -> DMatrix<f64> {
        let mut eta = self.predictors(beta);
        let mut buf = vec![0.0; self.k];
        for i in 0..self.n {
            for s in 1..self.k {
                buf[s] = eta[(i, s - 1)];
            }
            buf[0] = 0.0;
            softmax_in_place(&mut buf);
            for s in 1..self.k {
                eta[(i, s - 1)] = buf[s];
            }
        }
        eta
    }

    fn penalty_applies(&self, j: usize) -> bool {
        self.terms[j] != Term::Intercept
    }

    /// Penalized log-likelihood.
    pub fn log_likelihood(&self, beta: &[f64]) -> f64 {
        let eta = self.predictors(beta);
        let mut buf = vec![0.0; self.k];
        let mut ll = 0.0;
        for i in 0..self.n {
            buf[0] = 0.0;
            for s in 1..self.k {
                buf[s] = eta[(i, s - 1)];
            }
            let chosen = buf[self.y[i]];
            ll += chosen - softmax_in_place(&mut buf);
        }
        ll - 0.5 * self.ridge * self.penalty_sum(beta)
    }

    fn penalty_sum(&self, beta: &[f64]) -> f64 {
        if self.ridge == 0.0 {
            return 0.0;
        }
        beta.iter()
            .enumerate()
            .filter(|(idx, _)| self.penalty_applies(idx % self.p))
            .map(|(_, b)| b * b)
            .sum()
    }

    /// Gradient of [`Self::log_likelihood`].
    pub fn gradient(&self, beta: &[f64]) -> Vec<f64> {
        self.gradient_and_hessian(beta, false).0
    }

    fn gradient_and_hessian(&self, beta: &[f64], with_hessian: bool) -> (Vec<f64>, Option<DMatrix<f64>>) {
        let (p, k) = (self.p, self.k);
        let q = self.n_params();
        let probs = self.class_probs(beta);
        let mut resid = -probs.clone();
        for i in 0..self.n {
            if self.y[i] > 0 {
                resid[(i, self.y[i] - 1)] += 1.0;
            }
        }
        let mut g = self.x.tr_mul(&resid).as_slice().to_vec();
        let mut h = None;
        if with_hessian {
            let mut hm = DMatrix::<f64>::zeros(q, q);
            for s in 0..k - 1 {
                for t in s..k - 1 {
                    let w = DVector::from_fn(self.n, |i, _| {
                        let ps = probs[(i, s)];
                        if s == t {
                            ps * (1.0 - ps)
                        } else {
                            -ps * probs[(i, t)]
                        }
                    });
                    let mut xw = self.x.clone();
                    for mut c in xw.column_iter_mut() {
                        c.component_mul_assign(&w);
                    }
                    let block = self.x.tr_mul(&xw);
                    hm.view_mut((s * p, t * p), (p, p)).copy_from(&block);
                }
            }
            h = Some(hm);
        }
        if self.ridge > 0.0 {
            for (idx, gi) in g.iter_mut().enumerate() {
                if self.penalty_applies(idx % p) {
                    *gi -= self.ridge * beta[idx];
                }
            }
        }
        if let Some(h) = h.as_mut() {
            // Fill the lower blocks by symmetry; `h` holds the negative Hessian.
            for r in 0..q {
                for c in 0..r {
                    h[(r, c)] = h[(c, r)];
                }
            }
            if self.ridge > 0.0 {
                for idx in 0..q {
                    if self.penalty_applies(idx % p) {
                        h[(idx, idx)] += self.ridge;
                    }
                }
            }
        }
        (g, h)
    }

    /// Maximizes the log-likelihood with coefficients boxed in ±cap.
    /// Returns the parameters and whether any coefficient sits on the cap.
    pub fn fit(&self, opts: &LogitOptions) -> Result<LogitFit> {
        self.fit_from(opts, vec![0.0; self.n_params()])
    }

    /// [`Self::fit`] started from `beta` instead of zero.
    pub fn fit_from(&self, opts: &LogitOptions, mut beta: Vec<f64>) -> Result<LogitFit> {
        let q = self.n_params();
        if beta.len() != q {
            return Err(Error::shape(format!("start vector has {} entries, expected {q}", beta.len())));
        }
        for b in beta.iter_mut() {
            *b = b.clamp(-COEFFICIENT_CAP, COEFFICIENT_CAP);
        }
        let mut ll = self.log_likelihood(&beta);
        let mut iterations = 0;
        let mut converged = false;
        let mut score_norm = f64::INFINITY;
        for it in 0..opts.max_iterations {
            iterations = it + 1;
            let (g, h) = self.gradient_and_hessian(&beta, true);
            let h = h.unwrap();
            let free: Vec<usize> = (0..q)
                .filter(|&i| !(beta[i] >= COEFFICIENT_CAP && g[i] > 0.0) && !(beta[i] <= -COEFFICIENT_CAP && g[i] < 0.0))
                .collect();
            score_norm = free.iter().map(|&i| g[i].abs()).fold(0.0, f64::max);
            if score_norm < opts.tolerance {
                converged = true;
                break;
            }
            let m = free.len();
            let mut hf = DMatrix::<f64>::from_fn(m, m, |a, b| h[(free[a], free[b])]);
            let gf = DVector::<f64>::from_fn(m, |a, _| g[free[a]]);
            let scale = (0..m).map(|a| hf[(a, a)]).fold(0.0, f64::max).max(1.0);
            let mut jitter = 0.0;
            let step = loop {
                if let Some(ch) = hf.clone().cholesky() {
                    break ch.solve(&gf);
                }
                jitter = if jitter == 0.0 { 1e-10 * scale } else { jitter * 10.0 };
                if jitter > scale {
                    return Err(Error::Numerical("logit Hessian could not be regularized".into()));
                }
                for a in 0..m {
                    hf[(a, a)] += jitter;
                }
            };
            let mut t = 1.0;
            let mut improved = false;
            for _ in 0..60 {
                let mut cand = beta.clone();
                for (a, &i) in free.iter().enumerate() {
                    cand[i] = (beta[i] + t * step[a]).clamp(-COEFFICIENT_CAP, COEFFICIENT_CAP);
                }
                let cll = self.log_likelihood(&cand);
                if cll >= ll - 1e-12 * ll.abs().max(1.0) && cll.is_finite() {
                    let gain = cll - ll;
                    beta = cand;
                    ll = cll;
                    improved = gain > 0.0 || t == 1.0;
                    break;
                }
                t *= 0.5;
            }
            if !improved {
                // No ascent possible in floating point: treat as converged when the score is small.
                converged = score_norm < opts.tolerance.max(1e-6);
                break;
            }
        }
        let capped = beta.iter().any(|b| b.abs() >= COEFFICIENT_CAP);
        Ok(LogitFit {
            beta,
            log_likelihood: ll,
            iterations,
            converged,
            capped,
            score_norm,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogitFit {
    pub beta: Vec<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub capped: bool,
    /// Max-norm of the score over coefficients not held at the cap.
    pub score_norm: f64,
}

/// Replaces `v` by softmax(v); returns log Σ exp(v).
fn softmax_in_place(v: &mut [f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for x in v.iter_mut() {
        *x = (*x - m).exp();
        s += *x;
    }
    for x in v.iter_mut() {
        *x /= s;
    }
    m + s.ln()
}

/// Multinomial-logit transition model: P(next state | covariates).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateMarkovModel {
    pub states: Vec<String>,
    /// State whose linear predictor is fixed at zero (the first state).
    pub reference_state: String,
    /// Categories of each categorical covariate still in the model.
    pub categorical_covariates: BTreeMap<String, Vec<String>>,
    pub terms: Vec<Term>,
    /// One row per state, one entry per term; the reference row is zero.
    pub coefficients: Vec<Vec<f64>>,
    pub log_likelihood: f64,
    pub aic: f64,
    pub n_obs: usize,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

/// Keeps the columns of `terms` that are linearly independent of earlier ones.
fn drop_collinear(design: &LogitDesign, diagnostics: &mut Vec<String>) -> Vec<Term> {
    let p = design.p;
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    for j in 0..p {
        let mut v: Vec<f64> = design.x.column(j).iter().copied().collect();
        let norm0: f64 = v.iter().map(|a| a * a).sum();
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
                for (a, c) in v.iter_mut().zip(b) {
                    *a -= dot * c;
                }
            }
        }
        let norm: f64 = v.iter().map(|a| a * a).sum();
        if norm0 == 0.0 || norm <= 1e-10 * norm0 {
            let msg = format!("term '{}' is collinear with earlier terms and was dropped", design.terms[j]);
            log::warn!("{msg}");
            diagnostics.push(msg);
            continue;
        }
        let inv = norm.sqrt().recip();
        basis.push(v.into_iter().map(|a| a * inv).collect());
        kept.push(design.terms[j].clone());
    }
    kept
}

struct Candidate {
    terms: Vec<Term>,
    fit: LogitFit,
    aic: f64,
}

/// Coefficients of `parent` rearranged for `terms`; terms new to the model start at zero.
fn warm_start(parent: Option<&Candidate>, terms: &[Term], k: usize) -> Vec<f64> {
    let p = terms.len();
    let mut beta = vec![0.0; (k - 1) * p];
    if let Some(parent) = parent {
        let pp = parent.terms.len();
        for (j, t) in terms.iter().enumerate() {
            if let Some(jp) = parent.terms.iter().position(|x| x == t) {
                for s in 0..k - 1 {
                    beta[s * p + j] = parent.fit.beta[s * pp + jp];
                }
            }
        }
    }
    beta
}

fn fit_terms(
    data: &MixedDataset,
    target: &str,
    terms: Vec<Term>,
    opts: &LogitOptions,
    parent: Option<&Candidate>,
    diagnostics: &mut Vec<String>,
) -> Result<Candidate> {
    let full = LogitDesign::with_terms(data, target, terms)?.with_ridge(opts.ridge);
    let kept = drop_collinear(&full, diagnostics);
    let design = if kept.len() == full.p {
        full
    } else {
        LogitDesign::with_terms(data, target, kept)?.with_ridge(opts.ridge)
    };
    let fit = design.fit_from(opts, warm_start(parent, &design.terms, design.k))?;
    let aic = opts.penalty_per_parameter * design.n_params() as f64 - 2.0 * fit.log_likelihood;
    Ok(Candidate {
        terms: design.terms,
        fit,
        aic,
    })
}

fn terms_for(data: &MixedDataset, covariates: &[&str]) -> Result<Vec<Term>> {
    Ok(LogitDesign::from_dataset(data, &covariates_probe(data, covariates)?, covariates)?.terms)
}

/// Any categorical column works as a placeholder target when only the terms are needed.
fn covariates_probe(data: &MixedDataset, _covariates: &[&str]) -> Result<String> {
    data.schema()
        .iter()
        .find(|s| s.is_categorical())
        .map(|s| s.name.clone())
        .ok_or_else(|| Error::Schema("logit target must be a categorical column".into()))
}

/// Fits P(`target` | covariates) by maximum likelihood, with optional
/// backward elimination of whole covariates by AIC.
pub fn fit_multinomial_logit(
    data: &MixedDataset,
    target: &str,
    candidates: &[&str],
    opts: &LogitOptions,
) -> Result<CovariateMarkovModel> {
    let t = data.index_of(target)?;
    let target_schema = &data.schema()[t];
    if !target_schema.is_categorical() {
        return Err(Error::Schema(format!("target '{target}' must be categorical")));
    }
    if candidates.contains(&target) {
        return Err(Error::config(format!("target '{target}' cannot also be a covariate")));
    }
    if data.n_rows() < 10 * candidates.len().max(1) {
        return Err(Error::InsufficientData(format!(
            "{} rows for {} candidate covariates (need 10 per covariate)",
            data.n_rows(),
            candidates.len()
        )));
    }
    let mut diagnostics = Vec::new();
    let mut current: Vec<&str> = candidates.to_vec();
    let mut best = fit_terms(data, target, terms_for(data, &current)?, opts, None, &mut diagnostics)?;
    if opts.stepwise {
        while !current.is_empty() {
            let trials: Vec<Candidate> = (0..current.len())
                .into_par_iter()
                .map(|drop| {
                    let reduced: Vec<&str> = current.iter().enumerate().filter(|(i, _)| *i != drop).map(|(_, c)| *c).collect();
                    let mut scratch = Vec::new();
                    fit_terms(data, target, terms_for(data, &reduced)?, opts, Some(&best), &mut scratch)
                })
                .collect::<Result<_>>()?;
            // Lowest AIC wins; ties go to the earliest candidate.
            let mut trial_best: Option<(usize, Candidate)> = None;
            for (drop, cand) in trials.into_iter().enumerate() {
                if trial_best.as_ref().is_none_or(|(_, b)| cand.aic < b.aic) {
                    trial_best = Some((drop, cand));
                }
            }
            let (drop, cand) = trial_best.unwrap();
            if cand.aic < best.aic {
                log::debug!("stepwise: dropping '{}' (AIC {} -> {})", current[drop], best.aic, cand.aic);
                current.remove(drop);
                best = cand;
            } else {
                break;
            }
        }
    }
    if best.fit.capped {
        let msg = format!("separation detected for '{target}': coefficients capped at ±{COEFFICIENT_CAP}");
        log::warn!("{msg}");
        diagnostics.push(msg);
    }
    if !best.fit.converged {
        let msg = format!("logit fit for '{target}' stopped before convergence (score {:e})", best.fit.score_norm);
        log::warn!("{msg}");
        diagnostics.push(msg);
    }
    let k = target_schema.categories.len();
    let p = best.terms.len();
    let mut coefficients = vec![vec![0.0; p]; k];
    for s in 1..k {
        coefficients[s].copy_from_slice(&best.fit.beta[(s - 1) * p..s * p]);
    }
    let mut categorical_covariates = BTreeMap::new();
    for term in &best.terms {
        if let Term::Level(c, _) = term {
            let j = data.index_of(c)?;
            categorical_covariates.insert(c.clone(), data.schema()[j].categories.clone());
        }
    }
    Ok(CovariateMarkovModel {
        states: target_schema.categories.clone(),
        reference_state: target_schema.categories[0].clone(),
        categorical_covariates,
        terms: best.terms,
        coefficients,
        log_likelihood: best.fit.log_likelihood,
        aic: best.aic,
        n_obs: data.n_rows(),
        diagnostics,
    })
}

/// Column lookup for a model whose covariates live at fixed row positions.
#[derive(Debug, Clone)]
pub struct BoundLogit<'a> {
    model: &'a CovariateMarkovModel,
    extract: Vec<Extract>,
}

#[derive(Debug, Clone, Copy)]
enum Extract {
    One,
    Value(usize),
    Level(usize, f64),
}

impl CovariateMarkovModel {
    /// Names of the covariates used by the retained terms, in term order.
    pub fn covariates(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for t in &self.terms {
            if let Some(c) = t.covariate() {
                if !out.contains(&c) {
                    out.push(c);
                }
            }
        }
        out
    }

    /// Flattened non-reference coefficients, in [`LogitDesign`] layout.
    pub fn parameters(&self) -> Vec<f64> {
        self.coefficients[1..].iter().flatten().copied().collect()
    }

    /// The design this model's parameters refer to, built on `data`.
    pub fn design(&self, data: &MixedDataset, target: &str) -> Result<LogitDesign> {
        LogitDesign::with_terms(data, target, self.terms.clone())
    }

    /// Resolves the model's covariates against row positions named by `columns`.
    pub fn bind(&self, columns: &[&str]) -> Result<BoundLogit<'_>> {
        let pos = |c: &str| {
            columns
                .iter()
                .position(|x| *x == c)
                .ok_or_else(|| Error::domain(format!("missing covariate '{c}'")))
        };
        let mut extract = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            extract.push(match t {
                Term::Intercept => Extract::One,
                Term::Value(c) => Extract::Value(pos(c)?),
                Term::Level(c, l) => {
                    let cats = self
                        .categorical_covariates
                        .get(c)
                        .ok_or_else(|| Error::Schema(format!("no categories recorded for '{c}'")))?;
                    let code = cats
                        .iter()
                        .position(|x| x == l)
                        .ok_or_else(|| Error::Schema(format!("'{c}' has no category '{l}'")))?;
                    Extract::Level(pos(c)?, code as f64)
                }
            });
        }
        Ok(BoundLogit { model: self, extract })
    }

    /// Transition probabilities for named covariate values. Categorical
    /// covariates are given as category codes.
    pub fn transition_probs(&self, covariates: &HashMap<String, f64>) -> Result<Vec<f64>> {
        let names: Vec<&str> = self.covariates();
        let mut row = Vec::with_capacity(names.len());
        for c in &names {
            let v = *covariates.get(*c).ok_or_else(|| Error::domain(format!("missing covariate '{c}'")))?;
            if !v.is_finite() {
                return Err(Error::domain(format!("covariate '{c}' is not finite")));
            }
            row.push(v);
        }
        let bound = self.bind(&names)?;
        let mut out = vec![0.0; self.states.len()];
        bound.probs_into(&row, &mut out);
        Ok(out)
    }
}

impl BoundLogit<'_> {
    pub fn probs_into(&self, row: &[f64], out: &mut [f64]) {
        for (s, coef) in self.model.coefficients.iter().enumerate() {
            out[s] = self
                .extract
                .iter()
                .zip(coef)
                .map(|(e, c)| {
                    let x = match *e {
                        Extract::One => 1.0,
                        Extract::Value(i) => row[i],
                        Extract::Level(i, code) => f64::from(row[i] == code),
                    };
                    x * c
                })
                .sum();
        }
        softmax_in_place(out);
    }

    pub fn probs(&self, row: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.model.states.len()];
        self.probs_into(row, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ColumnSchema;
    use crate::rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn model_with(coefficients: Vec<Vec<f64>>, terms: Vec<Term>) -> CovariateMarkovModel {
        let k = coefficients.len();
        CovariateMarkovModel {
            states: (0..k).map(|s| format!("s{s}")).collect(),
            reference_state: "s0".into(),
            categorical_covariates: BTreeMap::new(),
            terms,
            coefficients,
            log_likelihood: 0.0,
            aic: 0.0,
            n_obs: 0,
            diagnostics: vec![],
        }
    }

    #[test]
    fn zero_coefficients_are_uniform() {
        let m = model_with(vec![vec![0.0]; 3], vec![Term::Intercept]);
        let p = m.transition_probs(&HashMap::new()).unwrap();
        for x in p {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn binary_logistic_link() {
        let m = model_with(vec![vec![0.0, 0.0], vec![0.5, 2.0]], vec![Term::Intercept, Term::Value("x".into())]);
        let eta: f64 = 0.5 + 2.0 * 0.3;
        let p = m.transition_probs(&HashMap::from([("x".to_string(), 0.3)])).unwrap();
        assert!((p[1] - 1.0 / (1.0 + (-eta).exp())).abs() < 1e-15);
        let p = m.transition_probs(&HashMap::from([("x".to_string(), -0.25)])).unwrap();
        assert!((p[1] - 0.5).abs() < 1e-15);
        assert!(m.transition_probs(&HashMap::new()).is_err());
    }

    #[test]
    fn softmax_arithmetic() {
        let m = model_with(vec![vec![0.0], vec![1.2], vec![-0.3]], vec![Term::Intercept]);
        let p = m.transition_probs(&HashMap::new()).unwrap();
        let z = 1.0 + 1.2f64.exp() + (-0.3f64).exp();
        assert!((p[0] - 1.0 / z).abs() < 1e-15);
        assert!((p[1] - 1.2f64.exp() / z).abs() < 1e-15);
        assert!((p[2] - (-0.3f64).exp() / z).abs() < 1e-15);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    fn binary_data(x: Vec<f64>, y: Vec<u32>, noise: Option<Vec<f64>>) -> MixedDataset {
        let mut schema = vec![ColumnSchema::continuous("x"), ColumnSchema::categorical("y", ["A", "B"])];
        let mut cols = vec![Column::Continuous(x), Column::Categorical(y)];
        if let Some(z) = noise {
            schema.push(ColumnSchema::continuous("z"));
            cols.push(Column::Continuous(z));
        }
        MixedDataset::new(schema, cols).unwrap()
    }

    #[test]
    fn separable_data_is_capped() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 / 4.0 - 5.0 + 0.125).collect();
        let y = x.iter().map(|&v| u32::from(v > 0.0)).collect();
        let data = binary_data(x, y, None);
        let opts = LogitOptions {
            stepwise: false,
            ..LogitOptions::default()
        };
        let m = fit_multinomial_logit(&data, "y", &["x"], &opts).unwrap();
        assert!(m.diagnostics.iter().any(|d| d.contains("separation")));
        let p = m.transition_probs(&HashMap::from([("x".to_string(), 3.0)])).unwrap();
        assert!(p[1] > 0.95);
        assert!(m.coefficients[1].iter().all(|c| c.abs() <= COEFFICIENT_CAP));
    }

    /// Two-class fit compared with a Newton solve of the 1-D logistic score equations.
    #[test]
    fn matches_binary_oracle_and_score_vanishes() {
        let mut r = rng::from_seed(4);
        let n = 400;
        let x: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
        let y: Vec<u32> = x
            .iter()
            .map(|&v| u32::from(r.random::<f64>() < 1.0 / (1.0 + (-(0.3 + 1.1 * v)).exp())))
            .collect();
        let data = binary_data(x.clone(), y.clone(), None);
        let opts = LogitOptions {
            stepwise: false,
            ..LogitOptions::default()
        };
        let m = fit_multinomial_logit(&data, "y", &["x"], &opts).unwrap();
        // Oracle: plain 2x2 Newton iterations written out by hand.
        let (mut a, mut b) = (0.0f64, 0.0f64);
        for _ in 0..50 {
            let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (xi, &yi) in x.iter().zip(&y) {
                let p = 1.0 / (1.0 + (-(a + b * xi)).exp());
                let res = yi as f64 - p;
                ga += res;
                gb += res * xi;
                let w = p * (1.0 - p);
                haa += w;
                hab += w * xi;
                hbb += w * xi * xi;
            }
            let det = haa * hbb - hab * hab;
            a += (hbb * ga - hab * gb) / det;
            b += (haa * gb - hab * ga) / det;
        }
        assert!((m.coefficients[1][0] - a).abs() < 1e-8);
        assert!((m.coefficients[1][1] - b).abs() < 1e-8);
        let design = m.design(&data, "y").unwrap();
        let g = design.gradient(&m.parameters());
        assert!(g.iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut r = rng::from_seed(9);
        let n = 200;
        let x: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
        let z: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
        let g: Vec<u32> = (0..n).map(|_| r.random_range(0..3)).collect();
        let data = MixedDataset::new(
            vec![
                ColumnSchema::continuous("x"),
                ColumnSchema::continuous("z"),
                ColumnSchema::categorical("g", ["a", "b", "c"]),
            ],
            vec![Column::Continuous(x), Column::Continuous(z), Column::Categorical(g)],
        )
        .unwrap();
        let design = LogitDesign::from_dataset(&data, "g", &["x", "z"]).unwrap().with_ridge(0.3);
        for _ in 0..5 {
            let beta: Vec<f64> = (0..design.n_params()).map(|_| r.random_range(-1.0..1.0)).collect();
            let grad = design.gradient(&beta);
            for i in 0..beta.len() {
                let h = 1e-5;
                let mut up = beta.clone();
                up[i] += h;
                let mut dn = beta.clone();
                dn[i] -= h;
                let fd = (design.log_likelihood(&up) - design.log_likelihood(&dn)) / (2.0 * h);
                assert!((fd - grad[i]).abs() <= 1e-4 * grad[i].abs().max(1.0), "{fd} vs {}", grad[i]);
            }
        }
    }

    fn noise_removal_rate(opts: &LogitOptions, seeds: u64) -> f64 {
        let mut removed = 0;
        for seed in 0..seeds {
            let mut r = rng::from_seed(100 + seed);
            let n = 300;
            let z: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
            let y: Vec<u32> = (0..n).map(|i| (i % 2) as u32).collect();
            let x: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
            let data = binary_data(x, y, Some(z));
            let m = fit_multinomial_logit(&data, "y", &["z"], opts).unwrap();
            if m.terms == vec![Term::Intercept] {
                removed += 1;
            }
        }
        removed as f64 / seeds as f64
    }

    /// Under AIC a single noise covariate survives when the likelihood-ratio
    /// statistic exceeds 2, so removal happens with P(χ²₁ < 2) = 0.8427.
    #[test]
    fn noise_covariate_removal_rate_under_aic() {
        let rate = noise_removal_rate(&LogitOptions::default(), 200);
        // ±4 binomial standard deviations at 200 seeds.
        assert!((rate - 0.8427).abs() < 0.104, "{rate}");
    }

    #[test]
    fn noise_covariate_removed_under_bic_penalty() {
        let opts = LogitOptions {
            penalty_per_parameter: 300f64.ln(),
            ..LogitOptions::default()
        };
        let rate = noise_removal_rate(&opts, 100);
        assert!(rate >= 0.9, "{rate}");
    }

    #[test]
    fn collinear_column_dropped() {
        let x: Vec<f64> = (0..60).map(|i| (i as f64 * 0.7).sin()).collect();
        let y: Vec<u32> = (0..60).map(|i| (i % 2) as u32).collect();
        let twice: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let data = binary_data(x, y, Some(twice));
        let opts = LogitOptions {
            stepwise: false,
            ..LogitOptions::default()
        };
        let m = fit_multinomial_logit(&data, "y", &["x", "z"], &opts).unwrap();
        assert_eq!(m.terms, vec![Term::Intercept, Term::Value("x".into())]);
        assert!(m.diagnostics.iter().any(|d| d.contains("collinear")));
    }

    #[test]
    fn too_few_rows() {
        let data = binary_data(vec![0.0; 5], vec![0, 1, 0, 1, 0], None);
        assert!(fit_multinomial_logit(&data, "y", &["x"], &LogitOptions::default()).is_err());
    }
}
