//! Bivariate copula families used as vine building blocks.

use crate::error::{Error, Result};
use crate::stats::{bivariate_norm_cdf, brent_minimize, kendall_tau, norm_cdf, norm_quantile};
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicU64, Ordering};

/// Lower/upper bound applied to conditional probabilities.
pub const H_CLAMP: f64 = 1e-12;

pub const GAUSSIAN_RHO_MAX: f64 = 0.9999;
pub const CLAYTON_THETA_MAX: f64 = 50.0;
pub const GUMBEL_THETA_MAX: f64 = 50.0;
pub const FRANK_THETA_MAX: f64 = 50.0;

static CLAMP_EVENTS: AtomicU64 = AtomicU64::new(0);

/// Number of h-function evaluations clamped so far in this process.
pub fn clamp_events() -> u64 {
    CLAMP_EVENTS.load(Ordering::Relaxed)
}

#[inline]
fn clamp_prob(p: f64) -> f64 {
    if p.is_nan() {
        CLAMP_EVENTS.fetch_add(1, Ordering::Relaxed);
        return 0.5;
    }
    if p < H_CLAMP {
        CLAMP_EVENTS.fetch_add(1, Ordering::Relaxed);
        H_CLAMP
    } else if p > 1.0 - H_CLAMP {
        CLAMP_EVENTS.fetch_add(1, Ordering::Relaxed);
        1.0 - H_CLAMP
    } else {
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Independence,
    Gaussian,
    Clayton,
    Gumbel,
    Frank,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Independence,
        Family::Gaussian,
        Family::Clayton,
        Family::Gumbel,
        Family::Frank,
    ];

    pub fn n_params(self) -> usize {
        match self {
            Family::Independence => 0,
            _ => 1,
        }
    }

    /// Families whose tail behaviour differs between the corners, and which
    /// therefore come in rotated versions.
    pub fn is_rotatable(self) -> bool {
        matches!(self, Family::Clayton | Family::Gumbel)
    }
}

/// Counter-clockwise rotation of the copula density, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u16", into = "u16")]
pub enum Rotation {
    R0,
    R90,
    R180,
    R270,
}

impl From<Rotation> for u16 {
    fn from(r: Rotation) -> u16 {
        match r {
            Rotation::R0 => 0,
            Rotation::R90 => 90,
            Rotation::R180 => 180,
            Rotation::R270 => 270,
        }
    }
}

impl TryFrom<u16> for Rotation {
    type Error = String;
    fn try_from(d: u16) -> std::result::Result<Self, String> {
        match d {
            0 => Ok(Rotation::R0),
            90 => Ok(Rotation::R90),
            180 => Ok(Rotation::R180),
            270 => Ok(Rotation::R270),
            _ => Err(format!("invalid rotation {d}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCopula {
    pub family: Family,
    pub theta: f64,
    pub rotation: Rotation,
}

fn check_unit_open(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must lie in (0,1), got {x}")))
    }
}

impl PairCopula {
    pub fn independence() -> Self {
        Self {
            family: Family::Independence,
            theta: 0.0,
            rotation: Rotation::R0,
        }
    }

    pub fn new(family: Family, theta: f64, rotation: Rotation) -> Result<Self> {
        let ok = match family {
            Family::Independence => true,
            Family::Gaussian => theta > -1.0 && theta < 1.0,
            Family::Clayton => theta > 0.0 && theta.is_finite(),
            Family::Gumbel => theta >= 1.0 && theta.is_finite(),
            Family::Frank => theta != 0.0 && theta.is_finite(),
        };
        if !ok {
            return Err(Error::domain(format!("parameter {theta} outside the {family:?} domain")));
        }
        if rotation != Rotation::R0 && !family.is_rotatable() {
            return Err(Error::domain(format!("{family:?} copula cannot be rotated")));
        }
        let theta = if family == Family::Independence { 0.0 } else { theta };
        Ok(Self {
            family,
            theta,
            rotation,
        })
    }

    pub fn n_params(&self) -> usize {
        self.family.n_params()
    }

    /// Copula with its arguments swapped: C'(u, v) = C(v, u).
    pub fn transpose(&self) -> Self {
        let rotation = match self.rotation {
            Rotation::R90 => Rotation::R270,
            Rotation::R270 => Rotation::R90,
            r => r,
        };
        Self { rotation, ..*self }
    }

    /// Population Kendall's tau implied by the parameter.
    pub fn kendall_tau(&self) -> f64 {
        let base = match self.family {
            Family::Independence => 0.0,
            Family::Gaussian => std::f64::consts::FRAC_2_PI * self.theta.asin(),
            Family::Clayton => self.theta / (self.theta + 2.0),
            Family::Gumbel => 1.0 - 1.0 / self.theta,
            Family::Frank => frank_tau(self.theta),
        };
        match self.rotation {
            Rotation::R90 | Rotation::R270 => -base,
            _ => base,
        }
    }

    /// C(u, v) on the closed unit square.
    pub fn cdf(&self, u: f64, v: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
            return Err(Error::domain(format!("copula cdf needs (u,v) in [0,1]², got ({u},{v})")));
        }
        if u == 0.0 || v == 0.0 {
            return Ok(0.0);
        }
        if u == 1.0 {
            return Ok(v);
        }
        if v == 1.0 {
            return Ok(u);
        }
        let c = match self.rotation {
            Rotation::R0 => self.base_cdf(u, v),
            Rotation::R90 => v - self.base_cdf(1.0 - u, v),
            Rotation::R180 => u + v - 1.0 + self.base_cdf(1.0 - u, 1.0 - v),
            Rotation::R270 => u - self.base_cdf(u, 1.0 - v),
        };
        Ok(c.clamp(0.0, u.min(v)))
    }

    pub fn pdf(&self, u: f64, v: f64) -> Result<f64> {
        check_unit_open("u", u)?;
        check_unit_open("v", v)?;
        Ok(self.log_pdf_unchecked(u, v).exp())
    }

    /// Conditional distribution h(u | v) = ∂C(u, v)/∂v.
    pub fn h(&self, u: f64, v: f64) -> Result<f64> {
        check_unit_open("u", u)?;
        check_unit_open("v", v)?;
        Ok(self.h_unchecked(u, v))
    }

    /// Solves h(u | v) = p for u.
    pub fn inverse_h(&self, p: f64, v: f64) -> Result<f64> {
        check_unit_open("p", p)?;
        check_unit_open("v", v)?;
        Ok(self.inverse_h_unchecked(p, v))
    }

    pub(crate) fn log_pdf_unchecked(&self, u: f64, v: f64) -> f64 {
        match self.rotation {
            Rotation::R0 => self.base_log_pdf(u, v),
            Rotation::R90 => self.base_log_pdf(1.0 - u, v),
            Rotation::R180 => self.base_log_pdf(1.0 - u, 1.0 - v),
            Rotation::R270 => self.base_log_pdf(u, 1.0 - v),
        }
    }

    pub(crate) fn h_unchecked(&self, u: f64, v: f64) -> f64 {
        clamp_prob(self.h_raw(u, v))
    }

    /// h(u | v) for u in [0, 1] without clamping or event counting.
    fn h_closed(&self, u: f64, v: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        let p = self.h_raw(u, v);
        if p.is_nan() {
            0.5
        } else {
            p.clamp(0.0, 1.0)
        }
    }

    fn h_raw(&self, u: f64, v: f64) -> f64 {
        match self.rotation {
            Rotation::R0 => self.base_h(u, v),
            Rotation::R90 => 1.0 - self.base_h(1.0 - u, v),
            Rotation::R180 => 1.0 - self.base_h(1.0 - u, 1.0 - v),
            Rotation::R270 => self.base_h(u, 1.0 - v),
        }
    }

    pub(crate) fn inverse_h_unchecked(&self, p: f64, v: f64) -> f64 {
        let raw = match self.rotation {
            Rotation::R0 => self.base_inverse_h(p, v),
            Rotation::R90 => 1.0 - self.base_inverse_h(1.0 - p, v),
            Rotation::R180 => 1.0 - self.base_inverse_h(1.0 - p, 1.0 - v),
            Rotation::R270 => self.base_inverse_h(p, 1.0 - v),
        };
        clamp_prob(raw)
    }

    fn base_cdf(&self, u: f64, v: f64) -> f64 {
        let t = self.theta;
        match self.family {
            Family::Independence => u * v,
            Family::Gaussian => bivariate_norm_cdf(norm_quantile(u), norm_quantile(v), t),
            Family::Clayton => (-clayton_log_sum(u, v, t) / t).exp(),
            Family::Gumbel => {
                let (_, w) = gumbel_parts(u, v, t);
                (-w).exp()
            }
            Family::Frank => {
                let num = (-t * u).exp_m1() * (-t * v).exp_m1();
                -(num / (-t).exp_m1()).ln_1p() / t
            }
        }
    }

    fn base_log_pdf(&self, u: f64, v: f64) -> f64 {
        let t = self.theta;
        match self.family {
            Family::Independence => 0.0,
            Family::Gaussian => {
                let x = norm_quantile(u);
                let y = norm_quantile(v);
                let one_m = 1.0 - t * t;
                -0.5 * one_m.ln() - (t * t * (x * x + y * y) - 2.0 * t * x * y) / (2.0 * one_m)
            }
            Family::Clayton => {
                (1.0 + t).ln() - (1.0 + t) * (u.ln() + v.ln()) - (2.0 + 1.0 / t) * clayton_log_sum(u, v, t)
            }
            Family::Gumbel => {
                let (ln_s, w) = gumbel_parts(u, v, t);
                let lu = -u.ln();
                let lv = -v.ln();
                -w + lu + lv + (2.0 / t - 2.0) * ln_s + (t - 1.0) * (lu.ln() + lv.ln()) + ((t - 1.0) / w).ln_1p()
            }
            Family::Frank => {
                let d = (-t).exp_m1() + (-t * u).exp_m1() * (-t * v).exp_m1();
                (-t * (-t).exp_m1()).ln() - t * (u + v) - 2.0 * d.abs().ln()
            }
        }
    }

    fn base_h(&self, u: f64, v: f64) -> f64 {
        let t = self.theta;
        match self.family {
            Family::Independence => u,
            Family::Gaussian => {
                let x = norm_quantile(u);
                let y = norm_quantile(v);
                norm_cdf((x - t * y) / (1.0 - t * t).sqrt())
            }
            Family::Clayton => (-(1.0 + 1.0 / t) * softplus(clayton_log_w(u, v, t))).exp(),
            Family::Gumbel => {
                // With r = (ln u / ln v)^θ: ln h = −(−ln v)((1+r)^{1/θ} − 1) + (1/θ − 1) ln(1+r).
                let lv = -v.ln();
                let l1 = softplus(t * ((-u.ln()).ln() - lv.ln()));
                (-lv * (l1 / t).exp_m1() + (1.0 / t - 1.0) * l1).exp()
            }
            Family::Frank => {
                let a = (-t * u).exp_m1();
                let b = (-t * v).exp_m1();
                (-t * v).exp() * a / ((-t).exp_m1() + a * b)
            }
        }
    }

    fn base_inverse_h(&self, p: f64, v: f64) -> f64 {
        let t = self.theta;
        match self.family {
            Family::Independence => p,
            Family::Gaussian => norm_cdf(t * norm_quantile(v) + (1.0 - t * t).sqrt() * norm_quantile(p)),
            Family::Clayton => {
                // p = (1 + w)^{-(1+θ)/θ} with w = v^θ (u^{-θ} − 1).
                let ln_w = ln_expm1(-t / (1.0 + t) * p.ln());
                (-softplus(ln_w - t * v.ln()) / t).exp()
            }
            Family::Gumbel => self.invert_h_numerically(p, v),
            Family::Frank => {
                let b = (-t * v).exp();
                let a = p * (-t).exp_m1() / (b + p * (1.0 - b));
                -a.ln_1p() / t
            }
        }
    }

    /// Safeguarded Newton on u ↦ h(u | v) − p, which is increasing in u.
    fn invert_h_numerically(&self, p: f64, v: f64) -> f64 {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let mut u = p;
        for _ in 0..200 {
            let f = self.base_h(u, v) - p;
            if f.abs() < 1e-15 {
                return u;
            }
            if f > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
            let dens = self.base_log_pdf(u, v).exp();
            let newton = u - f / dens;
            u = if dens.is_finite() && dens > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo < 1e-16 {
                break;
            }
        }
        u
    }
}

/// ln(v^θ (u^{-θ} − 1)), the quantity that drives every Clayton expression.
fn clayton_log_w(u: f64, v: f64, t: f64) -> f64 {
    t * v.ln() + ln_expm1(-t * u.ln())
}

/// ln(u^{-θ} + v^{-θ} − 1) without overflow for small arguments.
fn clayton_log_sum(u: f64, v: f64, t: f64) -> f64 {
    -t * v.ln() + softplus(clayton_log_w(u, v, t))
}

/// ln(eˣ − 1) for x > 0.
fn ln_expm1(x: f64) -> f64 {
    if x > 30.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}

/// ln(1 + eˣ).
fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Returns (ln S, S^{1/θ}) with S = (−ln u)^θ + (−ln v)^θ.
fn gumbel_parts(u: f64, v: f64, t: f64) -> (f64, f64) {
    let a = t * (-u.ln()).ln();
    let b = t * (-v.ln()).ln();
    let ln_s = a.max(b) + (-(a - b).abs()).exp().ln_1p();
    (ln_s, (ln_s / t).exp())
}

/// Kendall's tau of the Frank copula via the first Debye function.
fn frank_tau(theta: f64) -> f64 {
    let t = theta.abs();
    if t < 1e-8 {
        return 0.0;
    }
    // D1(t) = (1/t) ∫_0^t s/(e^s − 1) ds by composite Simpson.
    let n = 400;
    let h = t / n as f64;
    let f = |s: f64| if s == 0.0 { 1.0 } else { s / s.exp_m1() };
    let mut acc = f(0.0) + f(t);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    let d1 = acc * h / 3.0 / t;
    let tau = 1.0 - 4.0 * (1.0 - d1) / t;
    tau.copysign(theta)
}

/// Outcome of selecting a pair copula for one pair of samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCopulaFit {
    pub copula: PairCopula,
    pub log_likelihood: f64,
    pub aic: f64,
    /// Candidates dropped because their optimizer failed.
    pub excluded: Vec<String>,
}

fn log_likelihood(c: &PairCopula, u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(&a, &b)| c.log_pdf_unchecked(a, b)).sum()
}

/// Level of the Kendall-tau independence test run before likelihood fitting.
pub const INDEPENDENCE_TEST_LEVEL: f64 = 0.05;

/// Maximum-likelihood fit per family with AIC selection.
pub fn fit_pair_copula(u: &[f64], v: &[f64]) -> Result<PairCopula> {
    fit_pair_copula_detailed(u, v, Some(INDEPENDENCE_TEST_LEVEL)).map(|f| f.copula)
}

/// Two-sided p-value of the asymptotic normal test of τ = 0.
pub fn tau_independence_pvalue(tau: f64, n: usize) -> f64 {
    let n = n as f64;
    let z = (9.0 * n * (n - 1.0) / (2.0 * (2.0 * n + 5.0))).sqrt() * tau.abs();
    2.0 * crate::stats::norm_sf(z)
}

/// Like [`fit_pair_copula`], with an explicit independence pre-test level.
/// When the test does not reject at `independence_level`, the independence
/// copula is returned without fitting; `None` skips the test and leaves the
/// choice to AIC alone.
pub fn fit_pair_copula_detailed(u: &[f64], v: &[f64], independence_level: Option<f64>) -> Result<PairCopulaFit> {
    check_pair(u, v)?;
    select_copula(kendall_tau(u, v)?, u.len(), independence_level, |c| log_likelihood(c, u, v))
}

/// One margin value on the copula scale: a point for a continuous variable,
/// or the interval [F(x−), F(x)] for a discrete one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    Point(f64),
    Interval(f64, f64),
}

/// Smallest per-observation likelihood contribution before taking the log.
const MIXED_LIKELIHOOD_FLOOR: f64 = 1e-300;

fn mixed_log_likelihood(c: &PairCopula, u: &[Observation], v: &[Observation]) -> f64 {
    let t = c.transpose();
    u.iter()
        .zip(v)
        .map(|(a, b)| match (*a, *b) {
            (Observation::Point(x), Observation::Point(y)) => c.log_pdf_unchecked(x, y),
            (Observation::Interval(lo, hi), Observation::Point(y)) => (c.h_closed(hi, y) - c.h_closed(lo, y)).max(MIXED_LIKELIHOOD_FLOOR).ln(),
            (Observation::Point(x), Observation::Interval(lo, hi)) => (t.h_closed(hi, x) - t.h_closed(lo, x)).max(MIXED_LIKELIHOOD_FLOOR).ln(),
            (Observation::Interval(ul, uh), Observation::Interval(vl, vh)) => {
                let cdf = |p: f64, q: f64| c.cdf(p, q).unwrap_or(0.0);
                (cdf(uh, vh) - cdf(ul, vh) - cdf(uh, vl) + cdf(ul, vl)).max(MIXED_LIKELIHOOD_FLOOR).ln()
            }
        })
        .sum()
}

/// Pair-copula selection for mixed continuous/discrete margins.
///
/// `u` and `v` are the jittered pseudo-observations, used for the tau-based
/// pre-test and candidate rotations; parameters are estimated from the exact
/// likelihood of `obs_u` and `obs_v`, where discrete values contribute the
/// copula mass of their interval rather than a density.
pub fn fit_pair_copula_mixed(
    u: &[f64],
    v: &[f64],
    obs_u: &[Observation],
    obs_v: &[Observation],
    independence_level: Option<f64>,
) -> Result<PairCopulaFit> {
    check_pair(u, v)?;
    if obs_u.len() != u.len() || obs_v.len() != v.len() {
        return Err(Error::shape("observation lengths differ from the pseudo-observations"));
    }
    for o in obs_u.iter().chain(obs_v) {
        let ok = match *o {
            Observation::Point(x) => x > 0.0 && x < 1.0,
            Observation::Interval(lo, hi) => (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo < hi,
        };
        if !ok {
            return Err(Error::domain(format!("invalid margin observation {o:?}")));
        }
    }
    select_copula(kendall_tau(u, v)?, u.len(), independence_level, |c| mixed_log_likelihood(c, obs_u, obs_v))
}

fn check_pair(u: &[f64], v: &[f64]) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::shape(format!("pair lengths differ: {} vs {}", u.len(), v.len())));
    }
    if u.len() < 20 {
        return Err(Error::InsufficientData(format!(
            "pair copula fit needs at least 20 observations, got {}",
            u.len()
        )));
    }
    for (&a, &b) in u.iter().zip(v) {
        check_unit_open("pseudo-observation", a)?;
        check_unit_open("pseudo-observation", b)?;
    }
    Ok(())
}

fn select_copula(tau: f64, n: usize, independence_level: Option<f64>, log_lik: impl Fn(&PairCopula) -> f64) -> Result<PairCopulaFit> {
    let positive = tau >= 0.0;
    let mut best = PairCopulaFit {
        copula: PairCopula::independence(),
        log_likelihood: log_lik(&PairCopula::independence()),
        aic: 0.0,
        excluded: Vec::new(),
    };
    best.aic = -2.0 * best.log_likelihood;
    if let Some(level) = independence_level {
        if tau_independence_pvalue(tau, n) > level {
            return Ok(best);
        }
    }
    let rotations: [Rotation; 2] = if positive {
        [Rotation::R0, Rotation::R180]
    } else {
        [Rotation::R90, Rotation::R270]
    };
    let mut candidates: Vec<(Family, Rotation, f64, f64)> = vec![
        (Family::Gaussian, Rotation::R0, -GAUSSIAN_RHO_MAX, GAUSSIAN_RHO_MAX),
        if positive {
            (Family::Frank, Rotation::R0, 1e-6, FRANK_THETA_MAX)
        } else {
            (Family::Frank, Rotation::R0, -FRANK_THETA_MAX, -1e-6)
        },
    ];
    for r in rotations {
        candidates.push((Family::Clayton, r, 1e-6, CLAYTON_THETA_MAX));
        candidates.push((Family::Gumbel, r, 1.0, GUMBEL_THETA_MAX));
    }

    for (family, rotation, lo, hi) in candidates {
        let objective = |theta: f64| {
            let c = PairCopula {
                family,
                theta,
                rotation,
            };
            -log_lik(&c)
        };
        let m = brent_minimize(objective, lo, hi, 1e-8, 200);
        let label = format!("{family:?}/{}", u16::from(rotation)).to_lowercase();
        if !m.converged || !m.value.is_finite() {
            log::debug!("pair copula candidate {label} excluded: optimizer did not converge");
            best.excluded.push(label);
            continue;
        }
        let ll = -m.value;
        let aic = 2.0 * family.n_params() as f64 - 2.0 * ll;
        if aic < best.aic {
            best.copula = PairCopula {
                family,
                theta: m.x,
                rotation,
            };
            best.log_likelihood = ll;
            best.aic = aic;
        }
    }
    Ok(best)
}
