//! Closed-form contraction factors and step lengths for gradient
//! descent-ascent.
//!
//! Every checked function validates its parameters and requires the step to
//! lie strictly inside the open admissible interval (see
//! [`StepInterval::contains`]). The `*_formula` functions evaluate the raw
//! closed forms without any checks and are meant for endpoint and limit
//! evaluations.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{ProblemParams, StepInterval};

/// Contraction factor together with the step it was evaluated at and the
/// admissible step interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateResult {
    pub alpha: f64,
    pub step: f64,
    pub valid_interval: StepInterval,
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParams("arguments must be finite".into()))
    }
}

fn check_mu_l(l: f64, mu: f64) -> Result<()> {
    if mu <= 0.0 || mu > l {
        return Err(Error::InvalidParams(format!(
            "need 0 < mu <= L, got mu = {mu}, L = {l}"
        )));
    }
    Ok(())
}

fn check_lxy(lxy: f64) -> Result<()> {
    if lxy < 0.0 {
        return Err(Error::InvalidParams(format!("Lxy = {lxy} must be nonnegative")));
    }
    Ok(())
}

/// Classical rate `1 + 4L²t² − 2μt` from the strongly monotone operator view,
/// valid for `t ∈ (0, μ/(2L²))`.
pub fn baseline_rate(l: f64, mu: f64, t: f64) -> Result<f64> {
    check_finite(&[l, mu, t])?;
    check_mu_l(l, mu)?;
    baseline_interval(l, mu).check(t)?;
    Ok(baseline_formula(l, mu, t))
}

pub fn baseline_formula(l: f64, mu: f64, t: f64) -> f64 {
    1.0 + 4.0 * l * l * t * t - 2.0 * mu * t
}

pub fn baseline_interval(l: f64, mu: f64) -> StepInterval {
    StepInterval::new(mu / (2.0 * l * l))
}

/// `√((Lt + μt − 2)² + 4L²ₓᵧt²)`.
pub fn beta(l: f64, mu: f64, lxy: f64, t: f64) -> Result<f64> {
    check_finite(&[l, mu, lxy, t])?;
    check_lxy(lxy)?;
    if t < 0.0 {
        return Err(Error::InvalidParams(format!("step {t} must be nonnegative")));
    }
    Ok(beta_formula(l, mu, lxy, t))
}

pub fn beta_formula(l: f64, mu: f64, lxy: f64, t: f64) -> f64 {
    let a = (l + mu) * t - 2.0;
    (a * a + 4.0 * lxy * lxy * t * t).sqrt()
}

/// Admissible steps `(0, 2μ/(μL + L²ₓᵧ))` for [`rate_alpha`].
pub fn rate_interval(l: f64, mu: f64, lxy: f64) -> StepInterval {
    StepInterval::new(2.0 * mu / (mu * l + lxy * lxy))
}

/// Unchecked contraction factor
/// `1 + ½(L² + μ² + 2L²ₓᵧ)t² − (L + μ)t + ½(L − μ)t·β`.
pub fn alpha_formula(l: f64, mu: f64, lxy: f64, t: f64) -> f64 {
    let b = beta_formula(l, mu, lxy, t);
    1.0 + 0.5 * (l * l + mu * mu + 2.0 * lxy * lxy) * t * t - (l + mu) * t
        + 0.5 * (l - mu) * t * b
}

/// One-step contraction factor of gradient descent-ascent for smooth
/// strongly convex-strongly concave functions, in terms of
/// `L = max(Lx, Ly)`, `μ = min(μx, μy)` and `Lxy`.
///
/// `L = μ` is accepted: the square-root term then carries a zero factor.
pub fn rate_alpha(l: f64, mu: f64, lxy: f64, t: f64) -> Result<RateResult> {
    check_finite(&[l, mu, lxy, t])?;
    check_mu_l(l, mu)?;
    check_lxy(lxy)?;
    let valid_interval = rate_interval(l, mu, lxy);
    valid_interval.check(t)?;
    Ok(RateResult {
        alpha: alpha_formula(l, mu, lxy, t),
        step: t,
        valid_interval,
    })
}

/// `u(t) = α(t) − 1` with `c` in place of `Lxy`; convex on the admissible
/// interval with values in `[−1, 0)`.
pub fn lemma_u(l: f64, mu: f64, c: f64, t: f64) -> Result<f64> {
    rate_alpha(l, mu, c, t).map(|r| r.alpha - 1.0)
}

fn optimal_inputs(params: &ProblemParams) -> Result<(f64, f64, f64)> {
    let (l, mu, lxy) = (params.l(), params.mu(), params.lxy());
    if mu <= 0.0 {
        return Err(Error::InvalidParams(
            "optimal step requires min(mu_x, mu_y) > 0".into(),
        ));
    }
    Ok((l, mu, lxy))
}

/// Step length minimising [`rate_alpha`] over its admissible interval.
pub fn optimal_step(params: &ProblemParams) -> Result<f64> {
    let (l, mu, lxy) = optimal_inputs(params)?;
    let s = (lxy * lxy + l * mu).sqrt();
    let num = 2.0 * ((l + mu) * s + lxy * (mu - l));
    let den = (4.0 * lxy * lxy + (l + mu) * (l + mu)) * s;
    Ok(num / den)
}

/// Contraction factor attained at [`optimal_step`].
pub fn optimal_rate(params: &ProblemParams) -> Result<f64> {
    let (l, mu, lxy) = optimal_inputs(params)?;
    let d = l * l - mu * mu;
    let s = (l * mu + lxy * lxy).sqrt();
    let q = (l + mu) * (l + mu) + 4.0 * lxy * lxy;
    Ok((8.0 * lxy * d * s + d * d + 16.0 * lxy * lxy * (l * mu + lxy * lxy)) / (q * q))
}

/// Admissible steps for [`qgg_rate`]:
/// `(0, 2μF / (LμF + 2Lxy√(μF(L − μF)) + L²ₓᵧ))`.
pub fn qgg_interval(l: f64, mu_f: f64, lxy: f64) -> StepInterval {
    let s = (mu_f * (l - mu_f)).sqrt();
    StepInterval::new(2.0 * mu_f / (l * mu_f + 2.0 * lxy * s + lxy * lxy))
}

/// Unchecked quadratic-gradient-growth rate, written as `1 + t(tD − 2μF)`
/// with `D = LμF + 2Lxy√(μF(L − μF)) + L²ₓᵧ`.
pub fn qgg_alpha_formula(l: f64, mu_f: f64, lxy: f64, t: f64) -> f64 {
    let s = (mu_f * (l - mu_f)).sqrt();
    t * (2.0 * t * lxy * s + mu_f * (l * t - 2.0) + t * lxy * lxy) + 1.0
}

/// Contraction of the squared distance to the solution set for functions
/// with quadratic gradient growth modulus `mu_f` (no strong convexity).
pub fn qgg_rate(l: f64, mu_f: f64, lxy: f64, t: f64) -> Result<RateResult> {
    check_finite(&[l, mu_f, lxy, t])?;
    check_lxy(lxy)?;
    if mu_f <= 0.0 || mu_f >= l {
        return Err(Error::InvalidParams(format!(
            "need 0 < mu_F < L, got mu_F = {mu_f}, L = {l}"
        )));
    }
    let valid_interval = qgg_interval(l, mu_f, lxy);
    valid_interval.check(t)?;
    Ok(RateResult {
        alpha: qgg_alpha_formula(l, mu_f, lxy, t),
        step: t,
        valid_interval,
    })
}

/// Which of the two parameter regimes of the conjectured rate applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConjectureCase {
    /// `μxμy(Lx − Ly) ≥ L²ₓᵧ(μy − μx)`.
    A,
    /// `μxμy(Lx − Ly) < L²ₓᵧ(μy − μx)`.
    B,
}

/// Which closed form the conjectured rate reduces to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConjectureBranch {
    /// `μy ≤ μ̄`: rate `α(μy, Lx, Lxy, t)`.
    MuYLx,
    /// `μy > μ̄`: rate `α(μx, Ly, Lxy, t)`.
    MuXLy,
}

/// Conjectured (unproven) rate in terms of all five constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConjecturedRate {
    pub case: ConjectureCase,
    pub branch: ConjectureBranch,
    pub alpha: f64,
    pub c: f64,
    pub mu_bar: f64,
    pub valid_interval: StepInterval,
}

/// Admissible step interval of the conjectured rate for the given regime.
pub fn conjecture_interval(params: &ProblemParams) -> Result<(ConjectureCase, StepInterval)> {
    let (lx, ly, lxy, mx, my) = (
        params.lx(),
        params.ly(),
        params.lxy(),
        params.mu_x(),
        params.mu_y(),
    );
    if !(my > mx && mx > 0.0) {
        return Err(Error::InvalidParams(format!(
            "conjectured rate needs mu_y > mu_x > 0, got mu_x = {mx}, mu_y = {my}"
        )));
    }
    if lx < ly {
        return Err(Error::InvalidParams(format!(
            "conjectured rate needs Lx >= Ly (swap x and y first), got Lx = {lx}, Ly = {ly}"
        )));
    }
    let lhs = mx * my * (lx - ly);
    let rhs = lxy * lxy * (my - mx);
    Ok(if lhs >= rhs {
        (
            ConjectureCase::A,
            StepInterval::new(2.0 * my / (lx * my + lxy * lxy)),
        )
    } else {
        (
            ConjectureCase::B,
            StepInterval::new(2.0 * mx / (ly * mx + lxy * lxy)),
        )
    })
}

/// Evaluates the conjectured five-constant rate. Coordinates are not
/// swapped automatically; callers must order them so that `Lx ≥ Ly` and
/// `μy > μx`.
pub fn conjecture_rate(params: &ProblemParams, t: f64) -> Result<ConjecturedRate> {
    check_finite(&[t])?;
    let (case, valid_interval) = conjecture_interval(params)?;
    valid_interval.check(t)?;
    let (lx, ly, lxy, mx, my) = (
        params.lx(),
        params.ly(),
        params.lxy(),
        params.mu_x(),
        params.mu_y(),
    );
    let c = 0.5 * (ly * ly + mx * mx) * t - (ly + mx)
        + 0.5 * (ly - mx) * beta_formula(ly, mx, lxy, t);
    let lxy2 = lxy * lxy;
    let num = c + 2.0 * lx - lx * lx * t + lx * lxy2 * t * t
        - (c + lx * (2.0 - lx * t)) * (1.0 + t * (c + t * lxy2)).sqrt();
    // mu_bar solves alpha(mu, Lx, Lxy, t) = alpha(mu_x, Ly, Lxy, t)
    let den = t * (c + t * lxy2 + lx * (2.0 - lx * t));
    let mu_bar = num / den;
    if !mu_bar.is_finite() {
        return Err(Error::InvalidParams(format!(
            "threshold mu_bar is undefined at t = {t}"
        )));
    }
    let (branch, alpha) = if my <= mu_bar {
        (ConjectureBranch::MuYLx, alpha_formula(lx, my, lxy, t))
    } else {
        (ConjectureBranch::MuXLy, alpha_formula(ly, mx, lxy, t))
    };
    Ok(ConjecturedRate {
        case,
        branch,
        alpha,
        c,
        mu_bar,
        valid_interval,
    })
}
