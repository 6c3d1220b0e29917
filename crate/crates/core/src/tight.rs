//! Bilinear instances on which one GDA step attains the closed-form rate,
//! and a no-contraction instance without strong convexity in `x`.
//!
//! All start points are computed at `Lxy = 1` with step `Lxy·t` and mapped
//! back: dividing `F` by `Lxy` and multiplying the step by `Lxy` leaves the
//! iterates unchanged.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gda::gda_step;
use crate::oracles::QuadraticSaddle;
use crate::rates::{beta_formula, rate_alpha, rate_interval};

/// Gap allowed between the measured one-step ratio and the closed form.
pub const TIGHTNESS_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct TightInstance {
    pub oracle: QuadraticSaddle,
    pub x1: DVector<f64>,
    pub y1: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TightnessReport {
    pub ratio: f64,
    pub alpha: f64,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct LowerBoundInstance {
    pub oracle: QuadraticSaddle,
    pub x1: DVector<f64>,
    pub y1: DVector<f64>,
    pub alpha_lb: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("{name} = {v} must be positive")))
    }
}

fn diag2(a: f64, b: f64) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_vec(vec![a, b]))
}

fn anti_diag2(c: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, c, c, 0.0])
}

/// Start point `x1 = (0, a)`, `y1 = (b, 0)` on the unit sphere for the
/// block pair `(L, mu)` with coupling `lxy`.
fn unit_start(l: f64, mu: f64, lxy: f64, t: f64) -> (f64, f64) {
    let beta = beta_formula(l, mu, lxy, t);
    let s = 2.0 - t * (l + mu) + beta;
    let a = (s / (2.0 * beta)).sqrt();
    let b = -lxy * t * (2.0 / (beta * s)).sqrt();
    (a, b)
}

/// Worst-case instance for one step of size `t` with `Lx = Ly = L`.
///
/// The oracle is `A = diag(L, mu)`, `B = Lxy·[[0,1],[1,0]]`,
/// `C = diag(L, mu_other)` where `mu_other` defaults to `mu` and may be any
/// value in `[mu, L]`; the start point has unit norm.
pub fn tight_bilinear_start(
    l: f64,
    mu: f64,
    lxy: f64,
    t: f64,
    mu_other: Option<f64>,
) -> Result<TightInstance> {
    positive("L", l)?;
    positive("mu", mu)?;
    positive("Lxy", lxy)?;
    if mu > l {
        return Err(Error::InvalidParams(format!("need mu <= L, got mu = {mu}, L = {l}")));
    }
    let mu_other = mu_other.unwrap_or(mu);
    if !(mu..=l).contains(&mu_other) {
        return Err(Error::InvalidParams(format!(
            "second strong-convexity constant {mu_other} must lie in [{mu}, {l}]"
        )));
    }
    rate_interval(l, mu, lxy).check(t)?;
    let (a, b) = unit_start(l, mu, lxy, t);
    let oracle = QuadraticSaddle::new(diag2(l, mu), anti_diag2(lxy), diag2(l, mu_other))?;
    Ok(TightInstance {
        oracle,
        x1: DVector::from_vec(vec![0.0, a]),
        y1: DVector::from_vec(vec![b, 0.0]),
    })
}

/// Runs one step from [`tight_bilinear_start`] and compares the squared
/// distance ratio with the closed-form rate.
pub fn verify_tightness(
    l: f64,
    mu: f64,
    lxy: f64,
    t: f64,
    mu_other: Option<f64>,
) -> Result<TightnessReport> {
    let inst = tight_bilinear_start(l, mu, lxy, t, mu_other)?;
    let alpha = rate_alpha(l, mu, lxy, t)?.alpha;
    let ratio = one_step_ratio(&inst.oracle, &inst.x1, &inst.y1, t)?;
    Ok(TightnessReport {
        ratio,
        alpha,
        gap: (ratio - alpha).abs(),
    })
}

/// Squared-distance ratio of one step towards the origin.
pub(crate) fn one_step_ratio(
    oracle: &QuadraticSaddle,
    x1: &DVector<f64>,
    y1: &DVector<f64>,
    t: f64,
) -> Result<f64> {
    let (x2, y2) = gda_step(oracle, x1, y1, t)?;
    let d1 = x1.norm_squared() + y1.norm_squared();
    if d1 == 0.0 {
        return Err(Error::ZeroDistance);
    }
    Ok((x2.norm_squared() + y2.norm_squared()) / d1)
}

/// Instance with `A = diag(L, 0)`, `B = Lxy·[[0,1],[1,0]]`, `C = diag(L, mu_y)`
/// and a start point at distance `r` from the unique saddle point from which
/// one step does not contract.
pub fn lower_bound_instance(
    l: f64,
    lxy: f64,
    mu_y: f64,
    t: f64,
    r: f64,
) -> Result<LowerBoundInstance> {
    positive("L", l)?;
    positive("Lxy", lxy)?;
    positive("mu_y", mu_y)?;
    positive("t", t)?;
    positive("r", r)?;
    if mu_y > l {
        return Err(Error::InvalidParams(format!(
            "need mu_y <= L, got mu_y = {mu_y}, L = {l}"
        )));
    }
    let (a, b) = unit_start(l, 0.0, lxy, t);
    let beta0 = beta_formula(l, 0.0, lxy, t);
    let alpha_lb = 1.0 + 0.5 * (l * l + 2.0 * lxy * lxy) * t * t - l * t + 0.5 * l * t * beta0;
    let oracle = QuadraticSaddle::new(diag2(l, 0.0), anti_diag2(lxy), diag2(l, mu_y))?;
    Ok(LowerBoundInstance {
        oracle,
        x1: DVector::from_vec(vec![0.0, r * a]),
        y1: DVector::from_vec(vec![r * b, 0.0]),
        alpha_lb,
    })
}

impl LowerBoundInstance {
    pub fn one_step_ratio(&self, t: f64) -> Result<f64> {
        one_step_ratio(&self.oracle, &self.x1, &self.y1, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ProblemParams;
    use crate::rates::{optimal_rate, optimal_step};

    #[test]
    fn example_start_point() {
        let inst = tight_bilinear_start(2.0, 1.0, 1.0, 0.5, None).unwrap();
        assert_eq!(inst.x1[0], 0.0);
        assert!((inst.x1[1] - 0.85065080835203993).abs() < 1e-12);
        assert!((inst.y1[0] + 0.52573111211913359).abs() < 1e-12);
        assert_eq!(inst.y1[1], 0.0);
        assert!((inst.x1.norm_squared() + inst.y1.norm_squared() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn example_tightness() {
        let rep = verify_tightness(2.0, 1.0, 1.0, 0.5, None).unwrap();
        assert!((rep.ratio - 0.6545084971874737).abs() < 1e-12);
        assert!(rep.gap <= TIGHTNESS_TOL);
    }

    #[test]
    fn tight_at_optimal_step_with_scaled_coupling() {
        let p = ProblemParams::symmetric(3.0, 1.0, 2.0).unwrap();
        let t = optimal_step(&p).unwrap();
        let rep = verify_tightness(3.0, 1.0, 2.0, t, None).unwrap();
        assert!((rep.ratio - optimal_rate(&p).unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn equal_spectrum() {
        let rep = verify_tightness(1.5, 1.5, 0.7, 0.3, None).unwrap();
        let expected = 1.0 + 0.5 * (2.0 * 1.5 * 1.5 + 2.0 * 0.49) * 0.09 - 3.0 * 0.3;
        assert!((rep.alpha - expected).abs() < 1e-14);
        assert!(rep.gap <= TIGHTNESS_TOL);
    }

    #[test]
    fn larger_second_constant_keeps_tightness() {
        let rep = verify_tightness(2.0, 0.5, 1.0, 0.3, Some(1.5)).unwrap();
        assert!(rep.gap <= TIGHTNESS_TOL, "{rep:?}");
        assert!(tight_bilinear_start(2.0, 0.5, 1.0, 0.3, Some(0.4)).is_err());
    }

    #[test]
    fn preconditions() {
        assert!(tight_bilinear_start(2.0, 1.0, 0.0, 0.5, None).is_err());
        assert!(matches!(
            tight_bilinear_start(2.0, 1.0, 1.0, 10.0, None),
            Err(Error::StepOutOfRange { .. })
        ));
        assert!(lower_bound_instance(2.0, 1.0, 1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn lower_bound_example() {
        let lb = lower_bound_instance(2.0, 1.0, 1.0, 0.5, 1.0).unwrap();
        assert!((lb.x1[1] - 0.92387953251128674).abs() < 1e-12);
        assert!((lb.y1[0] + 0.38268343236508978).abs() < 1e-12);
        assert!((lb.alpha_lb - 1.4571067811865475).abs() < 1e-12);
        let ratio = lb.one_step_ratio(0.5).unwrap();
        assert!(ratio >= lb.alpha_lb - 1e-10);
        assert!(ratio >= 1.0);
    }

    #[test]
    fn lower_bound_norm_and_scaling() {
        for &(l, lxy, mu_y, t, r) in &[
            (2.0, 1.0, 1.0, 0.5, 3.0),
            (5.0, 0.3, 2.0, 0.1, 0.25),
            (1.0, 2.0, 0.5, 0.9, 1.0),
        ] {
            let lb = lower_bound_instance(l, lxy, mu_y, t, r).unwrap();
            let norm = (lb.x1.norm_squared() + lb.y1.norm_squared()).sqrt();
            assert!((norm - r).abs() <= 1e-12 * r.max(1.0));
            assert!(lb.alpha_lb >= 1.0);
            let ratio = lb.one_step_ratio(t).unwrap();
            assert!(ratio >= lb.alpha_lb - 1e-10, "{ratio} vs {}", lb.alpha_lb);
        }
    }
}
