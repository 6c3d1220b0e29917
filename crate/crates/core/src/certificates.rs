//! Closed-form multipliers proving the one-step rates and numerical checks
//! of the identities they satisfy.
//!
//! Both certificates are stated at `Lxy = 1`; other couplings follow by
//! scaling (see [`crate::tight`]). The identities are polynomial in the free
//! vectors and values, so they are checked at unconstrained random
//! instantiations.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rates::{alpha_formula, beta_formula, qgg_alpha_formula, qgg_interval, rate_interval};

/// Slack allowed in the sign conditions on the multipliers.
pub const SIGN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub gammas: Vec<f64>,
    pub zetas: Vec<f64>,
    pub beta: f64,
    pub alpha: f64,
    /// Largest relative identity violation, once verified.
    pub residual: Option<f64>,
}

impl Certificate {
    /// All `γ` and `ζ₁`, `ζ₄` nonnegative up to [`SIGN_TOL`].
    pub fn signs_ok(&self) -> bool {
        self.gammas.iter().all(|&g| g >= -SIGN_TOL)
            && self.zetas[0] >= -SIGN_TOL
            && self.zetas[3] >= -SIGN_TOL
    }
}

/// Free vectors and values of one instantiation: the iterate `(x¹, y¹)`,
/// partial gradients at `(x¹, y¹)`, `(x¹, y★)`, `(x★, y¹)` and the values
/// `F¹¹`, `F¹★`, `F★¹`, `F★★`. The saddle point is the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Instantiation {
    pub x1: DVector<f64>,
    pub y1: DVector<f64>,
    pub gx11: DVector<f64>,
    pub gx1s: DVector<f64>,
    pub gxs1: DVector<f64>,
    pub gy11: DVector<f64>,
    pub gy1s: DVector<f64>,
    pub gys1: DVector<f64>,
    pub f11: f64,
    pub f1s: f64,
    pub fs1: f64,
    pub fss: f64,
}

impl Instantiation {
    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Self {
        let mut v = || DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
        let (x1, y1, gx11, gx1s, gxs1, gy11, gy1s, gys1) =
            (v(), v(), v(), v(), v(), v(), v(), v());
        Instantiation {
            x1,
            y1,
            gx11,
            gx1s,
            gxs1,
            gy11,
            gy1s,
            gys1,
            f11: rng.gen_range(-1.0..1.0),
            f1s: rng.gen_range(-1.0..1.0),
            fs1: rng.gen_range(-1.0..1.0),
            fss: rng.gen_range(-1.0..1.0),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        let z = DVector::zeros(dim);
        Instantiation {
            x1: z.clone(),
            y1: z.clone(),
            gx11: z.clone(),
            gx1s: z.clone(),
            gxs1: z.clone(),
            gy11: z.clone(),
            gy1s: z.clone(),
            gys1: z,
            f11: 0.0,
            f1s: 0.0,
            fs1: 0.0,
            fss: 0.0,
        }
    }
}

fn n2(v: &DVector<f64>) -> f64 {
    v.norm_squared()
}

/// Running sum that also tracks the largest term magnitude.
#[derive(Default)]
struct Sum {
    total: f64,
    scale: f64,
}

impl Sum {
    fn add(&mut self, term: f64) {
        self.total += term;
        self.scale = self.scale.max(term.abs());
    }
}

fn relative(lhs: Sum, rhs: Sum) -> f64 {
    (lhs.total - rhs.total).abs() / (1.0 + lhs.scale.max(rhs.scale))
}

fn check_pair(small: f64, l: f64, name: &str) -> Result<()> {
    if !(small.is_finite() && l.is_finite()) || small <= 0.0 || small >= l {
        return Err(Error::InvalidParams(format!(
            "certificate needs 0 < {name} < L, got {name} = {small}, L = {l}"
        )));
    }
    Ok(())
}

/// Multipliers for the strongly convex-strongly concave rate with
/// `Lx = Ly = L`, `mu_x = mu_y = mu`, `Lxy = 1`.
pub fn certificate_strongly_convex(l: f64, mu: f64, t: f64) -> Result<Certificate> {
    check_pair(mu, l, "mu")?;
    rate_interval(l, mu, 1.0).check(t)?;
    let b = beta_formula(l, mu, 1.0, t);
    let g1 = t * (-b + t * (l * (b + t * (l + mu) - 3.0) - mu + 2.0 * t) + 2.0) / b;
    let g2 = t * (t * t * (mu * (l + mu) + 2.0) - mu * t * b + b - t * (l + 3.0 * mu) + 2.0) / b;
    let g3 = t * t * (b + l * t - mu * t) / (2.0 * b);
    let den = 2.0 * t * t * (l + mu).powi(2) * (l * mu + 1.0) - 8.0 * l * mu * t * (l + mu)
        + 8.0 * l * mu;
    let z1 = 0.5
        * t
        * ((l * l + mu * mu) * b / (l - mu) - 2.0 * t * t * (l - mu) / b
            + (l + mu) * (t * (l + mu) - 2.0));
    let z2 = -((l * l * t - l - mu * mu * t + mu) * b
        - l * l * t * (l * t + mu * t - 3.0)
        - (l + mu) * (mu * mu * t * t - 2.0 * mu * t + 2.0 * t * t + 2.0)
        + mu * mu * t)
        / den;
    let z3 = -(t * (l * l + 6.0 * l * mu + mu * mu)
        - 2.0 * t * t * (l + mu) * (l * mu + 1.0)
        - (l - mu) * b
        - 2.0 * (l + mu))
        / den;
    let z4 = t * (b + l * t - mu * t).powi(2) / (4.0 * (l - mu) * b);
    Ok(Certificate {
        gammas: vec![g1, g2, g3],
        zetas: vec![z1, z2, z3, z4],
        beta: b,
        alpha: alpha_formula(l, mu, 1.0, t),
        residual: None,
    })
}

/// Relative violation `|lhs − rhs| / (1 + largest term)` of the identity
/// behind the strongly convex-strongly concave rate at one instantiation.
pub fn identity_residual_strongly_convex(
    cert: &Certificate,
    l: f64,
    mu: f64,
    t: f64,
    v: &Instantiation,
) -> f64 {
    let (g1, g2, g3) = (cert.gammas[0], cert.gammas[1], cert.gammas[2]);
    let (z1, z2, z3, z4) = (cert.zetas[0], cert.zetas[1], cert.zetas[2], cert.zetas[3]);
    let k = l / (2.0 * (l - mu));
    let c = 2.0 * mu / l;
    let (x1, y1) = (&v.x1, &v.y1);

    let mut lhs = Sum::default();
    lhs.add(n2(&(x1 - t * &v.gx11)) + n2(&(y1 + t * &v.gy11)));
    lhs.add(-cert.alpha * (n2(x1) + n2(y1)));

    // x-side pairs at y¹ and at y★
    let d = &v.gx11 - &v.gxs1;
    lhs.add(g1 * (v.f11 - v.fs1 - v.gxs1.dot(x1) - k * (n2(&d) / l + mu * n2(x1) - c * d.dot(x1))));
    lhs.add(g2 * (v.fs1 - v.f11 + v.gx11.dot(x1) - k * (n2(&d) / l + mu * n2(x1) - c * d.dot(x1))));
    let q = k * (n2(&v.gx1s) / l + mu * n2(x1) - c * v.gx1s.dot(x1));
    lhs.add(g2 * (v.f1s - v.fss - q));
    lhs.add(g1 * (v.fss - v.f1s + v.gx1s.dot(x1) - q));

    // y-side pairs at x¹ and at x★
    let e = &v.gy1s - &v.gy11;
    lhs.add(g1 * (v.f1s - v.f11 + v.gy1s.dot(y1) - k * (n2(&e) / l + mu * n2(y1) - c * e.dot(y1))));
    lhs.add(g2 * (v.f11 - v.f1s - v.gy11.dot(y1) - k * (n2(&e) / l + mu * n2(y1) - c * e.dot(y1))));
    let r = k * (n2(&v.gys1) / l + mu * n2(y1) + c * v.gys1.dot(y1));
    lhs.add(g2 * (v.fss - v.fs1 - r));
    lhs.add(g1 * (v.fs1 - v.fss - v.gys1.dot(y1) - r));

    lhs.add(g3 * (n2(x1) - n2(&(&v.gy11 - &v.gys1))));
    lhs.add(g3 * (n2(x1) - n2(&v.gy1s)));
    lhs.add(g3 * (n2(y1) - n2(&(&v.gx11 - &v.gx1s))));
    lhs.add(g3 * (n2(y1) - n2(&v.gxs1)));

    let mut rhs = Sum::default();
    rhs.add(-z1 * n2(&(x1 - z2 * &v.gx11 - z3 * (&v.gx1s - &v.gxs1))));
    rhs.add(-z4 * n2(&(&v.gx11 - &v.gx1s - &v.gxs1)));
    rhs.add(-z1 * n2(&(y1 + z2 * &v.gy11 - z3 * (&v.gy1s - &v.gys1))));
    rhs.add(-z4 * n2(&(&v.gy11 - &v.gys1 - &v.gy1s)));

    relative(lhs, rhs)
}

/// Multipliers for the quadratic-gradient-growth rate with `Lx = Ly = L`,
/// `Lxy = 1` and growth constant `mu_f`.
pub fn certificate_qgg(l: f64, mu_f: f64, t: f64) -> Result<Certificate> {
    check_pair(mu_f, l, "muF")?;
    qgg_interval(l, mu_f, 1.0).check(t)?;
    let m = mu_f;
    let s = (m * (l - m)).sqrt();
    let rl = (l - m).sqrt();
    let tt = t * t;
    let b = tt * (m * rl + m.sqrt());
    let g1 = tt * (m / s + m);
    let g2 = tt * (m * (l - m) + s) / m;
    let g3 = -tt * (m * (l + m) + s) / m + b / rl + 2.0 * t;
    let g4 = 0.5 * tt * (s + 1.0);
    let z1 = m * (b / rl - m * tt);
    let z2 = b / (2.0 * m * m.sqrt() * tt) - 1.0 / m;
    let z3 = tt * (s + 1.0) / (2.0 * m * tt);
    let z4 = 0.25
        * (2.0 * tt * (m * (l - m) + 1.0) / s
            - (2.0 * m * tt * (m - l) + b * rl).powi(2) / (m * (l - m) * tt * s));
    Ok(Certificate {
        gammas: vec![g1, g2, g3, g4],
        zetas: vec![z1, z2, z3, z4],
        beta: b,
        alpha: qgg_alpha_formula(l, mu_f, 1.0, t),
        residual: None,
    })
}

/// Relative violation of the identity behind the quadratic-gradient-growth
/// rate at one instantiation.
pub fn identity_residual_qgg(
    cert: &Certificate,
    l: f64,
    mu_f: f64,
    t: f64,
    v: &Instantiation,
) -> f64 {
    let (g1, g2, g3, g4) = (cert.gammas[0], cert.gammas[1], cert.gammas[2], cert.gammas[3]);
    let (z1, z2, z3, z4) = (cert.zetas[0], cert.zetas[1], cert.zetas[2], cert.zetas[3]);
    let h = 1.0 / (2.0 * l);
    let (x1, y1) = (&v.x1, &v.y1);

    let mut lhs = Sum::default();
    lhs.add(n2(&(x1 - t * &v.gx11)) + n2(&(y1 + t * &v.gy11)));
    lhs.add(-cert.alpha * (n2(x1) + n2(y1)));

    let d = n2(&(&v.gx11 - &v.gxs1));
    lhs.add(g1 * (v.f11 - v.fs1 - v.gxs1.dot(x1) - h * d));
    lhs.add(g2 * (v.fs1 - v.f11 + v.gx11.dot(x1) - h * d));
    lhs.add(g2 * (v.f1s - v.fss - h * n2(&v.gx1s)));
    lhs.add(g1 * (v.fss - v.f1s + v.gx1s.dot(x1) - h * n2(&v.gx1s)));

    let e = n2(&(&v.gy11 - &v.gy1s));
    lhs.add(g1 * (v.f1s - v.f11 + v.gy1s.dot(y1) - h * e));
    lhs.add(g2 * (v.f11 - v.f1s - v.gy11.dot(y1) - h * e));
    lhs.add(g2 * (v.fss - v.fs1 - h * n2(&v.gys1)));
    lhs.add(g1 * (v.fs1 - v.fss - v.gys1.dot(y1) - h * n2(&v.gys1)));

    lhs.add(g3 * (v.gx11.dot(x1) - v.gy11.dot(y1) - mu_f * (n2(x1) + n2(y1))));

    lhs.add(g4 * (n2(x1) - n2(&(&v.gy11 - &v.gys1))));
    lhs.add(g4 * (n2(x1) - n2(&v.gy1s)));
    lhs.add(g4 * (n2(y1) - n2(&(&v.gx11 - &v.gx1s))));
    lhs.add(g4 * (n2(y1) - n2(&v.gxs1)));

    let mut rhs = Sum::default();
    rhs.add(-z1 * n2(&(x1 + z2 * &v.gx11 - z3 * (&v.gx1s - &v.gxs1))));
    rhs.add(-z4 * n2(&(&v.gx11 - &v.gx1s - &v.gxs1)));
    rhs.add(-z1 * n2(&(y1 - z2 * &v.gy11 - z3 * (&v.gy1s - &v.gys1))));
    rhs.add(-z4 * n2(&(&v.gy11 - &v.gys1 - &v.gy1s)));

    relative(lhs, rhs)
}

fn check_trials(trials: usize, dim: usize) -> Result<()> {
    if trials == 0 || dim == 0 {
        return Err(Error::InvalidParams(format!(
            "need trials >= 1 and dim >= 1, got trials = {trials}, dim = {dim}"
        )));
    }
    Ok(())
}

/// Largest residual over `trials` random instantiations; trial `k` draws from
/// its own stream of a generator seeded with `seed`.
fn max_residual<F>(trials: usize, dim: usize, seed: u64, residual: F) -> f64
where
    F: Fn(&Instantiation) -> f64 + Sync,
{
    (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            residual(&Instantiation::random(&mut rng, dim))
        })
        .reduce(|| 0.0, f64::max)
}

pub fn verify_certificate_strongly_convex(
    cert: &Certificate,
    l: f64,
    mu: f64,
    t: f64,
    trials: usize,
    dim: usize,
    seed: u64,
) -> Result<f64> {
    check_trials(trials, dim)?;
    Ok(max_residual(trials, dim, seed, |v| {
        identity_residual_strongly_convex(cert, l, mu, t, v)
    }))
}

pub fn verify_certificate_qgg(
    cert: &Certificate,
    l: f64,
    mu_f: f64,
    t: f64,
    trials: usize,
    dim: usize,
    seed: u64,
) -> Result<f64> {
    check_trials(trials, dim)?;
    Ok(max_residual(trials, dim, seed, |v| {
        identity_residual_qgg(cert, l, mu_f, t, v)
    }))
}

/// Builds the certificate and returns the largest relative identity
/// violation over `trials` random instantiations of dimension `dim`.
pub fn verify_identity_strongly_convex(
    l: f64,
    mu: f64,
    t: f64,
    trials: usize,
    dim: usize,
    seed: u64,
) -> Result<f64> {
    let cert = certificate_strongly_convex(l, mu, t)?;
    verify_certificate_strongly_convex(&cert, l, mu, t, trials, dim, seed)
}

pub fn verify_identity_qgg(
    l: f64,
    mu_f: f64,
    t: f64,
    trials: usize,
    dim: usize,
    seed: u64,
) -> Result<f64> {
    let cert = certificate_qgg(l, mu_f, t)?;
    verify_certificate_qgg(&cert, l, mu_f, t, trials, dim, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::{qgg_rate, rate_alpha};

    #[test]
    fn strongly_convex_example_values() {
        let c = certificate_strongly_convex(2.0, 1.0, 0.5).unwrap();
        assert!((c.gammas[2] - 0.18090169943749474).abs() < 1e-12);
        assert!((c.zetas[3] - 0.29270509831248424).abs() < 1e-12);
        assert!((c.alpha - 0.6545084971874737).abs() < 1e-12);
        assert!((c.beta - 1.25f64.sqrt()).abs() < 1e-15);
        assert!(c.signs_ok());
    }

    #[test]
    fn strongly_convex_identity() {
        let r = verify_identity_strongly_convex(2.0, 1.0, 0.5, 100, 3, 0).unwrap();
        assert!(r <= 1e-8, "residual {r}");
    }

    #[test]
    fn zero_instantiation() {
        let c = certificate_strongly_convex(2.0, 1.0, 0.5).unwrap();
        let z = Instantiation::zeros(3);
        assert_eq!(identity_residual_strongly_convex(&c, 2.0, 1.0, 0.5, &z), 0.0);
        let c = certificate_qgg(2.0, 1.0, 0.2).unwrap();
        assert_eq!(identity_residual_qgg(&c, 2.0, 1.0, 0.2, &z), 0.0);
    }

    #[test]
    fn perturbation_breaks_identities() {
        let mut c = certificate_strongly_convex(2.0, 1.0, 0.5).unwrap();
        c.zetas[0] += 1e-3;
        let r = verify_certificate_strongly_convex(&c, 2.0, 1.0, 0.5, 100, 3, 0).unwrap();
        assert!(r >= 1e-4, "residual {r}");
        let mut c = certificate_qgg(2.0, 1.0, 0.2).unwrap();
        c.gammas[2] += 1e-3;
        let r = verify_certificate_qgg(&c, 2.0, 1.0, 0.2, 100, 3, 0).unwrap();
        assert!(r >= 1e-4, "residual {r}");
    }

    #[test]
    fn qgg_example_values() {
        let c = certificate_qgg(2.0, 1.0, 0.2).unwrap();
        assert!((c.alpha - 0.8).abs() < 1e-15);
        assert!(c.signs_ok(), "{c:?}");
        let r = verify_identity_qgg(2.0, 1.0, 0.2, 100, 3, 0).unwrap();
        assert!(r <= 1e-8, "residual {r}");
    }

    #[test]
    fn small_step_limit() {
        let c = certificate_strongly_convex(2.0, 1.0, 1e-9).unwrap();
        assert!(c.gammas.iter().all(|g| g.abs() < 1e-8));
        assert!(c.zetas[3].abs() < 1e-8);
        let c = certificate_qgg(2.0, 1.0, 1e-9).unwrap();
        assert!(c.gammas.iter().all(|g| g.abs() < 1e-8));
        assert!(c.zetas[0].abs() < 1e-8 && c.zetas[3].abs() < 1e-8);
    }

    #[test]
    fn degenerate_parameters() {
        assert!(certificate_strongly_convex(2.0, 2.0, 0.1).is_err());
        assert!(certificate_qgg(2.0, 2.0, 0.1).is_err());
        assert!(certificate_strongly_convex(2.0, 1.0, 5.0).is_err());
        assert!(verify_identity_qgg(2.0, 1.0, 0.2, 0, 3, 0).is_err());
    }

    #[test]
    fn alpha_matches_rates() {
        for &(l, mu, t) in &[(2.0, 1.0, 0.5), (3.0, 0.5, 0.2), (5.0, 1.0, 0.05)] {
            let c = certificate_strongly_convex(l, mu, t).unwrap();
            assert!((c.alpha - rate_alpha(l, mu, 1.0, t).unwrap().alpha).abs() <= 1e-12);
            let c = certificate_qgg(l, mu, t.min(0.9 * qgg_interval(l, mu, 1.0).upper)).unwrap();
            let q = qgg_rate(l, mu, 1.0, t.min(0.9 * qgg_interval(l, mu, 1.0).upper)).unwrap();
            assert!((c.alpha - q.alpha).abs() <= 1e-12);
        }
    }
}
