//! Interpolation inequalities for smooth strongly convex (concave) functions,
//! cross-Lipschitz conditions and quadratic gradient growth.
//!
//! Residuals are signed so that a nonnegative value means the condition
//! holds.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::oracles::{check_dims, SaddleOracle};

/// Point, gradient and function value.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTriple {
    pub x: DVector<f64>,
    pub g: DVector<f64>,
    pub f: f64,
}

impl DataTriple {
    pub fn new(x: DVector<f64>, g: DVector<f64>, f: f64) -> Result<Self> {
        if x.len() != g.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: g.len(),
            });
        }
        Ok(DataTriple { x, g, f })
    }

    pub fn scalar(x: f64, g: f64, f: f64) -> Self {
        DataTriple {
            x: DVector::from_element(1, x),
            g: DVector::from_element(1, g),
            f,
        }
    }

    fn negated(&self) -> DataTriple {
        DataTriple {
            x: self.x.clone(),
            g: -&self.g,
            f: -self.f,
        }
    }
}

fn check_class(mu: f64, l: f64) -> Result<()> {
    if !(l.is_finite() && mu.is_finite()) || l <= 0.0 || mu < 0.0 || mu >= l {
        return Err(Error::InvalidParams(format!(
            "interpolation needs 0 <= mu < L, got mu = {mu}, L = {l}"
        )));
    }
    Ok(())
}

/// `fᵢ − fⱼ − ⟨gⱼ, xᵢ − xⱼ⟩` minus
/// `(‖gᵢ − gⱼ‖²/L + μ‖xᵢ − xⱼ‖² − 2μ/L⟨gⱼ − gᵢ, xⱼ − xᵢ⟩) / (2(1 − μ/L))`.
///
/// Nonnegative for every ordered pair iff the triples are interpolable by an
/// `L`-smooth `μ`-strongly convex function.
pub fn interp_convex_residual(i: &DataTriple, j: &DataTriple, mu: f64, l: f64) -> Result<f64> {
    check_class(mu, l)?;
    if i.x.len() != j.x.len() {
        return Err(Error::DimensionMismatch {
            expected: i.x.len(),
            got: j.x.len(),
        });
    }
    let dx = &i.x - &j.x;
    let dg = &i.g - &j.g;
    let rhs = i.f - j.f - j.g.dot(&dx);
    // ⟨gⱼ − gᵢ, xⱼ − xᵢ⟩ = ⟨dg, dx⟩
    let lhs = (dg.norm_squared() / l + mu * dx.norm_squared() - 2.0 * mu / l * dg.dot(&dx))
        / (2.0 * (1.0 - mu / l));
    Ok(rhs - lhs)
}

/// Concave counterpart: the convex residual of `(x, −g, −f)`.
pub fn interp_concave_residual(i: &DataTriple, j: &DataTriple, mu: f64, l: f64) -> Result<f64> {
    interp_convex_residual(&i.negated(), &j.negated(), mu, l)
}

/// `Lxy²‖pa − pb‖² − ‖ga − gb‖²`.
pub fn cross_lipschitz_residual(
    ga: &DVector<f64>,
    gb: &DVector<f64>,
    pa: &DVector<f64>,
    pb: &DVector<f64>,
    lxy: f64,
) -> f64 {
    lxy * lxy * (pa - pb).norm_squared() - (ga - gb).norm_squared()
}

/// Left side of the growth inequality and the squared distance to the
/// solution set.
fn growth_terms<O: SaddleOracle + ?Sized>(
    oracle: &O,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<(f64, f64)> {
    check_dims(oracle, x, y)?;
    let (px, py) = oracle.project_solution(x, y)?;
    let mut gx = DVector::zeros(x.len());
    let mut gy = DVector::zeros(y.len());
    oracle.grads_into(x, y, &mut gx, &mut gy);
    let dx = x - px;
    let dy = y - py;
    Ok((gx.dot(&dx) - gy.dot(&dy), dx.norm_squared() + dy.norm_squared()))
}

/// `⟨∇ₓF, x − x★⟩ − ⟨∇ᵧF, y − y★⟩ − μF·d²` with `(x★, y★)` the projection
/// of `(x, y)` onto the solution set and `d` the distance to it.
pub fn qgg_residual<O: SaddleOracle + ?Sized>(
    oracle: &O,
    x: &DVector<f64>,
    y: &DVector<f64>,
    mu_f: f64,
) -> Result<f64> {
    let (lhs, d2) = growth_terms(oracle, x, y)?;
    Ok(lhs - mu_f * d2)
}

/// Smallest sampled growth ratio. Being a minimum over finitely many
/// points it is an upper bound on the true growth constant.
#[derive(Debug, Clone, PartialEq)]
pub struct MuFEstimate {
    pub upper_bound: f64,
    pub argmin: (DVector<f64>, DVector<f64>),
    pub samples: usize,
}

/// Minimum of `(⟨∇ₓF, x − x★⟩ − ⟨∇ᵧF, y − y★⟩) / d²` over the sample points
/// off the solution set.
pub fn estimate_mu_f<O, I>(oracle: &O, points: I) -> Result<MuFEstimate>
where
    O: SaddleOracle + ?Sized,
    I: IntoIterator<Item = (DVector<f64>, DVector<f64>)>,
{
    let mut best: Option<MuFEstimate> = None;
    let mut samples = 0;
    for (x, y) in points {
        let (lhs, d2) = growth_terms(oracle, &x, &y)?;
        if d2 <= 0.0 {
            continue;
        }
        samples += 1;
        let ratio = lhs / d2;
        if best.as_ref().map_or(true, |b| ratio < b.upper_bound) {
            best = Some(MuFEstimate {
                upper_bound: ratio,
                argmin: (x, y),
                samples: 0,
            });
        }
    }
    let mut est = best.ok_or(Error::EmptySample)?;
    est.samples = samples;
    Ok(est)
}

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut r = 0.0;
    let mut f = inv;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Halton points with a seeded random shift (modulo 1), mapped to the box
/// `center ± radius` of dimension `dim_x + dim_y`.
pub fn halton_box(
    center: (&DVector<f64>, &DVector<f64>),
    radius: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<(DVector<f64>, DVector<f64>)>> {
    let (cx, cy) = center;
    let dim = cx.len() + cy.len();
    if dim > PRIMES.len() {
        return Err(Error::InvalidParams(format!(
            "Halton sampler supports at most {} coordinates, got {dim}",
            PRIMES.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    let to_box = |k: usize, i: u64| {
        let u = (radical_inverse(i, PRIMES[k] as u64) + shift[k]).fract();
        radius * (2.0 * u - 1.0)
    };
    Ok((1..=n as u64)
        .map(|i| {
            let x = DVector::from_fn(cx.len(), |k, _| cx[k] + to_box(k, i));
            let y = DVector::from_fn(cy.len(), |k, _| cy[k] + to_box(cx.len() + k, i));
            (x, y)
        })
        .collect())
}

/// Default sampler: 4096 shifted Halton points within radius 5 of
/// `center`.
pub fn default_sampler(
    center: (&DVector<f64>, &DVector<f64>),
    seed: u64,
) -> Result<Vec<(DVector<f64>, DVector<f64>)>> {
    halton_box(center, 5.0, 4096, seed)
}

/// `n × n` tensor grid of scalar pairs `(x, y)` on `[lo, hi]²`, endpoints
/// included.
pub fn grid_2d(lo: f64, hi: f64, n: usize) -> Vec<(DVector<f64>, DVector<f64>)> {
    let node = |k: usize| {
        if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * k as f64 / (n - 1) as f64
        }
    };
    let mut pts = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            pts.push((
                DVector::from_element(1, node(i)),
                DVector::from_element(1, node(j)),
            ));
        }
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{PiecewiseQggExample, QuadraticSaddle};
    use crate::params::ProblemParams;
    use nalgebra::DMatrix;

    #[test]
    fn convex_examples() {
        let i = DataTriple::scalar(1.0, 2.0, 1.0);
        let j = DataTriple::scalar(0.0, 0.0, 0.0);
        assert_eq!(interp_convex_residual(&i, &j, 0.0, 2.0).unwrap(), 0.0);
        let i2 = DataTriple::scalar(1.0, 2.0, 0.0);
        let j2 = DataTriple::scalar(0.0, 0.0, 1.0);
        assert_eq!(interp_convex_residual(&i2, &j2, 0.0, 2.0).unwrap(), -2.0);
        assert_eq!(interp_convex_residual(&i, &i, 0.5, 2.0).unwrap(), 0.0);
        assert!(interp_convex_residual(&i, &j, 2.0, 2.0).is_err());
    }

    #[test]
    fn concave_examples() {
        let i = DataTriple::scalar(1.0, -2.0, -1.0);
        let j = DataTriple::scalar(0.0, 0.0, 0.0);
        assert_eq!(interp_concave_residual(&i, &j, 0.0, 2.0).unwrap(), 0.0);
        assert_eq!(interp_concave_residual(&j, &i, 0.0, 2.0).unwrap(), 0.0);
        assert_eq!(interp_concave_residual(&i, &i, 0.3, 2.0).unwrap(), 0.0);
        assert!(interp_concave_residual(&i, &j, 3.0, 2.0).is_err());
    }

    #[test]
    fn quadratic_triples_are_interpolable() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (mu, l) = (0.4, 3.0);
        let p = ProblemParams::symmetric(l, mu, 1.0).unwrap();
        let q = QuadraticSaddle::random(&mut rng, 3, 3, &p);
        let a = q.a().clone();
        let c = q.c().clone();
        let triple = |m: &DMatrix<f64>, x: DVector<f64>, sign: f64| {
            let g = sign * (m * &x);
            let f = 0.5 * x.dot(&g);
            DataTriple::new(x, g, f).unwrap()
        };
        let pts: Vec<DVector<f64>> = (0..12)
            .map(|_| DVector::from_fn(3, |_, _| rng.gen_range(-3.0..3.0)))
            .collect();
        for xi in &pts {
            for xj in &pts {
                let (ti, tj) = (triple(&a, xi.clone(), 1.0), triple(&a, xj.clone(), 1.0));
                assert!(interp_convex_residual(&ti, &tj, mu, l).unwrap() >= -1e-9);
                let (si, sj) = (triple(&c, xi.clone(), -1.0), triple(&c, xj.clone(), -1.0));
                assert!(interp_concave_residual(&si, &sj, mu, l).unwrap() >= -1e-9);
            }
        }
    }

    #[test]
    fn cross_lipschitz_examples() {
        let v = |a: f64, b: f64| DVector::from_vec(vec![a, b]);
        let r = cross_lipschitz_residual(&v(3.0, 0.0), &v(0.0, 0.0), &v(1.0, 0.0), &v(0.0, 0.0), 2.0);
        assert_eq!(r, -5.0);
        let r = cross_lipschitz_residual(&v(1.0, 1.0), &v(1.0, 1.0), &v(4.0, 0.0), &v(1.0, 2.0), 0.0);
        assert_eq!(r, 0.0);
        // ∇ₓF = By with B = Lxy·[[0,1],[1,0]]: every direction is a top singular vector
        let p = ProblemParams::symmetric(2.0, 1.0, 1.5).unwrap();
        let q = QuadraticSaddle::from_params(&p);
        let x = v(0.3, -0.2);
        for (ya, yb) in [(v(1.0, 0.0), v(0.0, 0.0)), (v(0.0, 2.0), v(0.0, -1.0))] {
            let r = cross_lipschitz_residual(&q.grad_x(&x, &ya), &q.grad_x(&x, &yb), &ya, &yb, 1.5);
            assert!(r.abs() < 1e-12);
        }
    }

    #[test]
    fn qgg_examples() {
        let o = PiecewiseQggExample;
        let s = |v: f64| DVector::from_element(1, v);
        assert_eq!(qgg_residual(&o, &s(2.0), &s(0.0), 1.0).unwrap(), 1.0);
        assert_eq!(qgg_residual(&o, &s(0.3), &s(0.0), 1.0).unwrap(), 0.0);
    }

    #[test]
    fn estimate_requires_points_off_solution_set() {
        let o = PiecewiseQggExample;
        let on_set: Vec<_> = (0..5)
            .map(|k| (DVector::from_element(1, -1.0 + 0.5 * k as f64), DVector::zeros(1)))
            .collect();
        assert_eq!(estimate_mu_f(&o, on_set), Err(Error::EmptySample));
    }

    #[test]
    fn quadratic_growth_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = ProblemParams::new(3.0, 2.0, 1.0, 0.6, 0.9).unwrap();
        let q = QuadraticSaddle::random(&mut rng, 2, 2, &p);
        let z = DVector::zeros(2);
        let est = estimate_mu_f(&q, default_sampler((&z, &z), 4).unwrap()).unwrap();
        assert!(est.upper_bound >= 0.6 - 1e-6);
        assert_eq!(est.samples, 4096);
    }

    #[test]
    fn halton_is_seeded_and_bounded() {
        let c = DVector::from_vec(vec![1.0]);
        let d = DVector::from_vec(vec![-1.0, 0.0]);
        let a = halton_box((&c, &d), 5.0, 100, 3).unwrap();
        let b = halton_box((&c, &d), 5.0, 100, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, halton_box((&c, &d), 5.0, 100, 4).unwrap());
        for (x, y) in &a {
            assert!((x[0] - 1.0).abs() <= 5.0);
            assert!((y[0] + 1.0).abs() <= 5.0 && y[1].abs() <= 5.0);
        }
    }

    #[test]
    fn grid_shape() {
        let g = grid_2d(-4.0, 4.0, 3);
        assert_eq!(g.len(), 9);
        assert_eq!((g[0].0[0], g[0].1[0]), (-4.0, -4.0));
        assert_eq!((g[5].0[0], g[5].1[0]), (0.0, 4.0));
    }
}
