//! Brute-force lower bound on the one-step worst case over 2×2 bilinear
//! quadratics.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::oracles::{gda_iteration_matrix, QuadraticSaddle};
use crate::params::ProblemParams;

#[derive(Debug, Clone)]
pub struct WorstCase {
    pub ratio: f64,
    pub oracle: QuadraticSaddle,
    pub x1: DVector<f64>,
    pub y1: DVector<f64>,
}

/// Instance coordinates in the unit cube: eigenvalue positions of `A` and
/// `C` within their spectra, coupling scale, second singular value ratio
/// (signed, so reflections are included) and two rotation angles.
#[derive(Debug, Clone, Copy)]
struct Coords([f64; 8]);

impl Coords {
    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut c = [0.0; 8];
        for (k, e) in c.iter_mut().enumerate() {
            let u: f64 = rng.gen();
            // extreme spectra and full coupling are the likely maximizers
            *e = if k < 5 && rng.gen_bool(0.5) {
                u.round()
            } else {
                u
            };
        }
        Coords(c)
    }

    fn perturb<R: Rng + ?Sized>(&self, rng: &mut R, radius: f64) -> Self {
        let mut c = self.0;
        let k = rng.gen_range(0..8);
        c[k] = (c[k] + radius * rng.gen_range(-1.0..1.0)).clamp(0.0, 1.0);
        Coords(c)
    }

    fn matrices(&self, p: &ProblemParams) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let c = &self.0;
        let lerp = |lo: f64, hi: f64, u: f64| lo + (hi - lo) * u;
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![
            lerp(p.mu_x(), p.lx(), c[0]),
            lerp(p.mu_x(), p.lx(), c[1]),
        ]));
        let cm = DMatrix::from_diagonal(&DVector::from_vec(vec![
            lerp(p.mu_y(), p.ly(), c[2]),
            lerp(p.mu_y(), p.ly(), c[3]),
        ]));
        let rot = |th: f64| {
            let (s, co) = th.sin_cos();
            DMatrix::from_row_slice(2, 2, &[co, -s, s, co])
        };
        let pi = std::f64::consts::PI;
        let sigma = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0 * c[5] - 1.0]));
        let b = p.lxy() * c[4] * rot(2.0 * pi * c[6]) * sigma * rot(2.0 * pi * c[7]);
        (a, b, cm)
    }
}

/// Largest one-step ratio for the instance: the squared spectral norm of the
/// iteration matrix, with the top right singular vector as start point.
fn instance_ratio(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, t: f64) -> (f64, DVector<f64>) {
    let m = gda_iteration_matrix(a, b, c, t);
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let k = svd.singular_values.imax();
    let s = svd.singular_values[k];
    (s * s, v_t.row(k).transpose())
}

/// Random search followed by coordinate-wise local search over
/// `budget` instances of the 2×2 family with the spectra of `params`.
pub fn empirical_worst_case(params: &ProblemParams, t: f64, budget: usize, seed: u64) -> Result<WorstCase> {
    if budget == 0 {
        return Err(Error::InvalidParams("budget must be at least 1".into()));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::StepOutOfRange {
            t,
            lower: 0.0,
            upper: f64::INFINITY,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let score = |c: &Coords| {
        let (a, b, cm) = c.matrices(params);
        instance_ratio(&a, &b, &cm, t).0
    };
    let explore = budget.div_ceil(2);
    let mut best = Coords::random(&mut rng);
    let mut best_ratio = score(&best);
    for _ in 1..explore {
        let c = Coords::random(&mut rng);
        let r = score(&c);
        if r > best_ratio {
            best = c;
            best_ratio = r;
        }
    }
    let mut radius = 0.25;
    let mut stale = 0;
    for _ in explore..budget {
        let c = best.perturb(&mut rng, radius);
        let r = score(&c);
        if r > best_ratio {
            best = c;
            best_ratio = r;
            stale = 0;
        } else {
            stale += 1;
            if stale >= 50 {
                radius = (radius * 0.5).max(1e-9);
                stale = 0;
            }
        }
    }
    let (a, b, cm) = best.matrices(params);
    let (ratio, v) = instance_ratio(&a, &b, &cm, t);
    let oracle = QuadraticSaddle::new(a, b, cm)?;
    Ok(WorstCase {
        ratio,
        oracle,
        x1: v.rows(0, 2).into_owned(),
        y1: v.rows(2, 2).into_owned(),
    })
}
