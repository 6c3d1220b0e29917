//! Saddle-function oracles: values, partial gradients, problem constants and
//! projection onto the solution set.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ProblemParams;

/// Relative eigenvalue threshold below which a direction of the saddle map
/// counts as part of its null space.
const NULL_TOL: f64 = 1e-10;

/// Tolerance for the symmetry check of JSON instances.
const SYMMETRY_TOL: f64 = 1e-12;

/// Evaluation interface of a convex-concave function `F(x, y)`.
///
/// Dimensions are fixed at construction; the free functions in this module
/// ([`eval_grads`], [`project_solution_set`]) check them.
pub trait SaddleOracle: Send + Sync {
    fn dim_x(&self) -> usize;
    fn dim_y(&self) -> usize;

    fn value(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64;

    /// Writes `∇ₓF(x, y)` into `gx` and `∇ᵧF(x, y)` into `gy`.
    fn grads_into(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
        gx: &mut DVector<f64>,
        gy: &mut DVector<f64>,
    );

    fn params(&self) -> ProblemParams;

    /// Euclidean projection of `(x, y)` onto the solution set, when it is
    /// known in closed form.
    fn project_solution(
        &self,
        _x: &DVector<f64>,
        _y: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        Err(Error::UnsupportedOracle)
    }

    fn grad_x(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let mut gx = DVector::zeros(self.dim_x());
        let mut gy = DVector::zeros(self.dim_y());
        self.grads_into(x, y, &mut gx, &mut gy);
        gx
    }

    fn grad_y(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let mut gx = DVector::zeros(self.dim_x());
        let mut gy = DVector::zeros(self.dim_y());
        self.grads_into(x, y, &mut gx, &mut gy);
        gy
    }
}

pub(crate) fn check_dims<O: SaddleOracle + ?Sized>(
    oracle: &O,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<()> {
    if x.len() != oracle.dim_x() {
        return Err(Error::DimensionMismatch {
            expected: oracle.dim_x(),
            got: x.len(),
        });
    }
    if y.len() != oracle.dim_y() {
        return Err(Error::DimensionMismatch {
            expected: oracle.dim_y(),
            got: y.len(),
        });
    }
    Ok(())
}

/// Both partial gradients at `(x, y)`.
pub fn eval_grads<O: SaddleOracle + ?Sized>(
    oracle: &O,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    check_dims(oracle, x, y)?;
    let mut gx = DVector::zeros(oracle.dim_x());
    let mut gy = DVector::zeros(oracle.dim_y());
    oracle.grads_into(x, y, &mut gx, &mut gy);
    Ok((gx, gy))
}

/// Projection of a point onto the solution set with its squared distance.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub dist_sq: f64,
}

pub fn project_solution_set<O: SaddleOracle + ?Sized>(
    oracle: &O,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<Projection> {
    check_dims(oracle, x, y)?;
    let (px, py) = oracle.project_solution(x, y)?;
    let dist_sq = (x - &px).norm_squared() + (y - &py).norm_squared();
    Ok(Projection {
        x: px,
        y: py,
        dist_sq,
    })
}

/// JSON form of a quadratic instance, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct QuadraticInstance {
    pub A: Vec<Vec<f64>>,
    pub B: Vec<Vec<f64>>,
    pub C: Vec<Vec<f64>>,
}

/// `F(x, y) = ½xᵀAx + xᵀBy − ½yᵀCy` with `A`, `C` symmetric positive
/// semidefinite.
///
/// The solution set is the null space of the saddle map
/// `(x, y) ↦ (Ax + By, Bᵀx − Cy)`, stored as an orthonormal basis.
#[derive(Debug, Clone)]
pub struct QuadraticSaddle {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    params: ProblemParams,
    null_basis: DMatrix<f64>,
}

fn is_diagonal(m: &DMatrix<f64>) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == 0.0))
}

/// Extreme eigenvalues of a symmetric matrix; exact for diagonal input.
fn eig_range(m: &DMatrix<f64>) -> (f64, f64) {
    let vals: Vec<f64> = if is_diagonal(m) {
        m.diagonal().iter().copied().collect()
    } else {
        SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect()
    };
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn matrix_from_rows(rows: &[Vec<f64>], name: &str) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if nrows == 0 || ncols == 0 {
        return Err(Error::Instance(format!("matrix {name} is empty")));
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Instance(format!("matrix {name} has ragged rows")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Instance(format!("matrix {name} has non-finite entries")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn symmetrize(m: DMatrix<f64>, name: &str) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Instance(format!("matrix {name} is not square")));
    }
    let scale = m.amax().max(1.0);
    let asym = (&m - m.transpose()).amax();
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::Instance(format!(
            "matrix {name} is not symmetric (max asymmetry {asym:e})"
        )));
    }
    Ok((&m + m.transpose()) * 0.5)
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

impl QuadraticSaddle {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        let m = c.nrows();
        if a.ncols() != n || c.ncols() != m {
            return Err(Error::Instance("A and C must be square".into()));
        }
        if b.nrows() != n || b.ncols() != m {
            return Err(Error::Instance(format!(
                "B must be {n}x{m}, got {}x{}",
                b.nrows(),
                b.ncols()
            )));
        }
        let (a_lo, a_hi) = eig_range(&a);
        let (c_lo, c_hi) = eig_range(&c);
        let psd_tol = |hi: f64| -1e-12 * hi.abs().max(1.0);
        if a_lo < psd_tol(a_hi) || c_lo < psd_tol(c_hi) {
            return Err(Error::Instance(
                "A and C must be positive semidefinite".into(),
            ));
        }
        let btb = b.transpose() * &b;
        let (_, s2) = eig_range(&btb);
        let params = ProblemParams::new(a_hi, c_hi, s2.max(0.0).sqrt(), a_lo.max(0.0), c_lo.max(0.0))?;

        let mut saddle = DMatrix::zeros(n + m, n + m);
        saddle.view_mut((0, 0), (n, n)).copy_from(&a);
        saddle.view_mut((0, n), (n, m)).copy_from(&b);
        saddle.view_mut((n, 0), (m, n)).copy_from(&b.transpose());
        saddle.view_mut((n, n), (m, m)).copy_from(&(-&c));
        let eig = SymmetricEigen::new(saddle);
        let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
        let null_cols: Vec<usize> = (0..n + m)
            .filter(|&k| eig.eigenvalues[k].abs() <= NULL_TOL * scale)
            .collect();
        let null_basis = DMatrix::from_fn(n + m, null_cols.len(), |i, j| {
            eig.eigenvectors[(i, null_cols[j])]
        });

        Ok(QuadraticSaddle {
            a,
            b,
            c,
            params,
            null_basis,
        })
    }

    /// The 2×2 bilinear family `A = diag(Lx, μx)`, `B = Lxy·[[0,1],[1,0]]`,
    /// `C = diag(Ly, μy)`.
    pub fn from_params(p: &ProblemParams) -> Self {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![p.lx(), p.mu_x()]));
        let b = DMatrix::from_row_slice(2, 2, &[0.0, p.lxy(), p.lxy(), 0.0]);
        let c = DMatrix::from_diagonal(&DVector::from_vec(vec![p.ly(), p.mu_y()]));
        QuadraticSaddle::new(a, b, c).expect("valid parameters give a valid instance")
    }

    pub fn from_instance(inst: &QuadraticInstance) -> Result<Self> {
        let a = symmetrize(matrix_from_rows(&inst.A, "A")?, "A")?;
        let b = matrix_from_rows(&inst.B, "B")?;
        let c = symmetrize(matrix_from_rows(&inst.C, "C")?, "C")?;
        QuadraticSaddle::new(a, b, c)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let inst: QuadraticInstance = serde_json::from_str(s)?;
        Self::from_instance(&inst)
    }

    pub fn to_instance(&self) -> QuadraticInstance {
        QuadraticInstance {
            A: rows_of(&self.a),
            B: rows_of(&self.b),
            C: rows_of(&self.c),
        }
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    /// Dimension of the solution set (0 when the saddle point is unique).
    pub fn solution_dim(&self) -> usize {
        self.null_basis.ncols()
    }

    /// Linear one-step GDA map `z ↦ z − t·(Ax + By, −(Bᵀx − Cy))` as a matrix
    /// acting on the stacked vector `(x, y)`.
    pub fn gda_matrix(&self, t: f64) -> DMatrix<f64> {
        gda_iteration_matrix(&self.a, &self.b, &self.c, t)
    }

    /// Random instance with the spectrum of `A` in `[mu_x, lx]`, of `C` in
    /// `[mu_y, ly]` (both extremes attained) and singular values of `B` in
    /// `[0, lxy]` with the largest equal to `lxy`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize, p: &ProblemParams) -> Self {
        let a = random_symmetric(rng, n, p.mu_x(), p.lx());
        let c = random_symmetric(rng, m, p.mu_y(), p.ly());
        let u = random_orthogonal(rng, n);
        let v = random_orthogonal(rng, m);
        let k = n.min(m);
        let mut sigma = DMatrix::zeros(n, m);
        for i in 0..k {
            sigma[(i, i)] = if i == 0 {
                p.lxy()
            } else {
                p.lxy() * rng.gen::<f64>()
            };
        }
        let b = u * sigma * v.transpose();
        QuadraticSaddle::new(a, b, c).expect("random instance is valid")
    }
}

/// `I − t·[[A, B], [−Bᵀ, C]]`.
pub(crate) fn gda_iteration_matrix(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    t: f64,
) -> DMatrix<f64> {
    let n = a.nrows();
    let m = c.nrows();
    DMatrix::from_fn(n + m, n + m, |i, j| {
        let e = match (i < n, j < n) {
            (true, true) => a[(i, j)],
            (true, false) => b[(i, j - n)],
            (false, true) => -b[(j, i - n)],
            (false, false) => c[(i - n, j - n)],
        };
        f64::from(u8::from(i == j)) - t * e
    })
}

/// Free-function form of [`QuadraticSaddle::from_params`].
pub fn quadratic_from_params(p: &ProblemParams) -> QuadraticSaddle {
    QuadraticSaddle::from_params(p)
}

fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    g.qr().q()
}

fn random_symmetric<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let q = random_orthogonal(rng, n);
    let mut d = DVector::from_fn(n, |_, _| rng.gen_range(lo..=hi));
    d[0] = hi;
    if n > 1 {
        d[n - 1] = lo;
    }
    let m = &q * DMatrix::from_diagonal(&d) * q.transpose();
    (&m + m.transpose()) * 0.5
}

impl SaddleOracle for QuadraticSaddle {
    fn dim_x(&self) -> usize {
        self.a.nrows()
    }

    fn dim_y(&self) -> usize {
        self.c.nrows()
    }

    fn value(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.a * x)) + x.dot(&(&self.b * y)) - 0.5 * y.dot(&(&self.c * y))
    }

    fn grads_into(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
        gx: &mut DVector<f64>,
        gy: &mut DVector<f64>,
    ) {
        gx.gemv(1.0, &self.a, x, 0.0);
        gx.gemv(1.0, &self.b, y, 1.0);
        gy.gemv_tr(1.0, &self.b, x, 0.0);
        gy.gemv(-1.0, &self.c, y, 1.0);
    }

    fn params(&self) -> ProblemParams {
        self.params
    }

    fn project_solution(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        let n = x.len();
        let z = DVector::from_iterator(n + y.len(), x.iter().chain(y.iter()).copied());
        let coeffs = self.null_basis.tr_mul(&z);
        let p = &self.null_basis * coeffs;
        Ok((p.rows(0, n).into_owned(), p.rows(n, y.len()).into_owned()))
    }
}

/// `f(s) = 0` on `[−1, 1]`, `(|s| − 1)²` outside; convex with a 2-Lipschitz
/// derivative.
pub fn dead_zone(s: f64) -> f64 {
    if s > 1.0 {
        (s - 1.0) * (s - 1.0)
    } else if s < -1.0 {
        (s + 1.0) * (s + 1.0)
    } else {
        0.0
    }
}

/// Derivative of [`dead_zone`]; zero at the kinks `s = ±1`.
pub fn dead_zone_prime(s: f64) -> f64 {
    if s > 1.0 {
        2.0 * (s - 1.0)
    } else if s < -1.0 {
        2.0 * (s + 1.0)
    } else {
        0.0
    }
}

/// One-dimensional example `F(x, y) = f(x + y) − 2y²` with `f` the
/// [`dead_zone`] function. Not strongly convex in `x`, yet it has quadratic
/// gradient growth. Solution set `{(x, 0) : |x| ≤ 1}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct PiecewiseQggExample;

fn scalar(v: &DVector<f64>) -> f64 {
    v[0]
}

impl SaddleOracle for PiecewiseQggExample {
    fn dim_x(&self) -> usize {
        1
    }

    fn dim_y(&self) -> usize {
        1
    }

    fn value(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let (x, y) = (scalar(x), scalar(y));
        dead_zone(x + y) - 2.0 * y * y
    }

    fn grads_into(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
        gx: &mut DVector<f64>,
        gy: &mut DVector<f64>,
    ) {
        let (x, y) = (scalar(x), scalar(y));
        let fp = dead_zone_prime(x + y);
        gx[0] = fp;
        gy[0] = fp - 4.0 * y;
    }

    /// `∂²F/∂x² = f″ ∈ [0, 2]`, `−∂²F/∂y² = 4 − f″ ∈ [2, 4]`,
    /// `∂²F/∂x∂y = f″ ∈ [0, 2]`.
    fn params(&self) -> ProblemParams {
        ProblemParams::new(2.0, 4.0, 2.0, 0.0, 2.0).expect("static constants")
    }

    fn project_solution(
        &self,
        x: &DVector<f64>,
        _y: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        Ok((
            DVector::from_element(1, scalar(x).clamp(-1.0, 1.0)),
            DVector::zeros(1),
        ))
    }
}

/// Uncoupled example `F(x, y) = f(x) − f(y)`: neither strongly convex nor
/// strongly concave. Solution set `[−1, 1]²`.
#[derive(Debug, Clone, Copy, Default)]
pub struct UncoupledPiecewise;

impl SaddleOracle for UncoupledPiecewise {
    fn dim_x(&self) -> usize {
        1
    }

    fn dim_y(&self) -> usize {
        1
    }

    fn value(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        dead_zone(scalar(x)) - dead_zone(scalar(y))
    }

    fn grads_into(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
        gx: &mut DVector<f64>,
        gy: &mut DVector<f64>,
    ) {
        gx[0] = dead_zone_prime(scalar(x));
        gy[0] = -dead_zone_prime(scalar(y));
    }

    fn params(&self) -> ProblemParams {
        ProblemParams::new(2.0, 2.0, 0.0, 0.0, 0.0).expect("static constants")
    }

    fn project_solution(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        Ok((
            DVector::from_element(1, scalar(x).clamp(-1.0, 1.0)),
            DVector::from_element(1, scalar(y).clamp(-1.0, 1.0)),
        ))
    }
}

/// Iterates of gradient descent-ascent with squared distances to the
/// solution set (or to a designated saddle point).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub iterates: Vec<(DVector<f64>, DVector<f64>)>,
    pub distances_sq: Vec<f64>,
    pub step: f64,
}
