//! Gram-matrix formulation of the one-step worst-case problem.
//!
//! The iterate `(x¹, y¹)` is normalized, the saddle point sits at the origin
//! and `x² = x¹ − t·Gx¹¹`, `y² = y¹ + t·Gy¹¹` are expressed through the
//! Gram columns. `Gxⁱʲ` (`Gyⁱʲ`) is the partial gradient in `x` (`y`) at the
//! point `(xⁱ, yʲ)`, `i, j ∈ {1, 2, ★}`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracles::{check_dims, eval_grads, SaddleOracle};
use crate::params::ProblemParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Point {
    One,
    Two,
    Star,
}

impl Point {
    pub fn label(self) -> &'static str {
        match self {
            Point::One => "1",
            Point::Two => "2",
            Point::Star => "*",
        }
    }
}

/// Which points enter the program. `Full` uses `{1, 2, ★}`; `Reduced` drops
/// the second iterate, whose gradients never reach the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Layout {
    #[default]
    Full,
    Reduced,
}

impl Layout {
    pub fn points(self) -> &'static [Point] {
        match self {
            Layout::Full => &[Point::One, Point::Two, Point::Star],
            Layout::Reduced => &[Point::One, Point::Star],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConstraintKind {
    /// Convex interpolation in `x` between `xⁱ` and `xʲ` at `yᵏ`.
    InterpX { k: Point, i: Point, j: Point },
    /// Concave interpolation in `y` between `yⁱ` and `yʲ` at `xᵏ`.
    InterpY { k: Point, i: Point, j: Point },
    /// `‖Gxᵏⁱ − Gxᵏʲ‖² ≤ Lxy²‖yⁱ − yʲ‖²`.
    CrossX { k: Point, i: Point, j: Point },
    /// `‖Gyⁱᵏ − Gyʲᵏ‖² ≤ Lxy²‖xⁱ − xʲ‖²`.
    CrossY { k: Point, i: Point, j: Point },
    /// `μF(‖x¹‖² + ‖y¹‖²) ≤ ⟨Gx¹¹, x¹⟩ − ⟨Gy¹¹, y¹⟩`.
    Growth,
}

/// Affine inequality `⟨X_c, X⟩ + ⟨Y_c, Y⟩ + ⟨f_c, F⟩ ≤ 0` with symmetric
/// coefficient matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub f: DVector<f64>,
}

impl Constraint {
    pub fn eval(&self, gx: &DMatrix<f64>, gy: &DMatrix<f64>, fvals: &DVector<f64>) -> f64 {
        self.x.dot(gx) + self.y.dot(gy) + self.f.dot(fvals)
    }
}

/// Column of a Gram block: the iterate `x¹` (`y¹`) or a gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Column {
    Iterate,
    Grad(Point, Point),
}

/// Gram-relaxed worst-case program: maximize the objective over positive
/// semidefinite `X`, `Y` and values `F` subject to the constraints and the
/// normalization `⟨N_X, X⟩ + ⟨N_Y, Y⟩ = s`.
///
/// X columns (full layout): `x¹, Gx¹¹, Gx¹², Gx¹★, Gx²¹, Gx²², Gx²★, Gx★¹,
/// Gx★²`. Y columns: `y¹, Gy¹¹, Gy²¹, Gy★¹, Gy¹², Gy²², Gy★², Gy¹★, Gy²★`.
/// Values `F¹¹, F¹², F¹★, F²¹, F²², F²★, F★¹, F★²` with `F★★ = 0`.
#[derive(Debug, Clone)]
pub struct PepProgram {
    pub layout: Layout,
    pub step: f64,
    pub x_columns: Vec<Column>,
    pub y_columns: Vec<Column>,
    pub f_index: Vec<(Point, Point)>,
    pub constraints: Vec<Constraint>,
    pub objective: (DMatrix<f64>, DMatrix<f64>),
    pub normalization: (DMatrix<f64>, DMatrix<f64>),
    pub normalization_value: f64,
    pub warnings: Vec<String>,
}

/// Builder options shared by both program families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    pub layout: Layout,
    pub normalization: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            layout: Layout::Full,
            normalization: 1.0,
        }
    }
}

fn sym(u: &DVector<f64>, v: &DVector<f64>) -> DMatrix<f64> {
    let m = u * v.transpose();
    (&m + m.transpose()) * 0.5
}

struct Builder {
    pts: &'static [Point],
    x_columns: Vec<Column>,
    y_columns: Vec<Column>,
    f_index: Vec<(Point, Point)>,
    t: f64,
}

impl Builder {
    fn new(layout: Layout, t: f64) -> Self {
        let pts = layout.points();
        let mut x_columns = vec![Column::Iterate];
        let mut f_index = Vec::new();
        for &p in pts {
            for &q in pts {
                if (p, q) != (Point::Star, Point::Star) {
                    x_columns.push(Column::Grad(p, q));
                    f_index.push((p, q));
                }
            }
        }
        let mut y_columns = vec![Column::Iterate];
        for &q in pts {
            for &p in pts {
                if (p, q) != (Point::Star, Point::Star) {
                    y_columns.push(Column::Grad(p, q));
                }
            }
        }
        Builder {
            pts,
            x_columns,
            y_columns,
            f_index,
            t,
        }
    }

    fn unit(cols: &[Column], c: Column) -> DVector<f64> {
        let mut v = DVector::zeros(cols.len());
        if let Some(k) = cols.iter().position(|&d| d == c) {
            v[k] = 1.0;
        }
        v
    }

    /// Gradient column; the zero vector for `(★, ★)`.
    fn gx(&self, p: Point, q: Point) -> DVector<f64> {
        Self::unit(&self.x_columns, Column::Grad(p, q))
    }

    fn gy(&self, p: Point, q: Point) -> DVector<f64> {
        Self::unit(&self.y_columns, Column::Grad(p, q))
    }

    fn xpos(&self, p: Point) -> DVector<f64> {
        let x1 = Self::unit(&self.x_columns, Column::Iterate);
        match p {
            Point::One => x1,
            Point::Two => x1 - self.t * self.gx(Point::One, Point::One),
            Point::Star => DVector::zeros(self.x_columns.len()),
        }
    }

    fn ypos(&self, p: Point) -> DVector<f64> {
        let y1 = Self::unit(&self.y_columns, Column::Iterate);
        match p {
            Point::One => y1,
            Point::Two => y1 + self.t * self.gy(Point::One, Point::One),
            Point::Star => DVector::zeros(self.y_columns.len()),
        }
    }

    fn fvec(&self, terms: &[(Point, Point, f64)]) -> DVector<f64> {
        let mut f = DVector::zeros(self.f_index.len());
        for &(p, q, c) in terms {
            if let Some(k) = self.f_index.iter().position(|&e| e == (p, q)) {
                f[k] += c;
            }
        }
        f
    }

    fn zx(&self) -> DMatrix<f64> {
        DMatrix::zeros(self.x_columns.len(), self.x_columns.len())
    }

    fn zy(&self) -> DMatrix<f64> {
        DMatrix::zeros(self.y_columns.len(), self.y_columns.len())
    }

    fn pairs(&self) -> Vec<(Point, Point)> {
        let mut out = Vec::new();
        for &i in self.pts {
            for &j in self.pts {
                if i != j {
                    out.push((i, j));
                }
            }
        }
        out
    }

    fn unordered_pairs(&self) -> Vec<(Point, Point)> {
        let mut out = Vec::new();
        for (a, &i) in self.pts.iter().enumerate() {
            for &j in &self.pts[a + 1..] {
                out.push((i, j));
            }
        }
        out
    }

    fn constraints(&self, lx: f64, ly: f64, lxy: f64, mu_x: f64, mu_y: f64) -> Vec<Constraint> {
        let mut rows = Vec::new();
        let cx = 1.0 / (2.0 * (1.0 - mu_x / lx));
        for &k in self.pts {
            for (i, j) in self.pairs() {
                let dx = self.xpos(i) - self.xpos(j);
                let dg = self.gx(i, k) - self.gx(j, k);
                let x = cx * (sym(&dg, &dg) / lx + mu_x * sym(&dx, &dx)
                    - 2.0 * mu_x / lx * sym(&dg, &dx))
                    + sym(&self.gx(j, k), &dx);
                rows.push(Constraint {
                    kind: ConstraintKind::InterpX { k, i, j },
                    x,
                    y: self.zy(),
                    f: self.fvec(&[(i, k, -1.0), (j, k, 1.0)]),
                });
            }
        }
        let cy = 1.0 / (2.0 * (1.0 - mu_y / ly));
        for &k in self.pts {
            for (i, j) in self.pairs() {
                let dy = self.ypos(i) - self.ypos(j);
                let dg = self.gy(k, i) - self.gy(k, j);
                let y = cy * (sym(&dg, &dg) / ly + mu_y * sym(&dy, &dy)
                    + 2.0 * mu_y / ly * sym(&dg, &dy))
                    - sym(&self.gy(k, j), &dy);
                rows.push(Constraint {
                    kind: ConstraintKind::InterpY { k, i, j },
                    x: self.zx(),
                    y,
                    f: self.fvec(&[(k, i, 1.0), (k, j, -1.0)]),
                });
            }
        }
        let l2 = lxy * lxy;
        for &k in self.pts {
            for (i, j) in self.unordered_pairs() {
                let dg = self.gx(k, i) - self.gx(k, j);
                let dy = self.ypos(i) - self.ypos(j);
                rows.push(Constraint {
                    kind: ConstraintKind::CrossX { k, i, j },
                    x: sym(&dg, &dg),
                    y: -l2 * sym(&dy, &dy),
                    f: self.fvec(&[]),
                });
            }
        }
        for &k in self.pts {
            for (i, j) in self.unordered_pairs() {
                let dg = self.gy(i, k) - self.gy(j, k);
                let dx = self.xpos(i) - self.xpos(j);
                rows.push(Constraint {
                    kind: ConstraintKind::CrossY { k, i, j },
                    x: -l2 * sym(&dx, &dx),
                    y: sym(&dg, &dg),
                    f: self.fvec(&[]),
                });
            }
        }
        rows
    }

    fn finish(
        self,
        layout: Layout,
        constraints: Vec<Constraint>,
        opts: &BuildOptions,
        warnings: Vec<String>,
    ) -> PepProgram {
        let x2 = self.xpos(Point::Two);
        let y2 = self.ypos(Point::Two);
        let x1 = self.xpos(Point::One);
        let y1 = self.ypos(Point::One);
        PepProgram {
            layout,
            step: self.t,
            objective: (sym(&x2, &x2), sym(&y2, &y2)),
            normalization: (sym(&x1, &x1), sym(&y1, &y1)),
            normalization_value: opts.normalization,
            constraints,
            x_columns: self.x_columns,
            y_columns: self.y_columns,
            f_index: self.f_index,
            warnings,
        }
    }
}

fn check_common(t: f64, opts: &BuildOptions) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::StepOutOfRange {
            t,
            lower: 0.0,
            upper: f64::INFINITY,
        });
    }
    if !(opts.normalization.is_finite() && opts.normalization > 0.0) {
        return Err(Error::InvalidParams(format!(
            "normalization {} must be positive",
            opts.normalization
        )));
    }
    Ok(())
}

/// Program for smooth strongly convex-strongly concave functions with the
/// constants in `params`.
pub fn build_pep_strongly_convex(params: &ProblemParams, t: f64) -> Result<PepProgram> {
    build_pep_strongly_convex_with(params, t, &BuildOptions::default())
}

pub fn build_pep_strongly_convex_with(
    params: &ProblemParams,
    t: f64,
    opts: &BuildOptions,
) -> Result<PepProgram> {
    check_common(t, opts)?;
    if params.lx() <= 0.0 || params.ly() <= 0.0 {
        return Err(Error::InvalidParams("Lx and Ly must be positive".into()));
    }
    if params.mu_x() >= params.lx() || params.mu_y() >= params.ly() {
        return Err(Error::InvalidParams(format!(
            "interpolation needs mu < L on each block, got mu_x = {}, Lx = {}, mu_y = {}, Ly = {}",
            params.mu_x(),
            params.lx(),
            params.mu_y(),
            params.ly()
        )));
    }
    let b = Builder::new(opts.layout, t);
    let rows = b.constraints(params.lx(), params.ly(), params.lxy(), params.mu_x(), params.mu_y());
    Ok(b.finish(opts.layout, rows, opts, Vec::new()))
}

/// Program for smooth convex-concave functions with quadratic gradient
/// growth `mu_f` (`Lx = Ly = l`, no strong convexity in the interpolation
/// conditions).
pub fn build_pep_qgg(l: f64, lxy: f64, mu_f: f64, t: f64) -> Result<PepProgram> {
    build_pep_qgg_with(l, lxy, mu_f, t, &BuildOptions::default())
}

pub fn build_pep_qgg_with(
    l: f64,
    lxy: f64,
    mu_f: f64,
    t: f64,
    opts: &BuildOptions,
) -> Result<PepProgram> {
    check_common(t, opts)?;
    if !(l.is_finite() && l > 0.0) || !(lxy.is_finite() && lxy >= 0.0) {
        return Err(Error::InvalidParams(format!("need L > 0, Lxy >= 0, got L = {l}, Lxy = {lxy}")));
    }
    if !mu_f.is_finite() || mu_f < 0.0 || mu_f >= l {
        return Err(Error::InvalidParams(format!(
            "need 0 <= muF < L, got muF = {mu_f}, L = {l}"
        )));
    }
    let mut warnings = Vec::new();
    if mu_f == 0.0 {
        warnings.push("muF = 0 makes the growth constraint vacuous".to_string());
        log::warn!("muF = 0 makes the growth constraint vacuous");
    }
    let b = Builder::new(opts.layout, t);
    let mut rows = b.constraints(l, l, lxy, 0.0, 0.0);
    let x1 = b.xpos(Point::One);
    let y1 = b.ypos(Point::One);
    let gx11 = b.gx(Point::One, Point::One);
    let gy11 = b.gy(Point::One, Point::One);
    rows.push(Constraint {
        kind: ConstraintKind::Growth,
        x: mu_f * sym(&x1, &x1) - sym(&gx11, &x1),
        y: mu_f * sym(&y1, &y1) + sym(&gy11, &y1),
        f: b.fvec(&[]),
    });
    Ok(b.finish(opts.layout, rows, opts, warnings))
}

impl PepProgram {
    pub fn nx(&self) -> usize {
        self.x_columns.len()
    }

    pub fn ny(&self) -> usize {
        self.y_columns.len()
    }

    pub fn nf(&self) -> usize {
        self.f_index.len()
    }

    /// Objective divided by the normalization, i.e. the squared-distance
    /// ratio represented by `(X, Y)`.
    pub fn ratio(&self, gx: &DMatrix<f64>, gy: &DMatrix<f64>) -> f64 {
        let num = self.objective.0.dot(gx) + self.objective.1.dot(gy);
        let den = self.normalization.0.dot(gx) + self.normalization.1.dot(gy);
        num / den
    }

    /// Largest violation of the inequalities and the normalization at a
    /// candidate point.
    pub fn max_violation(&self, gx: &DMatrix<f64>, gy: &DMatrix<f64>, fvals: &DVector<f64>) -> f64 {
        let ineq = self
            .constraints
            .iter()
            .map(|c| c.eval(gx, gy, fvals).max(0.0))
            .fold(0.0, f64::max);
        let norm = self.normalization.0.dot(gx) + self.normalization.1.dot(gy);
        ineq.max((norm - self.normalization_value).abs())
    }

    /// Gram point of one step of GDA on a concrete oracle from `(x1, y1)`
    /// around the saddle point `(xs, ys)`, scaled to satisfy the
    /// normalization.
    pub fn realize<O: SaddleOracle + ?Sized>(
        &self,
        oracle: &O,
        x1: &DVector<f64>,
        y1: &DVector<f64>,
        xs: &DVector<f64>,
        ys: &DVector<f64>,
    ) -> Result<(DMatrix<f64>, DMatrix<f64>, DVector<f64>)> {
        let (gx1, gy1) = eval_grads(oracle, x1, y1)?;
        check_dims(oracle, xs, ys)?;
        let x2 = x1 - self.step * &gx1;
        let y2 = y1 + self.step * &gy1;
        let xp = |p: Point| match p {
            Point::One => x1,
            Point::Two => &x2,
            Point::Star => xs,
        };
        let yp = |p: Point| match p {
            Point::One => y1,
            Point::Two => &y2,
            Point::Star => ys,
        };
        let xcols: Vec<DVector<f64>> = self
            .x_columns
            .iter()
            .map(|c| match *c {
                Column::Iterate => x1 - xs,
                Column::Grad(p, q) => oracle.grad_x(xp(p), yp(q)),
            })
            .collect();
        let ycols: Vec<DVector<f64>> = self
            .y_columns
            .iter()
            .map(|c| match *c {
                Column::Iterate => y1 - ys,
                Column::Grad(p, q) => oracle.grad_y(xp(p), yp(q)),
            })
            .collect();
        let gram = |cols: &[DVector<f64>]| {
            DMatrix::from_fn(cols.len(), cols.len(), |i, j| cols[i].dot(&cols[j]))
        };
        let (gx, gy) = (gram(&xcols), gram(&ycols));
        let f0 = oracle.value(xs, ys);
        let fvals = DVector::from_iterator(
            self.nf(),
            self.f_index
                .iter()
                .map(|&(p, q)| oracle.value(xp(p), yp(q)) - f0),
        );
        let norm = self.normalization.0.dot(&gx) + self.normalization.1.dot(&gy);
        if norm <= 0.0 {
            return Err(Error::ZeroDistance);
        }
        let s = self.normalization_value / norm;
        Ok((gx * s, gy * s, fvals * s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ProblemParams {
        ProblemParams::symmetric(2.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn column_order() {
        use Point::*;
        let p = build_pep_strongly_convex(&params(), 0.5).unwrap();
        assert_eq!(
            p.x_columns,
            vec![
                Column::Iterate,
                Column::Grad(One, One),
                Column::Grad(One, Two),
                Column::Grad(One, Star),
                Column::Grad(Two, One),
                Column::Grad(Two, Two),
                Column::Grad(Two, Star),
                Column::Grad(Star, One),
                Column::Grad(Star, Two),
            ]
        );
        assert_eq!(p.y_columns[1..4], [
            Column::Grad(One, One),
            Column::Grad(Two, One),
            Column::Grad(Star, One)
        ]);
        assert_eq!(p.nf(), 8);
    }

    #[test]
    fn constraint_counts() {
        let p = build_pep_strongly_convex(&params(), 0.5).unwrap();
        let count = |f: fn(&ConstraintKind) -> bool| p.constraints.iter().filter(|c| f(&c.kind)).count();
        assert_eq!(count(|k| matches!(k, ConstraintKind::InterpX { .. })), 18);
        assert_eq!(count(|k| matches!(k, ConstraintKind::InterpY { .. })), 18);
        assert_eq!(count(|k| matches!(k, ConstraintKind::CrossX { .. })), 9);
        assert_eq!(count(|k| matches!(k, ConstraintKind::CrossY { .. })), 9);
        assert_eq!(p.constraints.len() + 1, 55);
        let q = build_pep_qgg(2.0, 1.0, 1.0, 0.2).unwrap();
        assert_eq!(q.constraints.len(), p.constraints.len() + 1);
        assert!(q.warnings.is_empty());
        let r = build_pep_strongly_convex_with(
            &params(),
            0.5,
            &BuildOptions {
                layout: Layout::Reduced,
                normalization: 1.0,
            },
        )
        .unwrap();
        assert_eq!((r.nx(), r.ny(), r.nf(), r.constraints.len()), (4, 4, 3, 12));
    }

    #[test]
    fn objective_without_gradients() {
        let p = build_pep_strongly_convex(&params(), 0.5).unwrap();
        let mut gx = DMatrix::zeros(9, 9);
        let mut gy = DMatrix::zeros(9, 9);
        gx[(0, 0)] = 1.0;
        gy[(0, 0)] = 1.0;
        assert_eq!(p.ratio(&gx, &gy), 1.0);
        let q = build_pep_qgg(2.0, 1.0, 0.0, 0.5).unwrap();
        assert_eq!(q.objective, p.objective);
        assert_eq!(q.normalization, p.normalization);
        assert_eq!(q.warnings.len(), 1);
    }

    #[test]
    fn degenerate_blocks_rejected() {
        let p = ProblemParams::symmetric(2.0, 2.0, 1.0).unwrap();
        assert!(build_pep_strongly_convex(&p, 0.5).is_err());
        assert!(build_pep_qgg(2.0, 1.0, 2.0, 0.5).is_err());
        assert!(build_pep_strongly_convex(&params(), 0.0).is_err());
    }

    /// A realized quadratic instance gives a feasible Gram point whose ratio
    /// matches the measured one.
    #[test]
    fn quadratic_instance_is_feasible() {
        use crate::oracles::QuadraticSaddle;
        let q = QuadraticSaddle::from_params(&params());
        let t = 0.5;
        let x1 = DVector::from_vec(vec![0.3, 0.8]);
        let y1 = DVector::from_vec(vec![-0.5, 0.1]);
        let z = DVector::zeros(2);
        let prog = build_pep_strongly_convex(&params(), t).unwrap();
        let (gx, gy, fvals) = prog.realize(&q, &x1, &y1, &z, &z).unwrap();
        assert!(prog.max_violation(&gx, &gy, &fvals) <= 1e-12);
        let (gx1, gy1) = crate::oracles::eval_grads(&q, &x1, &y1).unwrap();
        let x2 = &x1 - t * &gx1;
        let y2 = &y1 + t * &gy1;
        let measured = (x2.norm_squared() + y2.norm_squared()) / (x1.norm_squared() + y1.norm_squared());
        assert!((prog.ratio(&gx, &gy) - measured).abs() < 1e-12);
    }
}
