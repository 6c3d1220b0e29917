//! Dense two-block SDP solver for [`PepProgram`].
//!
//! The optimal value is found by bisection on the level `α`: the program is
//! feasible at level `α` when some point satisfies the constraints with
//! objective `≥ α·s`. Each level is a conic feasibility problem
//! `v ∈ K ∩ A(α)` with `K = PSD × PSD × free × R₊` (Gram blocks, function
//! values, slacks) and `A(α)` an affine set, solved by Douglas-Rachford
//! splitting. Infeasibility is detected from the diverging difference
//! sequence, which approximates a separating direction.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pep::program::PepProgram;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SdpStatus {
    Optimal,
    MaxIter,
    /// Not even level 0 is feasible: the constraint set is empty.
    Infeasible,
    /// The upper end of the bisection bracket is feasible.
    BracketExceeded,
}

impl SdpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SdpStatus::Optimal => "optimal",
            SdpStatus::MaxIter => "max-iter",
            SdpStatus::Infeasible => "infeasible",
            SdpStatus::BracketExceeded => "bracket-exceeded",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    /// Optimal ratio of objective to normalization.
    pub value: f64,
    /// Feasible point polished at a level just below the bracket.
    pub gram_x: DMatrix<f64>,
    pub gram_y: DMatrix<f64>,
    pub fvals: DVector<f64>,
    pub status: SdpStatus,
    /// Larger of the constraint violation at the returned point and the
    /// half-width of the final bisection bracket.
    pub kkt_residual: f64,
    /// Final bisection bracket `(feasible, infeasible)`.
    pub bracket: (f64, f64),
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Bracket width and per-level fixed-point tolerance.
    pub tol: f64,
    /// Splitting iterations per level.
    pub max_iter: usize,
    pub max_bisect: usize,
    pub bracket_hi: f64,
    /// Residual target when polishing the final feasible point.
    pub polish_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-6,
            max_iter: 100_000,
            max_bisect: 50,
            bracket_hi: 1.5,
            polish_tol: 1e-10,
        }
    }
}

/// Checks of the separating-direction ratio start after this many
/// iterations and repeat at this period.
const CHECK_PERIOD: usize = 100;
const INFEASIBLE_RATIO: f64 = 100.0;
const RUIZ_PASSES: usize = 25;
/// Displacement test: relative drift of the difference between doubling
/// checkpoints, and the smallest displacement (in units of `tol`).
const STALL_DRIFT: f64 = 1e-3;
const DISPLACEMENT_FLOOR: f64 = 10.0;
const AA_MEMORY: usize = 10;
const AA_REGULARIZATION: f64 = 1e-10;
/// Largest accepted growth of the residual after an extrapolated step.
const AA_SAFEGUARD: f64 = 1.0;
/// A level counts as feasible once the cone point satisfies the unscaled
/// constraints and reaches the level, both to this multiple of `tol`.
const ACCEPT_VIOLATION: f64 = 1.0;
/// Each failed acceptance tightens the residual target tenfold, down to
/// this multiple of `tol`; past that the level is treated as infeasible.
const MIN_TOL_FACTOR: f64 = 1e-4;
/// The returned point is polished at `lo − POLISH_BACKOFF·tol`.
const POLISH_BACKOFF: f64 = 10.0;

fn svec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

fn svec_into(m: &DMatrix<f64>, out: &mut [f64]) {
    let n = m.nrows();
    let mut k = 0;
    for j in 0..n {
        for i in 0..=j {
            out[k] = if i == j {
                m[(i, i)]
            } else {
                m[(i, j)] * std::f64::consts::SQRT_2
            };
            k += 1;
        }
    }
}

fn smat(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        for i in 0..=j {
            if i == j {
                m[(i, i)] = v[k];
            } else {
                let e = v[k] / std::f64::consts::SQRT_2;
                m[(i, j)] = e;
                m[(j, i)] = e;
            }
            k += 1;
        }
    }
    m
}

fn project_psd(v: &mut [f64], n: usize) {
    let eig = SymmetricEigen::new(smat(v, n));
    if eig.eigenvalues.iter().all(|&w| w >= 0.0) {
        return;
    }
    let w = eig.eigenvalues.map(|w| w.max(0.0));
    let q = &eig.eigenvectors;
    let m = q * DMatrix::from_diagonal(&w) * q.transpose();
    svec_into(&m, v);
}

/// Affine description `M v = b0 + α·b1` and the projector onto it.
struct Affine {
    mx: usize,
    my: usize,
    nf: usize,
    nx: usize,
    ny: usize,
    q: DMatrix<f64>,
    c0: DVector<f64>,
    c1: DVector<f64>,
    /// `(MMᵀ)⁻¹M`, mapping a difference to its constraint-space multiplier.
    lift: DMatrix<f64>,
    m: DMatrix<f64>,
    b0: DVector<f64>,
    b1: DVector<f64>,
    /// Variable scaling: the solver works with `v / scale`.
    scale: DVector<f64>,
}

/// Entry scales `d_i·d_j` of a diagonal congruence in svec order.
fn svec_scale(d: &[f64], out: &mut [f64]) {
    let mut k = 0;
    for j in 0..d.len() {
        for i in 0..=j {
            out[k] = d[i] * d[j];
            k += 1;
        }
    }
}

/// Ruiz equilibration of the columns of `m`, restricted to a diagonal
/// congruence on each Gram block so the cone is preserved.
fn equilibrate(m: &DMatrix<f64>, nx: usize, ny: usize) -> DVector<f64> {
    let (mx, my) = (svec_len(nx), svec_len(ny));
    let n = m.ncols();
    let mut dx = vec![1.0; nx];
    let mut dy = vec![1.0; ny];
    let mut rest = vec![1.0; n - mx - my];
    let mut scale = DVector::from_element(n, 1.0);
    for _ in 0..RUIZ_PASSES {
        svec_scale(&dx, &mut scale.as_mut_slice()[..mx]);
        svec_scale(&dy, &mut scale.as_mut_slice()[mx..mx + my]);
        scale.as_mut_slice()[mx + my..].copy_from_slice(&rest);
        let mut sm = m.clone();
        for (j, mut c) in sm.column_iter_mut().enumerate() {
            c *= scale[j];
        }
        for mut r in sm.row_iter_mut() {
            let norm = r.amax();
            if norm > 0.0 {
                r /= norm;
            }
        }
        let col: Vec<f64> = sm.column_iter().map(|c| c.amax()).collect();
        let block = |d: &mut [f64], off: usize| {
            let mut norm = vec![0.0f64; d.len()];
            let mut k = off;
            for j in 0..d.len() {
                for i in 0..=j {
                    norm[i] = norm[i].max(col[k]);
                    norm[j] = norm[j].max(col[k]);
                    k += 1;
                }
            }
            for (e, w) in d.iter_mut().zip(norm) {
                if w > 0.0 {
                    *e /= w.sqrt();
                }
            }
        };
        block(&mut dx, 0);
        block(&mut dy, mx);
        for (e, &w) in rest.iter_mut().zip(&col[mx + my..]) {
            if w > 0.0 {
                *e /= w.sqrt();
            }
        }
    }
    svec_scale(&dx, &mut scale.as_mut_slice()[..mx]);
    svec_scale(&dy, &mut scale.as_mut_slice()[mx..mx + my]);
    scale.as_mut_slice()[mx + my..].copy_from_slice(&rest);
    scale
}

impl Affine {
    fn new(prog: &PepProgram) -> Result<Self> {
        let (nx, ny, nf) = (prog.nx(), prog.ny(), prog.nf());
        let (mx, my) = (svec_len(nx), svec_len(ny));
        let ncon = prog.constraints.len();
        let n = mx + my + nf + ncon + 1;
        let rows = ncon + 2;
        let mut m = DMatrix::zeros(rows, n);
        let mut b0 = DVector::zeros(rows);
        let mut b1 = DVector::zeros(rows);
        let mut buf = vec![0.0; mx.max(my)];
        let mut put = |m: &mut DMatrix<f64>, r: usize, x: &DMatrix<f64>, y: &DMatrix<f64>, sign: f64| {
            svec_into(x, &mut buf[..mx]);
            for k in 0..mx {
                m[(r, k)] = sign * buf[k];
            }
            svec_into(y, &mut buf[..my]);
            for k in 0..my {
                m[(r, mx + k)] = sign * buf[k];
            }
        };
        for (r, c) in prog.constraints.iter().enumerate() {
            put(&mut m, r, &c.x, &c.y, 1.0);
            for k in 0..nf {
                m[(r, mx + my + k)] = c.f[k];
            }
            m[(r, mx + my + nf + r)] = 1.0;
        }
        // objective − slack = α·s
        put(&mut m, ncon, &prog.objective.0, &prog.objective.1, -1.0);
        m[(ncon, n - 1)] = 1.0;
        b1[ncon] = -prog.normalization_value;
        put(&mut m, ncon + 1, &prog.normalization.0, &prog.normalization.1, 1.0);
        b0[ncon + 1] = prog.normalization_value;

        let scale = equilibrate(&m, nx, ny);
        for (j, mut c) in m.column_iter_mut().enumerate() {
            c *= scale[j];
        }
        let mmt = &m * m.transpose();
        let inv = mmt
            .cholesky()
            .ok_or_else(|| Error::InvalidParams("constraint rows are linearly dependent".into()))?
            .inverse();
        let lift = &inv * &m;
        let pinv = lift.transpose();
        let q = DMatrix::identity(n, n) - &pinv * &m;
        let c0 = &pinv * &b0;
        let c1 = &pinv * &b1;
        Ok(Affine {
            mx,
            my,
            nf,
            nx,
            ny,
            q,
            c0,
            c1,
            lift,
            m,
            b0,
            b1,
            scale,
        })
    }

    fn len(&self) -> usize {
        self.q.nrows()
    }

    fn project_cone(&self, v: &DVector<f64>, out: &mut DVector<f64>) {
        out.copy_from(v);
        let s = out.as_mut_slice();
        project_psd(&mut s[..self.mx], self.nx);
        project_psd(&mut s[self.mx..self.mx + self.my], self.ny);
        for e in &mut s[self.mx + self.my + self.nf..] {
            *e = e.max(0.0);
        }
    }

    /// Ratio of the level's right-hand side along the multiplier of `d` to
    /// the cone part of the lifted direction; large values certify that the
    /// level is infeasible.
    fn separation_ratio(&self, alpha: f64, d: &DVector<f64>, scratch: &mut DVector<f64>) -> f64 {
        let y = &self.lift * d;
        let v = self.m.tr_mul(&y);
        self.project_cone(&v, scratch);
        let by = self.b0.dot(&y) + alpha * self.b1.dot(&y);
        by / scratch.norm().max(f64::MIN_POSITIVE)
    }

    /// Unscaled Gram blocks and function values of a scaled point.
    fn split(&self, v: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
        let v = v.component_mul(&self.scale);
        let s = v.as_slice();
        let gx = smat(&s[..self.mx], self.nx);
        let gy = smat(&s[self.mx..self.mx + self.my], self.ny);
        let f = DVector::from_column_slice(&s[self.mx + self.my..self.mx + self.my + self.nf]);
        (gx, gy, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Verdict {
    Feasible,
    Infeasible,
    Undecided,
}

/// Short memory of iterate and residual differences for Anderson
/// acceleration of the splitting map.
struct Anderson {
    dz: VecDeque<DVector<f64>>,
    dg: VecDeque<DVector<f64>>,
}

impl Anderson {
    fn new() -> Self {
        Anderson {
            dz: VecDeque::with_capacity(AA_MEMORY),
            dg: VecDeque::with_capacity(AA_MEMORY),
        }
    }

    fn clear(&mut self) {
        self.dz.clear();
        self.dg.clear();
    }

    fn push(&mut self, dz: DVector<f64>, dg: DVector<f64>) {
        if self.dz.len() == AA_MEMORY {
            self.dz.pop_front();
            self.dg.pop_front();
        }
        self.dz.push_back(dz);
        self.dg.push_back(dg);
    }

    /// Extrapolated next point from `z` and its residual `g`, or the plain
    /// step `z + g` when the least-squares system is degenerate.
    fn step(&self, z: &DVector<f64>, g: &DVector<f64>) -> DVector<f64> {
        let mut next = z + g;
        let m = self.dg.len();
        if m == 0 {
            return next;
        }
        let mut gram = DMatrix::zeros(m, m);
        let mut rhs = DVector::zeros(m);
        for i in 0..m {
            rhs[i] = self.dg[i].dot(g);
            for j in 0..=i {
                let v = self.dg[i].dot(&self.dg[j]);
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
        }
        let reg = AA_REGULARIZATION * gram.trace().max(f64::MIN_POSITIVE);
        for i in 0..m {
            gram[(i, i)] += reg;
        }
        let Some(chol) = gram.cholesky() else {
            return next;
        };
        let gamma = chol.solve(&rhs);
        for i in 0..m {
            next.axpy(-gamma[i], &self.dz[i], 1.0);
            next.axpy(-gamma[i], &self.dg[i], 1.0);
        }
        next
    }
}

/// Douglas-Rachford iterations at one level, optionally with safeguarded
/// Anderson acceleration, updating `z` in place.
fn feasibility(
    aff: &Affine,
    alpha: f64,
    z: &mut DVector<f64>,
    tol: f64,
    max_iter: usize,
    accelerate: bool,
    accept: &dyn Fn(&DVector<f64>, f64) -> bool,
    iterations: &mut usize,
) -> Verdict {
    let n = aff.len();
    let c = &aff.c0 + alpha * &aff.c1;
    let mut u = DVector::zeros(n);
    let mut r = DVector::zeros(n);
    let mut w = DVector::zeros(n);
    let mut scratch = DVector::zeros(n);
    let mut snapshot: Option<DVector<f64>> = None;
    let mut next_snapshot = 10 * CHECK_PERIOD;
    let mut aa = Anderson::new();
    // last accepted point and its residual
    let mut prev: Option<(DVector<f64>, DVector<f64>, f64)> = None;
    let mut extrapolated = false;
    let mut tol_eff = tol;
    for it in 0..max_iter {
        *iterations += 1;
        aff.project_cone(z, &mut u);
        r.copy_from(&u);
        r.axpy(-1.0, z, 2.0);
        w.gemv(1.0, &aff.q, &r, 0.0);
        w += &c;
        w -= &u;
        let res = w.norm();
        if res < tol_eff {
            *z += &w;
            if accept(z, alpha) {
                return Verdict::Feasible;
            }
            tol_eff *= 0.1;
            if tol_eff < MIN_TOL_FACTOR * tol {
                return Verdict::Infeasible;
            }
            continue;
        }
        if extrapolated {
            if let Some((pz, pw, pres)) = &prev {
                if res > AA_SAFEGUARD * pres {
                    // fall back to the plain step from the last accepted point
                    *z = pz + pw;
                    aa.clear();
                    extrapolated = false;
                    continue;
                }
            }
        }
        if accelerate {
            if let Some((pz, pw, _)) = &prev {
                aa.push(&*z - pz, &w - pw);
            }
            prev = Some((z.clone(), w.clone(), res));
        }
        if it % CHECK_PERIOD == 0 && it > 0 && accept(z, alpha) {
            return Verdict::Feasible;
        }
        if it >= 3 * CHECK_PERIOD && it % CHECK_PERIOD == 0 {
            let rho = aff.separation_ratio(alpha, &w, &mut scratch);
            if rho > INFEASIBLE_RATIO * (1.0 + u.norm()) {
                return Verdict::Infeasible;
            }
            // without acceleration the residual converges to the minimal
            // displacement, which is nonzero exactly when the level is
            // infeasible
            if !accelerate && it >= next_snapshot {
                if let Some(old) = &snapshot {
                    let drift = (&w - old).norm();
                    if res > DISPLACEMENT_FLOOR * tol_eff && drift <= STALL_DRIFT * res && rho > 1.0 {
                        return Verdict::Infeasible;
                    }
                }
                snapshot = Some(w.clone());
                next_snapshot *= 2;
            }
        }
        if accelerate {
            *z = aa.step(z, &w);
            extrapolated = !aa.dz.is_empty();
        } else {
            *z += &w;
        }
    }
    Verdict::Undecided
}

/// Plain splitting first; an undecided level is retried with acceleration
/// from the same start.
fn decide(
    aff: &Affine,
    alpha: f64,
    z: &mut DVector<f64>,
    tol: f64,
    max_iter: usize,
    accept: &dyn Fn(&DVector<f64>, f64) -> bool,
    iterations: &mut usize,
) -> Verdict {
    let start = z.clone();
    match feasibility(aff, alpha, z, tol, max_iter, false, accept, iterations) {
        Verdict::Undecided => {
            *z = start;
            feasibility(aff, alpha, z, tol, max_iter, true, accept, iterations)
        }
        v => v,
    }
}

/// Solves with default options apart from `tol` and `max_iter`.
pub fn solve_sdp(prog: &PepProgram, tol: f64, max_iter: usize) -> Result<SdpSolution> {
    solve_sdp_with(
        prog,
        &SolverOptions {
            tol,
            max_iter,
            ..SolverOptions::default()
        },
    )
}

pub fn solve_sdp_with(prog: &PepProgram, opts: &SolverOptions) -> Result<SdpSolution> {
    if !(opts.tol > 0.0) || opts.max_iter == 0 || !(opts.bracket_hi > 0.0) {
        return Err(Error::InvalidParams(
            "solver needs tol > 0, max_iter >= 1 and a positive bracket".into(),
        ));
    }
    let aff = Affine::new(prog)?;
    let n = aff.len();
    let mut iterations = 0;
    let mut hit_limit = false;
    let slack = ACCEPT_VIOLATION * opts.tol;
    let accept = |z: &DVector<f64>, alpha: f64| {
        let mut u = DVector::zeros(z.len());
        aff.project_cone(z, &mut u);
        let (gx, gy, f) = aff.split(&u);
        let ok = prog.max_violation(&gx, &gy, &f) <= slack && prog.ratio(&gx, &gy) >= alpha - slack;
        ok
    };

    let mut z = DVector::zeros(n);
    match decide(&aff, 0.0, &mut z, opts.tol, opts.max_iter, &accept, &mut iterations) {
        Verdict::Feasible => {}
        Verdict::Infeasible => {
            return Ok(empty_solution(prog, SdpStatus::Infeasible, iterations));
        }
        Verdict::Undecided => {
            return Ok(empty_solution(prog, SdpStatus::MaxIter, iterations));
        }
    }
    let mut z_lo = z.clone();
    let (mut lo, mut hi) = (0.0, opts.bracket_hi);
    let mut hi_feasible = false;
    for _ in 0..opts.max_bisect {
        if hi - lo < opts.tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let mut z = z_lo.clone();
        match decide(&aff, mid, &mut z, opts.tol, opts.max_iter, &accept, &mut iterations) {
            Verdict::Feasible => {
                lo = mid;
                z_lo = z;
            }
            Verdict::Infeasible => hi = mid,
            Verdict::Undecided => {
                hit_limit = true;
                hi = mid;
            }
        }
    }
    if hi == opts.bracket_hi {
        let mut z = z_lo.clone();
        hi_feasible = decide(&aff, hi, &mut z, opts.tol, opts.max_iter, &accept, &mut iterations)
            == Verdict::Feasible;
        if hi_feasible {
            lo = hi;
            z_lo = z;
        }
    }

    // polish slightly below the last feasible level
    let mut z = z_lo;
    let level = (lo - POLISH_BACKOFF * opts.tol).max(0.0);
    let polished = |z: &DVector<f64>, _: f64| {
        let mut u = DVector::zeros(z.len());
        aff.project_cone(z, &mut u);
        let (gx, gy, f) = aff.split(&u);
        prog.max_violation(&gx, &gy, &f) <= opts.polish_tol
    };
    let _ = decide(&aff, level, &mut z, opts.polish_tol, opts.max_iter, &polished, &mut iterations);
    let mut u = DVector::zeros(n);
    aff.project_cone(&z, &mut u);
    let (gram_x, gram_y, fvals) = aff.split(&u);
    let violation = prog.max_violation(&gram_x, &gram_y, &fvals);
    let status = if hi_feasible {
        SdpStatus::BracketExceeded
    } else if hit_limit {
        SdpStatus::MaxIter
    } else {
        SdpStatus::Optimal
    };
    let value = if hi_feasible { lo } else { 0.5 * (lo + hi) };
    Ok(SdpSolution {
        value,
        gram_x,
        gram_y,
        fvals,
        status,
        kkt_residual: violation.max(0.5 * (hi - lo)),
        bracket: (lo, hi),
        iterations,
    })
}

fn empty_solution(prog: &PepProgram, status: SdpStatus, iterations: usize) -> SdpSolution {
    SdpSolution {
        value: f64::NAN,
        gram_x: DMatrix::zeros(prog.nx(), prog.nx()),
        gram_y: DMatrix::zeros(prog.ny(), prog.ny()),
        fvals: DVector::zeros(prog.nf()),
        status,
        kkt_residual: f64::INFINITY,
        bracket: (f64::NAN, f64::NAN),
        iterations,
    }
}
