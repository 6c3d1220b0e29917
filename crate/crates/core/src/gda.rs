//! Gradient descent-ascent with a constant step and contraction measurement.

use std::io::Write;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::oracles::{check_dims, SaddleOracle, Trajectory};

/// Factor over the initial squared distance past which [`run`] reports
/// divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e12;

fn check_step(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::StepOutOfRange {
            t,
            lower: 0.0,
            upper: f64::INFINITY,
        })
    }
}

/// One simultaneous step `x − t∇ₓF(x, y)`, `y + t∇ᵧF(x, y)`.
pub fn gda_step<O: SaddleOracle + ?Sized>(
    oracle: &O,
    x: &DVector<f64>,
    y: &DVector<f64>,
    t: f64,
) -> Result<(DVector<f64>, DVector<f64>)> {
    check_step(t)?;
    check_dims(oracle, x, y)?;
    let mut gx = DVector::zeros(x.len());
    let mut gy = DVector::zeros(y.len());
    oracle.grads_into(x, y, &mut gx, &mut gy);
    gx.axpy(1.0, x, -t);
    gy.axpy(1.0, y, t);
    Ok((gx, gy))
}

fn dist_sq<O: SaddleOracle + ?Sized>(
    oracle: &O,
    x: &DVector<f64>,
    y: &DVector<f64>,
    reference: Option<(&DVector<f64>, &DVector<f64>)>,
) -> Result<f64> {
    match oracle.project_solution(x, y) {
        Ok((px, py)) => Ok((x - px).norm_squared() + (y - py).norm_squared()),
        Err(Error::UnsupportedOracle) => match reference {
            Some((sx, sy)) => Ok((x - sx).norm_squared() + (y - sy).norm_squared()),
            None => Err(Error::UnsupportedOracle),
        },
        Err(e) => Err(e),
    }
}

/// Runs `n` steps from `(x0, y0)`.
///
/// Distances are measured to the oracle's solution set when it has a closed
/// form, otherwise to `reference`.
pub fn run<O: SaddleOracle + ?Sized>(
    oracle: &O,
    x0: &DVector<f64>,
    y0: &DVector<f64>,
    t: f64,
    n: usize,
    reference: Option<(&DVector<f64>, &DVector<f64>)>,
) -> Result<Trajectory> {
    if n == 0 {
        return Err(Error::InvalidParams("number of steps must be at least 1".into()));
    }
    check_step(t)?;
    check_dims(oracle, x0, y0)?;
    if let Some((sx, sy)) = reference {
        check_dims(oracle, sx, sy)?;
    }
    let d0 = dist_sq(oracle, x0, y0, reference)?;
    let limit = DIVERGENCE_FACTOR * d0;
    let mut iterates = Vec::with_capacity(n + 1);
    let mut distances_sq = Vec::with_capacity(n + 1);
    iterates.push((x0.clone(), y0.clone()));
    distances_sq.push(d0);
    for k in 1..=n {
        let (x, y) = &iterates[k - 1];
        let (x2, y2) = gda_step(oracle, x, y, t)?;
        let d = dist_sq(oracle, &x2, &y2, reference)?;
        if !d.is_finite() || (d0 > 0.0 && d > limit) {
            return Err(Error::Diverged {
                iteration: k,
                dist_sq: d,
                limit,
            });
        }
        iterates.push((x2, y2));
        distances_sq.push(d);
    }
    Ok(Trajectory {
        iterates,
        distances_sq,
        step: t,
    })
}

/// `distances_sq[k] / distances_sq[k − 1]`.
pub fn contraction_ratio(traj: &Trajectory, k: usize) -> Result<f64> {
    span_ratio(traj, k - k.min(1), k)
}

/// `distances_sq[to] / distances_sq[from]`, the squared-distance ratio over
/// `to − from` steps.
pub fn span_ratio(traj: &Trajectory, from: usize, to: usize) -> Result<f64> {
    let len = traj.distances_sq.len();
    if from >= to || to >= len {
        return Err(Error::InvalidParams(format!(
            "need 0 <= from < to < {len}, got from = {from}, to = {to}"
        )));
    }
    let prev = traj.distances_sq[from];
    if prev <= 0.0 {
        return Err(Error::ZeroDistance);
    }
    Ok(traj.distances_sq[to] / prev)
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.iterates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterates.is_empty()
    }

    /// Largest one-step ratio along the trajectory, skipping steps that start
    /// on the solution set.
    pub fn worst_ratio(&self) -> Option<f64> {
        (1..self.len())
            .filter_map(|k| contraction_ratio(self, k).ok())
            .reduce(f64::max)
    }

    /// CSV with header `k,dist_sq,ratio`; the ratio is empty for `k = 0` and
    /// after a zero distance.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["k", "dist_sq", "ratio"])?;
        for (k, d) in self.distances_sq.iter().enumerate() {
            let ratio = if k == 0 {
                String::new()
            } else {
                contraction_ratio(self, k)
                    .map(|r| r.to_string())
                    .unwrap_or_default()
            };
            wtr.write_record([k.to_string(), d.to_string(), ratio])?;
        }
        wtr.flush()?;
        Ok(())
    }
}
