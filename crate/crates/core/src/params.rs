//! Problem constants and admissible step intervals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack used when testing whether a step lies strictly inside
/// an open interval. Steps within this relative distance of an endpoint
/// are treated as the endpoint itself and rejected.
pub const STEP_REL_TOL: f64 = 1e-12;

/// Smoothness and strong convexity/concavity constants of a saddle function
/// `F(x, y)`.
///
/// `lx`, `ly` bound the Lipschitz constants of `∇ₓF` in `x` and `∇ᵧF` in `y`,
/// `lxy` the cross Lipschitz constant, and `mu_x`, `mu_y` the strong
/// convexity in `x` and strong concavity in `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    lx: f64,
    ly: f64,
    lxy: f64,
    mu_x: f64,
    mu_y: f64,
}

impl ProblemParams {
    pub fn new(lx: f64, ly: f64, lxy: f64, mu_x: f64, mu_y: f64) -> Result<Self> {
        let all = [lx, ly, lxy, mu_x, mu_y];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("constants must be finite".into()));
        }
        if lxy < 0.0 {
            return Err(Error::InvalidParams(format!("Lxy = {lxy} must be nonnegative")));
        }
        if !(0.0..=lx).contains(&mu_x) {
            return Err(Error::InvalidParams(format!(
                "need 0 <= mu_x <= Lx, got mu_x = {mu_x}, Lx = {lx}"
            )));
        }
        if !(0.0..=ly).contains(&mu_y) {
            return Err(Error::InvalidParams(format!(
                "need 0 <= mu_y <= Ly, got mu_y = {mu_y}, Ly = {ly}"
            )));
        }
        Ok(ProblemParams {
            lx,
            ly,
            lxy,
            mu_x,
            mu_y,
        })
    }

    /// Same constants on both blocks: `Lx = Ly = l`, `mu_x = mu_y = mu`.
    pub fn symmetric(l: f64, mu: f64, lxy: f64) -> Result<Self> {
        Self::new(l, l, lxy, mu, mu)
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn lxy(&self) -> f64 {
        self.lxy
    }

    pub fn mu_x(&self) -> f64 {
        self.mu_x
    }

    pub fn mu_y(&self) -> f64 {
        self.mu_y
    }

    /// `max(Lx, Ly)`.
    pub fn l(&self) -> f64 {
        self.lx.max(self.ly)
    }

    /// `min(mu_x, mu_y)`.
    pub fn mu(&self) -> f64 {
        self.mu_x.min(self.mu_y)
    }
}

/// Open interval `(0, upper)` of admissible step lengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepInterval {
    pub upper: f64,
}

impl StepInterval {
    pub fn new(upper: f64) -> Self {
        StepInterval { upper }
    }

    pub fn contains(&self, t: f64) -> bool {
        t.is_finite() && t > 0.0 && t < self.upper * (1.0 - STEP_REL_TOL)
    }

    pub fn check(&self, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::StepOutOfRange {
                t,
                lower: 0.0,
                upper: self.upper,
            })
        }
    }

    /// `n` equally spaced interior points `upper * k / (n + 1)`.
    pub fn interior_grid(&self, n: usize) -> Vec<f64> {
        (1..=n)
            .map(|k| self.upper * k as f64 / (n + 1) as f64)
            .collect()
    }
}
