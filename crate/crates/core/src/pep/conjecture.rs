//! Numerical probe of the conjectured five-constant rate: compares it with
//! the SDP value and the empirical worst case at each step of a grid.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::params::ProblemParams;
use crate::pep::program::{build_pep_strongly_convex_with, BuildOptions, Layout};
use crate::pep::search::empirical_worst_case;
use crate::pep::solver::{solve_sdp_with, SdpStatus, SolverOptions};
use crate::rates::{conjecture_interval, conjecture_rate};

/// Slack in the ordering `empirical ≤ SDP ≤ conjectured`.
pub const PROBE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeVerdict {
    Consistent,
    Violation,
    OutOfRange,
}

impl ProbeVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            ProbeVerdict::Consistent => "CONSISTENT",
            ProbeVerdict::Violation => "VIOLATION",
            ProbeVerdict::OutOfRange => "out-of-range",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeRow {
    pub t: f64,
    pub alpha_conj: Option<f64>,
    pub alpha_sdp: Option<f64>,
    pub alpha_emp: Option<f64>,
    pub sdp_status: Option<SdpStatus>,
    pub verdict: ProbeVerdict,
}

/// The default reduced layout is a relaxation of the full program, so its
/// value still bounds the full one from above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeOptions {
    pub solver: SolverOptions,
    pub layout: Layout,
    pub budget: usize,
    pub seed: u64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            solver: SolverOptions {
                max_iter: 1_000_000,
                ..SolverOptions::default()
            },
            layout: Layout::Reduced,
            budget: 10_000,
            seed: 0,
        }
    }
}

fn probe_one(params: &ProblemParams, t: f64, opts: &ProbeOptions) -> Result<ProbeRow> {
    let conj = match conjecture_rate(params, t) {
        Ok(c) => c,
        Err(_) => {
            return Ok(ProbeRow {
                t,
                alpha_conj: None,
                alpha_sdp: None,
                alpha_emp: None,
                sdp_status: None,
                verdict: ProbeVerdict::OutOfRange,
            })
        }
    };
    let prog = build_pep_strongly_convex_with(
        params,
        t,
        &BuildOptions {
            layout: opts.layout,
            ..BuildOptions::default()
        },
    )?;
    let sol = solve_sdp_with(&prog, &opts.solver)?;
    let emp = empirical_worst_case(params, t, opts.budget, opts.seed)?.ratio;
    let ok = sol.value.is_finite()
        && emp <= sol.value + PROBE_TOL
        && sol.value <= conj.alpha + PROBE_TOL;
    Ok(ProbeRow {
        t,
        alpha_conj: Some(conj.alpha),
        alpha_sdp: Some(sol.value),
        alpha_emp: Some(emp),
        sdp_status: Some(sol.status),
        verdict: if ok {
            ProbeVerdict::Consistent
        } else {
            ProbeVerdict::Violation
        },
    })
}

/// One row per step; steps outside the admissible interval are marked
/// [`ProbeVerdict::OutOfRange`]. Rows keep the order of `t_grid`.
pub fn conjecture_probe(params: &ProblemParams, t_grid: &[f64], opts: &ProbeOptions) -> Result<Vec<ProbeRow>> {
    conjecture_interval(params)?;
    t_grid
        .par_iter()
        .map(|&t| probe_one(params, t, opts))
        .collect()
}
