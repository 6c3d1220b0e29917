//! Performance-estimation programs for one GDA step, a small dense SDP
//! solver, an empirical worst-case search and the conjectured-rate probe.

pub mod conjecture;
pub mod program;
pub mod search;
pub mod solver;

pub use conjecture::{conjecture_probe, ProbeOptions, ProbeRow, ProbeVerdict, PROBE_TOL};
pub use program::{
    build_pep_qgg, build_pep_qgg_with, build_pep_strongly_convex, build_pep_strongly_convex_with,
    BuildOptions, Column, Constraint, ConstraintKind, Layout, PepProgram, Point,
};
pub use search::{empirical_worst_case, WorstCase};
pub use solver::{solve_sdp, solve_sdp_with, SdpSolution, SdpStatus, SolverOptions};
