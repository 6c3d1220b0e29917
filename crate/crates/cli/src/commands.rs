use std::fs;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use saddle_pep::certificates::{
    certificate_qgg, certificate_strongly_convex, verify_certificate_qgg,
    verify_certificate_strongly_convex, Certificate,
};
use saddle_pep::gda;
use saddle_pep::interpolation::{estimate_mu_f, grid_2d, halton_box};
use saddle_pep::oracles::{
    quadratic_from_params, PiecewiseQggExample, QuadraticSaddle, SaddleOracle, UncoupledPiecewise,
};
use saddle_pep::pep::{
    build_pep_qgg_with, build_pep_strongly_convex_with, conjecture_probe, solve_sdp_with,
    BuildOptions, Layout, ProbeOptions, SolverOptions,
};
use saddle_pep::rates::{
    baseline_formula, baseline_rate, beta, conjecture_interval, optimal_rate, optimal_step,
    rate_alpha, rate_interval,
};
use saddle_pep::tight::{lower_bound_instance, verify_tightness, tight_bilinear_start};
use saddle_pep::{ProblemParams, StepInterval};

use crate::args::*;
use crate::error::CliError;
use crate::output::{Cell, Table};

/// Largest certificate identity violation accepted by `certify`.
pub const CERTIFY_TOL: f64 = 1e-8;

pub fn execute(cli: &Cli) -> Result<Table, CliError> {
    match &cli.command {
        Command::Rate(RateCommand::Eval(a)) => rate_eval(a),
        Command::Rate(RateCommand::Sweep(a)) => rate_sweep(a),
        Command::Rate(RateCommand::Optimal(a)) => rate_optimal(a),
        Command::Run(a) => run(a, cli.seed),
        Command::Tight(a) => tight(a),
        Command::Certify(a) => certify(a, cli.seed),
        Command::Pep(a) => pep(a),
        Command::Conjecture(a) => conjecture(a, cli.seed),
        Command::Qgg(a) => qgg(a, cli.seed),
    }
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("missing required flag --{flag}")))
}

fn symmetric(c: &Symmetric) -> Result<(f64, f64, f64), CliError> {
    Ok((need(c.l, "L")?, need(c.mu, "mu")?, need(c.lxy, "Lxy")?))
}

fn params(c: &Constants) -> Result<ProblemParams, CliError> {
    Ok(ProblemParams::new(
        need(c.lx, "Lx")?,
        need(c.ly, "Ly")?,
        need(c.lxy, "Lxy")?,
        need(c.mux, "mux")?,
        need(c.muy, "muy")?,
    )?)
}

fn parse_list(s: &str, flag: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("--{flag}: cannot parse {p:?} as a number")))
        })
        .collect()
}

/// A bare count means that many interior points of `interval`.
fn step_grid(spec: &str, interval: StepInterval) -> Result<Vec<f64>, CliError> {
    match spec.trim().parse::<usize>() {
        Ok(0) => Err(CliError::Usage("--t-grid needs at least one point".into())),
        Ok(n) => Ok(interval.interior_grid(n)),
        Err(_) => parse_list(spec, "t-grid"),
    }
}

fn layout(l: LayoutArg) -> Layout {
    match l {
        LayoutArg::Full => Layout::Full,
        LayoutArg::Reduced => Layout::Reduced,
    }
}

fn pairs(items: Vec<(&str, Cell)>) -> Vec<(String, Cell)> {
    items.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn rate_eval(a: &RateEvalArgs) -> Result<Table, CliError> {
    let (l, mu, lxy) = symmetric(&a.constants)?;
    let t = need(a.t, "t")?;
    let r = rate_alpha(l, mu, lxy, t)?;
    let baseline = baseline_rate(l, mu, t).ok();
    Ok(Table::record(pairs(vec![
        ("t", t.into()),
        ("alpha", r.alpha.into()),
        ("beta", beta(l, mu, lxy, t)?.into()),
        ("t_upper", r.valid_interval.upper.into()),
        ("baseline", baseline.into()),
        ("baseline_minus_alpha", baseline.map(|b| b - r.alpha).into()),
    ])))
}

fn rate_sweep(a: &RateSweepArgs) -> Result<Table, CliError> {
    let (l, mu, lxy) = symmetric(&a.constants)?;
    let grid = step_grid(&need(a.t_grid.clone(), "t-grid")?, rate_interval(l, mu, lxy))?;
    let rows = grid
        .par_iter()
        .map(|&t| {
            let alpha = rate_alpha(l, mu, lxy, t)?.alpha;
            let baseline = baseline_rate(l, mu, t).ok();
            Ok(vec![
                t.into(),
                alpha.into(),
                baseline.into(),
                baseline.map(|b| b - alpha).into(),
            ])
        })
        .collect::<Result<Vec<_>, saddle_pep::Error>>()?;
    let mut table = Table::new(["t", "alpha", "baseline", "baseline_minus_alpha"]);
    table.rows = rows;
    Ok(table)
}

fn rate_optimal(a: &RateOptimalArgs) -> Result<Table, CliError> {
    let (l, mu, lxy) = symmetric(&a.constants)?;
    let p = ProblemParams::symmetric(l, mu, lxy)?;
    let t_base = mu / (4.0 * l * l);
    Ok(Table::record(pairs(vec![
        ("t_star", optimal_step(&p)?.into()),
        ("alpha_star", optimal_rate(&p)?.into()),
        ("t_upper", rate_interval(l, mu, lxy).upper.into()),
        ("baseline_t_star", t_base.into()),
        ("baseline_alpha_star", baseline_formula(l, mu, t_base).into()),
    ])))
}

fn point(spec: Option<&str>, flag: &str, dim: usize, rng: &mut ChaCha8Rng) -> Result<DVector<f64>, CliError> {
    match spec {
        Some(s) => {
            let v = parse_list(s, flag)?;
            if v.len() != dim {
                return Err(CliError::Usage(format!("--{flag} needs {dim} coordinates, got {}", v.len())));
            }
            Ok(DVector::from_vec(v))
        }
        None => Ok(DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0))),
    }
}

fn run(a: &RunArgs, seed: u64) -> Result<Table, CliError> {
    let t = need(a.t, "t")?;
    let oracle: Box<dyn SaddleOracle> = match a.example {
        Example::Quadratic => match &a.instance {
            Some(path) => Box::new(QuadraticSaddle::from_json(&fs::read_to_string(path)?)?),
            None => {
                let (l, mu, lxy) = symmetric(&a.constants)?;
                Box::new(quadratic_from_params(&ProblemParams::symmetric(l, mu, lxy)?))
            }
        },
        Example::Piecewise => Box::new(PiecewiseQggExample),
        Example::Uncoupled => Box::new(UncoupledPiecewise),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = point(a.x0.as_deref(), "x0", oracle.dim_x(), &mut rng)?;
    let y0 = point(a.y0.as_deref(), "y0", oracle.dim_y(), &mut rng)?;
    let traj = gda::run(oracle.as_ref(), &x0, &y0, t, a.steps, None)?;

    let mut table = Table::new(["k", "dist_sq", "ratio"]);
    let d = &traj.distances_sq;
    for (k, &dk) in d.iter().enumerate() {
        let ratio = if k > 0 && d[k - 1] > 0.0 {
            Cell::Num(dk / d[k - 1])
        } else {
            Cell::Empty
        };
        table.rows.push(vec![k.into(), dk.into(), ratio]);
    }
    Ok(table)
}

fn start_cells(x1: &DVector<f64>, y1: &DVector<f64>) -> Vec<(String, Cell)> {
    let xs = x1.iter().enumerate().map(|(i, v)| (format!("x1_{}", i + 1), Cell::Num(*v)));
    let ys = y1.iter().enumerate().map(|(i, v)| (format!("y1_{}", i + 1), Cell::Num(*v)));
    xs.chain(ys).collect()
}

fn tight(a: &TightArgs) -> Result<Table, CliError> {
    let t = need(a.t, "t")?;
    let l = need(a.constants.l, "L")?;
    let lxy = need(a.constants.lxy, "Lxy")?;
    if a.lower_bound {
        let inst = lower_bound_instance(l, lxy, need(a.muy, "muy")?, t, a.r)?;
        let mut row = start_cells(&inst.x1, &inst.y1);
        row.push(("ratio".into(), inst.one_step_ratio(t)?.into()));
        row.push(("alpha_lb".into(), inst.alpha_lb.into()));
        return Ok(Table::record(row));
    }
    let mu = need(a.constants.mu, "mu")?;
    let inst = tight_bilinear_start(l, mu, lxy, t, a.mu_other)?;
    let report = verify_tightness(l, mu, lxy, t, a.mu_other)?;
    let mut row = start_cells(&inst.x1, &inst.y1);
    row.extend(pairs(vec![
        ("ratio", report.ratio.into()),
        ("alpha", report.alpha.into()),
        ("gap", report.gap.into()),
    ]));
    Ok(Table::record(row))
}

fn certificate_cells(cert: &Certificate, residual: f64) -> Vec<(String, Cell)> {
    let mut row: Vec<(String, Cell)> = Vec::new();
    for (i, g) in cert.gammas.iter().enumerate() {
        row.push((format!("gamma_{}", i + 1), Cell::Num(*g)));
    }
    for (i, z) in cert.zetas.iter().enumerate() {
        row.push((format!("zeta_{}", i + 1), Cell::Num(*z)));
    }
    row.extend(pairs(vec![
        ("beta", cert.beta.into()),
        ("alpha", cert.alpha.into()),
        ("residual", residual.into()),
        ("signs_ok", cert.signs_ok().into()),
    ]));
    row
}

fn certify(a: &CertifyArgs, seed: u64) -> Result<Table, CliError> {
    let theorem = need(a.theorem, "theorem")?;
    let l = need(a.l, "L")?;
    let t = need(a.t, "t")?;
    let (cert, residual) = match theorem {
        Theorem::StronglyConvex => {
            let mu = need(a.mu, "mu")?;
            let cert = certificate_strongly_convex(l, mu, t)?;
            let r = verify_certificate_strongly_convex(&cert, l, mu, t, a.trials, a.dim, seed)?;
            (cert, r)
        }
        Theorem::Qgg => {
            let mu_f = need(a.mu_f, "muF")?;
            let cert = certificate_qgg(l, mu_f, t)?;
            let r = verify_certificate_qgg(&cert, l, mu_f, t, a.trials, a.dim, seed)?;
            (cert, r)
        }
    };
    if !(residual <= CERTIFY_TOL) || !cert.signs_ok() {
        return Err(CliError::Domain(format!(
            "certificate check failed: residual {residual:e}, signs ok {}",
            cert.signs_ok()
        )));
    }
    Ok(Table::record(certificate_cells(&cert, residual)))
}

fn pep(a: &PepArgs) -> Result<Table, CliError> {
    let t = need(a.t, "t")?;
    let build = BuildOptions {
        layout: layout(a.layout),
        ..BuildOptions::default()
    };
    let prog = if a.qgg {
        let l = need(a.constants.lx, "Lx")?.max(need(a.constants.ly, "Ly")?);
        build_pep_qgg_with(l, need(a.constants.lxy, "Lxy")?, need(a.mu_f, "muF")?, t, &build)?
    } else {
        build_pep_strongly_convex_with(&params(&a.constants)?, t, &build)?
    };
    for w in &prog.warnings {
        eprintln!("warning: {w}");
    }
    let sol = solve_sdp_with(
        &prog,
        &SolverOptions {
            tol: a.tol,
            max_iter: a.max_iter,
            ..SolverOptions::default()
        },
    )?;
    Ok(Table::record(pairs(vec![
        ("value", sol.value.into()),
        ("status", sol.status.as_str().into()),
        ("kkt_residual", sol.kkt_residual.into()),
        ("bracket_lo", sol.bracket.0.into()),
        ("bracket_hi", sol.bracket.1.into()),
        ("iterations", sol.iterations.into()),
    ])))
}

fn conjecture(a: &ConjectureArgs, seed: u64) -> Result<Table, CliError> {
    let p = params(&a.constants)?;
    let spec = need(a.t_grid.clone(), "t-grid")?;
    let grid = match spec.trim().parse::<usize>() {
        Ok(_) => step_grid(&spec, conjecture_interval(&p)?.1)?,
        Err(_) => parse_list(&spec, "t-grid")?,
    };
    let opts = ProbeOptions {
        solver: SolverOptions {
            tol: a.tol,
            max_iter: a.max_iter,
            ..SolverOptions::default()
        },
        layout: layout(a.layout),
        budget: a.budget,
        seed,
    };
    let mut table = Table::new(["t", "alpha_conj", "alpha_sdp", "alpha_emp", "verdict"]);
    for r in conjecture_probe(&p, &grid, &opts)? {
        table.rows.push(vec![
            r.t.into(),
            r.alpha_conj.into(),
            r.alpha_sdp.into(),
            r.alpha_emp.into(),
            r.verdict.as_str().into(),
        ]);
    }
    Ok(table)
}

fn qgg(a: &QggArgs, seed: u64) -> Result<Table, CliError> {
    let oracle: Box<dyn SaddleOracle> = match a.example {
        GrowthExample::Piecewise => Box::new(PiecewiseQggExample),
        GrowthExample::Uncoupled => Box::new(UncoupledPiecewise),
    };
    let points = match a.grid {
        Some(n) => {
            if n == 0 || !(a.lo < a.hi) {
                return Err(CliError::Domain(format!(
                    "grid needs n >= 1 and lo < hi, got n = {n}, [{}, {}]",
                    a.lo, a.hi
                )));
            }
            grid_2d(a.lo, a.hi, n)
        }
        None => {
            let origin = DVector::zeros(1);
            halton_box((&origin, &origin), a.radius, a.samples, seed)?
        }
    };
    let est = estimate_mu_f(oracle.as_ref(), points)?;
    Ok(Table::record(pairs(vec![
        ("mu_f", est.upper_bound.into()),
        ("x", est.argmin.0[0].into()),
        ("y", est.argmin.1[0].into()),
        ("samples", est.samples.into()),
    ])))
}
