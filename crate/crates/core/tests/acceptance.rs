//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use saddle_pep::certificates::{
    certificate_qgg, certificate_strongly_convex, verify_identity_qgg, verify_identity_strongly_convex,
};
use saddle_pep::gda::{contraction_ratio, run, span_ratio};
use saddle_pep::interpolation::{estimate_mu_f, grid_2d, qgg_residual};
use saddle_pep::oracles::{PiecewiseQggExample, QuadraticSaddle};
use saddle_pep::pep::{
    build_pep_strongly_convex, conjecture_probe, solve_sdp, ProbeOptions, ProbeVerdict, SdpStatus,
};
use saddle_pep::rates::{
    baseline_interval, baseline_rate, conjecture_interval, lemma_u, optimal_rate, optimal_step,
    qgg_interval, qgg_rate, rate_alpha, rate_interval, ConjectureCase,
};
use saddle_pep::tight::{lower_bound_instance, tight_bilinear_start, verify_tightness};
use saddle_pep::{ProblemParams, StepInterval};

// tolerances
const SDP_AGREEMENT: f64 = 1e-4;
const SDP_TOL: f64 = 1e-6;
const SDP_MAX_ITER: usize = 100_000;
const SDP_BUDGET: Duration = Duration::from_secs(300);
const TIGHT_GAP: f64 = 1e-10;
const IDENTITY_TOL: f64 = 1e-8;
const DOMINANCE_TOL: f64 = 1e-12;
const CONVEXITY_TOL: f64 = 1e-12;
const STATIONARITY_TOL: f64 = 1e-6;
const OPTIMAL_RATE_TOL: f64 = 1e-10;
const REDUCTION_TOL: f64 = 1e-12;
const NO_CONTRACTION_TOL: f64 = 1e-12;
const LOWER_BOUND_TOL: f64 = 1e-10;
const NORM_TOL: f64 = 1e-12;
const MU_F_WINDOW: (f64, f64) = (1.0 - 1e-6, 1.0 + 1e-2);
const GROWTH_TOL: f64 = 1e-9;
const QGG_SOUNDNESS_TOL: f64 = 1e-10;
const STRICTNESS_MARGIN: f64 = 1e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn interior(iv: StepInterval, rng: &mut ChaCha8Rng) -> f64 {
    iv.upper * rng.gen_range(0.05..0.95)
}

fn sdp_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let tuples: Vec<(f64, f64, f64, f64)> = (0..20)
        .map(|_| {
            let l = rng.gen_range(1.0..5.0);
            let mu = l * rng.gen_range(0.05..0.95);
            let lxy = rng.gen_range(0.0..2.0);
            let t = interior(rate_interval(l, mu, lxy), &mut rng);
            (l, mu, lxy, t)
        })
        .collect();
    let start = Instant::now();
    let results: Vec<(f64, SdpStatus)> = tuples
        .par_iter()
        .map(|&(l, mu, lxy, t)| {
            let p = ProblemParams::symmetric(l, mu, lxy).unwrap();
            let prog = build_pep_strongly_convex(&p, t).unwrap();
            let sol = solve_sdp(&prog, SDP_TOL, SDP_MAX_ITER).unwrap();
            let alpha = rate_alpha(l, mu, lxy, t).unwrap().alpha;
            ((sol.value - alpha).abs(), sol.status)
        })
        .collect();
    let elapsed = start.elapsed();
    let worst = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let optimal = results.iter().filter(|r| r.1 == SdpStatus::Optimal).count();
    outcome(
        worst <= SDP_AGREEMENT && elapsed <= SDP_BUDGET,
        format!(
            "max |sdp - alpha| = {worst:.3e} over 20 tuples ({optimal} with status optimal), {:.1} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn tightness() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for &l in &[1.5, 2.0, 5.0] {
        for &mu in &[0.1, 1.0] {
            for &lxy in &[0.5, 1.0, 2.0] {
                for t in rate_interval(l, mu, lxy).interior_grid(5) {
                    let rep = verify_tightness(l, mu, lxy, t, None).unwrap();
                    worst = worst.max(rep.gap);
                    count += 1;
                }
            }
        }
    }
    outcome(worst <= TIGHT_GAP, format!("max gap {worst:.3e} over {count} cases"))
}

fn certificates() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_sc = 0.0f64;
    let mut worst_q = 0.0f64;
    let mut signs = true;
    for k in 0..10 {
        let l = rng.gen_range(1.0..5.0);
        let mu = l * rng.gen_range(0.05..0.95);
        let t = interior(rate_interval(l, mu, 1.0), &mut rng);
        let c = certificate_strongly_convex(l, mu, t).unwrap();
        signs &= c.signs_ok();
        worst_sc = worst_sc.max(verify_identity_strongly_convex(l, mu, t, 100, 3, k).unwrap());

        let t = interior(qgg_interval(l, mu, 1.0), &mut rng);
        let c = certificate_qgg(l, mu, t).unwrap();
        signs &= c.signs_ok();
        worst_q = worst_q.max(verify_identity_qgg(l, mu, t, 100, 3, k).unwrap());
    }
    outcome(
        worst_sc <= IDENTITY_TOL && worst_q <= IDENTITY_TOL && signs,
        format!("max relative residual {worst_sc:.3e} / {worst_q:.3e}, signs ok: {signs}"),
    )
}

fn baseline_dominance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = f64::INFINITY;
    for _ in 0..10 {
        let lx: f64 = rng.gen_range(1.0..5.0);
        let ly = rng.gen_range(1.0..5.0);
        let lxy = rng.gen_range(0.0..5.0);
        let mu = lx.min(ly) * rng.gen_range(0.05..1.0);
        let l = lx.max(ly).max(lxy);
        for t in baseline_interval(l, mu).interior_grid(200) {
            let gap = baseline_rate(l, mu, t).unwrap() - rate_alpha(l, mu, l, t).unwrap().alpha;
            worst = worst.min(gap - 2.0 * l * l * t * t);
        }
    }
    outcome(
        worst >= -DOMINANCE_TOL,
        format!("min (baseline - alpha - 2L^2t^2) = {worst:.3e}"),
    )
}

fn lemma_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut min_second = f64::INFINITY;
    let mut range_ok = true;
    for _ in 0..10 {
        let l = rng.gen_range(0.5..5.0);
        let mu = l * rng.gen_range(0.05..1.0);
        let c = rng.gen_range(0.0..3.0);
        let grid = rate_interval(l, mu, c).interior_grid(1000);
        let u: Vec<f64> = grid.iter().map(|&t| lemma_u(l, mu, c, t).unwrap()).collect();
        range_ok &= u.iter().all(|&v| (-1.0..0.0).contains(&v));
        for w in u.windows(3) {
            min_second = min_second.min(w[0] + w[2] - 2.0 * w[1]);
        }
    }
    outcome(
        min_second >= -CONVEXITY_TOL && range_ok,
        format!("min second difference {min_second:.3e}, range in [-1, 0): {range_ok}"),
    )
}

fn optimal_step_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_deriv = 0.0f64;
    let mut worst_rate = 0.0f64;
    for _ in 0..10 {
        let l = rng.gen_range(1.0..5.0);
        let mu = l * rng.gen_range(0.05..0.95);
        let lxy = rng.gen_range(0.0..2.0);
        let p = ProblemParams::symmetric(l, mu, lxy).unwrap();
        let ts = optimal_step(&p).unwrap();
        let h = 1e-6 * ts;
        let d = (rate_alpha(l, mu, lxy, ts + h).unwrap().alpha
            - rate_alpha(l, mu, lxy, ts - h).unwrap().alpha)
            / (2.0 * h);
        worst_deriv = worst_deriv.max(d.abs());
        worst_rate = worst_rate
            .max((rate_alpha(l, mu, lxy, ts).unwrap().alpha - optimal_rate(&p).unwrap()).abs());
    }
    let mut worst_reduction = 0.0f64;
    for &(l, mu) in &[(3.0, 1.0), (2.0, 0.5), (5.0, 4.0), (1.0, 0.1)] {
        let p = ProblemParams::symmetric(l, mu, 0.0).unwrap();
        worst_reduction = worst_reduction
            .max((optimal_step(&p).unwrap() - 2.0 / (l + mu)).abs())
            .max((optimal_rate(&p).unwrap() - ((l - mu) / (l + mu)).powi(2)).abs());
    }
    outcome(
        worst_deriv <= STATIONARITY_TOL
            && worst_rate <= OPTIMAL_RATE_TOL
            && worst_reduction <= REDUCTION_TOL,
        format!(
            "max |alpha'(t*)| {worst_deriv:.3e}, max rate gap {worst_rate:.3e}, uncoupled reduction gap {worst_reduction:.3e}"
        ),
    )
}

fn lower_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut ok = true;
    let mut min_ratio = f64::INFINITY;
    let mut worst_lb = f64::INFINITY;
    let mut worst_norm = 0.0f64;
    for _ in 0..10 {
        let l = rng.gen_range(0.5..5.0);
        let lxy = rng.gen_range(0.1..3.0);
        let mu_y = l * rng.gen_range(0.05..1.0);
        let t = rng.gen_range(0.01..1.99) / l;
        let r = rng.gen_range(0.1..10.0);
        let lb = lower_bound_instance(l, lxy, mu_y, t, r).unwrap();
        let ratio = lb.one_step_ratio(t).unwrap();
        let norm = (lb.x1.norm_squared() + lb.y1.norm_squared()).sqrt();
        min_ratio = min_ratio.min(ratio);
        worst_lb = worst_lb.min(ratio - lb.alpha_lb);
        worst_norm = worst_norm.max((norm - r).abs() / r.max(1.0));
        ok &= ratio >= 1.0 - NO_CONTRACTION_TOL && ratio >= lb.alpha_lb - LOWER_BOUND_TOL;
    }
    ok &= worst_norm <= NORM_TOL;
    outcome(
        ok,
        format!(
            "min ratio {min_ratio:.6}, min (ratio - alpha_lb) {worst_lb:.3e}, max norm error {worst_norm:.3e}"
        ),
    )
}

fn growth_example() -> Outcome {
    let est = estimate_mu_f(&PiecewiseQggExample, grid_2d(-4.0, 4.0, 200)).unwrap();
    let in_window = (MU_F_WINDOW.0..=MU_F_WINDOW.1).contains(&est.upper_bound);

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = f64::INFINITY;
    for _ in 0..10 {
        let n = rng.gen_range(1..5);
        let m = rng.gen_range(1..5);
        let lx = rng.gen_range(1.0..5.0);
        let ly = rng.gen_range(1.0..5.0);
        let p = ProblemParams::new(
            lx,
            ly,
            rng.gen_range(0.0..3.0),
            lx * rng.gen_range(0.05..1.0),
            ly * rng.gen_range(0.05..1.0),
        )
        .unwrap();
        let q = QuadraticSaddle::random(&mut rng, n, m, &p);
        for _ in 0..1000 {
            let x = DVector::from_fn(n, |_, _| rng.gen_range(-5.0..5.0));
            let y = DVector::from_fn(m, |_, _| rng.gen_range(-5.0..5.0));
            worst = worst.min(qgg_residual(&q, &x, &y, p.mu()).unwrap());
        }
    }
    outcome(
        in_window && worst >= -GROWTH_TOL,
        format!(
            "grid estimate {:.6} at ({:.4}, {:.4}) (window [{}, {}]), min quadratic residual {worst:.3e}",
            est.upper_bound, est.argmin.0[0], est.argmin.1[0], MU_F_WINDOW.0, MU_F_WINDOW.1
        ),
    )
}

/// Per-step ratios on the piecewise example for 20 steps and 100 starts
/// each, plus the growth residual at the implied constant.
fn growth_runs() -> (Outcome, Outcome) {
    let o = PiecewiseQggExample;
    let grid = qgg_interval(2.0, 1.0, 1.0).interior_grid(20);
    let mut sound = true;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut converse = true;
    let mut worst_residual = f64::INFINITY;
    for (k, &t) in grid.iter().enumerate() {
        let bound = qgg_rate(2.0, 1.0, 1.0, t).unwrap().alpha;
        let mut rng = ChaCha8Rng::seed_from_u64(900 + k as u64);
        let mut visited = Vec::new();
        let mut alpha = 0.0f64;
        for _ in 0..100 {
            let x0 = DVector::from_element(1, rng.gen_range(-5.0..5.0));
            let y0 = DVector::from_element(1, rng.gen_range(-5.0..5.0));
            let traj = run(&o, &x0, &y0, t, 20, None).unwrap();
            for s in 1..traj.len() {
                if let Ok(r) = contraction_ratio(&traj, s) {
                    alpha = alpha.max(r);
                    worst_excess = worst_excess.max(r - bound);
                    sound &= r <= bound + QGG_SOUNDNESS_TOL;
                }
            }
            visited.extend(traj.iterates);
        }
        let mu_f = (1.0 - alpha) / (2.0 * t);
        for (x, y) in &visited {
            let r = qgg_residual(&o, x, y, mu_f).unwrap();
            worst_residual = worst_residual.min(r);
            converse &= r >= -GROWTH_TOL;
        }
    }
    (
        outcome(sound, format!("max (ratio - bound) {worst_excess:.3e} over 20 steps x 100 starts")),
        outcome(converse, format!("min growth residual {worst_residual:.3e} at visited iterates")),
    )
}

fn conjecture() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut tuples: Vec<(ProblemParams, f64)> = Vec::new();
    let (mut na, mut nb) = (0, 0);
    while na < 10 || nb < 10 {
        let lx = rng.gen_range(1.0..5.0);
        let ly = lx * rng.gen_range(0.2..1.0);
        let mu_x = ly * rng.gen_range(0.05..0.9);
        let mu_y = rng.gen_range(mu_x..ly);
        let lxy = rng.gen_range(0.05..2.0);
        let Ok(p) = ProblemParams::new(lx, ly, lxy, mu_x, mu_y) else {
            continue;
        };
        let Ok((case, iv)) = conjecture_interval(&p) else {
            continue;
        };
        let slot = match case {
            ConjectureCase::A => &mut na,
            ConjectureCase::B => &mut nb,
        };
        if *slot < 10 {
            *slot += 1;
            tuples.push((p, interior(iv, &mut rng)));
        }
    }
    let opts = ProbeOptions::default();
    let rows: Vec<_> = tuples
        .par_iter()
        .map(|(p, t)| conjecture_probe(p, &[*t], &opts).unwrap()[0])
        .collect();
    let violations: Vec<String> = rows
        .iter()
        .zip(&tuples)
        .filter(|(r, _)| r.verdict != ProbeVerdict::Consistent)
        .map(|(r, (p, _))| {
            format!(
                "{:?} t={} conj={:?} sdp={:?} emp={:?}",
                p, r.t, r.alpha_conj, r.alpha_sdp, r.alpha_emp
            )
        })
        .collect();
    let max_gap = rows
        .iter()
        .filter_map(|r| Some((r.alpha_sdp? - r.alpha_conj?).abs()))
        .fold(0.0, f64::max);
    outcome(
        violations.is_empty(),
        format!(
            "{} of 20 consistent (10 per case), max |sdp - conjectured| {max_gap:.3e}{}",
            20 - violations.len(),
            if violations.is_empty() {
                String::new()
            } else {
                format!("; violations: {}", violations.join("; "))
            }
        ),
    )
}

fn multi_step() -> Outcome {
    let (l, mu, lxy) = (2.0, 1.0, 1.0);
    let mut best: Option<(f64, f64, f64)> = None;
    let mut report = Vec::new();
    for t in rate_interval(l, mu, lxy).interior_grid(9) {
        let inst = tight_bilinear_start(l, mu, lxy, t, None).unwrap();
        let traj = run(&inst.oracle, &inst.x1, &inst.y1, t, 2, None).unwrap();
        let ratio = span_ratio(&traj, 0, 2).unwrap();
        let alpha = rate_alpha(l, mu, lxy, t).unwrap().alpha;
        report.push(format!("t={t:.4}: {ratio:.6} vs {:.6}", alpha * alpha));
        if ratio < alpha * alpha - STRICTNESS_MARGIN
            && best.map_or(true, |b| alpha * alpha - ratio > b.2 - b.1)
        {
            best = Some((t, ratio, alpha * alpha));
        }
    }
    println!("    three-iterate ratios vs alpha^2: {}", report.join(", "));
    match best {
        Some((t, r, a2)) => outcome(true, format!("strict at t={t:.4}: {r:.6} < alpha^2 = {a2:.6}")),
        None => outcome(false, "no sampled step gives a strict inequality".into()),
    }
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: usize, name: &str, o: Outcome| {
        println!("[{}] {id:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    };
    report(1, "closed-form rate matches SDP value", sdp_agreement());
    report(2, "one-step tightness on bilinear instances", tightness());
    report(3, "certificate identities and multiplier signs", certificates());
    report(4, "dominance over the classical rate", baseline_dominance());
    report(5, "convexity and range of the rate along the step", lemma_properties());
    report(6, "optimal step is stationary and attains the optimal rate", optimal_step_checks());
    report(7, "no contraction without strong convexity in x", lower_bound());
    report(8, "growth constant of the piecewise example and of quadratics", growth_example());
    let (sound, converse) = growth_runs();
    report(9, "growth rate bounds per-step contraction", sound);
    report(10, "measured contraction implies quadratic growth", converse);
    report(11, "conjectured rate agrees with SDP and search", conjecture());
    report(12, "two-step ratio strictly below alpha squared", multi_step());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
