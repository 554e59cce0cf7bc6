//! Acceptance suite. Prints one line per criterion and exits nonzero if any
//! criterion fails. Run with `cargo test -p optimistic --test acceptance`.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use optimistic::linesearch::call_bound;
use optimistic::problems::{
    eval_f, eval_regularized_taylor, make_test_problem, primal_dual_gap_prob1, reference_saddle_point, residual,
    restricted_gap_prob2, Composite, Feasible, OperatorFn, PrimalDualPoint, ProblemSpec, SaddleProblem,
};
use optimistic::solvers::diagnostics::{check_monotone_invariants, superlinear_violations};
use optimistic::solvers::theory::{
    first_order_call_bound, fixed_step_gap_bound, fixed_step_linear_bound, gamma2, gamma_p, kappa_p, kappa_tilde_p,
    lp_phi_lambda, second_order_call_bound, zeta_distance_bound,
};
use optimistic::solvers::{
    run_first_order_fixed, run_first_order_ls, run_pth_order, run_second_order, Method, StopReason, Trajectory,
};
use optimistic::subsolvers::{
    solve_affine_inclusion, solve_first_order, solve_regularized_taylor_inclusion, InnerConfig, Predictor,
    PredictorKind, SubsolverRequest,
};
use optimistic::{Euclidean, LineSearchConfig, LineSearchStatus, MirrorMap, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned tolerances and budgets.
const C1_SEEDS: std::ops::RangeInclusive<u64> = 1..=5;
const C1_ITERS: usize = 2000;
const C1_RUNTIME_S: f64 = 30.0;
const C2_SEEDS: std::ops::RangeInclusive<u64> = 1..=5;
const C2_MU: f64 = 0.1;
const C2_REF_TOL: f64 = 1e-12;
const C3_SEEDS: std::ops::RangeInclusive<u64> = 1..=10;
const C3_ITERS: usize = 1000;
const C3_TARGET: f64 = 1e-9;
const C3_ALPHA: f64 = 0.5;
const C3_MAX_AVG: f64 = 4.0;
const C4_REF_TOL: f64 = 1e-10;
const C5_SEEDS: std::ops::RangeInclusive<u64> = 1..=3;
const C5_EPS: f64 = 1e-10;
const C5_RUNTIME_S: f64 = 60.0;
const C6_SEED: u64 = 1;
const C6_EPS: f64 = 1e-10;
const C6_MAX_OUTER: usize = 60;
const C6_BUDGET: usize = 200;
const C7_SEEDS: std::ops::RangeInclusive<u64> = 1..=10;
const C7_ITERS: usize = 500;
const C7_EPS: f64 = 1e-10;
const C8_PAIRS: usize = 1000;
const C8_MONO_TOL: f64 = -1e-12;
const C9_SEEDS: std::ops::RangeInclusive<u64> = 1..=3;
const C9_EPS: f64 = 1e-9;
const C9_MAX_OUTER: usize = 80;
const C10_GRID_TOL: f64 = 2e-4;
const C10_GRID_CASES: usize = 50;
const C10_AFFINE_CASES: usize = 100;
const C10_AFFINE_SCALE: f64 = 1e-10;
const C10_TAYLOR_CASES: usize = 50;
const C12_G2: (f64, f64) = (7.0, 7.6);
const C12_G3: (f64, f64) = (2.6, 3.0);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Line-search audit across runs.
#[derive(Default)]
struct SearchAudit {
    searches: usize,
    beta_optimal: usize,
    certification_failures: usize,
    uncertified: usize,
    bound_violations: usize,
}

impl SearchAudit {
    fn add(&mut self, traj: &Trajectory, beta: f64) {
        let advancing = !matches!(traj.method, Method::FirstOrderLs);
        for r in &traj.records {
            let (Some(status), Some(sigma)) = (r.status, r.sigma) else { continue };
            self.searches += 1;
            if status == LineSearchStatus::BetaOptimal {
                self.beta_optimal += 1;
                match r.certified {
                    Some(true) => {}
                    Some(false) => self.certification_failures += 1,
                    None => self.uncertified += 1,
                }
            }
            if r.calls as f64 > call_bound(sigma, r.eta, beta, advancing) + 1e-9 {
                self.bound_violations += 1;
            }
        }
    }
}

/// Counters for the μ = 0 invariants.
#[derive(Default)]
struct MonotoneAudit {
    runs: usize,
    steps: usize,
    bounded: usize,
    squares: usize,
    squares_vacuous_runs: usize,
    lyapunov: usize,
}

impl MonotoneAudit {
    fn add(&mut self, traj: &Trajectory, z_star: &DVector<f64>) {
        let rep = check_monotone_invariants(traj, &Euclidean, z_star, 0.0);
        self.runs += 1;
        self.steps += rep.checked;
        self.bounded += rep.bounded_violations;
        self.squares += rep.sum_of_squares_violations;
        self.lyapunov += rep.lyapunov_violations;
        if traj.alpha >= 1.0 {
            self.squares_vacuous_runs += 1;
        }
    }
}

#[derive(Default)]
struct Ctx {
    searches: SearchAudit,
    monotone: MonotoneAudit,
    prob1_refs: BTreeMap<u64, DVector<f64>>,
    /// (invocations, worst residual/tolerance, invocations within the configured tolerance)
    taylor_inclusions: (usize, f64, usize),
}

impl Ctx {
    fn prob1_reference(&mut self, seed: u64) -> DVector<f64> {
        self.prob1_refs
            .entry(seed)
            .or_insert_with(|| {
                let prob = make_test_problem(ProblemSpec::desk("prob1").unwrap(), seed).unwrap();
                reference_saddle_point(&prob, C4_REF_TOL).expect("prob1 reference")
            })
            .clone()
    }
}

fn prob1(seed: u64, mu: f64) -> SaddleProblem {
    let spec = ProblemSpec::Prob1 { m: 60, n: 30, lambda: 0.1, mu, radius: 0.05 };
    make_test_problem(spec, seed).unwrap()
}

fn criterion_1(ctx: &mut Ctx) -> Outcome {
    let start = Instant::now();
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for seed in C1_SEEDS {
        let prob = prob1(seed, 0.0);
        let m_const = 2.0 * prob.lipschitz.l1.unwrap();
        let z_star = ctx.prob1_reference(seed);
        let cfg = SolverConfig::first_order_fixed(m_const, C1_ITERS).with_reference(z_star.clone());
        let traj = run_first_order_fixed(&prob, &Euclidean, m_const, &cfg).unwrap();
        for (i, avg) in traj.uniform_averages().unwrap().iter().enumerate() {
            let gap = primal_dual_gap_prob1(&prob, avg).unwrap();
            let bound = fixed_step_gap_bound(m_const, prob.dim(), 0.05, i + 1);
            if gap > bound {
                violations += 1;
            }
            worst = worst.max(gap / bound);
        }
        ctx.monotone.add(&traj, &z_star);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        violations == 0 && secs < C1_RUNTIME_S,
        format!(
            "{violations} violations over {} seeds x {C1_ITERS} N, worst gap/bound {worst:.3}, {secs:.1}s",
            C1_SEEDS.count()
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for seed in C2_SEEDS {
        let prob = prob1(seed, C2_MU);
        let z_star = reference_saddle_point(&prob, C2_REF_TOL).unwrap();
        let m_const = 2.0 * prob.lipschitz.l1.unwrap();
        let cfg = SolverConfig::first_order_fixed(m_const, C1_ITERS).with_mu(C2_MU);
        let traj = run_first_order_fixed(&prob, &Euclidean, m_const, &cfg).unwrap();
        let d0 = (&traj.z0 - &z_star).norm_squared();
        for (n, z) in traj.iterates.iter().enumerate().skip(1) {
            let d = (z - &z_star).norm_squared();
            let bound = fixed_step_linear_bound(d0, m_const, C2_MU, n);
            if d > bound {
                violations += 1;
            }
            worst = worst.max(d / bound);
        }
    }
    outcome(
        violations == 0,
        format!("{violations} violations over {} seeds x {C1_ITERS} N, worst dist/bound {worst:.3}", C2_SEEDS.count()),
    )
}

fn criterion_3(ctx: &mut Ctx) -> Outcome {
    let mut worst_avg: f64 = 0.0;
    let mut bound_violations = 0;
    let mut runs = 0;
    for &sigma in &[1.0, 100.0] {
        for &beta in &[0.5, 0.9] {
            for seed in C3_SEEDS {
                let prob = prob1(seed, 0.0);
                let l1 = prob.lipschitz.l1.unwrap();
                let z_star = ctx.prob1_reference(seed);
                let ls = LineSearchConfig { alpha: C3_ALPHA, beta, sigma, epsilon: C3_TARGET, with_advancing: false };
                let cfg = SolverConfig::first_order_ls(ls, C3_ITERS, C3_TARGET)
                    .with_reference(z_star.clone())
                    .with_certification();
                let traj = run_first_order_ls(&prob, &Euclidean, &cfg).unwrap();
                runs += 1;
                worst_avg = worst_avg.max(traj.average_calls());
                let mut total = 0;
                for (i, r) in traj.records.iter().enumerate() {
                    total += r.calls;
                    if total as f64 > first_order_call_bound(i + 1, sigma, beta, C3_ALPHA, l1) {
                        bound_violations += 1;
                    }
                }
                ctx.searches.add(&traj, beta);
                ctx.monotone.add(&traj, &z_star);
            }
        }
    }
    outcome(
        worst_avg <= C3_MAX_AVG && bound_violations == 0,
        format!("{runs} runs, max average calls/iteration {worst_avg:.3} (limit {C3_MAX_AVG}), {bound_violations} cumulative-bound violations"),
    )
}

fn criterion_4(ctx: &Ctx) -> Outcome {
    let m = &ctx.monotone;
    outcome(
        m.runs > 0 && m.bounded == 0 && m.squares == 0,
        format!(
            "{} runs, {} steps: bounded-iterate violations {}, sum-of-squares violations {} (vacuous on {} alpha = 1 runs), Lyapunov increases {}",
            m.runs, m.steps, m.bounded, m.squares, m.squares_vacuous_runs, m.lyapunov
        ),
    )
}

fn criterion_5(ctx: &mut Ctx) -> Outcome {
    let start = Instant::now();
    let (alpha, beta, sigma) = (0.5, 0.5, 1.0);
    let g2 = gamma2(alpha, beta, 1.0).unwrap();
    let mut run_specific = 0;
    let mut a_priori = 0;
    let mut checked = 0;
    let mut early = 0;
    for seed in C5_SEEDS {
        let prob = make_test_problem(ProblemSpec::desk("prob2").unwrap(), seed).unwrap();
        let data = prob.data.clone().unwrap();
        let l2 = prob.lipschitz.l2.unwrap();
        let z_star = reference_saddle_point(&prob, 1e-10).unwrap();
        let y_star = PrimalDualPoint::split(&z_star, prob.m).unwrap().y;
        let r_dual = 2.0 * y_star.norm();
        let ls = LineSearchConfig { alpha, beta, sigma, epsilon: C5_EPS, with_advancing: true };
        let cfg = SolverConfig::second_order(ls, 1000).with_certification();
        let traj = run_second_order(&prob, &Euclidean, &cfg).unwrap();
        if traj.stop == StopReason::EarlyExit {
            early += 1;
        }
        let avgs = traj.weighted_averages().unwrap();
        let mut eta_sum = 0.0;
        for (i, (rec, avg)) in traj.records.iter().zip(avgs.iter()).enumerate() {
            eta_sum += rec.eta;
            let n = i + 1;
            let gap = restricted_gap_prob2(&prob, avg, r_dual).unwrap();
            let y_bar = PrimalDualPoint::split(avg, prob.m).unwrap().y;
            // D(z, z0) at the maximizing pair (x, y) of the restricted gap.
            let d_z = 0.5 * ((2.0 / l2) * (data.a.transpose() * &y_bar).norm() + r_dual * r_dual);
            checked += 1;
            if gap > d_z / eta_sum {
                run_specific += 1;
            }
            if rec.residual > C5_EPS {
                let bound = g2 * l2 * d_z * (0.5 * z_star.norm_squared()).sqrt() * (n as f64).powf(-1.5);
                if gap > bound {
                    a_priori += 1;
                }
            }
        }
        ctx.searches.add(&traj, beta);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        run_specific == 0 && a_priori == 0 && secs < C5_RUNTIME_S,
        format!(
            "{checked} averaged iterates over {} seeds ({early} early exits): stepsize-sum bound violations {run_specific}, N^(-3/2) bound violations {a_priori}, {secs:.1}s",
            C5_SEEDS.count()
        ),
    )
}

fn criterion_6(ctx: &mut Ctx) -> Outcome {
    let (alpha, beta, sigma) = (0.5, 0.5, 1.0);
    let prob = make_test_problem(ProblemSpec::desk("prob2_sc").unwrap(), C6_SEED).unwrap();
    let mu = prob.mu;
    let l2 = prob.lipschitz.l2.unwrap();
    let z_star = reference_saddle_point(&prob, 1e-8).unwrap();
    let ls = LineSearchConfig { alpha, beta, sigma, epsilon: C6_EPS, with_advancing: true };
    let cfg = SolverConfig::second_order(ls, C6_BUDGET).with_mu(mu).with_certification();
    let traj = run_second_order(&prob, &Euclidean, &cfg).unwrap();
    ctx.searches.add(&traj, beta);

    let d0 = Euclidean.distance(&z_star, &traj.z0);
    let c = gamma2(alpha, beta, 1.0).unwrap() * kappa_p(l2, 2, d0, mu).unwrap();
    let (checked, bad) = superlinear_violations(&traj, c, 1.5, 0.0);

    let zetas = traj.zetas();
    let dist0 = (&traj.z0 - &z_star).norm_squared();
    let mut dist_violations = 0;
    for (k, z) in traj.iterates.iter().enumerate() {
        if (z - &z_star).norm_squared() > zeta_distance_bound(dist0, alpha, zetas[k]) {
            dist_violations += 1;
        }
    }
    let reached = traj.records.iter().position(|r| r.residual <= C6_EPS).map(|k| k + 1);
    let best = traj.records.iter().map(|r| r.residual).fold(f64::INFINITY, f64::min);
    let close = traj.records.iter().position(|r| r.residual <= 1e-8).map(|k| k + 1);
    let reached_ok = matches!(reached, Some(n) if n <= C6_MAX_OUTER);
    outcome(
        bad.is_empty() && dist_violations == 0 && reached_ok,
        format!(
            "superlinear violations {} of {checked} beta-optimal steps, distance-bound violations {dist_violations}; residual {C6_EPS:e} reached at {:?} (limit {C6_MAX_OUTER}); best residual {best:.3e}, residual 1e-8 reached at {:?}, final distance {:.3e} with |z*| = {:.3e}",
            bad.len(),
            reached,
            close,
            (traj.last_point() - &z_star).norm(),
            z_star.norm()
        ),
    )
}

fn criterion_7(ctx: &mut Ctx) -> Outcome {
    let (alpha, sigma) = (0.5, 1.0);
    let mut worst = BTreeMap::new();
    let mut bound_violations = 0;
    for name in ["prob2", "prob2_sc"] {
        for &beta in &[0.5, 0.9] {
            let g2 = gamma2(alpha, beta, 1.0).unwrap();
            for seed in C7_SEEDS {
                let spec = ProblemSpec::desk(name).unwrap();
                let prob = make_test_problem(spec, seed).unwrap();
                let z_star = reference_saddle_point(&prob, 1e-8).unwrap();
                let d0 = 0.5 * z_star.norm_squared();
                let l2 = prob.lipschitz.l2.unwrap();
                let ls = LineSearchConfig { alpha, beta, sigma, epsilon: C7_EPS, with_advancing: true };
                let cfg = SolverConfig::second_order(ls, C7_ITERS).with_mu(spec.mu()).with_certification();
                let traj = run_second_order(&prob, &Euclidean, &cfg).unwrap();
                let mut total = 0;
                for (i, r) in traj.records.iter().enumerate() {
                    total += r.calls;
                    if total as f64 > second_order_call_bound(i + 1, sigma, beta, alpha, g2, l2, d0, C7_EPS) {
                        bound_violations += 1;
                    }
                }
                let e = worst.entry((name, (beta * 10.0) as u32)).or_insert(0.0f64);
                *e = e.max(traj.average_calls());
                ctx.searches.add(&traj, beta);
            }
        }
    }
    let mut ok = bound_violations == 0;
    let mut cells = Vec::new();
    for ((name, b10), avg) in &worst {
        let limit = if *b10 == 5 { 4.5 } else { 9.0 };
        ok &= *avg <= limit;
        cells.push(format!("{name} beta=0.{b10}: {avg:.3} (limit {limit})"));
    }
    outcome(ok, format!("{}; {bound_violations} cumulative-bound violations", cells.join(", ")))
}

fn random_point(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(d, |_, _| scale * rng.random_range(-1.0..=1.0))
}

fn criterion_8(ctx: &mut Ctx) -> Outcome {
    let prob = make_test_problem(ProblemSpec::desk("prob_p3").unwrap(), 1).unwrap();
    let l3 = prob.lipschitz.order(3).unwrap();
    let lam = l3;
    let lpl = lp_phi_lambda(l3, 3, 1.0, lam);
    let d = prob.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut approx_bad, mut mono_bad) = (0, 0);
    let mut worst_ratio: f64 = 0.0;
    let mut worst_inner = f64::INFINITY;
    for _ in 0..C8_PAIRS {
        let z = random_point(&mut rng, d, 1.0);
        let r: f64 = rng.random_range(0.01..2.0);
        let u = random_point(&mut rng, d, 1.0);
        let zp = &z + &u * (r / u.norm());
        let err =
            (eval_f(&prob, &zp).unwrap() - eval_regularized_taylor(&prob, &Euclidean, 3, lam, &zp, &z).unwrap()).norm();
        let bound = lpl / 6.0 * (&zp - &z).norm().powi(3);
        if err > bound {
            approx_bad += 1;
        }
        worst_ratio = worst_ratio.max(err / bound);

        let z1 = &z + random_point(&mut rng, d, 1.5);
        let z2 = &z + random_point(&mut rng, d, 1.5);
        let t1 = eval_regularized_taylor(&prob, &Euclidean, 3, lam, &z1, &z).unwrap();
        let t2 = eval_regularized_taylor(&prob, &Euclidean, 3, lam, &z2, &z).unwrap();
        let inner = (t2 - t1).dot(&(&z2 - &z1));
        if inner < C8_MONO_TOL {
            mono_bad += 1;
        }
        worst_inner = worst_inner.min(inner);
    }

    // Direct subsolver invocations on the same model, for the inclusion audit.
    let inner_cfg = InnerConfig::default();
    for _ in 0..C10_TAYLOR_CASES {
        let base = random_point(&mut rng, d, 1.0);
        let pred = Predictor::build(&prob, PredictorKind::RegularizedTaylor { order: 3, lambda: lam }, &base).unwrap();
        let v = random_point(&mut rng, d, 0.1);
        let eta = 10f64.powf(rng.random_range(-2.0..2.0));
        let req = SubsolverRequest { eta, predictor: &pred, v_minus: &v, z_minus: &base, map: &Euclidean, prob: &prob };
        let res = solve_regularized_taylor_inclusion(&req, inner_cfg).unwrap();
        record_inclusion(ctx, res.inclusion_residual, res.tolerance, inner_cfg.tol);
    }
    outcome(
        approx_bad == 0 && mono_bad == 0,
        format!(
            "{C8_PAIRS} pairs: approximation violations {approx_bad} (worst error/bound {worst_ratio:.3}), monotonicity violations {mono_bad} (min inner product {worst_inner:.3e})"
        ),
    )
}

fn record_inclusion(ctx: &mut Ctx, residual: f64, tolerance: f64, configured: f64) {
    let t = &mut ctx.taylor_inclusions;
    t.0 += 1;
    t.1 = t.1.max(residual / tolerance);
    if residual <= configured {
        t.2 += 1;
    }
}

fn criterion_9(ctx: &mut Ctx) -> Outcome {
    let (alpha, beta, sigma) = (0.5, 0.5, 1.0);
    let mut violations = 0;
    let mut checked = 0;
    let mut slow = Vec::new();
    let mut outer = Vec::new();
    for seed in C9_SEEDS {
        let prob = make_test_problem(ProblemSpec::desk("prob_p3").unwrap(), seed).unwrap();
        let l3 = prob.lipschitz.order(3).unwrap();
        let lam = l3;
        let z_star = reference_saddle_point(&prob, 1e-12).unwrap();
        let ls = LineSearchConfig { alpha, beta, sigma, epsilon: C9_EPS, with_advancing: true };
        let cfg = SolverConfig::pth_order(3, lam, ls, C9_MAX_OUTER).with_mu(prob.mu).with_certification();
        let traj = run_pth_order(&prob, &Euclidean, 3, lam, &cfg).unwrap();
        ctx.searches.add(&traj, beta);
        for r in &traj.records {
            let t = &mut ctx.taylor_inclusions;
            t.0 += r.calls;
            t.1 = t.1.max(r.tolerance_ratio);
        }
        let d0 = Euclidean.distance(&z_star, &traj.z0);
        let g3 = gamma_p(alpha, beta, 1.0, 3).unwrap();
        let kt = kappa_tilde_p(g3, lp_phi_lambda(l3, 3, 1.0, lam), 3, d0, prob.mu).unwrap();
        let (c, bad) = superlinear_violations(&traj, kt, 2.0, 0.0);
        checked += c;
        violations += bad.len();
        let final_res = residual(&prob, traj.last_point()).unwrap();
        outer.push(traj.iterations());
        if final_res > C9_EPS || traj.iterations() > C9_MAX_OUTER {
            slow.push(seed);
        }
    }
    outcome(
        violations == 0 && slow.is_empty(),
        format!("superlinear violations {violations} of {checked} beta-optimal steps; outer iterations {outer:?} (limit {C9_MAX_OUTER}); seeds missing residual {C9_EPS:e}: {slow:?}"),
    )
}

/// argmin over [−R, R]² of ⟨g, w⟩ + t‖w‖₁ + ½‖w − c‖², by nested grids.
fn grid_minimize(g: &DVector<f64>, t: f64, c: &DVector<f64>, radius: f64) -> DVector<f64> {
    let obj = |w0: f64, w1: f64| {
        g[0] * w0 + g[1] * w1 + t * (w0.abs() + w1.abs()) + 0.5 * ((w0 - c[0]).powi(2) + (w1 - c[1]).powi(2))
    };
    let steps = 400;
    let (mut lo0, mut hi0, mut lo1, mut hi1) = (-radius, radius, -radius, radius);
    let mut best = (0.0, 0.0);
    for _ in 0..4 {
        let (h0, h1) = ((hi0 - lo0) / steps as f64, (hi1 - lo1) / steps as f64);
        let mut best_val = f64::INFINITY;
        for i in 0..=steps {
            for j in 0..=steps {
                let (w0, w1) = (lo0 + i as f64 * h0, lo1 + j as f64 * h1);
                let v = obj(w0, w1);
                if v < best_val {
                    best_val = v;
                    best = (w0, w1);
                }
            }
        }
        lo0 = (best.0 - 2.0 * h0).max(-radius);
        hi0 = (best.0 + 2.0 * h0).min(radius);
        lo1 = (best.1 - 2.0 * h1).max(-radius);
        hi1 = (best.1 + 2.0 * h1).min(radius);
    }
    DVector::from_row_slice(&[best.0, best.1])
}

fn criterion_10(ctx: &Ctx) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);

    // (i) closed-form step against grid minimization in two dimensions.
    let mut grid_worst: f64 = 0.0;
    for _ in 0..C10_GRID_CASES {
        let jm = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-2.0..2.0));
        let shift = random_point(&mut rng, 2, 1.0);
        let op: OperatorFn = Arc::new(move |z: &DVector<f64>| &jm * z + &shift);
        let weight = rng.random_range(0.0..0.5);
        let radius = rng.random_range(0.2..1.5);
        let prob = SaddleProblem::new(1, 1, op)
            .with_composite(Composite::L1 { weight })
            .with_feasible(Feasible::Box { radius });
        let base = random_point(&mut rng, 2, radius);
        let z_minus = random_point(&mut rng, 2, radius);
        let v = random_point(&mut rng, 2, 0.5);
        let eta = rng.random_range(0.05..2.0);
        let pred = Predictor::build(&prob, PredictorKind::Constant, &base).unwrap();
        let req =
            SubsolverRequest { eta, predictor: &pred, v_minus: &v, z_minus: &z_minus, map: &Euclidean, prob: &prob };
        let z = solve_first_order(&req).unwrap().z;
        let g = &pred.f_base * eta + &v;
        let w = grid_minimize(&g, eta * weight, &z_minus, radius);
        grid_worst = grid_worst.max((z - w).amax());
    }

    // (ii) affine inclusion residual recomputed from the returned point.
    let mut affine_worst: f64 = 0.0;
    for _ in 0..C10_AFFINE_CASES {
        let d = rng.random_range(2..=20usize);
        let m = d / 2;
        let b = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        let s = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        let jm = &b * b.transpose() * 0.1 + (&s - s.transpose());
        let shift = random_point(&mut rng, d, 1.0);
        let jc = jm.clone();
        let op: OperatorFn = Arc::new(move |z: &DVector<f64>| &jc * z + &shift);
        let jc2 = jm.clone();
        let prob = SaddleProblem::new(m, d - m, op).with_jacobian(Arc::new(move |_: &DVector<f64>| jc2.clone()));
        let base = random_point(&mut rng, d, 2.0);
        let v = random_point(&mut rng, d, 0.5);
        let eta = 10f64.powf(rng.random_range(-3.0..3.0));
        let pred = Predictor::build(&prob, PredictorKind::AffineTaylor, &base).unwrap();
        let req = SubsolverRequest { eta, predictor: &pred, v_minus: &v, z_minus: &base, map: &Euclidean, prob: &prob };
        let z = solve_affine_inclusion(&req).unwrap().z;
        let system = DMatrix::identity(d, d) + &jm * eta;
        let step = &z - &base;
        let rhs = -(&pred.f_base * eta + &v);
        let res = (&system * &step - &rhs).norm();
        let scale = system.norm() * step.norm() + rhs.norm();
        affine_worst = affine_worst.max(res / scale);
    }

    let (count, worst_ratio, within_configured) = ctx.taylor_inclusions;
    let pass = grid_worst <= C10_GRID_TOL && affine_worst <= C10_AFFINE_SCALE && count > 0 && worst_ratio <= 1.0;
    outcome(
        pass,
        format!(
            "prox vs grid max deviation {grid_worst:.2e} (limit {C10_GRID_TOL:e}); affine relative residual {affine_worst:.2e} (limit {C10_AFFINE_SCALE:e}); iterative solves {count}, worst residual/tolerance {worst_ratio:.3}, {within_configured} of the direct ones within the configured tolerance"
        ),
    )
}

fn criterion_11(ctx: &Ctx) -> Outcome {
    let s = &ctx.searches;
    outcome(
        s.beta_optimal > 0 && s.certification_failures == 0 && s.uncertified == 0 && s.bound_violations == 0,
        format!(
            "{} searches, {} beta-optimal: certification failures {}, uncertified {}, call-count bound violations {}",
            s.searches, s.beta_optimal, s.certification_failures, s.uncertified, s.bound_violations
        ),
    )
}

fn criterion_12() -> Outcome {
    let g2 = gamma2(0.5, 0.9, 1.0).unwrap();
    let g3 = gamma_p(0.5, 0.9, 1.0, 3).unwrap();
    outcome(
        (C12_G2.0..=C12_G2.1).contains(&g2) && (C12_G3.0..=C12_G3.1).contains(&g3),
        format!("gamma2 = {g2:.4} in [{}, {}], gamma3 = {g3:.4} in [{}, {}]", C12_G2.0, C12_G2.1, C12_G3.0, C12_G3.1),
    )
}

fn main() {
    // `cargo test` passes harness flags such as --list; ignore them except listing.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut ctx = Ctx::default();
    let mut results: Vec<(usize, &str, Outcome, f64)> = Vec::new();
    let mut run = |n: usize, name: &'static str, f: &mut dyn FnMut(&mut Ctx) -> Outcome, ctx: &mut Ctx| {
        let t = Instant::now();
        let o = f(ctx);
        let secs = t.elapsed().as_secs_f64();
        println!("criterion {n:>2} {}: {name}: {}  [{secs:.1}s]", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, name, o, secs));
    };
    run(1, "fixed-step averaged gap bound", &mut criterion_1, &mut ctx);
    run(2, "fixed-step linear rate", &mut |_| criterion_2(), &mut ctx);
    run(3, "first-order line-search calls", &mut criterion_3, &mut ctx);
    run(4, "bounded iterates and sum of squares", &mut |c| criterion_4(c), &mut ctx);
    run(5, "second-order sublinear gap bounds", &mut criterion_5, &mut ctx);
    run(6, "second-order superlinear steps", &mut criterion_6, &mut ctx);
    run(7, "second-order line-search calls", &mut criterion_7, &mut ctx);
    run(8, "regularized Taylor approximation and monotonicity", &mut criterion_8, &mut ctx);
    run(9, "p-th-order superlinear steps", &mut criterion_9, &mut ctx);
    run(10, "subsolver oracle equivalence", &mut |c| criterion_10(c), &mut ctx);
    run(11, "line-search certification", &mut |c| criterion_11(c), &mut ctx);
    run(12, "theory constants", &mut |_| criterion_12(), &mut ctx);

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("acceptance: {} of {} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
