//! Problem setup, method dispatch, metrics and bound overlays.

use nalgebra::DVector;
use optimistic::problems::{primal_dual_gap_prob1, restricted_gap_prob2, PrimalDualPoint};
use optimistic::solvers::diagnostics::simulated_zeta;
use optimistic::solvers::theory::{
    first_order_call_bound, fixed_step_gap_bound, fixed_step_linear_bound, gamma2, gamma_p, kappa_p, lp_phi_lambda,
    pth_order_call_bound, second_order_call_bound, second_order_gap_bound, stepsize_sum_gap_bound, zeta_distance_bound,
};
use optimistic::solvers::{
    run_first_order_fixed, run_first_order_ls, run_mirror_prox, run_pth_order, run_second_order,
};
use optimistic::{
    make_test_problem, reference_saddle_point, Euclidean, LineSearchConfig, ProblemSpec, SaddleProblem, SolverConfig,
    Trajectory,
};

use crate::config::{problem_spec_for, MethodChoice, Settings};
use crate::CliError;

/// A generated instance with its reference point when one could be computed.
pub struct Prepared {
    pub spec: ProblemSpec,
    pub seed: u64,
    pub prob: SaddleProblem,
    pub z_star: Option<DVector<f64>>,
}

/// Reference tolerances tried in order; the second covers instances whose
/// residual cannot get below 1e−10 in double precision.
const REFERENCE_TOLS: [f64; 2] = [1e-10, 1e-8];

pub fn prepare(settings: &Settings, name: &str, seed: u64, with_reference: bool) -> Result<Prepared, CliError> {
    let spec = problem_spec_for(settings, name)?;
    let prob = make_test_problem(spec, seed).map_err(|e| CliError::Config(e.to_string()))?;
    let z_star = if with_reference {
        REFERENCE_TOLS.iter().find_map(|&tol| reference_saddle_point(&prob, tol).ok())
    } else {
        None
    };
    Ok(Prepared { spec, seed, prob, z_star })
}

/// Resolved method parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodParams {
    pub method: MethodChoice,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub iters: usize,
    pub eps: f64,
    /// Explicit target for the fixed-step methods, which otherwise run every iteration.
    pub fixed_target: Option<f64>,
    pub mu: f64,
    pub order: usize,
    pub lambda: f64,
    pub m_const: f64,
    pub eta: f64,
}

pub fn resolve(settings: &Settings, method: MethodChoice, prob: &SaddleProblem) -> Result<MethodParams, CliError> {
    let order = settings.order.unwrap_or(if method == MethodChoice::PthLs { 3 } else { 2 });
    let l1 = prob.lipschitz.l1;
    let m_const = match (settings.m_const, l1) {
        (Some(m), _) => m,
        (None, Some(l1)) => 2.0 * l1,
        (None, None) if method == MethodChoice::FirstFixed => {
            return Err(CliError::Config("first-fixed needs m_const for a problem without a known L1".into()))
        }
        _ => f64::NAN,
    };
    let eta = match (settings.eta, l1) {
        (Some(e), _) => e,
        (None, Some(l1)) => 0.5 / l1,
        (None, None) if method == MethodChoice::MirrorProx => {
            return Err(CliError::Config("mirror-prox needs eta for a problem without a known L1".into()))
        }
        _ => f64::NAN,
    };
    let lambda = match (settings.lambda, prob.lipschitz.order(order)) {
        (Some(l), _) => l,
        (None, Some(lp)) => lp,
        (None, None) if method == MethodChoice::PthLs => {
            return Err(CliError::Config(format!("pth-ls needs lambda: L_{order} is unknown for this problem")))
        }
        _ => 0.0,
    };
    Ok(MethodParams {
        method,
        alpha: settings.alpha.unwrap_or(0.5),
        beta: settings.beta.unwrap_or(0.5),
        sigma: settings.sigma.unwrap_or(1.0),
        iters: settings.iters.unwrap_or(method.default_iters()),
        eps: settings.eps.unwrap_or(method.default_eps()),
        fixed_target: settings.eps,
        mu: prob.mu,
        order,
        lambda,
        m_const,
        eta,
    })
}

fn solver_config(p: &MethodParams) -> SolverConfig {
    let ls = LineSearchConfig { alpha: p.alpha, beta: p.beta, sigma: p.sigma, epsilon: p.eps, with_advancing: false };
    let mut cfg = match p.method {
        MethodChoice::FirstFixed => SolverConfig::first_order_fixed(p.m_const, p.iters),
        MethodChoice::FirstLs => SolverConfig::first_order_ls(ls, p.iters, p.eps),
        MethodChoice::SecondLs => SolverConfig::second_order(ls, p.iters),
        MethodChoice::PthLs => SolverConfig::pth_order(p.order, p.lambda, ls, p.iters),
        MethodChoice::MirrorProx => SolverConfig::mirror_prox(p.eta, p.iters),
    };
    if matches!(p.method, MethodChoice::FirstFixed | MethodChoice::MirrorProx) {
        cfg.target_residual = p.fixed_target.unwrap_or(f64::NEG_INFINITY);
    }
    cfg.with_mu(p.mu)
}

pub fn run(prep: &Prepared, p: &MethodParams, keep_iterates: bool) -> Result<Trajectory, CliError> {
    let mut cfg = solver_config(p);
    if let Some(z) = &prep.z_star {
        cfg = cfg.with_reference(z.clone());
    }
    if !keep_iterates {
        cfg = cfg.without_iterates();
    }
    let prob = &prep.prob;
    let out = match p.method {
        MethodChoice::FirstFixed => run_first_order_fixed(prob, &Euclidean, p.m_const, &cfg),
        MethodChoice::FirstLs => run_first_order_ls(prob, &Euclidean, &cfg),
        MethodChoice::SecondLs => run_second_order(prob, &Euclidean, &cfg),
        MethodChoice::PthLs => run_pth_order(prob, &Euclidean, p.order, p.lambda, &cfg),
        MethodChoice::MirrorProx => run_mirror_prox(prob, &Euclidean, p.eta, &cfg),
    };
    out.map_err(|e| CliError::Solver(e.to_string()))
}

/// Metric plotted by `compare`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Gap,
    Dist2,
    Residual,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Gap => "gap",
            MetricKind::Dist2 => "dist2",
            MetricKind::Residual => "residual",
        }
    }
}

pub fn metric_kind(prep: &Prepared) -> MetricKind {
    match prep.spec {
        ProblemSpec::Prob1 { mu: 0.0, .. } => MetricKind::Gap,
        ProblemSpec::Prob2 { .. } if prep.z_star.is_some() => MetricKind::Gap,
        _ if prep.prob.mu > 0.0 && prep.z_star.is_some() => MetricKind::Dist2,
        _ => MetricKind::Residual,
    }
}

/// Dual radius of the restricted gap: twice the dual part of the reference.
fn dual_radius(prep: &Prepared) -> Option<f64> {
    let z = prep.z_star.as_ref()?;
    PrimalDualPoint::split(z, prep.prob.m).ok().map(|p| 2.0 * p.y.norm())
}

/// Gap of the η-weighted averages, when the problem has a closed-form gap.
pub fn gap_series(prep: &Prepared, traj: &Trajectory) -> Result<Option<Vec<f64>>, CliError> {
    type GapFn<'a> = Box<dyn Fn(&DVector<f64>) -> optimistic::Result<f64> + 'a>;
    let gap: GapFn = match prep.spec {
        ProblemSpec::Prob1 { mu: 0.0, .. } => Box::new(|z| primal_dual_gap_prob1(&prep.prob, z)),
        ProblemSpec::Prob2 { .. } => match dual_radius(prep) {
            Some(r) => Box::new(move |z| restricted_gap_prob2(&prep.prob, z, r)),
            None => return Ok(None),
        },
        _ => return Ok(None),
    };
    let Ok(avgs) = traj.weighted_averages() else { return Ok(None) };
    avgs.iter().map(|a| gap(a).map_err(|e| CliError::Solver(e.to_string()))).collect::<Result<Vec<_>, _>>().map(Some)
}

pub fn metric_series(kind: MetricKind, traj: &Trajectory, gaps: Option<&[f64]>) -> Vec<Option<f64>> {
    match kind {
        MetricKind::Gap => match gaps {
            Some(g) => g.iter().map(|&v| Some(v)).collect(),
            None => vec![None; traj.records.len()],
        },
        MetricKind::Dist2 => traj.records.iter().map(|r| r.dist2).collect(),
        MetricKind::Residual => traj.records.iter().map(|r| Some(r.residual)).collect(),
    }
}

pub type Column = (String, Vec<Option<f64>>);

/// Theory curves that apply to this run, each indexed by iteration count N.
pub fn overlays(prep: &Prepared, p: &MethodParams, traj: &Trajectory) -> Vec<Column> {
    let n_rows = traj.records.len();
    let ns = 1..=n_rows;
    let mut cols: Vec<Column> = Vec::new();
    let prob = &prep.prob;
    let d0_sq = prep.z_star.as_ref().map(|z| (&traj.z0 - z).norm_squared());
    let big_d0 = d0_sq.map(|d| 0.5 * d);

    if let (MethodChoice::FirstFixed, ProblemSpec::Prob1 { mu, radius, .. }) = (p.method, prep.spec) {
        if mu == 0.0 {
            cols.push((
                "gap_bound_fixed".into(),
                ns.clone().map(|n| Some(fixed_step_gap_bound(p.m_const, prob.dim(), radius, n))).collect(),
            ));
        } else if let Some(d) = d0_sq {
            cols.push((
                "dist2_bound_linear".into(),
                ns.clone().map(|n| Some(fixed_step_linear_bound(d, p.m_const, mu, n))).collect(),
            ));
        }
    }
    if p.mu > 0.0 && p.method != MethodChoice::MirrorProx {
        if let Some(d) = d0_sq {
            let alpha = traj.alpha;
            cols.push((
                "dist2_bound_zeta".into(),
                traj.records.iter().map(|r| Some(zeta_distance_bound(d, alpha, r.zeta))).collect(),
            ));
        }
    }
    if let (ProblemSpec::Prob2 { l2, .. }, Some(r)) = (prep.spec, dual_radius(prep)) {
        if let Ok(avgs) = traj.weighted_averages() {
            let a = &prob.data.as_ref().expect("generated instance").a;
            let d_z: Vec<f64> = avgs
                .iter()
                .map(|avg| {
                    let y = PrimalDualPoint::split(avg, prob.m).expect("dimension").y;
                    0.5 * ((2.0 / l2) * (a.transpose() * y).norm() + r * r)
                })
                .collect();
            let mut eta_sum = 0.0;
            let col = traj
                .records
                .iter()
                .zip(&d_z)
                .map(|(rec, d)| {
                    eta_sum += rec.eta;
                    Some(stepsize_sum_gap_bound(*d, eta_sum))
                })
                .collect();
            cols.push(("gap_bound_stepsize_sum".into(), col));
            if let (MethodChoice::SecondLs, Some(bd), Ok(g2)) = (p.method, big_d0, gamma2(p.alpha, p.beta, 1.0)) {
                let col = traj
                    .records
                    .iter()
                    .zip(&d_z)
                    .enumerate()
                    .map(|(i, (rec, d))| (rec.residual > p.eps).then(|| second_order_gap_bound(g2, l2, *d, bd, i + 1)))
                    .collect();
                cols.push(("gap_bound_n32".into(), col));
            }
        }
    }
    if let (MethodChoice::SecondLs, Some(bd), Some(l2), Ok(g2)) =
        (p.method, big_d0, prob.lipschitz.l2, gamma2(p.alpha, p.beta, 1.0))
    {
        if p.mu > 0.0 {
            if let Ok(k2) = kappa_p(l2, 2, bd, p.mu) {
                let sim = simulated_zeta(g2 * k2, n_rows);
                cols.push(("zeta_simulated".into(), sim.into_iter().skip(1).map(Some).collect()));
            }
        }
    }

    let call_bound: Option<Box<dyn Fn(usize) -> f64>> = match p.method {
        MethodChoice::FirstLs => prob.lipschitz.l1.map(|l1| {
            let (s, b, a) = (p.sigma, p.beta, p.alpha);
            Box::new(move |n| first_order_call_bound(n, s, b, a, l1)) as Box<dyn Fn(usize) -> f64>
        }),
        MethodChoice::SecondLs => match (prob.lipschitz.l2, big_d0, gamma2(p.alpha, p.beta, 1.0)) {
            (Some(l2), Some(bd), Ok(g2)) => {
                let (s, b, a, e) = (p.sigma, p.beta, p.alpha, p.eps);
                Some(Box::new(move |n| second_order_call_bound(n, s, b, a, g2, l2, bd, e)))
            }
            _ => None,
        },
        MethodChoice::PthLs => match (prob.lipschitz.order(p.order), big_d0, gamma_p(p.alpha, p.beta, 1.0, p.order)) {
            (Some(lp), Some(bd), Ok(gp)) => {
                let lpl = lp_phi_lambda(lp, p.order, 1.0, p.lambda);
                let (s, b, a, e, q) = (p.sigma, p.beta, p.alpha, p.eps, p.order);
                Some(Box::new(move |n| pth_order_call_bound(n, q, s, b, a, 1.0, gp, lpl, bd, e)))
            }
            _ => None,
        },
        _ => None,
    };
    if let Some(bound) = call_bound {
        let mut total = 0;
        let cum = traj
            .records
            .iter()
            .map(|r| {
                total += r.calls;
                Some(total as f64)
            })
            .collect();
        cols.push(("calls_cumulative".into(), cum));
        cols.push(("calls_bound".into(), ns.map(|n| Some(bound(n))).collect()));
    }
    cols
}
