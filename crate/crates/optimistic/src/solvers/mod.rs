//! Outer drivers: the generic optimistic loop and its first-, second- and
//! p-th-order instances, a mirror-prox baseline, theory bounds and
//! trajectory diagnostics.

pub mod diagnostics;
pub mod theory;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::geometry::{Euclidean, MirrorMap};
use crate::linesearch::{line_search, LineSearchConfig, LineSearchStatus, StepOracle, SubsolverOracle, RATIO_SLACK};
use crate::problems::{eval_f, residual_with, SaddleProblem};
use crate::subsolvers::{prox_step, solve_subproblem, InnerConfig, Predictor, PredictorKind, SubsolverRequest};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// η ≡ 1/M.
    FirstOrderFixed {
        m_const: f64,
    },
    FirstOrderLs,
    SecondOrderLs,
    PthOrderLs {
        p: usize,
        lambda: f64,
    },
    /// Two proximal steps per iteration with a fixed stepsize.
    MirrorProx {
        eta: f64,
    },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::FirstOrderFixed { .. } => "first-fixed",
            Method::FirstOrderLs => "first-ls",
            Method::SecondOrderLs => "second-ls",
            Method::PthOrderLs { .. } => "pth-ls",
            Method::MirrorProx { .. } => "mirror-prox",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    /// μ used in the correction rule η̂_k = η_{k−1}/(1 + μη_{k−1}) and in ζ_k.
    pub mu: f64,
    pub ls: LineSearchConfig,
    pub max_iters: usize,
    pub target_residual: f64,
    pub record_diagnostics: bool,
    pub inner: InnerConfig,
    /// Starting point; the origin when `None`.
    pub z0: Option<DVector<f64>>,
    /// Reference saddle point for distance and Lyapunov diagnostics.
    pub z_ref: Option<DVector<f64>>,
    /// Keep every iterate (needed for averaged-iterate metrics).
    pub keep_iterates: bool,
    /// Re-run the admissibility test at η and η_up after each β-optimal search.
    pub certify_searches: bool,
}

impl SolverConfig {
    fn base(method: Method, ls: LineSearchConfig, max_iters: usize, target_residual: f64) -> Self {
        Self {
            method,
            mu: 0.0,
            ls,
            max_iters,
            target_residual,
            record_diagnostics: false,
            inner: InnerConfig::coupled(target_residual.max(f64::MIN_POSITIVE)),
            z0: None,
            z_ref: None,
            keep_iterates: true,
            certify_searches: false,
        }
    }

    /// Fixed stepsize 1/M with α = 1; runs all `max_iters` iterations.
    pub fn first_order_fixed(m_const: f64, max_iters: usize) -> Self {
        let ls =
            LineSearchConfig { alpha: 1.0, beta: 0.5, sigma: 1.0 / m_const, epsilon: 1e-300, with_advancing: false };
        Self::base(Method::FirstOrderFixed { m_const }, ls, max_iters, f64::NEG_INFINITY)
    }

    pub fn first_order_ls(ls: LineSearchConfig, max_iters: usize, target_residual: f64) -> Self {
        let ls = LineSearchConfig { with_advancing: false, ..ls };
        Self::base(Method::FirstOrderLs, ls, max_iters, target_residual)
    }

    /// Line search with advancing; ε doubles as the target residual.
    pub fn second_order(ls: LineSearchConfig, max_iters: usize) -> Self {
        let ls = LineSearchConfig { with_advancing: true, ..ls };
        Self::base(Method::SecondOrderLs, ls, max_iters, ls.epsilon)
    }

    pub fn pth_order(p: usize, lambda: f64, ls: LineSearchConfig, max_iters: usize) -> Self {
        let ls = LineSearchConfig { with_advancing: true, ..ls };
        Self::base(Method::PthOrderLs { p, lambda }, ls, max_iters, ls.epsilon)
    }

    pub fn mirror_prox(eta: f64, max_iters: usize) -> Self {
        let ls = LineSearchConfig { alpha: 1.0, beta: 0.5, sigma: eta, epsilon: 1e-300, with_advancing: false };
        Self::base(Method::MirrorProx { eta }, ls, max_iters, f64::NEG_INFINITY)
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_start(mut self, z0: DVector<f64>) -> Self {
        self.z0 = Some(z0);
        self
    }

    pub fn with_reference(mut self, z_ref: DVector<f64>) -> Self {
        self.z_ref = Some(z_ref);
        self.record_diagnostics = true;
        self
    }

    pub fn with_inner(mut self, inner: InnerConfig) -> Self {
        self.inner = inner;
        self
    }

    pub fn with_certification(mut self) -> Self {
        self.certify_searches = true;
        self
    }

    pub fn without_iterates(mut self) -> Self {
        self.keep_iterates = false;
        self
    }
}

/// η̂_k = η_{k−1}/(1 + μη_{k−1}).
pub fn eta_hat_rule(eta_prev: f64, mu: f64) -> f64 {
    eta_prev / (1.0 + mu * eta_prev)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub k: usize,
    pub eta: f64,
    pub eta_hat: f64,
    /// Initial trial stepsize of the search (absent for fixed steps).
    pub sigma: Option<f64>,
    pub calls: usize,
    pub inner_iterations: usize,
    pub status: Option<LineSearchStatus>,
    pub bracket: Option<(f64, f64)>,
    pub trials: Vec<(f64, bool)>,
    /// res(z_{k+1}).
    pub residual: f64,
    /// ζ_{k+1}.
    pub zeta: f64,
    /// ‖v_k‖_*.
    pub v_norm: f64,
    /// ‖z_{k+1} − z_k‖.
    pub step_norm: f64,
    /// Largest inclusion residual reported by the subsolver in this step.
    pub inclusion_residual: f64,
    /// Largest inclusion residual over the inner tolerance (iterative solves only).
    pub tolerance_ratio: f64,
    /// Independent re-check of a β-optimal outcome: η admissible, η_up
    /// inadmissible, η_up/η ≤ 1/β. Extra subsolver calls are not counted.
    pub certified: Option<bool>,
    /// Lyapunov value at (z_{k+1}, z_k) when a reference point is known.
    pub lyapunov: Option<f64>,
    pub gap: Option<f64>,
    /// ‖z_{k+1} − z_ref‖².
    pub dist2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Residual,
    EarlyExit,
    MaxIters,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub method: Method,
    pub mu: f64,
    pub alpha: f64,
    pub z0: DVector<f64>,
    pub residual0: f64,
    /// z_0, z_1, … when iterates are kept; otherwise only the last point.
    pub iterates: Vec<DVector<f64>>,
    pub records: Vec<StepRecord>,
    /// η-weighted average of z_1..z_N.
    pub averaged: DVector<f64>,
    pub eta_sum: f64,
    pub total_calls: usize,
    pub stop: StopReason,
    pub warnings: Vec<String>,
    /// V at k = 0 when a reference point is known.
    pub lyapunov0: Option<f64>,
}

impl Trajectory {
    pub fn last_point(&self) -> &DVector<f64> {
        self.iterates.last().expect("trajectory holds at least the start point")
    }

    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn etas(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.eta).collect()
    }

    /// ζ_0 = 1, ζ_k = Π_{l<k}(1 + η_lμ)^{−1}.
    pub fn zetas(&self) -> Vec<f64> {
        diagnostics::zeta_sequence(&self.etas(), self.mu)
    }

    pub fn average_calls(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            self.total_calls as f64 / self.records.len() as f64
        }
    }

    /// η-weighted averages z̄_N for N = 1..=iterations. Needs kept iterates.
    pub fn weighted_averages(&self) -> Result<Vec<DVector<f64>>> {
        self.averages(true)
    }

    /// Uniform averages (1/N)Σ z_{k+1}, equal to the weighted ones for fixed steps.
    pub fn uniform_averages(&self) -> Result<Vec<DVector<f64>>> {
        self.averages(false)
    }

    fn averages(&self, weighted: bool) -> Result<Vec<DVector<f64>>> {
        if self.iterates.len() != self.records.len() + 1 {
            return Err(Error::InvalidParameter("iterates were not kept for this run".into()));
        }
        let mut out = Vec::with_capacity(self.records.len());
        let mut acc = DVector::zeros(self.z0.len());
        let mut wsum = 0.0;
        for (rec, z) in self.records.iter().zip(self.iterates.iter().skip(1)) {
            let w = if weighted { rec.eta } else { 1.0 };
            acc += z * w;
            wsum += w;
            out.push(&acc / wsum);
        }
        Ok(out)
    }
}

enum StepRule {
    Fixed(f64),
    Search,
}

fn check_mu_rule(prob: &SaddleProblem, config: &SolverConfig, warnings: &mut Vec<String>) {
    if prob.mu > 0.0 && config.mu == 0.0 {
        warnings.push(format!("problem is {}-strongly monotone but the correction rule uses mu = 0", prob.mu));
    }
}

fn start_point(prob: &SaddleProblem, config: &SolverConfig) -> Result<DVector<f64>> {
    match &config.z0 {
        Some(z) => {
            crate::error::check_dim(prob.dim(), z.len())?;
            Ok(z.clone())
        }
        None => Ok(DVector::zeros(prob.dim())),
    }
}

/// Generic optimistic loop for a predictor kind and a stepsize rule.
fn run_loop(
    prob: &SaddleProblem,
    map: &dyn MirrorMap,
    kind: PredictorKind,
    rule: StepRule,
    config: &SolverConfig,
) -> Result<Trajectory> {
    if !(config.mu >= 0.0) {
        return Err(Error::InvalidParameter("mu must be nonnegative".into()));
    }
    if let StepRule::Search = rule {
        config.ls.validate()?;
    }
    let mut warnings = Vec::new();
    check_mu_rule(prob, config, &mut warnings);

    let z0 = start_point(prob, config)?;
    let mut z = z0.clone();
    let mut f = eval_f(prob, &z)?;
    let residual0 = residual_with(prob, &z, &f);
    let diag_ref = if config.record_diagnostics { config.z_ref.clone() } else { None };
    let lyapunov0 = diag_ref.as_ref().map(|r| map.distance(r, &z0));

    let mut traj = Trajectory {
        method: config.method,
        mu: config.mu,
        alpha: config.ls.alpha,
        z0: z0.clone(),
        residual0,
        iterates: vec![z0.clone()],
        records: Vec::new(),
        averaged: z0.clone(),
        eta_sum: 0.0,
        total_calls: 0,
        stop: StopReason::MaxIters,
        warnings,
        lyapunov0,
    };
    if residual0 <= config.target_residual {
        traj.stop = StopReason::Residual;
        return Ok(traj);
    }

    let mut weighted = DVector::zeros(z0.len());
    let mut prev_pred: Option<Predictor> = None;
    let mut eta_prev: Option<f64> = None;
    let mut sigma = config.ls.sigma;
    let mut zeta = 1.0;

    for k in 0..config.max_iters {
        let eta_hat = eta_prev.map_or(0.0, |e| eta_hat_rule(e, config.mu));
        let v = match &prev_pred {
            None => DVector::zeros(z.len()),
            Some(p) => (&f - p.eval(prob, map, &z)?) * eta_hat,
        };
        let pred = Predictor::with_value(prob, kind, &z, f.clone())?;

        let mut certified = None;
        let (eta, z_next, f_next, calls, inner_its, incl, ratio, status, bracket, trials, sig) = match rule {
            StepRule::Fixed(eta) => {
                let req = SubsolverRequest { eta, predictor: &pred, v_minus: &v, z_minus: &z, map, prob };
                let r = solve_subproblem(&req, config.inner)?;
                let fz = eval_f(prob, &r.z)?;
                let ratio = if r.tolerance > 0.0 { r.inclusion_residual / r.tolerance } else { 0.0 };
                (eta, r.z, fz, 1, r.inner_iterations, r.inclusion_residual, ratio, None, None, Vec::new(), None)
            }
            StepRule::Search => {
                let ls = LineSearchConfig { sigma, ..config.ls };
                let mut oracle = SubsolverOracle::new(prob, map, &pred, &v, &z, config.ls.alpha, config.inner);
                let out = line_search(&mut oracle, &ls)?;
                debug_assert_eq!(out.calls, oracle.calls);
                if config.certify_searches {
                    if let (LineSearchStatus::BetaOptimal, Some((lo, up))) = (out.status, out.bracket) {
                        let mut fresh = SubsolverOracle::new(prob, map, &pred, &v, &z, config.ls.alpha, config.inner);
                        let a = fresh.trial(lo.ln())?.admissible;
                        let b = fresh.trial(up.ln())?.admissible;
                        let ratio_ok = up / lo <= (1.0 / config.ls.beta) * (1.0 + RATIO_SLACK) && up > lo;
                        certified = Some(a && !b && ratio_ok);
                    }
                }
                (
                    out.eta,
                    out.z_next.z,
                    out.f_next,
                    out.calls,
                    oracle.inner_iterations,
                    oracle.max_inclusion_residual,
                    oracle.max_tolerance_ratio,
                    Some(out.status),
                    out.bracket,
                    out.trials,
                    Some(sigma),
                )
            }
        };

        let res = residual_with(prob, &z_next, &f_next);
        zeta /= 1.0 + eta * config.mu;
        let lyapunov = match &diag_ref {
            Some(r) => Some(diagnostics::lyapunov_value(
                prob,
                map,
                &z_next,
                &z,
                eta,
                config.mu,
                config.ls.alpha,
                Some(&pred),
                r,
            )?),
            None => None,
        };
        let dist2 = config.z_ref.as_ref().map(|r| (&z_next - r).norm_squared());
        let step_norm = map.norm(&(&z_next - &z));
        weighted += &z_next * eta;
        traj.eta_sum += eta;
        traj.total_calls += calls;
        traj.records.push(StepRecord {
            k,
            eta,
            eta_hat,
            sigma: sig,
            calls,
            inner_iterations: inner_its,
            status,
            bracket,
            trials,
            residual: res,
            zeta,
            v_norm: map.dual_norm(&v),
            step_norm,
            inclusion_residual: incl,
            tolerance_ratio: ratio,
            certified,
            lyapunov,
            gap: None,
            dist2,
        });

        if config.keep_iterates {
            traj.iterates.push(z_next.clone());
        } else {
            traj.iterates[0] = z_next.clone();
        }
        z = z_next;
        f = f_next;
        prev_pred = Some(pred);
        eta_prev = Some(eta);
        sigma = eta / config.ls.beta;

        if status == Some(LineSearchStatus::EarlyExitEpsilon) {
            traj.stop = StopReason::EarlyExit;
            break;
        }
        if res <= config.target_residual {
            traj.stop = StopReason::Residual;
            break;
        }
    }
    traj.averaged = if traj.eta_sum > 0.0 { weighted / traj.eta_sum } else { z0 };
    Ok(traj)
}

/// Generic loop: `kind` chooses the predictor, a fixed stepsize skips the search.
pub fn run_gom(
    prob: &SaddleProblem,
    map: &dyn MirrorMap,
    kind: PredictorKind,
    fixed_eta: Option<f64>,
    config: &SolverConfig,
) -> Result<Trajectory> {
    let rule = match fixed_eta {
        Some(eta) if eta > 0.0 => StepRule::Fixed(eta),
        Some(eta) => return Err(Error::InvalidParameter(format!("fixed stepsize must be positive, got {eta}"))),
        None => StepRule::Search,
    };
    run_loop(prob, map, kind, rule, config)
}

/// First-order method with η ≡ 1/M.
pub fn run_first_order_fixed(
    prob: &SaddleProblem,
    map: &dyn MirrorMap,
    m_const: f64,
    config: &SolverConfig,
) -> Result<Trajectory> {
    if !(m_const > 0.0) {
        return Err(Error::InvalidParameter("M must be positive".into()));
    }
    let mut extra = Vec::new();
    match prob.lipschitz.l1 {
        Some(l1) if m_const < 2.0 * l1 * (1.0 - 1e-12) => {
            return Err(Error::InvalidParameter(format!("M = {m_const} is below 2·L1 = {}", 2.0 * l1)));
        }
        None => extra.push("L1 unknown; M >= 2·L1 not verified".to_string()),
        _ => {}
    }
    let mut traj = run_gom(prob, map, PredictorKind::Constant, Some(1.0 / m_const), config)?;
    traj.warnings.extend(extra);
    Ok(traj)
}

/// First-order method with the search run without advancing.
pub fn run_first_order_ls(prob: &SaddleProblem, map: &dyn MirrorMap, config: &SolverConfig) -> Result<Trajectory> {
    let mut cfg = config.clone();
    cfg.ls.with_advancing = false;
    run_gom(prob, map, PredictorKind::Constant, None, &cfg)
}

/// Second-order method: affine Taylor predictor, search with advancing.
pub fn run_second_order(prob: &SaddleProblem, map: &dyn MirrorMap, config: &SolverConfig) -> Result<Trajectory> {
    if prob.jac_oracle.is_none() {
        return Err(Error::MissingOracle { order: 1 });
    }
    let mut cfg = config.clone();
    cfg.ls.with_advancing = true;
    run_gom(prob, map, PredictorKind::AffineTaylor, None, &cfg)
}

/// p-th-order method: regularized Taylor predictor of order p − 1.
pub fn run_pth_order(
    prob: &SaddleProblem,
    map: &dyn MirrorMap,
    p: usize,
    lambda: f64,
    config: &SolverConfig,
) -> Result<Trajectory> {
    if p < 2 {
        return Err(Error::InvalidParameter(format!("order must be at least 2, got {p}")));
    }
    if p >= 3 {
        if let Some(lp) = prob.lipschitz.order(p) {
            if lambda < lp {
                return Err(Error::InvalidParameter(format!("lambda = {lambda} is below L_{p} = {lp}")));
            }
        }
    }
    let mut cfg = config.clone();
    cfg.ls.with_advancing = true;
    run_gom(prob, map, PredictorKind::RegularizedTaylor { order: p, lambda }, None, &cfg)
}

/// Mirror-prox: w = prox(z_k, ηF(z_k)), z_{k+1} = prox(z_k, ηF(w)).
pub fn run_mirror_prox(
    prob: &SaddleProblem,
    map: &dyn MirrorMap,
    eta: f64,
    config: &SolverConfig,
) -> Result<Trajectory> {
    if !map.is_euclidean() {
        return Err(Error::Unsupported("mirror-prox baseline needs the Euclidean map".into()));
    }
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter("stepsize must be positive".into()));
    }
    let z0 = start_point(prob, config)?;
    let mut z = z0.clone();
    let mut f = eval_f(prob, &z)?;
    let residual0 = residual_with(prob, &z, &f);
    let mut traj = Trajectory {
        method: Method::MirrorProx { eta },
        mu: config.mu,
        alpha: config.ls.alpha,
        z0: z0.clone(),
        residual0,
        iterates: vec![z0.clone()],
        records: Vec::new(),
        averaged: z0.clone(),
        eta_sum: 0.0,
        total_calls: 0,
        stop: StopReason::MaxIters,
        warnings: Vec::new(),
        lyapunov0: None,
    };
    if residual0 <= config.target_residual {
        traj.stop = StopReason::Residual;
        return Ok(traj);
    }
    let mut weighted = DVector::zeros(z0.len());
    let mut zeta = 1.0;
    for k in 0..config.max_iters {
        let mid = prox_step(prob, &z, &(&f * eta), eta);
        let f_mid = eval_f(prob, &mid)?;
        let z_next = prox_step(prob, &z, &(&f_mid * eta), eta);
        let f_next = eval_f(prob, &z_next)?;
        let res = residual_with(prob, &z_next, &f_next);
        zeta /= 1.0 + eta * config.mu;
        weighted += &z_next * eta;
        traj.eta_sum += eta;
        traj.total_calls += 2;
        traj.records.push(StepRecord {
            k,
            eta,
            eta_hat: 0.0,
            sigma: None,
            calls: 2,
            inner_iterations: 0,
            status: None,
            bracket: None,
            trials: Vec::new(),
            residual: res,
            zeta,
            v_norm: 0.0,
            step_norm: (&z_next - &z).norm(),
            inclusion_residual: 0.0,
            tolerance_ratio: 0.0,
            certified: None,
            lyapunov: None,
            gap: None,
            dist2: config.z_ref.as_ref().map(|r| (&z_next - r).norm_squared()),
        });
        if config.keep_iterates {
            traj.iterates.push(z_next.clone());
        } else {
            traj.iterates[0] = z_next.clone();
        }
        z = z_next;
        f = f_next;
        if res <= config.target_residual {
            traj.stop = StopReason::Residual;
            break;
        }
    }
    traj.averaged = if traj.eta_sum > 0.0 { weighted / traj.eta_sum } else { z0 };
    Ok(traj)
}

/// Iteration cap of the long first-order run behind reference points.
pub const REFERENCE_CAP: usize = 2_000_000;

/// Long first-order run with line search until res ≤ `tol`.
pub(crate) fn long_run_reference(prob: &SaddleProblem, map: &dyn MirrorMap, tol: f64) -> Result<DVector<f64>> {
    let ls = LineSearchConfig { alpha: 1.0, beta: 0.5, sigma: 1.0, epsilon: tol, with_advancing: false };
    let cfg = SolverConfig::first_order_ls(ls, REFERENCE_CAP, tol).with_mu(prob.mu).without_iterates();
    let traj = run_first_order_ls(prob, map, &cfg)?;
    let z = traj.last_point().clone();
    let res = traj.records.last().map_or(traj.residual0, |r| r.residual);
    if res <= tol {
        Ok(z)
    } else {
        Err(Error::ReferenceFailed { residual: res, iterations: traj.records.len() })
    }
}

/// Convenience: the Euclidean map as a trait object.
pub fn euclidean() -> &'static dyn MirrorMap {
    &Euclidean
}
