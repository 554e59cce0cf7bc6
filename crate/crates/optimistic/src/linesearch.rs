//! Bracket-then-bisect stepsize search.
//!
//! The search starts from a trial σ, then either backtracks (η ← βη²/σ) or
//! advances (η ← η²/(βσ)) until it brackets the admissibility boundary, and
//! finally bisects the bracket geometrically until η_up/η_lo ≤ 1/β. All
//! stepsizes are handled as logarithms so the doubly exponential trial
//! sequences σβ^{±(2^i−1)} are formed exactly from their exponents.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::geometry::MirrorMap;
use crate::problems::{eval_f, residual_with, SaddleProblem};
use crate::subsolvers::{solve_subproblem, InnerConfig, Predictor, SubsolverRequest, SubsolverResult};

/// Hard cap on the number of steps in each subroutine.
pub const STEP_CAP: usize = 60;

/// Relative slack used when comparing a bracket ratio with 1/β.
pub const RATIO_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchConfig {
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub with_advancing: bool,
}

impl LineSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidParameter(format!("beta must lie in (0, 1), got {}", self.beta)));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// Outcome of one admissibility test.
#[derive(Debug, Clone)]
pub struct Trial {
    pub eta: f64,
    pub log_eta: f64,
    pub admissible: bool,
    /// η‖F(z) − P(z)‖_*.
    pub lhs: f64,
    /// (α/2)‖z − z⁻‖.
    pub rhs: f64,
    /// Subsolver output; `None` when the subsolver rejected this stepsize.
    pub result: Option<SubsolverResult>,
    /// F at the candidate point.
    pub f_z: Option<DVector<f64>>,
}

/// Source of admissibility verdicts. Each `trial` is one subsolver call.
pub trait StepOracle {
    fn trial(&mut self, log_eta: f64) -> Result<Trial>;

    /// res(z(η)) for an admissible trial. Never calls the subsolver.
    fn residual(&mut self, trial: &Trial) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineSearchStatus {
    BetaOptimal,
    AcceptedInitial,
    EarlyExitEpsilon,
}

impl LineSearchStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            LineSearchStatus::BetaOptimal => "beta-optimal",
            LineSearchStatus::AcceptedInitial => "accepted-initial",
            LineSearchStatus::EarlyExitEpsilon => "early-exit",
        }
    }
}

#[derive(Debug, Clone)]
pub struct LineSearchOutcome {
    pub eta: f64,
    pub z_next: SubsolverResult,
    pub f_next: DVector<f64>,
    pub calls: usize,
    pub status: LineSearchStatus,
    /// Final (η_lo, η_up); η_up is the inadmissible witness when β-optimal.
    pub bracket: Option<(f64, f64)>,
    pub sigma: f64,
    /// Every tested stepsize with its verdict, in order.
    pub trials: Vec<(f64, bool)>,
}

/// Counts calls and keeps the trial log.
struct Recorder<'o, O: StepOracle + ?Sized> {
    oracle: &'o mut O,
    calls: usize,
    log: Vec<(f64, bool)>,
}

impl<O: StepOracle + ?Sized> Recorder<'_, O> {
    fn test(&mut self, log_eta: f64) -> Result<Trial> {
        let t = self.oracle.trial(log_eta)?;
        self.calls += 1;
        self.log.push((t.eta, t.admissible));
        Ok(t)
    }
}

/// A bracket whose log-width is `2^width_exp` units of log(1/β).
#[derive(Debug, Clone)]
pub struct Bracket {
    pub lo: Trial,
    pub log_up: f64,
    pub steps: usize,
}

/// Tests a single stepsize.
pub fn is_admissible<O: StepOracle + ?Sized>(oracle: &mut O, eta: f64) -> Result<Trial> {
    oracle.trial(eta.ln())
}

/// Stepsizes must stay finite and positive after exponentiation.
fn representable(log_eta: f64) -> bool {
    let eta = log_eta.exp();
    eta.is_finite() && eta > 0.0
}

fn backtrack_inner<O: StepOracle + ?Sized>(
    rec: &mut Recorder<'_, O>,
    log_sigma: f64,
    log_beta: f64,
) -> Result<Bracket> {
    let mut prev = log_sigma;
    for i in 1..=STEP_CAP {
        let log_eta = log_sigma + (2f64.powi(i as i32) - 1.0) * log_beta;
        if !representable(log_eta) {
            break;
        }
        let t = rec.test(log_eta)?;
        if t.admissible {
            return Ok(Bracket { lo: t, log_up: prev, steps: i });
        }
        prev = log_eta;
    }
    Err(Error::LineSearchCap { routine: "backtrack", cap: STEP_CAP, lo: prev.exp(), up: log_sigma.exp() })
}

/// Backtracking from an inadmissible σ: trials σβ^{2^i−1}, i = 1, 2, ….
/// Returns the first admissible trial and the last inadmissible stepsize.
pub fn backtrack<O: StepOracle + ?Sized>(oracle: &mut O, sigma: f64, beta: f64) -> Result<(Trial, f64, usize)> {
    let mut rec = Recorder { oracle, calls: 0, log: Vec::new() };
    let b = backtrack_inner(&mut rec, sigma.ln(), beta.ln())?;
    Ok((b.lo, b.log_up.exp(), rec.calls))
}

enum AdvanceEnd {
    Bracket(Bracket),
    Early(Trial),
}

fn advance_inner<O: StepOracle + ?Sized>(
    rec: &mut Recorder<'_, O>,
    first: Trial,
    log_beta: f64,
    epsilon: f64,
) -> Result<AdvanceEnd> {
    let log_sigma = first.log_eta;
    let mut lo = first;
    for i in 1..=STEP_CAP {
        if rec.oracle.residual(&lo)? <= epsilon {
            return Ok(AdvanceEnd::Early(lo));
        }
        let log_eta = log_sigma - (2f64.powi(i as i32) - 1.0) * log_beta;
        if !representable(log_eta) {
            break;
        }
        let t = rec.test(log_eta)?;
        if !t.admissible {
            return Ok(AdvanceEnd::Bracket(Bracket { lo, log_up: log_eta, steps: i }));
        }
        lo = t;
    }
    if rec.oracle.residual(&lo)? <= epsilon {
        return Ok(AdvanceEnd::Early(lo));
    }
    Err(Error::LineSearchCap { routine: "advance", cap: STEP_CAP, lo: lo.eta, up: f64::INFINITY })
}

/// `Ok((lo, up))` bracket or `Err(trial)` on the residual early exit.
pub type AdvanceResult = std::result::Result<(Trial, f64), Trial>;

/// Advancing from an admissible σ (given as its trial): trials σβ^{−(2^i−1)}.
/// Returns `Ok(Err(trial))` on the residual early exit, otherwise the bracket.
pub fn advance<O: StepOracle + ?Sized>(
    oracle: &mut O,
    first: Trial,
    beta: f64,
    epsilon: f64,
) -> Result<(AdvanceResult, usize)> {
    let mut rec = Recorder { oracle, calls: 0, log: Vec::new() };
    let end = advance_inner(&mut rec, first, beta.ln(), epsilon)?;
    let calls = rec.calls;
    Ok(match end {
        AdvanceEnd::Bracket(b) => (Ok((b.lo, b.log_up.exp())), calls),
        AdvanceEnd::Early(t) => (Err(t), calls),
    })
}

fn bisection_inner<O: StepOracle + ?Sized>(
    rec: &mut Recorder<'_, O>,
    mut lo: Trial,
    mut log_up: f64,
    log_inv_beta: f64,
) -> Result<(Trial, f64)> {
    for _ in 0..STEP_CAP {
        let units = (log_up - lo.log_eta) / log_inv_beta;
        if units <= 1.0 + RATIO_SLACK {
            return Ok((lo, log_up));
        }
        let mid = 0.5 * (lo.log_eta + log_up);
        let t = rec.test(mid)?;
        if t.admissible {
            lo = t;
        } else {
            log_up = mid;
        }
    }
    Err(Error::LineSearchCap { routine: "bisection", cap: STEP_CAP, lo: lo.eta, up: log_up.exp() })
}

/// Geometric bisection of an (admissible, inadmissible) bracket until
/// η_up/η_lo ≤ 1/β. Returns the β-optimal trial, η_up and the call count.
pub fn bisection<O: StepOracle + ?Sized>(
    oracle: &mut O,
    lo: Trial,
    eta_up: f64,
    beta: f64,
) -> Result<(Trial, f64, usize)> {
    if !(eta_up > lo.eta) {
        return Err(Error::InvalidParameter("bisection needs eta_lo < eta_up".into()));
    }
    let mut rec = Recorder { oracle, calls: 0, log: Vec::new() };
    let (t, up) = bisection_inner(&mut rec, lo, eta_up.ln(), -beta.ln())?;
    Ok((t, up.exp(), rec.calls))
}

fn accept(t: Trial) -> (SubsolverResult, DVector<f64>) {
    let z = t.result.expect("admissible trial carries a subsolver result");
    let f = t.f_z.expect("admissible trial carries F(z)");
    (z, f)
}

/// Full search: initial trial at σ, then backtrack + bisect, accept σ
/// (without advancing), or advance + bisect (with advancing).
pub fn line_search<O: StepOracle + ?Sized>(oracle: &mut O, cfg: &LineSearchConfig) -> Result<LineSearchOutcome> {
    cfg.validate()?;
    let log_sigma = cfg.sigma.ln();
    let log_beta = cfg.beta.ln();
    let mut rec = Recorder { oracle, calls: 0, log: Vec::new() };
    let first = rec.test(log_sigma)?;

    let (trial, status, bracket) = if !first.admissible {
        let b = backtrack_inner(&mut rec, log_sigma, log_beta)?;
        let (t, up) = bisection_inner(&mut rec, b.lo, b.log_up, -log_beta)?;
        let eta = t.eta;
        (t, LineSearchStatus::BetaOptimal, Some((eta, up.exp())))
    } else if !cfg.with_advancing {
        (first, LineSearchStatus::AcceptedInitial, None)
    } else {
        match advance_inner(&mut rec, first, log_beta, cfg.epsilon)? {
            AdvanceEnd::Early(t) => (t, LineSearchStatus::EarlyExitEpsilon, None),
            AdvanceEnd::Bracket(b) => {
                let (t, up) = bisection_inner(&mut rec, b.lo, b.log_up, -log_beta)?;
                let eta = t.eta;
                (t, LineSearchStatus::BetaOptimal, Some((eta, up.exp())))
            }
        }
    };
    let eta = trial.eta;
    let (z_next, f_next) = accept(trial);
    Ok(LineSearchOutcome { eta, z_next, f_next, calls: rec.calls, status, bracket, sigma: cfg.sigma, trials: rec.log })
}

/// Call bounds 2·log₂ log_{1/β}(σ²/(β²η²)) without advancing and
/// 2·log₂ log_{1/β}(max{σ²/η², η²/σ²}/β²) with advancing.
pub fn call_bound(sigma: f64, eta: f64, beta: f64, with_advancing: bool) -> f64 {
    let l = (sigma / eta).ln();
    let ratio_log = if with_advancing { 2.0 * l.abs() } else { 2.0 * l };
    let arg = (ratio_log - 2.0 * beta.ln()) / (-beta.ln());
    2.0 * arg.log2()
}

/// Admissibility oracle backed by the optimistic subsolver.
pub struct SubsolverOracle<'a> {
    pub prob: &'a SaddleProblem,
    pub map: &'a dyn MirrorMap,
    pub predictor: &'a Predictor,
    pub v_minus: &'a DVector<f64>,
    pub z_minus: &'a DVector<f64>,
    pub alpha: f64,
    pub inner: InnerConfig,
    /// Subsolver invocations so far.
    pub calls: usize,
    /// Inner iterations summed over invocations.
    pub inner_iterations: usize,
    /// Largest inclusion residual reported by the subsolver.
    pub max_inclusion_residual: f64,
    /// Largest inclusion residual over its tolerance, for iterative solves.
    pub max_tolerance_ratio: f64,
}

impl<'a> SubsolverOracle<'a> {
    pub fn new(
        prob: &'a SaddleProblem,
        map: &'a dyn MirrorMap,
        predictor: &'a Predictor,
        v_minus: &'a DVector<f64>,
        z_minus: &'a DVector<f64>,
        alpha: f64,
        inner: InnerConfig,
    ) -> Self {
        Self {
            prob,
            map,
            predictor,
            v_minus,
            z_minus,
            alpha,
            inner,
            calls: 0,
            inner_iterations: 0,
            max_inclusion_residual: 0.0,
            max_tolerance_ratio: 0.0,
        }
    }
}

impl StepOracle for SubsolverOracle<'_> {
    fn trial(&mut self, log_eta: f64) -> Result<Trial> {
        let eta = log_eta.exp();
        self.calls += 1;
        let req = SubsolverRequest {
            eta,
            predictor: self.predictor,
            v_minus: self.v_minus,
            z_minus: self.z_minus,
            map: self.map,
            prob: self.prob,
        };
        let res = match solve_subproblem(&req, self.inner) {
            Ok(r) => r,
            Err(Error::IllConditioned { .. }) | Err(Error::Singular) => {
                return Ok(Trial {
                    eta,
                    log_eta,
                    admissible: false,
                    lhs: f64::INFINITY,
                    rhs: 0.0,
                    result: None,
                    f_z: None,
                })
            }
            Err(e) => return Err(e),
        };
        self.inner_iterations += res.inner_iterations;
        self.max_inclusion_residual = self.max_inclusion_residual.max(res.inclusion_residual);
        if res.tolerance > 0.0 {
            self.max_tolerance_ratio = self.max_tolerance_ratio.max(res.inclusion_residual / res.tolerance);
        }
        let f_z = eval_f(self.prob, &res.z)?;
        let p_z = self.predictor.eval(self.prob, self.map, &res.z)?;
        let lhs = eta * self.map.dual_norm(&(&f_z - p_z));
        let rhs = 0.5 * self.alpha * self.map.norm(&(&res.z - self.z_minus));
        Ok(Trial { eta, log_eta, admissible: lhs <= rhs, lhs, rhs, result: Some(res), f_z: Some(f_z) })
    }

    fn residual(&mut self, trial: &Trial) -> Result<f64> {
        match (&trial.result, &trial.f_z) {
            (Some(r), Some(f)) => Ok(residual_with(self.prob, &r.z, f)),
            _ => Err(Error::InvalidParameter("residual requested for a rejected trial".into())),
        }
    }
}
