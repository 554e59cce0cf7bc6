//! Optimistic subsolvers: given (η, v⁻, z⁻) and a predictor P, return z with
//! 0 ∈ ηP(z) + v⁻ + ηH(z) + ∇Φ(z) − ∇Φ(z⁻).
//!
//! Three paths exist: a closed-form proximal step for constant predictors, a
//! dense linear solve for affine Taylor predictors, and an iterative solve for
//! regularized Taylor predictors.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{Euclidean, MirrorMap};
use crate::linalg;
use crate::linesearch::LineSearchConfig;
use crate::problems::{coordinate_residual, eval_f, residual, taylor_regularizer, Composite, Feasible, SaddleProblem};
use crate::solvers::{run_first_order_ls, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PredictorKind {
    /// P(z) = F(z_k).
    Constant,
    /// P(z) = F(z_k) + DF(z_k)(z − z_k).
    AffineTaylor,
    /// (p−1)-th Taylor model plus the regularizer with weight λ.
    RegularizedTaylor { order: usize, lambda: f64 },
}

/// The approximation P(·; I_k) expanded at `base`, with cached oracle values.
#[derive(Debug, Clone)]
pub struct Predictor {
    pub kind: PredictorKind,
    pub base: DVector<f64>,
    pub f_base: DVector<f64>,
    pub jac_base: Option<DMatrix<f64>>,
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

impl Predictor {
    pub fn build(prob: &SaddleProblem, kind: PredictorKind, base: &DVector<f64>) -> Result<Self> {
        let f_base = eval_f(prob, base)?;
        Self::with_value(prob, kind, base, f_base)
    }

    /// Predictor from an already evaluated F(base).
    pub fn with_value(
        prob: &SaddleProblem,
        kind: PredictorKind,
        base: &DVector<f64>,
        f_base: DVector<f64>,
    ) -> Result<Self> {
        check_dim(prob.dim(), f_base.len())?;
        let mut p = Self::build_without_f(prob, kind, base)?;
        p.f_base = f_base;
        Ok(p)
    }

    fn build_without_f(prob: &SaddleProblem, kind: PredictorKind, base: &DVector<f64>) -> Result<Self> {
        check_dim(prob.dim(), base.len())?;
        let jac_base = match kind {
            PredictorKind::Constant => None,
            PredictorKind::AffineTaylor => Some(prob.jacobian(base)?),
            PredictorKind::RegularizedTaylor { order, lambda } => {
                if order < 2 || !(lambda >= 0.0) {
                    return Err(Error::InvalidParameter("regularized Taylor needs order >= 2 and lambda >= 0".into()));
                }
                if prob.max_derivative_order() < order - 1 {
                    return Err(Error::MissingOracle { order: order - 1 });
                }
                prob.jac_oracle.as_ref().map(|j| j(base))
            }
        };
        Ok(Self { kind, base: base.clone(), f_base: DVector::zeros(base.len()), jac_base })
    }

    fn first_order_term(&self, prob: &SaddleProblem, h: &DVector<f64>) -> Result<DVector<f64>> {
        match &self.jac_base {
            Some(j) => Ok(j * h),
            None => prob.directional(1, &self.base, h),
        }
    }

    pub fn eval(&self, prob: &SaddleProblem, map: &dyn MirrorMap, z: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(prob.dim(), z.len())?;
        match self.kind {
            PredictorKind::Constant => Ok(self.f_base.clone()),
            PredictorKind::AffineTaylor => {
                let h = z - &self.base;
                Ok(&self.f_base + self.first_order_term(prob, &h)?)
            }
            PredictorKind::RegularizedTaylor { order, lambda } => {
                let h = z - &self.base;
                let mut t = &self.f_base + self.first_order_term(prob, &h)?;
                for i in 2..order {
                    t += prob.directional(i, &self.base, &h)? / factorial(i);
                }
                Ok(t + taylor_regularizer(map, order, lambda, z, &self.base))
            }
        }
    }

    /// Jacobian of z ↦ P(z) in the Euclidean setup.
    ///
    /// Higher-order terms are differentiated with a seven-point stencil, which
    /// is exact (up to rounding) for the polynomial t ↦ D^iF[h + t e]^i, i ≤ 6.
    pub fn jacobian(&self, prob: &SaddleProblem, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        let d = prob.dim();
        check_dim(d, z.len())?;
        let jac1 = match &self.jac_base {
            Some(j) => j.clone(),
            None => {
                let mut j = DMatrix::zeros(d, d);
                for c in 0..d {
                    let e = DVector::from_fn(d, |r, _| if r == c { 1.0 } else { 0.0 });
                    j.set_column(c, &prob.directional(1, &self.base, &e)?);
                }
                j
            }
        };
        let (order, lambda) = match self.kind {
            PredictorKind::Constant => return Ok(DMatrix::zeros(d, d)),
            PredictorKind::AffineTaylor => return Ok(jac1),
            PredictorKind::RegularizedTaylor { order, lambda } => (order, lambda),
        };
        if order > 7 {
            return Err(Error::Unsupported(format!("exact predictor Jacobian only up to order 7, got {order}")));
        }
        let mut jac = jac1;
        let h = z - &self.base;
        for i in 2..order {
            let scale = 1.0 / factorial(i);
            for c in 0..d {
                let g = |t: f64| -> Result<DVector<f64>> {
                    let mut hh = h.clone();
                    hh[c] += t;
                    prob.directional(i, &self.base, &hh)
                };
                let col = ((g(1.0)? - g(-1.0)?) * 45.0 - (g(2.0)? - g(-2.0)?) * 9.0 + (g(3.0)? - g(-3.0)?)) / 60.0;
                let mut target = jac.column_mut(c);
                target += col * scale;
            }
        }
        let hn = h.norm();
        if lambda > 0.0 && hn > 0.0 {
            let c = lambda / factorial(order - 1);
            let p1 = (order - 1) as f64;
            let reg = DMatrix::identity(d, d) * (c * hn.powf(p1)) + &h * h.transpose() * (c * p1 * hn.powf(p1 - 2.0));
            jac += reg;
        }
        Ok(jac)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SubsolverRequest<'a> {
    pub eta: f64,
    pub predictor: &'a Predictor,
    pub v_minus: &'a DVector<f64>,
    pub z_minus: &'a DVector<f64>,
    pub map: &'a dyn MirrorMap,
    pub prob: &'a SaddleProblem,
}

impl SubsolverRequest<'_> {
    fn validate(&self) -> Result<()> {
        let d = self.prob.dim();
        check_dim(d, self.z_minus.len())?;
        check_dim(d, self.v_minus.len())?;
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::InvalidParameter(format!("stepsize must be positive and finite, got {}", self.eta)));
        }
        if self.v_minus.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("correction vector".into()));
        }
        Ok(())
    }

    fn require_euclidean(&self) -> Result<()> {
        if self.map.is_euclidean() {
            Ok(())
        } else {
            Err(Error::Unsupported("subsolvers need the Euclidean mirror map".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsolverResult {
    pub z: DVector<f64>,
    pub inner_iterations: usize,
    pub inclusion_residual: f64,
    /// Tolerance the inner solve was held to; zero for the direct paths.
    pub tolerance: f64,
}

/// Inner-solve settings for the regularized Taylor path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerConfig {
    pub tol: f64,
    pub cap: usize,
    pub method: InnerMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerMethod {
    /// Damped Newton with the first-order optimistic method as fallback.
    Newton,
    /// First-order optimistic method with line search only.
    FirstOrder,
}

impl InnerConfig {
    /// Tolerance min(1e−10, 1e−3·ε_outer).
    pub fn coupled(outer_eps: f64) -> Self {
        Self { tol: (1e-3 * outer_eps).min(1e-10), cap: 20_000, method: InnerMethod::Newton }
    }
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self { tol: 1e-10, cap: 20_000, method: InnerMethod::Newton }
    }
}

/// T_{t,R}: soft-threshold by t, then clip to [−R, R].
pub fn prox_l1_box(z: f64, t: f64, r: f64) -> f64 {
    let a = z.abs();
    if a <= t {
        0.0
    } else if a <= t + r {
        (a - t) * z.signum()
    } else {
        r * z.signum()
    }
}

fn prox_params(prob: &SaddleProblem, eta: f64) -> (f64, f64) {
    let t = match prob.composite {
        Composite::None => 0.0,
        Composite::L1 { weight } => eta * weight,
    };
    let r = match prob.feasible {
        Feasible::Whole => f64::INFINITY,
        Feasible::Box { radius } => radius,
    };
    (t, r)
}

/// argmin_w ⟨g, w⟩ + ηh(w) + ½‖w − z⁻‖² over the feasible set.
pub fn prox_step(prob: &SaddleProblem, z_minus: &DVector<f64>, g: &DVector<f64>, eta: f64) -> DVector<f64> {
    let u = z_minus - g;
    if prob.is_smooth_unconstrained() {
        return u;
    }
    let (t, r) = prox_params(prob, eta);
    u.map(|ui| prox_l1_box(ui, t, r))
}

/// Residual of 0 ∈ g + ηH(z) + z − z⁻, coordinate by coordinate.
fn prox_inclusion_residual(
    prob: &SaddleProblem,
    z: &DVector<f64>,
    z_minus: &DVector<f64>,
    g: &DVector<f64>,
    eta: f64,
) -> f64 {
    let s = g + z - z_minus;
    if prob.is_smooth_unconstrained() {
        return s.norm();
    }
    let (t, r) = prox_params(prob, eta);
    z.iter().zip(s.iter()).map(|(&zi, &si)| coordinate_residual(si, zi, t, r).powi(2)).sum::<f64>().sqrt()
}

/// Closed-form step for the constant predictor.
pub fn solve_first_order(req: &SubsolverRequest<'_>) -> Result<SubsolverResult> {
    req.validate()?;
    req.require_euclidean()?;
    if req.predictor.kind != PredictorKind::Constant {
        return Err(Error::Unsupported("closed-form step needs a constant predictor".into()));
    }
    let g = &req.predictor.f_base * req.eta + req.v_minus;
    let z = prox_step(req.prob, req.z_minus, &g, req.eta);
    let inclusion_residual = prox_inclusion_residual(req.prob, &z, req.z_minus, &g, req.eta);
    Ok(SubsolverResult { z, inner_iterations: 0, inclusion_residual, tolerance: 0.0 })
}

/// Solves (I + ηDF(z⁻))(z − z⁻) = −(ηF(z⁻) + v⁻).
pub fn solve_affine_inclusion(req: &SubsolverRequest<'_>) -> Result<SubsolverResult> {
    req.validate()?;
    req.require_euclidean()?;
    if req.predictor.kind != PredictorKind::AffineTaylor {
        return Err(Error::Unsupported("linear solve needs an affine Taylor predictor".into()));
    }
    if !req.prob.is_smooth_unconstrained() {
        return Err(Error::Unsupported("linear solve path is for smooth unconstrained problems".into()));
    }
    let jac = req.predictor.jac_base.as_ref().ok_or(Error::MissingOracle { order: 1 })?;
    let d = req.prob.dim();
    let system = DMatrix::identity(d, d) + jac * req.eta;
    let rhs = -(&req.predictor.f_base * req.eta + req.v_minus);
    let step = linalg::solve(&system, &rhs)?;
    let inclusion_residual = (&system * &step - &rhs).norm();
    Ok(SubsolverResult { z: req.z_minus + step, inner_iterations: 0, inclusion_residual, tolerance: 0.0 })
}

/// A(w) = ηP(w) + v⁻ + w − z⁻ in the Euclidean setup.
fn reduced_operator(req: &SubsolverRequest<'_>, w: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(req.predictor.eval(req.prob, req.map, w)? * req.eta + req.v_minus + w - req.z_minus)
}

/// Rounding floor of A(w) = ηP(w) + v⁻ + w − z⁻. Neighbouring floating-point
/// points differ by about ε‖w‖∞, which moves A by up to ‖I + ηDP(w)‖∞ times
/// that; the summands themselves carry a few ulps each.
fn rounding_floor(req: &SubsolverRequest<'_>, w: &DVector<f64>) -> Result<f64> {
    let p = req.predictor.eval(req.prob, req.map, w)?;
    let jac = req.predictor.jacobian(req.prob, w)?;
    let row_sum = jac.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0f64, f64::max);
    let lipschitz = 1.0 + req.eta * row_sum;
    let d = (w.len() as f64).sqrt();
    let spacing = lipschitz * w.amax().max(req.z_minus.amax()) * d;
    let summands = req.eta * p.norm() + req.v_minus.norm() + w.norm() + req.z_minus.norm();
    Ok(ROUNDING_ULPS * f64::EPSILON * (spacing + summands))
}

/// Multiple of machine epsilon used by the inner rounding floor.
pub const ROUNDING_ULPS: f64 = 8.0;

/// Iterative solve of the regularized Taylor inclusion to `inner.tol`, or to
/// the rounding floor of the reduced operator when that is larger.
pub fn solve_regularized_taylor_inclusion(req: &SubsolverRequest<'_>, inner: InnerConfig) -> Result<SubsolverResult> {
    req.validate()?;
    req.require_euclidean()?;
    if !matches!(req.predictor.kind, PredictorKind::RegularizedTaylor { .. }) {
        return Err(Error::Unsupported("iterative path needs a regularized Taylor predictor".into()));
    }
    let start = req.z_minus.clone();
    let mut used = 0;
    let mut w = start;
    if inner.method == InnerMethod::Newton && req.prob.is_smooth_unconstrained() {
        let (wn, its, res) = newton_inner(req, w.clone(), inner)?;
        used = its;
        let tol = inner.tol.max(rounding_floor(req, &wn)?);
        if res <= tol {
            return Ok(SubsolverResult { z: wn, inner_iterations: used, inclusion_residual: res, tolerance: tol });
        }
        w = wn;
    }
    let remaining = inner.cap.saturating_sub(used);
    let floor = rounding_floor(req, &w)?;
    let (z, its, res) = first_order_inner(req, w, inner.tol.max(floor), remaining)?;
    used += its;
    let tol = inner.tol.max(rounding_floor(req, &z)?);
    if res <= tol {
        Ok(SubsolverResult { z, inner_iterations: used, inclusion_residual: res, tolerance: tol })
    } else {
        Err(Error::InnerCap { cap: inner.cap, eta: req.eta, residual: res })
    }
}

fn newton_inner(
    req: &SubsolverRequest<'_>,
    mut w: DVector<f64>,
    inner: InnerConfig,
) -> Result<(DVector<f64>, usize, f64)> {
    let d = req.prob.dim();
    let mut a = reduced_operator(req, &w)?;
    let mut res = a.norm();
    let mut its = 0;
    while res > inner.tol.max(rounding_floor(req, &w)?) && its < inner.cap {
        its += 1;
        let jac = DMatrix::identity(d, d) + req.predictor.jacobian(req.prob, &w)? * req.eta;
        let step = match linalg::solve(&jac, &(-&a)) {
            Ok(s) => s,
            Err(_) => break,
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = &w + &step * t;
            let ac = reduced_operator(req, &cand)?;
            let rc = ac.norm();
            if rc <= (1.0 - 1e-4 * t) * res {
                w = cand;
                a = ac;
                res = rc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok((w, its, res))
}

/// First-order optimistic method with line search on the reduced operator,
/// which is 1-strongly monotone.
fn first_order_inner(
    req: &SubsolverRequest<'_>,
    w0: DVector<f64>,
    tol: f64,
    cap: usize,
) -> Result<(DVector<f64>, usize, f64)> {
    let d = req.prob.dim();
    let pred = req.predictor.clone();
    let prob = req.prob.clone();
    let (eta, v, zm) = (req.eta, req.v_minus.clone(), req.z_minus.clone());
    let op: crate::problems::OperatorFn = Arc::new(move |w: &DVector<f64>| {
        let p = pred.eval(&prob, &Euclidean, w).unwrap_or_else(|_| DVector::from_element(d, f64::NAN));
        p * eta + &v + w - &zm
    });
    let composite = match req.prob.composite {
        Composite::None => Composite::None,
        Composite::L1 { weight } => Composite::L1 { weight: weight * req.eta },
    };
    let reduced = SaddleProblem::new(d, 0, op).with_composite(composite).with_feasible(req.prob.feasible).with_mu(1.0);
    let start_res = residual(&reduced, &w0)?;
    if start_res <= tol || cap == 0 {
        return Ok((w0, 0, start_res));
    }
    let ls = LineSearchConfig { alpha: 1.0, beta: 0.5, sigma: 1.0, epsilon: tol, with_advancing: false };
    let cfg = SolverConfig::first_order_ls(ls, cap, tol).with_mu(1.0);
    let cfg = cfg.with_start(w0).without_iterates();
    let traj = run_first_order_ls(&reduced, &Euclidean, &cfg)?;
    let z = traj.last_point().clone();
    let res = residual(&reduced, &z)?;
    Ok((z, traj.records.len(), res))
}

/// Dispatches on the predictor kind.
pub fn solve_subproblem(req: &SubsolverRequest<'_>, inner: InnerConfig) -> Result<SubsolverResult> {
    match req.predictor.kind {
        PredictorKind::Constant => solve_first_order(req),
        PredictorKind::AffineTaylor => solve_affine_inclusion(req),
        PredictorKind::RegularizedTaylor { .. } => solve_regularized_taylor_inclusion(req, inner),
    }
}
