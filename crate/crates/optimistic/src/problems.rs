//! Saddle problems, derivative oracles, Taylor models, the seeded test
//! problems and their optimality metrics.
//!
//! Points are handled as concatenated vectors `z = (x, y)` of length `m + n`;
//! [`PrimalDualPoint`] converts between the two views.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::geometry::{Euclidean, MirrorMap};
use crate::linalg;

pub type OperatorFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;
/// `(i, z, h) ↦ D^i F(z)[h]^i`.
pub type DirectionalFn = Arc<dyn Fn(usize, &DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>;

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualPoint {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
}

impl PrimalDualPoint {
    pub fn new(x: DVector<f64>, y: DVector<f64>) -> Self {
        Self { x, y }
    }

    pub fn zeros(m: usize, n: usize) -> Self {
        Self::new(DVector::zeros(m), DVector::zeros(n))
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.x.len(), self.y.len())
    }

    pub fn split(z: &DVector<f64>, m: usize) -> Result<Self> {
        if z.len() < m {
            return Err(Error::DimensionMismatch { expected: m, got: z.len() });
        }
        Ok(Self::new(z.rows(0, m).into_owned(), z.rows(m, z.len() - m).into_owned()))
    }

    pub fn concat(&self) -> DVector<f64> {
        let (m, n) = self.dims();
        let mut z = DVector::zeros(m + n);
        z.rows_mut(0, m).copy_from(&self.x);
        z.rows_mut(m, n).copy_from(&self.y);
        z
    }
}

/// Nonsmooth part h(z) = h1(x) + h2(y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Composite {
    None,
    /// λ‖x‖₁ + λ‖y‖₁.
    L1 {
        weight: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Feasible {
    Whole,
    /// ‖x‖∞ ≤ R and ‖y‖∞ ≤ R.
    Box {
        radius: f64,
    },
}

/// Known smoothness constants. `lp` is `(p, L_p)` for an order above two.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Lipschitz {
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub lp: Option<(usize, f64)>,
}

impl Lipschitz {
    /// Constant of order `p` (Lipschitz constant of the (p−1)-th derivative of F).
    pub fn order(&self, p: usize) -> Option<f64> {
        match p {
            1 => self.l1,
            2 => self.l2,
            _ => self.lp.filter(|(q, _)| *q == p).map(|(_, l)| l),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemSpec {
    /// Bilinear ℓ1-regularized problem on a box, A ∈ R^{n×m}.
    Prob1 { m: usize, n: usize, lambda: f64, mu: f64, radius: f64 },
    /// (L2/6)‖x‖³ + ⟨Ax − b, y⟩ with the upper bidiagonal A.
    Prob2 { n: usize, l2: f64 },
    /// Strongly-convex-strongly-concave problem with cubic chain coupling.
    Prob2Sc { m: usize, n: usize, l2: f64, c: f64, mu: f64 },
    /// (c3/24)‖x‖⁴ + ⟨Ax − b, y⟩ + (μ/2)‖x‖² − (μ/2)‖y‖².
    ProbP3 { m: usize, n: usize, c3: f64, mu: f64 },
}

impl ProblemSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::Prob1 { .. } => "prob1",
            ProblemSpec::Prob2 { .. } => "prob2",
            ProblemSpec::Prob2Sc { .. } => "prob2_sc",
            ProblemSpec::ProbP3 { .. } => "prob_p3",
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        match *self {
            ProblemSpec::Prob1 { m, n, .. } => (m, n),
            ProblemSpec::Prob2 { n, .. } => (n, n),
            ProblemSpec::Prob2Sc { m, n, .. } => (m, n),
            ProblemSpec::ProbP3 { m, n, .. } => (m, n),
        }
    }

    pub fn mu(&self) -> f64 {
        match *self {
            ProblemSpec::Prob1 { mu, .. } => mu,
            ProblemSpec::Prob2 { .. } => 0.0,
            ProblemSpec::Prob2Sc { mu, .. } => mu,
            ProblemSpec::ProbP3 { mu, .. } => mu,
        }
    }

    /// Desk-scale default instance for a problem name.
    pub fn desk(name: &str) -> Option<Self> {
        Some(match name {
            "prob1" => ProblemSpec::Prob1 { m: 60, n: 30, lambda: 0.1, mu: 0.0, radius: 0.05 },
            "prob2" => ProblemSpec::Prob2 { n: 50, l2: 10.0 },
            "prob2_sc" => ProblemSpec::Prob2Sc { m: 40, n: 20, l2: 1e4, c: 100.0, mu: 1.0 },
            "prob_p3" => ProblemSpec::ProbP3 { m: 20, n: 10, c3: 10.0, mu: 1.0 },
            _ => return None,
        })
    }

    /// Full-size instance used in the published figures.
    pub fn paper_scale(name: &str) -> Option<Self> {
        Some(match name {
            "prob1" => ProblemSpec::Prob1 { m: 600, n: 300, lambda: 0.1, mu: 0.0, radius: 0.05 },
            "prob2" => ProblemSpec::Prob2 { n: 200, l2: 10.0 },
            "prob2_sc" => ProblemSpec::Prob2Sc { m: 400, n: 200, l2: 1e4, c: 100.0, mu: 1.0 },
            "prob_p3" => ProblemSpec::ProbP3 { m: 100, n: 50, c3: 10.0, mu: 1.0 },
            _ => return None,
        })
    }

    fn validate(&self) -> Result<()> {
        let (m, n) = self.dims();
        if m == 0 || n == 0 {
            return Err(Error::InvalidParameter(format!("{}: empty dimension ({m}, {n})", self.name())));
        }
        if !(self.mu() >= 0.0) {
            return Err(Error::InvalidParameter(format!("{}: mu must be nonnegative", self.name())));
        }
        match *self {
            ProblemSpec::Prob1 { lambda, radius, .. } => {
                if !(lambda >= 0.0) || !(radius > 0.0) {
                    return Err(Error::InvalidParameter("prob1: need lambda >= 0 and radius > 0".into()));
                }
            }
            ProblemSpec::Prob2 { l2, .. } => {
                if !(l2 > 0.0) {
                    return Err(Error::InvalidParameter("prob2: need l2 > 0".into()));
                }
            }
            ProblemSpec::Prob2Sc { m, l2, mu, .. } => {
                if !(l2 > 0.0) || !(mu > 0.0) || m < 2 {
                    return Err(Error::InvalidParameter("prob2_sc: need l2 > 0, mu > 0, m >= 2".into()));
                }
            }
            ProblemSpec::ProbP3 { c3, .. } => {
                if !(c3 >= 0.0) {
                    return Err(Error::InvalidParameter("prob_p3: need c3 >= 0".into()));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ProblemSpec::Prob1 { m, n, lambda, mu, radius } => {
                write!(f, "prob1(m={m}, n={n}, lambda={lambda}, mu={mu}, radius={radius})")
            }
            ProblemSpec::Prob2 { n, l2 } => write!(f, "prob2(n={n}, l2={l2})"),
            ProblemSpec::Prob2Sc { m, n, l2, c, mu } => {
                write!(f, "prob2_sc(m={m}, n={n}, l2={l2}, c={c}, mu={mu})")
            }
            ProblemSpec::ProbP3 { m, n, c3, mu } => write!(f, "prob_p3(m={m}, n={n}, c3={c3}, mu={mu})"),
        }
    }
}

/// Random data behind a generated test problem.
#[derive(Debug, Clone, PartialEq)]
pub struct TestData {
    pub spec: ProblemSpec,
    pub seed: u64,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

#[derive(Clone)]
pub struct SaddleProblem {
    pub m: usize,
    pub n: usize,
    pub f_oracle: OperatorFn,
    pub jac_oracle: Option<JacobianFn>,
    /// Highest supported order and the directional-derivative closure.
    pub high_oracle: Option<(usize, DirectionalFn)>,
    pub composite: Composite,
    pub feasible: Feasible,
    pub mu: f64,
    pub lipschitz: Lipschitz,
    pub data: Option<TestData>,
}

impl fmt::Debug for SaddleProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SaddleProblem")
            .field("m", &self.m)
            .field("n", &self.n)
            .field("jacobian", &self.jac_oracle.is_some())
            .field("high_order", &self.high_oracle.as_ref().map(|(p, _)| *p))
            .field("composite", &self.composite)
            .field("feasible", &self.feasible)
            .field("mu", &self.mu)
            .field("lipschitz", &self.lipschitz)
            .field("spec", &self.data.as_ref().map(|d| d.spec))
            .finish()
    }
}

impl SaddleProblem {
    pub fn new(m: usize, n: usize, f_oracle: OperatorFn) -> Self {
        Self {
            m,
            n,
            f_oracle,
            jac_oracle: None,
            high_oracle: None,
            composite: Composite::None,
            feasible: Feasible::Whole,
            mu: 0.0,
            lipschitz: Lipschitz::default(),
            data: None,
        }
    }

    pub fn with_jacobian(mut self, jac: JacobianFn) -> Self {
        self.jac_oracle = Some(jac);
        self
    }

    pub fn with_directional(mut self, max_order: usize, d: DirectionalFn) -> Self {
        self.high_oracle = Some((max_order, d));
        self
    }

    /// Central-difference Jacobian built from the operator oracle.
    pub fn with_fd_jacobian(mut self) -> Self {
        let f = self.f_oracle.clone();
        self.jac_oracle = Some(Arc::new(move |z: &DVector<f64>| fd_jacobian(&*f, z)));
        self
    }

    pub fn with_composite(mut self, composite: Composite) -> Self {
        self.composite = composite;
        self
    }

    pub fn with_feasible(mut self, feasible: Feasible) -> Self {
        self.feasible = feasible;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_lipschitz(mut self, lipschitz: Lipschitz) -> Self {
        self.lipschitz = lipschitz;
        self
    }

    pub fn dim(&self) -> usize {
        self.m + self.n
    }

    pub fn is_smooth_unconstrained(&self) -> bool {
        self.composite == Composite::None && self.feasible == Feasible::Whole
    }

    pub fn spec(&self) -> Option<ProblemSpec> {
        self.data.as_ref().map(|d| d.spec)
    }

    pub fn jacobian(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), z.len())?;
        match &self.jac_oracle {
            Some(j) => Ok(j(z)),
            None => Err(Error::MissingOracle { order: 1 }),
        }
    }

    /// D^i F(z)[h]^i for i ≥ 1.
    pub fn directional(&self, order: usize, z: &DVector<f64>, h: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), z.len())?;
        check_dim(self.dim(), h.len())?;
        if order == 0 {
            return eval_f(self, z);
        }
        if let Some((max, d)) = &self.high_oracle {
            if order <= *max {
                return Ok(d(order, z, h));
            }
        }
        if order == 1 {
            if let Some(j) = &self.jac_oracle {
                return Ok(j(z) * h);
            }
        }
        Err(Error::MissingOracle { order })
    }

    pub fn max_derivative_order(&self) -> usize {
        let high = self.high_oracle.as_ref().map_or(0, |(p, _)| *p);
        let jac = usize::from(self.jac_oracle.is_some());
        high.max(jac)
    }
}

fn fd_jacobian(f: &(dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync), z: &DVector<f64>) -> DMatrix<f64> {
    let d = z.len();
    let mut jac = DMatrix::zeros(d, d);
    let mut zp = z.clone();
    for j in 0..d {
        let h = 1e-6 * z[j].abs().max(1.0);
        zp[j] = z[j] + h;
        let fp = f(&zp);
        zp[j] = z[j] - h;
        let fm = f(&zp);
        zp[j] = z[j];
        jac.set_column(j, &((fp - fm) / (2.0 * h)));
    }
    jac
}

/// Central-difference Jacobian of the problem's operator.
pub fn finite_difference_jacobian(prob: &SaddleProblem, z: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_dim(prob.dim(), z.len())?;
    Ok(fd_jacobian(&*prob.f_oracle, z))
}

/// F(z) = (∇x f, −∇y f).
pub fn eval_f(prob: &SaddleProblem, z: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim(prob.dim(), z.len())?;
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::OutsideDomain("non-finite coordinate".into()));
    }
    Ok((prob.f_oracle)(z))
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// T^{(q)}(z_eval; z_base) = F(z_base) + Σ_{i≤q} D^i F(z_base)[z_eval − z_base]^i / i!.
pub fn eval_taylor(
    prob: &SaddleProblem,
    order: usize,
    z_eval: &DVector<f64>,
    z_base: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_dim(prob.dim(), z_eval.len())?;
    let mut t = eval_f(prob, z_base)?;
    if order == 0 {
        return Ok(t);
    }
    let h = z_eval - z_base;
    for i in 1..=order {
        t += prob.directional(i, z_base, &h)? / factorial(i);
    }
    Ok(t)
}

/// Regularization term (λ/(p−1)!)(2D(z_eval, z_base))^{(p−1)/2}(∇Φ(z_eval) − ∇Φ(z_base)).
pub fn taylor_regularizer(
    map: &dyn MirrorMap,
    p: usize,
    lambda: f64,
    z_eval: &DVector<f64>,
    z_base: &DVector<f64>,
) -> DVector<f64> {
    if lambda == 0.0 {
        return DVector::zeros(z_eval.len());
    }
    let two_d = 2.0 * map.distance(z_eval, z_base);
    let scale = lambda / factorial(p - 1) * two_d.powf((p as f64 - 1.0) / 2.0);
    (map.grad_phi(z_eval) - map.grad_phi(z_base)) * scale
}

/// T^{(p−1)}_λ(z_eval; z_base): the (p−1)-th Taylor model plus the Bregman-power regularizer.
pub fn eval_regularized_taylor(
    prob: &SaddleProblem,
    map: &dyn MirrorMap,
    p: usize,
    lambda: f64,
    z_eval: &DVector<f64>,
    z_base: &DVector<f64>,
) -> Result<DVector<f64>> {
    if p < 2 {
        return Err(Error::InvalidParameter(format!("regularized Taylor model needs p >= 2, got {p}")));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter("regularization must be nonnegative".into()));
    }
    let t = eval_taylor(prob, p - 1, z_eval, z_base)?;
    Ok(t + taylor_regularizer(map, p, lambda, z_eval, z_base))
}

/// min_{w ∈ [lo_w, hi_w]} |g + w| where the interval may be unbounded.
fn interval_distance(g: f64, lo_w: f64, hi_w: f64) -> f64 {
    let w = (-g).clamp(lo_w, hi_w);
    (g + w).abs()
}

/// Smallest |g + w| over w ∈ λ∂|·|(zi) + N_[−R,R](zi) for one coordinate.
pub(crate) fn coordinate_residual(g: f64, zi: f64, lambda: f64, radius: f64) -> f64 {
    let (mut lo, mut hi) = if zi > 0.0 {
        (lambda, lambda)
    } else if zi < 0.0 {
        (-lambda, -lambda)
    } else {
        (-lambda, lambda)
    };
    if radius.is_finite() {
        if zi >= radius {
            hi = f64::INFINITY;
        }
        if zi <= -radius {
            lo = f64::NEG_INFINITY;
        }
    }
    interval_distance(g, lo, hi)
}

fn structure(prob: &SaddleProblem) -> (f64, f64) {
    let lambda = match prob.composite {
        Composite::None => 0.0,
        Composite::L1 { weight } => weight,
    };
    let radius = match prob.feasible {
        Feasible::Whole => f64::INFINITY,
        Feasible::Box { radius } => radius,
    };
    (lambda, radius)
}

/// res(z) = min_{w ∈ H(z)} ‖F(z) + w‖, exact for the separable ℓ1 + box structure.
pub fn residual(prob: &SaddleProblem, z: &DVector<f64>) -> Result<f64> {
    let f = eval_f(prob, z)?;
    Ok(residual_with(prob, z, &f))
}

/// Residual given a precomputed F(z).
pub fn residual_with(prob: &SaddleProblem, z: &DVector<f64>, f: &DVector<f64>) -> f64 {
    if prob.is_smooth_unconstrained() {
        return f.norm();
    }
    let (lambda, radius) = structure(prob);
    z.iter().zip(f.iter()).map(|(&zi, &gi)| coordinate_residual(gi, zi, lambda, radius).powi(2)).sum::<f64>().sqrt()
}

fn test_data<'a>(prob: &'a SaddleProblem, expected: &'static str) -> Result<&'a TestData> {
    match &prob.data {
        Some(d) if d.spec.name() == expected => Ok(d),
        _ => Err(Error::ProblemMismatch { expected }),
    }
}

/// Closed-form primal-dual gap of the μ = 0 box problem.
pub fn primal_dual_gap_prob1(prob: &SaddleProblem, z: &DVector<f64>) -> Result<f64> {
    let data = test_data(prob, "prob1")?;
    let ProblemSpec::Prob1 { lambda, mu, radius, .. } = data.spec else { unreachable!() };
    if mu != 0.0 {
        return Err(Error::ProblemMismatch { expected: "prob1 with mu = 0" });
    }
    check_dim(prob.dim(), z.len())?;
    let pt = PrimalDualPoint::split(z, prob.m)?;
    let r = &data.a * &pt.x - &data.b;
    let g = data.a.transpose() * &pt.y;
    let pos = |v: &DVector<f64>| v.iter().map(|t| (t.abs() - lambda).max(0.0)).sum::<f64>();
    let primal = radius * pos(&r) + lambda * pt.x.lp_norm(1);
    let dual = -radius * pos(&g) - data.b.dot(&pt.y) - lambda * pt.y.lp_norm(1);
    Ok(primal - dual)
}

/// Closed-form restricted gap of the cubic problem over R^n × {‖y‖ ≤ R}.
pub fn restricted_gap_prob2(prob: &SaddleProblem, z: &DVector<f64>, r_dual: f64) -> Result<f64> {
    let data = test_data(prob, "prob2")?;
    let ProblemSpec::Prob2 { l2, .. } = data.spec else { unreachable!() };
    check_dim(prob.dim(), z.len())?;
    let pt = PrimalDualPoint::split(z, prob.m)?;
    let xn = pt.x.norm();
    let aty = data.a.transpose() * &pt.y;
    Ok(l2 / 6.0 * xn.powi(3)
        + r_dual * (&data.a * &pt.x - &data.b).norm()
        + 2.0 / 3.0 * (2.0 / l2).sqrt() * aty.norm().powf(1.5)
        + data.b.dot(&pt.y))
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    // Row-major fill so the stream order matches the displayed layout.
    let vals: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-1.0..=1.0)).collect();
    DMatrix::from_row_slice(rows, cols, &vals)
}

fn uniform_vector(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_iterator(len, (0..len).map(|_| rng.random_range(-1.0..=1.0)))
}

/// Upper bidiagonal matrix with 1 on the diagonal and −1 above it.
pub fn bidiagonal(n: usize) -> DMatrix<f64> {
    let mut a = DMatrix::identity(n, n);
    for i in 0..n.saturating_sub(1) {
        a[(i, i + 1)] = -1.0;
    }
    a
}

/// Builds a seeded test problem. Data come from ChaCha8 seeded with `seed`.
pub fn make_test_problem(spec: ProblemSpec, seed: u64) -> Result<SaddleProblem> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, n) = spec.dims();
    let prob = match spec {
        ProblemSpec::Prob1 { lambda, mu, radius, .. } => {
            let a = uniform_matrix(&mut rng, n, m);
            let b = uniform_vector(&mut rng, n);
            let sigma = linalg::spectral_norm(&a);
            let l1 = (mu * mu + sigma * sigma).sqrt();
            let jac = bilinear_jacobian(&a, mu, mu);
            build_prob1(m, n, &a, &b, mu, jac)
                .with_composite(Composite::L1 { weight: lambda })
                .with_feasible(Feasible::Box { radius })
                .with_mu(mu)
                .with_lipschitz(Lipschitz { l1: Some(l1), l2: Some(0.0), lp: None })
                .attach(spec, seed, a, b)
        }
        ProblemSpec::Prob2 { l2, .. } => {
            let a = bidiagonal(n);
            let b = uniform_vector(&mut rng, n);
            build_prob2(n, &a, &b, l2)
                .with_lipschitz(Lipschitz { l1: None, l2: Some(l2), lp: None })
                .attach(spec, seed, a, b)
        }
        ProblemSpec::Prob2Sc { l2, c, mu, .. } => {
            let a = uniform_matrix(&mut rng, n, m);
            let b = DVector::zeros(n);
            build_prob2_sc(m, n, &a, l2, c, mu)
                .with_mu(mu)
                .with_lipschitz(Lipschitz { l1: None, l2: Some(l2), lp: None })
                .attach(spec, seed, a, b)
        }
        ProblemSpec::ProbP3 { c3, mu, .. } => {
            let a = uniform_matrix(&mut rng, n, m);
            let b = uniform_vector(&mut rng, n);
            build_prob_p3(m, n, &a, &b, c3, mu)
                .with_mu(mu)
                .with_lipschitz(Lipschitz { l1: None, l2: None, lp: Some((3, c3)) })
                .attach(spec, seed, a, b)
        }
    };
    Ok(prob)
}

impl SaddleProblem {
    fn attach(mut self, spec: ProblemSpec, seed: u64, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        self.data = Some(TestData { spec, seed, a, b });
        self
    }
}

/// [[μx I, Aᵀ], [−A, μy I]].
fn bilinear_jacobian(a: &DMatrix<f64>, mu_x: f64, mu_y: f64) -> DMatrix<f64> {
    let (n, m) = a.shape();
    let mut j = DMatrix::zeros(m + n, m + n);
    for i in 0..m {
        j[(i, i)] = mu_x;
    }
    for i in 0..n {
        j[(m + i, m + i)] = mu_y;
    }
    j.view_mut((0, m), (m, n)).copy_from(&a.transpose());
    j.view_mut((m, 0), (n, m)).copy_from(&(-a));
    j
}

fn build_prob1(m: usize, n: usize, a: &DMatrix<f64>, b: &DVector<f64>, mu: f64, jac: DMatrix<f64>) -> SaddleProblem {
    let (a1, b1) = (a.clone(), b.clone());
    let f: OperatorFn = Arc::new(move |z| {
        let x = z.rows(0, m);
        let y = z.rows(m, n);
        let mut out = DVector::zeros(m + n);
        out.rows_mut(0, m).copy_from(&(a1.tr_mul(&y) + x * mu));
        out.rows_mut(m, n).copy_from(&(&b1 - &a1 * x + y * mu));
        out
    });
    let j1 = jac.clone();
    let j2 = jac;
    SaddleProblem::new(m, n, f)
        .with_jacobian(Arc::new(move |_| j1.clone()))
        .with_directional(8, Arc::new(move |order, _z, h| if order == 1 { &j2 * h } else { DVector::zeros(h.len()) }))
}

fn build_prob2(n: usize, a: &DMatrix<f64>, b: &DVector<f64>, l2: f64) -> SaddleProblem {
    let (a1, b1) = (a.clone(), b.clone());
    let f: OperatorFn = Arc::new(move |z| {
        let x = z.rows(0, n);
        let y = z.rows(n, n);
        let mut out = DVector::zeros(2 * n);
        out.rows_mut(0, n).copy_from(&(x * (0.5 * l2 * x.norm()) + a1.tr_mul(&y)));
        out.rows_mut(n, n).copy_from(&(&b1 - &a1 * x));
        out
    });
    let base = bilinear_jacobian(a, 0.0, 0.0);
    let jac: JacobianFn = Arc::new(move |z| {
        let x = z.rows(0, n).into_owned();
        let mut j = base.clone();
        let xn = x.norm();
        if xn > 0.0 {
            let block = DMatrix::identity(n, n) * xn + &x * x.transpose() / xn;
            j.view_mut((0, 0), (n, n)).copy_from(&(block * (0.5 * l2)));
        }
        j
    });
    SaddleProblem::new(n, n, f).with_jacobian(jac)
}

fn build_prob2_sc(m: usize, n: usize, a: &DMatrix<f64>, l2: f64, c: f64, mu: f64) -> SaddleProblem {
    let a1 = a.clone();
    let f: OperatorFn = Arc::new(move |z| {
        let x = z.rows(0, m);
        let y = z.rows(m, n);
        let mut gx = a1.tr_mul(&y) + x * mu;
        for k in 0..m - 1 {
            let d = x[k] - x[k + 1];
            let t = l2 / 12.0 * d.abs() * d;
            gx[k] += t;
            gx[k + 1] -= t;
        }
        gx[0] -= l2 / 12.0 * c;
        let mut out = DVector::zeros(m + n);
        out.rows_mut(0, m).copy_from(&gx);
        out.rows_mut(m, n).copy_from(&(y * mu - &a1 * x));
        out
    });
    let base = bilinear_jacobian(a, mu, mu);
    let jac: JacobianFn = Arc::new(move |z| {
        let mut j = base.clone();
        for k in 0..m - 1 {
            let w = l2 / 6.0 * (z[k] - z[k + 1]).abs();
            j[(k, k)] += w;
            j[(k + 1, k + 1)] += w;
            j[(k, k + 1)] -= w;
            j[(k + 1, k)] -= w;
        }
        j
    });
    SaddleProblem::new(m, n, f).with_jacobian(jac)
}

fn build_prob_p3(m: usize, n: usize, a: &DMatrix<f64>, b: &DVector<f64>, c3: f64, mu: f64) -> SaddleProblem {
    let (a1, b1) = (a.clone(), b.clone());
    let f: OperatorFn = Arc::new(move |z| {
        let x = z.rows(0, m);
        let y = z.rows(m, n);
        let mut out = DVector::zeros(m + n);
        out.rows_mut(0, m).copy_from(&(x * (c3 / 6.0 * x.norm_squared() + mu) + a1.tr_mul(&y)));
        out.rows_mut(m, n).copy_from(&(&b1 - &a1 * x + y * mu));
        out
    });
    let base = bilinear_jacobian(a, mu, mu);
    let jac: JacobianFn = Arc::new(move |z| {
        let x = z.rows(0, m).into_owned();
        let mut j = base.clone();
        let block = (DMatrix::identity(m, m) * x.norm_squared() + &x * x.transpose() * 2.0) * (c3 / 6.0);
        let mut top = j.view_mut((0, 0), (m, m));
        top += block;
        j
    });
    let base_d = bilinear_jacobian(a, mu, mu);
    let dir: DirectionalFn = Arc::new(move |order, z, h| {
        let x = z.rows(0, m);
        let hx = h.rows(0, m);
        let mut out = DVector::zeros(m + n);
        match order {
            1 => {
                let nl = (hx * x.norm_squared() + x * (2.0 * x.dot(&hx))) * (c3 / 6.0);
                out = &base_d * h;
                let mut top = out.rows_mut(0, m);
                top += nl;
            }
            2 => {
                let v = (hx * (2.0 * x.dot(&hx)) + x * hx.norm_squared()) * (c3 / 3.0);
                out.rows_mut(0, m).copy_from(&v);
            }
            3 => {
                out.rows_mut(0, m).copy_from(&(hx * (c3 * hx.norm_squared())));
            }
            _ => {}
        }
        out
    });
    SaddleProblem::new(m, n, f).with_jacobian(jac).with_directional(8, dir)
}

/// Closed-form saddle point of the cubic problem: x* = A⁻¹b, y* = −(L2/2)‖x*‖A⁻ᵀx*.
pub fn prob2_saddle_point(prob: &SaddleProblem) -> Result<DVector<f64>> {
    let data = test_data(prob, "prob2")?;
    let ProblemSpec::Prob2 { n, l2 } = data.spec else { unreachable!() };
    let mut x = DVector::zeros(n);
    for i in (0..n).rev() {
        x[i] = data.b[i] + if i + 1 < n { x[i + 1] } else { 0.0 };
    }
    let mut u = DVector::zeros(n);
    for i in 0..n {
        u[i] = x[i] + if i > 0 { u[i - 1] } else { 0.0 };
    }
    let y = u * (-0.5 * l2 * x.norm());
    Ok(PrimalDualPoint::new(x, y).concat())
}

/// Damped Newton on F(z) = 0 for smooth unconstrained problems with a Jacobian.
fn newton_polish(prob: &SaddleProblem, z0: DVector<f64>, tol: f64, cap: usize) -> Result<DVector<f64>> {
    let mut z = z0;
    let mut f = eval_f(prob, &z)?;
    let mut fnorm = f.norm();
    let mut used = 0;
    for it in 0..cap {
        used = it;
        if fnorm <= tol {
            return Ok(z);
        }
        let jac = prob.jacobian(&z)?;
        let d = linalg::solve(&jac, &(-&f))?;
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..60 {
            let cand = &z + &d * t;
            let fc = eval_f(prob, &cand)?;
            let nc = fc.norm();
            if nc <= (1.0 - 1e-4 * t) * fnorm || (t < 1.0 && nc < fnorm) {
                z = cand;
                f = fc;
                fnorm = nc;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if fnorm <= tol {
        Ok(z)
    } else {
        Err(Error::ReferenceFailed { residual: fnorm, iterations: used })
    }
}

/// A saddle point with residual ≤ `tol`: closed form when known, Newton for
/// smooth unconstrained problems, otherwise a long first-order run.
pub fn reference_saddle_point(prob: &SaddleProblem, tol: f64) -> Result<DVector<f64>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("reference tolerance must be positive".into()));
    }
    if prob.spec().map(|s| s.name()) == Some("prob2") {
        let z = prob2_saddle_point(prob)?;
        return if residual(prob, &z)? <= tol { Ok(z) } else { newton_polish(prob, z, tol, 50) };
    }
    if prob.is_smooth_unconstrained() && prob.jac_oracle.is_some() {
        return newton_polish(prob, DVector::zeros(prob.dim()), tol, 500);
    }
    crate::solvers::long_run_reference(prob, &Euclidean, tol)
}
