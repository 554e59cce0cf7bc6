//! ζ sequences, the Lyapunov value and trajectory checks against a reference
//! saddle point.

use nalgebra::DVector;

use crate::error::{check_dim, Result};
use crate::geometry::MirrorMap;
use crate::linesearch::LineSearchStatus;
use crate::problems::{eval_f, SaddleProblem};
use crate::subsolvers::Predictor;

use super::Trajectory;

/// ζ_0 = 1, ζ_{k+1} = ζ_k/(1 + η_kμ). Returns N + 1 values for N stepsizes.
pub fn zeta_sequence(etas: &[f64], mu: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(etas.len() + 1);
    let mut z = 1.0;
    out.push(z);
    for &e in etas {
        z /= 1.0 + e * mu;
        out.push(z);
    }
    out
}

/// ζ̃_0 = 1, 1/ζ̃_k = 1 + (1/C)(Σ_{l<k} 1/ζ̃_l)^{3/2}.
pub fn simulated_zeta(c: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut inv_sum = 0.0f64;
    let mut z = 1.0;
    out.push(z);
    for _ in 0..n {
        inv_sum += 1.0 / z;
        z = 1.0 / (1.0 + inv_sum.powf(1.5) / c);
        out.push(z);
    }
    out
}

/// V(z_k, z_{k−1}; z) =
/// −(η_{k−1}/(1+η_{k−1}μ))⟨F(z_k) − P(z_k; I_{k−1}), z_k − z⟩ + D_Φ(z, z_k)
/// + α‖z_k − z_{k−1}‖²/(4(1+η_{k−1}μ)²).
///
/// With no previous predictor (k = 0) this is D_Φ(z, z_0).
#[allow(clippy::too_many_arguments)]
pub fn lyapunov_value(
    prob: &SaddleProblem,
    map: &dyn MirrorMap,
    z_k: &DVector<f64>,
    z_km1: &DVector<f64>,
    eta_km1: f64,
    mu: f64,
    alpha: f64,
    predictor_km1: Option<&Predictor>,
    z_ref: &DVector<f64>,
) -> Result<f64> {
    check_dim(prob.dim(), z_ref.len())?;
    let d = map.distance(z_ref, z_k);
    let pred = match predictor_km1 {
        None => return Ok(d),
        Some(p) => p,
    };
    let scale = 1.0 + eta_km1 * mu;
    let err = eval_f(prob, z_k)? - pred.eval(prob, map, z_k)?;
    let inner = err.dot(&(z_k - z_ref));
    let step = map.norm(&(z_k - z_km1));
    Ok(-(eta_km1 / scale) * inner + d + alpha * step * step / (4.0 * scale * scale))
}

/// Violation counts of the μ = 0 invariants against a reference point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InvariantReport {
    pub bounded_violations: usize,
    pub sum_of_squares_violations: usize,
    pub lyapunov_violations: usize,
    pub checked: usize,
}

/// D(z*, z_k) ≤ (2/(2−α))D(z*, z_0) and Σ‖z_{k+1} − z_k‖² ≤ (2/(1−α))D(z*, z_0)
/// at every k; Lyapunov monotonicity when recorded. α = 1 skips the sum check.
/// Needs kept iterates.
pub fn check_monotone_invariants(
    traj: &Trajectory,
    map: &dyn MirrorMap,
    z_star: &DVector<f64>,
    rel_slack: f64,
) -> InvariantReport {
    let alpha = traj.alpha;
    let d0 = map.distance(z_star, &traj.z0);
    let bounded = 2.0 / (2.0 - alpha) * d0;
    let squares = if alpha < 1.0 { 2.0 / (1.0 - alpha) * d0 } else { f64::INFINITY };
    let mut rep = InvariantReport::default();
    let mut sum = 0.0;
    for w in traj.iterates.windows(2) {
        rep.checked += 1;
        if map.distance(z_star, &w[1]) > bounded * (1.0 + rel_slack) {
            rep.bounded_violations += 1;
        }
        let s = map.norm(&(&w[1] - &w[0]));
        sum += s * s;
        if sum > squares * (1.0 + rel_slack) {
            rep.sum_of_squares_violations += 1;
        }
    }
    let mut prev = traj.lyapunov0;
    for r in &traj.records {
        if let (Some(p), Some(v)) = (prev, r.lyapunov) {
            if v > p + rel_slack * p.abs().max(d0) {
                rep.lyapunov_violations += 1;
            }
        }
        prev = r.lyapunov;
    }
    rep
}

/// Indices k (into records) of consecutive β-optimal pairs (k−1, k) violating
/// ζ_{k+1} ≤ C·ζ_k^q. Step k produces ζ_{k+1} from ζ_k.
pub fn superlinear_violations(traj: &Trajectory, c: f64, q: f64, rel_slack: f64) -> (usize, Vec<usize>) {
    let zetas = traj.zetas();
    let mut checked = 0;
    let mut bad = Vec::new();
    for (k, r) in traj.records.iter().enumerate() {
        if r.status != Some(LineSearchStatus::BetaOptimal) {
            continue;
        }
        checked += 1;
        if zetas[k + 1] > c * zetas[k].powf(q) * (1.0 + rel_slack) {
            bad.push(k);
        }
    }
    (checked, bad)
}

/// Fills `gap` in every record from the η-weighted averages.
pub fn annotate_gaps(traj: &mut Trajectory, gap: impl Fn(&DVector<f64>) -> Result<f64>) -> Result<()> {
    let avgs = traj.weighted_averages()?;
    for (r, a) in traj.records.iter_mut().zip(avgs.iter()) {
        r.gap = Some(gap(a)?);
    }
    Ok(())
}
