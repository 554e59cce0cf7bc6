//! Closed-form constants and bound curves for the optimistic methods.

use crate::error::{Error, Result};

fn check_ab(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter(format!("beta must lie in (0, 1), got {beta}")));
    }
    Ok(())
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// γ₂ = √(2/(1−α))·(L_Φ^{3/2}/(αβ²) + (β + L_Φ^{1/2})/(2β²)).
pub fn gamma2(alpha: f64, beta: f64, l_phi: f64) -> Result<f64> {
    check_ab(alpha, beta)?;
    let b2 = beta * beta;
    Ok((2.0 / (1.0 - alpha)).sqrt() * (l_phi.powf(1.5) / (alpha * b2) + (beta + l_phi.sqrt()) / (2.0 * b2)))
}

/// γ_p for p ≥ 3 (order p of the method).
pub fn gamma_p(alpha: f64, beta: f64, l_phi: f64, p: usize) -> Result<f64> {
    check_ab(alpha, beta)?;
    if p < 2 {
        return Err(Error::InvalidParameter(format!("order must be at least 2, got {p}")));
    }
    if p == 2 {
        return gamma2(alpha, beta, l_phi);
    }
    let c = (2.0 / (factorial(p) * alpha * beta.powi(p as i32))).powf(1.0 / (p as f64 - 1.0));
    Ok((2.0 / (1.0 - alpha)).sqrt() * l_phi.powf(1.5) * c
        + c * alpha * (beta + l_phi.sqrt()) / (2.0 * (1.0 - alpha)).sqrt())
}

/// L_p(Φ, λ) = L_p + p·L_Φ^{(p+1)/2}·λ.
pub fn lp_phi_lambda(lp: f64, p: usize, l_phi: f64, lambda: f64) -> f64 {
    lp + p as f64 * l_phi.powf((p as f64 + 1.0) / 2.0) * lambda
}

fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("condition numbers need mu > 0, got {mu}")))
    }
}

/// κ_p(z₀) = L_p·D₀^{(p−1)/2}/μ with D₀ = D_Φ(z*, z₀).
pub fn kappa_p(lp: f64, p: usize, d0: f64, mu: f64) -> Result<f64> {
    check_mu(mu)?;
    Ok(lp * d0.powf((p as f64 - 1.0) / 2.0) / mu)
}

/// κ̃_p(z₀) = γ_p^{p−1}·L_p(Φ,λ)·D₀^{(p−1)/2}/μ.
pub fn kappa_tilde_p(gamma_p: f64, lp_phi_lambda: f64, p: usize, d0: f64, mu: f64) -> Result<f64> {
    check_mu(mu)?;
    let q = p as f64 - 1.0;
    Ok(gamma_p.powf(q) * lp_phi_lambda * d0.powf(q / 2.0) / mu)
}

/// Averaged-gap bound of the fixed-step method on the box problem: M(m+n)R²/(2N).
pub fn fixed_step_gap_bound(m_const: f64, dim: usize, radius: f64, n: usize) -> f64 {
    m_const * dim as f64 * radius * radius / (2.0 * n as f64)
}

/// ‖z₀ − z*‖²·(M/(2μ + M))^N.
pub fn fixed_step_linear_bound(dist0_sq: f64, m_const: f64, mu: f64, n: usize) -> f64 {
    dist0_sq * (m_const / (2.0 * mu + m_const)).powi(n as i32)
}

/// Gap bound from the run's own stepsizes: D_Φ(z, z₀)/Ση_k.
pub fn stepsize_sum_gap_bound(d_z_z0: f64, eta_sum: f64) -> f64 {
    d_z_z0 / eta_sum
}

/// γ₂·L₂·D_Φ(z, z₀)·√D₀·N^{−3/2}.
pub fn second_order_gap_bound(gamma2: f64, l2: f64, d_z_z0: f64, d0: f64, n: usize) -> f64 {
    gamma2 * l2 * d_z_z0 * d0.sqrt() * (n as f64).powf(-1.5)
}

/// γ_p^{p−1}·L_p(Φ,λ)·D_Φ(z, z₀)·D₀^{(p−1)/2}·N^{−(p+1)/2}.
pub fn pth_order_gap_bound(gamma_p: f64, lp_phi_lambda: f64, p: usize, d_z_z0: f64, d0: f64, n: usize) -> f64 {
    let q = p as f64 - 1.0;
    gamma_p.powf(q) * lp_phi_lambda * d_z_z0 * d0.powf(q / 2.0) * (n as f64).powf(-(p as f64 + 1.0) / 2.0)
}

/// ‖z_k − z*‖² ≤ (2/(2−α))·‖z₀ − z*‖²·ζ_k.
pub fn zeta_distance_bound(dist0_sq: f64, alpha: f64, zeta: f64) -> f64 {
    2.0 * dist0_sq * zeta / (2.0 - alpha)
}

/// Total calls of the first-order search after N iterations:
/// max{2N, 2N·log₂(4 + (2/N)·log_{1/β}(2σ₀L₁/α))}.
pub fn first_order_call_bound(n: usize, sigma0: f64, beta: f64, alpha: f64, l1: f64) -> f64 {
    let nf = n as f64;
    let inner = 4.0 + (2.0 / nf) * (2.0 * sigma0 * l1 / alpha).ln() / (1.0 / beta).ln();
    let log_term = if inner > 0.0 { 2.0 * nf * inner.log2() } else { f64::NEG_INFINITY };
    (2.0 * nf).max(log_term)
}

/// Stepsize lower bound of the first-order search: min{σ₀/β^k, αβ/(2L₁)}.
pub fn first_order_step_lower_bound(k: usize, sigma0: f64, beta: f64, alpha: f64, l1: f64) -> f64 {
    (sigma0 / beta.powi(k as i32)).min(alpha * beta / (2.0 * l1))
}

/// Total calls of the p-th-order search (p = 2 gives the second-order formula)
/// after N iterations, with L_Φ = 1 for p = 2.
#[allow(clippy::too_many_arguments)]
pub fn pth_order_call_bound(
    n: usize,
    p: usize,
    sigma0: f64,
    beta: f64,
    alpha: f64,
    l_phi: f64,
    gamma_p: f64,
    lp_phi_lambda: f64,
    d0: f64,
    eps: f64,
) -> f64 {
    let nf = n as f64;
    let q = p as f64 - 1.0;
    let log_b = |x: f64| x.ln() / (1.0 / beta).ln();
    let t1 = 1.0 + sigma0.powf(2.0 / q) * gamma_p * gamma_p * lp_phi_lambda.powf(2.0 / q) * d0 / nf;
    let t2 = 1.0 + 2.0 * (alpha + l_phi).powi(2) * d0 / (sigma0 * sigma0 * (1.0 - alpha) * nf * eps * eps);
    2.0 * nf * (4.0 + 2.0 * q * log_b(t1) + 2.0 * log_b(t2)).log2()
}

/// Total calls of the second-order search after N iterations.
#[allow(clippy::too_many_arguments)]
pub fn second_order_call_bound(
    n: usize,
    sigma0: f64,
    beta: f64,
    alpha: f64,
    gamma2: f64,
    l2: f64,
    d0: f64,
    eps: f64,
) -> f64 {
    pth_order_call_bound(n, 2, sigma0, beta, alpha, 1.0, gamma2, l2, d0, eps)
}

/// Stepsize lower bound on a β-optimal second-order step:
/// αβ²/L₂ / (L_Φ^{3/2}‖z_{k+1} − z_k‖ + (β + L_Φ^{1/2})‖v_k‖_*).
pub fn second_order_step_lower_bound(alpha: f64, beta: f64, l2: f64, l_phi: f64, step_norm: f64, v_norm: f64) -> f64 {
    alpha * beta * beta / l2 / (l_phi.powf(1.5) * step_norm + (beta + l_phi.sqrt()) * v_norm)
}

/// Residual bound for an admissible step: ((α/2 + L_Φ)‖z − z⁻‖ + ‖v⁻‖_*)/η.
pub fn residual_bound(alpha: f64, l_phi: f64, eta: f64, step_norm: f64, v_norm: f64) -> f64 {
    ((0.5 * alpha + l_phi) * step_norm + v_norm) / eta
}

/// Iteration bound for the strongly monotone p-th-order method (p = 2 uses
/// the second-order constants). `kappa` is γ₂κ₂ for p = 2 and κ̃_p otherwise;
/// `local_scale` is γ₂²L₂²/μ² for p = 2 and γ_p²(L_p(Φ,λ)/μ)^{2/(p−1)} otherwise.
/// Accuracy is measured as D_Φ(z*, z) ≤ ε.
pub fn strongly_monotone_iteration_bound(p: usize, kappa: f64, local_scale: f64, alpha: f64, d0: f64, eps: f64) -> f64 {
    let pf = p as f64;
    let expo = 2.0 / (pf + 1.0);
    let lead = kappa.powf(expo) / (1.0 - 2f64.powf(-(pf - 1.0) / (pf + 1.0)));
    let threshold = 1.0 / ((2.0 - alpha) * local_scale);
    if eps >= threshold {
        (lead + (2.0 * d0 / ((2.0 - alpha) * eps)).log2() + 1.0).max(1.0)
    } else {
        let head = (lead + 2.0 / (pf - 1.0) * kappa.log2() + 2.0).max(1.0);
        let tail = (2.0 / ((2.0 - alpha) * local_scale * eps)).log2().ln() / ((pf + 1.0) / 2.0).ln();
        head + tail + 1.0
    }
}

/// All constants for one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConstants {
    pub gamma2: f64,
    pub gamma_p: Option<f64>,
    pub lp_phi_lambda: Option<f64>,
    pub kappa_p: Option<f64>,
    pub kappa_tilde_p: Option<f64>,
}

/// Bundle of constants; the condition numbers are filled only when μ > 0
/// and D₀ and L_p are known.
#[allow(clippy::too_many_arguments)]
pub fn theory_constants(
    alpha: f64,
    beta: f64,
    l_phi: f64,
    p: usize,
    lambda: Option<f64>,
    lp: Option<f64>,
    mu: Option<f64>,
    d0: Option<f64>,
) -> Result<TheoryConstants> {
    let g2 = gamma2(alpha, beta, l_phi)?;
    let gp = if p >= 2 { Some(gamma_p(alpha, beta, l_phi, p)?) } else { None };
    let lpl = lp.map(|l| lp_phi_lambda(l, p, l_phi, lambda.unwrap_or(0.0)));
    let (mut kp, mut ktp) = (None, None);
    if let (Some(l), Some(m), Some(d)) = (lp, mu, d0) {
        kp = Some(kappa_p(l, p, d, m)?);
        if let (Some(g), Some(ll)) = (gp, lpl) {
            ktp = Some(kappa_tilde_p(g, ll, p, d, m)?);
        }
    }
    Ok(TheoryConstants { gamma2: g2, gamma_p: gp, lp_phi_lambda: lpl, kappa_p: kp, kappa_tilde_p: ktp })
}
