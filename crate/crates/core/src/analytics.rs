//! Closed-form effective SINR for RZF, ZF and MF precoding under phase noise.
//!
//! Phase noise enters only through the effective CSI quality
//! `q_eff = q0 · E|T_PN|²`, so every prediction reports it alongside the value.

use crate::error::{Error, Result};
use crate::precoding::PrecoderKind;
use crate::rmt::{
    large_system_sinr_rzf, optimal_alpha, zf_limit_discrepancy, AsymptoticParams, DeterministicEquivalents, Regularization,
};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrPrediction {
    pub sinr: f64,
    pub kind: PrecoderKind,
    /// Absent for the matched filter, which needs no resolvent quantities.
    pub equivalents: Option<DeterministicEquivalents>,
    pub q_eff: f64,
}

/// Allowed relative gap between the zero-forcing limits and their RZF values
/// at the probe regularization. The gap grows like `β/(β−1)²` near `β = 1`.
pub fn zf_limit_tolerance(beta: f64) -> f64 {
    1e-6 * (beta / ((beta - 1.0) * (beta - 1.0))).max(1.0)
}

fn finite_k_sinr(scn: &Scenario, eq: &DeterministicEquivalents, q_eff: f64) -> f64 {
    let p_k = scn.powers[scn.ue];
    let m_ant = scn.antennas() as f64;
    let xi2 = eq.xi * eq.xi;
    let interference = if eq.m.is_infinite() {
        1.0 - q_eff
    } else {
        1.0 - eq.t * q_eff - eq.t * q_eff / (1.0 + eq.m)
    };
    let den = eq.t2 / m_ant * interference + scn.noise_var / xi2;
    if den == 0.0 {
        return if p_k * q_eff == 0.0 { 0.0 } else { f64::INFINITY };
    }
    p_k * eq.t * eq.t * q_eff / den
}

/// RZF with regularization `α`:
/// `p_k t² q_eff / ((t₂/M)(1 − t q_eff − t q_eff/(1+m)) + σ²/ξ²)`.
pub fn sinr_rzf(scn: &Scenario, alpha: f64) -> Result<SinrPrediction> {
    let params = scn.asymptotic(Regularization::Alpha(alpha))?;
    let e = scn.e_tpn2();
    let eq = DeterministicEquivalents::new(&params, scn.ue, e)?;
    let q_eff = scn.quality.q0 * e;
    Ok(SinrPrediction {
        sinr: finite_k_sinr(scn, &eq, q_eff),
        kind: PrecoderKind::Rzf { alpha },
        equivalents: Some(eq),
        q_eff,
    })
}

/// Regularization `α̃` that maximizes the large-system RZF SINR. The noise is
/// referred to unit total power.
pub fn optimal_regularization(scn: &Scenario) -> Result<f64> {
    optimal_alpha(scn.quality.q0, scn.e_tpn2(), scn.noise_var / scn.total_power(), scn.beta())
}

/// Exhaustive search for the maximizer of the large-system RZF SINR on the
/// grid `step, 2·step, …`. The grid is extended until the maximum is interior.
pub fn alpha_grid_argmax(beta: f64, q_eff: f64, sigma_w2: f64, step: f64) -> Result<f64> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Domain(format!("grid step must be positive, got {step}")));
    }
    let mut n_points = (16.0 / step).ceil() as usize;
    loop {
        let mut best = (0usize, f64::NEG_INFINITY);
        for j in 1..=n_points {
            let v = large_system_sinr_rzf(beta, q_eff, sigma_w2, j as f64 * step)?;
            if v > best.1 {
                best = (j, v);
            }
        }
        if best.0 < n_points {
            return Ok(best.0 as f64 * step);
        }
        if n_points > 1 << 26 {
            return Err(Error::Numerical("grid maximum keeps moving to the upper edge".into()));
        }
        n_points *= 2;
    }
}

/// Grid maximizer for a scenario, using the same noise referral as
/// [`optimal_regularization`].
pub fn optimal_regularization_grid(scn: &Scenario, step: f64) -> Result<f64> {
    alpha_grid_argmax(scn.beta(), scn.q_eff(), scn.noise_var / scn.total_power(), step)
}

pub fn sinr_rzf_optimal(scn: &Scenario) -> Result<SinrPrediction> {
    sinr_rzf(scn, optimal_regularization(scn)?)
}

/// Zero forcing, `β > 1`: `p_k q_eff / ((t₂/M)(1 − q_eff) + σ²/ξ²)`.
///
/// The closed-form limits are checked against the RZF equivalents at a tiny
/// regularization before use.
pub fn sinr_zf(scn: &Scenario) -> Result<SinrPrediction> {
    let params = scn.asymptotic(Regularization::ZeroLimit)?;
    let e = scn.e_tpn2();
    let eq = DeterministicEquivalents::new(&params, scn.ue, e)?;
    let gap = zf_limit_discrepancy(&params, scn.ue)?;
    let tol = zf_limit_tolerance(params.beta);
    if gap > tol {
        return Err(Error::Numerical(format!(
            "zero-forcing limits disagree with the small-alpha equivalents by {gap:e} (tolerance {tol:e})"
        )));
    }
    let q_eff = scn.quality.q0 * e;
    Ok(SinrPrediction {
        sinr: finite_k_sinr(scn, &eq, q_eff),
        kind: PrecoderKind::Zf,
        equivalents: Some(eq),
        q_eff,
    })
}

fn check_mf(scn: &Scenario) -> Result<AsymptoticParams> {
    scn.asymptotic(Regularization::InfiniteLimit)
}

/// Matched filter, large-system form `M q0 p_k E|T_PN|² / ((σ² + 1) Σp)`.
pub fn sinr_mf(scn: &Scenario) -> Result<SinrPrediction> {
    let params = check_mf(scn)?;
    let q_eff = scn.q_eff();
    let p_k = params.powers[scn.ue];
    let sinr = scn.antennas() as f64 * q_eff * p_k / ((scn.noise_var + 1.0) * params.total_power());
    Ok(SinrPrediction {
        sinr,
        kind: PrecoderKind::Mf,
        equivalents: None,
        q_eff,
    })
}

/// Matched filter keeping the finite-`K` interference sum,
/// `M q0 p_k E|T_PN|² / (Σ_{k1≠k} p_{k1} + σ² Σp)`. This is the `α → ∞` limit
/// of [`sinr_rzf`] and tends to [`sinr_mf`] as `K → ∞`.
pub fn sinr_mf_finite(scn: &Scenario) -> Result<SinrPrediction> {
    let params = check_mf(scn)?;
    let q_eff = scn.q_eff();
    let p_k = params.powers[scn.ue];
    let den = params.others_power(scn.ue)? + scn.noise_var * params.total_power();
    let num = scn.antennas() as f64 * q_eff * p_k;
    let sinr = if den == 0.0 {
        if num == 0.0 { 0.0 } else { f64::INFINITY }
    } else {
        num / den
    };
    Ok(SinrPrediction {
        sinr,
        kind: PrecoderKind::Mf,
        equivalents: None,
        q_eff,
    })
}

pub fn predict(scn: &Scenario, kind: PrecoderKind) -> Result<SinrPrediction> {
    match kind {
        PrecoderKind::Rzf { alpha } => sinr_rzf(scn, alpha),
        PrecoderKind::Zf => sinr_zf(scn),
        PrecoderKind::Mf => sinr_mf(scn),
    }
}
