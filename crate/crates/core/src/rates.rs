//! Achievable-rate bounds in bits per channel use.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `log2(1 + sinr)`, the AWGN capacity at this SINR.
pub fn rate_awgn_bound(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

/// 1 for a common oscillator, 0 otherwise.
pub fn delta_pn(oscillators: usize) -> u8 {
    u8::from(oscillators == 1)
}

/// High-SNR bound `½log2(2π·sinr) − ½log2(2πe·τ(σ_ue² + δ_pn σ_bs²))`.
///
/// Undefined when the accumulated phase variance is zero.
pub fn rate_lapidoth(sinr: f64, tau: u64, sigma2_ue: f64, sigma2_bs: f64, oscillators: usize) -> Result<f64> {
    let var = tau as f64 * (sigma2_ue + f64::from(delta_pn(oscillators)) * sigma2_bs);
    if !(var > 0.0 && var.is_finite()) {
        return Err(Error::Domain(format!(
            "the phase-noise bound needs positive accumulated phase variance, got {var}"
        )));
    }
    if !(sinr > 0.0) {
        return Err(Error::Domain(format!("the phase-noise bound needs a positive SINR, got {sinr}")));
    }
    Ok(0.5 * (2.0 * PI * sinr).log2() - 0.5 * (2.0 * PI * E * var).log2())
}

/// Minimum of the two bounds. Falls back to `max(0, AWGN bound)` when the
/// phase-noise bound is undefined or negative.
pub fn rate_min(awgn: f64, lapidoth: Option<f64>) -> f64 {
    match lapidoth {
        Some(l) if l >= 0.0 => awgn.min(l),
        _ => awgn.max(0.0),
    }
}

/// `log2(1 + sinr)` of the phase-averaged effective SINR. Carries no penalty
/// for the differential entropy rate of the phase processes.
pub fn rate_ergodic(sinr_effective: f64) -> f64 {
    rate_awgn_bound(sinr_effective)
}

/// Which rate a figure or sweep reports as its headline value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateDefinition {
    /// `log2(1 + SINR_eff)`.
    #[default]
    Ergodic,
    /// `min(AWGN bound, phase-noise bound)`.
    MinBound,
}

impl RateDefinition {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Ergodic => "ergodic",
            Self::MinBound => "min-bound",
        }
    }

    pub fn select(&self, report: &RateReport) -> f64 {
        match self {
            Self::Ergodic => report.rate_ergodic,
            Self::MinBound => report.rate_min,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    pub rate_awgn_bound: f64,
    /// `None` where the phase-noise bound is undefined.
    pub rate_lapidoth: Option<f64>,
    pub rate_min: f64,
    pub rate_ergodic: f64,
    pub delta_pn: u8,
}

impl RateReport {
    pub fn new(sinr: f64, tau: u64, sigma2_ue: f64, sigma2_bs: f64, oscillators: usize) -> Self {
        let awgn = rate_awgn_bound(sinr);
        let lap = rate_lapidoth(sinr, tau, sigma2_ue, sigma2_bs, oscillators).ok();
        Self {
            rate_awgn_bound: awgn,
            rate_lapidoth: lap,
            rate_min: rate_min(awgn, lap),
            rate_ergodic: rate_ergodic(sinr),
            delta_pn: delta_pn(oscillators),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_noise::degrees_to_variance;
    use proptest::prelude::*;

    #[test]
    fn awgn_values() {
        assert_eq!(rate_awgn_bound(0.0), 0.0);
        assert_eq!(rate_awgn_bound(1.0), 1.0);
        assert!((rate_awgn_bound(4.5 / 1.1) - 2.348).abs() < 5e-4);
        assert!((rate_ergodic(18.95) - 4.318).abs() < 5e-4);
        assert_eq!(rate_ergodic(0.0), 0.0);
    }

    #[test]
    fn lapidoth_reference() {
        let s2 = (6.0 * PI / 180.0).powi(2);
        let got = rate_lapidoth(100.0, 10, s2, s2, 1).unwrap();
        let oracle = ((200.0 * PI).ln() - (2.0 * PI * E * 10.0 * 2.0 * s2).ln()) / (2.0 * 2f64.ln());
        assert!((got - oracle).abs() < 1e-12);
        assert!((got - 3.6947).abs() < 1e-3);
    }

    #[test]
    fn lapidoth_scaling() {
        let s2 = degrees_to_variance(6.0);
        let a = rate_lapidoth(50.0, 10, s2, s2, 50).unwrap();
        let b = rate_lapidoth(50.0, 10, 2.0 * s2, s2, 50).unwrap();
        assert!((a - b - 0.5).abs() < 1e-12);
        let co = rate_lapidoth(50.0, 10, s2, s2, 1).unwrap();
        assert!((a - co - 0.5).abs() < 1e-12);
        let go = rate_lapidoth(50.0, 10, s2, s2, 5).unwrap();
        assert_eq!(go, a);
    }

    #[test]
    fn lapidoth_undefined() {
        assert!(rate_lapidoth(10.0, 10, 0.0, 0.0, 1).is_err());
        assert!(rate_lapidoth(10.0, 10, 0.0, 0.5, 2).is_err());
        assert!(rate_lapidoth(0.0, 10, 0.1, 0.1, 1).is_err());
        let r = RateReport::new(10.0, 10, 0.0, 0.0, 1);
        assert_eq!(r.rate_lapidoth, None);
        assert_eq!(r.rate_min, r.rate_awgn_bound);
        assert_eq!(r.delta_pn, 1);
    }

    #[test]
    fn active_bound_by_regime() {
        let s2 = degrees_to_variance(6.0);
        let low = RateReport::new(0.5, 10, s2, s2, 1);
        assert_eq!(low.rate_min, low.rate_awgn_bound);
        let high = RateReport::new(1e4, 10, degrees_to_variance(20.0), degrees_to_variance(20.0), 1);
        assert_eq!(Some(high.rate_min), high.rate_lapidoth);
        assert!(high.rate_min < high.rate_awgn_bound);
        assert_eq!(rate_min(2.0, Some(2.0)), 2.0);
        assert_eq!(rate_min(2.0, Some(-1.0)), 2.0);
    }

    #[test]
    fn definitions_select() {
        let r = RateReport::new(1e4, 10, 0.1, 0.1, 1);
        assert_eq!(RateDefinition::Ergodic.select(&r), r.rate_ergodic);
        assert_eq!(RateDefinition::MinBound.select(&r), r.rate_min);
    }

    proptest! {
        #[test]
        fn min_is_below_both(sinr in 0.0f64..1e6, tau in 1u64..20_000, s_ue in 0.0f64..0.1, s_bs in 0.0f64..0.1, osc in 1usize..4) {
            let r = RateReport::new(sinr, tau, s_ue, s_bs, osc);
            prop_assert!(r.rate_min <= r.rate_awgn_bound);
            if let Some(l) = r.rate_lapidoth {
                if l >= 0.0 {
                    prop_assert!(r.rate_min <= l);
                }
            }
            prop_assert!(r.rate_min >= 0.0);
            prop_assert_eq!(r.rate_ergodic, r.rate_awgn_bound);
            prop_assert_eq!(r.delta_pn == 1, osc == 1);
        }
    }
}
