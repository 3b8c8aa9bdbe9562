//! Rayleigh block fading and Gauss-Markov channel estimates.

use faer::{c64, Mat};
use rand::Rng;

use crate::error::{Error, Result};
use crate::phase_noise::{Instant, OscillatorTopology, PhaseTrace};
use crate::rng::complex_normal_matrix;

/// Estimate quality `(q0, q1, q2)` with `q0 + q1 = 1` and `q2 = sqrt(q0 q1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateQuality {
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
}

impl EstimateQuality {
    pub fn new(q0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q0) {
            return Err(Error::Domain(format!("q0 must lie in [0, 1], got {q0}")));
        }
        let q1 = 1.0 - q0;
        Ok(Self {
            q0,
            q1,
            q2: (q0 * q1).sqrt(),
        })
    }

    /// LMMSE quality `p_u / (p_u + σ²)` for an uplink pilot of power `p_u`.
    /// A convenience for callers who start from pilot SNR.
    pub fn from_pilot_snr(pilot_power: f64, noise_var: f64) -> Result<Self> {
        if !(pilot_power >= 0.0 && noise_var >= 0.0) || pilot_power + noise_var <= 0.0 {
            return Err(Error::Domain(format!(
                "pilot power {pilot_power} and noise variance {noise_var} must be >= 0 and not both zero"
            )));
        }
        Self::new(pilot_power / (pilot_power + noise_var))
    }
}

/// True channel, its estimate at the training instant and the estimation noise.
/// Row `k` of each `K × M` matrix belongs to user `k`.
#[derive(Debug, Clone)]
pub struct ChannelPair {
    pub h: Mat<c64>,
    pub h_hat: Mat<c64>,
    pub estimation_noise: Mat<c64>,
    pub quality: EstimateQuality,
}

impl ChannelPair {
    pub fn users(&self) -> usize {
        self.h.nrows()
    }

    pub fn antennas(&self) -> usize {
        self.h.ncols()
    }
}

/// `K × M` matrix of i.i.d. CN(0, 1) entries.
pub fn draw_channel<R: Rng + ?Sized>(antennas: usize, users: usize, rng: &mut R) -> Mat<c64> {
    complex_normal_matrix(users, antennas, 1.0, rng)
}

/// Row `k` of the estimate is `√q0 Θ_{0,k} h_k + √q1 w_k`.
pub fn synthesize_estimate<R: Rng + ?Sized>(
    h: Mat<c64>,
    trace: &PhaseTrace,
    topology: &OscillatorTopology,
    quality: EstimateQuality,
    rng: &mut R,
) -> Result<ChannelPair> {
    let (users, antennas) = (h.nrows(), h.ncols());
    if antennas != topology.antennas() {
        return Err(Error::Shape(format!(
            "channel has {antennas} antennas, topology has {}",
            topology.antennas()
        )));
    }
    if trace.ue_phases.len() != users {
        return Err(Error::Shape(format!(
            "trace holds {} UE phases for {users} users",
            trace.ue_phases.len()
        )));
    }
    let w = complex_normal_matrix(users, antennas, 1.0, rng);
    let (s0, s1) = (quality.q0.sqrt(), quality.q1.sqrt());
    let mut h_hat = Mat::<c64>::zeros(users, antennas);
    for k in 0..users {
        let theta = trace.theta(k, Instant::Training, topology)?;
        for m in 0..antennas {
            h_hat[(k, m)] = theta[m] * h[(k, m)] * s0 + w[(k, m)] * s1;
        }
    }
    Ok(ChannelPair {
        h,
        h_hat,
        estimation_noise: w,
        quality,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_noise::PhaseNoiseParams;
    use crate::rng::stream_rng;

    fn setup(antennas: usize, users: usize, seed: u64) -> (PhaseTrace, OscillatorTopology) {
        let topo = OscillatorTopology::new(antennas, 4).unwrap();
        let params = PhaseNoiseParams::from_degrees(6.0, 6.0, 10).unwrap();
        let tr = PhaseTrace::simulate(&topo, users, &params, &mut stream_rng(seed, &[]));
        (tr, topo)
    }

    #[test]
    fn quality_invariants() {
        let q = EstimateQuality::new(0.9).unwrap();
        assert!((q.q0 + q.q1 - 1.0).abs() < 1e-15);
        assert!((q.q2 * q.q2 - q.q0 * q.q1).abs() < 1e-15);
        assert!(EstimateQuality::new(1.1).is_err());
        assert!(EstimateQuality::new(-0.1).is_err());
        let p = EstimateQuality::from_pilot_snr(9.0, 1.0).unwrap();
        assert!((p.q0 - 0.9).abs() < 1e-15);
    }

    #[test]
    fn channel_entries_are_unit_circular() {
        let mut rng = stream_rng(1, &[]);
        let h = draw_channel(1000, 1000, &mut rng);
        let n = 1e6;
        let p = crate::linalg::frobenius_norm_sqr(h.as_ref());
        assert!((p / n - 1.0).abs() < 0.005);
        let mut pseudo = c64::new(0.0, 0.0);
        for j in 0..1000 {
            for i in 0..1000 {
                pseudo += h[(i, j)] * h[(i, j)];
            }
        }
        assert!((pseudo / n).norm() < 0.005);
    }

    #[test]
    fn rows_are_uncorrelated() {
        let m = 4096;
        let trials = 40;
        let mut ok = 0;
        for t in 0..trials {
            let h = draw_channel(m, 6, &mut stream_rng(2, &[t]));
            let g = crate::linalg::gram(h.as_ref());
            let mut worst: f64 = 0.0;
            for i in 0..6 {
                for j in 0..6 {
                    if i != j {
                        worst = worst.max(g[(i, j)].norm() / m as f64);
                    }
                }
            }
            if worst <= 4.0 / (m as f64).sqrt() {
                ok += 1;
            }
        }
        assert!(ok as f64 >= 0.95 * trials as f64);
    }

    #[test]
    fn perfect_estimate_is_rotated_channel() {
        let (tr, topo) = setup(16, 3, 3);
        let mut rng = stream_rng(4, &[]);
        let h = draw_channel(16, 3, &mut rng);
        let pair = synthesize_estimate(h, &tr, &topo, EstimateQuality::new(1.0).unwrap(), &mut rng).unwrap();
        for k in 0..3 {
            let th = tr.theta(k, Instant::Training, &topo).unwrap();
            for m in 0..16 {
                assert_eq!(pair.h_hat[(k, m)], th[m] * pair.h[(k, m)]);
            }
        }
    }

    #[test]
    fn zero_quality_estimate_is_pure_noise() {
        let (tr, topo) = setup(16, 3, 5);
        let mut rng = stream_rng(6, &[]);
        let h = draw_channel(16, 3, &mut rng);
        let pair = synthesize_estimate(h, &tr, &topo, EstimateQuality::new(0.0).unwrap(), &mut rng).unwrap();
        for k in 0..3 {
            for m in 0..16 {
                assert_eq!(pair.h_hat[(k, m)], pair.estimation_noise[(k, m)]);
            }
        }
    }

    #[test]
    fn estimate_statistics() {
        // 1000 x 1000 entries, q0 = 0.9.
        let (m, k) = (1000, 1000);
        let topo = OscillatorTopology::new(m, 10).unwrap();
        let params = PhaseNoiseParams::from_degrees(6.0, 6.0, 10).unwrap();
        let mut rng = stream_rng(7, &[]);
        let tr = PhaseTrace::simulate(&topo, k, &params, &mut rng);
        let h = draw_channel(m, k, &mut rng);
        let pair = synthesize_estimate(h, &tr, &topo, EstimateQuality::new(0.9).unwrap(), &mut rng).unwrap();
        let n = (m * k) as f64;
        let (mut var, mut corr, mut cross, mut cross_sq) = (0.0, c64::new(0.0, 0.0), c64::new(0.0, 0.0), 0.0);
        for u in 0..k {
            let th = tr.theta(u, Instant::Training, &topo).unwrap();
            for a in 0..m {
                let e = pair.h_hat[(u, a)];
                var += e.norm_sqr();
                corr += e * (th[a] * pair.h[(u, a)]).conj();
                let c = pair.estimation_noise[(u, a)] * pair.h[(u, a)].conj();
                cross += c;
                cross_sq += c.norm_sqr();
            }
        }
        assert!((var / n - 1.0).abs() < 0.01);
        assert!(((corr / n).re / 0.9f64.sqrt() - 1.0).abs() < 0.01);
        assert!((corr / n).im.abs() < 0.01);
        let se = (cross_sq / n / n).sqrt();
        assert!((cross / n).norm() <= 3.0 * se);
    }

    #[test]
    fn shape_checks() {
        let (tr, topo) = setup(16, 3, 8);
        let mut rng = stream_rng(9, &[]);
        let h = draw_channel(16, 2, &mut rng);
        assert!(synthesize_estimate(h, &tr, &topo, EstimateQuality::new(0.5).unwrap(), &mut rng).is_err());
        let h = draw_channel(12, 3, &mut rng);
        assert!(synthesize_estimate(h, &tr, &topo, EstimateQuality::new(0.5).unwrap(), &mut rng).is_err());
    }
}
