//! Wiener phase noise for general oscillator topologies.
//!
//! Phases are materialized only at the training instant `j = 0` and the data
//! instant `j = τ`: the increment over `τ` symbols is a single Gaussian of
//! variance `τσ²`. [`simulate_wiener_steps`] produces full sample paths when
//! they are wanted for plotting.

use std::f64::consts::TAU;

use faer::c64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};

/// Increment variance in rad² per symbol for a standard deviation given in degrees.
pub fn degrees_to_variance(sigma_deg: f64) -> f64 {
    let r = sigma_deg.to_radians();
    r * r
}

/// `M` antennas driven by `M_osc` free-running oscillators, each feeding a
/// contiguous block of `M / M_osc` antennas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OscillatorTopology {
    antennas: usize,
    oscillators: usize,
}

impl OscillatorTopology {
    pub fn new(antennas: usize, oscillators: usize) -> Result<Self> {
        if oscillators == 0 || oscillators > antennas {
            return Err(Error::Domain(format!(
                "oscillator count must lie in 1..={antennas}, got {oscillators}"
            )));
        }
        if antennas % oscillators != 0 {
            return Err(Error::Domain(format!(
                "oscillator count {oscillators} does not divide antenna count {antennas}"
            )));
        }
        Ok(Self {
            antennas,
            oscillators,
        })
    }

    /// One oscillator for the whole array.
    pub fn common(antennas: usize) -> Result<Self> {
        Self::new(antennas, 1)
    }

    /// One oscillator per antenna.
    pub fn distributed(antennas: usize) -> Result<Self> {
        Self::new(antennas, antennas)
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn oscillators(&self) -> usize {
        self.oscillators
    }

    pub fn block_len(&self) -> usize {
        self.antennas / self.oscillators
    }

    /// Zero-based oscillator index driving antenna `m`.
    pub fn oscillator_of(&self, antenna: usize) -> usize {
        antenna / self.block_len()
    }

    pub fn is_common(&self) -> bool {
        self.oscillators == 1
    }

    pub fn is_distributed(&self) -> bool {
        self.oscillators == self.antennas
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseNoiseParams {
    pub sigma2_bs: f64,
    pub sigma2_ue: f64,
    pub tau: u64,
}

impl PhaseNoiseParams {
    pub fn new(sigma2_bs: f64, sigma2_ue: f64, tau: u64) -> Result<Self> {
        for (name, v) in [("BS", sigma2_bs), ("UE", sigma2_ue)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!(
                    "{name} phase increment variance must be finite and >= 0, got {v}"
                )));
            }
        }
        if tau == 0 {
            return Err(Error::Domain("tau must be at least 1".into()));
        }
        Ok(Self {
            sigma2_bs,
            sigma2_ue,
            tau,
        })
    }

    pub fn from_degrees(sigma_deg_bs: f64, sigma_deg_ue: f64, tau: u64) -> Result<Self> {
        Self::new(
            degrees_to_variance(sigma_deg_bs),
            degrees_to_variance(sigma_deg_ue),
            tau,
        )
    }

    pub fn none(tau: u64) -> Result<Self> {
        Self::new(0.0, 0.0, tau)
    }
}

/// Phase of one oscillator at the training and data instants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePair {
    pub training: f64,
    pub data: f64,
}

impl PhasePair {
    pub fn increment(&self) -> f64 {
        self.data - self.training
    }
}

/// Which of the two materialized instants to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Instant {
    Training,
    Data,
}

/// BS oscillator and UE phases at `j = 0` and `j = τ` for one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrace {
    pub tau: u64,
    pub bs_phases: Vec<PhasePair>,
    pub ue_phases: Vec<PhasePair>,
}

/// Endpoints of `n` independent Wiener processes started uniformly on `[0, 2π)`.
pub fn simulate_wiener<R: Rng + ?Sized>(
    n: usize,
    tau: u64,
    sigma2: f64,
    rng: &mut R,
) -> Vec<PhasePair> {
    let sd = (tau as f64 * sigma2).sqrt();
    let start = Uniform::new(0.0, TAU).expect("valid range");
    (0..n)
        .map(|_| {
            let training = start.sample(rng);
            let step: f64 = StandardNormal.sample(rng);
            PhasePair {
                training,
                data: training + sd * step,
            }
        })
        .collect()
}

/// Full sample paths of `n` Wiener processes over symbols `0..=tau`.
pub fn simulate_wiener_steps<R: Rng + ?Sized>(
    n: usize,
    tau: u64,
    sigma2: f64,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let sd = sigma2.sqrt();
    let start = Uniform::new(0.0, TAU).expect("valid range");
    (0..n)
        .map(|_| {
            let mut path = Vec::with_capacity(tau as usize + 1);
            let mut phase = start.sample(rng);
            path.push(phase);
            for _ in 0..tau {
                let step: f64 = StandardNormal.sample(rng);
                phase += sd * step;
                path.push(phase);
            }
            path
        })
        .collect()
}

fn endpoints(paths: &[Vec<f64>]) -> Vec<PhasePair> {
    paths
        .iter()
        .map(|p| PhasePair {
            training: p[0],
            data: *p.last().expect("nonempty path"),
        })
        .collect()
}

impl PhaseTrace {
    /// Draws BS phases first, then UE phases.
    pub fn simulate<R: Rng + ?Sized>(
        topology: &OscillatorTopology,
        users: usize,
        params: &PhaseNoiseParams,
        rng: &mut R,
    ) -> Self {
        let bs_phases = simulate_wiener(topology.oscillators(), params.tau, params.sigma2_bs, rng);
        let ue_phases = simulate_wiener(users, params.tau, params.sigma2_ue, rng);
        Self {
            tau: params.tau,
            bs_phases,
            ue_phases,
        }
    }

    /// Same law as [`PhaseTrace::simulate`], built from symbol-by-symbol paths.
    pub fn simulate_stepwise<R: Rng + ?Sized>(
        topology: &OscillatorTopology,
        users: usize,
        params: &PhaseNoiseParams,
        rng: &mut R,
    ) -> Self {
        let bs = simulate_wiener_steps(topology.oscillators(), params.tau, params.sigma2_bs, rng);
        let ue = simulate_wiener_steps(users, params.tau, params.sigma2_ue, rng);
        Self {
            tau: params.tau,
            bs_phases: endpoints(&bs),
            ue_phases: endpoints(&ue),
        }
    }

    fn check(&self, topology: &OscillatorTopology) -> Result<()> {
        if self.bs_phases.len() != topology.oscillators() {
            return Err(Error::Shape(format!(
                "trace holds {} BS oscillators, topology has {}",
                self.bs_phases.len(),
                topology.oscillators()
            )));
        }
        Ok(())
    }

    /// Diagonal of `Θ_{j,k}`: entry `m` is `exp(j(ϕ_j^(k) + φ_j^(l)))` with `l`
    /// the oscillator driving antenna `m`.
    pub fn theta(&self, ue: usize, instant: Instant, topology: &OscillatorTopology) -> Result<Vec<c64>> {
        self.check(topology)?;
        let ue_pair = self.ue_phases.get(ue).ok_or_else(|| {
            Error::Shape(format!("UE index {ue} out of range 0..{}", self.ue_phases.len()))
        })?;
        let pick = |p: &PhasePair| match instant {
            Instant::Training => p.training,
            Instant::Data => p.data,
        };
        let ue_phase = pick(ue_pair);
        let mut out = Vec::with_capacity(topology.antennas());
        for osc in &self.bs_phases {
            let z = c64::cis(ue_phase + pick(osc));
            out.extend(std::iter::repeat_n(z, topology.block_len()));
        }
        Ok(out)
    }

    /// Diagonal of `ΔΦ_τ`: entry `m` is `exp(j(φ_τ^(l) − φ_0^(l)))`.
    pub fn delta_phi(&self, topology: &OscillatorTopology) -> Result<Vec<c64>> {
        self.check(topology)?;
        let mut out = Vec::with_capacity(topology.antennas());
        for osc in &self.bs_phases {
            out.extend(std::iter::repeat_n(c64::cis(osc.increment()), topology.block_len()));
        }
        Ok(out)
    }

    /// `T_PN = (1/M_osc) Σ_l exp(j(φ_τ^(l) − φ_0^(l)))`.
    pub fn t_pn(&self) -> c64 {
        let n = self.bs_phases.len() as f64;
        self.bs_phases.iter().map(|p| c64::cis(p.increment())).sum::<c64>() / n
    }
}

/// `T_PN` as the normalized trace of a `ΔΦ_τ` diagonal.
pub fn t_pn(delta_phi: &[c64]) -> c64 {
    delta_phi.iter().sum::<c64>() / delta_phi.len() as f64
}

/// Draws `T_PN` directly from `M_osc` independent increments of variance `τσ²`.
pub fn sample_t_pn<R: Rng + ?Sized>(oscillators: usize, tau: u64, sigma2: f64, rng: &mut R) -> c64 {
    let sd = (tau as f64 * sigma2).sqrt();
    let mut acc = c64::new(0.0, 0.0);
    for _ in 0..oscillators {
        let step: f64 = StandardNormal.sample(rng);
        acc += c64::cis(sd * step);
    }
    acc / oscillators as f64
}

/// `E[T_PN] = exp(−τσ²/2)` for every oscillator count.
pub fn t_pn_mean(tau: u64, sigma2_bs: f64) -> f64 {
    (-(tau as f64) * sigma2_bs / 2.0).exp()
}

/// `E|T_PN|² = (1 − e^{−τσ²})/M_osc + e^{−τσ²}`.
pub fn t_pn_second_moment(oscillators: usize, tau: u64, sigma2_bs: f64) -> Result<f64> {
    if oscillators == 0 {
        return Err(Error::Domain("oscillator count must be at least 1".into()));
    }
    if !(sigma2_bs >= 0.0 && sigma2_bs.is_finite()) {
        return Err(Error::Domain(format!("phase variance must be finite and >= 0, got {sigma2_bs}")));
    }
    let decay = (-(tau as f64) * sigma2_bs).exp();
    Ok((1.0 - decay) / oscillators as f64 + decay)
}
