//! Resolved, validated parameters of one simulation point.

use crate::channel::EstimateQuality;
use crate::error::{Error, Result};
use crate::phase_noise::{t_pn_second_moment, OscillatorTopology, PhaseNoiseParams};
use crate::precoding::DEFAULT_CONDITION_CAP;
use crate::rmt::{AsymptoticParams, Regularization};

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub topology: OscillatorTopology,
    pub users: usize,
    pub quality: EstimateQuality,
    pub phase: PhaseNoiseParams,
    /// Coherence length `T_c` in symbols; `τ` must be smaller.
    pub coherence: u64,
    /// AWGN variance `σ_w²` at each UE.
    pub noise_var: f64,
    pub powers: Vec<f64>,
    /// UE whose SINR is evaluated.
    pub ue: usize,
    pub condition_cap: f64,
}

impl Scenario {
    /// Equal power `1/K`, default condition cap, UE 0.
    pub fn equal_power(
        topology: OscillatorTopology,
        users: usize,
        quality: EstimateQuality,
        phase: PhaseNoiseParams,
        noise_var: f64,
    ) -> Result<Self> {
        Self {
            topology,
            users,
            quality,
            phase,
            coherence: phase.tau + 1,
            noise_var,
            powers: vec![1.0 / users as f64; users],
            ue: 0,
            condition_cap: DEFAULT_CONDITION_CAP,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.users == 0 || self.users > self.topology.antennas() {
            return Err(Error::config(
                "users",
                format!("need 1 <= K <= M = {}, got {}", self.topology.antennas(), self.users),
            ));
        }
        if self.powers.len() != self.users {
            return Err(Error::config(
                "powers",
                format!("{} entries for {} users", self.powers.len(), self.users),
            ));
        }
        if self.powers.iter().any(|p| !(p.is_finite() && *p >= 0.0))
            || self.powers.iter().sum::<f64>() <= 0.0
        {
            return Err(Error::config("powers", "must be nonnegative with a positive sum"));
        }
        if !(self.noise_var >= 0.0 && self.noise_var.is_finite()) {
            return Err(Error::config("noise_var", format!("must be finite and >= 0, got {}", self.noise_var)));
        }
        if self.phase.tau >= self.coherence {
            return Err(Error::config(
                "tau",
                format!("tau = {} must be smaller than the coherence length {}", self.phase.tau, self.coherence),
            ));
        }
        if self.ue >= self.users {
            return Err(Error::config("ue", format!("index {} out of range 0..{}", self.ue, self.users)));
        }
        if !(self.condition_cap > 1.0) {
            return Err(Error::config("condition_cap", "must exceed 1"));
        }
        Ok(self)
    }

    pub fn antennas(&self) -> usize {
        self.topology.antennas()
    }

    pub fn oscillators(&self) -> usize {
        self.topology.oscillators()
    }

    pub fn beta(&self) -> f64 {
        self.antennas() as f64 / self.users as f64
    }

    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }

    /// `E|T_PN|²` for this topology and BS phase noise.
    pub fn e_tpn2(&self) -> f64 {
        t_pn_second_moment(self.oscillators(), self.phase.tau, self.phase.sigma2_bs)
            .expect("validated topology")
    }

    /// Effective CSI quality `q0 · E|T_PN|²`.
    pub fn q_eff(&self) -> f64 {
        self.quality.q0 * self.e_tpn2()
    }

    pub fn asymptotic(&self, regularization: Regularization) -> Result<AsymptoticParams> {
        AsymptoticParams::new(regularization, self.antennas(), self.powers.clone())
    }
}
