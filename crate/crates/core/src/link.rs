//! Downlink signal model and Monte-Carlo estimation of the effective SINR.
//!
//! UE `k` receives `y_k = h_kᵀ Θ_{τ,k} G s + w_k`. Since `G` already carries
//! `P^{1/2}`, the coefficient of `s_k` is `ζ_sig = h_kᵀ Θ_{τ,k} g_k` and the
//! interferers contribute `ζ_int = (h_kᵀ Θ_{τ,k} g_{k1})_{k1≠k}`.
//!
//! The effective SINR averages `|ζ_sig|²` and `‖ζ_int‖²` jointly over
//! channel, estimation-noise and phase draws. Realization `i` draws from its
//! own stream `(seed, i)`, results are collected by index and summed in that
//! order, so the estimate does not depend on the worker count.

use faer::{c64, Mat};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::channel::{draw_channel, synthesize_estimate, ChannelPair};
use crate::error::{Error, Result};
use crate::phase_noise::{Instant, OscillatorTopology, PhaseTrace};
use crate::precoding::{build, PrecoderKind, PrecoderMatrix};
use crate::rng::{complex_normal, stream_rng};
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq)]
pub struct SignalDecomposition {
    pub zeta_sig: c64,
    pub zeta_int: Vec<c64>,
    pub noise_var: f64,
}

impl SignalDecomposition {
    pub fn sig_power(&self) -> f64 {
        self.zeta_sig.norm_sqr()
    }

    pub fn int_power(&self) -> f64 {
        self.zeta_int.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Instantaneous SINR of this draw.
    pub fn sinr(&self) -> f64 {
        self.sig_power() / (self.int_power() + self.noise_var)
    }
}

/// Row vector `h_kᵀ Θ_{τ,k} G`: the gains of all `K` streams at UE `k`.
pub fn stream_gains(
    channel: &ChannelPair,
    precoder: &PrecoderMatrix,
    trace: &PhaseTrace,
    topology: &OscillatorTopology,
    ue: usize,
) -> Result<Vec<c64>> {
    let (users, antennas) = (channel.users(), channel.antennas());
    if precoder.g.nrows() != antennas || precoder.g.ncols() != users {
        return Err(Error::Shape(format!(
            "precoder is {}x{}, channel is {users}x{antennas}",
            precoder.g.nrows(),
            precoder.g.ncols()
        )));
    }
    let theta = trace.theta(ue, Instant::Data, topology)?;
    let row: Vec<c64> = (0..antennas).map(|m| channel.h[(ue, m)] * theta[m]).collect();
    Ok((0..users)
        .map(|j| (0..antennas).map(|m| row[m] * precoder.g[(m, j)]).sum())
        .collect())
}

/// Splits the received signal at UE `ue` into desired and interfering gains.
pub fn decompose(
    channel: &ChannelPair,
    precoder: &PrecoderMatrix,
    trace: &PhaseTrace,
    topology: &OscillatorTopology,
    ue: usize,
    noise_var: f64,
) -> Result<SignalDecomposition> {
    let gains = stream_gains(channel, precoder, trace, topology, ue)?;
    let zeta_sig = gains[ue];
    let zeta_int = gains
        .into_iter()
        .enumerate()
        .filter(|(j, _)| *j != ue)
        .map(|(_, z)| z)
        .collect();
    Ok(SignalDecomposition {
        zeta_sig,
        zeta_int,
        noise_var,
    })
}

/// Symbol alphabet for waveform-level transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constellation {
    /// Circularly symmetric unit-power Gaussian.
    Gaussian,
    /// Unit-power QPSK.
    Qpsk,
}

pub fn draw_symbols<R: Rng + ?Sized>(n: usize, constellation: Constellation, rng: &mut R) -> Vec<c64> {
    match constellation {
        Constellation::Gaussian => (0..n).map(|_| complex_normal(rng)).collect(),
        Constellation::Qpsk => {
            let a = std::f64::consts::FRAC_1_SQRT_2;
            (0..n)
                .map(|_| {
                    let re = if rng.random::<bool>() { a } else { -a };
                    let im = if rng.random::<bool>() { a } else { -a };
                    c64::new(re, im)
                })
                .collect()
        }
    }
}

/// Complex AWGN samples of variance `noise_var`.
pub fn draw_noise<R: Rng + ?Sized>(n: usize, noise_var: f64, rng: &mut R) -> Vec<c64> {
    let s = (noise_var / 2.0).sqrt();
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            c64::new(re * s, im * s)
        })
        .collect()
}

/// Received samples `y_k = h_kᵀ Θ_{τ,k} G s + w_k` for every UE.
pub fn transmit_symbols(
    precoder: &PrecoderMatrix,
    symbols: &[c64],
    channel: &ChannelPair,
    trace: &PhaseTrace,
    topology: &OscillatorTopology,
    noise: &[c64],
) -> Result<Vec<c64>> {
    let users = channel.users();
    if symbols.len() != users || noise.len() != users {
        return Err(Error::Shape(format!(
            "{} symbols and {} noise samples for {users} users",
            symbols.len(),
            noise.len()
        )));
    }
    let antennas = channel.antennas();
    let x: Vec<c64> = (0..antennas)
        .map(|m| (0..users).map(|j| precoder.g[(m, j)] * symbols[j]).sum())
        .collect();
    (0..users)
        .map(|k| {
            let theta = trace.theta(k, Instant::Data, topology)?;
            let s: c64 = (0..antennas).map(|m| channel.h[(k, m)] * theta[m] * x[m]).sum();
            Ok(s + noise[k])
        })
        .collect()
}

/// Channel, estimate and phases of one Monte-Carlo draw.
#[derive(Debug, Clone)]
pub struct Realization {
    pub channel: ChannelPair,
    pub trace: PhaseTrace,
}

impl Realization {
    /// Draws `H`, then the phase trace, then the estimation noise.
    pub fn draw<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Result<Self> {
        let h = draw_channel(scenario.antennas(), scenario.users, rng);
        let trace = PhaseTrace::simulate(&scenario.topology, scenario.users, &scenario.phase, rng);
        let channel = synthesize_estimate(h, &trace, &scenario.topology, scenario.quality, rng)?;
        Ok(Self { channel, trace })
    }

    /// Signal and interference power for one precoder; `None` when zero-forcing
    /// rejects an ill-conditioned draw.
    pub fn powers(&self, scenario: &Scenario, kind: PrecoderKind) -> Result<Option<(f64, f64)>> {
        let g = match build(kind, self.channel.h_hat.as_ref(), &scenario.powers, scenario.condition_cap) {
            Ok(g) => g,
            Err(Error::SingularChannel { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let d = decompose(&self.channel, &g, &self.trace, &scenario.topology, scenario.ue, scenario.noise_var)?;
        Ok(Some((d.sig_power(), d.int_power())))
    }
}

/// Averaged powers and the resulting effective SINR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrEstimate {
    pub mean_sig_power: f64,
    pub mean_int_power: f64,
    pub noise_var: f64,
    pub sinr: f64,
    /// Accepted realizations.
    pub n_realizations: usize,
    /// Zero-forcing draws rejected by the condition cap.
    pub rejected: usize,
    /// Delta-method standard error of `sinr`.
    pub std_error: f64,
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Combines per-realization `(signal, interference)` powers, taken in order.
pub fn summarize(outcomes: &[Option<(f64, f64)>], noise_var: f64) -> Result<SinrEstimate> {
    let total = outcomes.len();
    let rejected = outcomes.iter().filter(|o| o.is_none()).count();
    if rejected * 1000 > total {
        return Err(Error::RejectionRate { rejected, total });
    }
    let n = total - rejected;
    if n == 0 {
        return Err(Error::Numerical("no accepted realizations".into()));
    }
    let (mut s, mut i) = (KahanSum::default(), KahanSum::default());
    for (a, b) in outcomes.iter().flatten() {
        s.add(*a);
        i.add(*b);
    }
    let nf = n as f64;
    let (ms, mi) = (s.value() / nf, i.value() / nf);
    let (mut vss, mut vii, mut vsi) = (KahanSum::default(), KahanSum::default(), KahanSum::default());
    for (a, b) in outcomes.iter().flatten() {
        let (da, db) = (a - ms, b - mi);
        vss.add(da * da);
        vii.add(db * db);
        vsi.add(da * db);
    }
    let denom = if n > 1 { nf - 1.0 } else { 1.0 };
    let (var_s, var_i, cov) = (vss.value() / denom, vii.value() / denom, vsi.value() / denom);
    let d = mi + noise_var;
    let sinr = ms / d;
    let (gs, gi) = (1.0 / d, -ms / (d * d));
    let var = (gs * gs * var_s + gi * gi * var_i + 2.0 * gs * gi * cov) / nf;
    Ok(SinrEstimate {
        mean_sig_power: ms,
        mean_int_power: mi,
        noise_var,
        sinr,
        n_realizations: n,
        rejected,
        std_error: var.max(0.0).sqrt(),
    })
}

/// Monte-Carlo driver with a dedicated worker pool.
pub struct Simulator {
    pool: rayon::ThreadPool,
    pub realizations: usize,
    pub seed: u64,
}

impl Simulator {
    pub fn new(realizations: usize, seed: u64, parallelism: usize) -> Result<Self> {
        if realizations == 0 {
            return Err(Error::config("realizations", "must be at least 1"));
        }
        if parallelism == 0 {
            return Err(Error::config("parallelism", "must be at least 1"));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))?;
        Ok(Self {
            pool,
            realizations,
            seed,
        })
    }

    /// Raw `(signal, interference)` powers per realization and precoder.
    /// Every precoder sees the same draws.
    pub fn outcomes(&self, scenario: &Scenario, kinds: &[PrecoderKind]) -> Result<Vec<Vec<Option<(f64, f64)>>>> {
        let rows: Result<Vec<Vec<Option<(f64, f64)>>>> = self.pool.install(|| {
            (0..self.realizations)
                .into_par_iter()
                .map(|i| {
                    let mut rng = stream_rng(self.seed, &[i as u64]);
                    let r = Realization::draw(scenario, &mut rng)?;
                    kinds.iter().map(|k| r.powers(scenario, *k)).collect()
                })
                .collect()
        });
        let rows = rows?;
        Ok((0..kinds.len())
            .map(|j| rows.iter().map(|r| r[j]).collect())
            .collect())
    }

    pub fn empirical_sinr_many(&self, scenario: &Scenario, kinds: &[PrecoderKind]) -> Result<Vec<SinrEstimate>> {
        self.outcomes(scenario, kinds)?
            .iter()
            .map(|o| summarize(o, scenario.noise_var))
            .collect()
    }

    pub fn empirical_sinr(&self, scenario: &Scenario, kind: PrecoderKind) -> Result<SinrEstimate> {
        Ok(self.empirical_sinr_many(scenario, &[kind])?.remove(0))
    }
}

/// One-shot convenience over [`Simulator`].
pub fn empirical_sinr(
    scenario: &Scenario,
    kind: PrecoderKind,
    realizations: usize,
    seed: u64,
    parallelism: usize,
) -> Result<SinrEstimate> {
    Simulator::new(realizations, seed, parallelism)?.empirical_sinr(scenario, kind)
}

/// Dense `K × K` matrix of stream gains at every UE, row `k` for UE `k`.
pub fn gain_matrix(
    channel: &ChannelPair,
    precoder: &PrecoderMatrix,
    trace: &PhaseTrace,
    topology: &OscillatorTopology,
) -> Result<Mat<c64>> {
    let k = channel.users();
    let mut out = Mat::<c64>::zeros(k, k);
    for u in 0..k {
        for (j, z) in stream_gains(channel, precoder, trace, topology, u)?.into_iter().enumerate() {
            out[(u, j)] = z;
        }
    }
    Ok(out)
}
