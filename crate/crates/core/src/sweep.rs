//! Sweep execution: one result row per (sweep point, precoder).

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analytics::{optimal_regularization, optimal_regularization_grid, predict};
use crate::config::{ConfigFile, PrecoderSpec, SnrConvention, SweepAxis, SweepSpec, SystemConfig};
use crate::error::{Error, Result};
use crate::link::Simulator;
use crate::precoding::PrecoderKind;
use crate::rates::{RateDefinition, RateReport};

/// Resolution of the optional exhaustive α search.
pub const ALPHA_GRID_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResultRow {
    pub sweep: String,
    pub point: usize,
    pub axis: SweepAxis,
    pub value: f64,
    pub antennas: usize,
    pub users: usize,
    pub oscillators: usize,
    pub q0: f64,
    pub sigma_deg_bs: f64,
    pub sigma_deg_ue: f64,
    pub tau: u64,
    pub coherence: u64,
    pub snr_db: Option<f64>,
    pub snr_convention: SnrConvention,
    pub noise_var: f64,
    pub ue: usize,
    pub power: f64,
    pub total_power: f64,
    pub condition_cap: f64,
    pub realizations: usize,
    pub seed: u64,
    pub precoder: String,
    pub alpha: Option<f64>,
    pub alpha_grid: Option<f64>,
    pub q_eff: f64,
    pub analytical_sinr: f64,
    pub empirical_sinr: Option<f64>,
    pub std_error: Option<f64>,
    pub rejected: Option<usize>,
    pub rate_awgn_bound: f64,
    pub rate_lapidoth: Option<f64>,
    pub rate_min: f64,
    pub rate_ergodic: f64,
    pub delta_pn: u8,
    pub rate_definition: RateDefinition,
    pub analytical_rate: f64,
    pub empirical_rate: Option<f64>,
    /// Seconds spent on the sweep point, only when timing is requested.
    pub wall_time: Option<f64>,
}

/// Command-line overrides applied on top of every sweep's parameters.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub realizations: Option<usize>,
    pub parallelism: Option<usize>,
    pub empirical: Option<bool>,
    pub timing: bool,
}

impl RunOptions {
    pub fn apply(&self, sys: &mut SystemConfig) {
        if let Some(s) = self.seed {
            sys.seed = s;
        }
        if let Some(r) = self.realizations {
            sys.realizations = r;
        }
        if let Some(p) = self.parallelism {
            sys.parallelism = p;
        }
        if let Some(e) = self.empirical {
            sys.empirical = e;
        }
    }
}

fn point_rows(
    spec: &SweepSpec,
    point: usize,
    value: f64,
    sim: Option<&Simulator>,
    timing: bool,
) -> Result<Vec<SweepResultRow>> {
    let started = Instant::now();
    let sys = spec.axis.apply(&spec.system, value)?;
    let resolved = sys.resolve()?;
    let scn = &resolved.scenario;
    let alpha_grid = if sys.alpha_grid_search {
        Some(optimal_regularization_grid(scn, ALPHA_GRID_STEP)?)
    } else {
        None
    };
    let kinds = resolved
        .precoders
        .iter()
        .map(|p| {
            Ok(match p {
                PrecoderSpec::RzfOptimal => PrecoderKind::Rzf {
                    alpha: optimal_regularization(scn)?,
                },
                PrecoderSpec::RzfFixed(alpha) => PrecoderKind::Rzf { alpha: *alpha },
                PrecoderSpec::Zf => PrecoderKind::Zf,
                PrecoderSpec::Mf => PrecoderKind::Mf,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let empirical = match sim {
        Some(sim) => Some(sim.empirical_sinr_many(scn, &kinds)?),
        None => None,
    };
    let (s2_bs, s2_ue) = (scn.phase.sigma2_bs, scn.phase.sigma2_ue);
    let osc = scn.oscillators();
    let mut rows = Vec::with_capacity(kinds.len());
    for (j, (spec_p, kind)) in resolved.precoders.iter().zip(&kinds).enumerate() {
        let pred = predict(scn, *kind)?;
        let rates = RateReport::new(pred.sinr, scn.phase.tau, s2_ue, s2_bs, osc);
        let est = empirical.as_ref().map(|e| e[j]);
        let empirical_rate = est.map(|e| {
            sys.rate
                .select(&RateReport::new(e.sinr, scn.phase.tau, s2_ue, s2_bs, osc))
        });
        rows.push(SweepResultRow {
            sweep: spec.name.clone(),
            point,
            axis: spec.axis,
            value,
            antennas: scn.antennas(),
            users: scn.users,
            oscillators: osc,
            q0: scn.quality.q0,
            sigma_deg_bs: resolved.sigma_deg_bs,
            sigma_deg_ue: resolved.sigma_deg_ue,
            tau: scn.phase.tau,
            coherence: scn.coherence,
            snr_db: resolved.snr_db,
            snr_convention: sys.snr_convention,
            noise_var: scn.noise_var,
            ue: scn.ue,
            power: scn.powers[scn.ue],
            total_power: scn.total_power(),
            condition_cap: scn.condition_cap,
            realizations: if sim.is_some() { sys.realizations } else { 0 },
            seed: sys.seed,
            precoder: spec_p.to_string(),
            alpha: kind.alpha(),
            alpha_grid: if matches!(kind, PrecoderKind::Rzf { .. }) { alpha_grid } else { None },
            q_eff: pred.q_eff,
            analytical_sinr: pred.sinr,
            empirical_sinr: est.map(|e| e.sinr),
            std_error: est.map(|e| e.std_error),
            rejected: est.map(|e| e.rejected),
            rate_awgn_bound: rates.rate_awgn_bound,
            rate_lapidoth: rates.rate_lapidoth,
            rate_min: rates.rate_min,
            rate_ergodic: rates.rate_ergodic,
            delta_pn: rates.delta_pn,
            rate_definition: sys.rate,
            analytical_rate: sys.rate.select(&rates),
            empirical_rate,
            wall_time: None,
        });
    }
    if timing {
        let t = started.elapsed().as_secs_f64();
        for r in &mut rows {
            r.wall_time = Some(t);
        }
    }
    Ok(rows)
}

/// Runs one sweep. Realizations are seeded by index from the master seed, so
/// the table does not depend on the worker count.
pub fn run_sweep(spec: &SweepSpec, options: &RunOptions) -> Result<Vec<SweepResultRow>> {
    let mut spec = spec.clone();
    options.apply(&mut spec.system);
    spec.validate()?;
    let sim = if spec.system.empirical {
        Some(Simulator::new(
            spec.system.realizations,
            spec.system.seed,
            spec.system.parallelism,
        )?)
    } else {
        None
    };
    let mut rows = Vec::new();
    for (i, v) in spec.values.iter().enumerate() {
        rows.extend(point_rows(&spec, i, *v, sim.as_ref(), options.timing)?);
    }
    Ok(rows)
}

/// Runs every sweep of a config file in order.
pub fn run_config(config: &ConfigFile, options: &RunOptions) -> Result<Vec<SweepResultRow>> {
    if config.sweeps.is_empty() {
        return Err(Error::config("sweep", "the config defines no [[sweep]] sections"));
    }
    let mut rows = Vec::new();
    for s in &config.sweeps {
        rows.extend(run_sweep(s, options)?);
    }
    Ok(rows)
}
