//! Downlink precoding for massive MIMO with oscillator phase noise.
//!
//! Large-system closed forms for RZF, ZF and MF ([`analytics`]), the
//! Monte-Carlo link simulator they are checked against ([`link`]), rate bounds
//! ([`rates`]), numerical checks of the supporting lemmas ([`lemmas`]), and the
//! sweep and preset machinery used by the `pnmimo` binary.

pub mod analytics;
pub mod channel;
pub mod config;
pub mod error;
pub mod lemmas;
pub mod linalg;
pub mod link;
pub mod output;
pub mod phase_noise;
pub mod precoding;
pub mod presets;
pub mod rates;
pub mod rmt;
pub mod rng;
pub mod scenario;
pub mod sweep;

pub use analytics::SinrPrediction;
pub use channel::{ChannelPair, EstimateQuality};
pub use config::{ConfigFile, PrecoderSpec, SnrConvention, SweepAxis, SystemConfig};
pub use error::{Error, ErrorClass, Result};
pub use faer::{c64, Mat, MatRef};
pub use link::{SignalDecomposition, SinrEstimate};
pub use phase_noise::{OscillatorTopology, PhaseNoiseParams};
pub use precoding::{PrecoderKind, PrecoderMatrix};
pub use rates::{RateDefinition, RateReport};
pub use rmt::{AsymptoticParams, DeterministicEquivalents, Regularization};
pub use scenario::Scenario;
pub use sweep::{RunOptions, SweepResultRow};
