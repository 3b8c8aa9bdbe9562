//! Built-in scenario presets.
//!
//! Each preset is a complete config file. It records which rate its source
//! figure reports and which SNR convention it uses.

use crate::config::{ConfigFile, SnrConvention};
use crate::error::{Error, Result};
use crate::rates::RateDefinition;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub aliases: &'static [&'static str],
    pub description: &'static str,
    pub rate: RateDefinition,
    pub snr_convention: SnrConvention,
    pub text: &'static str,
}

impl Preset {
    pub fn config(&self) -> Result<ConfigFile> {
        ConfigFile::parse(self.text)
    }

    pub fn matches(&self, name: &str) -> bool {
        self.name == name || self.aliases.contains(&name)
    }
}

macro_rules! go_snr {
    ($precoder:literal) => {
        concat!(
            "precoders = [\"",
            $precoder,
            "\"]\nsnr_db = 0.0\n",
            r#"
antennas = 50
users = 10
q0 = 0.9
sigma_deg_bs = 6.0
sigma_deg_ue = 6.0
tau = 10
coherence = 100
realizations = 2000

[[sweep]]
name = "m-osc-1"
axis = "snr"
values = [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]
oscillators = 1

[[sweep]]
name = "m-osc-2"
axis = "snr"
values = [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]
oscillators = 2

[[sweep]]
name = "m-osc-5"
axis = "snr"
values = [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]
oscillators = 5

[[sweep]]
name = "m-osc-50"
axis = "snr"
values = [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]
oscillators = 50
"#
        )
    };
}

macro_rules! scenario {
    ($snr:literal, $users:literal) => {
        concat!(
            "snr_db = ",
            $snr,
            "\nusers = ",
            $users,
            r#"
antennas = 50
oscillators = 5
q0 = 0.9
tau = 10
coherence = 100
snr_convention = "total"
precoders = ["rzf", "zf", "mf"]
empirical = false

[[sweep]]
name = "sigma-phi"
axis = "sigma-phi"
values = [0.5, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0, 15.0, 20.0, 25.0, 30.0]
"#
        )
    };
}

macro_rules! co_do {
    ($precoder:literal) => {
        concat!(
            "precoders = [\"",
            $precoder,
            "\"]\n",
            r#"
antennas = 25
users = 25
q0 = 0.9
sigma_deg_bs = 6.0
sigma_deg_ue = 6.0
tau = 25
coherence = 100
snr_db = 0.0
snr_convention = "total"
empirical = false
rate = "min-bound"

[[sweep]]
name = "co-0db"
axis = "beta"
values = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]
oscillators = "co"

[[sweep]]
name = "do-0db"
axis = "beta"
values = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]
oscillators = "do"

[[sweep]]
name = "co-40db"
axis = "beta"
values = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]
oscillators = "co"
snr_db = 40.0

[[sweep]]
name = "do-40db"
axis = "beta"
values = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]
oscillators = "do"
snr_db = 40.0
"#
        )
    };
}

const FIG5: &str = r#"
antennas = 200
users = 40
q0 = 0.9
sigma_deg_bs = 6.0
sigma_deg_ue = 6.0
tau = 10
coherence = 100
snr_db = 0.0
precoders = ["rzf"]
empirical = false
alpha_grid_search = true

[[sweep]]
name = "co"
axis = "snr"
values = [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]
oscillators = "co"

[[sweep]]
name = "do"
axis = "snr"
values = [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]
oscillators = "do"
"#;

const LTE: &str = r#"
antennas = 50
users = 25
q0 = 0.9
sigma_deg_bs = 0.06
sigma_deg_ue = 0.06
tau = 10000
coherence = 10001
snr_db = 0.0
snr_convention = "total"
precoders = ["rzf", "zf", "mf"]
empirical = false

[[sweep]]
name = "snr-0db"
axis = "m-osc"
values = [1.0, 2.0, 5.0, 10.0, 25.0, 50.0]

[[sweep]]
name = "snr-20db"
axis = "m-osc"
values = [1.0, 2.0, 5.0, 10.0, 25.0, 50.0]
snr_db = 20.0
"#;

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig2",
        aliases: &[],
        description: "optimized RZF, M=50, K=10, SNR sweep for M_osc in {1, 2, 5, 50}, closed form and Monte Carlo",
        rate: RateDefinition::Ergodic,
        snr_convention: SnrConvention::PerUser,
        text: go_snr!("rzf"),
    },
    Preset {
        name: "fig3",
        aliases: &[],
        description: "ZF, M=50, K=10, SNR sweep for M_osc in {1, 2, 5, 50}, closed form and Monte Carlo",
        rate: RateDefinition::Ergodic,
        snr_convention: SnrConvention::PerUser,
        text: go_snr!("zf"),
    },
    Preset {
        name: "fig4",
        aliases: &[],
        description: "MF, M=50, K=10, SNR sweep for M_osc in {1, 2, 5, 50}, closed form and Monte Carlo",
        rate: RateDefinition::Ergodic,
        snr_convention: SnrConvention::PerUser,
        text: go_snr!("mf"),
    },
    Preset {
        name: "fig5",
        aliases: &[],
        description: "optimal RZF regularization vs SNR, M=200, K=40, CO and DO, closed form next to exhaustive grid search",
        rate: RateDefinition::Ergodic,
        snr_convention: SnrConvention::PerUser,
        text: FIG5,
    },
    Preset {
        name: "fig6a",
        aliases: &["scenario-a"],
        description: "RZF/ZF/MF vs phase-noise level, M=50, M_osc=5, SNR 0 dB, beta=2",
        rate: RateDefinition::Ergodic,
        snr_convention: SnrConvention::Total,
        text: scenario!("0.0", "25"),
    },
    Preset {
        name: "fig6b",
        aliases: &["scenario-b"],
        description: "RZF/ZF/MF vs phase-noise level, M=50, M_osc=5, SNR 20 dB, beta=2",
        rate: RateDefinition::Ergodic,
        snr_convention: SnrConvention::Total,
        text: scenario!("20.0", "25"),
    },
    Preset {
        name: "fig6c",
        aliases: &["scenario-c"],
        description: "RZF/ZF/MF vs phase-noise level, M=50, M_osc=5, SNR 0 dB, beta=5",
        rate: RateDefinition::Ergodic,
        snr_convention: SnrConvention::Total,
        text: scenario!("0.0", "10"),
    },
    Preset {
        name: "fig6d",
        aliases: &["scenario-d"],
        description: "RZF/ZF/MF vs phase-noise level, M=50, M_osc=5, SNR 20 dB, beta=5",
        rate: RateDefinition::Ergodic,
        snr_convention: SnrConvention::Total,
        text: scenario!("20.0", "10"),
    },
    Preset {
        name: "lte",
        aliases: &[],
        description: "high-quality oscillators (0.06 deg, tau=1e4), M=50, beta=2, M_osc sweep at SNR 0 and 20 dB",
        rate: RateDefinition::Ergodic,
        snr_convention: SnrConvention::Total,
        text: LTE,
    },
    Preset {
        name: "fig7",
        aliases: &[],
        description: "optimized RZF, CO vs DO over beta with K=tau=25, SNR 0 and 40 dB",
        rate: RateDefinition::MinBound,
        snr_convention: SnrConvention::Total,
        text: co_do!("rzf"),
    },
    Preset {
        name: "fig8",
        aliases: &[],
        description: "MF, CO vs DO over beta with K=tau=25, SNR 0 and 40 dB",
        rate: RateDefinition::MinBound,
        snr_convention: SnrConvention::Total,
        text: co_do!("mf"),
    },
];

pub fn list_presets() -> &'static [Preset] {
    PRESETS
}

pub fn preset(name: &str) -> Result<&'static Preset> {
    PRESETS
        .iter()
        .find(|p| p.matches(name))
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))
}
