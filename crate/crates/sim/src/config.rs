//! Experiment configuration: a TOML file whose sections mirror the dotted
//! keys (`tx.sps`, `link.n_spans`, ...), plus the `quick` and `paper` presets.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use mdshape_core::dsp::{SubcarrierSpacing, TxConfig};
use mdshape_core::ess::{validate_alphabet, ShapingConfig};
use mdshape_core::fiber::LinkConfig;
use mdshape_core::mapper::{FrameDims, SchemeRegistry};
use mdshape_core::metrics::EstimatorRegistry;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Launch powers of the quick preset, in dBm.
pub const QUICK_POWERS_DBM: [f64; 3] = [-3.0, 1.0, 5.0];
pub const QUICK_SLOTS: usize = 2880;
pub const QUICK_STEPS_PER_SPAN: usize = 100;
pub const PAPER_SLOTS: usize = 13_500;
pub const PAPER_STEPS_PER_SPAN: usize = 800;

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapingSection {
    pub n: usize,
    pub k: usize,
    pub alphabet: Vec<u32>,
    /// Energy bound; the smallest admissible one when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_max: Option<u64>,
}

impl Default for ShapingSection {
    fn default() -> Self {
        Self {
            n: 360,
            k: 623,
            alphabet: vec![1, 3, 5, 7],
            e_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MappingSection {
    /// Scheme used by `sim point` when none is given.
    pub scheme: String,
    /// Time slots per frame.
    pub slots: usize,
}

impl Default for MappingSection {
    fn default() -> Self {
        Self {
            scheme: "16d".into(),
            slots: PAPER_SLOTS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpacingMode {
    Guard,
    Center,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TxSection {
    pub symbol_rate_hz: f64,
    pub n_subcarriers: usize,
    pub rolloff: f64,
    pub subcarrier_spacing_mode: SpacingMode,
    /// Gap between adjacent spectral edges in `guard` mode.
    pub guard_hz: f64,
    /// Center-to-center spacing in `center` mode.
    pub center_spacing_hz: f64,
    pub sps: usize,
    pub rrc_span: usize,
}

impl Default for TxSection {
    fn default() -> Self {
        Self {
            symbol_rate_hz: 10e9,
            n_subcarriers: 4,
            rolloff: 0.1,
            subcarrier_spacing_mode: SpacingMode::Guard,
            guard_hz: 2e9,
            center_spacing_hz: 13e9,
            sps: 8,
            rrc_span: 64,
        }
    }
}

impl TxSection {
    pub fn to_tx_config(&self) -> TxConfig {
        TxConfig {
            n_subcarriers: self.n_subcarriers,
            symbol_rate: self.symbol_rate_hz,
            rolloff: self.rolloff,
            spacing: match self.subcarrier_spacing_mode {
                SpacingMode::Guard => SubcarrierSpacing::Guard(self.guard_hz),
                SpacingMode::Center => SubcarrierSpacing::Center(self.center_spacing_hz),
            },
            sps: self.sps,
            rrc_span: self.rrc_span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSection {
    pub span_km: f64,
    pub n_spans: usize,
    pub alpha_db_km: f64,
    pub dispersion_ps_nm_km: f64,
    pub gamma_per_w_km: f64,
    pub edfa_gain_db: f64,
    pub edfa_nf_db: f64,
    pub steps_per_span: usize,
    pub reference_wavelength_nm: f64,
    pub noiseless: bool,
}

impl Default for LinkSection {
    fn default() -> Self {
        Self::from(&LinkConfig::default())
    }
}

impl From<&LinkConfig> for LinkSection {
    fn from(c: &LinkConfig) -> Self {
        Self {
            span_km: c.span_km,
            n_spans: c.n_spans,
            alpha_db_km: c.alpha_db_km,
            dispersion_ps_nm_km: c.dispersion_ps_nm_km,
            gamma_per_w_km: c.gamma_per_w_km,
            edfa_gain_db: c.edfa_gain_db,
            edfa_nf_db: c.edfa_nf_db,
            steps_per_span: c.steps_per_span,
            reference_wavelength_nm: c.wavelength_nm,
            noiseless: c.noiseless,
        }
    }
}

impl LinkSection {
    pub fn to_link_config(&self) -> LinkConfig {
        LinkConfig {
            span_km: self.span_km,
            n_spans: self.n_spans,
            alpha_db_km: self.alpha_db_km,
            dispersion_ps_nm_km: self.dispersion_ps_nm_km,
            gamma_per_w_km: self.gamma_per_w_km,
            edfa_gain_db: self.edfa_gain_db,
            edfa_nf_db: self.edfa_nf_db,
            steps_per_span: self.steps_per_span,
            wavelength_nm: self.reference_wavelength_nm,
            noiseless: self.noiseless,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    /// `mi` or `gmi`.
    pub estimator: String,
    /// Monte-Carlo sample size of the rate-loss estimate.
    pub rate_loss_amplitudes: usize,
    pub rate_loss_seed: u64,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self {
            estimator: "mi".into(),
            rate_loss_amplitudes: 1_000_000,
            rate_loss_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Total launch power of the channel (both polarizations, all subcarriers).
    pub power_dbm: Vec<f64>,
    pub schemes: Vec<String>,
    pub seeds: Vec<u64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            power_dbm: (0..=10).map(|i| -2.0 + 0.5 * f64::from(i)).collect(),
            schemes: vec!["2d".into(), "4d".into(), "16d".into()],
            seeds: vec![1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("results"),
        }
    }
}

/// Complete experiment description. Defaults are the reference operating
/// point: n = 360, k = 623, four subcarriers, 13 500 slots, 25 × 80 km.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub shaping: ShapingSection,
    pub mapping: MappingSection,
    pub tx: TxSection,
    pub link: LinkSection,
    pub metrics: MetricsSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Minutes-scale desk run.
    Quick,
    /// Full frame and step size; hours-scale.
    Paper,
}

impl FromStr for Preset {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "quick" => Ok(Preset::Quick),
            "paper" => Ok(Preset::Paper),
            other => Err(invalid("preset", format!("unknown preset '{other}' (expected quick or paper)"))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Quick => "quick",
            Preset::Paper => "paper",
        })
    }
}

impl ExperimentConfig {
    /// Parses and validates TOML text. Absent keys take their defaults.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration always serializes")
    }

    pub fn apply_preset(&mut self, preset: Preset) {
        match preset {
            Preset::Quick => {
                self.mapping.slots = QUICK_SLOTS;
                self.link.steps_per_span = QUICK_STEPS_PER_SPAN;
                self.sweep.power_dbm = QUICK_POWERS_DBM.to_vec();
            }
            Preset::Paper => {
                self.mapping.slots = PAPER_SLOTS;
                self.link.steps_per_span = PAPER_STEPS_PER_SPAN;
            }
        }
    }

    pub fn preset(preset: Preset) -> Self {
        let mut config = Self::default();
        config.apply_preset(preset);
        config
    }

    pub fn frame_dims(&self) -> FrameDims {
        FrameDims::new(self.tx.n_subcarriers, self.mapping.slots)
    }

    /// Cross-field validation with field-qualified messages. Building the
    /// shaping trellis is left to the experiment, so an unsatisfiable `k`
    /// surfaces there.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.shaping;
        validate_alphabet(&s.alphabet).map_err(|e| invalid("shaping.alphabet", e.to_string()))?;
        if s.n == 0 {
            return Err(invalid("shaping.n", "must be at least 1"));
        }
        if s.k == 0 {
            return Err(invalid("shaping.k", "must be at least 1"));
        }
        if let Some(e_max) = s.e_max {
            ShapingConfig::new(s.n, s.k, s.alphabet.clone(), e_max).map_err(|e| invalid("shaping.e_max", e.to_string()))?;
        }

        let tx = self.tx.to_tx_config();
        if !(0.0..=1.0).contains(&self.tx.rolloff) {
            return Err(invalid("tx.rolloff", format!("must lie in [0, 1], got {}", self.tx.rolloff)));
        }
        if self.tx.n_subcarriers == 0 {
            return Err(invalid("tx.n_subcarriers", "must be at least 1"));
        }
        tx.validate().map_err(|e| invalid("tx", e.to_string()))?;

        let dims = self.frame_dims();
        let min_slots = 2 * self.tx.rrc_span + 100;
        if self.mapping.slots < min_slots {
            return Err(invalid(
                "mapping.slots",
                format!("{} slots leave fewer than 100 after trimming {} per edge", self.mapping.slots, self.tx.rrc_span),
            ));
        }
        if dims.amplitudes() % s.n != 0 {
            return Err(invalid(
                "mapping.slots",
                format!(
                    "frame holds {} amplitudes, not a whole number of {}-amplitude blocks",
                    dims.amplitudes(),
                    s.n
                ),
            ));
        }
        let registry = SchemeRegistry::builtin();
        let check = |field: &str, name: &str| -> Result<(), ConfigError> {
            let scheme = registry.get(name).map_err(|e| invalid(field, e.to_string()))?;
            scheme.check_dims(&dims, s.n).map_err(|e| invalid(field, e.to_string()))
        };
        check("mapping.scheme", &self.mapping.scheme)?;
        for name in &self.sweep.schemes {
            check("sweep.schemes", name)?;
        }

        self.link
            .to_link_config()
            .validate()
            .map_err(|e| invalid("link", e.to_string()))?;

        EstimatorRegistry::builtin()
            .get(&self.metrics.estimator)
            .map_err(|e| invalid("metrics.estimator", e.to_string()))?;
        if self.metrics.rate_loss_amplitudes == 0 {
            return Err(invalid("metrics.rate_loss_amplitudes", "must be at least 1"));
        }

        if let Some(p) = self.sweep.power_dbm.iter().find(|p| !p.is_finite()) {
            return Err(invalid("sweep.power_dbm", format!("launch powers must be finite, got {p}")));
        }
        if self.sweep.schemes.is_empty() {
            return Err(invalid("sweep.schemes", "at least one scheme is required"));
        }
        if self.sweep.seeds.is_empty() {
            return Err(invalid("sweep.seeds", "at least one seed is required"));
        }
        Ok(())
    }
}
