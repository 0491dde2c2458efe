//! Transmitter and receiver DSP for digital subcarrier multiplexing.

mod cdc;
mod dscm;
mod rrc;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::ops::Range;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

pub use cdc::{apply_dispersion, cd_compensate};
pub use dscm::{align_one_tap, rx_demultiplex, tx_multiplex};
pub use rrc::{rrc_filter, rrc_response};

#[derive(Debug, Error)]
pub enum DspError {
    #[error("spectral overflow: occupied band reaches {edge_hz:.4e} Hz but Nyquist is {nyquist_hz:.4e} Hz")]
    SpectralOverflow { edge_hz: f64, nyquist_hz: f64 },
    #[error("invalid transmitter configuration: {0}")]
    InvalidConfig(String),
    #[error("length mismatch: {0}")]
    Length(String),
    #[error("degenerate reference: transmitted symbols carry no energy")]
    Degenerate,
    #[error("waveform dump failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Dual-polarization complex baseband samples.
///
/// `payload` marks the samples that carry symbols; the guard samples on
/// either side hold pulse tails and are excluded from power measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
    sample_rate: f64,
    payload: Range<usize>,
}

impl Waveform {
    pub fn new(x: Vec<Complex64>, y: Vec<Complex64>, sample_rate: f64) -> Self {
        let len = x.len();
        Self::with_payload(x, y, sample_rate, 0..len)
    }

    pub fn with_payload(
        x: Vec<Complex64>,
        y: Vec<Complex64>,
        sample_rate: f64,
        payload: Range<usize>,
    ) -> Self {
        assert_eq!(x.len(), y.len(), "polarizations must have equal length");
        assert!(sample_rate > 0.0, "sample rate must be positive");
        assert!(payload.end <= x.len(), "payload outside the waveform");
        Self {
            x,
            y,
            sample_rate,
            payload,
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn payload(&self) -> Range<usize> {
        self.payload.clone()
    }

    /// Mean of `|x|² + |y|²` over the payload.
    pub fn power(&self) -> f64 {
        let r = self.payload.clone();
        let sum: f64 = self.x[r.clone()]
            .iter()
            .chain(&self.y[r.clone()])
            .map(|s| s.norm_sqr())
            .sum();
        sum / r.len().max(1) as f64
    }

    /// Sum of `|x|² + |y|²` over all samples.
    pub fn energy(&self) -> f64 {
        self.x.iter().chain(&self.y).map(|s| s.norm_sqr()).sum()
    }

    pub fn scale(&mut self, factor: f64) {
        self.x.iter_mut().chain(self.y.iter_mut()).for_each(|s| *s *= factor);
    }

    /// Swaps the two polarizations.
    pub fn swapped(mut self) -> Self {
        std::mem::swap(&mut self.x, &mut self.y);
        self
    }

    /// Writes little-endian interleaved complex64 (`x0.re x0.im ... y0.re ...`,
    /// X block then Y block) plus a `<path>.json` sidecar.
    pub fn write_debug(&self, path: &Path) -> Result<(), DspError> {
        let mut out = BufWriter::new(File::create(path)?);
        for s in self.x.iter().chain(&self.y) {
            out.write_all(&(s.re as f32).to_le_bytes())?;
            out.write_all(&(s.im as f32).to_le_bytes())?;
        }
        out.flush()?;
        #[derive(Serialize)]
        struct Sidecar<'a> {
            sample_rate: f64,
            length: usize,
            polarization_order: [&'a str; 2],
            format: &'a str,
            payload_start: usize,
            payload_len: usize,
        }
        let sidecar = Sidecar {
            sample_rate: self.sample_rate,
            length: self.len(),
            polarization_order: ["X", "Y"],
            format: "complex64 little-endian, interleaved re/im, X block then Y block",
            payload_start: self.payload.start,
            payload_len: self.payload.len(),
        };
        let mut json_path = path.as_os_str().to_owned();
        json_path.push(".json");
        let text = serde_json::to_string_pretty(&sidecar).map_err(std::io::Error::other)?;
        std::fs::write(json_path, text)?;
        Ok(())
    }
}

/// How the configured subcarrier spacing is read.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubcarrierSpacing {
    /// Gap between adjacent spectral edges; centers sit `R(1+β) + guard` apart.
    Guard(f64),
    /// Center-to-center distance.
    Center(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TxConfig {
    pub n_subcarriers: usize,
    /// Symbol rate per subcarrier in Hz.
    pub symbol_rate: f64,
    pub rolloff: f64,
    pub spacing: SubcarrierSpacing,
    /// Simulation samples per symbol.
    pub sps: usize,
    /// RRC half-length in symbols.
    pub rrc_span: usize,
}

impl Default for TxConfig {
    fn default() -> Self {
        Self {
            n_subcarriers: 4,
            symbol_rate: 10e9,
            rolloff: 0.1,
            spacing: SubcarrierSpacing::Guard(2e9),
            sps: 8,
            rrc_span: 64,
        }
    }
}

impl TxConfig {
    pub fn sample_rate(&self) -> f64 {
        self.symbol_rate * self.sps as f64
    }

    /// Center-to-center subcarrier distance in Hz.
    pub fn center_spacing(&self) -> f64 {
        match self.spacing {
            SubcarrierSpacing::Guard(g) => self.symbol_rate * (1.0 + self.rolloff) + g,
            SubcarrierSpacing::Center(df) => df,
        }
    }

    /// Center frequency of zero-based subcarrier `i`: `(i + 1 - (N+1)/2) Δf`.
    pub fn center_frequency(&self, i: usize) -> f64 {
        (i as f64 + 1.0 - (self.n_subcarriers as f64 + 1.0) / 2.0) * self.center_spacing()
    }

    /// Highest occupied frequency magnitude.
    pub fn occupied_edge(&self) -> f64 {
        (0..self.n_subcarriers)
            .map(|i| self.center_frequency(i).abs())
            .fold(0.0, f64::max)
            + (1.0 + self.rolloff) * self.symbol_rate / 2.0
    }

    pub fn validate(&self) -> Result<(), DspError> {
        if self.n_subcarriers == 0 {
            return Err(DspError::InvalidConfig("tx.n_subcarriers must be at least 1".into()));
        }
        if !(self.symbol_rate > 0.0 && self.symbol_rate.is_finite()) {
            return Err(DspError::InvalidConfig("tx.symbol_rate_hz must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.rolloff) {
            return Err(DspError::InvalidConfig("tx.rolloff must lie in [0, 1]".into()));
        }
        if self.sps < 2 {
            return Err(DspError::InvalidConfig("tx.sps must be at least 2".into()));
        }
        if self.rrc_span < 8 {
            return Err(DspError::InvalidConfig("tx.rrc_span must be at least 8".into()));
        }
        let spacing_ok = match self.spacing {
            SubcarrierSpacing::Guard(g) => g >= 0.0 && g.is_finite(),
            SubcarrierSpacing::Center(df) => df > 0.0 && df.is_finite(),
        };
        if !spacing_ok {
            return Err(DspError::InvalidConfig("subcarrier spacing must be finite and non-negative".into()));
        }
        let nyquist = self.sample_rate() / 2.0;
        let edge = self.occupied_edge();
        if edge > nyquist {
            return Err(DspError::SpectralOverflow {
                edge_hz: edge,
                nyquist_hz: nyquist,
            });
        }
        Ok(())
    }
}

/// Smallest length `>= n` whose only prime factors are 2, 3 and 5.
pub fn fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}
