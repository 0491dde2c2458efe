//! Performance metrics: GSNR, information rates under a Gaussian auxiliary
//! channel, finite-length AIR and entropy helpers.

mod estimators;

use num_complex::Complex64;
use thiserror::Error;

pub use estimators::{EstimatorRegistry, GaussianGmi, GaussianMi, RateEstimator};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("length mismatch: {0} transmitted vs {1} received symbols")]
    Length(usize, usize),
    #[error("no symbols to evaluate")]
    Empty,
    #[error("constellation: {0}")]
    Constellation(String),
    #[error("unknown rate estimator {name:?} (known: {known})")]
    UnknownEstimator { name: String, known: String },
}

/// Per-subcarrier results, polarizations combined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubcarrierMetrics {
    pub gsnr_db: f64,
    pub mi_bits_per_2d: f64,
    pub air_n_bits_per_4d: f64,
    pub rate_loss_bits_per_amp: f64,
    pub n_symbols_used: usize,
}

impl SubcarrierMetrics {
    pub fn new(gsnr_db: f64, mi_bits_per_2d: f64, rate_loss_bits_per_amp: f64, n_symbols_used: usize) -> Self {
        Self {
            gsnr_db,
            mi_bits_per_2d,
            air_n_bits_per_4d: air_n(mi_bits_per_2d, rate_loss_bits_per_amp),
            rate_loss_bits_per_amp,
            n_symbols_used,
        }
    }
}

fn signal_and_residual(pairs: &[(&[Complex64], &[Complex64])]) -> Result<(f64, f64), MetricsError> {
    let mut signal = 0.0;
    let mut residual = 0.0;
    for (tx, rx) in pairs {
        if tx.len() != rx.len() {
            return Err(MetricsError::Length(tx.len(), rx.len()));
        }
        for (x, y) in tx.iter().zip(rx.iter()) {
            signal += x.norm_sqr();
            residual += (y - x).norm_sqr();
        }
    }
    Ok((signal, residual))
}

/// `10 log10(Σ|X|² / Σ|Y - X|²)` over one or more aligned symbol streams,
/// pooled. A zero residual yields `+∞`.
pub fn gsnr_pooled(pairs: &[(&[Complex64], &[Complex64])]) -> Result<f64, MetricsError> {
    let (signal, residual) = signal_and_residual(pairs)?;
    if signal == 0.0 {
        return Err(MetricsError::Empty);
    }
    if residual == 0.0 {
        log::warn!("zero residual distortion, reporting infinite GSNR");
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / residual).log10())
}

/// GSNR in dB of one aligned stream.
pub fn gsnr(tx: &[Complex64], rx: &[Complex64]) -> Result<f64, MetricsError> {
    gsnr_pooled(&[(tx, rx)])
}

/// Finite-length AIR in bits per 4D symbol: `2 (MI - 2 R_loss)`.
pub fn air_n(mi_bits_per_2d: f64, rate_loss_bits_per_amp: f64) -> f64 {
    2.0 * (mi_bits_per_2d - 2.0 * rate_loss_bits_per_amp)
}

/// Base-2 entropy of a probability vector; zero entries contribute nothing.
pub fn entropy_bits(probabilities: &[f64]) -> f64 {
    probabilities
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

/// Base-2 entropy of normalized counts.
pub fn empirical_entropy(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    assert!(total > 0, "at least one count must be positive");
    let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
    entropy_bits(&probs)
}

/// Finite constellation with a prior and optional per-point bit labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    prior: Vec<f64>,
    labels: Option<Vec<u32>>,
    bits_per_symbol: usize,
}

impl Constellation {
    pub fn new(points: Vec<Complex64>, prior: Vec<f64>) -> Result<Self, MetricsError> {
        if points.is_empty() || points.len() != prior.len() {
            return Err(MetricsError::Constellation("points and prior must be non-empty and equal in size".into()));
        }
        let total: f64 = prior.iter().sum();
        if prior.iter().any(|p| *p < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(MetricsError::Constellation(format!("prior must be a distribution (sums to {total})")));
        }
        Ok(Self {
            points,
            prior,
            labels: None,
            bits_per_symbol: 0,
        })
    }

    /// Square sign-magnitude QAM for probabilistic amplitude shaping.
    ///
    /// Each quadrature takes a level `±a` with probability `P(a)/2`. Labels
    /// per quadrature are the sign bit (1 for negative) followed by the
    /// binary-reflected Gray code of the amplitude index; the I label occupies
    /// the high bits. Labels are only attached when the alphabet size is a
    /// power of two.
    pub fn pas_qam(alphabet: &[u32], amplitude_prior: &[f64], scale: f64) -> Result<Self, MetricsError> {
        if alphabet.len() != amplitude_prior.len() || alphabet.is_empty() {
            return Err(MetricsError::Constellation("alphabet and prior differ in size".into()));
        }
        let (levels, level_prior, level_bits) = signed_levels(alphabet, amplitude_prior);
        let side = levels.len();
        let mut points = Vec::with_capacity(side * side);
        let mut prior = Vec::with_capacity(side * side);
        let mut labels = Vec::with_capacity(side * side);
        let quad_bits = 1 + alphabet.len().trailing_zeros() as usize;
        for i in 0..side {
            for q in 0..side {
                points.push(Complex64::new(levels[i], levels[q]) * scale);
                prior.push(level_prior[i] * level_prior[q]);
                labels.push((level_bits[i] << quad_bits) | level_bits[q]);
            }
        }
        let mut c = Self::new(points, prior)?;
        if alphabet.len().is_power_of_two() {
            c.labels = Some(labels);
            c.bits_per_symbol = 2 * quad_bits;
        }
        Ok(c)
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.prior)
    }

    /// Same constellation multiplied by `rotation`.
    pub fn rotated(&self, rotation: Complex64) -> Self {
        Self {
            points: self.points.iter().map(|p| p * rotation).collect(),
            ..self.clone()
        }
    }

    /// Index of the point nearest to `s`.
    pub fn nearest(&self, s: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (s - p).norm_sqr();
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }
}

/// Signed levels in ascending order with their probabilities and labels.
fn signed_levels(alphabet: &[u32], amplitude_prior: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<u32>) {
    let m = alphabet.len();
    let amp_bits = m.trailing_zeros();
    let mut levels = Vec::with_capacity(2 * m);
    let mut probs = Vec::with_capacity(2 * m);
    let mut labels = Vec::with_capacity(2 * m);
    for i in (0..m).rev() {
        levels.push(-f64::from(alphabet[i]));
        probs.push(amplitude_prior[i] / 2.0);
        labels.push((1 << amp_bits) | gray(i as u32));
    }
    for i in 0..m {
        levels.push(f64::from(alphabet[i]));
        probs.push(amplitude_prior[i] / 2.0);
        labels.push(gray(i as u32));
    }
    (levels, probs, labels)
}

fn gray(i: u32) -> u32 {
    i ^ (i >> 1)
}
