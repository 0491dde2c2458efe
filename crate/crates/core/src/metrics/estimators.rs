use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::{Constellation, MetricsError};

/// Achievable-rate estimator over aligned (transmitted, received) symbols.
pub trait RateEstimator: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Bits per 2D symbol.
    fn estimate(&self, tx: &[Complex64], rx: &[Complex64], constellation: &Constellation) -> Result<f64, MetricsError>;
}

#[derive(Debug, Clone)]
pub struct EstimatorRegistry {
    estimators: BTreeMap<&'static str, Arc<dyn RateEstimator>>,
}

impl EstimatorRegistry {
    pub fn empty() -> Self {
        Self {
            estimators: BTreeMap::new(),
        }
    }

    /// `mi` (symbol-wise) and `gmi` (bit-metric).
    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register(Arc::new(GaussianMi));
        reg.register(Arc::new(GaussianGmi));
        reg
    }

    pub fn register(&mut self, estimator: Arc<dyn RateEstimator>) -> Option<Arc<dyn RateEstimator>> {
        self.estimators.insert(estimator.name(), estimator)
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn RateEstimator>, MetricsError> {
        self.estimators
            .get(name)
            .cloned()
            .ok_or_else(|| MetricsError::UnknownEstimator {
                name: name.to_string(),
                known: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.estimators.keys().copied().collect()
    }
}

impl Default for EstimatorRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Shared preparation: the noise variance fit and each transmitted point index.
struct Prepared {
    sigma2: f64,
    tx_index: Vec<usize>,
    log_prior: Vec<f64>,
}

fn prepare(tx: &[Complex64], rx: &[Complex64], c: &Constellation) -> Result<Prepared, MetricsError> {
    if tx.len() != rx.len() {
        return Err(MetricsError::Length(tx.len(), rx.len()));
    }
    if tx.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = tx.len() as f64;
    let sigma2 = tx.iter().zip(rx).map(|(x, y)| (y - x).norm_sqr()).sum::<f64>() / n;
    let signal = tx.iter().map(|x| x.norm_sqr()).sum::<f64>() / n;
    // regularizes the noiseless limit
    let sigma2 = sigma2.max(1e-12 * signal.max(f64::MIN_POSITIVE));
    Ok(Prepared {
        sigma2,
        tx_index: tx.iter().map(|&x| c.nearest(x)).collect(),
        log_prior: c.prior().iter().map(|p| p.ln()).collect(),
    })
}

/// Natural-log metrics `-|y - x_j|²/σ² + ln P(x_j)` for every point, and their log-sum.
fn point_metrics(y: Complex64, c: &Constellation, prep: &Prepared, out: &mut [f64]) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for ((m, p), lp) in out.iter_mut().zip(c.points()).zip(&prep.log_prior) {
        *m = -(y - p).norm_sqr() / prep.sigma2 + lp;
        max = max.max(*m);
    }
    max + out.iter().map(|m| (m - max).exp()).sum::<f64>().ln()
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Symbol-wise mismatched mutual information with a circular Gaussian
/// auxiliary channel fitted to the trace:
/// `(1/N) Σ log2[q(y|x) / Σ_x' q(y|x') P(x')]`.
#[derive(Debug, Default, Clone, Copy)]
pub struct GaussianMi;

impl RateEstimator for GaussianMi {
    fn name(&self) -> &'static str {
        "mi"
    }

    fn estimate(&self, tx: &[Complex64], rx: &[Complex64], c: &Constellation) -> Result<f64, MetricsError> {
        let prep = prepare(tx, rx, c)?;
        let mut metrics = vec![0.0; c.points().len()];
        let mut total = 0.0;
        for (&y, &i) in rx.iter().zip(&prep.tx_index) {
            let lse = point_metrics(y, c, &prep, &mut metrics);
            total += metrics[i] - prep.log_prior[i] - lse;
        }
        Ok(total / tx.len() as f64 / LN_2)
    }
}

/// Bit-metric rate `H(X) - Σ_i H(B_i | Y)` with the same auxiliary channel,
/// clamped at zero.
#[derive(Debug, Default, Clone, Copy)]
pub struct GaussianGmi;

impl RateEstimator for GaussianGmi {
    fn name(&self) -> &'static str {
        "gmi"
    }

    fn estimate(&self, tx: &[Complex64], rx: &[Complex64], c: &Constellation) -> Result<f64, MetricsError> {
        let labels = c
            .labels()
            .ok_or_else(|| MetricsError::Constellation("bit-metric rate needs a labeled constellation".into()))?;
        let prep = prepare(tx, rx, c)?;
        let bits = c.bits_per_symbol();
        let mut metrics = vec![0.0; c.points().len()];
        let mut conditional = 0.0;
        for (&y, &i) in rx.iter().zip(&prep.tx_index) {
            let lse = point_metrics(y, c, &prep, &mut metrics);
            let sent = labels[i];
            for bit in 0..bits {
                let mask = 1 << bit;
                let matching = metrics
                    .iter()
                    .zip(labels)
                    .filter(|(_, &l)| (l & mask) == (sent & mask))
                    .map(|(m, _)| *m);
                conditional -= log_sum_exp(matching) - lse;
            }
        }
        let gmi = c.entropy() - conditional / tx.len() as f64 / LN_2;
        Ok(gmi.max(0.0))
    }
}
