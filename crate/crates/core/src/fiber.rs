//! Dual-polarization fiber link: Manakov split-step propagation per span,
//! followed by an EDFA that restores the span loss and adds ASE noise.
//!
//! Sign convention: the linear step multiplies the spectrum by
//! `exp(-αz/2) exp(j β₂/2 ω² z)` and the nonlinear step by
//! `exp(j γ 8/9 (|Ax|² + |Ay|²) z_eff)`. `cd_compensate` applies the
//! conjugate dispersion response.

use std::hash::{DefaultHasher, Hasher};
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::dsp::Waveform;
use crate::rng::SeedStreams;
use crate::units::{alpha_per_km, angular_frequencies, beta2_from_dispersion, db_to_linear, optical_frequency, PLANCK};

/// Manakov polarization-averaged nonlinear coefficient.
pub const MANAKOV_FACTOR: f64 = 8.0 / 9.0;

#[derive(Debug, Error)]
pub enum FiberError {
    #[error("invalid link configuration: {0}")]
    InvalidConfig(String),
    #[error("numerical overflow in span {span}, step {step}")]
    Overflow { span: usize, step: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub span_km: f64,
    pub n_spans: usize,
    pub alpha_db_km: f64,
    pub dispersion_ps_nm_km: f64,
    pub gamma_per_w_km: f64,
    pub edfa_gain_db: f64,
    pub edfa_nf_db: f64,
    pub steps_per_span: usize,
    pub wavelength_nm: f64,
    /// Amplifiers add no ASE.
    pub noiseless: bool,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            span_km: 80.0,
            n_spans: 25,
            alpha_db_km: 0.2,
            dispersion_ps_nm_km: 17.0,
            gamma_per_w_km: 1.3,
            edfa_gain_db: 16.0,
            edfa_nf_db: 4.5,
            steps_per_span: 800,
            wavelength_nm: 1550.0,
            noiseless: false,
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<(), FiberError> {
        let non_negative = [
            ("link.alpha_db_km", self.alpha_db_km),
            ("link.dispersion_ps_nm_km", self.dispersion_ps_nm_km),
            ("link.gamma_per_w_km", self.gamma_per_w_km),
        ];
        for (key, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(FiberError::InvalidConfig(format!("{key} must be finite and >= 0, got {v}")));
            }
        }
        let positive = [
            ("link.span_km", self.span_km),
            ("link.edfa_gain_db", self.edfa_gain_db),
            ("link.reference_wavelength_nm", self.wavelength_nm),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(FiberError::InvalidConfig(format!("{key} must be finite and > 0, got {v}")));
            }
        }
        if !self.edfa_nf_db.is_finite() {
            return Err(FiberError::InvalidConfig("link.edfa_nf_db must be finite".into()));
        }
        if self.steps_per_span == 0 {
            return Err(FiberError::InvalidConfig("link.steps_per_span must be at least 1".into()));
        }
        let mismatch = self.gain_mismatch_db();
        if mismatch.abs() > 1e-9 {
            log::warn!(
                "EDFA gain {} dB does not match span loss {} dB ({mismatch:+.3} dB per span)",
                self.edfa_gain_db,
                self.span_loss_db()
            );
        }
        Ok(())
    }

    pub fn span_loss_db(&self) -> f64 {
        self.alpha_db_km * self.span_km
    }

    /// Net gain per span in dB; zero for a transparent link.
    pub fn gain_mismatch_db(&self) -> f64 {
        self.edfa_gain_db - self.span_loss_db()
    }

    pub fn length_km(&self) -> f64 {
        self.span_km * self.n_spans as f64
    }

    /// Accumulated dispersion `D·L` in ps/nm.
    pub fn total_dispersion_ps_nm(&self) -> f64 {
        self.dispersion_ps_nm_km * self.length_km()
    }

    pub fn amplifier(&self) -> Amplifier {
        Amplifier {
            gain_db: self.edfa_gain_db,
            nf_db: (!self.noiseless).then_some(self.edfa_nf_db),
            wavelength_nm: self.wavelength_nm,
        }
    }
}

/// EDFA parameters. `nf_db = None` is the noiseless limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplifier {
    pub gain_db: f64,
    pub nf_db: Option<f64>,
    pub wavelength_nm: f64,
}

impl Amplifier {
    /// Single-sided ASE power spectral density per polarization (W/Hz):
    /// `(G - 1) h ν n_sp` with `n_sp = NF / 2`.
    pub fn ase_psd(&self) -> f64 {
        match self.nf_db {
            None => 0.0,
            Some(nf) => {
                let g = db_to_linear(self.gain_db);
                let n_sp = db_to_linear(nf) / 2.0;
                (g - 1.0) * PLANCK * optical_frequency(self.wavelength_nm) * n_sp
            }
        }
    }
}

/// Amplifies in place and adds circular Gaussian ASE over the full simulation
/// bandwidth. Returns a checksum of the noise samples drawn.
pub fn edfa<R: Rng>(w: &mut Waveform, amp: &Amplifier, rng: &mut R) -> u64 {
    w.scale(db_to_linear(amp.gain_db).sqrt());
    let mut hasher = DefaultHasher::new();
    if amp.nf_db.is_none() {
        return hasher.finish();
    }
    let noise_power = amp.ase_psd() * w.sample_rate();
    let sigma = (noise_power / 2.0).sqrt();
    for s in w.x.iter_mut().chain(w.y.iter_mut()) {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        hasher.write_u64(re.to_bits());
        hasher.write_u64(im.to_bits());
        *s += Complex64::new(re * sigma, im * sigma);
    }
    hasher.finish()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpanStats {
    /// Largest `|Ax|² + |Ay|²` seen at any nonlinear step.
    pub peak_power_w: f64,
    /// Σ over steps of `γ 8/9 P̄ z_eff` with the buffer mean power `P̄`.
    pub nonlinear_phase_rad: f64,
    pub steps: usize,
}

/// Diagnostics of one link traversal.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PropagationReport {
    pub span_peak_power_w: Vec<f64>,
    pub nonlinear_phase_rad: f64,
    pub steps: usize,
    /// Order-dependent combination of the per-span ASE checksums.
    pub ase_checksum: u64,
}

/// Reusable symmetric split-step solver for one span geometry and buffer size.
pub struct SplitStep {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    nl_coeff: f64,
    steps: usize,
}

impl SplitStep {
    pub fn new(cfg: &LinkConfig, len: usize, sample_rate: f64) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(len);
        let inv = planner.plan_fft_inverse(len);
        let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        let h = cfg.span_km / cfg.steps_per_span as f64;
        let alpha = alpha_per_km(cfg.alpha_db_km);
        let beta2 = beta2_from_dispersion(cfg.dispersion_ps_nm_km, cfg.wavelength_nm);
        let omega = angular_frequencies(len, sample_rate);
        // 1/len folds the unnormalized inverse FFT into every linear step
        let response = |z: f64| -> Vec<Complex64> {
            omega
                .iter()
                .map(|om| Complex64::from_polar((-alpha * z / 2.0).exp() / len as f64, 0.5 * beta2 * om * om * z))
                .collect()
        };
        // effective length of a step centered on the nonlinear evaluation point
        let z_eff = if alpha > 0.0 {
            2.0 / alpha * (alpha * h / 2.0).sinh()
        } else {
            h
        };
        Self {
            fwd,
            inv,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            half: response(h / 2.0),
            full: response(h),
            nl_coeff: cfg.gamma_per_w_km * MANAKOV_FACTOR * z_eff,
            steps: cfg.steps_per_span,
        }
    }

    /// Propagates one span in place.
    pub fn span(&mut self, w: &mut Waveform, span_index: usize) -> Result<SpanStats, FiberError> {
        let len = w.len();
        assert_eq!(len, self.half.len(), "solver built for a different buffer length");
        let mut stats = SpanStats {
            steps: self.steps,
            ..SpanStats::default()
        };
        self.fwd.process_with_scratch(&mut w.x, &mut self.scratch);
        self.fwd.process_with_scratch(&mut w.y, &mut self.scratch);
        mul(&mut w.x, &self.half);
        mul(&mut w.y, &self.half);
        for step in 0..self.steps {
            self.inv.process_with_scratch(&mut w.x, &mut self.scratch);
            self.inv.process_with_scratch(&mut w.y, &mut self.scratch);

            let mut peak = 0.0f64;
            let mut total = 0.0f64;
            for (a, b) in w.x.iter_mut().zip(w.y.iter_mut()) {
                let p = a.norm_sqr() + b.norm_sqr();
                peak = peak.max(p);
                total += p;
                let (sin, cos) = (self.nl_coeff * p).sin_cos();
                let rot = Complex64::new(cos, sin);
                *a *= rot;
                *b *= rot;
            }
            if !total.is_finite() {
                return Err(FiberError::Overflow { span: span_index, step });
            }
            stats.peak_power_w = stats.peak_power_w.max(peak);
            stats.nonlinear_phase_rad += self.nl_coeff * total / len as f64;

            self.fwd.process_with_scratch(&mut w.x, &mut self.scratch);
            self.fwd.process_with_scratch(&mut w.y, &mut self.scratch);
            let op = if step + 1 == self.steps { &self.half } else { &self.full };
            mul(&mut w.x, op);
            mul(&mut w.y, op);
        }
        self.inv.process_with_scratch(&mut w.x, &mut self.scratch);
        self.inv.process_with_scratch(&mut w.y, &mut self.scratch);
        Ok(stats)
    }
}

fn mul(buf: &mut [Complex64], op: &[Complex64]) {
    buf.iter_mut().zip(op).for_each(|(s, h)| *s *= h);
}

/// One fiber span without amplification.
pub fn ssfm_span(w: &Waveform, cfg: &LinkConfig) -> Result<(Waveform, SpanStats), FiberError> {
    cfg.validate()?;
    let mut out = w.clone();
    let stats = SplitStep::new(cfg, w.len(), w.sample_rate()).span(&mut out, 0)?;
    Ok((out, stats))
}

/// `n_spans` × (span, EDFA). Span `s` draws its ASE from substream
/// [`SeedStreams::ase`]`(s)` of `seed`.
pub fn propagate_link(
    w: &Waveform,
    cfg: &LinkConfig,
    seed: u64,
) -> Result<(Waveform, PropagationReport), FiberError> {
    cfg.validate()?;
    let streams = SeedStreams::new(seed);
    let mut out = w.clone();
    let mut report = PropagationReport::default();
    if cfg.n_spans == 0 {
        return Ok((out, report));
    }
    let amp = cfg.amplifier();
    let mut solver = SplitStep::new(cfg, w.len(), w.sample_rate());
    let mut checksum = DefaultHasher::new();
    for span in 0..cfg.n_spans {
        let stats = solver.span(&mut out, span)?;
        report.span_peak_power_w.push(stats.peak_power_w);
        report.nonlinear_phase_rad += stats.nonlinear_phase_rad;
        report.steps += stats.steps;
        let mut rng = streams.ase(span);
        checksum.write_u64(edfa(&mut out, &amp, &mut rng));
    }
    report.ase_checksum = checksum.finish();
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::linear_to_db;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn random_waveform(len: usize, power: f64, seed: u64) -> Waveform {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let s = (power / 4.0).sqrt();
        let mut draw = || -> Vec<Complex64> {
            (0..len)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re, im) * s
                })
                .collect()
        };
        let x = draw();
        let y = draw();
        Waveform::new(x, y, 80e9)
    }

    fn linear_lossless() -> LinkConfig {
        LinkConfig {
            alpha_db_km: 0.0,
            dispersion_ps_nm_km: 0.0,
            gamma_per_w_km: 0.0,
            edfa_gain_db: 1e-12,
            steps_per_span: 10,
            noiseless: true,
            ..LinkConfig::default()
        }
    }

    fn max_diff(a: &Waveform, b: &Waveform) -> f64 {
        a.x.iter().zip(&b.x).chain(a.y.iter().zip(&b.y)).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn trivial_fiber_is_identity() {
        let w = random_waveform(1024, 1e-3, 1);
        let (out, _) = ssfm_span(&w, &linear_lossless()).unwrap();
        assert!(max_diff(&out, &w) < 1e-12 * 1e-3f64.sqrt() * 100.0);
    }

    #[test]
    fn lossy_linear_span_is_all_pass_with_loss() {
        let w = random_waveform(2048, 1e-3, 2);
        let cfg = LinkConfig {
            gamma_per_w_km: 0.0,
            steps_per_span: 20,
            ..LinkConfig::default()
        };
        let (out, _) = ssfm_span(&w, &cfg).unwrap();
        let expected = db_to_linear(-cfg.span_loss_db());
        assert!((out.energy() / w.energy() / expected - 1.0).abs() < 1e-9);
        let spec = |v: &[Complex64]| {
            let mut b = v.to_vec();
            FftPlanner::new().plan_fft_forward(b.len()).process(&mut b);
            b.iter().map(|s| s.norm()).collect::<Vec<_>>()
        };
        let (a, b) = (spec(&w.x), spec(&out.x));
        let g = expected.sqrt();
        assert!(a.iter().zip(&b).all(|(p, q)| (p * g - q).abs() < 1e-9 * p.max(1e-3)));
    }

    #[test]
    fn cw_nonlinear_phase() {
        let p: f64 = 5e-3; // per polarization
        let len = 256;
        let x = vec![Complex64::new(p.sqrt(), 0.0); len];
        let w = Waveform::new(x.clone(), x, 80e9);
        let cfg = LinkConfig {
            alpha_db_km: 0.0,
            dispersion_ps_nm_km: 0.0,
            steps_per_span: 37,
            ..LinkConfig::default()
        };
        let (out, stats) = ssfm_span(&w, &cfg).unwrap();
        let expected = MANAKOV_FACTOR * cfg.gamma_per_w_km * 2.0 * p * cfg.span_km;
        for s in out.x.iter().chain(&out.y) {
            let mut d = s.arg() - expected;
            d = (d + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI;
            assert!(d.abs() < 1e-6, "phase error {d:e}");
        }
        assert!((stats.nonlinear_phase_rad - expected).abs() < 1e-9);
    }

    #[test]
    fn manakov_polarization_symmetry() {
        let w = random_waveform(1024, 20e-3, 3);
        let cfg = LinkConfig {
            steps_per_span: 40,
            ..LinkConfig::default()
        };
        let (a, _) = ssfm_span(&w, &cfg).unwrap();
        let (b, _) = ssfm_span(&w.clone().swapped(), &cfg).unwrap();
        assert_eq!(a.x, b.y);
        assert_eq!(a.y, b.x);
    }

    #[test]
    fn linear_unitarity_over_link() {
        let w = random_waveform(4096, 1e-3, 4);
        let cfg = LinkConfig {
            alpha_db_km: 0.0,
            gamma_per_w_km: 0.0,
            edfa_gain_db: 1e-300,
            steps_per_span: 4,
            noiseless: true,
            ..LinkConfig::default()
        };
        let (out, report) = propagate_link(&w, &cfg, 1).unwrap();
        assert_eq!(report.steps, 100);
        assert!((out.energy() / w.energy() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_spans_is_identity() {
        let w = random_waveform(512, 1e-3, 5);
        let cfg = LinkConfig {
            n_spans: 0,
            ..LinkConfig::default()
        };
        let (out, report) = propagate_link(&w, &cfg, 9).unwrap();
        assert_eq!(out, w);
        assert_eq!(report.steps, 0);
    }

    #[test]
    fn ase_psd_closed_form() {
        let amp = LinkConfig::default().amplifier();
        let nu = optical_frequency(1550.0);
        assert!((nu - 193.41e12).abs() < 0.01e12);
        let expected = 38.81 * PLANCK * 1.9341e14 * 1.409;
        assert!((amp.ase_psd() / expected - 1.0).abs() < 2e-3, "{:e}", amp.ase_psd());
    }

    #[test]
    fn edfa_noise_power_and_determinism() {
        let len = 500_000;
        let zero = Waveform::new(vec![Complex64::new(0.0, 0.0); len], vec![Complex64::new(0.0, 0.0); len], 80e9);
        let amp = LinkConfig::default().amplifier();
        let mut a = zero.clone();
        let ca = edfa(&mut a, &amp, &mut ChaCha20Rng::seed_from_u64(11));
        let measured = a.energy() / len as f64 / 2.0;
        let expected = amp.ase_psd() * 80e9;
        assert!((measured / expected - 1.0).abs() < 0.01, "{}", linear_to_db(measured / expected));

        let mut b = zero.clone();
        let cb = edfa(&mut b, &amp, &mut ChaCha20Rng::seed_from_u64(11));
        assert_eq!(a, b);
        assert_eq!(ca, cb);

        let noiseless = Amplifier { nf_db: None, ..amp };
        let mut c = random_waveform(64, 1e-3, 6);
        let orig = c.clone();
        edfa(&mut c, &noiseless, &mut ChaCha20Rng::seed_from_u64(1));
        let g = db_to_linear(amp.gain_db).sqrt();
        assert!(c.x.iter().zip(&orig.x).all(|(p, q)| (p - q * g).norm() < 1e-15));
    }

    #[test]
    fn overflow_reported() {
        let mut w = random_waveform(64, 1e-3, 7);
        w.x[3] = Complex64::new(f64::INFINITY, 0.0);
        let err = ssfm_span(&w, &LinkConfig { steps_per_span: 2, ..LinkConfig::default() });
        assert!(matches!(err, Err(FiberError::Overflow { span: 0, .. })));
    }
}
