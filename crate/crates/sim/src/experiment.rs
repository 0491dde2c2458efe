//! One simulation point: bits → ESS → intra-DM mapping → DSCM transmitter →
//! fiber link → CD compensation → per-subcarrier receiver → metrics and a
//! bit-exact deshaping audit.

use std::sync::Arc;
use std::time::Instant;

use mdshape_core::dsp::{align_one_tap, cd_compensate, rx_demultiplex, tx_multiplex};
use mdshape_core::ess::{bits_from_index, index_from_bits, AmplitudeBlock, ShapingConfig, Trellis};
use mdshape_core::fiber::{propagate_link, PropagationReport};
use mdshape_core::mapper::{
    demap_frame, empirical_distribution, frame_normalization, map_frame, MappingScheme, Polarization, SchemeRegistry,
    SignSource, SymbolFrame,
};
use mdshape_core::metrics::{gsnr_pooled, Constellation, EstimatorRegistry, RateEstimator, SubcarrierMetrics};
use mdshape_core::rng::SeedStreams;
use mdshape_core::units::dbm_to_watt;
use mdshape_core::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ShapingSection};
use crate::error::SimError;

/// One CSV row: metrics of one subcarrier at one (scheme, power, seed) point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub scheme: String,
    pub power_dbm: f64,
    pub seed: u64,
    /// One-based.
    pub subcarrier: usize,
    pub gsnr_db: f64,
    pub mi_bits_per_2d: f64,
    pub air_n_bits_per_4d: f64,
    pub rate_loss_bits_per_amp: f64,
    pub runtime_s: f64,
}

#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub records: Vec<SweepRecord>,
    pub info_bits: usize,
    /// Information bit errors after demapping and deshaping.
    pub bit_errors: u64,
    /// Received blocks that were not valid codewords.
    pub undecodable_blocks: usize,
    pub propagation: PropagationReport,
}

impl PointOutcome {
    /// Identifies the ASE realization consumed by this point.
    pub fn ase_checksum(&self) -> u64 {
        self.propagation.ase_checksum
    }
}

/// Hamming distance between two bit streams.
pub fn audit_bits(tx: &[u8], rx: &[u8]) -> Result<u64, SimError> {
    if tx.len() != rx.len() {
        return Err(SimError::BitLength(tx.len(), rx.len()));
    }
    Ok(tx.iter().zip(rx).filter(|(a, b)| a != b).count() as u64)
}

#[derive(Debug)]
struct Shaper {
    section: ShapingSection,
    rate_loss_key: (usize, u64),
    trellis: Trellis,
    rate_loss: f64,
}

impl Shaper {
    fn build(config: &ExperimentConfig) -> Result<Self, SimError> {
        let s = &config.shaping;
        let shaping = match s.e_max {
            Some(e_max) => ShapingConfig::new(s.n, s.k, s.alphabet.clone(), e_max)?,
            None => ShapingConfig::with_min_energy(s.n, s.k, s.alphabet.clone())?,
        };
        let trellis = Trellis::build(shaping)?;
        let m = &config.metrics;
        let blocks = m.rate_loss_amplitudes.div_ceil(s.n);
        let rate_loss = trellis.rate_loss(&trellis.amplitude_distribution(blocks, m.rate_loss_seed));
        log::info!("shaper {}: rate loss {rate_loss:.5} bits/amp", trellis.config());
        Ok(Self {
            section: s.clone(),
            rate_loss_key: (m.rate_loss_amplitudes, m.rate_loss_seed),
            trellis,
            rate_loss,
        })
    }

    fn serves(&self, config: &ExperimentConfig) -> bool {
        self.section == config.shaping
            && self.rate_loss_key == (config.metrics.rate_loss_amplitudes, config.metrics.rate_loss_seed)
    }
}

/// A validated configuration with its shaping trellis and rate loss computed
/// once and shared by every point.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    shaper: Arc<Shaper>,
    schemes: SchemeRegistry,
    estimator: Arc<dyn RateEstimator>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self, SimError> {
        config.validate()?;
        let shaper = Arc::new(Shaper::build(&config)?);
        Self::assemble(config, shaper)
    }

    /// Same experiment under a modified configuration; the trellis is reused
    /// when the shaping settings are unchanged.
    pub fn reconfigured(&self, config: ExperimentConfig) -> Result<Self, SimError> {
        config.validate()?;
        let shaper = if self.shaper.serves(&config) {
            Arc::clone(&self.shaper)
        } else {
            Arc::new(Shaper::build(&config)?)
        };
        Self::assemble(config, shaper)
    }

    fn assemble(config: ExperimentConfig, shaper: Arc<Shaper>) -> Result<Self, SimError> {
        let estimator = EstimatorRegistry::builtin().get(&config.metrics.estimator)?;
        Ok(Self {
            config,
            shaper,
            schemes: SchemeRegistry::builtin(),
            estimator,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn trellis(&self) -> &Trellis {
        &self.shaper.trellis
    }

    /// Cached shaping rate loss in bits per amplitude.
    pub fn rate_loss(&self) -> f64 {
        self.shaper.rate_loss
    }

    pub fn schemes(&self) -> &SchemeRegistry {
        &self.schemes
    }

    /// Runs one point. Information bits, sign bits and ASE noise depend only on
    /// `seed`, so points that differ only in scheme are paired comparisons.
    pub fn run_point(&self, scheme: &str, power_dbm: f64, seed: u64) -> Result<PointOutcome, SimError> {
        self.run_point_inner(scheme, power_dbm, seed).map_err(|e| SimError::Point {
            scheme: scheme.to_string(),
            power_dbm,
            seed,
            source: Box::new(e),
        })
    }

    fn run_point_inner(&self, scheme_name: &str, power_dbm: f64, seed: u64) -> Result<PointOutcome, SimError> {
        let started = Instant::now();
        let cfg = &self.config;
        let scheme = self.schemes.get(scheme_name)?;
        let trellis = &self.shaper.trellis;
        let (n, k) = (cfg.shaping.n, cfg.shaping.k);
        let alphabet = cfg.shaping.alphabet.as_slice();
        let dims = cfg.frame_dims();
        let n_blocks = dims.amplitudes() / n;
        let streams = SeedStreams::new(seed);

        let mut info_rng = streams.info_bits();
        let info: Vec<u8> = (0..n_blocks * k).map(|_| info_rng.random_range(0..2)).collect();
        let blocks = info
            .chunks(k)
            .map(|chunk| trellis.encode(&index_from_bits(chunk)))
            .collect::<Result<Vec<AmplitudeBlock>, _>>()?;
        let signs = SignSource::new(streams.sign_bits()).take(dims.amplitudes());
        let distribution = empirical_distribution(&blocks, alphabet);
        let scale = frame_normalization(&distribution, alphabet);
        let mut frame = map_frame(scheme.as_ref(), &blocks, &signs, dims, scale)?;
        frame.normalize_streams();

        let tx_cfg = cfg.tx.to_tx_config();
        let per_subcarrier: Vec<[&[Complex64]; 2]> = (0..dims.subcarriers)
            .map(|sc| [frame.stream(sc, Polarization::X), frame.stream(sc, Polarization::Y)])
            .collect();
        let mut waveform = tx_multiplex(&per_subcarrier, &tx_cfg)?;
        waveform.scale(dbm_to_watt(power_dbm).sqrt());

        let link = cfg.link.to_link_config();
        let (received, propagation) = propagate_link(&waveform, &link, seed)?;
        let received = cd_compensate(&received, link.total_dispersion_ps_nm(), link.wavelength_nm);

        let trim = tx_cfg.rrc_span..dims.slots - tx_cfg.rrc_span;
        let mut aligned_streams = Vec::with_capacity(2 * dims.subcarriers);
        let mut metrics = Vec::with_capacity(dims.subcarriers);
        for sc in 0..dims.subcarriers {
            let rx = rx_demultiplex(&received, &tx_cfg, sc)?;
            let mut aligned = Vec::with_capacity(2);
            for (pol, samples) in Polarization::BOTH.into_iter().zip(rx) {
                let tx = frame.stream(sc, pol);
                let (_, tap) = align_one_tap(&tx[trim.clone()], &samples[trim.clone()])?;
                aligned.push(samples.iter().map(|y| y / tap).collect::<Vec<_>>());
            }
            let tx_x = &frame.stream(sc, Polarization::X)[trim.clone()];
            let tx_y = &frame.stream(sc, Polarization::Y)[trim.clone()];
            let (rx_x, rx_y) = (&aligned[0][trim.clone()], &aligned[1][trim.clone()]);
            let gsnr_db = gsnr_pooled(&[(tx_x, rx_x), (tx_y, rx_y)])?;
            let mut mi = 0.0;
            for (pol, (tx, rx)) in Polarization::BOTH.into_iter().zip([(tx_x, rx_x), (tx_y, rx_y)]) {
                let constellation = Constellation::pas_qam(alphabet, &distribution, frame.scale(sc, pol))?;
                mi += self.estimator.estimate(tx, rx, &constellation)? / 2.0;
            }
            metrics.push(SubcarrierMetrics::new(gsnr_db, mi, self.shaper.rate_loss, 2 * trim.len()));
            aligned_streams.extend(aligned);
        }

        let (bit_errors, undecodable_blocks) = self.audit(&info, &aligned_streams, frame.scales(), scheme.as_ref())?;
        let runtime_s = started.elapsed().as_secs_f64();
        let records = metrics
            .iter()
            .enumerate()
            .map(|(sc, m)| SweepRecord {
                scheme: scheme.name().to_string(),
                power_dbm,
                seed,
                subcarrier: sc + 1,
                gsnr_db: m.gsnr_db,
                mi_bits_per_2d: m.mi_bits_per_2d,
                air_n_bits_per_4d: m.air_n_bits_per_4d,
                rate_loss_bits_per_amp: m.rate_loss_bits_per_amp,
                runtime_s,
            })
            .collect();
        Ok(PointOutcome {
            records,
            info_bits: info.len(),
            bit_errors,
            undecodable_blocks,
            propagation,
        })
    }

    /// Hard decisions, demapping and deshaping of the aligned streams.
    /// Blocks that fail to decode are counted as all-zero bits.
    fn audit(
        &self,
        info: &[u8],
        aligned: &[Vec<Complex64>],
        scales: &[f64],
        scheme: &dyn MappingScheme,
    ) -> Result<(u64, usize), SimError> {
        let cfg = &self.config;
        let k = cfg.shaping.k;
        let received = SymbolFrame::from_streams(cfg.frame_dims(), scales, aligned)?;
        let (blocks, _) = demap_frame(&received, scheme, &cfg.shaping.alphabet, cfg.shaping.n)?;
        let mut decoded = Vec::with_capacity(info.len());
        let mut undecodable = 0;
        for block in &blocks {
            match self.shaper.trellis.decode(block) {
                Ok(index) => decoded.extend(bits_from_index(&index, k)),
                Err(_) => {
                    undecodable += 1;
                    decoded.extend(std::iter::repeat_n(0, k));
                }
            }
        }
        Ok((audit_bits(info, &decoded)?, undecodable))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Preset;

    #[test]
    fn audit_counts_flips() {
        assert_eq!(audit_bits(&[0, 1, 1], &[0, 1, 1]).unwrap(), 0);
        assert_eq!(audit_bits(&[0, 1, 1], &[0, 0, 1]).unwrap(), 1);
        assert!(audit_bits(&[0, 1], &[0]).is_err());
    }

    fn small_config() -> ExperimentConfig {
        let mut c = ExperimentConfig::preset(Preset::Quick);
        c.mapping.slots = 360;
        c.link.n_spans = 2;
        c.link.steps_per_span = 4;
        c.metrics.rate_loss_amplitudes = 36_000;
        c
    }

    #[test]
    fn noiseless_linear_point_is_error_free() {
        let mut c = small_config();
        c.link.noiseless = true;
        c.link.gamma_per_w_km = 0.0;
        let exp = Experiment::new(c).unwrap();
        for scheme in ["2d", "4d", "16d"] {
            let out = exp.run_point(scheme, 0.0, 3).unwrap();
            assert_eq!(out.bit_errors, 0);
            assert_eq!(out.undecodable_blocks, 0);
            assert_eq!(out.info_bits, 16 * 623);
            assert_eq!(out.records.len(), 4);
            for r in &out.records {
                assert!(r.gsnr_db > 50.0, "{r:?}");
                // two shaped amplitudes and two uniform signs per symbol
                let entropy = 2.0 * (623.0 / 360.0 + exp.rate_loss()) + 2.0;
                assert!((r.mi_bits_per_2d - entropy).abs() < 0.05, "{r:?}");
            }
        }
    }

    #[test]
    fn reconfigured_reuses_trellis() {
        let exp = Experiment::new(small_config()).unwrap();
        let mut c = exp.config().clone();
        c.link.n_spans = 1;
        let other = exp.reconfigured(c).unwrap();
        assert!(Arc::ptr_eq(&exp.shaper, &other.shaper));
        let mut c = exp.config().clone();
        c.shaping.k = 620;
        let third = exp.reconfigured(c).unwrap();
        assert!(!Arc::ptr_eq(&exp.shaper, &third.shaper));
    }

    #[test]
    fn unknown_scheme_names_the_point() {
        let exp = Experiment::new(small_config()).unwrap();
        let err = exp.run_point("8d", 0.0, 1).unwrap_err().to_string();
        assert!(err.contains("8d") && err.contains("seed 1"), "{err}");
    }
}
