use std::f64::consts::PI;

use num_complex::Complex64;

use rustfft::FftPlanner;

use super::{fast_len, rrc_filter, rrc_response, DspError, TxConfig, Waveform};

fn carrier(f_hz: f64, sample_rate: f64, n: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * f_hz * n as f64 / sample_rate)
}

/// Pulse-shapes each subcarrier, shifts it to its center and sums them.
///
/// `streams[i]` holds the X and Y symbols of subcarrier `i`. Symbol `t` is
/// centered at sample `(rrc_span + t) * sps`, so the pulse tails of the first
/// and last symbols fit inside the guard. The buffer is padded to an
/// FFT-friendly length and the payload scaled to unit mean power.
pub fn tx_multiplex(streams: &[[&[Complex64]; 2]], cfg: &TxConfig) -> Result<Waveform, DspError> {
    cfg.validate()?;
    if streams.len() != cfg.n_subcarriers {
        return Err(DspError::Length(format!(
            "{} subcarrier streams for {} configured subcarriers",
            streams.len(),
            cfg.n_subcarriers
        )));
    }
    let slots = streams[0][0].len();
    if slots == 0 || streams.iter().flatten().any(|s| s.len() != slots) {
        return Err(DspError::Length("all symbol streams must be non-empty and equal in length".into()));
    }
    let sps = cfg.sps;
    let taps = rrc_filter(cfg.rolloff, sps, cfg.rrc_span);
    let guard = cfg.rrc_span * sps;
    let len = fast_len((slots + 2 * cfg.rrc_span) * sps);
    let fs = cfg.sample_rate();

    let mut pols = [vec![Complex64::new(0.0, 0.0); len], vec![Complex64::new(0.0, 0.0); len]];
    let mut shaped = vec![Complex64::new(0.0, 0.0); len];
    for (i, sc) in streams.iter().enumerate() {
        let fc = cfg.center_frequency(i);
        for (pol, symbols) in sc.iter().enumerate() {
            shaped.iter_mut().for_each(|s| *s = Complex64::new(0.0, 0.0));
            // symbol t occupies samples t*sps .. t*sps + taps.len()
            for (t, &sym) in symbols.iter().enumerate() {
                let start = t * sps;
                for (out, &h) in shaped[start..start + taps.len()].iter_mut().zip(&taps) {
                    *out += sym * h;
                }
            }
            for (n, (acc, s)) in pols[pol].iter_mut().zip(&shaped).enumerate() {
                *acc += s * carrier(fc, fs, n);
            }
        }
    }
    let [x, y] = pols;
    let mut w = Waveform::with_payload(x, y, fs, guard..guard + slots * sps);
    let p = w.power();
    if p > 0.0 {
        w.scale(1.0 / p.sqrt());
    }
    Ok(w)
}

/// Recovers one subcarrier at one sample per symbol: frequency shift to
/// baseband, RRC matched filter, decimation at the known symbol centers.
///
/// The matched filter is the untruncated RRC response applied on the FFT
/// grid, so only the transmit pulse contributes truncation ISI. Returns the
/// X and Y symbol streams; the symbol count is the payload length divided
/// by `sps`.
pub fn rx_demultiplex(
    w: &Waveform,
    cfg: &TxConfig,
    subcarrier: usize,
) -> Result<[Vec<Complex64>; 2], DspError> {
    let ratio = w.sample_rate() / cfg.symbol_rate;
    if (ratio - cfg.sps as f64).abs() > 1e-9 * ratio {
        return Err(DspError::InvalidConfig(format!(
            "sample rate {} Hz is not {} samples per symbol",
            w.sample_rate(),
            cfg.sps
        )));
    }
    if subcarrier >= cfg.n_subcarriers {
        return Err(DspError::InvalidConfig(format!(
            "subcarrier {subcarrier} out of range 0..{}",
            cfg.n_subcarriers
        )));
    }
    let sps = cfg.sps;
    let len = w.len();
    let payload = w.payload();
    let slots = payload.len() / sps;
    let fc = cfg.center_frequency(subcarrier);
    let fs = w.sample_rate();

    // 1/len folds the inverse FFT normalization into the filter
    let response: Vec<f64> = rrc_response(cfg.rolloff, sps, len).into_iter().map(|h| h / len as f64).collect();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);

    let demod = |samples: &[Complex64]| -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = samples
            .iter()
            .enumerate()
            .map(|(n, s)| s * carrier(-fc, fs, n))
            .collect();
        fwd.process(&mut buf);
        buf.iter_mut().zip(&response).for_each(|(s, h)| *s *= h);
        inv.process(&mut buf);
        (0..slots).map(|t| buf[payload.start + t * sps]).collect()
    };
    Ok([demod(&w.x), demod(&w.y)])
}

/// Complex least-squares one-tap alignment: `h = Σ y x* / Σ |x|²`, `y' = y / h`.
pub fn align_one_tap(
    tx: &[Complex64],
    rx: &[Complex64],
) -> Result<(Vec<Complex64>, Complex64), DspError> {
    if tx.len() != rx.len() {
        return Err(DspError::Length(format!("{} reference vs {} received symbols", tx.len(), rx.len())));
    }
    let energy: f64 = tx.iter().map(|x| x.norm_sqr()).sum();
    if energy == 0.0 {
        return Err(DspError::Degenerate);
    }
    let corr: Complex64 = tx.iter().zip(rx).map(|(x, y)| y * x.conj()).sum();
    let h = corr / energy;
    Ok((rx.iter().map(|y| y / h).collect(), h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::SubcarrierSpacing;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use rand_distr::StandardNormal;
    use rustfft::FftPlanner;

    fn qam_stream(rng: &mut ChaCha20Rng, len: usize) -> Vec<Complex64> {
        let levels = [-7.0, -5.0, -3.0, -1.0, 1.0, 3.0, 5.0, 7.0];
        (0..len)
            .map(|_| Complex64::new(levels[rng.random_range(0..8)], levels[rng.random_range(0..8)]) / 42f64.sqrt())
            .collect()
    }

    fn periodogram(x: &[Complex64]) -> Vec<f64> {
        let mut buf = x.to_vec();
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
        buf.iter().map(|s| s.norm_sqr()).collect()
    }

    fn evm_db(tx: &[Complex64], rx: &[Complex64]) -> f64 {
        let err: f64 = tx.iter().zip(rx).map(|(a, b)| (a - b).norm_sqr()).sum();
        let sig: f64 = tx.iter().map(|a| a.norm_sqr()).sum();
        10.0 * (err / sig).log10()
    }

    #[test]
    fn single_subcarrier_loopback_and_spectrum() {
        let cfg = TxConfig {
            n_subcarriers: 1,
            ..TxConfig::default()
        };
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let x = qam_stream(&mut rng, 600);
        let y = qam_stream(&mut rng, 600);
        let w = tx_multiplex(&[[&x, &y]], &cfg).unwrap();
        assert!((w.power() - 1.0).abs() < 1e-6);

        let [rx_x, rx_y] = rx_demultiplex(&w, &cfg, 0).unwrap();
        let (ax, _) = align_one_tap(&x, &rx_x).unwrap();
        let (ay, _) = align_one_tap(&y, &rx_y).unwrap();
        let max_err = x
            .iter()
            .zip(&ax)
            .chain(y.iter().zip(&ay))
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(max_err < 1e-3, "max symbol error {max_err:e}");

        // out-of-band power beyond (1+β)R/2
        let psd = periodogram(&w.x);
        let df = w.sample_rate() / psd.len() as f64;
        let edge = (1.0 + cfg.rolloff) * cfg.symbol_rate / 2.0;
        let (mut inband, mut outband) = (0.0, 0.0);
        for (k, p) in psd.iter().enumerate() {
            let f = if k < psd.len() / 2 { k as f64 } else { k as f64 - psd.len() as f64 } * df;
            if f.abs() <= edge * 1.02 {
                inband += p;
            } else {
                outband += p;
            }
        }
        assert!(10.0 * (outband / inband).log10() < -40.0);
    }

    #[test]
    fn four_subcarrier_loopback_and_peaks() {
        let cfg = TxConfig::default();
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let data: Vec<[Vec<Complex64>; 2]> =
            (0..4).map(|_| [qam_stream(&mut rng, 500), qam_stream(&mut rng, 500)]).collect();
        let streams: Vec<[&[Complex64]; 2]> = data.iter().map(|[a, b]| [a.as_slice(), b.as_slice()]).collect();
        let w = tx_multiplex(&streams, &cfg).unwrap();
        for (i, [x, y]) in data.iter().enumerate() {
            let [rx, ry] = rx_demultiplex(&w, &cfg, i).unwrap();
            let (ax, _) = align_one_tap(x, &rx).unwrap();
            let (ay, _) = align_one_tap(y, &ry).unwrap();
            assert!(evm_db(x, &ax) < -40.0, "sc {i}: {}", evm_db(x, &ax));
            assert!(evm_db(y, &ay) < -40.0);
        }
        // mean spectral density near each center dominates the gap between them
        let psd = periodogram(&w.x);
        let df = w.sample_rate() / psd.len() as f64;
        let band_power = |f0: f64, bw: f64| -> f64 {
            psd.iter()
                .enumerate()
                .filter(|(k, _)| {
                    let f = if *k < psd.len() / 2 { *k as f64 } else { *k as f64 - psd.len() as f64 } * df;
                    (f - f0).abs() < bw / 2.0
                })
                .map(|(_, p)| p)
                .sum()
        };
        for i in 0..4 {
            let fc = cfg.center_frequency(i);
            let on = band_power(fc, 2e9);
            let gap = band_power(fc + cfg.center_spacing() / 2.0, 1e9) * 2.0;
            assert!(on > 100.0 * gap, "subcarrier {i}");
        }
    }

    #[test]
    fn wrong_subcarrier_leakage() {
        let cfg = TxConfig {
            n_subcarriers: 4,
            ..TxConfig::default()
        };
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let x = qam_stream(&mut rng, 400);
        let zeros = vec![Complex64::new(0.0, 0.0); 400];
        let w = tx_multiplex(&[[&zeros, &zeros], [&x, &x], [&zeros, &zeros], [&zeros, &zeros]], &cfg).unwrap();
        let [own, _] = rx_demultiplex(&w, &cfg, 1).unwrap();
        let own_p: f64 = own.iter().map(|s| s.norm_sqr()).sum();
        for other in [0, 2, 3] {
            let [leak, _] = rx_demultiplex(&w, &cfg, other).unwrap();
            let leak_p: f64 = leak.iter().map(|s| s.norm_sqr()).sum();
            assert!(10.0 * (leak_p / own_p).log10() < -30.0, "subcarrier {other}");
        }
    }

    #[test]
    fn center_spacing_mode_runs() {
        let cfg = TxConfig {
            spacing: SubcarrierSpacing::Center(14e9),
            ..TxConfig::default()
        };
        let x = vec![Complex64::new(1.0, 1.0); 50];
        let w = tx_multiplex(&[[&x, &x], [&x, &x], [&x, &x], [&x, &x]], &cfg).unwrap();
        assert!((w.power() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alignment_examples() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let x = qam_stream(&mut rng, 200);
        let rot = Complex64::from_polar(1.0, PI / 7.0);
        let y: Vec<_> = x.iter().map(|s| s * rot).collect();
        let (a, h) = align_one_tap(&x, &y).unwrap();
        assert!((h - rot).norm() < 1e-12);
        assert!(x.iter().zip(&a).all(|(p, q)| (p - q).norm() < 1e-12));

        let y: Vec<_> = x.iter().map(|s| s * 2.0).collect();
        let (a, h) = align_one_tap(&x, &y).unwrap();
        assert!((h - 2.0).norm() < 1e-12);
        assert!(x.iter().zip(&a).all(|(p, q)| (p - q).norm() < 1e-12));

        assert!(matches!(
            align_one_tap(&[Complex64::new(0.0, 0.0); 4], &[Complex64::new(1.0, 0.0); 4]),
            Err(DspError::Degenerate)
        ));
    }

    #[test]
    fn alignment_is_unbiased_in_noise() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let n = 100_000;
        let sigma = 0.3;
        let x = qam_stream(&mut rng, n);
        let y: Vec<_> = x
            .iter()
            .map(|s| {
                let nr: f64 = rng.sample(StandardNormal);
                let ni: f64 = rng.sample(StandardNormal);
                s + Complex64::new(nr, ni) * (sigma / 2f64.sqrt())
            })
            .collect();
        let (_, h) = align_one_tap(&x, &y).unwrap();
        assert!((h - 1.0).norm() < 3.0 * sigma / (n as f64).sqrt());
    }
}
