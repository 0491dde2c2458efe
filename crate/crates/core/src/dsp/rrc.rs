use std::f64::consts::PI;

/// Root-raised-cosine taps with unit energy.
///
/// `span` is the half-length in symbols, so the filter has
/// `2 * span * sps + 1` taps centered on the middle one.
pub fn rrc_filter(rolloff: f64, sps: usize, span: usize) -> Vec<f64> {
    assert!((0.0..=1.0).contains(&rolloff), "rolloff must lie in [0, 1]");
    assert!(sps >= 2 && span >= 1, "need sps >= 2 and span >= 1");
    let len = 2 * span * sps + 1;
    let center = (span * sps) as f64;
    let b = rolloff;
    let mut taps: Vec<f64> = (0..len)
        .map(|i| {
            let t = (i as f64 - center) / sps as f64;
            if t.abs() < 1e-12 {
                1.0 - b + 4.0 * b / PI
            } else if b > 0.0 && (t.abs() - 1.0 / (4.0 * b)).abs() < 1e-9 {
                b / 2f64.sqrt()
                    * ((1.0 + 2.0 / PI) * (PI / (4.0 * b)).sin()
                        + (1.0 - 2.0 / PI) * (PI / (4.0 * b)).cos())
            } else {
                let num = (PI * t * (1.0 - b)).sin() + 4.0 * b * t * (PI * t * (1.0 + b)).cos();
                let den = PI * t * (1.0 - (4.0 * b * t).powi(2));
                num / den
            }
        })
        .collect();
    let energy: f64 = taps.iter().map(|h| h * h).sum();
    let norm = energy.sqrt();
    taps.iter_mut().for_each(|h| *h /= norm);
    taps
}

/// Untruncated RRC amplitude response on a `len`-point FFT grid (FFT order),
/// scaled so the equivalent discrete impulse response has unit energy.
pub fn rrc_response(rolloff: f64, sps: usize, len: usize) -> Vec<f64> {
    assert!((0.0..=1.0).contains(&rolloff), "rolloff must lie in [0, 1]");
    let b = rolloff;
    let mut h: Vec<f64> = (0..len)
        .map(|k| {
            let bin = if k <= len / 2 { k as f64 } else { k as f64 - len as f64 };
            // frequency in units of the symbol rate
            let f = (bin * sps as f64 / len as f64).abs();
            if f <= (1.0 - b) / 2.0 {
                1.0
            } else if f <= (1.0 + b) / 2.0 {
                (0.5 * (1.0 + (PI / b * (f - (1.0 - b) / 2.0)).cos())).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let norm = (len as f64 / h.iter().map(|v| v * v).sum::<f64>()).sqrt();
    h.iter_mut().for_each(|v| *v *= norm);
    h
}
