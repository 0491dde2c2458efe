//! Physical constants and unit conversions.
//!
//! Internal units: lengths in km, time in s, power in W, γ in 1/(W·km),
//! β₂ in s²/km.

use std::f64::consts::PI;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const PLANCK: f64 = 6.626_070_15e-34;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    1e-3 * db_to_linear(dbm)
}

pub fn watt_to_dbm(w: f64) -> f64 {
    linear_to_db(w / 1e-3)
}

/// Optical frequency in Hz for a wavelength in nm.
pub fn optical_frequency(wavelength_nm: f64) -> f64 {
    SPEED_OF_LIGHT / (wavelength_nm * 1e-9)
}

/// Group velocity dispersion β₂ (s²/km) from D in ps/(nm·km): `β₂ = -λ² D / (2π c)`.
pub fn beta2_from_dispersion(d_ps_nm_km: f64, wavelength_nm: f64) -> f64 {
    let lambda = wavelength_nm * 1e-9;
    // ps/(nm km) -> s/(m km)
    let d = d_ps_nm_km * 1e-12 / 1e-9;
    -lambda * lambda * d / (2.0 * PI * SPEED_OF_LIGHT)
}

/// Power attenuation coefficient in 1/km from dB/km.
pub fn alpha_per_km(alpha_db_km: f64) -> f64 {
    alpha_db_km / (10.0 * std::f64::consts::E.log10())
}

/// Angular frequency (rad/s) of each FFT bin, in FFT order.
pub fn angular_frequencies(len: usize, sample_rate: f64) -> Vec<f64> {
    let df = sample_rate / len as f64;
    (0..len)
        .map(|k| {
            let f = if k < len.div_ceil(2) {
                k as f64 * df
            } else {
                (k as f64 - len as f64) * df
            };
            2.0 * PI * f
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ssmf_beta2() {
        let b2 = beta2_from_dispersion(17.0, 1550.0);
        // about -21.7 ps²/km
        assert!((b2 * 1e24 + 21.68).abs() < 0.01, "{}", b2 * 1e24);
    }

    #[test]
    fn loss_conversion() {
        let a = alpha_per_km(0.2);
        assert!((linear_to_db((a * 80.0).exp()) - 16.0).abs() < 1e-12);
    }

    #[test]
    fn bin_frequencies() {
        let w = angular_frequencies(4, 4.0);
        let f: Vec<f64> = w.iter().map(|x| x / (2.0 * PI)).collect();
        assert_eq!(f, vec![0.0, 1.0, -2.0, -1.0]);
        let w = angular_frequencies(5, 5.0);
        let f: Vec<f64> = w.iter().map(|x| (x / (2.0 * PI)).round()).collect();
        assert_eq!(f, vec![0.0, 1.0, 2.0, -2.0, -1.0]);
    }
}
