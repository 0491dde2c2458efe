use num_complex::Complex64;
use rustfft::FftPlanner;

use super::Waveform;
use crate::units::{angular_frequencies, beta2_from_dispersion};

/// Multiplies both polarizations by `exp(j (β₂z/2) ω²)` in the frequency domain.
pub fn apply_dispersion(w: &Waveform, beta2_length: f64) -> Waveform {
    let len = w.len();
    let omega = angular_frequencies(len, w.sample_rate());
    let response: Vec<Complex64> = omega
        .iter()
        .map(|om| Complex64::from_polar(1.0 / len as f64, 0.5 * beta2_length * om * om))
        .collect();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let filter = |samples: &[Complex64]| {
        let mut buf = samples.to_vec();
        fwd.process(&mut buf);
        buf.iter_mut().zip(&response).for_each(|(s, h)| *s *= h);
        inv.process(&mut buf);
        buf
    };
    Waveform::with_payload(filter(&w.x), filter(&w.y), w.sample_rate(), w.payload())
}

/// Full-band chromatic dispersion compensation for an accumulated dispersion
/// `D·L` in ps/nm: the exact conjugate of the fiber's dispersion response.
pub fn cd_compensate(w: &Waveform, dispersion_ps_nm: f64, wavelength_nm: f64) -> Waveform {
    // linear in D, so feeding D·L gives β₂·L directly
    let beta2_length = beta2_from_dispersion(dispersion_ps_nm, wavelength_nm);
    apply_dispersion(w, -beta2_length)
}
