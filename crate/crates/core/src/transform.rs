//! Discrete transforms between a time axis and a centered detuning axis.
//!
//! Convention: a field `E(t)` is synthesized from its spectrum as
//! `E(t) = (1/N) Σ_k Ẽ(ω_k) e^{-i ω_k t}`, so a spectral factor `e^{i ω T}`
//! delays the field by `T` and a causal response is analytic in the upper
//! half plane. Spectra are stored in centered order: index `N/2` is zero
//! detuning, index `j` corresponds to `(j - N/2) · bin_width`.
//! Time samples are stored in natural order starting at the envelope epoch.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Time samples → centered spectrum (unnormalized).
pub fn to_spectrum(time: &[Complex64]) -> Vec<Complex64> {
    let n = time.len();
    let mut buf = time.to_vec();
    if n > 1 {
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    }
    buf.rotate_right(n / 2);
    buf
}

/// Centered spectrum → time samples (carries the 1/N factor).
pub fn to_time(spectrum: &[Complex64]) -> Vec<Complex64> {
    let n = spectrum.len();
    let mut buf = spectrum.to_vec();
    buf.rotate_left(n / 2);
    if n > 1 {
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    }
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// Returns the causal completion of a real log-response sampled on a
/// centered detuning axis: a complex array whose real part is `real` and
/// whose imaginary part makes `exp(result)` the transfer function of a
/// causal filter.
pub fn causal_completion(real: &[f64]) -> Vec<Complex64> {
    let n = real.len();
    let spec: Vec<Complex64> = real.iter().map(|&r| Complex64::new(r, 0.0)).collect();
    let mut h = to_time(&spec);
    // index 0 is t = 0, indices above n/2 are negative times
    for (i, v) in h.iter_mut().enumerate() {
        if i == 0 || (n.is_multiple_of(2) && i == n / 2) {
            continue;
        } else if i < n.div_ceil(2) {
            *v *= 2.0;
        } else {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    to_spectrum(&h)
}
