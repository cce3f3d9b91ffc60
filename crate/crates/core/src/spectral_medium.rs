//! Engineered absorption spectra and their causal single-pass response.
//!
//! Absorption is stored as an intensity absorption coefficient in 1/cm on a
//! uniform detuning grid. The crystal length is applied only when the
//! single-pass transfer function is formed, so one spectrum can serve
//! several cavity lengths.

use std::f64::consts::{LN_2, PI};
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform;

/// Smallest and largest tooth spacing a comb may be prepared with (Hz).
pub const TOOTH_SPACING_RANGE: (f64, f64) = (4e6, 100e6);
/// Smallest and largest total comb width (Hz).
pub const COMB_BANDWIDTH_RANGE: (f64, f64) = (100e6, 10e9);

/// Uniform detuning axis around an optical carrier.
///
/// Bin `j` sits at detuning `(j - N/2) · bin_width`. The conjugate time axis
/// has step `1/span` and length `1/bin_width`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    center_frequency: f64,
    span: f64,
    bin_count: usize,
}

impl FrequencyGrid {
    pub fn new(center_frequency: f64, span: f64, bin_count: usize) -> Result<Self> {
        if !(span.is_finite() && span > 0.0) {
            return Err(Error::config(format!("grid span must be positive, got {span}")));
        }
        if bin_count < 2 || !bin_count.is_power_of_two() {
            return Err(Error::config(format!(
                "grid bin_count must be a power of two >= 2, got {bin_count}"
            )));
        }
        Ok(Self {
            center_frequency,
            span,
            bin_count,
        })
    }

    pub fn center_frequency(&self) -> f64 {
        self.center_frequency
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn bin_count(&self) -> usize {
        self.bin_count
    }

    pub fn bin_width(&self) -> f64 {
        self.span / self.bin_count as f64
    }

    pub fn detuning(&self, bin: usize) -> f64 {
        (bin as f64 - (self.bin_count / 2) as f64) * self.bin_width()
    }

    pub fn detunings(&self) -> Vec<f64> {
        (0..self.bin_count).map(|j| self.detuning(j)).collect()
    }

    pub fn min_detuning(&self) -> f64 {
        self.detuning(0)
    }

    pub fn max_detuning(&self) -> f64 {
        self.detuning(self.bin_count - 1)
    }

    /// Nearest bin to a detuning, if it lies on the grid.
    pub fn bin_of(&self, detuning: f64) -> Option<usize> {
        let j = (detuning / self.bin_width()).round() + (self.bin_count / 2) as f64;
        (j >= 0.0 && j < self.bin_count as f64).then_some(j as usize)
    }

    /// Time step of the conjugate axis.
    pub fn time_step(&self) -> f64 {
        1.0 / self.span
    }

    /// Duration of the conjugate (circular) time window.
    pub fn time_window(&self) -> f64 {
        1.0 / self.bin_width()
    }

    /// Epoch of the first time sample used for envelopes on this grid.
    pub fn time_origin(&self) -> f64 {
        -self.time_window() / 16.0
    }

    /// Same span, `factor` times as many bins. `factor` must be a power of two.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.center_frequency, self.span, self.bin_count * factor)
    }

    /// Checks that a comb fits on the grid and that its teeth are resolved.
    pub fn check_comb(&self, spec: &AfcSpec) -> Result<()> {
        let lo = spec.center_detuning - spec.bandwidth / 2.0;
        let hi = spec.center_detuning + spec.bandwidth / 2.0;
        if lo < self.min_detuning() || hi > self.max_detuning() {
            return Err(Error::config(format!(
                "comb [{:.4e}, {:.4e}] Hz exceeds grid [{:.4e}, {:.4e}] Hz",
                lo,
                hi,
                self.min_detuning(),
                self.max_detuning()
            )));
        }
        if self.span < 4.0 * spec.bandwidth {
            return Err(Error::config(format!(
                "grid span {:.4e} Hz is less than 4x the comb bandwidth {:.4e} Hz",
                self.span, spec.bandwidth
            )));
        }
        if self.bin_width() > spec.tooth_spacing / 8.0 * (1.0 + 1e-9) {
            return Err(Error::config(format!(
                "bin width {:.4e} Hz does not resolve tooth spacing {:.4e} Hz (need <= spacing/8)",
                self.bin_width(),
                spec.tooth_spacing
            )));
        }
        Ok(())
    }
}

/// Intensity absorption coefficient α(ω) in 1/cm on a [`FrequencyGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionSpectrum {
    grid: FrequencyGrid,
    alpha: Vec<f64>,
}

impl AbsorptionSpectrum {
    pub fn new(grid: FrequencyGrid, alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() != grid.bin_count() {
            return Err(Error::config(format!(
                "spectrum has {} values for a {}-bin grid",
                alpha.len(),
                grid.bin_count()
            )));
        }
        if let Some(bad) = alpha.iter().find(|a| !a.is_finite() || **a < 0.0) {
            return Err(Error::domain(format!(
                "absorption must be finite and non-negative, found {bad}"
            )));
        }
        Ok(Self { grid, alpha })
    }

    pub fn zeros(grid: FrequencyGrid) -> Self {
        let n = grid.bin_count();
        Self {
            grid,
            alpha: vec![0.0; n],
        }
    }

    pub fn uniform(grid: FrequencyGrid, alpha: f64) -> Result<Self> {
        let n = grid.bin_count();
        Self::new(grid, vec![alpha; n])
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn alpha_at(&self, detuning: f64) -> Option<f64> {
        self.grid.bin_of(detuning).map(|j| self.alpha[j])
    }

    pub fn max_alpha(&self) -> f64 {
        self.alpha.iter().cloned().fold(0.0, f64::max)
    }

    /// Every value multiplied by a non-negative factor.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor >= 0.0 && factor.is_finite()) {
            return Err(Error::domain(format!("scale factor must be >= 0, got {factor}")));
        }
        Ok(Self {
            grid: self.grid.clone(),
            alpha: self.alpha.iter().map(|a| a * factor).collect(),
        })
    }

    /// Bins whose detuning lies in `[lo, hi]`.
    pub fn window_bins(&self, lo: f64, hi: f64) -> Vec<usize> {
        let tol = 1e-9 * self.grid.bin_width();
        (0..self.alpha.len())
            .filter(|&j| {
                let d = self.grid.detuning(j);
                d >= lo - tol && d <= hi + tol
            })
            .collect()
    }

    /// Mean absorption over the detuning window `[lo, hi]`.
    pub fn window_mean(&self, lo: f64, hi: f64) -> Option<f64> {
        let bins = self.window_bins(lo, hi);
        if bins.is_empty() {
            return None;
        }
        Some(bins.iter().map(|&j| self.alpha[j]).sum::<f64>() / bins.len() as f64)
    }

    /// Writes `detuning_Hz,alpha_per_cm,phase_rad_per_cm` rows.
    pub fn write_csv<W: Write>(&self, phase: &[f64], mut out: W) -> Result<()> {
        if phase.len() != self.alpha.len() {
            return Err(Error::config("phase array does not match spectrum grid"));
        }
        writeln!(out, "detuning_Hz,alpha_per_cm,phase_rad_per_cm")?;
        for (j, (a, p)) in self.alpha.iter().zip(phase).enumerate() {
            writeln!(out, "{:.6e},{:.9e},{:.9e}", self.grid.detuning(j), a, p)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToothShape {
    #[default]
    Gaussian,
    Square,
}

/// A prepared atomic frequency comb.
///
/// `peak_depth` and `trough_depth` fix the tooth contrast: the carved profile
/// is `d0 + (d - d0)·s(ω)` with `s` the tooth pattern scaled to `[0, 1]`,
/// rescaled so that its window mean equals the mean of the background it
/// replaces. Tooth centers sit at `center ± (k + ½)·δ`, shifted by
/// `phase_offset / 2π` of a period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AfcSpec {
    pub center_detuning: f64,
    pub bandwidth: f64,
    pub tooth_spacing: f64,
    pub finesse: f64,
    pub peak_depth: f64,
    pub trough_depth: f64,
    #[serde(default)]
    pub tooth_shape: ToothShape,
    #[serde(default)]
    pub phase_offset: f64,
}

impl AfcSpec {
    /// 500 MHz comb with 40 MHz spacing (25 ns storage) and finesse 2.
    pub fn standard(center_detuning: f64) -> Self {
        Self {
            center_detuning,
            bandwidth: 500e6,
            tooth_spacing: 40e6,
            finesse: 2.0,
            peak_depth: 1.0,
            trough_depth: 0.0,
            tooth_shape: ToothShape::Gaussian,
            phase_offset: 0.0,
        }
    }

    pub fn storage_time(&self) -> f64 {
        1.0 / self.tooth_spacing
    }

    pub fn tooth_fwhm(&self) -> f64 {
        self.tooth_spacing / self.finesse
    }

    pub fn window(&self) -> (f64, f64) {
        (
            self.center_detuning - self.bandwidth / 2.0,
            self.center_detuning + self.bandwidth / 2.0,
        )
    }

    /// Structural invariants plus the preparable parameter range.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.tooth_spacing > 0.0 && self.bandwidth > 0.0) {
            problems.push("tooth spacing and bandwidth must be positive".to_string());
        } else {
            if self.bandwidth / self.tooth_spacing < 3.0 - 1e-9 {
                problems.push(format!(
                    "bandwidth/spacing = {:.3} < 3 (at least 3 teeth)",
                    self.bandwidth / self.tooth_spacing
                ));
            }
            let (smin, smax) = TOOTH_SPACING_RANGE;
            if self.tooth_spacing < smin * (1.0 - 1e-9) || self.tooth_spacing > smax * (1.0 + 1e-9) {
                problems.push(format!(
                    "tooth spacing {:.4e} Hz outside preparable range [4, 100] MHz",
                    self.tooth_spacing
                ));
            }
            let (bmin, bmax) = COMB_BANDWIDTH_RANGE;
            if self.bandwidth < bmin * (1.0 - 1e-9) || self.bandwidth > bmax * (1.0 + 1e-9) {
                problems.push(format!(
                    "bandwidth {:.4e} Hz outside preparable range [0.1, 10] GHz",
                    self.bandwidth
                ));
            }
        }
        if !(self.finesse > 1.0) {
            problems.push(format!("comb finesse must exceed 1, got {}", self.finesse));
        }
        if !(self.trough_depth >= 0.0 && self.peak_depth > self.trough_depth) {
            problems.push(format!(
                "need peak depth > trough depth >= 0, got {} and {}",
                self.peak_depth, self.trough_depth
            ));
        }
        if !self.phase_offset.is_finite() || !self.center_detuning.is_finite() {
            problems.push("center detuning and phase offset must be finite".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::config(format!("invalid comb: {}", problems.join("; "))))
        }
    }

    /// Detunings of the tooth centers inside the comb window.
    pub fn tooth_centers(&self) -> Vec<f64> {
        let (lo, hi) = self.window();
        let shift = 0.5 + self.phase_offset / (2.0 * PI);
        let k0 = ((lo - self.center_detuning) / self.tooth_spacing - shift).floor() as i64;
        let k1 = ((hi - self.center_detuning) / self.tooth_spacing - shift).ceil() as i64;
        (k0..=k1)
            .map(|k| self.center_detuning + (k as f64 + shift) * self.tooth_spacing)
            .filter(|x| *x >= lo && *x <= hi)
            .collect()
    }

    /// Teeth whose full width at half maximum lies inside the window.
    pub fn full_teeth_in_window(&self) -> usize {
        let (lo, hi) = self.window();
        let half = self.tooth_fwhm() / 2.0;
        let eps = 1e-9 * self.tooth_spacing;
        self.tooth_centers()
            .into_iter()
            .filter(|x| x - half >= lo - eps && x + half <= hi + eps)
            .count()
    }

    /// Raw periodic tooth pattern (un-normalized) at a detuning.
    fn raw_pattern(&self, detuning: f64) -> f64 {
        let shift = 0.5 + self.phase_offset / (2.0 * PI);
        // phase within one period, in units of the spacing, in [-0.5, 0.5)
        let u = (detuning - self.center_detuning) / self.tooth_spacing - shift;
        let frac = u - u.round();
        let w = 1.0 / self.finesse;
        match self.tooth_shape {
            ToothShape::Square => {
                if frac >= -w / 2.0 && frac < w / 2.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ToothShape::Gaussian => {
                let reach = (4.0 * w).ceil() as i64 + 1;
                (-reach..=reach)
                    .map(|k| {
                        let x = (frac - k as f64) / w;
                        (-4.0 * LN_2 * x * x).exp()
                    })
                    .sum()
            }
        }
    }

    /// Tooth pattern scaled to `[0, 1]`: 1 at tooth centers, 0 midway.
    pub fn unit_pattern(&self, detuning: f64) -> f64 {
        let (lo, hi) = match self.tooth_shape {
            ToothShape::Square => (0.0, 1.0),
            ToothShape::Gaussian => {
                let shift = 0.5 + self.phase_offset / (2.0 * PI);
                let at = |cycles: f64| {
                    self.raw_pattern(self.center_detuning + (shift + cycles) * self.tooth_spacing)
                };
                (at(0.5), at(0.0))
            }
        };
        if hi - lo <= 0.0 {
            return 0.0;
        }
        ((self.raw_pattern(detuning) - lo) / (hi - lo)).clamp(0.0, 1.0)
    }

    /// Depth modulation `d0 + (d - d0)·s(ω)` on the given bins.
    fn modulation(&self, grid: &FrequencyGrid, bins: &[usize]) -> Vec<f64> {
        bins.iter()
            .map(|&j| {
                self.trough_depth
                    + (self.peak_depth - self.trough_depth) * self.unit_pattern(grid.detuning(j))
            })
            .collect()
    }
}

/// Gaussian inhomogeneous absorption line sampled on `grid`.
pub fn build_background(
    grid: &FrequencyGrid,
    line_center: f64,
    line_fwhm: f64,
    peak_alpha: f64,
) -> Result<AbsorptionSpectrum> {
    if !(line_fwhm > 0.0) {
        return Err(Error::config(format!("line FWHM must be positive, got {line_fwhm}")));
    }
    if !(peak_alpha >= 0.0 && peak_alpha.is_finite()) {
        return Err(Error::config(format!("peak alpha must be >= 0, got {peak_alpha}")));
    }
    if line_center - line_fwhm / 2.0 < grid.min_detuning()
        || line_center + line_fwhm / 2.0 > grid.max_detuning()
    {
        return Err(Error::config(format!(
            "grid [{:.4e}, {:.4e}] Hz does not contain line center ± FWHM/2",
            grid.min_detuning(),
            grid.max_detuning()
        )));
    }
    let alpha = grid
        .detunings()
        .into_iter()
        .map(|d| {
            let x = (d - line_center) / line_fwhm;
            peak_alpha * (-4.0 * LN_2 * x * x).exp()
        })
        .collect();
    AbsorptionSpectrum::new(grid.clone(), alpha)
}

/// Peak absorption of a Gaussian line that yields `alpha` at `detuning`.
pub fn peak_alpha_for(line_center: f64, line_fwhm: f64, detuning: f64, alpha: f64) -> f64 {
    let x = (detuning - line_center) / line_fwhm;
    alpha / (-4.0 * LN_2 * x * x).exp()
}

/// Replaces the comb window of `base` with a tooth pattern of the same mean.
pub fn carve_afc(base: &AbsorptionSpectrum, spec: &AfcSpec) -> Result<AbsorptionSpectrum> {
    carve_superposed(base, std::slice::from_ref(spec))
}

/// Carves several gratings into one shared window; the tooth patterns are
/// averaged with equal weight and the window mean is preserved.
pub fn carve_superposed(base: &AbsorptionSpectrum, specs: &[AfcSpec]) -> Result<AbsorptionSpectrum> {
    let first = specs
        .first()
        .ok_or_else(|| Error::config("no comb given to carve"))?;
    for spec in specs {
        spec.validate()?;
        base.grid().check_comb(spec)?;
        if (spec.center_detuning - first.center_detuning).abs() > 1e-6 * first.bandwidth
            || (spec.bandwidth - first.bandwidth).abs() > 1e-6 * first.bandwidth
        {
            return Err(Error::config("superposed combs must share one window"));
        }
    }
    let (lo, hi) = first.window();
    let bins = base.window_bins(lo, hi);
    if bins.is_empty() {
        return Err(Error::config("comb window contains no grid bins"));
    }
    let target = bins.iter().map(|&j| base.alpha[j]).sum::<f64>() / bins.len() as f64;

    let mut modulation = vec![0.0; bins.len()];
    for spec in specs {
        let m = spec.modulation(base.grid(), &bins);
        let mean = m.iter().sum::<f64>() / m.len() as f64;
        for (acc, v) in modulation.iter_mut().zip(m) {
            *acc += v / mean / specs.len() as f64;
        }
    }
    let mut alpha = base.alpha.clone();
    for (&j, m) in bins.iter().zip(&modulation) {
        alpha[j] = target * m;
    }
    AbsorptionSpectrum::new(base.grid().clone(), alpha)
}

/// Fraction of the spectral maximum above which an edge counts as undecayed.
const EDGE_DECAY_TOLERANCE: f64 = 1e-3;

/// Phase per unit length (rad/cm) paired with the absorption by causality.
///
/// The log-amplitude per length `-α/2` is completed to an analytic function;
/// its imaginary part is returned. A constant absorption carries no
/// dispersion, so the smaller edge value is removed first. The remainder is
/// embedded in a grid twice as wide whose outer half continues the edge
/// values with a raised-cosine roll-off to zero. With this sign convention a
/// single absorption line has anomalous dispersion at its center and normal
/// dispersion in its wings; for a Lorentzian `α₀γ²/(Δ²+γ²)` the phase is
/// `-(α₀/2)·Δγ/(Δ²+γ²)`.
pub fn kramers_kronig_phase(spectrum: &AbsorptionSpectrum) -> Vec<f64> {
    let n = spectrum.alpha.len();
    let floor = spectrum.alpha[0].min(spectrum.alpha[n - 1]);
    let peak = spectrum.max_alpha() - floor;
    if peak <= 0.0 {
        return vec![0.0; n];
    }
    let (first, last) = (spectrum.alpha[0] - floor, spectrum.alpha[n - 1] - floor);
    if first.max(last) > EDGE_DECAY_TOLERANCE * peak {
        log::warn!(
            "absorption does not decay at the grid edges ({:.3e}, {:.3e} of peak {:.3e}); \
             extending with a tapered pad",
            first,
            last,
            peak
        );
    }
    let pad = n / 2;
    let mut extended = vec![0.0; 2 * n];
    for i in 0..pad {
        let taper = 0.5 * (1.0 - (PI * i as f64 / pad as f64).cos());
        extended[i] = -0.5 * first * taper;
        extended[2 * n - 1 - i] = -0.5 * last * taper;
    }
    for (j, a) in spectrum.alpha.iter().enumerate() {
        extended[pad + j] = -0.5 * (a - floor);
    }
    let completed = transform::causal_completion(&extended);
    completed[pad..pad + n].iter().map(|z| z.im).collect()
}

/// Complex single-pass amplitude `exp(-α·l/2 + i·φ·l)` per bin.
pub fn single_pass_transfer(
    spectrum: &AbsorptionSpectrum,
    phase: &[f64],
    length_cm: f64,
) -> Result<Vec<Complex64>> {
    if phase.len() != spectrum.alpha.len() {
        return Err(Error::config("phase and absorption arrays are on different grids"));
    }
    if !(length_cm > 0.0) {
        return Err(Error::domain(format!("length must be positive, got {length_cm}")));
    }
    spectrum
        .alpha
        .iter()
        .zip(phase)
        .map(|(&a, &p)| {
            if a < 0.0 {
                Err(Error::domain(format!("negative absorption {a}")))
            } else {
                Ok(Complex64::new(-a * length_cm / 2.0, p * length_cm).exp())
            }
        })
        .collect()
}

/// Absorption, causal phase and single-pass transfer in one call.
pub fn medium_transfer(spectrum: &AbsorptionSpectrum, length_cm: f64) -> Result<Vec<Complex64>> {
    let phase = kramers_kronig_phase(spectrum);
    single_pass_transfer(spectrum, &phase, length_cm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> FrequencyGrid {
        FrequencyGrid::new(0.0, 8e9, 4096).unwrap()
    }

    #[test]
    fn grid_rejects_non_power_of_two() {
        assert!(FrequencyGrid::new(0.0, 1e9, 1000).is_err());
        assert!(FrequencyGrid::new(0.0, -1.0, 1024).is_err());
    }

    #[test]
    fn zero_peak_gives_zero_spectrum() {
        let bg = build_background(&grid(), 0.0, 1e9, 0.0).unwrap();
        assert!(bg.alpha().iter().all(|a| *a == 0.0));
    }

    #[test]
    fn background_symmetric_about_center_bin() {
        let g = grid();
        let bg = build_background(&g, 0.0, 1e9, 2.0).unwrap();
        let c = g.bin_count() / 2;
        for k in 1..c {
            assert!((bg.alpha()[c + k] - bg.alpha()[c - k]).abs() < 1e-15);
        }
        assert_eq!(bg.alpha()[c], 2.0);
    }

    #[test]
    fn background_too_wide_for_grid() {
        assert!(build_background(&grid(), 0.0, 9e9, 1.0).is_err());
    }

    #[test]
    fn matched_peak_alpha_reproduces_target() {
        let peak = peak_alpha_for(0.0, 20e9, -4e9, 1.133);
        let g = FrequencyGrid::new(0.0, 80e9, 16384).unwrap();
        let bg = build_background(&g, 0.0, 20e9, peak).unwrap();
        let x: f64 = -4e9 / 20e9;
        assert!((peak * (-4.0 * LN_2 * x * x).exp() - 1.133).abs() < 1e-12);
        assert!((bg.alpha_at(-4e9).unwrap() - 1.133).abs() < 1e-3);
    }

    #[test]
    fn standard_comb_has_twelve_full_teeth() {
        let spec = AfcSpec::standard(0.0);
        assert_eq!(spec.full_teeth_in_window(), 12);
    }

    #[test]
    fn comb_spec_rejects_bad_parameters() {
        let mut s = AfcSpec::standard(0.0);
        s.finesse = 1.0;
        assert!(s.validate().is_err());
        let mut s = AfcSpec::standard(0.0);
        s.bandwidth = 100e6;
        assert!(s.validate().is_err());
        let mut s = AfcSpec::standard(0.0);
        s.trough_depth = 2.0;
        assert!(s.validate().is_err());
        let mut s = AfcSpec::standard(0.0);
        s.tooth_spacing = 2e6;
        s.bandwidth = 100e6;
        assert!(s.validate().is_err());
    }

    #[test]
    fn carve_rejects_unresolved_teeth() {
        let g = FrequencyGrid::new(0.0, 8e9, 1024).unwrap();
        let bg = AbsorptionSpectrum::uniform(g, 1.0).unwrap();
        assert!(matches!(
            carve_afc(&bg, &AfcSpec::standard(0.0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn carve_rejects_comb_off_grid() {
        let bg = AbsorptionSpectrum::uniform(grid(), 1.0).unwrap();
        assert!(carve_afc(&bg, &AfcSpec::standard(3.9e9)).is_err());
    }

    #[test]
    fn high_finesse_square_troughs_are_zero() {
        let bg = AbsorptionSpectrum::uniform(grid(), 1.0).unwrap();
        let mut spec = AfcSpec::standard(0.0);
        spec.finesse = 8.0;
        spec.tooth_shape = ToothShape::Square;
        let carved = carve_afc(&bg, &spec).unwrap();
        let (lo, hi) = spec.window();
        let bins = carved.window_bins(lo, hi);
        let zeros = bins.iter().filter(|&&j| carved.alpha()[j] == 0.0).count();
        assert!(zeros > bins.len() / 2);
        let trough = carved.alpha_at(spec.center_detuning).unwrap();
        assert_eq!(trough, 0.0);
    }

    #[test]
    fn carve_preserves_window_mean() {
        let g = grid();
        let bg = build_background(&g, 0.3e9, 3e9, 1.7).unwrap();
        for shape in [ToothShape::Gaussian, ToothShape::Square] {
            for finesse in [1.5, 2.0, 4.0] {
                let spec = AfcSpec {
                    finesse,
                    tooth_shape: shape,
                    trough_depth: 0.2,
                    ..AfcSpec::standard(0.0)
                };
                let carved = carve_afc(&bg, &spec).unwrap();
                let (lo, hi) = spec.window();
                let before = bg.window_mean(lo, hi).unwrap();
                let after = carved.window_mean(lo, hi).unwrap();
                assert!((after - before).abs() / before < 1e-12, "{shape:?} {finesse}");
            }
        }
    }

    #[test]
    fn comb_period_from_autocorrelation() {
        let bg = AbsorptionSpectrum::uniform(grid(), 1.0).unwrap();
        let spec = AfcSpec::standard(0.0);
        let carved = carve_afc(&bg, &spec).unwrap();
        let (lo, hi) = spec.window();
        let bins = carved.window_bins(lo, hi);
        let x: Vec<f64> = bins.iter().map(|&j| carved.alpha()[j]).collect();
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let x: Vec<f64> = x.iter().map(|v| v - mean).collect();
        let bw = carved.grid().bin_width();
        // search lags between 0.5 and 1.5 periods
        let lo_lag = (0.5 * spec.tooth_spacing / bw) as usize;
        let hi_lag = (1.5 * spec.tooth_spacing / bw) as usize;
        let best = (lo_lag..=hi_lag)
            .max_by(|&a, &b| {
                let ac = |l: usize| -> f64 {
                    x.iter().zip(&x[l..]).map(|(u, v)| u * v).sum::<f64>() / (x.len() - l) as f64
                };
                ac(a).partial_cmp(&ac(b)).unwrap()
            })
            .unwrap();
        assert!((best as f64 * bw - 40e6).abs() <= bw);
    }

    #[test]
    fn zero_absorption_gives_zero_phase() {
        let z = AbsorptionSpectrum::zeros(grid());
        assert!(kramers_kronig_phase(&z).iter().all(|p| *p == 0.0));
    }

    #[test]
    fn phase_is_odd_about_symmetric_line() {
        let g = grid();
        let bg = build_background(&g, 0.0, 0.5e9, 3.0).unwrap();
        let phase = kramers_kronig_phase(&bg);
        let c = g.bin_count() / 2;
        let max = phase.iter().fold(0.0f64, |m, p| m.max(p.abs()));
        for k in 1..c {
            assert!((phase[c + k] + phase[c - k]).abs() < 1e-6 * max);
        }
        assert!(phase[c].abs() < 1e-6 * max);
    }

    #[test]
    fn lorentzian_phase_matches_closed_form() {
        let g = FrequencyGrid::new(0.0, 40e9, 16384).unwrap();
        let (alpha0, gamma) = (2.0, 50e6);
        let alpha: Vec<f64> = g
            .detunings()
            .iter()
            .map(|d| alpha0 * gamma * gamma / (d * d + gamma * gamma))
            .collect();
        let spec = AbsorptionSpectrum::new(g.clone(), alpha).unwrap();
        let phase = kramers_kronig_phase(&spec);
        let oracle: Vec<f64> = g
            .detunings()
            .iter()
            .map(|d| -alpha0 / 2.0 * d * gamma / (d * d + gamma * gamma))
            .collect();
        let err: f64 = phase.iter().zip(&oracle).map(|(p, o)| (p - o).powi(2)).sum::<f64>();
        let norm: f64 = oracle.iter().map(|o| o * o).sum::<f64>();
        assert!((err / norm).sqrt() < 0.01, "rms rel err {}", (err / norm).sqrt());
    }

    #[test]
    fn transfer_of_empty_medium_is_unity() {
        let z = AbsorptionSpectrum::zeros(grid());
        let t = medium_transfer(&z, 0.4).unwrap();
        assert!(t.iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn transfer_of_uniform_medium() {
        // α·l = 0.9063 → |t|² = e^{-0.9063}
        let u = AbsorptionSpectrum::uniform(grid(), 0.9063 / 0.4).unwrap();
        let t = single_pass_transfer(&u, &vec![0.0; 4096], 0.4).unwrap();
        for v in t {
            assert!((v.norm_sqr() - (-0.9063f64).exp()).abs() < 1e-12);
            assert!((v.norm_sqr() - 0.404).abs() < 1e-3);
        }
    }

    #[test]
    fn constant_absorption_has_no_phase() {
        let u = AbsorptionSpectrum::uniform(grid(), 2.5).unwrap();
        assert!(kramers_kronig_phase(&u).iter().all(|p| *p == 0.0));
    }

    #[test]
    fn transfer_rejects_grid_mismatch() {
        let u = AbsorptionSpectrum::uniform(grid(), 1.0).unwrap();
        assert!(single_pass_transfer(&u, &[0.0; 3], 0.4).is_err());
    }

    #[test]
    fn negative_absorption_rejected() {
        let mut a = vec![0.0; 4096];
        a[7] = -1e-3;
        assert!(matches!(
            AbsorptionSpectrum::new(grid(), a),
            Err(Error::Domain(_))
        ));
    }
}
