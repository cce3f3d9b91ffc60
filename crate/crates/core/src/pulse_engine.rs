//! Pulse propagation through the memory, echo extraction and efficiencies.

use std::f64::consts::{LN_2, PI};
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cavity::{self, CavityConfig, CavityResponse};
use crate::error::{Error, Result};
use crate::spectral_medium::{self, AbsorptionSpectrum, AfcSpec, FrequencyGrid};
use crate::transform;

/// Complex baseband envelope on a uniform time axis starting at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalEnvelope {
    pub time_step: f64,
    pub t0: f64,
    pub samples: Vec<Complex64>,
}

impl TemporalEnvelope {
    /// All-zero envelope on the time axis conjugate to `grid`.
    pub fn zeros(grid: &FrequencyGrid) -> Self {
        Self {
            time_step: grid.time_step(),
            t0: grid.time_origin(),
            samples: vec![Complex64::new(0.0, 0.0); grid.bin_count()],
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.time_step
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.norm_sqr()).collect()
    }

    /// `∫|E|² dt`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.time_step
    }

    /// Energy inside `[start, end)`.
    pub fn energy_between(&self, start: f64, end: f64) -> f64 {
        self.samples
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let t = self.time(*i);
                t >= start && t < end
            })
            .map(|(_, s)| s.norm_sqr())
            .sum::<f64>()
            * self.time_step
    }

    /// Time of the largest intensity inside `[start, end)`.
    pub fn peak_time_between(&self, start: f64, end: f64) -> Option<f64> {
        self.samples
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let t = self.time(*i);
                t >= start && t < end
            })
            .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
            .map(|(i, _)| self.time(i))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * factor).collect(),
            ..self.clone()
        }
    }

    /// Moves the envelope to a carrier at `detuning` from the grid center.
    pub fn with_carrier(&self, detuning: f64) -> Self {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| s * Complex64::from_polar(1.0, -2.0 * PI * detuning * self.time(i)))
            .collect();
        Self {
            samples,
            ..self.clone()
        }
    }

    /// Sample-wise sum of two envelopes on the same axis.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_axis(other)?;
        Ok(Self {
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a + b)
                .collect(),
            ..self.clone()
        })
    }

    fn check_same_axis(&self, other: &Self) -> Result<()> {
        if self.len() != other.len()
            || (self.time_step - other.time_step).abs() > 1e-12 * self.time_step
            || (self.t0 - other.t0).abs() > 1e-9 * self.time_step
        {
            return Err(Error::config("envelopes are on different time axes"));
        }
        Ok(())
    }

    /// Writes `time_ns,intensity_norm`, normalized to `reference_peak`.
    pub fn write_csv<W: Write>(&self, reference_peak: f64, mut out: W) -> Result<()> {
        if !(reference_peak > 0.0) {
            return Err(Error::config("reference peak intensity must be positive"));
        }
        writeln!(out, "time_ns,intensity_norm")?;
        for (i, s) in self.samples.iter().enumerate() {
            writeln!(out, "{:.6},{:.9e}", self.time(i) * 1e9, s.norm_sqr() / reference_peak)?;
        }
        Ok(())
    }
}

/// Unit-energy Gaussian envelope (intensity FWHM `fwhm`) at the grid center
/// frequency, peaked at `peak_time`.
pub fn gaussian_pulse(fwhm: f64, peak_time: f64, grid: &FrequencyGrid) -> Result<TemporalEnvelope> {
    let mut env = TemporalEnvelope::zeros(grid);
    if !(fwhm >= 8.0 * env.time_step) {
        return Err(Error::config(format!(
            "pulse FWHM {:.3e} s is under 8 time steps of {:.3e} s",
            fwhm, env.time_step
        )));
    }
    let sigma = fwhm / (2.0 * (2.0 * LN_2).sqrt());
    let start = env.t0;
    let end = env.t0 + grid.time_window();
    if peak_time - 5.0 * sigma < start || peak_time + 5.0 * sigma > end {
        return Err(Error::config(format!(
            "pulse at {:.3e} s with 5σ margins does not fit in [{:.3e}, {:.3e}) s",
            peak_time, start, end
        )));
    }
    for (i, s) in env.samples.iter_mut().enumerate() {
        let t = start + i as f64 * grid.time_step() - peak_time;
        // field amplitude, so intensity has FWHM `fwhm`
        *s = Complex64::new((-t * t / (4.0 * sigma * sigma)).exp(), 0.0);
    }
    let norm = env.energy().sqrt();
    Ok(env.scaled(Complex64::new(1.0 / norm, 0.0)))
}

/// Filters an envelope by a spectral transfer function on `grid`.
pub fn apply_transfer(
    input: &TemporalEnvelope,
    grid: &FrequencyGrid,
    transfer: &[Complex64],
) -> Result<TemporalEnvelope> {
    let conjugate = (input.time_step * grid.span() - 1.0).abs() < 1e-9;
    if input.len() != grid.bin_count() || transfer.len() != grid.bin_count() || !conjugate {
        return Err(Error::config(
            "envelope time axis is not conjugate to the response grid",
        ));
    }
    let mut spectrum = transform::to_spectrum(&input.samples);
    for (s, h) in spectrum.iter_mut().zip(transfer) {
        *s *= h;
    }
    Ok(TemporalEnvelope {
        time_step: input.time_step,
        t0: input.t0,
        samples: transform::to_time(&spectrum),
    })
}

/// Field reflected by the cavity for the given input field.
pub fn propagate(input: &TemporalEnvelope, response: &CavityResponse) -> Result<TemporalEnvelope> {
    apply_transfer(input, &response.grid, &response.reflection)
}

/// Placement of the integration windows for echo extraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoWindows {
    /// Time of the input pulse; window `k` is centered at `reference + k·τ`.
    pub reference_time: f64,
    pub storage_time: f64,
    pub echo_count: usize,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EchoWindow {
    pub index: usize,
    pub start: f64,
    pub end: f64,
    pub energy_fraction: f64,
    pub peak_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EchoReport {
    pub storage_time: f64,
    /// Window 0 is the prompt reflection, window k the k-th echo.
    pub windows: Vec<EchoWindow>,
    pub efficiency: f64,
    pub reflected_prompt_fraction: f64,
}

impl EchoReport {
    pub fn echo_fractions(&self) -> Vec<f64> {
        self.windows.iter().skip(1).map(|w| w.energy_fraction).collect()
    }

    pub fn first_echo_time(&self) -> Option<f64> {
        self.windows.get(1).and_then(|w| w.peak_time)
    }
}

/// Integrates `|E|²` around the prompt and each echo.
pub fn extract_echoes(
    output: &TemporalEnvelope,
    input_energy: f64,
    windows: EchoWindows,
) -> Result<EchoReport> {
    let EchoWindows {
        reference_time,
        storage_time,
        echo_count,
        width,
    } = windows;
    if !(width > 0.0 && storage_time > 0.0) {
        return Err(Error::config("echo window width and storage time must be positive"));
    }
    if width >= storage_time {
        return Err(Error::config(format!(
            "echo windows of {:.3e} s overlap at storage time {:.3e} s",
            width, storage_time
        )));
    }
    if !(input_energy > 0.0) {
        return Err(Error::config("input energy must be positive"));
    }
    let windows: Vec<EchoWindow> = (0..=echo_count)
        .map(|k| {
            let center = reference_time + k as f64 * storage_time;
            let (start, end) = (center - width / 2.0, center + width / 2.0);
            EchoWindow {
                index: k,
                start,
                end,
                energy_fraction: output.energy_between(start, end) / input_energy,
                peak_time: output.peak_time_between(start, end),
            }
        })
        .collect();
    Ok(EchoReport {
        storage_time,
        efficiency: windows.get(1).map_or(0.0, |w| w.energy_fraction),
        reflected_prompt_fraction: windows[0].energy_fraction,
        windows,
    })
}

/// Fixed linear losses between the memory and the outside world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossChain {
    /// Power transmission through the input-output splitter, each way combined.
    pub splitter: f64,
    pub coupling: f64,
}

impl Default for LossChain {
    /// 50 % splitter loss and 6 % coupling and lensing loss.
    fn default() -> Self {
        Self {
            splitter: 0.50,
            coupling: 0.94,
        }
    }
}

impl LossChain {
    pub fn factor(&self) -> f64 {
        self.splitter * self.coupling
    }

    pub fn system_efficiency(&self, memory_efficiency: f64) -> f64 {
        memory_efficiency * self.factor()
    }

    pub fn memory_efficiency(&self, system_efficiency: f64) -> f64 {
        system_efficiency / self.factor()
    }
}

/// Energy bookkeeping for one propagation, relative to the input energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBudget {
    pub reflected: f64,
    pub transmitted: f64,
    pub dissipated: f64,
}

/// Everything produced by storing one pulse.
#[derive(Debug, Clone)]
pub struct StorageRun {
    pub input: TemporalEnvelope,
    pub output: TemporalEnvelope,
    pub transmitted: TemporalEnvelope,
    pub report: EchoReport,
    pub budget: EnergyBudget,
}

/// Crystal, cavity and the absorption background they share.
#[derive(Debug, Clone)]
pub struct MemorySetup {
    pub cavity: CavityConfig,
    pub background: AbsorptionSpectrum,
}

/// Default echo window: three input pulse widths.
pub const ECHO_WINDOW_FACTOR: f64 = 3.0;

impl MemorySetup {
    pub fn new(cavity: CavityConfig, background: AbsorptionSpectrum) -> Result<Self> {
        cavity.validate()?;
        Ok(Self { cavity, background })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        self.background.grid()
    }

    /// Background with the given gratings carved into one shared window.
    pub fn spectrum_with(&self, combs: &[AfcSpec]) -> Result<AbsorptionSpectrum> {
        if combs.is_empty() {
            Ok(self.background.clone())
        } else {
            spectral_medium::carve_superposed(&self.background, combs)
        }
    }

    pub fn cavity_response(&self, combs: &[AfcSpec]) -> Result<CavityResponse> {
        cavity::response_for(&self.cavity, &self.spectrum_with(combs)?)
    }

    /// Transfer of the bare crystal (no mirrors), including the transit delay.
    pub fn bare_transfer(&self, combs: &[AfcSpec]) -> Result<Vec<Complex64>> {
        let spectrum = self.spectrum_with(combs)?;
        let t = spectral_medium::medium_transfer(&spectrum, self.cavity.length_cm)?;
        Ok(t)
    }

    /// Input pulse centered on the comb, peaked at t = 0.
    pub fn input_pulse(&self, fwhm: f64, carrier: f64) -> Result<TemporalEnvelope> {
        Ok(gaussian_pulse(fwhm, 0.0, self.grid())?.with_carrier(carrier))
    }

    pub fn echo_windows(&self, comb: &AfcSpec, pulse_fwhm: f64, echo_count: usize) -> EchoWindows {
        EchoWindows {
            reference_time: 0.0,
            storage_time: comb.storage_time(),
            echo_count,
            width: ECHO_WINDOW_FACTOR * pulse_fwhm,
        }
    }

    /// Stores one Gaussian pulse in the cavity memory.
    pub fn store(&self, comb: &AfcSpec, pulse_fwhm: f64, echo_count: usize) -> Result<StorageRun> {
        let response = self.cavity_response(std::slice::from_ref(comb))?;
        self.store_with(&response, comb, pulse_fwhm, echo_count)
    }

    fn store_with(
        &self,
        response: &CavityResponse,
        comb: &AfcSpec,
        pulse_fwhm: f64,
        echo_count: usize,
    ) -> Result<StorageRun> {
        let input = self.input_pulse(pulse_fwhm, comb.center_detuning)?;
        let output = propagate(&input, response)?;
        let transmitted = apply_transfer(&input, &response.grid, &response.transmission)?;
        let e_in = input.energy();
        let report = extract_echoes(
            &output,
            e_in,
            self.echo_windows(comb, pulse_fwhm, echo_count),
        )?;
        let reflected = output.energy() / e_in;
        let trans = transmitted.energy() / e_in;
        Ok(StorageRun {
            budget: EnergyBudget {
                reflected,
                transmitted: trans,
                dissipated: 1.0 - reflected - trans,
            },
            input,
            output,
            transmitted,
            report,
        })
    }

    /// First-echo efficiency of the bare comb in forward transmission.
    pub fn single_pass_efficiency(&self, comb: &AfcSpec, pulse_fwhm: f64) -> Result<f64> {
        let transfer = self.bare_transfer(std::slice::from_ref(comb))?;
        let input = self.input_pulse(pulse_fwhm, comb.center_detuning)?;
        let output = apply_transfer(&input, self.grid(), &transfer)?;
        let report = extract_echoes(&output, input.energy(), self.echo_windows(comb, pulse_fwhm, 1))?;
        Ok(report.efficiency)
    }

    /// Memory efficiency and prompt reflection with the comb moved to each
    /// center detuning.
    pub fn efficiency_vs_detuning(
        &self,
        comb: &AfcSpec,
        pulse_fwhm: f64,
        detunings: &[f64],
    ) -> Result<DetuningTable> {
        let rows = detunings
            .par_iter()
            .map(|&d| {
                let shifted = AfcSpec {
                    center_detuning: d,
                    ..comb.clone()
                };
                let run = self.store(&shifted, pulse_fwhm, 1)?;
                Ok(DetuningRow {
                    detuning: d,
                    efficiency: run.report.efficiency,
                    prompt_reflection: run.report.reflected_prompt_fraction,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DetuningTable { rows })
    }

    /// Memory efficiency for combs of different total width. The input
    /// pulse keeps a fixed duration-bandwidth product with the comb.
    pub fn efficiency_vs_bandwidth(
        &self,
        comb: &AfcSpec,
        pulse_bandwidth_product: f64,
        bandwidths: &[f64],
    ) -> Result<Vec<(f64, f64)>> {
        bandwidths
            .par_iter()
            .map(|&b| {
                let c = AfcSpec {
                    bandwidth: b,
                    ..comb.clone()
                };
                let run = self.store(&c, pulse_bandwidth_product / b, 1)?;
                Ok((b, run.report.efficiency))
            })
            .collect()
    }

    /// Coupling latency for `comb`, using the mean background absorption
    /// over its window.
    pub fn echo_latency(&self, comb: &AfcSpec) -> f64 {
        let (lo, hi) = comb.window();
        let alpha = self.background.window_mean(lo, hi).unwrap_or(0.0);
        self.coupling_latency(alpha, comb.center_detuning)
    }

    /// Group delay added by coupling into and out of the cavity for light
    /// re-emitted by the medium, evaluated with uniform absorption
    /// `mean_alpha` at `detuning`.
    pub fn coupling_latency(&self, mean_alpha: f64, detuning: f64) -> f64 {
        let cfg = &self.cavity;
        let path = |d: f64| {
            let a2 = Complex64::from_polar(
                (-mean_alpha * cfg.length_cm).exp() * (1.0 - cfg.excess_round_trip_loss).sqrt(),
                2.0 * PI * (d - cfg.resonance_detuning) * 2.0 * cfg.refractive_index
                    * cfg.length_cm
                    / cavity::SPEED_OF_LIGHT_CM,
            );
            let denom = Complex64::new(1.0, 0.0) - (cfg.r1 * cfg.r2).sqrt() * a2;
            a2 / (denom * denom)
        };
        let h = 1e-4 * cfg.free_spectral_range();
        let dphi = (path(detuning + h) / path(detuning - h)).arg();
        dphi / (2.0 * PI * 2.0 * h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetuningRow {
    pub detuning: f64,
    pub efficiency: f64,
    pub prompt_reflection: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetuningTable {
    pub rows: Vec<DetuningRow>,
}

impl DetuningTable {
    pub fn best(&self) -> Option<DetuningRow> {
        self.rows
            .iter()
            .cloned()
            .max_by(|a, b| a.efficiency.total_cmp(&b.efficiency))
    }

    pub fn write_csv<W: Write>(&self, losses: LossChain, mut out: W) -> Result<()> {
        writeln!(out, "detuning_Hz,memory_efficiency,system_efficiency,prompt_reflection")?;
        for r in &self.rows {
            writeln!(
                out,
                "{:.6e},{:.9e},{:.9e},{:.9e}",
                r.detuning,
                r.efficiency,
                losses.system_efficiency(r.efficiency),
                r.prompt_reflection
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_medium::build_background;

    fn grid() -> FrequencyGrid {
        FrequencyGrid::new(0.0, 20e9, 8192).unwrap()
    }

    #[test]
    fn gaussian_has_unit_energy() {
        let p = gaussian_pulse(4e-9, 0.0, &grid()).unwrap();
        assert!((p.energy() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gaussian_spectral_width_is_transform_limited() {
        let g = grid();
        let p = gaussian_pulse(4e-9, 0.0, &g).unwrap();
        let spec: Vec<f64> = transform::to_spectrum(&p.samples)
            .iter()
            .map(|s| s.norm_sqr())
            .collect();
        let peak = spec.iter().cloned().fold(0.0, f64::max);
        let above = spec.iter().filter(|s| **s >= peak / 2.0).count() as f64;
        let fwhm = above * g.bin_width();
        assert!((fwhm - 0.441 / 4e-9).abs() < 2.0 * g.bin_width(), "{fwhm}");
    }

    #[test]
    fn undersampled_or_clipped_pulse_rejected() {
        assert!(gaussian_pulse(1e-11, 0.0, &grid()).is_err());
        assert!(gaussian_pulse(4e-9, -20e-9, &grid()).is_err());
    }

    #[test]
    fn cross_correlation_peaks_at_separation() {
        let g = grid();
        let a = gaussian_pulse(1e-9, 0.0, &g).unwrap();
        let b = gaussian_pulse(1e-9, 7e-9, &g).unwrap();
        let n = a.len() as i64;
        let best = (-500..500i64)
            .max_by(|&x, &y| {
                let cc = |lag: i64| -> f64 {
                    (0..n)
                        .filter_map(|i| {
                            let j = i + lag;
                            (0..n).contains(&j).then(|| (a.samples[i as usize].conj() * b.samples[j as usize]).re)
                        })
                        .sum()
                };
                cc(x).total_cmp(&cc(y))
            })
            .unwrap();
        assert!((best as f64 * a.time_step - 7e-9).abs() <= a.time_step);
    }

    #[test]
    fn identity_filter_returns_input() {
        let g = grid();
        let p = gaussian_pulse(2e-9, 3e-9, &g).unwrap().with_carrier(1e9);
        let out = apply_transfer(&p, &g, &vec![Complex64::new(1.0, 0.0); g.bin_count()]).unwrap();
        let peak = p.samples.iter().map(|s| s.norm()).fold(0.0, f64::max);
        for (a, b) in p.samples.iter().zip(&out.samples) {
            assert!((a - b).norm() < 1e-12 * peak);
        }
    }

    #[test]
    fn delay_phase_shifts_pulse() {
        let g = grid();
        let p = gaussian_pulse(2e-9, 0.0, &g).unwrap();
        let delay = 40.0 * g.time_step();
        let h: Vec<Complex64> = g
            .detunings()
            .iter()
            .map(|d| Complex64::from_polar(1.0, 2.0 * PI * d * delay))
            .collect();
        let out = apply_transfer(&p, &g, &h).unwrap();
        assert!((out.energy() - 1.0).abs() < 1e-9);
        let t = out.peak_time_between(-1.0, 1.0).unwrap();
        assert!((t - delay).abs() < 0.5 * g.time_step());
    }

    #[test]
    fn grid_mismatch_rejected() {
        let p = gaussian_pulse(2e-9, 0.0, &grid()).unwrap();
        let other = FrequencyGrid::new(0.0, 10e9, 8192).unwrap();
        assert!(apply_transfer(&p, &other, &vec![Complex64::new(1.0, 0.0); 8192]).is_err());
    }

    #[test]
    fn zero_output_has_no_echoes() {
        let g = grid();
        let z = TemporalEnvelope::zeros(&g);
        let w = EchoWindows {
            reference_time: 0.0,
            storage_time: 25e-9,
            echo_count: 3,
            width: 6e-9,
        };
        let r = extract_echoes(&z, 1.0, w).unwrap();
        assert!(r.windows.iter().all(|w| w.energy_fraction == 0.0));
        assert_eq!(r.efficiency, 0.0);
    }

    #[test]
    fn scaled_delayed_copy_gives_square_efficiency() {
        let g = grid();
        let tau = 25e-9;
        let p = gaussian_pulse(2e-9, tau, &g).unwrap();
        let s = 0.37;
        let out = p.scaled(Complex64::new(s, 0.0));
        let w = EchoWindows {
            reference_time: 0.0,
            storage_time: tau,
            echo_count: 2,
            width: 6e-9,
        };
        let r = extract_echoes(&out, 1.0, w).unwrap();
        // a ±1.5 FWHM window holds all but ~5e-4 of a Gaussian
        assert!((r.efficiency - s * s).abs() < 1e-3 * s * s);
    }

    #[test]
    fn overlapping_windows_rejected() {
        let z = TemporalEnvelope::zeros(&grid());
        let w = EchoWindows {
            reference_time: 0.0,
            storage_time: 5e-9,
            echo_count: 2,
            width: 6e-9,
        };
        assert!(extract_echoes(&z, 1.0, w).is_err());
    }

    #[test]
    fn loss_chain_relates_system_and_memory() {
        let l = LossChain::default();
        assert!((l.factor() - 0.47).abs() < 1e-12);
        assert!((l.system_efficiency(0.275) - 0.12925).abs() < 1e-12);
    }

    #[test]
    fn no_absorber_means_no_echo() {
        let g = FrequencyGrid::new(0.0, 40e9, 8192).unwrap();
        let setup = MemorySetup::new(
            CavityConfig::reference(),
            build_background(&g, 0.0, 10e9, 0.0).unwrap(),
        )
        .unwrap();
        let comb = AfcSpec::standard(-4e9);
        let table = setup
            .efficiency_vs_detuning(&comb, 2e-9, &[-4e9, -2e9])
            .unwrap();
        for row in table.rows {
            assert!(row.efficiency < 1e-12);
        }
    }
}
