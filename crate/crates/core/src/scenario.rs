//! Scenario files: a TOML description of the crystal, cavity, combs, pulses,
//! qubit encoding, pair source and run settings. Every key carries its unit
//! in its name. Loading validates the whole file and reports every problem
//! at once.

use std::path::Path;

use serde::Deserialize;

use crate::cavity::CavityConfig;
use crate::error::{Error, Result, ValidationError};
use crate::photon_stats::{DetectorModel, MemoryDecay, PairSourceConfig, PairStatistics};
use crate::pulse_engine::{LossChain, MemorySetup};
use crate::spectral_medium::{self, AfcSpec, FrequencyGrid, ToothShape};
use crate::timebin_qubit::{AnalyzerConfig, TimeBinEncoding};
use crate::tomography::InputSet;

/// The scenario shipped with the crate.
pub const DEFAULT_SCENARIO: &str = include_str!("../scenarios/default.toml");

const GHZ: f64 = 1e9;
const MHZ: f64 = 1e6;
const NS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub center_ghz: f64,
    pub span_ghz: f64,
    pub bins: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            center_ghz: 0.0,
            span_ghz: 80.0,
            bins: 16384,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundSection {
    pub line_center_ghz: f64,
    pub line_fwhm_ghz: f64,
    /// Absorption at `reference_ghz`; the line peak follows from it.
    pub alpha_per_cm: f64,
    pub reference_ghz: f64,
}

impl Default for BackgroundSection {
    fn default() -> Self {
        Self {
            line_center_ghz: 0.0,
            line_fwhm_ghz: 20.0,
            alpha_per_cm: 1.133,
            reference_ghz: -4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySection {
    pub r1: f64,
    pub r2: f64,
    pub length_cm: f64,
    pub refractive_index: f64,
    #[serde(default)]
    pub excess_loss: f64,
    pub resonance_ghz: f64,
}

impl Default for CavitySection {
    fn default() -> Self {
        Self {
            r1: 0.40,
            r2: 0.99,
            length_cm: 0.4,
            refractive_index: 1.82,
            excess_loss: 0.0,
            resonance_ghz: -4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AfcSection {
    pub center_ghz: f64,
    pub bandwidth_mhz: f64,
    pub spacing_mhz: f64,
    pub finesse: f64,
    #[serde(default = "one")]
    pub peak_depth: f64,
    #[serde(default)]
    pub trough_depth: f64,
    #[serde(default)]
    pub tooth_shape: ToothShape,
    #[serde(default)]
    pub phase_rad: f64,
}

fn one() -> f64 {
    1.0
}

impl AfcSection {
    pub fn spec(&self) -> AfcSpec {
        AfcSpec {
            center_detuning: self.center_ghz * GHZ,
            bandwidth: self.bandwidth_mhz * MHZ,
            tooth_spacing: self.spacing_mhz * MHZ,
            finesse: self.finesse,
            peak_depth: self.peak_depth,
            trough_depth: self.trough_depth,
            tooth_shape: self.tooth_shape,
            phase_offset: self.phase_rad,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    pub fwhm_ns: f64,
    pub echoes: usize,
}

impl Default for PulseSection {
    fn default() -> Self {
        Self {
            fwhm_ns: 2.0,
            echoes: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub detuning_start_ghz: f64,
    pub detuning_stop_ghz: f64,
    pub detuning_step_mhz: f64,
    pub reflection_step_mhz: f64,
    /// Probe duration of the reflection sweep; 0 means monochromatic.
    pub probe_duration_ns: f64,
    pub bandwidths_mhz: Vec<f64>,
    /// Pulse FWHM times comb bandwidth in the bandwidth sweep.
    pub pulse_bandwidth_product: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            detuning_start_ghz: -9.0,
            detuning_stop_ghz: 1.0,
            detuning_step_mhz: 500.0,
            reflection_step_mhz: 50.0,
            probe_duration_ns: 0.0,
            bandwidths_mhz: vec![200.0, 500.0, 1000.0, 1600.0],
            pulse_bandwidth_product: 1.0,
        }
    }
}

impl SweepSection {
    pub fn detunings(&self) -> Vec<f64> {
        steps(self.detuning_start_ghz * GHZ, self.detuning_stop_ghz * GHZ, self.detuning_step_mhz * MHZ)
    }

    pub fn reflection_detunings(&self) -> Vec<f64> {
        steps(self.detuning_start_ghz * GHZ, self.detuning_stop_ghz * GHZ, self.reflection_step_mhz * MHZ)
    }

    pub fn bandwidths(&self) -> Vec<f64> {
        self.bandwidths_mhz.iter().map(|b| b * MHZ).collect()
    }
}

fn steps(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || stop < start {
        return Vec::new();
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| start + k as f64 * step).collect()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSection {
    pub splitter: f64,
    pub coupling: f64,
}

impl Default for LossSection {
    fn default() -> Self {
        let l = LossChain::default();
        Self {
            splitter: l.splitter,
            coupling: l.coupling,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitSection {
    pub bin_separation_ns: f64,
    pub mode_fwhm_ns: f64,
    pub mean_photon_number: f64,
    #[serde(default)]
    pub late_offset_mhz: f64,
    #[serde(default)]
    pub splitter_imbalance: f64,
    #[serde(default)]
    pub analyzer_phase_rad: f64,
    #[serde(default)]
    pub relative_comb_phase_rad: f64,
    /// Frequency bins of the qubit grid (same span as `[grid]`).
    pub bins: usize,
}

impl QubitSection {
    pub fn encoding(&self) -> TimeBinEncoding {
        TimeBinEncoding {
            bin_separation: self.bin_separation_ns * NS,
            mode_fwhm: self.mode_fwhm_ns * NS,
            mean_photon_number: self.mean_photon_number,
            late_frequency_offset: self.late_offset_mhz * MHZ,
        }
    }

    pub fn analyzer(&self) -> AnalyzerConfig {
        AnalyzerConfig {
            delay: self.bin_separation_ns * NS,
            phase: self.analyzer_phase_rad,
            splitter_imbalance: self.splitter_imbalance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    /// Either a mean pair number, or a dark-free g² the source must reach.
    pub mean_pairs: Option<f64>,
    pub target_g2: Option<f64>,
    pub signal_efficiency: f64,
    pub idler_efficiency: f64,
    pub dark_rate_signal_hz: f64,
    pub dark_rate_idler_hz: f64,
    pub coincidence_window_ns: f64,
    pub repetition_rate_mhz: f64,
    #[serde(default)]
    pub signal_bandwidth_ghz: f64,
    #[serde(default)]
    pub idler_bandwidth_ghz: f64,
    #[serde(default)]
    pub statistics: PairStatistics,
    #[serde(default)]
    pub detector: DetectorModel,
    pub jitter_ps: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemoryDecaySection {
    pub efficiency: f64,
    pub decay_time_ns: f64,
    /// Added signal-channel noise; calibrated from `target_g2` when absent.
    pub noise_rate_hz: Option<f64>,
    pub target_g2: Option<f64>,
    pub calibration_time_ns: Option<f64>,
    pub storage_times_ns: Vec<f64>,
    pub windows: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InputSetName {
    #[default]
    Four,
    Six,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographySection {
    pub shots: u64,
    pub white_noise: f64,
    #[serde(default)]
    pub inputs: InputSetName,
    pub bloch_samples: usize,
}

impl TomographySection {
    pub fn input_set(&self) -> InputSet {
        match self.inputs {
            InputSetName::Four => InputSet::Four,
            InputSetName::Six => InputSet::Six,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub resolution_scale: f64,
    pub output_dir: String,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 7,
            resolution_scale: 1.0,
            output_dir: "out".into(),
        }
    }
}

/// A complete, validated scenario.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub background: BackgroundSection,
    #[serde(default)]
    pub cavity: CavitySection,
    pub afc: Option<AfcSection>,
    /// Comb used for qubit storage; `afc2` is its partner for double-comb
    /// analysis.
    pub qubit_afc: Option<AfcSection>,
    pub afc2: Option<AfcSection>,
    #[serde(default)]
    pub pulse: PulseSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub losses: LossSection,
    pub qubit: Option<QubitSection>,
    pub source: Option<SourceSection>,
    pub memory: Option<MemoryDecaySection>,
    pub tomography: Option<TomographySection>,
    #[serde(default)]
    pub run: RunSection,
}

/// 1-based line of a byte offset.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl Scenario {
    pub fn defaults() -> Self {
        Self::from_toml_str(DEFAULT_SCENARIO).expect("shipped scenario is valid")
    }

    /// Parses and validates; returns every validation problem at once.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map_or(1, |r| line_of(text, r.start)),
            message: e.message().to_string(),
        })?;
        let problems = s.validation_errors();
        if problems.is_empty() {
            Ok(s)
        } else {
            Err(Error::Validation(problems))
        }
    }

    /// Stable text used for hashing into the run manifest.
    /// The output directory is left out; it does not change any result.
    pub fn canonical_text(&self) -> String {
        let mut s = self.clone();
        s.run.output_dir.clear();
        format!("{s:?}")
    }

    pub fn validation_errors(&self) -> Vec<ValidationError> {
        let mut v = Vec::new();
        let push_all = |v: &mut Vec<ValidationError>, path: &str, r: Result<()>| {
            if let Err(e) = r {
                let msg = match e {
                    Error::Config(m) | Error::Domain(m) => m,
                    other => other.to_string(),
                };
                for part in msg.split("; ") {
                    v.push(ValidationError::new(path, part));
                }
            }
        };

        let g = &self.grid;
        let scaled = g.bins as f64 * self.run.resolution_scale;
        if !(self.run.resolution_scale > 0.0) || scaled.fract() != 0.0 || !(scaled as usize).is_power_of_two() {
            v.push(ValidationError::new(
                "run.resolution_scale",
                format!("bins × scale = {scaled} must be a power of two"),
            ));
        }
        if !(g.span_ghz > 0.0) {
            v.push(ValidationError::new("grid.span_ghz", "span must be positive"));
        }
        if !g.bins.is_power_of_two() || g.bins < 256 {
            v.push(ValidationError::new("grid.bins", "bins must be a power of two >= 256"));
        }
        let grid = self.grid().ok();

        let b = &self.background;
        if !(b.line_fwhm_ghz > 0.0) {
            v.push(ValidationError::new("background.line_fwhm_ghz", "line FWHM must be positive"));
        }
        if !(b.alpha_per_cm >= 0.0 && b.alpha_per_cm.is_finite()) {
            v.push(ValidationError::new("background.alpha_per_cm", "alpha >= 0 violated"));
        }
        if grid.is_some() && b.line_fwhm_ghz > 0.0 {
            push_all(&mut v, "background", self.background_spectrum().map(|_| ()));
        }

        push_all(&mut v, "cavity", self.cavity_config().validate());

        for (name, sec) in [("afc", &self.afc), ("qubit_afc", &self.qubit_afc), ("afc2", &self.afc2)] {
            if let Some(a) = sec {
                let spec = a.spec();
                push_all(&mut v, name, spec.validate());
                let check_grid = if name == "afc" { self.grid() } else { self.qubit_grid() };
                if let (Ok(gr), Ok(())) = (check_grid, spec.validate()) {
                    push_all(&mut v, name, gr.check_comb(&spec));
                }
            }
        }
        if self.afc2.is_some() && self.qubit_afc.is_none() {
            v.push(ValidationError::new("afc2", "double-comb partner needs a [qubit_afc] section"));
        }
        if let (Some(a), Some(b), Some(q)) = (&self.qubit_afc, &self.afc2, &self.qubit) {
            let gap = (1.0 / (b.spacing_mhz * MHZ) - 1.0 / (a.spacing_mhz * MHZ)).abs();
            let dt = self.qubit_grid().map(|g| g.time_step()).unwrap_or(0.0);
            if (gap - q.bin_separation_ns * NS).abs() > dt {
                v.push(ValidationError::new(
                    "afc2.spacing_mhz",
                    format!(
                        "storage-time gap {:.4} ns must equal the bin separation {:.4} ns",
                        gap / NS,
                        q.bin_separation_ns
                    ),
                ));
            }
        }

        let p = &self.pulse;
        if !(p.fwhm_ns > 0.0) {
            v.push(ValidationError::new("pulse.fwhm_ns", "pulse FWHM must be positive"));
        }
        if let (Some(a), Ok(gr)) = (&self.afc, self.grid()) {
            let tau = 1.0 / (a.spacing_mhz * MHZ);
            let width = crate::pulse_engine::ECHO_WINDOW_FACTOR * p.fwhm_ns * NS;
            if width >= tau {
                v.push(ValidationError::new(
                    "pulse.fwhm_ns",
                    "echo windows (3 × FWHM) overlap at this storage time",
                ));
            }
            if p.fwhm_ns * NS < 8.0 * gr.time_step() {
                v.push(ValidationError::new("pulse.fwhm_ns", "pulse is shorter than 8 time steps"));
            }
            let last = (p.echoes as f64 + 0.5) * tau;
            if last > 0.9 * gr.time_window() + gr.time_origin() {
                v.push(ValidationError::new(
                    "pulse.echoes",
                    "last echo window falls outside the time window; increase grid.bins",
                ));
            }
            if !(10e-9..=250e-9).contains(&tau) {
                v.push(ValidationError::new(
                    "afc.spacing_mhz",
                    "storage time must lie in [10, 250] ns",
                ));
            }
        }

        let s = &self.sweep;
        if !(s.detuning_step_mhz > 0.0 && s.reflection_step_mhz > 0.0) {
            v.push(ValidationError::new("sweep", "steps must be positive"));
        }
        if s.detuning_stop_ghz < s.detuning_start_ghz {
            v.push(ValidationError::new("sweep", "stop detuning is below start"));
        }
        if !(s.probe_duration_ns >= 0.0) {
            v.push(ValidationError::new("sweep.probe_duration_ns", "must be >= 0"));
        }
        if !(s.pulse_bandwidth_product > 0.0) {
            v.push(ValidationError::new("sweep.pulse_bandwidth_product", "must be positive"));
        }
        if let (Some(a), Ok(gr)) = (&self.afc, self.grid()) {
            for d in s.detunings() {
                let spec = AfcSpec {
                    center_detuning: d,
                    ..a.spec()
                };
                if gr.check_comb(&spec).is_err() {
                    v.push(ValidationError::new(
                        "sweep",
                        format!("comb at {:.3} GHz leaves the grid", d / GHZ),
                    ));
                    break;
                }
            }
            for bw in s.bandwidths() {
                let spec = AfcSpec { bandwidth: bw, ..a.spec() };
                if let Err(e) = spec.validate().and_then(|_| gr.check_comb(&spec)) {
                    v.push(ValidationError::new("sweep.bandwidths_mhz", e.to_string()));
                }
                if s.pulse_bandwidth_product / bw < 8.0 * gr.time_step() {
                    v.push(ValidationError::new(
                        "sweep.bandwidths_mhz",
                        format!("pulse for {:.0} MHz is under 8 time steps", bw / MHZ),
                    ));
                }
            }
        }

        for (path, x) in [("losses.splitter", self.losses.splitter), ("losses.coupling", self.losses.coupling)] {
            if !(0.0..=1.0).contains(&x) {
                v.push(ValidationError::new(path, "transmission in [0,1] violated"));
            }
        }

        if let Some(q) = &self.qubit {
            push_all(&mut v, "qubit", q.encoding().validate());
            push_all(&mut v, "qubit", q.analyzer().validate());
            if !q.bins.is_power_of_two() {
                v.push(ValidationError::new("qubit.bins", "bins must be a power of two"));
            }
            if let Ok(gr) = self.qubit_grid() {
                if q.mode_fwhm_ns * NS < 8.0 * gr.time_step() {
                    v.push(ValidationError::new("qubit.mode_fwhm_ns", "mode is shorter than 8 time steps"));
                }
            }
        }
        if let Some(src) = &self.source {
            match (src.mean_pairs, src.target_g2) {
                (Some(_), Some(_)) | (None, None) => v.push(ValidationError::new(
                    "source",
                    "give exactly one of mean_pairs and target_g2",
                )),
                (None, Some(t)) if !(t > 2.0) => {
                    v.push(ValidationError::new("source.target_g2", "target must exceed 2"))
                }
                _ => {}
            }
            if !(src.jitter_ps >= 0.0) {
                v.push(ValidationError::new("source.jitter_ps", "must be >= 0"));
            }
            push_all(&mut v, "source", self.raw_source(src.mean_pairs.unwrap_or(0.01)).validate());
        }
        if let Some(m) = &self.memory {
            if self.source.is_none() {
                v.push(ValidationError::new("memory", "memory decay needs a [source] section"));
            }
            if !(0.0..=1.0).contains(&m.efficiency) {
                v.push(ValidationError::new("memory.efficiency", "efficiency in [0,1] violated"));
            }
            if !(m.decay_time_ns > 0.0) {
                v.push(ValidationError::new("memory.decay_time_ns", "must be positive"));
            }
            match (m.noise_rate_hz, m.target_g2, m.calibration_time_ns) {
                (Some(r), None, None) if r >= 0.0 => {}
                (None, Some(t), Some(c)) if t > 1.0 && c >= 0.0 => {}
                _ => v.push(ValidationError::new(
                    "memory",
                    "give noise_rate_hz >= 0, or target_g2 > 1 with calibration_time_ns",
                )),
            }
            if m.storage_times_ns.is_empty() || m.storage_times_ns.iter().any(|t| !(*t >= 0.0)) {
                v.push(ValidationError::new("memory.storage_times_ns", "need storage times >= 0"));
            }
            if m.windows < 10_000 {
                v.push(ValidationError::new("memory.windows", "need at least 10000 windows"));
            }
        }
        if let Some(t) = &self.tomography {
            if t.shots == 0 {
                v.push(ValidationError::new("tomography.shots", "need at least one shot"));
            }
            if !(0.0..=1.0).contains(&t.white_noise) {
                v.push(ValidationError::new("tomography.white_noise", "fraction in [0,1] violated"));
            }
            if t.bloch_samples == 0 {
                v.push(ValidationError::new("tomography.bloch_samples", "need at least one sample"));
            }
        }
        v
    }

    fn scaled_bins(&self, bins: usize) -> usize {
        (bins as f64 * self.run.resolution_scale).round() as usize
    }

    pub fn grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::new(
            self.grid.center_ghz * GHZ,
            self.grid.span_ghz * GHZ,
            self.scaled_bins(self.grid.bins),
        )
    }

    /// Grid for qubit storage; finer than the main one when the double comb
    /// needs it.
    pub fn qubit_grid(&self) -> Result<FrequencyGrid> {
        let bins = self.qubit.as_ref().map_or(self.grid.bins, |q| q.bins);
        FrequencyGrid::new(self.grid.center_ghz * GHZ, self.grid.span_ghz * GHZ, self.scaled_bins(bins))
    }

    fn spectrum_on(&self, grid: &FrequencyGrid) -> Result<spectral_medium::AbsorptionSpectrum> {
        let b = &self.background;
        let peak = spectral_medium::peak_alpha_for(
            b.line_center_ghz * GHZ,
            b.line_fwhm_ghz * GHZ,
            b.reference_ghz * GHZ,
            b.alpha_per_cm,
        );
        spectral_medium::build_background(grid, b.line_center_ghz * GHZ, b.line_fwhm_ghz * GHZ, peak)
    }

    pub fn background_spectrum(&self) -> Result<spectral_medium::AbsorptionSpectrum> {
        self.spectrum_on(&self.grid()?)
    }

    pub fn cavity_config(&self) -> CavityConfig {
        let c = &self.cavity;
        CavityConfig {
            r1: c.r1,
            r2: c.r2,
            length_cm: c.length_cm,
            refractive_index: c.refractive_index,
            excess_round_trip_loss: c.excess_loss,
            resonance_detuning: c.resonance_ghz * GHZ,
        }
    }

    pub fn memory_setup(&self) -> Result<MemorySetup> {
        MemorySetup::new(self.cavity_config(), self.background_spectrum()?)
    }

    pub fn qubit_memory_setup(&self) -> Result<MemorySetup> {
        MemorySetup::new(self.cavity_config(), self.spectrum_on(&self.qubit_grid()?)?)
    }

    pub fn loss_chain(&self) -> LossChain {
        LossChain {
            splitter: self.losses.splitter,
            coupling: self.losses.coupling,
        }
    }

    /// `[afc]` settings, or an error naming the section and the command needing it.
    pub fn require_afc(&self, command: &str) -> Result<AfcSpec> {
        self.afc
            .as_ref()
            .map(AfcSection::spec)
            .ok_or_else(|| Error::Missing(format!("scenario has no [afc] section, required by `{command}`")))
    }

    pub fn require_qubit(&self, command: &str) -> Result<&QubitSection> {
        self.qubit
            .as_ref()
            .ok_or_else(|| Error::Missing(format!("scenario has no [qubit] section, required by `{command}`")))
    }

    pub fn require_qubit_afc(&self, command: &str) -> Result<AfcSpec> {
        self.qubit_afc
            .as_ref()
            .map(AfcSection::spec)
            .ok_or_else(|| Error::Missing(format!("scenario has no [qubit_afc] section, required by `{command}`")))
    }

    pub fn require_afc2(&self, command: &str) -> Result<AfcSpec> {
        self.afc2
            .as_ref()
            .map(AfcSection::spec)
            .ok_or_else(|| Error::Missing(format!("scenario has no [afc2] section, required by `{command}`")))
    }

    pub fn require_tomography(&self, command: &str) -> Result<&TomographySection> {
        self.tomography
            .as_ref()
            .ok_or_else(|| Error::Missing(format!("scenario has no [tomography] section, required by `{command}`")))
    }

    fn raw_source(&self, mean_pairs: f64) -> PairSourceConfig {
        let s = self.source.as_ref().expect("checked by caller");
        PairSourceConfig {
            mean_pairs_per_window: mean_pairs,
            signal_channel_efficiency: s.signal_efficiency,
            idler_channel_efficiency: s.idler_efficiency,
            dark_rate_signal: s.dark_rate_signal_hz,
            dark_rate_idler: s.dark_rate_idler_hz,
            coincidence_window: s.coincidence_window_ns * NS,
            repetition_rate: s.repetition_rate_mhz * MHZ,
            signal_bandwidth: s.signal_bandwidth_ghz * GHZ,
            idler_bandwidth: s.idler_bandwidth_ghz * GHZ,
            statistics: s.statistics,
            detector: s.detector,
            jitter_sigma: s.jitter_ps * 1e-12,
            correlated: true,
        }
    }

    /// Pair source, solving for the mean pair number when a target g² is
    /// given (dark counts off while solving).
    pub fn pair_source(&self, command: &str) -> Result<PairSourceConfig> {
        let s = self
            .source
            .as_ref()
            .ok_or_else(|| Error::Missing(format!("scenario has no [source] section, required by `{command}`")))?;
        let mu = match (s.mean_pairs, s.target_g2) {
            (Some(mu), _) => mu,
            (None, Some(target)) => {
                let dark_free = PairSourceConfig {
                    dark_rate_signal: 0.0,
                    dark_rate_idler: 0.0,
                    ..self.raw_source(0.01)
                };
                crate::photon_stats::solve_mean_pairs(&dark_free, target)?
            }
            (None, None) => return Err(Error::config("source needs mean_pairs or target_g2")),
        };
        Ok(self.raw_source(mu))
    }

    pub fn memory_decay(&self, command: &str) -> Result<(MemoryDecay, Vec<f64>, u64)> {
        let m = self
            .memory
            .as_ref()
            .ok_or_else(|| Error::Missing(format!("scenario has no [memory] section, required by `{command}`")))?;
        let base = MemoryDecay {
            efficiency_at_zero: m.efficiency,
            decay_time: m.decay_time_ns * NS,
            noise_rate: m.noise_rate_hz.unwrap_or(0.0),
        };
        let decay = match (m.noise_rate_hz, m.target_g2, m.calibration_time_ns) {
            (None, Some(target), Some(t)) => base.calibrate_noise(&self.pair_source(command)?, t * NS, target)?,
            _ => base,
        };
        let times = m.storage_times_ns.iter().map(|t| t * NS).collect();
        Ok((decay, times, m.windows))
    }
}

impl Scenario {
    /// Re-runs validation after fields were overridden.
    pub fn checked(self) -> Result<Self> {
        let problems = self.validation_errors();
        if problems.is_empty() {
            Ok(self)
        } else {
            Err(Error::Validation(problems))
        }
    }
}

/// Parses a list like `25,50,75,100ns` or `25ns, 0.1us` into seconds. A
/// unit on the last entry applies to every entry that has none.
pub fn parse_storage_times(text: &str) -> Result<Vec<f64>> {
    const UNITS: [(&str, f64); 4] = [("ns", 1e-9), ("us", 1e-6), ("ms", 1e-3), ("s", 1.0)];
    let bad = |m: String| Error::Parse { line: 1, message: m };
    let split_unit = |item: &str| -> (String, Option<f64>) {
        let t = item.trim();
        for (u, f) in UNITS {
            if let Some(num) = t.strip_suffix(u) {
                return (num.trim().to_string(), Some(f));
            }
        }
        (t.to_string(), None)
    };
    let items: Vec<(String, Option<f64>)> = text.split(',').map(split_unit).collect();
    let default = items
        .last()
        .and_then(|(_, u)| *u)
        .ok_or_else(|| bad(format!("storage times {text:?} need a unit such as ns")))?;
    items
        .iter()
        .map(|(num, unit)| {
            let v: f64 = num
                .parse()
                .map_err(|_| bad(format!("bad storage time {num:?}")))?;
            let t = v * unit.unwrap_or(default);
            if !(t.is_finite() && t >= 0.0) {
                return Err(bad(format!("storage time {num:?} must be finite and non-negative")));
            }
            Ok(t)
        })
        .collect()
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
    Scenario::from_toml_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn storage_time_lists() {
        let t = parse_storage_times("25,50,75,100ns").unwrap();
        assert_eq!(t.len(), 4);
        assert!((t[3] - 100e-9).abs() < 1e-21);
        let t = parse_storage_times("25ns, 0.1us").unwrap();
        assert!((t[1] - 100e-9).abs() < 1e-21);
        assert!(parse_storage_times("25,50").is_err());
        assert!(parse_storage_times("x ns").is_err());
        assert!(parse_storage_times("-5ns").is_err());
        assert!(parse_storage_times("").is_err());
    }

    #[test]
    fn shipped_scenario_loads() {
        let s = Scenario::from_toml_str(DEFAULT_SCENARIO).unwrap();
        assert!(s.validation_errors().is_empty());
        assert!(s.afc.is_some() && s.qubit.is_some() && s.source.is_some());
        assert_eq!(s.cavity_config(), CavityConfig::reference());
    }

    #[test]
    fn bad_mirror_names_the_invariant() {
        let text = DEFAULT_SCENARIO.replace("r1 = 0.40", "r1 = 1.4");
        let err = Scenario::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("R1 in [0,1]"), "{err}");
    }

    #[test]
    fn all_errors_are_reported() {
        let text = DEFAULT_SCENARIO
            .replace("r1 = 0.40", "r1 = 1.4")
            .replace("r2 = 0.99", "r2 = -0.1")
            .replace("shots = 100000", "shots = 0");
        match Scenario::from_toml_str(&text) {
            Err(Error::Validation(list)) => {
                assert!(list.len() >= 3, "{list:?}");
                assert!(list.iter().any(|e| e.path == "tomography.shots"));
            }
            other => panic!("expected validation errors, got {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "[grid]\ncenter_ghz = 0.0\nspan_ghz = = 3\n";
        match Scenario::from_toml_str(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        let text = "[cavity]\nr1 = 0.4\nmirror = 3\n";
        assert!(matches!(Scenario::from_toml_str(text), Err(Error::Parse { .. })));
    }

    #[test]
    fn missing_afc_is_named() {
        let s = Scenario::from_toml_str("").unwrap();
        let err = s.require_afc("store").unwrap_err();
        assert!(err.to_string().contains("[afc]") && err.to_string().contains("store"));
    }

    #[test]
    fn steps_are_inclusive() {
        assert_eq!(steps(-1.0, 1.0, 0.5).len(), 5);
        assert!(steps(1.0, 0.0, 0.5).is_empty());
    }
}
