//! Time-bin qubits: encoding, storage, interferometric and double-comb
//! analysis, and the fidelity bookkeeping used to judge a memory.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pulse_engine::{self, MemorySetup, TemporalEnvelope};
use crate::spectral_medium::{AfcSpec, FrequencyGrid};

/// Qubit amplitudes on the early and late modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    pub early: Complex64,
    pub late: Complex64,
}

impl QubitState {
    pub fn new(early: Complex64, late: Complex64) -> Result<Self> {
        let norm = early.norm_sqr() + late.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("qubit amplitudes have norm {norm}, not 1")));
        }
        Ok(Self { early, late })
    }

    /// Normalizes arbitrary amplitudes; fails for the zero vector.
    pub fn normalized(early: Complex64, late: Complex64) -> Result<Self> {
        let norm = (early.norm_sqr() + late.norm_sqr()).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::domain("cannot normalize a zero qubit"));
        }
        Ok(Self {
            early: early / norm,
            late: late / norm,
        })
    }

    pub fn from_label(label: QubitLabel) -> Self {
        let h = FRAC_1_SQRT_2;
        let (early, late) = match label {
            QubitLabel::ZPlus => (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
            QubitLabel::ZMinus => (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)),
            QubitLabel::XPlus => (Complex64::new(h, 0.0), Complex64::new(h, 0.0)),
            QubitLabel::XMinus => (Complex64::new(h, 0.0), Complex64::new(-h, 0.0)),
            QubitLabel::YPlus => (Complex64::new(h, 0.0), Complex64::new(0.0, h)),
            QubitLabel::YMinus => (Complex64::new(h, 0.0), Complex64::new(0.0, -h)),
        };
        Self { early, late }
    }

    pub fn z_plus() -> Self {
        Self::from_label(QubitLabel::ZPlus)
    }
    pub fn z_minus() -> Self {
        Self::from_label(QubitLabel::ZMinus)
    }
    pub fn x_plus() -> Self {
        Self::from_label(QubitLabel::XPlus)
    }
    pub fn x_minus() -> Self {
        Self::from_label(QubitLabel::XMinus)
    }
    pub fn y_plus() -> Self {
        Self::from_label(QubitLabel::YPlus)
    }
    pub fn y_minus() -> Self {
        Self::from_label(QubitLabel::YMinus)
    }

    /// Bloch vector `(x, y, z)` with `|e⟩` at the north pole.
    pub fn bloch(&self) -> [f64; 3] {
        let c = self.early.conj() * self.late;
        [
            2.0 * c.re,
            2.0 * c.im,
            self.early.norm_sqr() - self.late.norm_sqr(),
        ]
    }
}

/// The six polar states of the three mutually unbiased bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QubitLabel {
    ZPlus,
    ZMinus,
    XPlus,
    XMinus,
    YPlus,
    YMinus,
}

impl QubitLabel {
    pub const ALL: [QubitLabel; 6] = [
        QubitLabel::ZPlus,
        QubitLabel::ZMinus,
        QubitLabel::XPlus,
        QubitLabel::XMinus,
        QubitLabel::YPlus,
        QubitLabel::YMinus,
    ];

    pub fn is_equatorial(self) -> bool {
        !matches!(self, QubitLabel::ZPlus | QubitLabel::ZMinus)
    }

    /// Analyzer phase at which this equatorial state interferes
    /// constructively in the `+` port.
    pub fn analyzer_phase(self) -> f64 {
        match self {
            QubitLabel::XPlus | QubitLabel::ZPlus | QubitLabel::ZMinus => 0.0,
            QubitLabel::XMinus => PI,
            QubitLabel::YPlus => PI / 2.0,
            QubitLabel::YMinus => -PI / 2.0,
        }
    }
}

impl fmt::Display for QubitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            QubitLabel::ZPlus => "Z+",
            QubitLabel::ZMinus => "Z-",
            QubitLabel::XPlus => "X+",
            QubitLabel::XMinus => "X-",
            QubitLabel::YPlus => "Y+",
            QubitLabel::YMinus => "Y-",
        };
        f.write_str(s)
    }
}

impl FromStr for QubitLabel {
    type Err = Error;

    /// Accepts `Z+`, `x-`, `|Y+>`, `e` (= Z+) and `l` (= Z-).
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let t = t.strip_prefix('|').unwrap_or(t);
        let t = t
            .strip_suffix('>')
            .or_else(|| t.strip_suffix('⟩'))
            .unwrap_or(t);
        let label = match t.to_ascii_uppercase().as_str() {
            "Z+" | "E" => QubitLabel::ZPlus,
            "Z-" | "L" => QubitLabel::ZMinus,
            "X+" => QubitLabel::XPlus,
            "X-" => QubitLabel::XMinus,
            "Y+" => QubitLabel::YPlus,
            "Y-" => QubitLabel::YMinus,
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("unknown qubit state {s:?}; expected one of Z± X± Y±"),
                })
            }
        };
        Ok(label)
    }
}

/// Mapping of a qubit onto two Gaussian temporal modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeBinEncoding {
    pub bin_separation: f64,
    pub mode_fwhm: f64,
    pub mean_photon_number: f64,
    /// Frequency offset of the late mode relative to the early one (Hz).
    pub late_frequency_offset: f64,
}

impl Default for TimeBinEncoding {
    /// 1.4 ns separation; 800 ps mode length taken as twice the FWHM.
    fn default() -> Self {
        Self {
            bin_separation: 1.4e-9,
            mode_fwhm: 0.4e-9,
            mean_photon_number: 0.7,
            late_frequency_offset: 0.0,
        }
    }
}

impl TimeBinEncoding {
    pub fn validate(&self) -> Result<()> {
        if !(self.bin_separation > self.mode_fwhm && self.mode_fwhm > 0.0) {
            return Err(Error::config(format!(
                "bin separation {:.3e} s must exceed mode FWHM {:.3e} s",
                self.bin_separation, self.mode_fwhm
            )));
        }
        if !(self.mean_photon_number > 0.0) {
            return Err(Error::config("mean photon number must be positive"));
        }
        if !self.late_frequency_offset.is_finite() {
            return Err(Error::config("late-mode frequency offset must be finite"));
        }
        Ok(())
    }

    /// Field overlap `⟨g_e|g_l⟩` of the two unit-energy modes.
    pub fn mode_overlap(&self) -> f64 {
        let sigma = self.mode_fwhm / (2.0 * (2.0 * LN_2).sqrt());
        (-self.bin_separation.powi(2) / (8.0 * sigma * sigma)).exp()
    }
}

/// Unit-energy envelope `a_e·g(t - t_e) + a_l·g(t - t_l)`, early mode at
/// `early_time`, on a carrier at `carrier` detuning.
pub fn encode(
    q: &QubitState,
    enc: &TimeBinEncoding,
    grid: &FrequencyGrid,
    early_time: f64,
    carrier: f64,
) -> Result<TemporalEnvelope> {
    enc.validate()?;
    let overlap = enc.mode_overlap();
    if overlap > 0.1 {
        log::warn!("time bins overlap by {overlap:.3}; modes are not orthogonal");
    }
    let early = pulse_engine::gaussian_pulse(enc.mode_fwhm, early_time, grid)?.with_carrier(carrier);
    let late = pulse_engine::gaussian_pulse(enc.mode_fwhm, early_time + enc.bin_separation, grid)?
        .with_carrier(carrier + enc.late_frequency_offset);
    let env = early.scaled(q.early).add(&late.scaled(q.late))?;
    let norm = env.energy().sqrt();
    Ok(env.scaled(Complex64::new(1.0 / norm, 0.0)))
}

/// Energies arriving in the early and late bins, in that order.
pub fn arrival_bins(env: &TemporalEnvelope, enc: &TimeBinEncoding, early_time: f64) -> (f64, f64) {
    let s = enc.bin_separation;
    (
        env.energy_between(early_time - s, early_time + s / 2.0),
        env.energy_between(early_time + s / 2.0, early_time + 2.0 * s),
    )
}

/// Early, middle and late windows of width `s` centered on `t`, `t + s`
/// and `t + 2s`; the outer two are widened by `s/2` to catch the tails.
fn three_windows(e: &TemporalEnvelope, t: f64, s: f64, scale: f64) -> WindowEnergies {
    WindowEnergies {
        early: e.energy_between(t - s, t + s / 2.0) / scale,
        middle: e.energy_between(t + s / 2.0, t + 1.5 * s) / scale,
        late: e.energy_between(t + 1.5 * s, t + 3.0 * s) / scale,
    }
}

/// Unbalanced two-path interferometer used to analyze superposition states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzerConfig {
    pub delay: f64,
    pub phase: f64,
    /// Power splitting `½ ± imbalance` at the beam splitter.
    pub splitter_imbalance: f64,
}

impl AnalyzerConfig {
    pub fn ideal(delay: f64, phase: f64) -> Self {
        Self {
            delay,
            phase,
            splitter_imbalance: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delay > 0.0) {
            return Err(Error::config("analyzer delay must be positive"));
        }
        if !(self.splitter_imbalance.abs() < 0.5) {
            return Err(Error::config("splitter imbalance must lie in (-0.5, 0.5)"));
        }
        Ok(())
    }
}

/// Energies in the early, middle and late detection windows of one port.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WindowEnergies {
    pub early: f64,
    pub middle: f64,
    pub late: f64,
}

impl WindowEnergies {
    pub fn total(&self) -> f64 {
        self.early + self.middle + self.late
    }
}

/// Output of both interferometer ports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferometerOutput {
    pub plus: WindowEnergies,
    pub minus: WindowEnergies,
}

impl InterferometerOutput {
    /// Visibility of the middle window between the two ports.
    pub fn visibility(&self) -> f64 {
        let s = self.plus.middle + self.minus.middle;
        if s > 0.0 {
            (self.plus.middle - self.minus.middle) / s
        } else {
            0.0
        }
    }
}

fn delayed(env: &TemporalEnvelope, delay: f64) -> TemporalEnvelope {
    let grid_span = 1.0 / env.time_step;
    let n = env.len();
    let spec = crate::transform::to_spectrum(&env.samples);
    let shifted: Vec<Complex64> = spec
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let d = (j as f64 - (n / 2) as f64) * grid_span / n as f64;
            s * Complex64::from_polar(1.0, 2.0 * PI * d * delay)
        })
        .collect();
    TemporalEnvelope {
        samples: crate::transform::to_time(&shifted),
        ..env.clone()
    }
}

/// Passes an envelope through the interferometer and integrates both output
/// ports over the three arrival windows. `early_time` is where the early
/// mode of the analyzed envelope arrives.
pub fn analyze_interferometer(
    env: &TemporalEnvelope,
    cfg: &AnalyzerConfig,
    enc: &TimeBinEncoding,
    early_time: f64,
) -> Result<InterferometerOutput> {
    cfg.validate()?;
    if (cfg.delay - enc.bin_separation).abs() > enc.mode_fwhm {
        return Err(Error::config(format!(
            "analyzer delay {:.3e} s differs from bin separation {:.3e} s by more than a mode width",
            cfg.delay, enc.bin_separation
        )));
    }
    let c1 = (0.5 + cfg.splitter_imbalance).sqrt();
    let c2 = (0.5 - cfg.splitter_imbalance).sqrt();
    let long = delayed(env, cfg.delay).scaled(Complex64::from_polar(1.0, cfg.phase));
    let plus = env
        .scaled(Complex64::new(c1 * c1, 0.0))
        .add(&long.scaled(Complex64::new(c2 * c2, 0.0)))?;
    let minus = env
        .scaled(Complex64::new(c1 * c2, 0.0))
        .add(&long.scaled(Complex64::new(-c1 * c2, 0.0)))?;
    let s = enc.bin_separation;
    Ok(InterferometerOutput {
        plus: three_windows(&plus, early_time, s, 1.0),
        minus: three_windows(&minus, early_time, s, 1.0),
    })
}

/// Stores a qubit in a memory holding two superposed combs whose storage
/// times differ by the bin separation, and integrates the recalled field in
/// the three windows around `τ₁`, `τ₂ = τ₁ + s` and `τ₂ + s`.
///
/// The relative comb phase `θ` is applied as a tooth offset of `-θ` on the
/// longer comb, which multiplies its echo by `e^{iθ}`. Energies are
/// normalized to the input energy.
pub fn analyze_double_comb(
    q: &QubitState,
    enc: &TimeBinEncoding,
    comb1: &AfcSpec,
    comb2: &AfcSpec,
    setup: &MemorySetup,
    relative_comb_phase: f64,
) -> Result<WindowEnergies> {
    let grid = setup.grid();
    let dt = grid.time_step();
    let (tau1, tau2) = (comb1.storage_time(), comb2.storage_time());
    if ((tau2 - tau1).abs() - enc.bin_separation).abs() > dt {
        return Err(Error::config(format!(
            "storage times {:.4e} s and {:.4e} s differ by {:.4e} s, not the bin separation {:.4e} s",
            tau1,
            tau2,
            (tau2 - tau1).abs(),
            enc.bin_separation
        )));
    }
    let (short, long) = if tau1 <= tau2 { (comb1, comb2) } else { (comb2, comb1) };
    let long = AfcSpec {
        phase_offset: long.phase_offset - relative_comb_phase,
        ..long.clone()
    };
    let response = setup.cavity_response(&[short.clone(), long])?;
    let input = encode(q, enc, grid, 0.0, short.center_detuning)?;
    let output = pulse_engine::propagate(&input, &response)?;
    Ok(three_windows(
        &output,
        short.storage_time(),
        enc.bin_separation,
        input.energy(),
    ))
}

/// Double-comb analysis with an ideal memory: the two gratings recall the
/// field unchanged after `τ₁` and `τ₁ + s`, each with amplitude `√η / 2`
/// so that `|H|² ≤ η`; the second carries `relative_comb_phase`.
pub fn analyze_ideal_double_comb(
    q: &QubitState,
    enc: &TimeBinEncoding,
    grid: &FrequencyGrid,
    tau1: f64,
    efficiency: f64,
    relative_comb_phase: f64,
) -> Result<WindowEnergies> {
    if !(0.0..=1.0).contains(&efficiency) {
        return Err(Error::domain("efficiency must lie in [0, 1]"));
    }
    let tau2 = tau1 + enc.bin_separation;
    let amp = efficiency.sqrt() / 2.0;
    let transfer: Vec<Complex64> = grid
        .detunings()
        .iter()
        .map(|&d| {
            amp * (Complex64::from_polar(1.0, 2.0 * PI * d * tau1)
                + Complex64::from_polar(1.0, 2.0 * PI * d * tau2 + relative_comb_phase))
        })
        .collect();
    let input = encode(q, enc, grid, 0.0, 0.0)?;
    let output = pulse_engine::apply_transfer(&input, grid, &transfer)?;
    Ok(three_windows(&output, tau1, enc.bin_separation, input.energy()))
}

/// Outcome of analyzing one of the six input states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasisOutcome {
    /// Z-basis input: energy (or counts) in the expected and the other bin.
    TimeOfArrival { correct: f64, wrong: f64 },
    /// Equatorial input: middle-window energy at the constructive and the
    /// destructive setting.
    Interference { constructive: f64, destructive: f64 },
}

impl BasisOutcome {
    pub fn fidelity(&self) -> Result<f64> {
        let (good, bad) = match *self {
            BasisOutcome::TimeOfArrival { correct, wrong } => (correct, wrong),
            BasisOutcome::Interference {
                constructive,
                destructive,
            } => (constructive, destructive),
        };
        if !(good >= 0.0 && bad >= 0.0 && good + bad > 0.0) {
            return Err(Error::domain("outcome has no detections"));
        }
        Ok(good / (good + bad))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityReport {
    pub f_z: f64,
    pub f_xy: f64,
    pub f_avg: f64,
}

impl FidelityReport {
    /// Six-state average: one third Z-basis, two thirds equatorial.
    pub fn from_components(f_z: f64, f_xy: f64) -> Self {
        Self {
            f_z,
            f_xy,
            f_avg: f_z / 3.0 + 2.0 * f_xy / 3.0,
        }
    }
}

/// Combines the outcomes of all six input states into a fidelity report.
pub fn qubit_fidelity(outcomes: &[(QubitLabel, BasisOutcome)]) -> Result<FidelityReport> {
    let mut z = Vec::new();
    let mut xy = Vec::new();
    for label in QubitLabel::ALL {
        let outcome = outcomes
            .iter()
            .find(|(l, _)| *l == label)
            .map(|(_, o)| *o)
            .ok_or_else(|| Error::Missing(format!("no measurement for input state {label}")))?;
        match (label.is_equatorial(), outcome) {
            (false, BasisOutcome::TimeOfArrival { .. }) => z.push(outcome.fidelity()?),
            (true, BasisOutcome::Interference { .. }) => xy.push(outcome.fidelity()?),
            _ => {
                return Err(Error::config(format!(
                    "state {label} was analyzed in the wrong kind of basis"
                )))
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(FidelityReport::from_components(mean(&z), mean(&xy)))
}

/// Transfer function of an ideal memory: a pure delay `τ` with power
/// efficiency `η`.
pub fn ideal_memory_transfer(grid: &FrequencyGrid, storage_time: f64, efficiency: f64) -> Vec<Complex64> {
    let amp = efficiency.sqrt();
    grid.detunings()
        .iter()
        .map(|&d| Complex64::from_polar(amp, 2.0 * PI * d * storage_time))
        .collect()
}

/// Sends all six states through `memory` (a transfer on `grid` that recalls
/// after `storage_time`) and analyzes them: Z states by time of arrival,
/// equatorial states with the interferometer set to their constructive
/// phase. Inputs sit on `carrier`; the recalled field is brought back to
/// baseband before the interferometer. Runs the six inputs concurrently.
pub fn simulate_six_states(
    enc: &TimeBinEncoding,
    grid: &FrequencyGrid,
    memory: &[Complex64],
    storage_time: f64,
    analyzer: &AnalyzerConfig,
    carrier: f64,
) -> Result<Vec<(QubitLabel, BasisOutcome)>> {
    use rayon::prelude::*;
    QubitLabel::ALL
        .par_iter()
        .map(|&label| {
            let input = encode(&QubitState::from_label(label), enc, grid, 0.0, carrier)?;
            let output = pulse_engine::apply_transfer(&input, grid, memory)?.with_carrier(-carrier);
            let outcome = if label.is_equatorial() {
                let cfg = AnalyzerConfig {
                    phase: analyzer.phase + label.analyzer_phase(),
                    ..*analyzer
                };
                let out = analyze_interferometer(&output, &cfg, enc, storage_time)?;
                BasisOutcome::Interference {
                    constructive: out.plus.middle,
                    destructive: out.minus.middle,
                }
            } else {
                let (e, l) = arrival_bins(&output, enc, storage_time);
                let (correct, wrong) = if label == QubitLabel::ZPlus { (e, l) } else { (l, e) };
                BasisOutcome::TimeOfArrival { correct, wrong }
            };
            Ok((label, outcome))
        })
        .collect()
}

/// Linear map the memory applies to the qubit amplitudes: entry
/// `(out, in)` is the overlap of the recalled input mode with the nominal
/// output mode after `storage_time`. The global phase is removed.
pub fn recall_operator(
    enc: &TimeBinEncoding,
    grid: &FrequencyGrid,
    memory: &[Complex64],
    storage_time: f64,
    carrier: f64,
) -> Result<nalgebra::Matrix2<Complex64>> {
    enc.validate()?;
    let s = enc.bin_separation;
    let inputs = [
        pulse_engine::gaussian_pulse(enc.mode_fwhm, 0.0, grid)?.with_carrier(carrier),
        pulse_engine::gaussian_pulse(enc.mode_fwhm, s, grid)?
            .with_carrier(carrier + enc.late_frequency_offset),
    ];
    let refs = [
        pulse_engine::gaussian_pulse(enc.mode_fwhm, storage_time, grid)?.with_carrier(carrier),
        pulse_engine::gaussian_pulse(enc.mode_fwhm, storage_time + s, grid)?.with_carrier(carrier),
    ];
    let mut k = nalgebra::Matrix2::zeros();
    for (j, input) in inputs.iter().enumerate() {
        let out = pulse_engine::apply_transfer(input, grid, memory)?;
        for (i, r) in refs.iter().enumerate() {
            let overlap: Complex64 = r.samples.iter().zip(&out.samples).map(|(a, b)| a.conj() * b).sum();
            k[(i, j)] = overlap * r.time_step;
        }
    }
    let g = k[(0, 0)];
    if g.norm() > 0.0 {
        k *= g.conj() / g.norm();
    }
    Ok(k)
}

/// Known upper bounds on the fidelity of a classical (measure-and-prepare)
/// memory, keyed by mean photon number and recall efficiency.
const CLASSICAL_BOUNDS: &[(f64, f64, f64)] = &[(0.7, 0.07, 0.803)];

/// Looks up the tabulated classical bound; never interpolates.
pub fn classical_bound(mean_photon_number: f64, efficiency: f64) -> Result<f64> {
    CLASSICAL_BOUNDS
        .iter()
        .find(|(mu, eta, _)| (mu - mean_photon_number).abs() < 1e-9 && (eta - efficiency).abs() < 1e-9)
        .map(|(_, _, f)| *f)
        .ok_or_else(|| {
            Error::Unsupported(format!(
                "no classical bound tabulated for mu = {mean_photon_number}, eta = {efficiency}"
            ))
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundVerdict {
    ExceedsBound,
    WithinBound,
}

impl fmt::Display for BoundVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundVerdict::ExceedsBound => f.write_str("exceeds bound"),
            BoundVerdict::WithinBound => f.write_str("does not exceed bound"),
        }
    }
}

pub fn compare_to_bound(fidelity: f64, bound: f64) -> BoundVerdict {
    if fidelity > bound {
        BoundVerdict::ExceedsBound
    } else {
        BoundVerdict::WithinBound
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeBandwidth {
    pub product: f64,
    /// Efficiency in percent times the product.
    pub efficiency_weighted: f64,
}

pub fn time_bandwidth_product(storage_time: f64, bandwidth: f64, efficiency: f64) -> TimeBandwidth {
    let product = storage_time * bandwidth;
    TimeBandwidth {
        product,
        efficiency_weighted: efficiency * 100.0 * product,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> FrequencyGrid {
        FrequencyGrid::new(0.0, 40e9, 8192).unwrap()
    }

    #[test]
    fn named_states_are_exact() {
        let h = FRAC_1_SQRT_2;
        assert_eq!(QubitState::x_minus().late, Complex64::new(-h, 0.0));
        assert_eq!(QubitState::y_plus().late, Complex64::new(0.0, h));
        for l in QubitLabel::ALL {
            let q = QubitState::from_label(l);
            assert!((q.early.norm_sqr() + q.late.norm_sqr() - 1.0).abs() < 1e-12);
        }
        assert!(QubitState::new(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn labels_parse() {
        assert_eq!("X+".parse::<QubitLabel>().unwrap(), QubitLabel::XPlus);
        assert_eq!("|y-⟩".parse::<QubitLabel>().unwrap(), QubitLabel::YMinus);
        assert_eq!("e".parse::<QubitLabel>().unwrap(), QubitLabel::ZPlus);
        assert!("W+".parse::<QubitLabel>().is_err());
        for l in QubitLabel::ALL {
            assert_eq!(l.to_string().parse::<QubitLabel>().unwrap(), l);
        }
    }

    #[test]
    fn z_plus_energy_in_early_bin() {
        let enc = TimeBinEncoding::default();
        let env = encode(&QubitState::z_plus(), &enc, &grid(), 0.0, 0.0).unwrap();
        let (e, l) = arrival_bins(&env, &enc, 0.0);
        assert!((e - 1.0).abs() < 1e-4);
        assert!(l < 1e-4);
    }

    #[test]
    fn x_plus_splits_evenly_and_y_differs_by_phase() {
        let enc = TimeBinEncoding::default();
        let g = grid();
        let x = encode(&QubitState::x_plus(), &enc, &g, 0.0, 0.0).unwrap();
        let y = encode(&QubitState::y_plus(), &enc, &g, 0.0, 0.0).unwrap();
        let (e, l) = arrival_bins(&x, &enc, 0.0);
        assert!((e - 0.5).abs() < 1e-4 && (l - 0.5).abs() < 1e-4);
        // the modes only differ where their tails overlap
        let peak = x.intensity().into_iter().fold(0.0, f64::max);
        for (a, b) in x.intensity().iter().zip(y.intensity()) {
            assert!((a - b).abs() < 1e-3 * peak);
        }
        let i = ((enc.bin_separation - x.t0) / x.time_step).round() as usize;
        let dphi = (y.samples[i] / x.samples[i]).arg();
        assert!((dphi - PI / 2.0).abs() < 1e-6);
    }

    #[test]
    fn interferometer_extremes_for_x_plus() {
        let enc = TimeBinEncoding::default();
        let env = encode(&QubitState::x_plus(), &enc, &grid(), 0.0, 0.0).unwrap();
        let out = analyze_interferometer(&env, &AnalyzerConfig::ideal(enc.bin_separation, 0.0), &enc, 0.0)
            .unwrap();
        assert!((out.plus.middle - 0.5).abs() < 1e-4);
        assert!(out.minus.middle < 1e-4);
        assert!((out.plus.total() + out.minus.total() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn z_states_ignore_analyzer_phase() {
        let enc = TimeBinEncoding::default();
        let env = encode(&QubitState::z_plus(), &enc, &grid(), 0.0, 0.0).unwrap();
        let a = analyze_interferometer(&env, &AnalyzerConfig::ideal(enc.bin_separation, 0.0), &enc, 0.0)
            .unwrap();
        let b = analyze_interferometer(&env, &AnalyzerConfig::ideal(enc.bin_separation, 1.3), &enc, 0.0)
            .unwrap();
        assert!((a.plus.middle - b.plus.middle).abs() < 1e-4);
        assert!((a.minus.middle - b.minus.middle).abs() < 1e-4);
    }

    #[test]
    fn y_plus_at_quarter_phase_matches_x_plus() {
        let enc = TimeBinEncoding::default();
        let g = grid();
        let x = encode(&QubitState::x_plus(), &enc, &g, 0.0, 0.0).unwrap();
        let y = encode(&QubitState::y_plus(), &enc, &g, 0.0, 0.0).unwrap();
        let ox = analyze_interferometer(&x, &AnalyzerConfig::ideal(enc.bin_separation, 0.0), &enc, 0.0)
            .unwrap();
        let oy = analyze_interferometer(&y, &AnalyzerConfig::ideal(enc.bin_separation, PI / 2.0), &enc, 0.0)
            .unwrap();
        assert!((ox.plus.middle - oy.plus.middle).abs() < 1e-4);
    }

    #[test]
    fn mismatched_delay_rejected() {
        let enc = TimeBinEncoding::default();
        let env = encode(&QubitState::x_plus(), &enc, &grid(), 0.0, 0.0).unwrap();
        assert!(analyze_interferometer(&env, &AnalyzerConfig::ideal(3e-9, 0.0), &enc, 0.0).is_err());
    }

    #[test]
    fn fidelity_arithmetic() {
        let r = FidelityReport::from_components(0.976, 0.937);
        assert!((r.f_avg - 0.950).abs() < 1e-12);
        let r = FidelityReport::from_components(1.0, 0.5);
        assert!((r.f_avg - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_needs_all_six_states() {
        let outcomes = vec![(
            QubitLabel::ZPlus,
            BasisOutcome::TimeOfArrival {
                correct: 1.0,
                wrong: 0.0,
            },
        )];
        assert!(matches!(qubit_fidelity(&outcomes), Err(Error::Missing(_))));
    }

    #[test]
    fn perfect_outcomes_give_unit_fidelity() {
        let outcomes: Vec<_> = QubitLabel::ALL
            .iter()
            .map(|&l| {
                let o = if l.is_equatorial() {
                    BasisOutcome::Interference {
                        constructive: 0.5,
                        destructive: 0.0,
                    }
                } else {
                    BasisOutcome::TimeOfArrival {
                        correct: 0.3,
                        wrong: 0.0,
                    }
                };
                (l, o)
            })
            .collect();
        assert_eq!(qubit_fidelity(&outcomes).unwrap().f_avg, 1.0);
    }

    #[test]
    fn ideal_memory_preserves_qubits() {
        let enc = TimeBinEncoding::default();
        let g = grid();
        let tau = 25e-9;
        let h = ideal_memory_transfer(&g, tau, 0.3);
        let out = simulate_six_states(&enc, &g, &h, tau, &AnalyzerConfig::ideal(enc.bin_separation, 0.0), 0.0)
            .unwrap();
        let r = qubit_fidelity(&out).unwrap();
        assert!(r.f_avg > 0.999, "{r:?}");
    }

    #[test]
    fn ideal_double_comb_interferes_like_the_analyzer() {
        let enc = TimeBinEncoding::default();
        let g = grid();
        let on = analyze_ideal_double_comb(&QubitState::x_plus(), &enc, &g, 25e-9, 1.0, 0.0).unwrap();
        let off = analyze_ideal_double_comb(&QubitState::x_plus(), &enc, &g, 25e-9, 1.0, PI).unwrap();
        assert!((on.middle - 0.5).abs() < 1e-4);
        assert!(off.middle < 1e-4);
        assert!((on.early - 0.125).abs() < 1e-4 && (on.late - 0.125).abs() < 1e-4);
    }

    #[test]
    fn recall_operator_of_delay_line_is_scaled_identity() {
        let enc = TimeBinEncoding::default();
        let g = grid();
        let h = ideal_memory_transfer(&g, 25e-9, 0.25);
        let k = recall_operator(&enc, &g, &h, 25e-9, 0.0).unwrap();
        assert!((k[(0, 0)] - Complex64::new(0.5, 0.0)).norm() < 1e-9);
        assert!((k[(1, 1)] - Complex64::new(0.5, 0.0)).norm() < 1e-9);
        let leak = 0.5 * enc.mode_overlap();
        assert!((k[(0, 1)].norm() - leak).abs() < 1e-6 && (k[(1, 0)].norm() - leak).abs() < 1e-6);
    }

    #[test]
    fn classical_bound_table() {
        assert_eq!(classical_bound(0.7, 0.07).unwrap(), 0.803);
        assert!(matches!(classical_bound(0.7, 0.08), Err(Error::Unsupported(_))));
        assert_eq!(compare_to_bound(0.95, 0.803), BoundVerdict::ExceedsBound);
        assert_eq!(compare_to_bound(0.85, 0.803), BoundVerdict::ExceedsBound);
        assert_eq!(compare_to_bound(0.70, 0.803), BoundVerdict::WithinBound);
    }

    #[test]
    fn time_bandwidth_examples() {
        let tb = time_bandwidth_product(100e-9, 1.5e9, 0.07);
        assert!((tb.product - 150.0).abs() < 1e-9);
        assert!((tb.efficiency_weighted - 1050.0).abs() < 1e-4);
        assert!((time_bandwidth_product(25e-9, 500e6, 0.1).product - 12.5).abs() < 1e-12);
    }
}
