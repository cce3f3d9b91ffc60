//! Pipelines behind each command and figure. Every pipeline returns its
//! CSV tables as named strings; [`write_outputs`] puts them on disk next to
//! a run manifest.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::cavity;
use crate::error::{Error, Result};
use crate::photon_stats;
use crate::pulse_engine;
use crate::scenario::Scenario;
use crate::spectral_medium;
use crate::timebin_qubit::{self as tq, BasisOutcome, QubitLabel, QubitState};
use crate::tomography::{self as tomo, DensityMatrix, Estimation, KrausNoiseChannel};

/// A named CSV table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub name: String,
    pub contents: String,
}

fn table(name: impl Into<String>, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Output> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(Output {
        name: name.into(),
        contents: String::from_utf8(buf).expect("tables are UTF-8"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    F2a,
    F2b,
    F2c,
    F3,
    F4a,
    F4b,
    F4c,
}

impl FigureId {
    pub const ALL: [FigureId; 7] = [
        FigureId::F2a,
        FigureId::F2b,
        FigureId::F2c,
        FigureId::F3,
        FigureId::F4a,
        FigureId::F4b,
        FigureId::F4c,
    ];
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FigureId::F2a => "2a",
            FigureId::F2b => "2b",
            FigureId::F2c => "2c",
            FigureId::F3 => "3",
            FigureId::F4a => "4a",
            FigureId::F4b => "4b",
            FigureId::F4c => "4c",
        })
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let t = t.strip_prefix("fig").unwrap_or(&t);
        FigureId::ALL
            .into_iter()
            .find(|f| f.to_string() == t)
            .ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("unknown figure {s:?}; expected one of 2a 2b 2c 3 4a 4b 4c"),
            })
    }
}

/// Absorption and dispersion of the crystal with the comb carved in.
pub fn comb(s: &Scenario) -> Result<Vec<Output>> {
    let setup = s.memory_setup()?;
    let spec = setup.spectrum_with(&[s.require_afc("comb")?])?;
    let phase = spectral_medium::kramers_kronig_phase(&spec);
    Ok(vec![table("comb_spectrum.csv", |b| spec.write_csv(&phase, b))?])
}

/// Reflected power of the empty (no comb) cavity across the line.
pub fn cavity_sweep(s: &Scenario) -> Result<Vec<Output>> {
    let setup = s.memory_setup()?;
    let probe = if s.sweep.probe_duration_ns == 0.0 {
        f64::INFINITY
    } else {
        s.sweep.probe_duration_ns * 1e-9
    };
    let sweep = cavity::reflection_sweep(&setup.cavity, &setup.background, probe, &s.sweep.reflection_detunings())?;
    Ok(vec![table("reflection_sweep.csv", |b| sweep.write_csv(b))?])
}

/// Reflected trace of one stored pulse and its echo energies.
pub fn store(s: &Scenario) -> Result<Vec<Output>> {
    let setup = s.memory_setup()?;
    let comb = s.require_afc("store")?;
    let run = setup.store(&comb, s.pulse.fwhm_ns * 1e-9, s.pulse.echoes)?;
    let peak = run.input.intensity().into_iter().fold(0.0, f64::max);
    let losses = s.loss_chain();
    let trace = table("store_trace.csv", |b| run.output.write_csv(peak, b))?;
    let echoes = table("store_echoes.csv", |b| {
        writeln!(b, "index,window_start_ns,window_end_ns,peak_time_ns,energy_fraction")?;
        for w in &run.report.windows {
            writeln!(
                b,
                "{},{:.4},{:.4},{},{:.9e}",
                w.index,
                w.start * 1e9,
                w.end * 1e9,
                w.peak_time.map_or("".into(), |t| format!("{:.4}", t * 1e9)),
                w.energy_fraction
            )?;
        }
        writeln!(b)?;
        writeln!(b, "quantity,value")?;
        writeln!(b, "memory_efficiency,{:.9e}", run.report.efficiency)?;
        writeln!(b, "system_efficiency,{:.9e}", losses.system_efficiency(run.report.efficiency))?;
        writeln!(b, "transmitted,{:.9e}", run.budget.transmitted)?;
        writeln!(b, "dissipated,{:.9e}", run.budget.dissipated)?;
        Ok(())
    })?;
    Ok(vec![trace, echoes])
}

pub fn sweep_detuning(s: &Scenario) -> Result<Vec<Output>> {
    let setup = s.memory_setup()?;
    let comb = s.require_afc("sweep-detuning")?;
    let t = setup.efficiency_vs_detuning(&comb, s.pulse.fwhm_ns * 1e-9, &s.sweep.detunings())?;
    Ok(vec![table("efficiency_vs_detuning.csv", |b| t.write_csv(s.loss_chain(), b))?])
}

pub fn sweep_bandwidth(s: &Scenario) -> Result<Vec<Output>> {
    let setup = s.memory_setup()?;
    let comb = s.require_afc("sweep-bandwidth")?;
    let rows = setup.efficiency_vs_bandwidth(&comb, s.sweep.pulse_bandwidth_product, &s.sweep.bandwidths())?;
    let losses = s.loss_chain();
    Ok(vec![table("efficiency_vs_bandwidth.csv", |b| {
        writeln!(b, "bandwidth_Hz,memory_efficiency,system_efficiency")?;
        for (bw, eta) in &rows {
            writeln!(b, "{:.6e},{:.9e},{:.9e}", bw, eta, losses.system_efficiency(*eta))?;
        }
        Ok(())
    })?])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Analysis {
    Interferometer,
    DoubleComb,
}

impl FromStr for Analysis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "interferometer" => Ok(Analysis::Interferometer),
            "double-comb" | "doublecomb" => Ok(Analysis::DoubleComb),
            _ => Err(Error::Parse {
                line: 1,
                message: format!("unknown analysis {s:?}; expected interferometer or double-comb"),
            }),
        }
    }
}

/// Qubit storage in the cavity memory: the recall transfer, its grid and
/// the time at which the early mode comes back.
struct QubitMemory {
    grid: spectral_medium::FrequencyGrid,
    transfer: Vec<num_complex::Complex64>,
    recall_time: f64,
    carrier: f64,
}

fn qubit_memory(s: &Scenario, command: &str) -> Result<QubitMemory> {
    let setup = s.qubit_memory_setup()?;
    let comb = s.require_qubit_afc(command)?;
    let response = setup.cavity_response(std::slice::from_ref(&comb))?;
    Ok(QubitMemory {
        grid: setup.grid().clone(),
        transfer: response.reflection,
        recall_time: comb.storage_time() + setup.echo_latency(&comb),
        carrier: comb.center_detuning,
    })
}

fn windows_table(name: &str, rows: &[(&str, tq::WindowEnergies)]) -> Result<Output> {
    table(name, |b| {
        writeln!(b, "port,early,middle,late")?;
        for (port, w) in rows {
            writeln!(b, "{port},{:.9e},{:.9e},{:.9e}", w.early, w.middle, w.late)?;
        }
        Ok(())
    })
}

fn fidelity_table(s: &Scenario, report: &tq::FidelityReport) -> Result<Output> {
    let q = s.require_qubit("qubit")?;
    let bound = s
        .memory
        .as_ref()
        .and_then(|m| tq::classical_bound(q.mean_photon_number, m.efficiency).ok());
    table("qubit_fidelity.csv", |b| {
        writeln!(b, "F_z,F_xy,F_avg,classical_bound,verdict")?;
        match bound {
            Some(fb) => writeln!(
                b,
                "{:.9},{:.9},{:.9},{:.3},{}",
                report.f_z,
                report.f_xy,
                report.f_avg,
                fb,
                tq::compare_to_bound(report.f_avg, fb)
            )?,
            None => writeln!(b, "{:.9},{:.9},{:.9},,", report.f_z, report.f_xy, report.f_avg)?,
        }
        Ok(())
    })
}

/// Six-state fidelity from double-comb analysis: Z states by arrival after
/// the short comb alone, equatorial states from the middle window at the
/// matching and the opposite relative comb phase.
pub fn double_comb_fidelity(s: &Scenario) -> Result<tq::FidelityReport> {
    let q = s.require_qubit("qubit")?;
    let enc = q.encoding();
    let setup = s.qubit_memory_setup()?;
    let c1 = s.require_qubit_afc("qubit")?;
    let c2 = s.require_afc2("qubit")?;
    use rayon::prelude::*;
    let outcomes = QubitLabel::ALL
        .par_iter()
        .map(|&label| {
            let state = QubitState::from_label(label);
            let outcome = if label.is_equatorial() {
                let phi = q.relative_comb_phase_rad + label.analyzer_phase();
                let on = tq::analyze_double_comb(&state, &enc, &c1, &c2, &setup, phi)?;
                let off = tq::analyze_double_comb(&state, &enc, &c1, &c2, &setup, phi + PI)?;
                BasisOutcome::Interference {
                    constructive: on.middle,
                    destructive: off.middle,
                }
            } else {
                let mem = qubit_memory(s, "qubit")?;
                let input = tq::encode(&state, &enc, &mem.grid, 0.0, mem.carrier)?;
                let out = pulse_engine::apply_transfer(&input, &mem.grid, &mem.transfer)?;
                let (e, l) = tq::arrival_bins(&out, &enc, mem.recall_time);
                let (correct, wrong) = if label == QubitLabel::ZPlus { (e, l) } else { (l, e) };
                BasisOutcome::TimeOfArrival { correct, wrong }
            };
            Ok((label, outcome))
        })
        .collect::<Result<Vec<_>>>()?;
    tq::qubit_fidelity(&outcomes)
}

pub fn qubit(s: &Scenario, state: QubitLabel, analysis: Analysis) -> Result<Vec<Output>> {
    let q = s.require_qubit("qubit")?;
    let enc = q.encoding();
    let qs = QubitState::from_label(state);
    match analysis {
        Analysis::Interferometer => {
            let mem = qubit_memory(s, "qubit")?;
            let input = tq::encode(&qs, &enc, &mem.grid, 0.0, mem.carrier)?;
            let out = pulse_engine::apply_transfer(&input, &mem.grid, &mem.transfer)?;
            let an = q.analyzer();
            let cfg = tq::AnalyzerConfig {
                phase: an.phase + state.analyzer_phase(),
                ..an
            };
            // the analyzer sees the recalled field on the comb carrier
            let out = out.with_carrier(-mem.carrier);
            let ports = tq::analyze_interferometer(&out, &cfg, &enc, mem.recall_time)?;
            let outcomes = tq::simulate_six_states(&enc, &mem.grid, &mem.transfer, mem.recall_time, &an, mem.carrier)?;
            let report = tq::qubit_fidelity(&outcomes)?;
            Ok(vec![
                windows_table("qubit_windows.csv", &[("plus", ports.plus), ("minus", ports.minus)])?,
                fidelity_table(s, &report)?,
            ])
        }
        Analysis::DoubleComb => {
            let setup = s.qubit_memory_setup()?;
            let c1 = s.require_qubit_afc("qubit")?;
            let c2 = s.require_afc2("qubit")?;
            let w = tq::analyze_double_comb(&qs, &enc, &c1, &c2, &setup, q.relative_comb_phase_rad + state.analyzer_phase())?;
            let report = double_comb_fidelity(s)?;
            Ok(vec![
                windows_table("qubit_windows.csv", &[("double-comb", w)])?,
                fidelity_table(s, &report)?,
            ])
        }
    }
}

pub fn g2(s: &Scenario, seed: u64) -> Result<Vec<Output>> {
    let source = s.pair_source("g2")?;
    let (decay, times, windows) = s.memory_decay("g2")?;
    let rows = photon_stats::g2_vs_storage_time(&source, &decay, &times, windows, seed)?;
    let mut out = vec![table("g2_vs_storage.csv", |b| photon_stats::write_storage_csv(&rows, b))?];
    for r in &rows {
        out.push(table(
            format!("g2_histogram_{:.0}ns.csv", r.storage_time * 1e9),
            |b| photon_stats::write_histogram_csv(&r.result, b),
        )?);
    }
    out.push(table("g2_model.csv", |b| {
        writeln!(b, "quantity,value")?;
        writeln!(b, "mean_pairs_per_window,{:.9e}", source.mean_pairs_per_window)?;
        writeln!(b, "memory_noise_rate_Hz,{:.9e}", decay.noise_rate)?;
        for r in &rows {
            writeln!(b, "analytic_g2_{:.0}ns,{:.6}", r.storage_time * 1e9, r.analytic)?;
        }
        Ok(())
    })?);
    Ok(out)
}

/// Memory channel on the qubit: the recall operator of the simulated
/// cavity memory followed by white noise, post-selected on recall.
pub fn memory_channel(s: &Scenario) -> Result<KrausNoiseChannel> {
    let q = s.require_qubit("tomography")?;
    let t = s.require_tomography("tomography")?;
    let mem = qubit_memory(s, "tomography")?;
    let kraus = tq::recall_operator(&q.encoding(), &mem.grid, &mem.transfer, mem.recall_time, mem.carrier)?;
    Ok(KrausNoiseChannel {
        kraus,
        white_noise: t.white_noise,
    })
}

pub fn process_matrix(s: &Scenario, seed: u64) -> Result<tomo::ProcessMatrix> {
    let t = s.require_tomography("tomography")?;
    let ch = memory_channel(s)?;
    tomo::process_tomography(|r| ch.apply(r), t.input_set(), Estimation::Sampled { shots: t.shots, seed })
}

fn density_outputs(s: &Scenario, seed: u64) -> Result<Output> {
    let t = s.require_tomography("tomography")?;
    let ch = memory_channel(s)?;
    let labels = [QubitLabel::ZPlus, QubitLabel::XPlus, QubitLabel::YPlus];
    let mut rows = Vec::new();
    for (k, label) in labels.into_iter().enumerate() {
        let target = QubitState::from_label(label);
        let out = ch.apply(&DensityMatrix::pure(&target))?;
        let records = tomo::Basis::ALL
            .iter()
            .enumerate()
            .map(|(b, &basis)| tomo::simulate_measurement(&out, basis, t.shots, seed.wrapping_add((3 * k + b) as u64)))
            .collect::<Result<Vec<_>>>()?;
        let rho = tomo::reconstruct_state(&records)?;
        rows.push((label, rho, tomo::state_fidelity(&rho, &target)));
    }
    table("density_matrices.csv", |b| {
        writeln!(b, "state,row,col,re,im,fidelity")?;
        for (label, rho, f) in &rows {
            for r in 0..2 {
                for c in 0..2 {
                    let v = rho.matrix()[(r, c)];
                    writeln!(b, "{label},{r},{c},{:.9},{:.9},{:.9}", v.re, v.im, f)?;
                }
            }
        }
        Ok(())
    })
}

pub fn tomography(s: &Scenario, seed: u64) -> Result<Vec<Output>> {
    let t = s.require_tomography("tomography")?;
    let chi = process_matrix(s, seed)?;
    let points = tomo::bloch_deformation(&chi, t.bloch_samples)?;
    let ch = memory_channel(s)?;
    Ok(vec![
        density_outputs(s, seed)?,
        table("process_matrix.csv", |b| chi.write_csv(b))?,
        table("bloch_sections.csv", |b| tomo::write_sections_csv(&points, b))?,
        table("channel.csv", |b| {
            writeln!(b, "quantity,value")?;
            writeln!(b, "recall_transmission,{:.9e}", ch.transmission())?;
            writeln!(b, "white_noise,{:.6}", ch.white_noise)?;
            writeln!(b, "max_off_identity,{:.9}", chi.max_off_identity())?;
            Ok(())
        })?,
    ])
}

fn prefixed(prefix: &str, outputs: Vec<Output>) -> Vec<Output> {
    outputs
        .into_iter()
        .map(|o| Output {
            name: format!("{prefix}_{}", o.name),
            ..o
        })
        .collect()
}

/// Tables for one figure.
pub fn figure_outputs(s: &Scenario, id: FigureId, seed: u64) -> Result<Vec<Output>> {
    let prefix = format!("fig{id}");
    let out = match id {
        FigureId::F2a => {
            let mut v = cavity_sweep(s)?;
            let setup = s.memory_setup()?;
            let phase = spectral_medium::kramers_kronig_phase(&setup.background);
            v.push(table("absorption.csv", |b| setup.background.write_csv(&phase, b))?);
            v
        }
        FigureId::F2b => {
            let mut v = sweep_detuning(s)?;
            v.extend(cavity_sweep(s)?);
            v.extend(sweep_bandwidth(s)?);
            v
        }
        FigureId::F2c => store(s)?,
        FigureId::F3 => g2(s, seed)?,
        FigureId::F4a => vec![density_outputs(s, seed)?],
        FigureId::F4b => {
            let chi = process_matrix(s, seed)?;
            vec![table("process_matrix.csv", |b| chi.write_csv(b))?]
        }
        FigureId::F4c => {
            let t = s.require_tomography("figure 4c")?;
            let chi = process_matrix(s, seed)?;
            let pts = tomo::bloch_deformation(&chi, t.bloch_samples)?;
            vec![table("bloch_sections.csv", |b| tomo::write_sections_csv(&pts, b))?]
        }
    };
    Ok(prefixed(&prefix, out))
}

/// Provenance of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub scenario_hash: String,
    pub version: String,
    pub seed: u64,
    pub wall_clock_seconds: f64,
    pub files: Vec<PathBuf>,
}

impl RunManifest {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "key,value")?;
        writeln!(out, "scenario_sha256,{}", self.scenario_hash)?;
        writeln!(out, "version,{}", self.version)?;
        writeln!(out, "seed,{}", self.seed)?;
        writeln!(out, "wall_clock_s,{:.3}", self.wall_clock_seconds)?;
        for f in &self.files {
            writeln!(out, "file,{}", f.display())?;
        }
        Ok(())
    }
}

pub fn scenario_hash(s: &Scenario) -> String {
    hex::encode(Sha256::digest(s.canonical_text().as_bytes()))
}

/// Writes the tables into `dir` and adds `manifest.csv`.
pub fn write_outputs(
    s: &Scenario,
    seed: u64,
    dir: &Path,
    outputs: &[Output],
    started: Instant,
) -> Result<RunManifest> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for o in outputs {
        let path = dir.join(&o.name);
        std::fs::write(&path, &o.contents)
            .map_err(|e| Error::from(e).context(format!("writing {}", path.display())))?;
        files.push(path);
    }
    let manifest = RunManifest {
        scenario_hash: scenario_hash(s),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        files,
    };
    let mut f = std::fs::File::create(dir.join("manifest.csv"))?;
    manifest.write_csv(&mut f)?;
    Ok(manifest)
}

/// Runs one figure pipeline and writes its tables.
pub fn run_figure(s: &Scenario, id: FigureId, seed: u64, dir: &Path) -> Result<RunManifest> {
    let started = Instant::now();
    let outputs = figure_outputs(s, id, seed).map_err(|e| e.context(format!("figure {id}")))?;
    write_outputs(s, seed, dir, &outputs, started)
}
