use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};

use afc_memory::figures::{self, Analysis, FigureId, Output};
use afc_memory::scenario::{self, Scenario};
use afc_memory::timebin_qubit::QubitLabel;

#[derive(Parser)]
#[command(name = "afcmem", version, about = "Cavity-enhanced AFC memory simulator")]
struct Cli {
    /// Scenario file (TOML). The shipped defaults are used when omitted.
    #[arg(long, global = true, visible_alias = "channel")]
    scenario: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the scenario output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Multiplies every grid size; must keep bin counts powers of two.
    #[arg(long, global = true)]
    resolution_scale: Option<f64>,
    /// Also copy the main table of the command to this path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Absorption and phase of the carved comb.
    Comb,
    /// Reflected power of the cavity across the line.
    CavitySweep,
    /// Store one pulse and record the reflected trace.
    Store,
    /// Memory efficiency against comb center detuning.
    SweepDetuning,
    /// Memory efficiency against comb bandwidth.
    SweepBandwidth,
    /// Store and analyze a time-bin qubit.
    Qubit {
        #[arg(long, default_value = "X+")]
        state: QubitLabel,
        #[arg(long, default_value = "interferometer")]
        analysis: Analysis,
    },
    /// Cross-correlation after storage.
    G2 {
        /// Comma separated, e.g. `25,50,75,100ns`.
        #[arg(long)]
        storage_times: Option<String>,
    },
    /// State and process tomography of the memory channel.
    Tomography {
        #[arg(long)]
        shots: Option<u64>,
    },
    /// All tables behind one figure.
    Figure { id: FigureId },
}

fn load(cli: &Cli) -> anyhow::Result<Scenario> {
    let mut s = match &cli.scenario {
        Some(p) => scenario::load_scenario(p)?,
        None => Scenario::defaults(),
    };
    if let Some(r) = cli.resolution_scale {
        s.run.resolution_scale = r;
    }
    if let Some(d) = &cli.out_dir {
        s.run.output_dir = d.display().to_string();
    }
    if let Command::G2 {
        storage_times: Some(text),
    } = &cli.command
    {
        let times = scenario::parse_storage_times(text)?;
        let m = s
            .memory
            .as_mut()
            .context("scenario has no [memory] section, required by `g2`")?;
        m.storage_times_ns = times.iter().map(|t| t * 1e9).collect();
    }
    if let Command::Tomography { shots: Some(n) } = &cli.command {
        let t = s
            .tomography
            .as_mut()
            .context("scenario has no [tomography] section, required by `tomography`")?;
        t.shots = *n;
    }
    Ok(s.checked()?)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let started = Instant::now();
    let s = load(&cli)?;
    let seed = cli.seed.unwrap_or(s.run.seed);
    let dir = PathBuf::from(&s.run.output_dir);
    let outputs: Vec<Output> = match &cli.command {
        Command::Comb => figures::comb(&s)?,
        Command::CavitySweep => figures::cavity_sweep(&s)?,
        Command::Store => figures::store(&s)?,
        Command::SweepDetuning => figures::sweep_detuning(&s)?,
        Command::SweepBandwidth => figures::sweep_bandwidth(&s)?,
        Command::Qubit { state, analysis } => figures::qubit(&s, *state, *analysis)?,
        Command::G2 { .. } => figures::g2(&s, seed)?,
        Command::Tomography { .. } => figures::tomography(&s, seed)?,
        Command::Figure { id } => {
            let m = figures::run_figure(&s, *id, seed, &dir)?;
            for f in &m.files {
                println!("{}", f.display());
            }
            return Ok(());
        }
    };
    let manifest = figures::write_outputs(&s, seed, &dir, &outputs, started)?;
    if let (Some(path), Some(first)) = (&cli.out, outputs.first()) {
        std::fs::write(path, &first.contents).with_context(|| format!("writing {}", path.display()))?;
    }
    for f in &manifest.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
