//! `gqd`: command-line front end for the polariton-chain discord
//! scenarios. Settings come from an optional flat config file plus
//! flags, with flags taking precedence; results go to a CSV file or
//! stdout.

use anyhow::{Context, Result};
use clap::Parser;
use gqd_core::scenarios::{run_scenario, write_csv, MiddleState, Overrides, ScenarioKind};
use std::fs;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

/// Simulates a dissipative three-cavity polariton chain and writes
/// quantum-discord measures along the trajectory as CSV.
#[derive(Parser, Debug)]
#[command(name = "gqd", version)]
struct Cli {
    /// Scenario to run: alpha_sweep, mgqd_trajectory, single_excitation,
    /// or sudden_transition.
    #[arg(long)]
    scenario: Option<ScenarioKind>,

    /// GHZ weight of the mixture initial state, in [0, 1].
    #[arg(long)]
    alpha: Option<f64>,

    /// First Bell-diagonal correlation of the (1,3) pair.
    #[arg(long)]
    c1: Option<f64>,

    /// Second Bell-diagonal correlation of the (1,3) pair.
    #[arg(long)]
    c2: Option<f64>,

    /// Third Bell-diagonal correlation of the (1,3) pair.
    #[arg(long)]
    c3: Option<f64>,

    /// Level of the middle cavity in the sudden-transition state: E or G.
    #[arg(long)]
    middle: Option<MiddleState>,

    /// Cavity lifetime in microseconds.
    #[arg(long)]
    tcav_us: Option<f64>,

    /// Inter-site hopping as a fraction of the atom-cavity coupling.
    #[arg(long)]
    j_over_g: Option<f64>,

    /// Atom-cavity coupling in rad/s.
    #[arg(long)]
    g: Option<f64>,

    /// Integration step in dimensionless time.
    #[arg(long)]
    dt: Option<f64>,

    /// Trajectory horizon in dimensionless time.
    #[arg(long)]
    tmax: Option<f64>,

    /// Record every this many integration steps.
    #[arg(long)]
    stride: Option<usize>,

    /// Number of measurement-basis optimizer starts.
    #[arg(long)]
    starts: Option<usize>,

    /// Grid resolution seeding the optimizer starts.
    #[arg(long)]
    grid: Option<usize>,

    /// Seed for the optimizer's jittered starting bases.
    #[arg(long)]
    seed: Option<u64>,

    /// Config file with `key = value` lines mirroring these flags.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            scenario: self.scenario,
            alpha: self.alpha,
            c1: self.c1,
            c2: self.c2,
            c3: self.c3,
            middle: self.middle,
            tcav_us: self.tcav_us,
            j_over_g: self.j_over_g,
            g: self.g,
            dt: self.dt,
            tmax: self.tmax,
            stride: self.stride,
            starts: self.starts,
            grid: self.grid,
            seed: self.seed,
            out: self.out.clone(),
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let from_file = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config file {}", path.display()))?;
            Overrides::from_config_text(&text)
                .with_context(|| format!("parsing config file {}", path.display()))?
        }
        None => Overrides::default(),
    };
    let spec = cli.overrides().merged_over(from_file).into_spec()?;
    let records = run_scenario(&spec)?;
    match &spec.out {
        Some(path) => {
            let file = fs::File::create(path)
                .with_context(|| format!("creating output file {}", path.display()))?;
            write_csv(&records, io::BufWriter::new(file))
                .with_context(|| format!("writing {}", path.display()))?;
        }
        None => write_csv(&records, io::stdout().lock()).context("writing to stdout")?,
    }
    Ok(())
}
