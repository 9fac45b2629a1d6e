//! `disent`: phase maps, state classification, onset times and verification.

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use disent_core::channels::ChannelKind;
use disent_core::verify::VerifyOptions;

use crate::commands::{Noise, PHASE_MAP_KEYS};
use crate::settings::Settings;

#[derive(Parser)]
#[command(name = "disent", version, about = "Critical sets and phase maps for two-qubit disentanglement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep a (Q, coordinate) grid and write grid, curves and manifest files.
    PhaseMap(PhaseMapArgs),
    /// Classify a state read from a JSON file.
    Classify(StateArgs),
    /// CD and threshold onset times of a state read from a JSON file.
    Times(StateArgs),
    /// Run the numerical self-checks.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct PhaseMapArgs {
    /// fig2, fig4, fig5, fig6, fig7 or fig8.
    #[arg(long)]
    preset: Option<String>,
    /// amplitude, phase or depolarizing.
    #[arg(long)]
    channel: Option<String>,
    /// phi or psi.
    #[arg(long = "type")]
    mtype: Option<String>,
    /// Fixed elements as `a,b`.
    #[arg(long, allow_hyphen_values = true)]
    fixed: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    q_range: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    coord_range: Option<String>,
    /// Points per axis.
    #[arg(long)]
    grid: Option<String>,
    /// Protection times, comma separated. The first one sets the labels.
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    gamma_a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    gamma_b: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    ctv: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// File name stem; defaults to the preset name.
    #[arg(long)]
    name: Option<String>,
    /// `key = value` file with the same keys as the flags. Flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl PhaseMapArgs {
    fn settings(&self) -> Result<Settings> {
        let mut s = match &self.config {
            Some(path) => settings::load(path, PHASE_MAP_KEYS)?,
            None => Settings::new(),
        };
        let flags = [
            ("preset", &self.preset),
            ("channel", &self.channel),
            ("type", &self.mtype),
            ("fixed", &self.fixed),
            ("q-range", &self.q_range),
            ("coord-range", &self.coord_range),
            ("grid", &self.grid),
            ("tau", &self.tau),
            ("gamma-a", &self.gamma_a),
            ("gamma-b", &self.gamma_b),
            ("ctv", &self.ctv),
            ("seed", &self.seed),
            ("out", &self.out),
            ("name", &self.name),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                s.insert(key.to_string(), v.clone());
            }
        }
        Ok(s)
    }
}

#[derive(Args)]
struct StateArgs {
    /// JSON file: `{"re": [[..]], "im": [[..]]}` or the X-form fields.
    state: PathBuf,
    #[arg(long)]
    channel: ChannelKind,
    #[arg(long, default_value_t = 1.0)]
    gamma_a: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma_b: f64,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    #[arg(long, default_value_t = 0.1)]
    ctv: f64,
}

impl StateArgs {
    fn noise(&self) -> Noise {
        Noise {
            channel: self.channel,
            gamma_a: self.gamma_a,
            gamma_b: self.gamma_b,
            tau: self.tau,
            ctv: self.ctv,
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// `all` or a comma-separated list of check names.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Sample count override; 0 runs nothing.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("DISENT_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().with_context(|| format!("invalid DISENT_THREADS '{v}'"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    init_threads()?;
    match cli.command {
        Command::PhaseMap(args) => commands::phase_map(&args.settings()?)?,
        Command::Classify(args) => {
            let rho = commands::read_state(&args.state)?;
            let v = commands::classify(&rho, &args.noise())?;
            println!("{}", serde_json::to_string_pretty(&v)?);
        }
        Command::Times(args) => {
            let rho = commands::read_state(&args.state)?;
            let v = commands::times(&rho, &args.noise())?;
            println!("{}", serde_json::to_string_pretty(&v)?);
        }
        Command::Verify(args) => {
            let opts = VerifyOptions {
                seed: args.seed,
                n: args.n,
                tol_scale: args.tol_scale,
                enforce_runtime: false,
            };
            let criteria = commands::parse_suite(&args.suite)?;
            if !commands::verify(&criteria, &opts, args.out.as_deref())? {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(u8::from(e.use_stderr()));
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
