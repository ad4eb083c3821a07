//! `qhgeo`: experiments on quasihyperbolic geometry and Sobolev density.
//!
//! Every subcommand writes into `--out` and finishes with `manifest.json`,
//! which echoes the parsed configuration. `qhgeo replay` reruns a manifest.

mod args;
mod commands;
mod output;

use args::{parse_function, parse_m_range, parse_number, parse_point, MRange};
use clap::{Args, Parser, Subcommand};
use output::{ErrorRecord, Manifest, OutDir};
use qhgeo::approximation::TestFunction;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "qhgeo", version, about = "Quasihyperbolic geometry experiments on sampled domains")]
struct Cli {
    /// Output directory; created if missing.
    #[arg(long, short, global = true, default_value = "qhgeo-out")]
    out: PathBuf,
    /// Worker threads.
    #[arg(long, global = true, env = "QHGEO_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridArgs {
    /// Domain spec (TOML).
    #[arg(long)]
    pub domain: PathBuf,
    /// Grid spacing, a power of two such as 1/256.
    #[arg(long, value_parser = parse_number)]
    pub h: f64,
}

#[derive(Subcommand, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Whitney decomposition, validation and cube export.
    Whitney {
        #[command(flatten)]
        grid: GridArgs,
        /// Finest cube level; defaults to cubes of two cells.
        #[arg(long)]
        max_level: Option<i32>,
    },
    /// Quasihyperbolic and inner distance between two points.
    QhDist {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        a: [f64; 3],
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        b: [f64; 3],
    },
    /// Quasihyperbolic geodesic as a polyline.
    Geodesic {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        a: [f64; 3],
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        b: [f64; 3],
    },
    /// Sampled δ, ball separation and Gehring-Hayman constants.
    Hyperbolicity {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 32)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_parser = parse_number, default_value = "0")]
        min_distance: f64,
        #[arg(long, default_value_t = 5)]
        points_per_geodesic: usize,
    },
    /// Core and boundary layer at one scale, with validation and label grid.
    Decompose {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        m: i32,
        #[arg(long, value_parser = parse_number, default_value = "0.5")]
        c1: f64,
    },
    /// Density experiment: ‖u - u_m‖ over a range of m.
    Approximate {
        #[command(flatten)]
        grid: GridArgs,
        /// Test function, e.g. `power:0.1` or `loglog:1@0,0`.
        #[arg(long, value_parser = parse_function)]
        u: TestFunction,
        #[arg(long, value_parser = parse_number)]
        p: f64,
        #[arg(long, value_parser = parse_m_range)]
        m: MRange,
        #[arg(long, value_parser = parse_number, default_value = "0.5")]
        c1: f64,
    },
    /// Cantor-type removable set experiments.
    Counterexample {
        #[command(subcommand)]
        which: Counterexample,
    },
    /// Reruns the configuration stored in a manifest.
    Replay {
        manifest: PathBuf,
    },
}

#[derive(Subcommand, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum Counterexample {
    /// Ratios, products, gaps and the thin and fat Cantor sets.
    Cantor {
        #[arg(long, value_parser = parse_number)]
        p: f64,
        #[arg(long, default_value_t = 12)]
        depth: usize,
    },
    /// Gradient energy series: i, term, partial_sum, closed_form_ratio.
    Energy {
        #[arg(long, value_parser = parse_number)]
        p: f64,
        #[arg(long, value_parser = parse_number)]
        q: f64,
        #[arg(long = "N", id = "N")]
        n: usize,
    },
    /// Three-segment curve integrals for random pairs off E.
    Curve {
        #[arg(long, value_parser = parse_number)]
        p: f64,
        #[arg(long, value_parser = parse_number)]
        q: f64,
        #[arg(long, default_value_t = 12)]
        depth: usize,
        #[arg(long, default_value_t = 100)]
        pairs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Variation and support of the step function on a line through F.
    Trace {
        #[arg(long, value_parser = parse_number)]
        p: f64,
        #[arg(long, default_value_t = 12)]
        depth: usize,
        /// Height of the line; defaults to the middle of the largest interval of F.
        #[arg(long, value_parser = parse_number)]
        y0: Option<f64>,
    },
    /// Rasterised three-dimensional domain and, optionally, its constants.
    Domain3d {
        #[arg(long, value_parser = parse_number)]
        p: f64,
        #[arg(long)]
        depth: usize,
        #[arg(long, value_parser = parse_number)]
        h: f64,
        /// Refuse grids that cannot keep the boxes of E apart.
        #[arg(long)]
        strict: bool,
        /// Hyperbolicity samples; 0 skips the estimate.
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

impl Command {
    fn name(&self) -> String {
        match self {
            Command::Whitney { .. } => "whitney".into(),
            Command::QhDist { .. } => "qh-dist".into(),
            Command::Geodesic { .. } => "geodesic".into(),
            Command::Hyperbolicity { .. } => "hyperbolicity".into(),
            Command::Decompose { .. } => "decompose".into(),
            Command::Approximate { .. } => "approximate".into(),
            Command::Replay { .. } => "replay".into(),
            Command::Counterexample { which } => format!(
                "counterexample {}",
                match which {
                    Counterexample::Cantor { .. } => "cantor",
                    Counterexample::Energy { .. } => "energy",
                    Counterexample::Curve { .. } => "curve",
                    Counterexample::Trace { .. } => "trace",
                    Counterexample::Domain3d { .. } => "domain3d",
                }
            ),
        }
    }
}

pub enum Failure {
    /// Bad arguments, found before any heavy work.
    Usage(String),
    /// The run finished but a validation check failed.
    Validation { message: String, report: String },
    Core(qhgeo::Error),
    Io(std::io::Error),
}

impl From<qhgeo::Error> for Failure {
    fn from(e: qhgeo::Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl Failure {
    fn record(&self) -> ErrorRecord<'_> {
        let (kind, message, exit_code, report) = match self {
            Failure::Usage(m) => ("usage", m.clone(), 2, None),
            Failure::Validation { message, report } => ("validation", message.clone(), 1, Some(report.clone())),
            Failure::Core(e) => (e.kind(), e.to_string(), 1, None),
            Failure::Io(e) => ("io", e.to_string(), 1, None),
        };
        ErrorRecord {
            status: "error",
            kind,
            message,
            exit_code,
            report,
        }
    }
}

fn run(command: Command, out: &mut OutDir) -> Result<Command, Failure> {
    let command = match command {
        Command::Replay { manifest } => {
            let text = std::fs::read_to_string(&manifest)?;
            let v: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", manifest.display())))?;
            let c: Command = serde_json::from_value(v["config"].clone())
                .map_err(|e| Failure::Usage(format!("{}: bad config: {e}", manifest.display())))?;
            if matches!(c, Command::Replay { .. }) {
                return Err(Failure::Usage("a manifest cannot replay another replay".into()));
            }
            c
        }
        c => c,
    };
    commands::dispatch(&command, out)?;
    Ok(command)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let mut out = match OutDir::create(&cli.out) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: cannot create {}: {e}", cli.out.display());
            return ExitCode::from(1);
        }
    };
    let name = cli.command.name();
    match run(cli.command.clone(), &mut out) {
        Ok(config) => {
            let files = out.files().to_vec();
            let m = Manifest {
                tool: "qhgeo",
                version: env!("CARGO_PKG_VERSION"),
                status: "ok",
                config: &config,
                files: &files,
            };
            if let Err(e) = out.json("manifest.json", &m) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            println!("{name}: wrote {} files to {}", files.len(), cli.out.display());
            ExitCode::SUCCESS
        }
        Err(f) => {
            let rec = f.record();
            let code = rec.exit_code;
            let line = serde_json::to_string(&rec).expect("record serialises");
            eprintln!("{line}");
            // best effort; the record is on stderr either way
            let _ = out.json("error.json", &rec);
            let files = out.files().to_vec();
            let _ = out.json(
                "manifest.json",
                &Manifest {
                    tool: "qhgeo",
                    version: env!("CARGO_PKG_VERSION"),
                    status: "error",
                    config: &cli.command,
                    files: &files,
                },
            );
            ExitCode::from(code as u8)
        }
    }
}
