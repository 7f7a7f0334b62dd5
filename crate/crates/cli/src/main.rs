//! isolab: a workbench for isomonodromic flows and elliptic integrable
//! systems. Subcommands: fn, pvi, schlesinger, elliptic, limit, plot.
//!
//! Exit codes: 0 all checks pass, 1 numeric check failure, 2 config or
//! usage error. All file outputs are byte-deterministic for a fixed config
//! and seed; wall time goes to stderr only.

mod cmd_elliptic;
mod cmd_fn;
mod cmd_limit;
mod cmd_pvi;
mod cmd_schlesinger;
mod config;
mod report;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C64;

use config::{parse_complex, parse_path};

fn complex_arg(s: &str) -> Result<C64, String> {
    parse_complex(s).map_err(|e| e.to_string())
}

#[derive(Parser)]
#[command(
    name = "isolab",
    version,
    about = "Numerical workbench for isomonodromic flows and elliptic integrable systems"
)]
struct Cli {
    /// Directory for CSV/JSON/SVG outputs and manifest.json.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate elliptic special functions and run the identity suite.
    Fn(FnArgs),
    /// Integrate the Painlevé VI elliptic form; optional cross-form check.
    Pvi(PviArgs),
    /// Run a pole-system deformation from a JSON config.
    Schlesinger(SchlesingerArgs),
    /// Genus-one flow, Lax transcription check and calibrations.
    Elliptic(EllipticArgs),
    /// κ-sweep of the level flow against the frozen-modulus flow.
    Limit(LimitArgs),
    /// Deterministic SVG line plot from a CSV file.
    Plot(PlotArgs),
}

#[derive(Args)]
struct FnArgs {
    /// Modulus (repeatable); defaults to i, 1.5i, 0.3+1.2i.
    #[arg(long, value_parser = complex_arg)]
    tau: Vec<C64>,
    /// Run the identity suite.
    #[arg(long)]
    check: bool,
    /// Function to evaluate:
    /// theta|theta_d1|theta_d2|theta_d3|e1|e2|eta1|wp|wp_prime|phi.
    #[arg(long)]
    eval: Option<String>,
    /// Evaluation point (first argument of phi).
    #[arg(long, value_parser = complex_arg)]
    z: Option<C64>,
    /// Second argument of phi.
    #[arg(long, value_parser = complex_arg)]
    z2: Option<C64>,
    /// Evaluate on an N×N grid over the unit cell instead of a single z.
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Args)]
struct PviArgs {
    #[arg(long, value_parser = complex_arg, default_value = "1,0")]
    nu: C64,
    #[arg(long, value_parser = complex_arg, default_value = "1,0")]
    kappa: C64,
    #[arg(long, value_parser = complex_arg, default_value = "0.31,0.14")]
    u0: C64,
    #[arg(long, value_parser = complex_arg, default_value = "0.15,-0.05")]
    v0: C64,
    /// τ-path "re,im -> re,im [-> ...]"; must stay in Im τ > 0.
    #[arg(long, default_value = "0,1 -> 0,1.2")]
    tau_path: String,
    /// Dense samples per path segment.
    #[arg(long, default_value_t = 256)]
    samples: usize,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Verify the rational form along the mapped trajectory.
    #[arg(long)]
    cross_check: bool,
}

#[derive(Args)]
struct SchlesingerArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct EllipticArgs {
    #[arg(long, value_parser = complex_arg, default_value = "0.8,0")]
    nu: C64,
    #[arg(long, value_parser = complex_arg, default_value = "1,0")]
    kappa: C64,
    #[arg(long, value_parser = complex_arg, default_value = "0,1")]
    tau0: C64,
    /// Optional τ-path for the one-pole flow; must start at tau0.
    #[arg(long)]
    tau_path: Option<String>,
    #[arg(long, default_value_t = 64)]
    samples: usize,
    #[arg(long, value_parser = complex_arg, default_value = "0.29,0.08")]
    u0: C64,
    #[arg(long, value_parser = complex_arg, default_value = "0.1,0.05")]
    du0: C64,
    #[arg(long, default_value_t = 1e-11)]
    tol: f64,
    /// Compare the assembled Lax matrix against its independent one-pole
    /// transcription.
    #[arg(long = "check-transcription")]
    check_transcription: bool,
}

#[derive(Args)]
struct LimitArgs {
    #[arg(long, value_parser = complex_arg, default_value = "1,0")]
    nu: C64,
    /// Strictly decreasing κ list, comma separated.
    #[arg(long, default_value = "0.2,0.1,0.05,0.025", value_delimiter = ',')]
    kappas: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, value_parser = complex_arg, default_value = "0,1")]
    tau0: C64,
    #[arg(long, value_parser = complex_arg, default_value = "0.3,0.1")]
    u0: C64,
    #[arg(long, value_parser = complex_arg, default_value = "0.12,0")]
    v0: C64,
    #[arg(long, default_value_t = 1e-11)]
    tol: f64,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Number of additional seeded random initial conditions.
    #[arg(long, default_value_t = 0)]
    random_ics: usize,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    csv: PathBuf,
    /// Column for the horizontal axis.
    #[arg(long)]
    x: String,
    /// Columns for the vertical axis, comma separated.
    #[arg(long, value_delimiter = ',')]
    y: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

fn dispatch(cli: &Cli) -> Result<i32> {
    std::fs::create_dir_all(&cli.out_dir)
        .with_context(|| format!("creating output directory {:?}", cli.out_dir))?;
    match &cli.command {
        Command::Fn(a) => cmd_fn::run(
            &cmd_fn::FnRequest {
                taus: a.tau.clone(),
                check: a.check,
                eval: a.eval.clone(),
                z: a.z,
                z2: a.z2,
                grid: a.grid,
            },
            &cli.out_dir,
        ),
        Command::Pvi(a) => {
            let tau_path = parse_path(&a.tau_path, a.samples)?;
            cmd_pvi::run(
                &cmd_pvi::PviRequest {
                    nu: a.nu,
                    kappa: a.kappa,
                    u0: a.u0,
                    v0: a.v0,
                    tau_path,
                    tol: a.tol,
                    cross_check: a.cross_check,
                },
                &cli.out_dir,
            )
        }
        Command::Schlesinger(a) => {
            let raw = std::fs::read_to_string(&a.config)
                .with_context(|| format!("reading config {:?}", a.config))?;
            let cfg: config::SchlesingerConfig = serde_json::from_str(&raw)
                .with_context(|| format!("parsing config {:?}", a.config))?;
            cmd_schlesinger::run(&cfg, &cli.out_dir)
        }
        Command::Elliptic(a) => {
            let tau_path = a
                .tau_path
                .as_ref()
                .map(|s| parse_path(s, a.samples))
                .transpose()?;
            cmd_elliptic::run(
                &cmd_elliptic::EllipticRequest {
                    nu: a.nu,
                    kappa: a.kappa,
                    tau0: a.tau0,
                    tau_path,
                    u0: a.u0,
                    du0: a.du0,
                    tol: a.tol,
                    check_transcription: a.check_transcription,
                },
                &cli.out_dir,
            )
        }
        Command::Limit(a) => cmd_limit::run(
            &cmd_limit::LimitRequest {
                nu: a.nu,
                kappas: a.kappas.clone(),
                horizon: a.horizon,
                tau0: a.tau0,
                u0: a.u0,
                v0: a.v0,
                tol: a.tol,
                seed: a.seed,
                random_ics: a.random_ics,
            },
            &cli.out_dir,
        ),
        Command::Plot(a) => {
            let table = svg::read_csv(&a.csv)?;
            if a.y.is_empty() {
                anyhow::bail!("plot needs at least one --y column");
            }
            let out = if a.out.is_absolute() {
                a.out.clone()
            } else {
                cli.out_dir.join(&a.out)
            };
            svg::plot(&table, &a.x, &a.y, &out)?;
            println!("[plot] wrote {}", out.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let code = match dispatch(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            2
        }
    };
    eprintln!("wall_time_ms={}", start.elapsed().as_millis());
    ExitCode::from(code as u8)
}
