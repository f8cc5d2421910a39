//! `warpcone`: runs single operations or whole scenarios and writes reports.

mod config;
mod ops;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use warpcone::rational::{self, Rational};

use config::{Arithmetic, Format, Operation, ScenarioConfig};

#[derive(Parser)]
#[command(name = "warpcone", version, about = "Warped metrics, warped cones and property A certificates on finite models")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Built-in fixture: FIX-A, FIX-B, FIX-C or FIX-D.
    #[arg(long, global = true)]
    fixture: Option<String>,
    /// Scenario file (TOML); supplies the fixture, caps and, for `scenario`, the operations.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Scale `s` as an exact rational such as `8` or `3/2`.
    #[arg(long, global = true)]
    scale: Option<String>,
    /// Truncation level for FIX-B.
    #[arg(long, global = true)]
    level: Option<usize>,
    /// HR radius `R` (rational) or word-ball radius (integer) for `stabilizer`.
    #[arg(long, global = true)]
    radius: Option<String>,
    /// FIX-D window `W`.
    #[arg(long, global = true)]
    window: Option<i32>,
    /// Output directory; without one the JSON report goes to stdout.
    #[arg(long, global = true, env = "WARPCONE_OUTPUT_DIR")]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Exact rational output (default).
    #[arg(long, global = true, conflicts_with = "float")]
    exact: bool,
    /// Render rationals as floats and compare oracles within `--tol`.
    #[arg(long, global = true)]
    float: bool,
    #[arg(long, global = true, requires = "float")]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Warped metric of the fixture, with the FIX-D divergence table.
    Warp {
        /// Also compute the one-step distance and check the sandwich.
        #[arg(long)]
        one_step: bool,
        /// Rows of the FIX-D divergence table (default 6).
        #[arg(long)]
        divergence: Option<u32>,
    },
    /// Slice metrics of a quotient chain: closed form against Dijkstra.
    Slice,
    /// The δ_n tables.
    Delta {
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Box-space levels with section-scale certificates.
    #[command(name = "box")]
    BoxSpace,
    /// Spectral gaps of the box space, the FIX-C orbit or an edge list.
    Spectral {
        #[arg(long)]
        edges: Option<PathBuf>,
    },
    /// Cone slice embedding from circle embeddings of a cyclic chain.
    EmbedBox,
    /// Cone embedding inequalities on FIX-B.
    EmbedCone {
        /// Dyadic slices `2^0 .. 2^levels`.
        #[arg(long, default_value_t = 4)]
        levels: u32,
    },
    /// Hulanicki–Reiter families: singleton and cone certificates.
    Hr {
        #[arg(long)]
        eps: Option<String>,
        #[arg(long)]
        cone_radius: Option<String>,
        #[arg(long)]
        r_max: Option<u64>,
    },
    /// Stabilizers of (1/q_1^m, …) under SL_n(ℤ) against the congruence description.
    Stabilizer {
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        coprime: Vec<u64>,
        #[arg(long, default_value_t = 2)]
        power: u32,
    },
    /// Orbit of a rational torus point with its stabilization threshold.
    Orbit {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, conflicts_with = "coprime")]
        denominator: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        coprime: Vec<u64>,
        #[arg(long, default_value_t = 1)]
        power: u32,
    },
    /// Every operation listed in `--config`.
    Scenario,
}

fn parse_rational(flag: &str, text: &Option<String>) -> Result<Option<Rational>> {
    text.as_deref()
        .map(|t| rational::parse(t).with_context(|| format!("--{flag} {t:?}")))
        .transpose()
}

fn build_config(cli: &Cli) -> Result<ScenarioConfig> {
    let c = &cli.common;
    let mut config = match &c.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(name) = &c.fixture {
        config.fixture = config::FixtureConfig { name: Some(name.clone()), ..Default::default() };
    }
    if c.level.is_some() {
        config.fixture.level = c.level;
    }
    if c.window.is_some() {
        config.fixture.window = c.window;
    }
    if c.float {
        config.mode.arithmetic = Arithmetic::Float;
    }
    if c.exact {
        config.mode.arithmetic = Arithmetic::Exact;
    }
    if let Some(tol) = c.tol {
        config.mode.tol = tol;
    }
    if c.output.is_some() {
        config.output.dir = c.output.clone();
    }
    if c.format.is_some() {
        config.output.format = c.format;
    }
    let scale = parse_rational("scale", &c.scale)?;
    let radius = parse_rational("radius", &c.radius)?;
    let op = match &cli.command {
        Command::Scenario => {
            if c.config.is_none() {
                bail!("`scenario` needs --config");
            }
            None
        }
        Command::Warp { one_step, divergence } => Some(Operation::Warp { scale, one_step: *one_step, divergence: *divergence }),
        Command::Slice => Some(Operation::Slice { scales: scale.into_iter().collect() }),
        Command::Delta { n_max } => Some(Operation::Delta { n_max: *n_max }),
        Command::BoxSpace => Some(Operation::BoxSpace {}),
        Command::Spectral { edges } => Some(Operation::Spectral { edges: edges.clone() }),
        Command::EmbedBox => Some(Operation::EmbedBox { scale }),
        Command::EmbedCone { levels } => Some(Operation::EmbedCone { levels: *levels }),
        Command::Hr { eps, cone_radius, r_max } => Some(Operation::Hr {
            scale,
            radius,
            eps: parse_rational("eps", eps)?,
            cone_radius: parse_rational("cone-radius", cone_radius)?,
            r_max: *r_max,
        }),
        Command::Stabilizer { coprime, power } => {
            let radius = match radius {
                Some(r) if r.is_integer() && r >= rational::zero() => Some(rational::floor_u64(&r) as u32),
                Some(r) => bail!("--radius must be a natural number here, got {}", rational::format(&r)),
                None => None,
            };
            Some(Operation::Stabilizer { coprime: coprime.clone(), power: *power, radius })
        }
        Command::Orbit { dim, denominator, coprime, power } => {
            Some(Operation::Orbit { dim: *dim, denominator: *denominator, coprime: coprime.clone(), power: *power })
        }
    };
    if let Some(op) = op {
        config.operations = vec![op];
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<bool> {
    let config = build_config(cli)?;
    let report = report::run_scenario(&config)?;
    for (k, rec) in report.operations.iter().enumerate() {
        let note = rec.message.as_deref().map(|m| format!(": {m}")).unwrap_or_default();
        eprintln!("[{k}] {} {:?} ({:.3} s){note}", rec.op, rec.status, rec.elapsed.as_secs_f64());
    }
    match &config.output.dir {
        Some(dir) => {
            let format = config.output.format.unwrap_or_default();
            if let Err(e) = report::emit_report(&report, dir, format) {
                // Keep the results: fall back to stdout before failing.
                println!("{}", report.to_json());
                return Err(e);
            }
            eprintln!("report written to {}", dir.display());
        }
        None => println!("{}", report.to_json()),
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
