//! `fodesim`: step responses, phase-plane trajectories, poles and Bode data
//! for a fractional-order plant under a `PD^delta` controller.

mod commands;
mod config;
mod csv;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use fodesim_core::{Response, Variant};

use crate::commands::Solver;
use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    Step,
    Traj,
    Poles,
    Bode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Verbatim,
    Derived,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum WhichArg {
    Plant,
    Controller,
    OpenLoop,
    ClosedLoop,
}

#[derive(Debug, Parser)]
#[command(
    name = "fodesim",
    version,
    about = "Fractional-order feedback loop simulator"
)]
struct Cli {
    command: Command,
    /// Run configuration (`section.key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "both")]
    solver: Solver,
    /// Overrides `sim.variant`.
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    /// Overrides `sim.h`.
    #[arg(long)]
    h: Option<f64>,
    /// Overrides `sim.t_end`.
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Overrides `analysis.which` for `bode`.
    #[arg(long, value_enum)]
    which: Option<WhichArg>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    dump_config: bool,
}

const EXIT_NUMERICAL: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn thread_cap() -> Option<usize> {
    std::env::var("FODESIM_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1)
}

fn run(cli: Cli) -> Result<String, (u8, String)> {
    let usage = |msg: String| (EXIT_USAGE, msg);
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| usage(format!("cannot read {}: {e}", cli.config.display())))?;
    let mut cfg =
        RunConfig::parse(&text).map_err(|e| usage(format!("{}: {e}", cli.config.display())))?;
    if let Some(v) = cli.variant {
        cfg.variant = match v {
            VariantArg::Verbatim => Variant::Verbatim,
            VariantArg::Derived => Variant::DerivedConsistent,
        };
    }
    if let Some(h) = cli.h {
        cfg.h = h;
    }
    if let Some(t) = cli.t_end {
        cfg.t_end = t;
    }
    if let Some(w) = cli.which {
        cfg.which = match w {
            WhichArg::Plant => Response::Plant,
            WhichArg::Controller => Response::Controller,
            WhichArg::OpenLoop => Response::OpenLoop,
            WhichArg::ClosedLoop => Response::ClosedLoop,
        };
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    if cli.dump_config {
        return Ok(cfg.dump());
    }

    let result = match cli.command {
        Command::Step => commands::step(&cfg, cli.solver),
        Command::Traj => commands::traj(&cfg),
        Command::Poles => commands::poles(&cfg),
        Command::Bode => commands::bode(&cfg, cfg.which),
    };
    result.map_err(|e| (EXIT_NUMERICAL, e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = thread_cap() {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("fodesim: cannot configure thread pool: {e}");
        }
    }
    let out_path = cli.out.clone();
    match run(cli) {
        Ok(text) => {
            let written = match &out_path {
                Some(p) => std::fs::write(p, text.as_bytes())
                    .map_err(|e| format!("cannot write {}: {e}", p.display())),
                None => {
                    use std::io::Write;
                    std::io::stdout()
                        .write_all(text.as_bytes())
                        .map_err(|e| e.to_string())
                }
            };
            match written {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("fodesim: {e}");
                    ExitCode::from(EXIT_USAGE)
                }
            }
        }
        Err((code, msg)) => {
            eprintln!("fodesim: {msg}");
            ExitCode::from(code)
        }
    }
}
