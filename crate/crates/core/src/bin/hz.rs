//! Command-line front end: `hz <scenario> --config <path>`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hzlab::config::{load_config, Scenario};
use hzlab::report::{emit_report, Format};
use hzlab::scenario::{output_dir, output_stem, run_scenario, RunOptions};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Enable brute-force cross-checks.
    #[arg(long)]
    oracle: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Curvature area bound for closed planar curves.
    CurveBound(Common),
    /// Periodic orbits and area certificates for magnetic flows on the torus.
    Magnetic(Common),
    /// Periodic levels, actions and indices of the radial model Hamiltonians.
    Levels(Common),
    /// Spectral sequence pages of a filtered complex over GF(2).
    Spectral(Common),
}

/// Report directory defaults to `output.dir` in the config and can be
/// overridden with HZ_OUTPUT_DIR.
#[derive(Debug, Parser)]
#[command(name = "hz", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (scenario, args) = match cli.command {
        Command::CurveBound(a) => (Scenario::CurveBound, a),
        Command::Magnetic(a) => (Scenario::Magnetic, a),
        Command::Levels(a) => (Scenario::Levels, a),
        Command::Spectral(a) => (Scenario::Spectral, a),
    };
    let cfg = match load_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("hz: {e}");
            return ExitCode::from(2);
        }
    };
    if cfg.scenario != scenario {
        eprintln!(
            "hz: config describes scenario {} but {} was requested",
            cfg.scenario, scenario
        );
        return ExitCode::from(2);
    }
    let opts = RunOptions {
        oracle: args.oracle,
        base_dir: args.config.parent().map(PathBuf::from),
    };
    let doc = match run_scenario(&cfg, &opts) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("hz: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let format = match args.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    let dir = output_dir(&cfg);
    match emit_report(&doc, format, &dir, &output_stem(&cfg)) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
        }
        Err(e) => {
            eprintln!("hz: {e}");
            return ExitCode::from(2);
        }
    }
    for c in doc.checks.iter().filter(|c| !c.pass) {
        eprintln!("FAIL {}: {}", c.name, c.detail);
    }
    for f in &doc.numerical_failures {
        eprintln!("numerical failure: {f}");
    }
    ExitCode::from(doc.exit_code() as u8)
}
