use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pbcs::commands::{self, SearchOptions};
use pbcs::reference::Example;
use pbcs::{exit, CliError};

/// Optimality tests and destabilizing-control search for positive bilinear
/// control systems `x' = (A + uB) x`, `u` in `[-1, 1]`.
#[derive(Parser)]
#[command(name = "pbcs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that A + B and A - B are Metzler (exit 0 valid, 2 invalid).
    Validate { input: PathBuf },
    /// First-order test, plus the singular test for u = 0 or the
    /// second-order test for bang-bang controls.
    Analyze {
        input: PathBuf,
        /// Uniform samples of the switching function (switch times are added).
        #[arg(long)]
        grid: Option<usize>,
        /// Write (time, m) samples to this CSV file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Exhaustive bang-bang grid search for the largest spectral radius.
    Search {
        input: PathBuf,
        /// Number of arcs k.
        #[arg(long)]
        arcs: usize,
        /// Grid density d: arc lengths are multiples of T / d.
        #[arg(long)]
        grid: u32,
        /// Extra horizons for the growth-rate curve, comma separated.
        #[arg(long, value_delimiter = ',')]
        horizons: Vec<f64>,
        /// Skip hill-climbing from the best grid control.
        #[arg(long)]
        no_refine: bool,
        /// Write (t, rho_t^(1/t)) to this CSV file.
        #[arg(long)]
        curve_csv: Option<PathBuf>,
    },
    /// Recompute a published example and compare with its stated values.
    Reproduce {
        #[arg(value_parser = ["ex2", "ex4", "ex5"])]
        example: String,
    },
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Validate { input } => {
            let (out, code) = commands::validate(&input)?;
            print!("{out}");
            Ok(code)
        }
        Command::Analyze { input, grid, csv } => {
            print!("{}", commands::analyze(&input, grid, csv.as_deref())?);
            Ok(exit::OK)
        }
        Command::Search {
            input,
            arcs,
            grid,
            horizons,
            no_refine,
            curve_csv,
        } => {
            let opts = SearchOptions {
                arcs,
                density: grid,
                horizons,
                refine: !no_refine,
                curve_csv,
            };
            print!("{}", commands::search(&input, &opts)?);
            Ok(exit::OK)
        }
        Command::Reproduce { example } => {
            let (table, ok) = commands::reproduce(example.parse::<Example>()?)?;
            print!("{table}");
            Ok(if ok { exit::OK } else { exit::MISMATCH })
        }
    }
}

fn main() -> ExitCode {
    // clap would exit with 2 on bad arguments, which means "invalid system" here
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::ERROR as u8 } else { 0 });
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("pbcs: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
