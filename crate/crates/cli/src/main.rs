use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cmseq::{BoundaryCondition, ConditioningSide, Direction, LawClass};
use cmseq_cli::commands::{self, SampleFormat};
use cmseq_cli::CliResult;

/// Classify Gaussian sequences, build CM_c models and simulate them.
#[derive(Parser)]
#[command(name = "cmseq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a law file and write the report.
    Classify {
        input: PathBuf,
        /// Relative threshold below which a precision block counts as zero.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 1e-8)]
        residual_tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a forward or backward CM_c model from a law file.
    Convert {
        input: PathBuf,
        #[arg(long, value_enum)]
        direction: DirectionArg,
        #[arg(long = "c", value_enum)]
        c: SideArg,
        #[arg(long, value_enum, default_value = "bc1")]
        bc: BcArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the reciprocity and Markov conditions of a model file.
    Verify {
        input: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 1e-8)]
        residual_tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw trajectories from a model file.
    Simulate {
        input: PathBuf,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
    },
    /// Write a random law of the given class.
    Gen {
        #[arg(long, value_enum)]
        class: ClassArg,
        #[arg(long = "N")]
        last: usize,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the sample covariance of simulated trajectories with the truth.
    Validate {
        input: PathBuf,
        /// Reference law; defaults to the covariance implied by the model.
        #[arg(long)]
        law: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.02)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Forward,
    Backward,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    First,
    Last,
}

#[derive(Clone, Copy, ValueEnum)]
enum BcArg {
    Bc1,
    Bc2,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    #[value(alias = "structured")]
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassArg {
    Markov,
    Reciprocal,
    Cml,
    Cmf,
    Generic,
}

fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Classify {
            input,
            tol,
            residual_tol,
            out,
        } => commands::classify(&input, commands::tolerance(tol, residual_tol)?, &out),
        Command::Convert {
            input,
            direction,
            c,
            bc,
            out,
        } => {
            let direction = match direction {
                DirectionArg::Forward => Direction::Forward,
                DirectionArg::Backward => Direction::Backward,
            };
            let side = match c {
                SideArg::First => ConditioningSide::First,
                SideArg::Last => ConditioningSide::Last,
            };
            let bc = match bc {
                BcArg::Bc1 => BoundaryCondition::Bc1,
                BcArg::Bc2 => BoundaryCondition::Bc2,
            };
            commands::convert(&input, direction, side, bc, &out)
        }
        Command::Verify {
            input,
            tol,
            residual_tol,
            out,
        } => commands::verify(&input, commands::tolerance(tol, residual_tol)?, out.as_deref()),
        Command::Simulate {
            input,
            samples,
            seed,
            out,
            format,
        } => {
            let format = match format {
                FormatArg::Csv => SampleFormat::Csv,
                FormatArg::Json => SampleFormat::Json,
            };
            commands::simulate(&input, samples, seed, &out, format)
        }
        Command::Gen {
            class,
            last,
            d,
            seed,
            out,
        } => {
            let class = match class {
                ClassArg::Markov => LawClass::Markov,
                ClassArg::Reciprocal => LawClass::Reciprocal,
                ClassArg::Cml => LawClass::CmLOnly,
                ClassArg::Cmf => LawClass::CmFOnly,
                ClassArg::Generic => LawClass::Generic,
            };
            commands::generate(class, last, d, seed, &out)
        }
        Command::Validate {
            input,
            law,
            samples,
            seed,
            tol,
            out,
        } => commands::validate(&input, law.as_deref(), samples, seed, tol, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
