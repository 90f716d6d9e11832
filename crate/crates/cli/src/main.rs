//! `histories`: decoherence checks, record construction and time-reversal
//! analyses on JSON model files or built-in scenarios.

mod commands;
mod error;
mod modelfile;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use histories_core::engine::TolerancePolicy;

use error::{CliError, EXIT_PARSE};

#[derive(Parser, Debug)]
#[command(name = "histories", version, about = "Decoherent-histories checks for finite-dimensional models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// JSON model file
    #[arg(long, value_name = "PATH", conflicts_with = "scenario")]
    pub model: Option<PathBuf>,
    /// Built-in scenario; `key=value` parameters follow as positional arguments
    #[arg(long, value_name = "NAME")]
    pub scenario: Option<String>,
    /// Scenario parameters such as `a=0.6`
    #[arg(value_name = "PARAMS")]
    pub params: Vec<String>,
    /// Seed for random scenarios
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Relative tolerance factor for decoherence checks
    #[arg(long, default_value_t = TolerancePolicy::default().rel)]
    pub tol_rel: f64,
    /// Absolute tolerance floor for decoherence checks
    #[arg(long, default_value_t = TolerancePolicy::default().abs)]
    pub tol_abs: f64,
    /// Write the report here instead of standard output
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Include wall-clock timing (makes reports nondeterministic)
    #[arg(long)]
    pub timing: bool,
}

impl OutputArgs {
    pub fn tolerance(&self) -> Result<TolerancePolicy, CliError> {
        if !(self.tol_rel >= 0.0 && self.tol_abs >= 0.0 && self.tol_rel.is_finite() && self.tol_abs.is_finite()) {
            return Err(CliError::Parse("tolerances must be finite and nonnegative".into()));
        }
        Ok(TolerancePolicy {
            rel: self.tol_rel,
            abs: self.tol_abs,
        })
    }
}

#[derive(Args, Debug, Clone, Copy)]
#[command(group(ArgGroup::new("direction").args(["forwards", "backwards", "both", "two_state"])))]
pub struct DirectionArgs {
    /// Forwards functional (default)
    #[arg(long)]
    pub forwards: bool,
    /// Backwards functional
    #[arg(long)]
    pub backwards: bool,
    /// Both directions and the both-conditions theorem
    #[arg(long)]
    pub both: bool,
    /// Two-state functional with the model file's `rho_final`
    #[arg(long)]
    pub two_state: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrengthArg {
    Weak,
    Strong,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify a history set and report its worst pairs
    Check {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        direction: DirectionArgs,
        #[arg(long, value_enum, default_value = "weak")]
        strength: StrengthArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Probability tables with their classification
    Probs {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        direction: DirectionArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Pre- and post-selected probabilities (needs `psi_final`)
    Abl {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Branch orthogonality and generalized records
    Records {
        #[command(flatten)]
        input: InputArgs,
        /// Grid index of the records (default: last grid time)
        #[arg(long)]
        time_index: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Collapse procedure run backwards from a final state
    Reverse {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Purity and interference curves of a mirrored model
    Recohere {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Symmetric-cosmology check (`rho_final` defaults to the identity)
    Page {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Built-in scenarios
    Scenario {
        #[command(subcommand)]
        action: ScenarioCommand,
    },
}

#[derive(Subcommand, Debug)]
enum ScenarioCommand {
    /// List scenario names and parameters
    List {
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Write a scenario as a model file
    Emit {
        name: String,
        params: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

fn dispatch(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Check {
            input,
            direction,
            strength,
            output,
        } => commands::check(&input, direction, strength, &output),
        Command::Probs {
            input,
            direction,
            output,
        } => commands::probs(&input, direction, &output),
        Command::Abl { input, output } => commands::abl(&input, &output),
        Command::Records {
            input,
            time_index,
            output,
        } => commands::records(&input, time_index, &output),
        Command::Reverse { input, output } => commands::reverse(&input, &output),
        Command::Recohere { input, output } => commands::recohere(&input, &output),
        Command::Page { input, output } => commands::page(&input, &output),
        Command::Scenario { action } => match action {
            ScenarioCommand::List { out } => commands::scenario_list(out.as_deref()),
            ScenarioCommand::Emit { name, params, seed, out } => {
                commands::scenario_emit(&name, &params, seed, out.as_deref())
            }
        },
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
