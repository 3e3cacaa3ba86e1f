//! Command-line front end: argument model, session configuration and
//! command dispatch. `main` only prints what [`run`] returns.

mod commands;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use monadic_core::strcore::CanonMode;
use monadic_core::MatchMode;

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit status for a usage error.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for an infeasible or truncated result under `--strict`.
pub const EXIT_STRICT: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "monadic",
    version,
    about = "Leibnizian strings, multiway rewriting and S-matrices"
)]
pub struct Cli {
    #[command(flatten)]
    pub session: SessionArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Dot,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CanonArg {
    Literal,
    Rotation,
    RotationMirror,
}

impl From<CanonArg> for CanonMode {
    fn from(c: CanonArg) -> Self {
        match c {
            CanonArg::Literal => CanonMode::Literal,
            CanonArg::Rotation => CanonMode::Rotation,
            CanonArg::RotationMirror => CanonMode::RotationMirror,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatchArg {
    Linear,
    Cyclic,
}

impl From<MatchArg> for MatchMode {
    fn from(m: MatchArg) -> Self {
        match m {
            MatchArg::Linear => MatchMode::Linear,
            MatchArg::Cyclic => MatchMode::Cyclic,
        }
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct SessionArgs {
    /// Letters in order; derived from the inputs when omitted.
    #[arg(long, global = true)]
    pub alphabet: Option<String>,
    /// Rewrite rule `LHS->RHS`; repeatable.
    #[arg(long = "rule", global = true)]
    pub rules: Vec<String>,
    #[arg(long, value_enum, default_value = "literal", global = true)]
    pub canon: CanonArg,
    #[arg(long = "match", value_enum, default_value = "linear", global = true)]
    pub match_mode: MatchArg,
    /// Action scale in the phase `exp(i gamma S / k)`.
    #[arg(long, default_value_t = 1.0, global = true)]
    pub k: f64,
    #[arg(long, default_value_t = 1.0, global = true)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0, global = true)]
    pub beta: f64,
    /// Residual accepted by gate recognition.
    #[arg(long, alias = "tol", default_value_t = monadic_core::smatrix::gates::DEFAULT_MATCH_TOL, global = true)]
    pub match_tol: f64,
    /// Objective below which solved weights count as orthonormal.
    #[arg(long, default_value_t = 1e-18, global = true)]
    pub feasibility_tol: f64,
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
    /// Output format; each command has its own default.
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// Exit with status 3 on infeasible or truncated results.
    #[arg(long, global = true)]
    pub strict: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Indifference, variety and entropies of one string.
    Analyze { string: String },
    /// Expand a multiway system and annotate its maximal-variety paths.
    Multiway {
        /// Initial string; repeat for several roots.
        #[arg(long = "init", required = true)]
        init: Vec<String>,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long, default_value_t = 1_000_000)]
        max_nodes: usize,
        #[arg(long, default_value_t = 100_000)]
        max_width: usize,
    },
    /// Physical and maximal-variety paths of a saved graph.
    Paths {
        #[arg(long)]
        graph: std::path::PathBuf,
        /// Target layer; defaults to the deepest.
        #[arg(long)]
        depth: Option<usize>,
        /// Also list every physical path from layer 0.
        #[arg(long)]
        all: bool,
    },
    /// S-matrix between two layers of a saved graph.
    Smatrix {
        #[arg(long)]
        graph: std::path::PathBuf,
        #[arg(long, default_value_t = 0)]
        from: usize,
        #[arg(long, default_value_t = 1)]
        to: usize,
        /// Keep non-Leibnizian intermediate nodes.
        #[arg(long)]
        all_nodes: bool,
        /// Off-diagonal weight of a fully connected 2x2 block.
        #[arg(long, default_value_t = std::f64::consts::FRAC_1_SQRT_2, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        /// Match the result against the gate catalog.
        #[arg(long)]
        recognize: bool,
        /// Append this many auxiliary out-words to restore unitarity.
        #[arg(long)]
        extend: Option<usize>,
    },
    /// Canonical-ensemble occupations of views against the Fermi-Dirac form.
    Stats {
        #[arg(long)]
        length: usize,
        #[arg(long, default_value_t = monadic_core::stats::DEFAULT_ENUM_CAP)]
        cap: u64,
    },
    /// Conditional entropy against variety over seeded random strings.
    Corr {
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 8)]
        min_len: usize,
        #[arg(long, default_value_t = 20)]
        max_len: usize,
    },
    /// The fractal word of order n.
    Fractal {
        #[arg(long)]
        n: usize,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Analyze { .. } => "analyze",
            Command::Multiway { .. } => "multiway",
            Command::Paths { .. } => "paths",
            Command::Smatrix { .. } => "smatrix",
            Command::Stats { .. } => "stats",
            Command::Corr { .. } => "corr",
            Command::Fractal { .. } => "fractal",
        }
    }

    fn default_format(&self) -> Format {
        match self {
            Command::Stats { .. } | Command::Corr { .. } => Format::Csv,
            Command::Fractal { .. } => Format::Text,
            _ => Format::Json,
        }
    }

    fn formats(&self) -> &'static [Format] {
        match self {
            Command::Analyze { .. }
            | Command::Paths { .. }
            | Command::Smatrix { .. }
            | Command::Fractal { .. } => &[Format::Json, Format::Text],
            Command::Multiway { .. } => &[Format::Json, Format::Dot, Format::Text],
            Command::Stats { .. } | Command::Corr { .. } => {
                &[Format::Csv, Format::Json, Format::Text]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub match_tol: f64,
    pub feasibility: f64,
}

/// Resolved session settings, echoed into every artifact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionConfig {
    pub alphabet: Option<String>,
    pub rules: Vec<String>,
    pub canon_mode: CanonMode,
    pub match_mode: MatchMode,
    pub k: f64,
    pub gamma: f64,
    pub beta: f64,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub format: Format,
}

impl SessionConfig {
    pub fn resolve(args: &SessionArgs, command: &Command) -> Result<Self, CliError> {
        let format = args.format.unwrap_or_else(|| command.default_format());
        if !command.formats().contains(&format) {
            return Err(CliError::Usage(format!(
                "{} does not emit {format:?} output",
                command.name()
            )));
        }
        if !(args.k.is_finite() && args.k != 0.0) {
            return Err(CliError::Usage(format!(
                "--k must be finite and non-zero, got {}",
                args.k
            )));
        }
        if !(args.beta.is_finite() && args.beta > 0.0) {
            return Err(CliError::Usage(format!(
                "--beta must be positive, got {}",
                args.beta
            )));
        }
        Ok(Self {
            alphabet: args.alphabet.clone(),
            rules: args.rules.clone(),
            canon_mode: args.canon.into(),
            match_mode: args.match_mode.into(),
            k: args.k,
            gamma: args.gamma,
            beta: args.beta,
            tolerances: Tolerances {
                match_tol: args.match_tol,
                feasibility: args.feasibility_tol,
            },
            seed: args.seed,
            format,
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            _ => 1,
        }
    }
}

/// Rendered artifact plus the status the process should exit with.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub artifact: String,
    pub exit_code: i32,
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let config = SessionConfig::resolve(&cli.session, &cli.command)?;
    let (artifact, flagged) = commands::dispatch(&cli.command, &config)?;
    let exit_code = if flagged && cli.session.strict {
        EXIT_STRICT
    } else {
        0
    };
    Ok(Outcome {
        artifact,
        exit_code,
    })
}
