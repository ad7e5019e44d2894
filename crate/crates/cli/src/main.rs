//! `speedprior`: command-line driver for the speed-prior laboratory.

mod commands;
mod config;
mod render;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use speedprior::enumerate::Mode;
use speedprior::measures::MeasureSpec;
use speedprior::predictor::LossSpec;
use speedprior::priors::PriorKind;
use speedprior::rational::{parse_rational, Rational};
use speedprior::BitString;

#[derive(Parser, Debug)]
#[command(name = "speedprior", version, about = "Speed priors on the REF-1 reference machine", args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Read flags from a key=value file (explicit flags take precedence).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<String>,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Enumeration threads: 0 = automatic, 1 = sequential.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    /// Exit with status 2 when a result is not certified.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Leave the generation timestamp out of the report.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
    /// Add approximate decimal renderings next to exact values.
    #[arg(long, global = true)]
    pub decimal: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Jsonl,
    Csv,
    Text,
}

fn parse_bits(s: &str) -> Result<BitString, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_eps(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn parse_env(s: &str) -> Result<MeasureSpec, String> {
    s.parse().map_err(|e: speedprior::measures::MeasureError| e.to_string())
}

fn parse_loss(s: &str) -> Result<LossSpec, String> {
    s.parse().map_err(|e: speedprior::predictor::PredictorError| e.to_string())
}

fn parse_bit(s: &str) -> Result<bool, String> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(format!("expected 0 or 1, got `{other}`")),
    }
}

#[derive(Subcommand, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Certified estimate of S_Kt(x) or S_Fast(x).
    Prior {
        #[arg(long, value_parser = str::parse::<PriorKind>)]
        kind: PriorKind,
        /// Target string ("" for the empty string).
        #[arg(long, value_parser = parse_bits)]
        x: BitString,
        #[arg(long, value_parser = parse_eps, default_value = "1/2")]
        eps: Rational,
        #[arg(long, default_value_t = speedprior::priors::DEFAULT_K_CAP)]
        k_cap: u32,
    },
    /// Prediction experiment against a measure.
    Predict {
        #[arg(long, value_parser = str::parse::<PriorKind>, default_value = "fast")]
        kind: PriorKind,
        #[arg(long, value_parser = parse_env)]
        env: MeasureSpec,
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = parse_eps, default_value = "1/2")]
        eps: Rational,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Deepest phase enumerated (default 28 for fast, 20 for kt).
        #[arg(long)]
        k_cap: Option<u32>,
        /// Loss matrix l00,l01,l10,l11 indexed by actual then predicted bit.
        #[arg(long, value_parser = parse_loss, default_value = "0,1,1,0")]
        loss: LossSpec,
        #[arg(long, value_parser = parse_bit, default_value = "0")]
        tie_break: bool,
        #[arg(long, default_value_t = 2)]
        max_tightenings: u32,
        /// Override the budget on n (64 for fast, 10 for kt).
        #[arg(long)]
        max_n: Option<usize>,
    },
    /// Sequence that defeats the approximate prior's own predictor.
    Adversarial {
        #[arg(long, value_parser = str::parse::<PriorKind>)]
        kind: PriorKind,
        #[arg(long, value_parser = parse_eps, default_value = "1/2")]
        eps: Rational,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = speedprior::priors::DEFAULT_K_CAP)]
        k_cap: u32,
        #[arg(long, default_value_t = 2)]
        max_tightenings: u32,
        #[arg(long)]
        max_n: Option<usize>,
    },
    /// Run invariant checks.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        /// Phase (suite-specific default when omitted).
        #[arg(long)]
        k: Option<u32>,
        /// Longest string checked (suite-specific default when omitted).
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// Ledger of computation records up to a phase.
    Enumerate {
        #[arg(long)]
        k: u32,
        #[arg(long, value_parser = str::parse::<Mode>, default_value = "tree")]
        mode: Mode,
    },
    /// Arithmetic-coding decoder for a measure.
    Decoder {
        #[arg(long, value_parser = parse_env)]
        env: MeasureSpec,
        /// Output string whose interval, Km and mass are reported.
        #[arg(long, value_parser = parse_bits)]
        x: Option<BitString>,
        /// Input bits to decode.
        #[arg(long, value_parser = parse_bits)]
        input: Option<BitString>,
        #[arg(long, default_value_t = 12)]
        depth: u32,
        #[arg(long, default_value_t = 64)]
        max_output: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Steps,
    Records,
    Equivalence,
    Kraft,
    Envelopes,
    Mass,
    Decoder,
    All,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match config::expand_argv(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.report);
            if outcome.failed {
                ExitCode::from(1)
            } else if outcome.uncertified && cli.global.strict {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
