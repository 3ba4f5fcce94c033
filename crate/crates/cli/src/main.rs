//! `becpro`: build template corpora, score masked LMs, mitigate and report.

mod backend;
mod commands;
mod config;
mod exit;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use becpro::Language;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::Config;

#[derive(Debug, Parser)]
#[command(name = "becpro", version, about = "Gender bias measurement and mitigation for masked language models")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LangArg {
    En,
    De,
}

impl From<LangArg> for Language {
    fn from(l: LangArg) -> Self {
        match l {
            LangArg::En => Language::English,
            LangArg::De => Language::German,
        }
    }
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed for every random stage [default: 42]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Corpus language [default: en]
    #[arg(long, global = true, value_enum)]
    lang: Option<LangArg>,
    /// toy:<checkpoint> or bridge:<url>
    #[arg(long, global = true)]
    backend: Option<String>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Fail on ambiguous lexicon words the resolver cannot decide
    #[arg(long, global = true)]
    strict: bool,
    /// TOML configuration file; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Increase log verbosity (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Expand the templates into the masked sentence corpus
    CorpusBuild(commands::corpus::CorpusArgs),
    /// Compute association scores for every corpus instance
    Score(commands::score::ScoreArgs),
    /// Counterfactual substitution followed by fine-tuning
    Mitigate(commands::mitigate::MitigateArgs),
    /// Group statistics, profession tables, plot series and hypothesis verdicts
    Report(commands::report::ReportArgs),
    /// Run built-in checks, optionally against a backend
    Selftest(commands::selftest::SelftestArgs),
    /// Train a toy masked LM checkpoint
    ToyTrain(commands::toy::ToyTrainArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::CorpusBuild(_) => "corpus-build",
            Command::Score(_) => "score",
            Command::Mitigate(_) => "mitigate",
            Command::Report(_) => "report",
            Command::Selftest(_) => "selftest",
            Command::ToyTrain(_) => "toy-train",
        }
    }
}

/// Settings shared by every subcommand after merging the config file and flags.
pub struct RunContext {
    pub command: &'static str,
    pub config: Config,
    pub out: PathBuf,
}

fn resolve(global: &GlobalArgs, command: &'static str) -> Result<RunContext> {
    let mut config = match &global.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = global.seed {
        config.seed = seed;
    }
    if let Some(lang) = global.lang {
        config.lang = lang.into();
    }
    if let Some(backend) = &global.backend {
        config.backend = Some(backend.clone());
    }
    config.strict |= global.strict;
    config.propagate_seed();
    Ok(RunContext { command, config, out: global.out.clone() })
}

fn run(cli: Cli) -> Result<()> {
    let ctx = resolve(&cli.global, cli.command.name())?;
    match cli.command {
        Command::CorpusBuild(a) => commands::corpus::run(ctx, a),
        Command::Score(a) => commands::score::run(ctx, a),
        Command::Mitigate(a) => commands::mitigate::run(ctx, a),
        Command::Report(a) => commands::report::run(ctx, a),
        Command::Selftest(a) => commands::selftest::run(ctx, a),
        Command::ToyTrain(a) => commands::toy::run(ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::exit_code(&e))
        }
    }
}
