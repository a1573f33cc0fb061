mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Unsupported;
use config::{RunConfig, SettingFlags};

/// Estimate confidence in LLM-generated code from the agreement of sampled
/// programs, and show or refuse accordingly.
#[derive(Debug, Parser)]
#[command(name = "honest", version)]
struct Cli {
    #[command(flatten)]
    settings: SettingFlags,
    /// Log more (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample programs from an OpenAI-compatible endpoint into an archive.
    Sample(commands::SampleArgs),
    /// Compute a confidence report for every archive entry.
    Estimate(commands::EstimateArgs),
    /// Show or refuse each requirement at a threshold.
    Gate(commands::GateArgs),
    /// Score a labeled benchmark with one method and report AUROC and AUCPR.
    Eval(commands::EvalArgs),
    /// Search similarity weights maximizing training AUROC.
    Tune(commands::TuneArgs),
    /// Assign train and test splits to a benchmark.
    Split(commands::SplitArgs),
    /// Write a seeded synthetic benchmark and archive.
    Synth(commands::SynthArgs),
}

const EXIT_USAGE: u8 = 2;
const EXIT_NETWORK: u8 = 3;
const EXIT_UNSUPPORTED: u8 = 4;

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Unsupported>().is_some() {
        return EXIT_UNSUPPORTED;
    }
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<honest_core::Error>() {
            return match e {
                e if e.is_network() => EXIT_NETWORK,
                honest_core::Error::UnsupportedLanguage(_) => EXIT_UNSUPPORTED,
                _ => EXIT_USAGE,
            };
        }
    }
    EXIT_USAGE
}

fn is_broken_pipe(err: &anyhow::Error) -> bool {
    err.downcast_ref::<std::io::Error>()
        .is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe)
}

fn run(cli: &Cli, config: &RunConfig) -> anyhow::Result<()> {
    match &cli.command {
        Command::Sample(args) => commands::sample(config, args),
        Command::Estimate(args) => commands::estimate(config, args),
        Command::Gate(args) => commands::gate(config, args),
        Command::Eval(args) => commands::eval(config, args).map(|_| ()),
        Command::Tune(args) => commands::tune(config, args),
        Command::Split(args) => commands::split(config, args),
        Command::Synth(args) => commands::synth(config, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = RunConfig::resolve(&cli.settings).and_then(|config| {
        if cli.settings.print_config {
            println!("{}", serde_json::to_string_pretty(&config)?);
            return Ok(());
        }
        run(&cli, &config)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) if is_broken_pipe(&err) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
