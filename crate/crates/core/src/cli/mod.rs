mod bench;
mod data;
mod providers;
mod score;

use anyhow::Result;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "peacelens", version, about = "Peace-speech analysis engine")]
pub struct Cli {
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Articles (JSONL) + country labels -> embedded dataset file.
    Ingest(data::IngestArgs),
    /// Generate a synthetic two-class embedding dataset.
    Synth(data::SynthArgs),
    /// Train a classifier on a dataset and write a checkpoint.
    Train(data::TrainArgs),
    /// Per-article and per-country accuracy of a checkpoint on a dataset.
    Evaluate(data::EvaluateArgs),
    /// Score one transcript on the five peace dimensions.
    Score(score::ScoreArgs),
    /// Score a transcript set and correlate with human ratings.
    Bench(bench::BenchArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(clap::Args, Debug)]
pub struct ServeArgs {
    /// Key-value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `bind` from the config.
    #[arg(long)]
    bind: Option<std::net::SocketAddr>,
}

pub async fn run(cli: Cli) -> Result<()> {
    let json = cli.json;
    match cli.command {
        Command::Ingest(a) => data::ingest(a, json).await,
        Command::Synth(a) => data::synth(a, json),
        Command::Train(a) => data::train(a, json),
        Command::Evaluate(a) => data::evaluate(a, json),
        Command::Score(a) => score::score(a).await,
        Command::Bench(a) => bench::bench(a, json).await,
        Command::Serve(a) => serve(a).await,
    }
}

async fn serve(args: ServeArgs) -> Result<()> {
    use peacelens::service::{serve, ServiceConfig};
    let mut config = match &args.config {
        Some(p) => ServiceConfig::load(p)?,
        None => ServiceConfig::default(),
    };
    config.apply_env()?;
    if let Some(b) = args.bind {
        config.bind = b;
    }
    eprintln!("peacelens serving on http://{} ({:?} mode)", config.bind, config.mode);
    serve(config).await?;
    Ok(())
}

pub fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

pub fn fail(json: bool, err: &anyhow::Error) -> ExitCode {
    let message = format!("{err:#}");
    if json {
        println!("{}", serde_json::json!({ "error": message }));
    } else {
        eprintln!("error: {message}");
    }
    ExitCode::FAILURE
}
