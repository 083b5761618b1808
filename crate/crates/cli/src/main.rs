use std::collections::BTreeSet;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use gestproxy_client::{Client, ClientError};
use gestproxy_core::agent::Script;
use gestproxy_core::analytics::DayRange;
use gestproxy_core::api::{AgentRequest, ReplayRequest, StatsRequest, TimelineRequest};
use gestproxy_core::event::Screen;
use gestproxy_core::EngineConfig;
use tokio::net::TcpListener;

/// Replays touch traces through the intervention engine and reports usage
/// analytics. Without `--server`, an embedded service is started on a
/// loopback port for the duration of the command.
#[derive(Parser)]
#[command(name = "gestproxy", version)]
struct Cli {
    /// Base URL of a running service, such as http://127.0.0.1:8080.
    #[arg(long, global = true)]
    server: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a trace (or run a simulated-user script) and write the engine log.
    Replay(ReplayArgs),
    /// Compute usage, acceptance and interaction metrics from a log.
    Stats(StatsArgs),
    /// Export one day's usage timeline as HTML, or JSON if OUT ends in .json.
    Timeline(TimelineArgs),
    /// Serve the HTTP/JSON API and live session protocol.
    Serve(ServeArgs),
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("input").required(true))]
struct ReplayArgs {
    /// NDJSON trace of pointer samples and session events.
    #[arg(long, group = "input")]
    trace: Option<PathBuf>,
    /// JSON simulated-user script to run instead of a recorded trace.
    #[arg(long, group = "input")]
    agent: Option<PathBuf>,
    /// JSON engine configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Screen size in dp, written WxH.
    #[arg(long, default_value = "411x891")]
    screen: Screen,
    /// Where to write the NDJSON engine log.
    #[arg(long)]
    out: PathBuf,
    /// Seed for the simulated user.
    #[arg(long, default_value_t = 0, requires = "agent")]
    seed: u64,
    /// Where to write the trace a simulated user produced.
    #[arg(long, requires = "agent")]
    trace_out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// NDJSON trace or engine log; only session events are read.
    #[arg(long)]
    trace: PathBuf,
    /// Baseline days, inclusive, written A..B.
    #[arg(long)]
    base_days: DayRange,
    /// Intervention days, inclusive, written C..D.
    #[arg(long)]
    period_days: DayRange,
    /// Comma-separated target app ids; all apps when omitted.
    #[arg(long, value_delimiter = ',')]
    apps: Option<Vec<String>>,
    /// Offset of the local day boundary from virtual midnight.
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    day_offset_ms: i64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TimelineArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    day: i64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    day_offset_ms: i64,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("{}: cannot read", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("{}: cannot write", path.display()))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read(path)?).map_err(|e| anyhow!("{}: {e}", path.display()))
}

/// Prefixes service diagnostics with the input file they refer to.
fn in_file(path: &Path) -> impl FnOnce(ClientError) -> anyhow::Error + '_ {
    move |e| match e {
        ClientError::Api { error, .. } => anyhow!("{}: {}", path.display(), error.message),
        other => anyhow!(other),
    }
}

async fn connect(server: Option<String>) -> Result<Client> {
    match server {
        Some(url) => Ok(Client::new(url)),
        None => {
            let (addr, _) = gestproxy_server::spawn_local().await.context("starting embedded service")?;
            tracing::debug!(%addr, "embedded service started");
            Ok(Client::new(format!("http://{addr}")))
        }
    }
}

async fn replay(client: &Client, args: ReplayArgs) -> Result<()> {
    let config: EngineConfig = match &args.config {
        Some(path) => parse_json(path)?,
        None => EngineConfig::default(),
    };
    let log = match (&args.trace, &args.agent) {
        (Some(path), _) => {
            let req = ReplayRequest { trace: read(path)?, config, screen: args.screen };
            client.replay(&req).await.map_err(in_file(path))?.log
        }
        (None, Some(path)) => {
            let script: Script = parse_json(path)?;
            let req = AgentRequest { script, config, screen: args.screen, seed: args.seed };
            let run = client.agent(&req).await.map_err(in_file(path))?;
            if let Some(out) = &args.trace_out {
                write(out, &run.trace)?;
            }
            run.log
        }
        (None, None) => unreachable!("clap requires one input"),
    };
    write(&args.out, &log)
}

async fn stats(client: &Client, args: StatsArgs) -> Result<()> {
    let req = StatsRequest {
        log: read(&args.trace)?,
        base_days: args.base_days,
        period_days: args.period_days,
        apps: args.apps.map(|a| a.into_iter().collect::<BTreeSet<_>>()),
        day_offset_ms: args.day_offset_ms,
    };
    let report = client.stats(&req).await.map_err(in_file(&args.trace))?;
    let text = serde_json::to_string_pretty(&report)? + "\n";
    match &args.out {
        Some(path) => write(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

async fn timeline(client: &Client, args: TimelineArgs) -> Result<()> {
    let req = TimelineRequest { log: read(&args.trace)?, day: args.day, day_offset_ms: args.day_offset_ms };
    let resp = client.timeline(&req).await.map_err(in_file(&args.trace))?;
    let text = if args.out.extension().is_some_and(|e| e == "json") {
        serde_json::to_string_pretty(&resp.document)? + "\n"
    } else {
        resp.html
    };
    write(&args.out, &text)
}

async fn serve(args: ServeArgs) -> Result<()> {
    let listener = TcpListener::bind((args.host.as_str(), args.port))
        .await
        .with_context(|| format!("cannot bind {}:{}", args.host, args.port))?;
    let addr: SocketAddr = listener.local_addr()?;
    eprintln!("listening on http://{addr}");
    gestproxy_server::serve(listener).await?;
    Ok(())
}

async fn run(cli: Cli) -> Result<()> {
    if let Command::Serve(args) = cli.command {
        return serve(args).await;
    }
    let client = connect(cli.server).await?;
    match cli.command {
        Command::Replay(args) => replay(&client, args).await,
        Command::Stats(args) => stats(&client, args).await,
        Command::Timeline(args) => timeline(&client, args).await,
        Command::Serve(_) => unreachable!(),
    }
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
