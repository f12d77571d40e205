//! `wargamer`: headless batch runs, COA comparison, assessment analytics,
//! validation, and the plan server.
//!
//! Exit codes: 0 success, 1 validation findings (or a failed analysis or
//! run), 2 usage error or missing/unparsable input file.

mod analyze;
mod assets;
mod commands;
mod input;

use analyze::{parse_r, Analysis, AnalyzeArgs};
use clap::{Args, Parser, Subcommand};
use commands::{CompareArgs, RunArgs};
use input::InputError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok,
    Findings,
    Usage,
}

impl From<Exit> for ExitCode {
    fn from(e: Exit) -> Self {
        ExitCode::from(match e {
            Exit::Ok => 0,
            Exit::Findings => 1,
            Exit::Usage => 2,
        })
    }
}

#[derive(Parser)]
#[command(name = "wargamer", version, about = "Campaign wargaming engine: simulate plans, compare COAs, analyze team data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Simulation settings; these mirror the run configuration one-to-one.
#[derive(Args, Debug, Clone, Copy)]
pub struct RunFlags {
    /// Ticks to simulate [default: the plan's horizon].
    #[arg(long)]
    pub horizon: Option<u32>,
    /// Noise seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Enable per-variable Gaussian noise.
    #[arg(long)]
    pub noise: bool,
    /// Effect threshold θ on |plan − baseline| [default: the scenario's].
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Minimum effect duration in ticks [default: the scenario's].
    #[arg(long)]
    pub persistence: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one plan and its baseline; write the run result JSON.
    Run {
        /// Scenario JSON.
        #[arg(long)]
        scenario: PathBuf,
        /// Plan JSON.
        #[arg(long)]
        plan: PathBuf,
        /// Situation hypothesis name [default: the scenario's first].
        #[arg(long)]
        hypothesis: Option<String>,
        #[command(flatten)]
        flags: RunFlags,
        /// Output file [default: stdout].
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Run on a plan server at this base URL instead of in-process.
        #[arg(long)]
        server: Option<String>,
    },
    /// Rank plans against desired effects under every hypothesis (CSV).
    Compare {
        /// Scenario JSON.
        #[arg(long)]
        scenario: PathBuf,
        /// Desired-effect set JSON.
        #[arg(long)]
        effects: PathBuf,
        /// Plan JSON files (at least one).
        #[arg(required = true)]
        plans: Vec<PathBuf>,
        #[command(flatten)]
        flags: RunFlags,
        /// Ranking CSV output [default: stdout].
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Also write the per-plan robustness summary CSV here.
        #[arg(long)]
        robustness: Option<PathBuf>,
        /// Also write the full comparison JSON here.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Compare on a plan server at this base URL instead of in-process.
        #[arg(long)]
        server: Option<String>,
    },
    /// Run an assessment pipeline on a CSV (or request JSON) input.
    Analyze {
        /// Pipeline to run.
        #[arg(value_enum)]
        analysis: Analysis,
        /// Input file: CSV, or a `.json` request body.
        input: PathBuf,
        /// pfnet: maximum path length q [default: n − 1].
        #[arg(long)]
        q: Option<usize>,
        /// pfnet: Minkowski r, a number >= 1 or `inf` [default: inf].
        #[arg(long, value_parser = parse_r)]
        r: Option<f64>,
        /// pfnet: referent similarity CSV to compare the network against.
        #[arg(long)]
        referent: Option<PathBuf>,
        /// trust: comma-separated 1-based reverse-coded item numbers.
        #[arg(long, value_delimiter = ',')]
        reverse: Vec<usize>,
        /// sna: window start (seconds, inclusive).
        #[arg(long)]
        from: Option<f64>,
        /// sna: window end (seconds, exclusive).
        #[arg(long)]
        to: Option<f64>,
        /// sna: width in seconds of consecutive windows for the
        /// support-reliance trend.
        #[arg(long)]
        reliance_window: Option<f64>,
        /// Output file [default: stdout].
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Analyze on a plan server at this base URL instead of in-process.
        #[arg(long)]
        server: Option<String>,
    },
    /// Validate a scenario and optionally a plan; list findings.
    Validate {
        /// Scenario JSON.
        #[arg(long)]
        scenario: PathBuf,
        /// Plan JSON.
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Check only this hypothesis [default: all].
        #[arg(long)]
        hypothesis: Option<String>,
        /// Print the findings as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Start the plan server. Flags override WARGAME_DATA_DIR,
    /// WARGAME_LISTEN, WARGAME_WORKERS and WARGAME_QUEUE.
    Serve {
        /// Document store directory [env WARGAME_DATA_DIR, default ./wargame-data].
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Listen address [env WARGAME_LISTEN, default 127.0.0.1:7878].
        #[arg(long)]
        listen: Option<std::net::SocketAddr>,
        /// Simulation workers [env WARGAME_WORKERS, default: CPU count].
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Write the bundled demo scenario, plans, effects and sample data.
    Demo {
        /// Target directory.
        #[arg(long, short, default_value = "demo")]
        out: PathBuf,
    },
}

fn serve(data_dir: Option<PathBuf>, listen: Option<std::net::SocketAddr>, workers: Option<usize>) -> anyhow::Result<Exit> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    let mut cfg = wargame_server::ServerConfig::from_env().map_err(|e| input::input_error(e.to_string()))?;
    if let Some(d) = data_dir {
        cfg.data_dir = d;
    }
    if let Some(l) = listen {
        cfg.listen = l;
    }
    if let Some(w) = workers {
        cfg.workers = w.max(1);
    }
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async {
        let server = wargame_server::bind(&cfg).await?;
        // The first stdout line announces the bound address (useful with :0).
        println!("listening on http://{}", server.local_addr()?);
        server.run_until(shutdown_signal()).await?;
        Ok::<_, anyhow::Error>(())
    })?;
    Ok(Exit::Ok)
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}

fn write_demo(out: PathBuf) -> anyhow::Result<Exit> {
    for (rel, text) in assets::demo_assets() {
        input::emit(Some(&out.join(&rel)), &text)?;
    }
    println!("demo assets written to {}", out.display());
    Ok(Exit::Ok)
}

fn dispatch(cli: Cli) -> anyhow::Result<Exit> {
    match cli.command {
        Command::Run { scenario, plan, hypothesis, flags, out, server } => {
            commands::run(RunArgs { scenario, plan, hypothesis, flags, out, server })
        }
        Command::Compare { scenario, effects, plans, flags, out, robustness, json, server } => {
            commands::compare(CompareArgs { scenario, plans, effects, flags, out, robustness, json, server })
        }
        Command::Analyze { analysis, input, q, r, referent, reverse, from, to, reliance_window, out, server } => {
            analyze::analyze(AnalyzeArgs { analysis, input, q, r, referent, reverse, from, to, reliance_window, out, server })
        }
        Command::Validate { scenario, plan, hypothesis, json } => {
            commands::validate(&scenario, plan.as_deref(), hypothesis.as_deref(), json)
        }
        Command::Serve { data_dir, listen, workers } => serve(data_dir, listen, workers),
        Command::Demo { out } => write_demo(out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code.into(),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<InputError>().is_some() {
                Exit::Usage.into()
            } else {
                Exit::Findings.into()
            }
        }
    }
}
