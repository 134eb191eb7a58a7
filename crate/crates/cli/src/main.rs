use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use holointent::broker::{Broker, BrokerConfig};
use holointent::clock::WallClock;
use holointent::config::{ConfigError, SystemConfig};
use holointent::coordinator::Coordinator;
use holointent::scenario::{run_scenario_file, ClockMode, RunOptions};

#[derive(Parser)]
#[command(name = "holointent", version, about = "Preview-before-execute intent middleware")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario script and print its report as JSON.
    Run {
        scenario: PathBuf,
        /// Sleep through the schedule instead of jumping the logical clock.
        #[arg(long)]
        wall_clock: bool,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Persist the broker log in this directory.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Serve the client gateway until interrupted.
    Serve {
        /// TCP address for length-prefixed frames, e.g. 127.0.0.1:7400.
        #[arg(long)]
        bind: Option<String>,
        /// WebSocket address; pass "off" to disable.
        #[arg(long)]
        ws_bind: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
    /// Write every record of a persisted topic as newline-delimited JSON.
    Export {
        topic: String,
        path: PathBuf,
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// 1 for scenario and runtime failures, 2 for configuration problems.
fn exit_code(e: &anyhow::Error) -> u8 {
    if e.chain().any(|cause| cause.is::<ConfigError>()) {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<SystemConfig, ConfigError> {
    match path {
        Some(path) => SystemConfig::load(path),
        None => Ok(SystemConfig::default()),
    }
}

fn dispatch(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Run { scenario, wall_clock, config, data_dir, report } => {
            let config = load_config(config.as_deref())?;
            let options = RunOptions {
                clock: if wall_clock { ClockMode::Wall } else { ClockMode::Logical },
                config: config.intent,
                repositories: config.assets,
                data_dir: data_dir.or(config.broker.data_dir),
                replicas: config.broker.replicas,
                ..RunOptions::default()
            };
            let result = run_scenario_file(&scenario, options)?;
            let json = result.to_json();
            match report {
                Some(path) => std::fs::write(&path, json + "\n")
                    .with_context(|| format!("writing {}", path.display()))?,
                None => println!("{json}"),
            }
            Ok(())
        }
        Command::Serve { bind, ws_bind, config, data_dir } => {
            let mut config = load_config(config.as_deref())?;
            if let Some(bind) = bind {
                config.gateway.bind = bind;
            }
            match ws_bind.as_deref() {
                Some("off") => config.gateway.ws_bind = None,
                Some(addr) => config.gateway.ws_bind = Some(addr.to_string()),
                None => {}
            }
            if data_dir.is_some() {
                config.broker.data_dir = data_dir;
            }
            serve(config)
        }
        Command::Export { topic, path, data_dir, config } => {
            let config = load_config(config.as_deref())?;
            let dir = data_dir.or(config.broker.data_dir).ok_or(ConfigError::Invalid {
                field: "broker.data_dir",
                reason: "export reads a persisted log; pass --data-dir".into(),
            })?;
            let broker = Broker::open(&dir, BrokerConfig { replicas: config.broker.replicas })
                .with_context(|| format!("opening log in {}", dir.display()))?;
            let count = holointent::logio::export_log(&broker, &topic, &path)
                .with_context(|| format!("exporting {topic}"))?;
            tracing::info!(%topic, records = count, path = %path.display(), "exported");
            Ok(())
        }
    }
}

fn serve(config: SystemConfig) -> anyhow::Result<()> {
    let broker_config = BrokerConfig { replicas: config.broker.replicas };
    let broker = Arc::new(match &config.broker.data_dir {
        Some(dir) => Broker::open(dir, broker_config).with_context(|| format!("opening log in {}", dir.display()))?,
        None => Broker::in_memory(broker_config),
    });
    let coordinator = Coordinator::new(broker, Arc::new(WallClock::new()), config.intent, config.assets)
        .context("starting coordinator")?;
    let runtime = tokio::runtime::Runtime::new().context("starting runtime")?;
    runtime.block_on(async move {
        let handle = holointent::gateway::serve(Arc::new(coordinator), &config.gateway)
            .await
            .with_context(|| format!("binding {}", config.gateway.bind))?;
        println!("listening tcp={} ws={}", handle.tcp_addr, handle.ws_addr.map_or("off".into(), |a| a.to_string()));
        tokio::signal::ctrl_c().await.context("waiting for ctrl-c")?;
        tracing::info!("shutting down");
        handle.shutdown();
        Ok(())
    })
}
