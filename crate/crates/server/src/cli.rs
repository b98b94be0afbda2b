//! Command line: `serve` runs the HTTP service, `admin ...` works directly
//! on the journal while the server is stopped.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fallax_core::clock::SystemClock;
use fallax_core::domain::ReportId;
use fallax_core::export::ExportFilter;
use fallax_core::moderation::{Actor, ReportAction, ReportState};
use fallax_core::store::{Store, StoreOptions};
use fallax_core::{Catalog, Platform};
use thiserror::Error;

use crate::{app, HashCost, ServerOptions};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(#[from] fallax_core::config::ConfigError),
    #[error("storage: {0}")]
    Store(#[from] fallax_core::store::StoreError),
    #[error("{0}")]
    Platform(#[from] fallax_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("no user with handle {0}")]
    UnknownHandle(String),
}

#[derive(Debug, Parser)]
#[command(
    name = "fallax",
    version,
    about = "Fallacy game server and admin tools"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP/JSON service.
    Serve(ServeArgs),
    /// Maintenance commands; run them while the server is stopped.
    Admin {
        #[command(flatten)]
        data: DataArgs,
        #[command(subcommand)]
        command: AdminCommand,
    },
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[arg(long, default_value = "assets/game.json")]
    pub config: PathBuf,
    #[arg(long, default_value = "assets/content")]
    pub content_dir: PathBuf,
    #[arg(long, default_value = "assets/locales")]
    pub locale_dir: PathBuf,
    #[arg(long, env = "FALLAX_JOURNAL", default_value = "data/journal.log")]
    pub journal: PathBuf,
    /// fsync after every journal record.
    #[arg(long)]
    pub fsync: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, env = "FALLAX_PORT", default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: std::net::IpAddr,
    /// Seed for round sampling and bot choices; random when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Requests per token per minute.
    #[arg(long, default_value_t = 600)]
    pub rate_limit: u32,
}

#[derive(Debug, Subcommand)]
pub enum AdminCommand {
    /// Review spam reports.
    Spam {
        #[command(subcommand)]
        command: SpamCommand,
    },
    /// Run label aggregation and pay author bonuses.
    Aggregate {
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write the corpus as JSON lines plus `<out>.manifest.json`.
    Export {
        #[arg(long)]
        language: Option<String>,
        #[arg(long)]
        gold_only: bool,
        #[arg(long, default_value = "corpus.jsonl")]
        out: PathBuf,
    },
    /// Print store statistics.
    Stats,
    /// Give an account the admin role.
    GrantAdmin { handle: String },
    /// Rewrite the journal as one record per live entity.
    Compact,
}

#[derive(Debug, Subcommand)]
pub enum SpamCommand {
    List {
        #[arg(long, value_enum)]
        state: Option<StateArg>,
    },
    Resolve {
        id: String,
        action: ActionArg,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StateArg {
    Open,
    Dismissed,
    Upheld,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ActionArg {
    Dismiss,
    Uphold,
}

impl DataArgs {
    pub fn open(&self, seed: u64) -> Result<Platform, CliError> {
        let catalog = Catalog::load(&self.config, &self.content_dir, &self.locale_dir)?;
        if let Some(dir) = self.journal.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let clock = Arc::new(SystemClock);
        let store = Store::open(
            &self.journal,
            StoreOptions { fsync: self.fsync },
            clock.clone(),
        )?;
        Ok(Platform::new(catalog, Arc::new(store), clock, seed)?)
    }
}

fn print_json<T: serde::Serialize>(value: &T) {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value).expect("platform types serialize");
    // a closed pipe (`| head`) is not an error
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

/// Runs an admin command and prints its result as JSON.
pub fn run_admin(data: &DataArgs, command: AdminCommand) -> Result<(), CliError> {
    let platform = data.open(rand::random())?;
    let op = Actor::Operator;
    match command {
        AdminCommand::Spam {
            command: SpamCommand::List { state },
        } => {
            let state = state.map(|s| match s {
                StateArg::Open => ReportState::Open,
                StateArg::Dismissed => ReportState::Dismissed,
                StateArg::Upheld => ReportState::Upheld,
            });
            print_json(&platform.list_reports(&op, state)?);
        }
        AdminCommand::Spam {
            command: SpamCommand::Resolve { id, action },
        } => {
            let action = match action {
                ActionArg::Dismiss => ReportAction::Dismiss,
                ActionArg::Uphold => ReportAction::Uphold,
            };
            print_json(&platform.resolve_report(&op, &ReportId::new(id), action)?);
        }
        AdminCommand::Aggregate { seed } => {
            print_json(&platform.trigger_aggregation(&op, seed)?);
        }
        AdminCommand::Export {
            language,
            gold_only,
            out,
        } => {
            let filter = ExportFilter {
                language,
                gold_only,
            };
            let (manifest, manifest_path) = platform.export_corpus_to(&filter, &out)?;
            eprintln!(
                "wrote {} records to {}, manifest {}",
                manifest.record_count,
                out.display(),
                manifest_path.display()
            );
        }
        AdminCommand::Stats => print_json(&platform.stats()),
        AdminCommand::GrantAdmin { handle } => {
            let user = platform
                .find_by_handle(&handle)
                .ok_or(CliError::UnknownHandle(handle))?;
            let user = platform.grant_admin(&user.id)?;
            println!("{} is now an admin", user.handle);
        }
        AdminCommand::Compact => {
            platform.store.compact()?;
            println!("journal compacted");
        }
    }
    Ok(())
}

pub async fn serve(args: ServeArgs) -> Result<(), CliError> {
    let seed = args.seed.unwrap_or_else(rand::random);
    let platform = Arc::new(args.data.open(seed)?);
    let router = app(
        platform,
        ServerOptions {
            hash_cost: HashCost::default(),
            rate_limit: args.rate_limit,
        },
    );
    let addr = SocketAddr::new(args.bind, args.port);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, journal = %args.data.journal.display(), "listening");
    axum::serve(listener, router)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Serve(args) => tokio::runtime::Runtime::new()?.block_on(serve(args)),
        Command::Admin { data, command } => run_admin(&data, command),
    }
}
