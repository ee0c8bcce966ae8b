use std::io::{self, IsTerminal, Write};
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use newschat_core::chat::ChatEngine;
use newschat_core::config::AppConfig;
use newschat_core::pipeline;
use newschat_core::store::{DocumentStore, FsStore};
use newschat_core::Corpus;
use newschat::{api, repl};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "newschat", version, about = "Chat with news stories")]
struct Cli {
    /// Directory holding the corpus, banks, graphs and sessions.
    #[arg(long, global = true, default_value = "data")]
    data_dir: PathBuf,
    /// TOML config file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct StorySelect {
    #[arg(long, required_unless_present = "all", conflicts_with = "all")]
    story: Option<String>,
    /// Every story in the corpus.
    #[arg(long)]
    all: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a JSONL corpus file and merge it into the data directory.
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Generate, filter and deduplicate candidate questions.
    BuildBank(StorySelect),
    /// Answer the bank against every paragraph, then cover and prune.
    BuildGraph(StorySelect),
    /// Print node, edge and cover counts for a built graph.
    GraphStats {
        #[arg(long)]
        story: String,
    },
    /// List rooms, most recently active first.
    Rooms,
    /// Serve the JSON API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
    /// Chat in a room from the terminal, reading questions from stdin.
    Chat {
        #[arg(long)]
        story: String,
        /// Resume or name the session; a fresh id is generated otherwise.
        #[arg(long)]
        session: Option<String>,
    },
    /// Rebuild a stored session from its question log and compare.
    Replay {
        #[arg(long)]
        session: String,
    },
}

fn init_logging(default: &str) {
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(default));
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(io::stderr).init();
}

fn load_config(cli: &Cli) -> Result<AppConfig> {
    match &cli.config {
        Some(path) => AppConfig::load(path).with_context(|| format!("loading config {}", path.display())),
        None => Ok(AppConfig::default()),
    }
}

fn story_ids(corpus: &Corpus, select: &StorySelect) -> Result<Vec<String>> {
    match &select.story {
        Some(id) if corpus.story(id).is_some() => Ok(vec![id.clone()]),
        Some(id) => bail!("unknown story `{id}`"),
        None => Ok(corpus.stories().map(|s| s.id.clone()).collect()),
    }
}

fn engine(store: Arc<dyn DocumentStore>, cfg: &AppConfig) -> Result<ChatEngine> {
    Ok(ChatEngine::from_store(store, cfg.providers()?, cfg.engine.clone(), cfg.chat.clone())?)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    init_logging(if matches!(cli.command, Command::Serve { .. }) { "info" } else { "warn" });
    let cfg = load_config(&cli)?;
    let store: Arc<dyn DocumentStore> = Arc::new(FsStore::open(&cli.data_dir)?);
    let mut stdout = io::stdout().lock();

    match &cli.command {
        Command::Ingest { corpus } => {
            let s = pipeline::ingest(store.as_ref(), corpus)?;
            writeln!(
                stdout,
                "ingested {} stories, {} events, {} articles, {} paragraphs",
                s.stories, s.events, s.articles, s.paragraphs
            )?;
        }
        Command::BuildBank(select) => {
            let corpus = pipeline::load_corpus(store.as_ref())?;
            let providers = cfg.providers()?;
            for id in story_ids(&corpus, select)? {
                let bank = pipeline::build_bank(store.as_ref(), &corpus, &id, providers.questions.as_ref(), &cfg.engine)?;
                writeln!(
                    stdout,
                    "{id}: {} questions from {} paragraphs ({} skipped)",
                    bank.questions.len(),
                    corpus.story_paragraphs(&id).len(),
                    bank.skipped_paragraphs.len()
                )?;
            }
        }
        Command::BuildGraph(select) => {
            let corpus = pipeline::load_corpus(store.as_ref())?;
            let providers = cfg.providers()?;
            for id in story_ids(&corpus, select)? {
                let g = pipeline::build_story_graph(store.as_ref(), &corpus, &id, providers.answers.as_ref(), &cfg.engine)?;
                writeln!(
                    stdout,
                    "{id}: {} edges over {} questions; {} covering questions keep {} edges",
                    g.full.edge_count(),
                    g.full.question_count(),
                    g.pruned.question_count(),
                    g.pruned.edge_count()
                )?;
            }
        }
        Command::GraphStats { story } => {
            let g = pipeline::load_graph(store.as_ref(), story)?
                .with_context(|| format!("no graph for `{story}`; run build-graph first"))?;
            writeln!(stdout, "story: {story}")?;
            writeln!(stdout, "qa_threshold: {}", g.full.qa_threshold())?;
            writeln!(stdout, "paragraphs: {}", g.full.paragraph_ids().len())?;
            writeln!(stdout, "coverable paragraphs: {}", g.full.coverable_paragraphs().len())?;
            writeln!(stdout, "questions: {} -> {} covering", g.full.question_count(), g.pruned.question_count())?;
            writeln!(stdout, "edges: {} -> {}", g.full.edge_count(), g.pruned.edge_count())?;
            writeln!(stdout, "reader failures: {}", g.full.provider_failures())?;
            let (qdeg, pdeg) = g.pruned.degree_histograms();
            writeln!(stdout, "paragraph degrees: {}", histogram(&pdeg))?;
            writeln!(stdout, "question degrees: {}", histogram(&qdeg))?;
        }
        Command::Rooms => {
            for room in engine(store, &cfg)?.list_rooms() {
                let when = room.last_active.map_or_else(|| "-".to_string(), |t| t.to_rfc3339());
                writeln!(stdout, "{}\t{}\t{}", room.story_id, when, room.title)?;
            }
        }
        Command::Serve { addr } => {
            let engine = Arc::new(engine(store, &cfg)?);
            let app = api::router(api::AppState::new(engine));
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                tracing::info!(addr = %listener.local_addr()?, "listening");
                axum::serve(listener, app).await?;
                anyhow::Ok(())
            })?;
        }
        Command::Chat { story, session } => {
            let engine = engine(store, &cfg)?;
            let sid = session.clone().unwrap_or_else(|| uuid::Uuid::new_v4().to_string());
            eprintln!("session: {sid}");
            let stdin = io::stdin();
            if stdin.is_terminal() {
                eprintln!("{}", repl::HELP);
            }
            repl::run(&engine, &sid, story, stdin.lock(), &mut stdout)?;
        }
        Command::Replay { session } => {
            let report = engine(store, &cfg)?.replay(session)?;
            writeln!(stdout, "{}", serde_json::to_string_pretty(&report)?)?;
            if !report.matches {
                bail!("replayed state differs from the stored state");
            }
        }
    }
    Ok(())
}

fn histogram(h: &std::collections::BTreeMap<usize, usize>) -> String {
    h.iter().map(|(d, n)| format!("{d}:{n}")).collect::<Vec<_>>().join(" ")
}

