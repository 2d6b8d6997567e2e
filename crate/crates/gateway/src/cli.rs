//! Command-line entry points.

use std::fs;
use std::io::{BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use spi_ttt::orchestrator::{run_batch_with_games, SimulatedGame};
use spi_ttt::verify::verify_table;
use spi_ttt::{
    build_table, BatchConfig, BatchStats, Engine, GameSession, GeometryConfig, PhotometryConfig, Player, PolicyTable,
    SessionStatus, Square, TableFormat, TurnRecord,
};

use crate::api;
use crate::store::{SessionStore, DEFAULT_IDLE_TTL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "spi-ttt", version, about = "Single-pixel-imaging Tic-Tac-Toe player")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Bin,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimFirst {
    Spi,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlayFirst {
    Spi,
    Human,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Precompute the policy table with minimax and write it to disk.
    BuildTable {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "bin")]
        format: Format,
    },
    /// Check a table file: totality, never-lose, minimax equivalence,
    /// winning flags, entry count and serialization round-trips.
    VerifyTable {
        #[arg(long)]
        table: PathBuf,
    },
    /// Play a batch of games against a uniformly random opponent.
    Simulate {
        #[arg(long)]
        games: u32,
        #[arg(long, value_enum)]
        first: SimFirst,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0.02)]
        sigma: f64,
        /// Use this table file instead of building one.
        #[arg(long)]
        table: Option<PathBuf>,
        /// Print the stats as a JSON object.
        #[arg(long)]
        json: bool,
        /// Write every turn of every game as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Play one game in the terminal.
    Play {
        #[arg(long, value_enum)]
        first: PlayFirst,
        #[arg(long, default_value_t = 0.02)]
        sigma: f64,
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Serve the HTTP/JSON game API.
    Serve {
        #[arg(long)]
        port: u16,
        #[arg(long)]
        table: PathBuf,
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 0.02)]
        sigma: f64,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Idle time in seconds after which a game is dropped.
        #[arg(long, default_value_t = DEFAULT_IDLE_TTL.as_secs())]
        idle_ttl: u64,
    },
}

fn format_of(format: Format) -> TableFormat {
    match format {
        Format::Bin => TableFormat::Binary,
        Format::Json => TableFormat::Json,
    }
}

pub fn load_table(path: &Path) -> anyhow::Result<PolicyTable> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    PolicyTable::deserialize(&bytes).with_context(|| format!("decoding {}", path.display()))
}

fn table_or_build(path: Option<&Path>) -> anyhow::Result<Arc<PolicyTable>> {
    Ok(Arc::new(match path {
        Some(p) => load_table(p)?,
        None => build_table(),
    }))
}

fn engine(table: Arc<PolicyTable>, sigma: f64) -> anyhow::Result<Arc<Engine>> {
    let photo = PhotometryConfig::default().with_sigma(sigma);
    Ok(Arc::new(Engine::new(table, GeometryConfig::default(), photo)?))
}

/// Runs a parsed command, returning the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<i32> {
    match cli.command {
        Command::BuildTable { out: path, format } => {
            let table = build_table();
            fs::write(&path, table.serialize(format_of(format)))
                .with_context(|| format!("writing {}", path.display()))?;
            writeln!(out, "wrote {} entries to {}", table.len(), path.display())?;
            Ok(EXIT_OK)
        }
        Command::VerifyTable { table } => {
            let table = load_table(&table)?;
            let report = verify_table(&table);
            write!(out, "{report}")?;
            Ok(if report.passed() { EXIT_OK } else { EXIT_FAILURE })
        }
        Command::Simulate {
            games,
            first,
            seed,
            sigma,
            table,
            json,
            trace,
        } => {
            if games == 0 {
                bail!("--games must be at least 1");
            }
            let config = BatchConfig {
                games,
                first_mover: match first {
                    SimFirst::Spi => Player::Spi,
                    SimFirst::Random => Player::Human,
                },
                seed,
                noise_sigma: sigma,
            };
            let table = table_or_build(table.as_deref())?;
            let (stats, played) = run_batch_with_games(table, &config)?;
            if let Some(path) = trace {
                fs::write(&path, batch_trace_jsonl(&played)).with_context(|| format!("writing {}", path.display()))?;
            }
            if json {
                writeln!(out, "{}", serde_json::to_string(&stats)?)?;
            } else {
                write_stats(out, &stats, sigma)?;
            }
            Ok(EXIT_OK)
        }
        Command::Play {
            first,
            sigma,
            table,
            seed,
        } => {
            let table = table_or_build(table.as_deref())?;
            let first = match first {
                PlayFirst::Spi => Player::Spi,
                PlayFirst::Human => Player::Human,
            };
            let rng = match seed {
                Some(s) => ChaCha8Rng::seed_from_u64(s),
                None => ChaCha8Rng::seed_from_u64(uuid::Uuid::new_v4().as_u64_pair().0),
            };
            let session = GameSession::new("terminal", first, engine(table, sigma)?, rng);
            let stdin = std::io::stdin();
            play(session, &mut stdin.lock(), out)?;
            Ok(EXIT_OK)
        }
        Command::Serve {
            port,
            table,
            static_dir,
            sigma,
            host,
            idle_ttl,
        } => {
            let table = Arc::new(load_table(&table)?);
            let store = Arc::new(SessionStore::new(
                engine(table, sigma)?,
                Duration::from_secs(idle_ttl),
                None,
            ));
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .with_context(|| format!("bad listen address {host}:{port}"))?;
            tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()?
                .block_on(async move {
                    api::spawn_evictor(Arc::clone(&store), Duration::from_secs(60));
                    let listener = tokio::net::TcpListener::bind(addr).await?;
                    tracing::info!(%addr, "serving");
                    axum::serve(listener, api::router(store, static_dir)).await?;
                    anyhow::Ok(())
                })?;
            Ok(EXIT_OK)
        }
    }
}

pub fn write_stats(out: &mut dyn Write, stats: &BatchStats, sigma: f64) -> std::io::Result<()> {
    let first = match stats.first_mover {
        Player::Spi => "spi",
        Player::Human => "random",
    };
    writeln!(
        out,
        "games {}  first {first}  seed {}  sigma {sigma}",
        stats.games, stats.seed
    )?;
    for (label, count) in [("win", stats.wins), ("draw", stats.draws), ("lose", stats.losses)] {
        writeln!(out, "{label:<5} {count:>6}  {:6.2}%", stats.percent(count))?;
    }
    if stats.faulted > 0 {
        writeln!(out, "faulted {}", stats.faulted)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct GameTurn<'a> {
    game: u32,
    #[serde(flatten)]
    turn: &'a TurnRecord,
}

/// All turns of all games, one JSON object per line, tagged with the game
/// index.
pub fn batch_trace_jsonl(games: &[SimulatedGame]) -> String {
    let mut out = String::new();
    for game in games {
        for turn in &game.history {
            let line = serde_json::to_string(&GameTurn { game: game.index, turn }).expect("turn serializes");
            out.push_str(&line);
            out.push('\n');
        }
    }
    out
}

fn describe_turn(out: &mut dyn Write, record: &TurnRecord) -> std::io::Result<()> {
    if let Some(m) = record.measurements {
        let readings: Vec<String> = m.0.iter().map(|v| format!("{v:.3}")).collect();
        writeln!(out, "detector readings: {}", readings.join(" "))?;
    }
    if let Some(code) = record.output_code {
        match code.pattern_index() {
            Some(p) => writeln!(out, "display pattern {p}")?,
            None => writeln!(out, "no display pattern")?,
        }
    }
    Ok(())
}

/// Interactive terminal game: the human types square numbers 1..9.
pub fn play(mut session: GameSession, input: &mut dyn BufRead, out: &mut dyn Write) -> anyhow::Result<SessionStatus> {
    writeln!(out, "You are X (black cards), the SPI player is O (white cards).")?;
    let mut line = String::new();
    loop {
        if session.awaiting_final_scan() || session.to_move() == Some(Player::Spi) {
            let record = session.spi_turn()?;
            if record.actor == Player::Spi {
                writeln!(out, "SPI plays {}", record.square)?;
            }
            describe_turn(out, &record)?;
            continue;
        }
        writeln!(out, "\n{}\n", session.board())?;
        if session.status().is_over() {
            break;
        }
        write!(out, "your move (1-9): ")?;
        out.flush()?;
        line.clear();
        if input.read_line(&mut line)? == 0 {
            writeln!(out)?;
            bail!("input closed before the game ended");
        }
        let square = match line.trim().parse::<u8>().ok().and_then(|n| Square::new(n).ok()) {
            Some(sq) => sq,
            None => {
                writeln!(out, "enter a number from 1 to 9")?;
                continue;
            }
        };
        if let Err(e) = session.human_turn(square) {
            writeln!(out, "{e}")?;
        }
    }
    let verdict = match session.status() {
        SessionStatus::HumanWin => "You win.",
        SessionStatus::SpiWin => "You lose.",
        SessionStatus::Draw => "Draw.",
        SessionStatus::Faulted => "Game aborted: the board could not be read.",
        SessionStatus::InProgress => unreachable!("loop exits on game over"),
    };
    writeln!(out, "{verdict}")?;
    Ok(session.status())
}
