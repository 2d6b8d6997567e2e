//! The live game loop (scan, look up, display, apply) and the batch
//! evaluator that pits the SPI player against a uniformly random opponent.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::board::{Board, GameError, GameStatus, Player, Square};
use crate::optics::{GeometryConfig, MeasurementVector, OpticalFrontEnd, OpticsError, PhotometryConfig};
use crate::table::{OutputCode, PolicyTable, TableError};

pub const DEFAULT_RETRY_LIMIT: u32 = 3;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Optics(#[from] OpticsError),
    #[error("detected board {detected:?} does not match {expected:?} after {attempts} attempts")]
    DetectionMismatch {
        expected: Board,
        detected: Board,
        attempts: u32,
    },
    #[error("table returned {code:?} for live board {board:?}")]
    UnexpectedCode { code: OutputCode, board: Board },
    #[error("game was aborted after repeated detection failures")]
    Faulted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    InProgress,
    HumanWin,
    SpiWin,
    Draw,
    Faulted,
}

impl From<GameStatus> for SessionStatus {
    fn from(status: GameStatus) -> Self {
        match status {
            GameStatus::InProgress => SessionStatus::InProgress,
            GameStatus::HumanWin => SessionStatus::HumanWin,
            GameStatus::SpiWin => SessionStatus::SpiWin,
            GameStatus::Draw => SessionStatus::Draw,
        }
    }
}

impl SessionStatus {
    pub fn is_over(self) -> bool {
        self != SessionStatus::InProgress
    }
}

#[derive(Serialize, Deserialize)]
struct CodeRepr {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    square: Option<Square>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    winning: Option<bool>,
    pattern_index: Option<u8>,
}

impl Serialize for OutputCode {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let (kind, square, winning) = match *self {
            OutputCode::Move { square, winning } => ("move", Some(square), Some(winning)),
            OutputCode::HumanWon => ("human_won", None, None),
            OutputCode::NoAction => ("no_action", None, None),
        };
        CodeRepr {
            kind: kind.to_string(),
            square,
            winning,
            pattern_index: self.pattern_index(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for OutputCode {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let repr = CodeRepr::deserialize(deserializer)?;
        match (repr.kind.as_str(), repr.square, repr.winning) {
            ("move", Some(square), Some(winning)) => Ok(OutputCode::Move { square, winning }),
            ("human_won", None, None) => Ok(OutputCode::HumanWon),
            ("no_action", None, None) => Ok(OutputCode::NoAction),
            _ => Err(D::Error::custom(format!("malformed output code {:?}", repr.kind))),
        }
    }
}

/// One placed stone. The SPI player's records carry the scan that chose
/// the move; a human move that ends the game carries the final scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub move_number: u8,
    pub actor: Player,
    pub square: Square,
    pub measurements: Option<MeasurementVector>,
    pub output_code: Option<OutputCode>,
}

/// Everything sessions share: the policy table and the optical setup.
#[derive(Debug)]
pub struct Engine {
    table: Arc<PolicyTable>,
    front_end: OpticalFrontEnd,
    retry_limit: u32,
}

impl Engine {
    pub fn new(table: Arc<PolicyTable>, geom: GeometryConfig, photo: PhotometryConfig) -> Result<Engine, OpticsError> {
        Ok(Engine {
            table,
            front_end: OpticalFrontEnd::new(geom, photo)?,
            retry_limit: DEFAULT_RETRY_LIMIT,
        })
    }

    pub fn with_front_end(table: Arc<PolicyTable>, front_end: OpticalFrontEnd) -> Engine {
        Engine {
            table,
            front_end,
            retry_limit: DEFAULT_RETRY_LIMIT,
        }
    }

    pub fn with_retry_limit(mut self, retry_limit: u32) -> Engine {
        self.retry_limit = retry_limit;
        self
    }

    pub fn table(&self) -> &PolicyTable {
        &self.table
    }

    pub fn front_end(&self) -> &OpticalFrontEnd {
        &self.front_end
    }

    pub fn retry_limit(&self) -> u32 {
        self.retry_limit
    }
}

#[derive(Debug, Clone)]
pub struct GameSession {
    id: String,
    first_mover: Player,
    board: Board,
    status: SessionStatus,
    history: Vec<TurnRecord>,
    engine: Arc<Engine>,
    rng: ChaCha8Rng,
}

impl GameSession {
    pub fn new(id: impl Into<String>, first_mover: Player, engine: Arc<Engine>, rng: ChaCha8Rng) -> GameSession {
        GameSession {
            id: id.into(),
            first_mover,
            board: Board::EMPTY,
            status: SessionStatus::InProgress,
            history: Vec::new(),
            engine,
            rng,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn first_mover(&self) -> Player {
        self.first_mover
    }

    pub fn board(&self) -> &Board {
        &self.board
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    pub fn history(&self) -> &[TurnRecord] {
        &self.history
    }

    pub fn engine(&self) -> &Arc<Engine> {
        &self.engine
    }

    /// Player on move, `None` once the game is over.
    pub fn to_move(&self) -> Option<Player> {
        if self.status.is_over() {
            None
        } else {
            self.board.to_move(self.first_mover)
        }
    }

    /// A human move ended the game and its final scan has not run yet.
    pub fn awaiting_final_scan(&self) -> bool {
        matches!(self.status, SessionStatus::HumanWin | SessionStatus::Draw)
            && self
                .history
                .last()
                .is_some_and(|r| r.actor == Player::Human && r.output_code.is_none())
    }

    /// The most recent scan, if any: its readings and output code.
    pub fn last_scan(&self) -> Option<(MeasurementVector, OutputCode)> {
        self.history
            .iter()
            .rev()
            .find_map(|r| Some((r.measurements?, r.output_code?)))
    }

    /// Scans the board, checks the detection, looks up the response and
    /// plays it. After a game-ending human move this performs the final
    /// scan instead and attaches it to that move's record.
    pub fn spi_turn(&mut self) -> Result<TurnRecord, SessionError> {
        if self.status == SessionStatus::Faulted {
            return Err(SessionError::Faulted);
        }
        let final_scan = self.awaiting_final_scan();
        if !final_scan {
            if self.status.is_over() {
                return Err(GameError::TerminalState.into());
            }
            if self.to_move() != Some(Player::Spi) {
                return Err(GameError::NotSpisTurn.into());
            }
        }

        let measurements = self.detect()?;
        let code = self.engine.table.lookup(&self.board)?;

        if final_scan {
            let last = self.history.last_mut().expect("final scan follows a move");
            last.measurements = Some(measurements);
            last.output_code = Some(code);
            return Ok(last.clone());
        }

        let OutputCode::Move { square, .. } = code else {
            return Err(SessionError::UnexpectedCode {
                code,
                board: self.board,
            });
        };
        let record = self.place(Player::Spi, square, Some(measurements), Some(code))?;
        Ok(record)
    }

    pub fn human_turn(&mut self, square: Square) -> Result<TurnRecord, SessionError> {
        if self.status == SessionStatus::Faulted {
            return Err(SessionError::Faulted);
        }
        if self.status.is_over() {
            return Err(GameError::TerminalState.into());
        }
        if self.to_move() != Some(Player::Human) {
            return Err(GameError::NotHumansTurn.into());
        }
        self.place(Player::Human, square, None, None)
    }

    fn place(
        &mut self,
        actor: Player,
        square: Square,
        measurements: Option<MeasurementVector>,
        output_code: Option<OutputCode>,
    ) -> Result<TurnRecord, SessionError> {
        self.board = self.board.apply_move(square, actor)?;
        self.status = self.board.status().into();
        let record = TurnRecord {
            move_number: self.history.len() as u8 + 1,
            actor,
            square,
            measurements,
            output_code,
        };
        self.history.push(record.clone());
        debug_assert!(self.history_consistent());
        Ok(record)
    }

    /// Scans until the classified board matches the session board, at most
    /// `1 + retry_limit` times; on failure the session is faulted.
    fn detect(&mut self) -> Result<MeasurementVector, SessionError> {
        let front = self.engine.front_end();
        let attempts = self.engine.retry_limit + 1;
        let mut detected = self.board;
        for _ in 0..attempts {
            let measurements = front.scan(&self.board, &mut self.rng)?;
            detected = front.classify(&measurements);
            if detected == self.board {
                return Ok(measurements);
            }
        }
        self.status = SessionStatus::Faulted;
        Err(SessionError::DetectionMismatch {
            expected: self.board,
            detected,
            attempts,
        })
    }

    /// Move numbers run 1..=len, actors alternate starting with the first
    /// mover, and replaying the history reproduces the board.
    pub fn history_consistent(&self) -> bool {
        let mut board = Board::EMPTY;
        let mut actor = self.first_mover;
        for (i, record) in self.history.iter().enumerate() {
            if usize::from(record.move_number) != i + 1 || record.actor != actor {
                return false;
            }
            match board.apply_move(record.square, actor) {
                Ok(next) => board = next,
                Err(_) => return false,
            }
            actor = actor.opponent();
        }
        board == self.board
    }

    /// One JSON object per turn, newline-terminated.
    pub fn trace_jsonl(&self) -> String {
        trace_jsonl(&self.history)
    }
}

pub fn trace_jsonl(history: &[TurnRecord]) -> String {
    history
        .iter()
        .map(|r| serde_json::to_string(r).expect("turn record serializes") + "\n")
        .collect()
}

/// Uniform choice among the empty squares.
pub fn random_agent<R: Rng + ?Sized>(board: &Board, rng: &mut R) -> Result<Square, GameError> {
    let moves = board.legal_moves()?;
    Ok(moves[rng.random_range(0..moves.len())])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub games: u32,
    pub first_mover: Player,
    pub seed: u64,
    pub noise_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchStats {
    pub games: u32,
    pub wins: u32,
    pub draws: u32,
    pub losses: u32,
    /// Games aborted on repeated detection failures; not in the other counts.
    pub faulted: u32,
    pub first_mover: Player,
    pub seed: u64,
}

impl BatchStats {
    fn empty(config: &BatchConfig) -> BatchStats {
        BatchStats {
            games: 0,
            wins: 0,
            draws: 0,
            losses: 0,
            faulted: 0,
            first_mover: config.first_mover,
            seed: config.seed,
        }
    }

    fn record(&mut self, status: SessionStatus) {
        self.games += 1;
        match status {
            SessionStatus::SpiWin => self.wins += 1,
            SessionStatus::Draw => self.draws += 1,
            SessionStatus::HumanWin => self.losses += 1,
            SessionStatus::Faulted | SessionStatus::InProgress => self.faulted += 1,
        }
    }

    fn merge(mut self, other: BatchStats) -> BatchStats {
        self.games += other.games;
        self.wins += other.wins;
        self.draws += other.draws;
        self.losses += other.losses;
        self.faulted += other.faulted;
        self
    }

    pub fn percent(&self, count: u32) -> f64 {
        if self.games == 0 {
            0.0
        } else {
            100.0 * f64::from(count) / f64::from(self.games)
        }
    }
}

/// Outcome and full history of one simulated game.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedGame {
    pub index: u32,
    pub status: SessionStatus,
    pub history: Vec<TurnRecord>,
}

/// Independent random stream for game `index` of a batch.
pub fn game_rng(seed: u64, index: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(index));
    rng
}

/// Plays one full game through the optical pipeline against the random
/// agent. The random opponent and the detector noise share the game's rng.
pub fn play_random_game(engine: &Arc<Engine>, first_mover: Player, seed: u64, index: u32) -> SimulatedGame {
    let mut session = GameSession::new(
        format!("batch-{seed}-{index}"),
        first_mover,
        Arc::clone(engine),
        game_rng(seed, index),
    );
    loop {
        let step = if session.awaiting_final_scan() {
            session.spi_turn().map(|_| ())
        } else {
            match session.to_move() {
                None => break,
                Some(Player::Spi) => session.spi_turn().map(|_| ()),
                Some(Player::Human) => {
                    let square = random_agent(&session.board, &mut session.rng).expect("live board");
                    session.human_turn(square).map(|_| ())
                }
            }
        };
        if step.is_err() {
            // detection faults mark the session; anything else is a bug in
            // the table or the pipeline
            if session.status() != SessionStatus::Faulted {
                session.status = SessionStatus::Faulted;
            }
            break;
        }
    }
    SimulatedGame {
        index,
        status: session.status(),
        history: session.history,
    }
}

fn batch_engine(table: Arc<PolicyTable>, config: &BatchConfig) -> Result<Arc<Engine>, OpticsError> {
    let photo = PhotometryConfig::default().with_sigma(config.noise_sigma);
    let photo = PhotometryConfig {
        seed: config.seed,
        ..photo
    };
    Ok(Arc::new(Engine::new(table, GeometryConfig::default(), photo)?))
}

/// Plays `config.games` games in parallel and tallies the outcomes from the
/// SPI player's point of view. Results depend only on the config and table.
pub fn run_batch(table: Arc<PolicyTable>, config: &BatchConfig) -> Result<BatchStats, OpticsError> {
    let engine = batch_engine(table, config)?;
    let stats = (0..config.games)
        .into_par_iter()
        .map(|i| {
            let game = play_random_game(&engine, config.first_mover, config.seed, i);
            let mut one = BatchStats::empty(config);
            one.record(game.status);
            one
        })
        .reduce(|| BatchStats::empty(config), BatchStats::merge);
    Ok(stats)
}

/// Like [`run_batch`] but also returns every game's history, in game order.
pub fn run_batch_with_games(
    table: Arc<PolicyTable>,
    config: &BatchConfig,
) -> Result<(BatchStats, Vec<SimulatedGame>), OpticsError> {
    let engine = batch_engine(table, config)?;
    let games: Vec<SimulatedGame> = (0..config.games)
        .into_par_iter()
        .map(|i| play_random_game(&engine, config.first_mover, config.seed, i))
        .collect();
    let mut stats = BatchStats::empty(config);
    for game in &games {
        stats.record(game.status);
    }
    Ok((stats, games))
}
