//! Exhaustive minimax with depth-shaped leaf scores.
//!
//! A win for the SPI player found at depth `d` scores `WIN_SCORE - d`, a
//! human win scores `-(WIN_SCORE - d)` and a draw scores 0, so among equally
//! good outcomes the solver prefers faster wins and slower losses. Values
//! are memoized per `(StateKey, Player)` relative to the node itself and
//! shifted to the caller's depth on the way out.

use crate::board::{Board, GameError, GameStatus, Player, Square, SquareState, StateKey};

/// Magnitude of a win found at depth 0.
pub const WIN_SCORE: i32 = 100;

/// Order in which equal-valued moves are preferred: center, then corners,
/// then edges, each group ascending.
pub const PREFERENCE: [u8; 9] = [5, 1, 3, 7, 9, 2, 4, 6, 8];

/// Identifier recorded in table metadata for [`PREFERENCE`].
pub const TIE_BREAK_RULE: &str = "center-corners-edges";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Score(pub i32);

impl Score {
    pub const DRAW: Score = Score(0);

    /// Leaf score for a terminal board reached at `depth`.
    pub fn leaf(status: GameStatus, depth: u32) -> Score {
        let d = depth as i32;
        match status {
            GameStatus::SpiWin => Score(WIN_SCORE - d),
            GameStatus::HumanWin => Score(-WIN_SCORE + d),
            GameStatus::Draw | GameStatus::InProgress => Score(0),
        }
    }

    /// Outcome under perfect play implied by the sign.
    pub fn outcome(self) -> GameStatus {
        match self.0.signum() {
            1 => GameStatus::SpiWin,
            -1 => GameStatus::HumanWin,
            _ => GameStatus::Draw,
        }
    }

    /// Re-expresses a score computed at a node as seen `plies` moves above
    /// it: wins and losses move toward zero by one per ply.
    fn deepen(self, plies: u32) -> Score {
        let p = plies as i32;
        match self.0.signum() {
            1 => Score(self.0 - p),
            -1 => Score(self.0 + p),
            _ => self,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MoveDecision {
    pub square: Square,
    /// Result of the game if both sides play perfectly from here.
    pub predicted: GameStatus,
    /// The move itself completes an SPI line.
    pub immediate_win: bool,
}

const UNSET: i8 = i8::MIN;

/// Memoized minimax solver. The memo is owned, so a solver is confined to
/// one thread; build one per worker if needed.
pub struct Solver {
    memo: Vec<i8>,
}

impl Default for Solver {
    fn default() -> Self {
        Solver::new()
    }
}

impl Solver {
    pub fn new() -> Solver {
        Solver {
            memo: vec![UNSET; StateKey::COUNT as usize * 2],
        }
    }

    /// Minimax value of `board` with `to_move` on move, where `board` sits
    /// `depth` plies below the root of the caller's search.
    pub fn value(&mut self, board: &Board, to_move: Player, depth: u32) -> Score {
        self.value_here(board, to_move).deepen(depth)
    }

    fn value_here(&mut self, board: &Board, to_move: Player) -> Score {
        let slot = usize::from(board.key().value()) * 2 + to_move as usize;
        if self.memo[slot] != UNSET {
            return Score(i32::from(self.memo[slot]));
        }
        let status = board.status();
        let score = if status.is_terminal() {
            Score::leaf(status, 0)
        } else {
            let children = board.empty_squares().map(|sq| {
                let child = board.apply_move(sq, to_move).expect("legal move");
                self.value_here(&child, to_move.opponent()).deepen(1)
            });
            let best = match to_move {
                Player::Spi => children.max(),
                Player::Human => children.min(),
            };
            best.expect("non-terminal board has a legal move")
        };
        self.memo[slot] = score.0 as i8;
        score
    }

    /// The SPI player's optimal move. It is the SPI player's turn unless the
    /// counts show it has already moved more often than the human.
    pub fn best_move(&mut self, board: &Board) -> Result<MoveDecision, GameError> {
        if board.status().is_terminal() {
            return Err(GameError::TerminalState);
        }
        if !board.spi_may_move() {
            return Err(GameError::NotSpisTurn);
        }
        let mut best: Option<(Score, Square, Board)> = None;
        for number in PREFERENCE {
            let square = Square::new(number).expect("preference lists squares 1..=9");
            if board.get(square) != SquareState::Empty {
                continue;
            }
            let child = board.apply_move(square, Player::Spi)?;
            let score = self.value(&child, Player::Human, 1);
            // strict comparison keeps the earlier square on ties
            if best.is_none_or(|(top, _, _)| score > top) {
                best = Some((score, square, child));
            }
        }
        let (score, square, child) = best.ok_or(GameError::TerminalState)?;
        Ok(MoveDecision {
            square,
            predicted: score.outcome(),
            immediate_win: child.winner() == Some(Player::Spi),
        })
    }

    /// All squares whose child value equals the best value.
    pub fn optimal_squares(&mut self, board: &Board) -> Result<Vec<Square>, GameError> {
        let legal = board.legal_moves()?;
        let scored: Vec<(Square, Score)> = legal
            .into_iter()
            .map(|sq| {
                let child = board.apply_move(sq, Player::Spi).expect("legal move");
                (sq, self.value(&child, Player::Human, 1))
            })
            .collect();
        let top = scored.iter().map(|&(_, s)| s).max().expect("legal moves exist");
        Ok(scored
            .into_iter()
            .filter(|&(_, s)| s == top)
            .map(|(sq, _)| sq)
            .collect())
    }
}

/// One-shot convenience wrapper around a fresh [`Solver`].
pub fn minimax_value(board: &Board, to_move: Player, depth: u32) -> Score {
    Solver::new().value(board, to_move, depth)
}

/// One-shot convenience wrapper around a fresh [`Solver`].
pub fn best_move(board: &Board) -> Result<MoveDecision, GameError> {
    Solver::new().best_move(board)
}
