//! Tic-Tac-Toe domain logic: squares, boards, win detection, move
//! application, the base-3 state key and reachability enumeration.
//!
//! Squares are numbered 1..=9 row-major from the top-left corner, so
//! square 5 is the center. The human plays black cards and the SPI player
//! plays white cards; a board is a vector of nine codes where 1 = human,
//! 2 = empty and 3 = SPI.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("square {0} is out of range 1..=9")]
    InvalidSquare(u8),
    #[error("square {0} is already occupied")]
    OccupiedSquare(Square),
    #[error("game is already over")]
    TerminalState,
    #[error("state key {0} is out of range 0..=19682")]
    KeyOutOfRange(u32),
    #[error("square code {0} is not one of 1, 2, 3")]
    InvalidCode(u8),
    #[error("it is not the SPI player's turn")]
    NotSpisTurn,
    #[error("it is not the human player's turn")]
    NotHumansTurn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Human,
    Spi,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::Human => Player::Spi,
            Player::Spi => Player::Human,
        }
    }

    pub fn stone(self) -> SquareState {
        match self {
            Player::Human => SquareState::HumanOccupied,
            Player::Spi => SquareState::SpiOccupied,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::Human => f.write_str("human"),
            Player::Spi => f.write_str("spi"),
        }
    }
}

/// State of one square, with canonical numeric codes 1, 2 and 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SquareState {
    HumanOccupied = 1,
    Empty = 2,
    SpiOccupied = 3,
}

impl SquareState {
    pub const ALL: [SquareState; 3] = [SquareState::HumanOccupied, SquareState::Empty, SquareState::SpiOccupied];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<SquareState, GameError> {
        match code {
            1 => Ok(SquareState::HumanOccupied),
            2 => Ok(SquareState::Empty),
            3 => Ok(SquareState::SpiOccupied),
            other => Err(GameError::InvalidCode(other)),
        }
    }

    pub fn owner(self) -> Option<Player> {
        match self {
            SquareState::HumanOccupied => Some(Player::Human),
            SquareState::Empty => None,
            SquareState::SpiOccupied => Some(Player::Spi),
        }
    }
}

/// A square number in 1..=9.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Square(u8);

impl Square {
    pub const CENTER: Square = Square(5);

    pub const ALL: [Square; 9] = [
        Square(1),
        Square(2),
        Square(3),
        Square(4),
        Square(5),
        Square(6),
        Square(7),
        Square(8),
        Square(9),
    ];

    pub fn new(number: u8) -> Result<Square, GameError> {
        if (1..=9).contains(&number) {
            Ok(Square(number))
        } else {
            Err(GameError::InvalidSquare(number))
        }
    }

    /// Square from a zero-based index. Panics if `index >= 9`.
    pub fn from_index(index: usize) -> Square {
        assert!(index < 9, "square index {index} out of range");
        Square(index as u8 + 1)
    }

    /// The 1-based square number.
    pub fn number(self) -> u8 {
        self.0
    }

    /// The 0-based array index.
    pub fn index(self) -> usize {
        usize::from(self.0 - 1)
    }

    pub fn row(self) -> usize {
        self.index() / 3
    }

    pub fn col(self) -> usize {
        self.index() % 3
    }
}

impl TryFrom<u8> for Square {
    type Error = GameError;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Square::new(value)
    }
}

impl From<Square> for u8 {
    fn from(square: Square) -> u8 {
        square.0
    }
}

impl fmt::Display for Square {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameStatus {
    InProgress,
    HumanWin,
    SpiWin,
    Draw,
}

impl GameStatus {
    pub fn is_terminal(self) -> bool {
        self != GameStatus::InProgress
    }
}

/// Base-3 key of a board: sum over squares of `(code - 1) * 3^(n - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct StateKey(u16);

impl StateKey {
    /// Number of distinct keys, 3^9.
    pub const COUNT: u32 = 19683;

    pub fn new(value: u32) -> Result<StateKey, GameError> {
        if value < Self::COUNT {
            Ok(StateKey(value as u16))
        } else {
            Err(GameError::KeyOutOfRange(value))
        }
    }

    pub fn value(self) -> u16 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = StateKey> {
        (0..Self::COUNT as u16).map(StateKey)
    }
}

impl TryFrom<u32> for StateKey {
    type Error = GameError;

    fn try_from(value: u32) -> Result<Self, Self::Error> {
        StateKey::new(value)
    }
}

impl From<StateKey> for u32 {
    fn from(key: StateKey) -> u32 {
        u32::from(key.0)
    }
}

impl fmt::Display for StateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The 8 winning lines as zero-based square indices.
pub const LINES: [[usize; 3]; 8] = [
    // rows
    [0, 1, 2],
    [3, 4, 5],
    [6, 7, 8],
    // columns
    [0, 3, 6],
    [1, 4, 7],
    [2, 5, 8],
    // diagonals
    [0, 4, 8],
    [2, 4, 6],
];

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Board {
    squares: [SquareState; 9],
}

impl Default for Board {
    fn default() -> Self {
        Board::EMPTY
    }
}

impl Board {
    pub const EMPTY: Board = Board {
        squares: [SquareState::Empty; 9],
    };

    pub fn from_squares(squares: [SquareState; 9]) -> Board {
        Board { squares }
    }

    /// Builds a board from the nine 1/2/3 codes.
    pub fn from_codes(codes: [u8; 9]) -> Result<Board, GameError> {
        let mut squares = [SquareState::Empty; 9];
        for (slot, code) in squares.iter_mut().zip(codes) {
            *slot = SquareState::from_code(code)?;
        }
        Ok(Board { squares })
    }

    /// Convenience constructor from lists of occupied square numbers.
    pub fn with_stones(human: &[u8], spi: &[u8]) -> Result<Board, GameError> {
        let mut board = Board::EMPTY;
        for (numbers, state) in [(human, SquareState::HumanOccupied), (spi, SquareState::SpiOccupied)] {
            for &n in numbers {
                let square = Square::new(n)?;
                if board.get(square) != SquareState::Empty {
                    return Err(GameError::OccupiedSquare(square));
                }
                board.squares[square.index()] = state;
            }
        }
        Ok(board)
    }

    pub fn squares(&self) -> &[SquareState; 9] {
        &self.squares
    }

    pub fn codes(&self) -> [u8; 9] {
        self.squares.map(SquareState::code)
    }

    pub fn get(&self, square: Square) -> SquareState {
        self.squares[square.index()]
    }

    pub fn count(&self, state: SquareState) -> usize {
        self.squares.iter().filter(|&&s| s == state).count()
    }

    pub fn occupied(&self) -> usize {
        9 - self.count(SquareState::Empty)
    }

    pub fn is_full(&self) -> bool {
        self.occupied() == 9
    }

    /// The player holding a completed line, if any. When both players hold a
    /// line (only possible on unreachable boards) the first line in `LINES`
    /// order decides.
    pub fn winner(&self) -> Option<Player> {
        LINES.iter().find_map(|&[a, b, c]| {
            let s = self.squares[a];
            if s != SquareState::Empty && s == self.squares[b] && s == self.squares[c] {
                s.owner()
            } else {
                None
            }
        })
    }

    /// Whether `player` holds at least one completed line.
    pub fn has_line(&self, player: Player) -> bool {
        let stone = player.stone();
        LINES.iter().any(|line| line.iter().all(|&i| self.squares[i] == stone))
    }

    pub fn status(&self) -> GameStatus {
        match self.winner() {
            Some(Player::Human) => GameStatus::HumanWin,
            Some(Player::Spi) => GameStatus::SpiWin,
            None if self.is_full() => GameStatus::Draw,
            None => GameStatus::InProgress,
        }
    }

    /// Empty squares in ascending order.
    pub fn legal_moves(&self) -> Result<Vec<Square>, GameError> {
        if self.status().is_terminal() {
            return Err(GameError::TerminalState);
        }
        Ok(self.empty_squares().collect())
    }

    pub fn empty_squares(&self) -> impl Iterator<Item = Square> + '_ {
        Square::ALL.into_iter().filter(|&sq| self.get(sq) == SquareState::Empty)
    }

    /// Returns a new board with `square` taken by `player`.
    pub fn apply_move(&self, square: Square, player: Player) -> Result<Board, GameError> {
        if self.status().is_terminal() {
            return Err(GameError::TerminalState);
        }
        if self.get(square) != SquareState::Empty {
            return Err(GameError::OccupiedSquare(square));
        }
        let mut next = *self;
        next.squares[square.index()] = player.stone();
        Ok(next)
    }

    pub fn key(&self) -> StateKey {
        let value = self
            .squares
            .iter()
            .rev()
            .fold(0u16, |acc, s| acc * 3 + u16::from(s.code() - 1));
        StateKey(value)
    }

    pub fn from_key(key: StateKey) -> Board {
        let mut rest = key.0;
        let mut squares = [SquareState::Empty; 9];
        for slot in squares.iter_mut() {
            *slot = SquareState::ALL[usize::from(rest % 3)];
            rest /= 3;
        }
        Board { squares }
    }

    /// Whose turn it is on a non-terminal board given who opened the game,
    /// or `None` if the stone counts cannot arise from that opening.
    pub fn to_move(&self, first_mover: Player) -> Option<Player> {
        let mine = self.count(first_mover.stone());
        let theirs = self.count(first_mover.opponent().stone());
        if mine == theirs {
            Some(first_mover)
        } else if mine == theirs + 1 {
            Some(first_mover.opponent())
        } else {
            None
        }
    }

    /// True unless the counts show it is strictly the human's turn, i.e.
    /// the SPI player has one more stone than the human.
    pub fn spi_may_move(&self) -> bool {
        self.count(SquareState::SpiOccupied) <= self.count(SquareState::HumanOccupied)
    }

    /// Applies a dihedral symmetry of the grid.
    pub fn transform(&self, sym: Symmetry) -> Board {
        let mut squares = [SquareState::Empty; 9];
        for sq in Square::ALL {
            squares[sym.apply(sq).index()] = self.get(sq);
        }
        Board { squares }
    }
}

impl fmt::Debug for Board {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let codes: String = self.codes().iter().map(|c| char::from(b'0' + c)).collect();
        write!(f, "Board({codes})")
    }
}

impl fmt::Display for Board {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in 0..3 {
            if row > 0 {
                f.write_str("\n---+---+---\n")?;
            }
            for col in 0..3 {
                let sq = Square::from_index(row * 3 + col);
                let glyph = match self.get(sq) {
                    SquareState::HumanOccupied => 'X'.to_string(),
                    SquareState::SpiOccupied => 'O'.to_string(),
                    SquareState::Empty => sq.number().to_string(),
                };
                if col > 0 {
                    f.write_str("|")?;
                }
                write!(f, " {glyph} ")?;
            }
        }
        Ok(())
    }
}

/// One of the 8 symmetries of the square grid: an optional transpose
/// followed by a number of quarter turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Symmetry {
    pub transpose: bool,
    pub quarter_turns: u8,
}

impl Symmetry {
    pub fn all() -> impl Iterator<Item = Symmetry> {
        [false, true].into_iter().flat_map(|transpose| {
            (0..4).map(move |quarter_turns| Symmetry {
                transpose,
                quarter_turns,
            })
        })
    }

    pub fn apply(self, square: Square) -> Square {
        let (mut r, mut c) = (square.row(), square.col());
        if self.transpose {
            std::mem::swap(&mut r, &mut c);
        }
        for _ in 0..self.quarter_turns % 4 {
            // clockwise
            (r, c) = (c, 2 - r);
        }
        Square::from_index(r * 3 + c)
    }
}

/// Breadth-first closure from the empty board under alternating legal
/// moves, with `first_mover` opening. Terminal boards are included but not
/// expanded.
pub fn enumerate_reachable(first_mover: Player) -> HashSet<StateKey> {
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(Board::EMPTY.key());
    queue.push_back(Board::EMPTY);
    while let Some(board) = queue.pop_front() {
        if board.status().is_terminal() {
            continue;
        }
        let Some(player) = board.to_move(first_mover) else {
            continue;
        };
        for square in board.empty_squares() {
            let next = board.apply_move(square, player).expect("empty square on live board");
            if seen.insert(next.key()) {
                queue.push_back(next);
            }
        }
    }
    seen
}

/// Union of the reachable sets for both first movers.
pub fn enumerate_reachable_any() -> HashSet<StateKey> {
    let mut all = enumerate_reachable(Player::Spi);
    all.extend(enumerate_reachable(Player::Human));
    all
}
