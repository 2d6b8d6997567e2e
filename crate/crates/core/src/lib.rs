//! Software model of an optoelectronic Tic-Tac-Toe player built on
//! single-pixel detection.
//!
//! The player reads the board with nine structured-illumination
//! measurements, answers with one retrieval from a table precomputed by
//! minimax, and shows its answer by lighting one of nineteen display
//! patterns.

pub mod board;
pub mod minimax;
pub mod optics;
pub mod orchestrator;
pub mod table;
pub mod verify;

pub use board::{Board, GameError, GameStatus, Player, Square, SquareState, StateKey};
pub use minimax::{MoveDecision, Score, Solver};
pub use optics::{GeometryConfig, MeasurementVector, OpticalFrontEnd, PhotometryConfig, Thresholds};
pub use orchestrator::{BatchConfig, BatchStats, Engine, GameSession, SessionError, SessionStatus, TurnRecord};
pub use table::{build_table, OutputCode, PolicyTable, TableError, TableFormat};
