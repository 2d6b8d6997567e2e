//! The precomputed policy table: state key to display code.
//!
//! Binary layout (little-endian):
//!
//! ```text
//! "TTTL"            4 bytes magic
//! 0x01              version
//! entry_count       u32
//! entry_count × {   key: u16, code: u8 }
//! ```
//!
//! Code bytes: 0..=8 plain move to squares 1..=9, 9 human already won,
//! 10..=18 winning move to squares 1..=9, 255 no action.

use std::collections::{BTreeMap, HashMap};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::board::{enumerate_reachable_any, Board, GameStatus, Player, Square, StateKey};
use crate::minimax::{Solver, TIE_BREAK_RULE};

pub const MAGIC: &[u8; 4] = b"TTTL";
pub const FORMAT_VERSION: u8 = 1;
const HEADER_LEN: usize = 9;
const RECORD_LEN: usize = 3;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("no table entry for state {key} ({board:?})")]
    UnknownState { key: StateKey, board: Board },
    #[error("corrupt table: {0}")]
    CorruptTable(String),
}

fn corrupt(msg: impl Into<String>) -> TableError {
    TableError::CorruptTable(msg.into())
}

/// What the display projector shows after a scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutputCode {
    Move { square: Square, winning: bool },
    HumanWon,
    NoAction,
}

impl OutputCode {
    /// Display pattern number in 1..=19, `None` for [`OutputCode::NoAction`].
    pub fn pattern_index(self) -> Option<u8> {
        match self {
            OutputCode::Move { square, winning: false } => Some(square.number()),
            OutputCode::HumanWon => Some(10),
            OutputCode::Move { square, winning: true } => Some(10 + square.number()),
            OutputCode::NoAction => None,
        }
    }

    pub fn from_pattern_index(index: u8) -> Option<OutputCode> {
        match index {
            1..=9 => Some(OutputCode::Move {
                square: Square::new(index).ok()?,
                winning: false,
            }),
            10 => Some(OutputCode::HumanWon),
            11..=19 => Some(OutputCode::Move {
                square: Square::new(index - 10).ok()?,
                winning: true,
            }),
            _ => None,
        }
    }

    pub fn to_byte(self) -> u8 {
        match self.pattern_index() {
            Some(index) => index - 1,
            None => 255,
        }
    }

    pub fn from_byte(byte: u8) -> Result<OutputCode, TableError> {
        match byte {
            255 => Ok(OutputCode::NoAction),
            0..=18 => Ok(OutputCode::from_pattern_index(byte + 1).expect("1..=19")),
            other => Err(corrupt(format!("invalid code byte {other}"))),
        }
    }

    pub fn square(self) -> Option<Square> {
        match self {
            OutputCode::Move { square, .. } => Some(square),
            _ => None,
        }
    }

    /// Whether this code is what a correct table stores for `board`:
    /// moves target an empty square with a winning flag that matches the
    /// result, and `HumanWon` appears exactly on human-won boards.
    pub fn consistent_with(self, board: &Board) -> bool {
        let human_won = board.winner() == Some(Player::Human);
        match self {
            OutputCode::HumanWon => human_won,
            OutputCode::NoAction => !human_won && board.status().is_terminal(),
            OutputCode::Move { square, winning } => match board.apply_move(square, Player::Spi) {
                Ok(next) => winning == (next.winner() == Some(Player::Spi)),
                Err(_) => false,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableMeta {
    pub version: u8,
    /// Seconds since the Unix epoch. Not stored in the binary format.
    pub built_at: Option<u64>,
    pub entry_count: u32,
    /// Not stored in the binary format.
    pub tie_break_rule: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Binary,
    Json,
}

#[derive(Debug, Clone)]
pub struct PolicyTable {
    entries: HashMap<StateKey, OutputCode>,
    meta: TableMeta,
}

/// Whether the SPI player can be asked to respond to this reachable board:
/// any terminal board, or a live board where the SPI player is not strictly
/// behind on turns.
pub fn in_table_domain(board: &Board) -> bool {
    board.status().is_terminal() || board.spi_may_move()
}

/// The code a correct table stores for a board in its domain.
pub fn code_for(solver: &mut Solver, board: &Board) -> OutputCode {
    match board.status() {
        GameStatus::HumanWin => OutputCode::HumanWon,
        GameStatus::SpiWin | GameStatus::Draw => OutputCode::NoAction,
        GameStatus::InProgress => {
            let decision = solver
                .best_move(board)
                .expect("live board where the SPI player may move");
            OutputCode::Move {
                square: decision.square,
                winning: decision.immediate_win,
            }
        }
    }
}

/// Builds the full table with minimax over every reachable board in the
/// table domain.
pub fn build_table() -> PolicyTable {
    let mut solver = Solver::new();
    let entries: HashMap<StateKey, OutputCode> = enumerate_reachable_any()
        .into_iter()
        .map(Board::from_key)
        .filter(in_table_domain)
        .map(|board| (board.key(), code_for(&mut solver, &board)))
        .collect();
    let built_at = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).ok();
    let meta = TableMeta {
        version: FORMAT_VERSION,
        built_at,
        entry_count: entries.len() as u32,
        tie_break_rule: Some(TIE_BREAK_RULE.to_string()),
    };
    PolicyTable { entries, meta }
}

#[derive(Serialize, Deserialize)]
struct JsonTable {
    version: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    built_at: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tie_break_rule: Option<String>,
    entries: Vec<JsonEntry>,
}

#[derive(Serialize, Deserialize)]
struct JsonEntry {
    key: u32,
    code: u8,
}

impl PolicyTable {
    /// Assembles a table from raw entries, rejecting duplicate keys.
    pub fn from_entries(
        entries: impl IntoIterator<Item = (StateKey, OutputCode)>,
        built_at: Option<u64>,
        tie_break_rule: Option<String>,
    ) -> Result<PolicyTable, TableError> {
        let mut map = HashMap::new();
        for (key, code) in entries {
            if map.insert(key, code).is_some() {
                return Err(corrupt(format!("duplicate key {key}")));
            }
        }
        let meta = TableMeta {
            version: FORMAT_VERSION,
            built_at,
            entry_count: map.len() as u32,
            tie_break_rule,
        };
        Ok(PolicyTable { entries: map, meta })
    }

    pub fn meta(&self) -> &TableMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: StateKey) -> Option<OutputCode> {
        self.entries.get(&key).copied()
    }

    pub fn lookup(&self, board: &Board) -> Result<OutputCode, TableError> {
        let key = board.key();
        self.get(key).ok_or(TableError::UnknownState { key, board: *board })
    }

    /// Entries in ascending key order.
    pub fn sorted_entries(&self) -> BTreeMap<StateKey, OutputCode> {
        self.entries.iter().map(|(&k, &c)| (k, c)).collect()
    }

    /// Same entries and persistent header fields as `other`.
    pub fn same_content(&self, other: &PolicyTable) -> bool {
        self.entries == other.entries
            && self.meta.version == other.meta.version
            && self.meta.entry_count == other.meta.entry_count
    }

    pub fn serialize(&self, format: TableFormat) -> Vec<u8> {
        match format {
            TableFormat::Binary => self.to_binary(),
            TableFormat::Json => self.to_json(),
        }
    }

    /// Decodes either format, sniffing the magic bytes.
    pub fn deserialize(bytes: &[u8]) -> Result<PolicyTable, TableError> {
        if bytes.starts_with(MAGIC) {
            PolicyTable::from_binary(bytes)
        } else {
            PolicyTable::from_json(bytes)
        }
    }

    fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + RECORD_LEN * self.entries.len());
        out.extend_from_slice(MAGIC);
        out.push(self.meta.version);
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for (key, code) in self.sorted_entries() {
            out.extend_from_slice(&key.value().to_le_bytes());
            out.push(code.to_byte());
        }
        out
    }

    pub fn from_binary(bytes: &[u8]) -> Result<PolicyTable, TableError> {
        if bytes.len() < HEADER_LEN {
            return Err(corrupt(format!("header truncated at {} bytes", bytes.len())));
        }
        if &bytes[..4] != MAGIC {
            return Err(corrupt("bad magic"));
        }
        if bytes[4] != FORMAT_VERSION {
            return Err(corrupt(format!("unsupported version {}", bytes[4])));
        }
        let count = u32::from_le_bytes(bytes[5..9].try_into().expect("4 bytes"));
        let body = &bytes[HEADER_LEN..];
        if body.len() != count as usize * RECORD_LEN {
            return Err(corrupt(format!(
                "entry count {count} does not match {} body bytes",
                body.len()
            )));
        }
        let records = body.chunks_exact(RECORD_LEN).map(|rec| {
            let raw = u16::from_le_bytes([rec[0], rec[1]]);
            let key = StateKey::new(u32::from(raw)).map_err(|e| corrupt(e.to_string()))?;
            Ok((key, OutputCode::from_byte(rec[2])?))
        });
        let entries = records.collect::<Result<Vec<_>, TableError>>()?;
        PolicyTable::from_entries(entries, None, None)
    }

    fn to_json(&self) -> Vec<u8> {
        let doc = JsonTable {
            version: self.meta.version,
            built_at: self.meta.built_at,
            tie_break_rule: self.meta.tie_break_rule.clone(),
            entries: self
                .sorted_entries()
                .into_iter()
                .map(|(key, code)| JsonEntry {
                    key: key.into(),
                    code: code.to_byte(),
                })
                .collect(),
        };
        serde_json::to_vec_pretty(&doc).expect("table serializes")
    }

    pub fn from_json(bytes: &[u8]) -> Result<PolicyTable, TableError> {
        let doc: JsonTable = serde_json::from_slice(bytes).map_err(|e| corrupt(e.to_string()))?;
        if doc.version != FORMAT_VERSION {
            return Err(corrupt(format!("unsupported version {}", doc.version)));
        }
        let entries = doc
            .entries
            .into_iter()
            .map(|e| {
                let key = StateKey::new(e.key).map_err(|err| corrupt(err.to_string()))?;
                Ok((key, OutputCode::from_byte(e.code)?))
            })
            .collect::<Result<Vec<_>, TableError>>()?;
        PolicyTable::from_entries(entries, doc.built_at, doc.tie_break_rule)
    }
}
