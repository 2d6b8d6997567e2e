//! Integrity checks for a policy table.
//!
//! The entry-count check uses its own depth-first enumeration over raw
//! square codes rather than [`crate::board::enumerate_reachable`], so a bug
//! in the table builder's enumeration cannot hide itself.

use std::collections::HashSet;
use std::fmt;

use crate::board::{Board, GameStatus, Player, StateKey};
use crate::minimax::Solver;
use crate::table::{OutputCode, PolicyTable, TableFormat};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{mark} {:<18} {}", c.name, c.detail)?;
        }
        Ok(())
    }
}

/// Result of walking every game the SPI player can face while following
/// the table, with the opponent trying every reply.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Traversal {
    /// Boards presented to the table during play.
    pub lookups: usize,
    /// Presented boards absent from the table, or present with a code that
    /// cannot be played there.
    pub missing: Vec<StateKey>,
    pub spi_wins: usize,
    pub human_wins: usize,
    pub draws: usize,
}

/// Adversarial traversal of the full game tree for one first mover.
pub fn traverse(table: &PolicyTable, first_mover: Player) -> Traversal {
    let mut out = Traversal::default();
    walk(table, Board::EMPTY, first_mover, &mut out);
    out
}

fn walk(table: &PolicyTable, board: Board, to_move: Player, out: &mut Traversal) {
    match board.status() {
        GameStatus::SpiWin => out.spi_wins += 1,
        GameStatus::HumanWin | GameStatus::Draw => {
            let expected = if board.status() == GameStatus::HumanWin {
                OutputCode::HumanWon
            } else {
                OutputCode::NoAction
            };
            // a draw completed by the SPI player is never scanned
            let scanned = board.status() == GameStatus::HumanWin || to_move == Player::Spi;
            if scanned {
                out.lookups += 1;
                if table.get(board.key()) != Some(expected) {
                    out.missing.push(board.key());
                }
            }
            if board.status() == GameStatus::HumanWin {
                out.human_wins += 1;
            } else {
                out.draws += 1;
            }
        }
        GameStatus::InProgress => match to_move {
            Player::Spi => {
                out.lookups += 1;
                let next = table
                    .get(board.key())
                    .and_then(OutputCode::square)
                    .and_then(|sq| board.apply_move(sq, Player::Spi).ok());
                match next {
                    Some(next) => walk(table, next, Player::Human, out),
                    None => out.missing.push(board.key()),
                }
            }
            Player::Human => {
                for sq in board.empty_squares() {
                    let next = board.apply_move(sq, Player::Human).expect("empty square");
                    walk(table, next, Player::Spi, out);
                }
            }
        },
    }
}

const LINES: [[usize; 3]; 8] = [
    [0, 1, 2],
    [3, 4, 5],
    [6, 7, 8],
    [0, 3, 6],
    [1, 4, 7],
    [2, 5, 8],
    [0, 4, 8],
    [2, 4, 6],
];

fn raw_line(cells: &[u8; 9]) -> Option<u8> {
    LINES
        .iter()
        .map(|l| (cells[l[0]], cells[l[1]], cells[l[2]]))
        .find(|&(a, b, c)| a != 2 && a == b && b == c)
        .map(|(a, _, _)| a)
}

fn raw_key(cells: &[u8; 9]) -> u16 {
    cells
        .iter()
        .enumerate()
        .map(|(i, &c)| u16::from(c - 1) * 3u16.pow(i as u32))
        .sum()
}

fn dfs(cells: &mut [u8; 9], mover: u8, seen: &mut HashSet<[u8; 9]>) {
    if !seen.insert(*cells) || raw_line(cells).is_some() || !cells.contains(&2) {
        return;
    }
    for i in 0..9 {
        if cells[i] == 2 {
            cells[i] = mover;
            dfs(cells, 4 - mover, seen);
            cells[i] = 2;
        }
    }
}

fn oracle_boards() -> HashSet<[u8; 9]> {
    let mut all = HashSet::new();
    for first in [1u8, 3u8] {
        let mut seen = HashSet::new();
        dfs(&mut [2; 9], first, &mut seen);
        all.extend(seen);
    }
    all
}

/// Every board reachable by alternating play from the empty board, either
/// player first, as raw keys. 1 = human, 2 = empty, 3 = SPI.
pub fn oracle_reachable() -> HashSet<u16> {
    oracle_boards().iter().map(raw_key).collect()
}

/// Number of reachable boards the SPI player can be asked about: terminal
/// boards plus live boards where it has no more stones than the human.
pub fn oracle_entry_count() -> usize {
    oracle_boards()
        .iter()
        .filter(|cells| {
            let humans = cells.iter().filter(|&&c| c == 1).count();
            let spis = cells.iter().filter(|&&c| c == 3).count();
            let terminal = raw_line(cells).is_some() || !cells.contains(&2);
            terminal || spis <= humans
        })
        .count()
}

/// Runs every integrity check against `table`.
pub fn verify_table(table: &PolicyTable) -> VerifyReport {
    let mut checks = Vec::new();

    let spi_first = traverse(table, Player::Spi);
    let human_first = traverse(table, Player::Human);
    let missing: Vec<_> = spi_first.missing.iter().chain(&human_first.missing).collect();
    checks.push(CheckResult {
        name: "totality",
        passed: missing.is_empty(),
        detail: format!(
            "{} lookups over all play paths, {} unanswered{}",
            spi_first.lookups + human_first.lookups,
            missing.len(),
            missing.first().map(|k| format!(" (first: {k})")).unwrap_or_default()
        ),
    });

    let losses = spi_first.human_wins + human_first.human_wins;
    checks.push(CheckResult {
        name: "never-lose",
        passed: losses == 0,
        detail: format!(
            "{losses} lost games; SPI first {} won / {} drawn, SPI second {} won / {} drawn",
            spi_first.spi_wins, spi_first.draws, human_first.spi_wins, human_first.draws
        ),
    });

    let mut solver = Solver::new();
    let mut mismatched = 0usize;
    let mut bad_flags = 0usize;
    let mut inconsistent = 0usize;
    let mut moves = 0usize;
    for (key, code) in table.sorted_entries() {
        let board = Board::from_key(key);
        if !code.consistent_with(&board) {
            inconsistent += 1;
        }
        if let OutputCode::Move { square, winning } = code {
            moves += 1;
            match solver.best_move(&board) {
                Ok(decision) if decision.square == square => {}
                _ => mismatched += 1,
            }
            let wins = board
                .apply_move(square, Player::Spi)
                .is_ok_and(|b| b.winner() == Some(Player::Spi));
            if wins != winning {
                bad_flags += 1;
            }
        }
    }
    checks.push(CheckResult {
        name: "live-equivalence",
        passed: mismatched == 0,
        detail: format!("{mismatched} of {moves} move entries differ from minimax"),
    });
    checks.push(CheckResult {
        name: "winning-flag",
        passed: bad_flags == 0,
        detail: format!("{bad_flags} of {moves} move entries have a wrong winning flag"),
    });
    checks.push(CheckResult {
        name: "consistency",
        passed: inconsistent == 0,
        detail: format!(
            "{inconsistent} of {} entries inconsistent with their board",
            table.len()
        ),
    });

    let reachable = oracle_reachable();
    let unreachable = table
        .sorted_entries()
        .keys()
        .filter(|k| !reachable.contains(&k.value()))
        .count();
    let expected = oracle_entry_count();
    checks.push(CheckResult {
        name: "entry-count",
        passed: table.len() == expected && table.meta().entry_count as usize == expected && unreachable == 0,
        detail: format!(
            "{} entries, oracle expects {expected}, {unreachable} unreachable keys",
            table.len()
        ),
    });

    for (name, format) in [
        ("binary-round-trip", TableFormat::Binary),
        ("json-round-trip", TableFormat::Json),
    ] {
        let decoded = PolicyTable::deserialize(&table.serialize(format));
        let passed = decoded.as_ref().is_ok_and(|t| t.same_content(table));
        checks.push(CheckResult {
            name,
            passed,
            detail: match decoded {
                Ok(_) if passed => "identical after decode".into(),
                Ok(_) => "decoded table differs".into(),
                Err(e) => e.to_string(),
            },
        });
    }

    VerifyReport { checks }
}
