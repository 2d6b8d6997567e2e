//! The memoized solver checked against a plain recursive search with no
//! memo and no pruning, over every reachable state.

use std::collections::HashSet;

use spi_ttt::board::Symmetry;
use spi_ttt::minimax::{best_move, Score, Solver, WIN_SCORE};
use spi_ttt::{Board, GameStatus, Player, Square, SquareState, StateKey};

/// Depth-shaped minimax by brute force.
fn oracle(board: &Board, to_move: Player, depth: i32) -> i32 {
    match board.status() {
        GameStatus::SpiWin => return WIN_SCORE - depth,
        GameStatus::HumanWin => return -WIN_SCORE + depth,
        GameStatus::Draw => return 0,
        GameStatus::InProgress => {}
    }
    let values = board.empty_squares().map(|sq| {
        let child = board.apply_move(sq, to_move).unwrap();
        oracle(&child, to_move.opponent(), depth + 1)
    });
    match to_move {
        Player::Spi => values.max().unwrap(),
        Player::Human => values.min().unwrap(),
    }
}

/// Walks the whole tree once from the empty board. Each node's oracle value
/// is computed bottom-up without memoization and compared to the solver's
/// value at the same depth. Returns the number of distinct states checked.
fn walk(board: Board, to_move: Player, depth: u32, solver: &mut Solver, seen: &mut HashSet<(StateKey, Player)>) -> i32 {
    let value = match board.status() {
        GameStatus::SpiWin => WIN_SCORE - depth as i32,
        GameStatus::HumanWin => -WIN_SCORE + depth as i32,
        GameStatus::Draw => 0,
        GameStatus::InProgress => {
            let values: Vec<i32> = board
                .empty_squares()
                .map(|sq| {
                    let child = board.apply_move(sq, to_move).unwrap();
                    walk(child, to_move.opponent(), depth + 1, solver, seen)
                })
                .collect();
            match to_move {
                Player::Spi => *values.iter().max().unwrap(),
                Player::Human => *values.iter().min().unwrap(),
            }
        }
    };
    assert_eq!(
        solver.value(&board, to_move, depth),
        Score(value),
        "{board:?} {to_move} at depth {depth}"
    );
    seen.insert((board.key(), to_move));
    value
}

#[test]
fn solver_matches_plain_recursion_on_all_reachable_states() {
    let mut solver = Solver::new();
    let mut seen = HashSet::new();
    for first in [Player::Spi, Player::Human] {
        let root = walk(Board::EMPTY, first, 0, &mut solver, &mut seen);
        assert_eq!(root, 0, "perfect play from the empty board is a draw");
    }
    // 5478 reachable boards per first mover, each with its own side to move
    assert_eq!(seen.len(), 2 * 5478);
}

#[test]
fn oracle_value_after_corner_and_center() {
    let board = Board::with_stones(&[5], &[1]).unwrap();
    let expected = oracle(&board, Player::Human, 0);
    assert_eq!(expected, 0);
    assert_eq!(Solver::new().value(&board, Player::Human, 0), Score(expected));
}

#[test]
fn forced_win_value_matches_oracle() {
    let board = Board::with_stones(&[4, 5], &[1, 2]).unwrap();
    let v = oracle(&board, Player::Spi, 0);
    assert!(v > 0);
    assert_eq!(Solver::new().value(&board, Player::Spi, 0), Score(v));
    assert_eq!(
        Solver::new().value(&board, Player::Spi, 3),
        Score(oracle(&board, Player::Spi, 3))
    );
}

fn spi_turn_states() -> Vec<Board> {
    spi_ttt::board::enumerate_reachable_any()
        .into_iter()
        .map(Board::from_key)
        .filter(|b| !b.status().is_terminal() && b.spi_may_move())
        .collect()
}

/// Every reply the human can make, with the SPI player following best_move.
fn never_loses(board: Board, to_move: Player, solver: &mut Solver) -> bool {
    match board.status() {
        GameStatus::HumanWin => false,
        GameStatus::SpiWin | GameStatus::Draw => true,
        GameStatus::InProgress => match to_move {
            Player::Spi => {
                let sq = solver.best_move(&board).unwrap().square;
                never_loses(board.apply_move(sq, Player::Spi).unwrap(), Player::Human, solver)
            }
            Player::Human => board
                .empty_squares()
                .all(|sq| never_loses(board.apply_move(sq, Player::Human).unwrap(), Player::Spi, solver)),
        },
    }
}

#[test]
fn never_loses_from_any_position_not_already_lost() {
    let mut solver = Solver::new();
    let mut checked = 0;
    for board in spi_turn_states() {
        // positions the human has already won by force are excluded
        if solver.value(&board, Player::Spi, 0).0 < 0 {
            continue;
        }
        assert!(never_loses(board, Player::Spi, &mut solver), "{board:?}");
        checked += 1;
    }
    assert!(checked > 3000);
    assert!(never_loses(Board::EMPTY, Player::Spi, &mut solver));
    assert!(never_loses(Board::EMPTY, Player::Human, &mut solver));
}

#[test]
fn immediate_win_is_always_taken() {
    let mut solver = Solver::new();
    for board in spi_turn_states() {
        let can_win = board
            .empty_squares()
            .any(|sq| board.apply_move(sq, Player::Spi).unwrap().winner() == Some(Player::Spi));
        let decision = solver.best_move(&board).unwrap();
        assert_eq!(decision.immediate_win, can_win, "{board:?}");
        let after = board.apply_move(decision.square, Player::Spi).unwrap();
        assert_eq!(decision.immediate_win, after.winner() == Some(Player::Spi));
        assert_eq!(board.get(decision.square), SquareState::Empty);
    }
}

#[test]
fn optimal_squares_commute_with_symmetry() {
    let mut solver = Solver::new();
    for board in spi_turn_states() {
        let mut base: Vec<u8> = solver
            .optimal_squares(&board)
            .unwrap()
            .iter()
            .map(|s| s.number())
            .collect();
        base.sort();
        for sym in Symmetry::all() {
            let image = board.transform(sym);
            let mut got: Vec<u8> = solver
                .optimal_squares(&image)
                .unwrap()
                .iter()
                .map(|s| s.number())
                .collect();
            got.sort();
            let mut want: Vec<u8> = base
                .iter()
                .map(|&n| sym.apply(Square::new(n).unwrap()).number())
                .collect();
            want.sort();
            assert_eq!(got, want, "{board:?} under {sym:?}");
        }
        let chosen = solver.best_move(&board).unwrap().square.number();
        assert!(base.contains(&chosen));
    }
}

#[test]
fn best_move_is_deterministic_across_solvers() {
    let mut a = Solver::new();
    let states = spi_turn_states();
    let first: Vec<_> = states.iter().map(|b| a.best_move(b).unwrap()).collect();
    // fresh solvers visited in reverse order fill their memos differently
    let mut b = Solver::new();
    let second: Vec<_> = states.iter().rev().map(|bd| b.best_move(bd).unwrap()).collect();
    let second: Vec<_> = second.into_iter().rev().collect();
    assert_eq!(first, second);
    assert_eq!(best_move(&Board::EMPTY).unwrap().square, Square::CENTER);
}

#[test]
fn concurrent_solvers_agree() {
    let states = spi_turn_states();
    let mut reference = Solver::new();
    let expected: Vec<_> = states.iter().map(|b| reference.best_move(b).unwrap()).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..4)
            .map(|_| {
                scope.spawn(|| {
                    let mut solver = Solver::new();
                    states.iter().map(|b| solver.best_move(b).unwrap()).collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), expected);
        }
    });
}
