//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any failed.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use spi_ttt::optics::{classify, default_thresholds, display_pattern_mask, render_board, scan_state};
use spi_ttt::orchestrator::game_rng;
use spi_ttt::verify::oracle_entry_count;
use spi_ttt::{
    build_table, Board, Engine, GameSession, GameStatus, GeometryConfig, OpticalFrontEnd, OutputCode, PhotometryConfig,
    Player, PolicyTable, SessionStatus, Solver, Square, StateKey,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Box<dyn Fn() -> Outcome>);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("spi-ttt-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn spi_ttt(args: &[&str]) -> Result<std::process::Output, String> {
    Command::new(env!("CARGO_BIN_EXE_spi-ttt"))
        .args(args)
        .output()
        .map_err(|e| format!("spawning spi-ttt: {e}"))
}

#[derive(Default)]
struct Leaves {
    human_wins: usize,
    spi_wins: usize,
    draws: usize,
    missing: usize,
}

/// Every human reply at every node; the SPI player reads its move from the
/// table.
fn adversarial(table: &PolicyTable, board: Board, to_move: Player, leaves: &mut Leaves) {
    match board.status() {
        GameStatus::HumanWin => leaves.human_wins += 1,
        GameStatus::SpiWin => leaves.spi_wins += 1,
        GameStatus::Draw => leaves.draws += 1,
        GameStatus::InProgress => match to_move {
            Player::Human => {
                for sq in board.empty_squares() {
                    adversarial(table, board.apply_move(sq, Player::Human).unwrap(), Player::Spi, leaves);
                }
            }
            Player::Spi => match table.get(board.key()).and_then(OutputCode::square) {
                Some(sq) if board.get(sq) == spi_ttt::SquareState::Empty => {
                    adversarial(table, board.apply_move(sq, Player::Spi).unwrap(), Player::Human, leaves)
                }
                _ => leaves.missing += 1,
            },
        },
    }
}

fn never_lose(table: &PolicyTable) -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for first in [Player::Spi, Player::Human] {
        let mut leaves = Leaves::default();
        adversarial(table, Board::EMPTY, first, &mut leaves);
        ok &= leaves.human_wins == 0 && leaves.missing == 0;
        parts.push(format!(
            "{first}-first: {} spi wins, {} draws, {} human wins, {} missing",
            leaves.spi_wins, leaves.draws, leaves.human_wins, leaves.missing
        ));
    }
    let elapsed = start.elapsed();
    ok &= elapsed.as_secs_f64() < 10.0;
    check(ok, format!("{} ({:.2}s)", parts.join("; "), elapsed.as_secs_f64()))
}

fn simulate_json(first: &str) -> Result<Value, String> {
    let args = [
        "simulate", "--games", "1000", "--first", first, "--seed", "42", "--sigma", "0.02", "--json",
    ];
    let out = spi_ttt(&args)?;
    if !out.status.success() {
        return Err(format!("simulate exited {:?}", out.status.code()));
    }
    serde_json::from_slice(&out.stdout).map_err(|e| format!("bad stats json: {e}"))
}

fn table_one() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (first, target, tol) in [("spi", 97.6, 3.0), ("random", 84.3, 5.0)] {
        let stats = simulate_json(first)?;
        let games = stats["games"].as_f64().unwrap_or(0.0);
        let wins = stats["wins"].as_f64().unwrap_or(0.0);
        let draws = stats["draws"].as_f64().unwrap_or(0.0);
        let losses = stats["losses"].as_u64().unwrap_or(u64::MAX);
        let faulted = stats["faulted"].as_u64().unwrap_or(u64::MAX);
        let win_pct = 100.0 * wins / games;
        ok &= games == 1000.0 && losses == 0 && (win_pct - target).abs() <= tol;
        parts.push(format!(
            "first {first}: win {win_pct:.1}% (target {target} ± {tol}), draw {:.1}%, lose {losses}, faulted {faulted}",
            100.0 * draws / games
        ));
    }
    check(ok, parts.join("; "))
}

fn optical_round_trip() -> Outcome {
    let geom = GeometryConfig::default();
    let exact = PhotometryConfig::default().with_sigma(0.0);
    let th = default_thresholds(&exact);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut wrong = 0;
    for key in StateKey::all() {
        let board = Board::from_key(key);
        let scene = render_board(&board, &geom, &exact).map_err(|e| e.to_string())?;
        let m = scan_state(&scene, &geom, &exact, &mut rng).map_err(|e| e.to_string())?;
        if classify(&m, &th) != board {
            wrong += 1;
        }
    }

    let noisy = PhotometryConfig::default().with_sigma(0.05);
    let front = OpticalFrontEnd::new(geom, noisy).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut readings = 0u64;
    let mut errors = 0u64;
    let mut i = 0u32;
    while readings < 100_000 {
        let board = Board::from_key(StateKey::new(i % StateKey::COUNT).unwrap());
        let m = front.scan(&board, &mut rng).map_err(|e| e.to_string())?;
        let read = front.classify(&m);
        for sq in Square::ALL {
            readings += 1;
            errors += u64::from(read.get(sq) != board.get(sq));
        }
        i += 1;
    }
    let rate = errors as f64 / readings as f64;
    check(
        wrong == 0 && rate < 1e-3,
        format!(
            "σ=0: {wrong} of {} boards misread; σ=0.05: {errors} of {readings} squares misread (rate {rate:.2e})",
            StateKey::COUNT
        ),
    )
}

fn table_integrity(table: &PolicyTable) -> Outcome {
    let path = scratch("table.bin");
    let built = spi_ttt(&["build-table", "--out", path.to_str().unwrap()])?;
    if !built.status.success() {
        return Err("build-table failed".into());
    }
    let out = spi_ttt(&["verify-table", "--table", path.to_str().unwrap()])?;
    let report = String::from_utf8_lossy(&out.stdout);
    let failed: Vec<&str> = report.lines().filter(|l| l.starts_with("FAIL")).collect();
    let oracle = oracle_entry_count();
    check(
        out.status.success() && failed.is_empty() && oracle == table.len(),
        format!(
            "verify-table exit {:?}, {} checks, {} failed; entries {} vs enumeration {oracle}",
            out.status.code(),
            report.lines().count(),
            failed.len(),
            table.len()
        ),
    )
}

fn trace_properties(table: Arc<PolicyTable>) -> Outcome {
    let geom = GeometryConfig::default();
    let engine = Arc::new(Engine::new(table, geom.clone(), PhotometryConfig::default()).map_err(|e| e.to_string())?);
    let mut problems = Vec::new();

    let mut game = GameSession::new("sample", Player::Spi, Arc::clone(&engine), game_rng(42, 0));
    let opening = game.spi_turn().map_err(|e| e.to_string())?;
    if opening.square != Square::CENTER || opening.output_code.and_then(OutputCode::pattern_index) != Some(5) {
        problems.push(format!("opening {:?}", opening.output_code));
    }
    for human in [4, 9, 7] {
        game.human_turn(Square::new(human).unwrap())
            .map_err(|e| e.to_string())?;
        game.spi_turn().map_err(|e| e.to_string())?;
    }
    let last = game.history().last().unwrap().clone();
    let pattern = last.output_code.and_then(OutputCode::pattern_index);
    let top_lit = last
        .output_code
        .and_then(|c| display_pattern_mask(c, &geom))
        .is_some_and(|m| m.is_lit(geom.top_strip.x, geom.top_strip.y));
    if game.status() != SessionStatus::SpiWin || game.history().len() != 7 || pattern != Some(12) || !top_lit {
        problems.push(format!(
            "sample game ended {:?} after {} moves, pattern {pattern:?}",
            game.status(),
            game.history().len()
        ));
    }

    // every SPI winning move over many random games
    let mut winning_moves = 0;
    for i in 0..500 {
        let g = spi_ttt::orchestrator::play_random_game(
            &engine,
            if i % 2 == 0 { Player::Spi } else { Player::Human },
            42,
            i,
        );
        if g.status == SessionStatus::SpiWin {
            let code = g.history.last().unwrap().output_code.unwrap();
            let p = code.pattern_index().unwrap_or(0);
            let top = display_pattern_mask(code, &geom).is_some_and(|m| m.is_lit(geom.top_strip.x, geom.top_strip.y));
            if !(11..=19).contains(&p) || !top {
                problems.push(format!("game {i} won with pattern {p}"));
            }
            winning_moves += 1;
        }
    }

    let mut draw = GameSession::new("draw", Player::Human, engine, game_rng(42, 1));
    for human in [5, 3, 4, 9, 8] {
        draw.human_turn(Square::new(human).unwrap())
            .map_err(|e| e.to_string())?;
        draw.spi_turn().map_err(|e| e.to_string())?;
    }
    let end = draw.history().last().unwrap();
    if draw.status() != SessionStatus::Draw || end.output_code != Some(OutputCode::NoAction) {
        problems.push(format!(
            "draw game ended {:?} with {:?}",
            draw.status(),
            end.output_code
        ));
    }

    check(
        problems.is_empty(),
        if problems.is_empty() {
            format!("opening pattern 5; sample game 7 moves ending with pattern 12 and top strip; {winning_moves} random-game wins all in 11..19; full draw ends with no action")
        } else {
            problems.join("; ")
        },
    )
}

fn plain_minimax(board: &Board, to_move: Player, depth: i32) -> i32 {
    match board.status() {
        GameStatus::SpiWin => 100 - depth,
        GameStatus::HumanWin => depth - 100,
        GameStatus::Draw => 0,
        GameStatus::InProgress => {
            let values = board
                .empty_squares()
                .map(|sq| plain_minimax(&board.apply_move(sq, to_move).unwrap(), to_move.opponent(), depth + 1));
            match to_move {
                Player::Spi => values.max().unwrap(),
                Player::Human => values.min().unwrap(),
            }
        }
    }
}

fn minimax_ground_truth() -> Outcome {
    let mut solver = Solver::new();
    let roots: Vec<i32> = [Player::Spi, Player::Human]
        .iter()
        .map(|&p| solver.value(&Board::EMPTY, p, 0).0)
        .collect();
    let mut disagreements = 0;
    let mut checked = 0;
    for key in spi_ttt::board::enumerate_reachable_any() {
        let board = Board::from_key(key);
        for to_move in [Player::Spi, Player::Human] {
            let stones = |p: Player| board.count(p.stone()) as i32;
            // the side to move is never ahead on stones
            if stones(to_move) > stones(to_move.opponent()) {
                continue;
            }
            checked += 1;
            if solver.value(&board, to_move, 0).0 != plain_minimax(&board, to_move, 0) {
                disagreements += 1;
            }
        }
    }
    check(
        roots == [0, 0] && disagreements == 0,
        format!("root values {roots:?}; {checked} states, {disagreements} disagreements with plain recursion"),
    )
}

fn determinism() -> Outcome {
    let mut same = true;
    let mut sizes = Vec::new();
    for first in ["spi", "random"] {
        let runs: Vec<(Vec<u8>, Vec<u8>)> = (0..2)
            .map(|run| {
                let trace = scratch(&format!("trace-{first}-{run}.jsonl"));
                let out = spi_ttt(&[
                    "simulate",
                    "--games",
                    "1000",
                    "--first",
                    first,
                    "--seed",
                    "42",
                    "--sigma",
                    "0.02",
                    "--trace",
                    trace.to_str().unwrap(),
                ])?;
                Ok((out.stdout, std::fs::read(&trace).map_err(|e| e.to_string())?))
            })
            .collect::<Result<_, String>>()?;
        same &= runs[0] == runs[1] && !runs[0].1.is_empty();
        sizes.push(format!("{first}: {} trace bytes", runs[0].1.len()));
    }
    check(same, format!("two runs byte-identical ({})", sizes.join(", ")))
}

fn main() -> ExitCode {
    let table = Arc::new(build_table());
    let criteria: Vec<Criterion> = vec![
        (
            "1 never-lose exhaustive traversal",
            Box::new({
                let t = Arc::clone(&table);
                move || never_lose(&t)
            }),
        ),
        ("2 win/draw/loss rates over 1000 games", Box::new(table_one)),
        ("3 optical round trip and noise rate", Box::new(optical_round_trip)),
        (
            "4 lookup-table integrity",
            Box::new({
                let t = Arc::clone(&table);
                move || table_integrity(&t)
            }),
        ),
        (
            "5 trace properties",
            Box::new({
                let t = Arc::clone(&table);
                move || trace_properties(Arc::clone(&t))
            }),
        ),
        ("6 minimax ground truth", Box::new(minimax_ground_truth)),
        ("7 determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    let _ = std::fs::remove_dir_all(scratch("x").parent().unwrap());
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
