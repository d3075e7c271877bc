use std::io::{BufRead, Write};
use std::sync::Arc;

use krk_core::policies::{GameEnd, GameTrace, Policy, ScriptState};
use krk_core::rules::{self, start_position, MoveOutcome, Terminal};
use krk_core::{Dims, Side, Tablebase};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnginePolicy {
    Scripted,
    Optimal,
}

fn engine(side: Side, policy: EnginePolicy, table: Option<Arc<Tablebase>>) -> Policy {
    match (side, policy, table) {
        (Side::White, EnginePolicy::Optimal, Some(tb)) => Policy::optimal_white(tb),
        (Side::Black, EnginePolicy::Optimal, Some(tb)) => Policy::optimal_black(tb),
        (Side::White, _, _) => Policy::scripted_white(),
        (Side::Black, _, _) => Policy::heuristic_black(),
    }
}

/// Interactive game from the start position. Bad input re-prompts without
/// touching the game. Returns `None` if the human quits or input ends.
pub fn play(
    dims: Dims,
    human: Side,
    policy: EnginePolicy,
    table: Option<Arc<Tablebase>>,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
) -> Result<Option<GameTrace>, CliError> {
    let fail = |e: &dyn std::fmt::Display| CliError::Failure(e.to_string());
    let engine = engine(human.flip(), policy, table);
    let mut state = ScriptState::new();
    let mut pos = start_position(dims).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut trace = GameTrace {
        dims,
        positions: vec![pos],
        moves: Vec::new(),
        terminal: GameEnd::Unfinished,
        white_move_count: 0,
        waiting_moves_used: 0,
    };
    writeln!(out, "{dims} board, you play {human}; enter moves as c,r:c,r (q to quit)")?;
    write!(out, "{}", rules::render(dims, &pos))?;
    loop {
        match rules::classify(dims, &pos).map_err(|e| fail(&e))? {
            Terminal::Checkmate => {
                trace.terminal = GameEnd::Checkmate;
                writeln!(out, "checkmate in {} White moves", trace.white_move_count)?;
                break;
            }
            Terminal::Stalemate => {
                trace.terminal = GameEnd::Stalemate;
                writeln!(out, "stalemate: draw after {} White moves", trace.white_move_count)?;
                break;
            }
            _ => {}
        }
        let mv = if pos.stm == human {
            write!(out, "your move> ")?;
            out.flush()?;
            let mut line = String::new();
            if input.read_line(&mut line)? == 0 {
                writeln!(out, "\ninput closed; game abandoned")?;
                return Ok(None);
            }
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if matches!(line, "q" | "quit" | "exit") {
                writeln!(out, "game abandoned")?;
                return Ok(None);
            }
            let (from, to) = match rules::parse_from_to(line) {
                Ok(ft) => ft,
                Err(e) => {
                    writeln!(out, "could not parse move: {e}")?;
                    continue;
                }
            };
            if let Some(reason) = krk_api::wire::illegal_reason(dims, &pos, from, to) {
                writeln!(out, "illegal move: {reason}")?;
                continue;
            }
            rules::find_move(dims, &pos, from, to).map_err(|e| fail(&e))?
        } else {
            let mv = engine.choose(dims, &pos, &mut state).map_err(|e| fail(&e))?;
            writeln!(out, "engine: {mv}")?;
            mv
        };
        if pos.stm == Side::White {
            trace.white_move_count += 1;
        }
        trace.moves.push(mv);
        match rules::apply_move(dims, &pos, &mv).map_err(|e| fail(&e))? {
            MoveOutcome::RookCaptured => {
                trace.terminal = GameEnd::RookCaptured;
                writeln!(out, "rook captured: draw")?;
                break;
            }
            MoveOutcome::Continue(next) => {
                pos = next;
                trace.positions.push(pos);
                write!(out, "{}", rules::render(dims, &pos))?;
            }
        }
    }
    trace.waiting_moves_used = state.waiting_moves_used;
    Ok(Some(trace))
}
