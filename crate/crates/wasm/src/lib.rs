//! Browser bindings. Each export takes plain numbers and `"col,row"`
//! strings and returns a JSON string; failures come back as
//! `{"error": "..."}` rather than as JS exceptions, so the functions run
//! unchanged in native tests.

use std::cell::RefCell;
use std::collections::VecDeque;
use std::sync::Arc;

use krk_core::policies::{self, ScriptState};
use krk_core::rules::{self, start_position, MoveOutcome, Terminal};
use krk_core::tablebase::{self, white_moves, GenOptions};
use krk_core::verify::{g_value, total_after};
use krk_core::{Dims, Move, Position, Side, Square, Tablebase, Value};
use serde_json::{json, Value as Json};
use wasm_bindgen::prelude::wasm_bindgen;

/// Largest board area solved in the browser (a 14x14 table is about 30 MB).
pub const BROWSER_CAP: usize = 196;
const KEEP_TABLES: usize = 3;

thread_local! {
    static TABLES: RefCell<VecDeque<Arc<Tablebase>>> = const { RefCell::new(VecDeque::new()) };
}

fn table(dims: Dims) -> Result<Arc<Tablebase>, String> {
    if let Some(tb) = TABLES.with(|t| t.borrow().iter().find(|tb| tb.dims() == dims).cloned()) {
        return Ok(tb);
    }
    let tb = Arc::new(
        tablebase::generate_with(dims, GenOptions { cap: BROWSER_CAP, threads: 0 }).map_err(|e| e.to_string())?,
    );
    TABLES.with(|t| {
        let mut t = t.borrow_mut();
        t.push_back(tb.clone());
        while t.len() > KEEP_TABLES {
            t.pop_front();
        }
    });
    Ok(tb)
}

fn dims(m: u16, n: u16) -> Result<Dims, String> {
    Dims::new(m, n).map_err(|e| e.to_string())
}

fn side(stm: &str) -> Result<Side, String> {
    match stm {
        "w" | "white" => Ok(Side::White),
        "b" | "black" => Ok(Side::Black),
        other => Err(format!("side to move must be w or b, got {other:?}")),
    }
}

fn code(sq: Square) -> String {
    format!("{},{}", sq.col, sq.row)
}

fn value_json(v: Value, stm: Side) -> Json {
    match v {
        Value::WinIn(p) => json!({
            "status": "win",
            "plies": p,
            "white_moves": white_moves(v, stm).map(|c| c.0).ok(),
        }),
        Value::Draw => json!({"status": "draw"}),
        Value::Illegal => json!({"status": "illegal"}),
    }
}

fn move_json(mv: &Move) -> Json {
    json!({"coords": mv.coords(), "notation": mv.to_string(), "piece": mv.piece.code()})
}

fn finish(result: Result<Json, String>) -> String {
    result.unwrap_or_else(|e| json!({ "error": e })).to_string()
}

/// Every legal first White move from the start with the total number of
/// White moves to mate after it, best first.
pub fn first_moves_json(m: u16, n: u16) -> Result<Json, String> {
    let d = dims(m, n)?;
    let start = start_position(d).map_err(|e| e.to_string())?;
    let tb = table(d)?;
    let mut rows: Vec<(Move, Option<u32>)> = rules::legal_moves(d, &start)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|mv| (mv, total_after(&tb, &start, &mv)))
        .collect();
    rows.sort_by_key(|(_, t)| t.unwrap_or(u32::MAX));
    let moves: Vec<Json> = rows
        .iter()
        .map(|(mv, total)| json!({"move": move_json(mv), "total": total}))
        .collect();
    let v = tb.probe(&start).map_err(|e| e.to_string())?;
    Ok(json!({
        "m": m,
        "n": n,
        "g": g_value(n),
        "start": value_json(v, Side::White),
        "moves": moves,
    }))
}

/// Value of the position for every square the black king could stand on,
/// with the white king and rook fixed. Cells are in linear square order,
/// `(col-1) + (row-1)*m`.
pub fn heatmap_json(m: u16, n: u16, wk: &str, wr: &str, stm: &str) -> Result<Json, String> {
    let d = dims(m, n)?;
    let wk: Square = wk.parse()?;
    let wr: Square = wr.parse()?;
    let stm = side(stm)?;
    if !d.contains(wk) || !d.contains(wr) || wk == wr {
        return Err("white king and rook need two distinct squares on the board".into());
    }
    let tb = table(d)?;
    let cells: Vec<Json> = (0..d.area())
        .map(|i| {
            let bk = d.square_at(i);
            let p = Position::new(wk, wr, bk, stm);
            let v = if p.is_valid(d) { tb.probe(&p).unwrap_or(Value::Illegal) } else { Value::Illegal };
            let mut cell = value_json(v, stm);
            cell["square"] = json!(code(bk));
            cell
        })
        .collect();
    Ok(json!({"m": m, "n": n, "wk": code(wk), "wr": code(wr), "stm": stm_code(stm), "cells": cells}))
}

fn stm_code(s: Side) -> &'static str {
    match s {
        Side::White => "w",
        Side::Black => "b",
    }
}

/// The engine's move for the side to move. `policy` is `"optimal"` or
/// `"scripted"`; scripted Black plays the survival heuristic.
pub fn engine_move_json(
    m: u16,
    n: u16,
    wk: &str,
    wr: &str,
    bk: &str,
    stm: &str,
    policy: &str,
) -> Result<Json, String> {
    let d = dims(m, n)?;
    let pos = Position::new(wk.parse()?, wr.parse()?, bk.parse()?, side(stm)?);
    pos.validate(d).map_err(|e| e.to_string())?;
    let term = rules::classify(d, &pos).map_err(|e| e.to_string())?;
    if term != Terminal::Ongoing {
        return Err(format!("game is over ({term:?})"));
    }
    let mv = match (policy, pos.stm) {
        ("optimal", _) => policies::optimal_move(&*table(d)?, &pos),
        ("scripted", Side::White) => {
            policies::scripted_white(d, &pos, ScriptState::infer(d, &pos)).map(|(mv, _)| mv)
        }
        ("scripted", Side::Black) => policies::black_heuristic(d, &pos),
        (other, _) => return Err(format!("policy must be optimal or scripted, got {other:?}")),
    }
    .map_err(|e| e.to_string())?;
    let outcome = rules::apply_move(d, &pos, &mv).map_err(|e| e.to_string())?;
    let (position, terminal) = match outcome {
        MoveOutcome::RookCaptured => (Json::Null, "rook_captured".to_string()),
        MoveOutcome::Continue(next) => {
            let t = rules::classify(d, &next).map_err(|e| e.to_string())?;
            let pj = json!({"wk": code(next.wk), "wr": code(next.wr), "bk": code(next.bk), "stm": stm_code(next.stm)});
            (pj, format!("{t:?}").to_lowercase())
        }
    };
    Ok(json!({"move": move_json(&mv), "position": position, "terminal": terminal}))
}

#[wasm_bindgen]
pub fn first_moves(m: u16, n: u16) -> String {
    finish(first_moves_json(m, n))
}

#[wasm_bindgen]
pub fn heatmap(m: u16, n: u16, wk: &str, wr: &str, stm: &str) -> String {
    finish(heatmap_json(m, n, wk, wr, stm))
}

#[wasm_bindgen]
pub fn engine_move(m: u16, n: u16, wk: &str, wr: &str, bk: &str, stm: &str, policy: &str) -> String {
    finish(engine_move_json(m, n, wk, wr, bk, stm, policy))
}
