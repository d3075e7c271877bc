//! JSON shapes exchanged with clients. Squares travel as `"col,row"`
//! strings and moves as `"col,row:col,row"`, so boards wider than 26
//! columns need no special casing.

use krk_core::rules::{self, Terminal};
use krk_core::tablebase::white_moves;
use krk_core::{Dims, Move, Piece, Position, Side, Square, Value};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WirePosition {
    pub m: u16,
    pub n: u16,
    pub wk: String,
    pub wr: String,
    pub bk: String,
    pub stm: String,
}

/// A wire position that failed to decode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeError {
    /// Unparseable text, reported as 400.
    Malformed(String),
    /// Well formed but breaks a position invariant, reported as 422.
    Invalid(String),
}

pub fn parse_side(s: &str) -> Result<Side, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "w" | "white" => Ok(Side::White),
        "b" | "black" => Ok(Side::Black),
        other => Err(format!("side to move must be w or b, got {other:?}")),
    }
}

pub fn side_code(side: Side) -> &'static str {
    match side {
        Side::White => "w",
        Side::Black => "b",
    }
}

pub fn square_code(sq: Square) -> String {
    format!("{},{}", sq.col, sq.row)
}

impl WirePosition {
    pub fn from_position(dims: Dims, pos: &Position) -> Self {
        Self {
            m: dims.m(),
            n: dims.n(),
            wk: square_code(pos.wk),
            wr: square_code(pos.wr),
            bk: square_code(pos.bk),
            stm: side_code(pos.stm).to_string(),
        }
    }

    pub fn decode(&self) -> Result<(Dims, Position), DecodeError> {
        let sq = |s: &str| s.parse::<Square>().map_err(DecodeError::Malformed);
        let pos = Position::new(
            sq(&self.wk)?,
            sq(&self.wr)?,
            sq(&self.bk)?,
            parse_side(&self.stm).map_err(DecodeError::Malformed)?,
        );
        let dims = Dims::new(self.m, self.n).map_err(|e| DecodeError::Invalid(e.to_string()))?;
        pos.validate(dims).map_err(|e| DecodeError::Invalid(e.to_string()))?;
        Ok((dims, pos))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeResponse {
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plies: Option<u16>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub white_moves: Option<u32>,
    pub position: WirePosition,
}

pub fn status_of(v: Value) -> &'static str {
    match v {
        Value::Illegal => "illegal",
        Value::Draw => "draw",
        Value::WinIn(_) => "win",
    }
}

impl ProbeResponse {
    pub fn new(dims: Dims, pos: &Position, v: Value) -> Self {
        Self {
            status: status_of(v).to_string(),
            plies: v.plies(),
            white_moves: white_moves(v, pos.stm).ok().map(|c| c.0),
            position: WirePosition::from_position(dims, pos),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnginePolicy {
    Scripted,
    Optimal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplyRequest {
    pub position: WirePosition,
    #[serde(default)]
    pub human_move: Option<String>,
    pub engine_policy: EnginePolicy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireMove {
    pub piece: String,
    pub from: String,
    pub to: String,
    /// `from:to` in wire coordinates, ready to send back as `human_move`.
    pub coords: String,
    pub captures_rook: bool,
    pub notation: String,
}

impl From<&Move> for WireMove {
    fn from(mv: &Move) -> Self {
        Self {
            piece: mv.piece.code().to_string(),
            from: square_code(mv.from),
            to: square_code(mv.to),
            coords: mv.coords(),
            captures_rook: mv.captures_rook,
            notation: mv.to_string(),
        }
    }
}

/// One candidate human move and what it is worth with best play after it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    #[serde(rename = "move")]
    pub mv: WireMove,
    pub status: String,
    /// White moves to mate counted from the annotated position, the
    /// candidate itself included when it is a White move.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub white_moves: Option<u32>,
}

impl Annotation {
    pub fn new(pos: &Position, mv: &Move, child: Value) -> Self {
        let white_moves = white_moves(child, pos.stm.flip()).ok().map(|c| match pos.stm {
            Side::White => c.0 + 1,
            Side::Black => c.0,
        });
        Self {
            mv: mv.into(),
            status: status_of(child).to_string(),
            white_moves,
        }
    }
}

pub fn terminal_code(t: Terminal) -> &'static str {
    match t {
        Terminal::Checkmate => "checkmate",
        Terminal::Stalemate => "stalemate",
        Terminal::RookCaptured => "rook_captured",
        Terminal::Ongoing => "ongoing",
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplyResponse {
    pub accepted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub human_move: Option<WireMove>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub engine_move: Option<WireMove>,
    /// Absent only when the rook was captured and no position remains.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub new_position: Option<WirePosition>,
    pub terminal: String,
    pub annotations: Vec<Annotation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub accepted: bool,
    pub error: String,
    pub reason: String,
    pub position: WirePosition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub cached_tables: Vec<Dims>,
    pub version: String,
}

/// Explains why moving `from` to `to` is not legal in `pos`, or `None`
/// when it is.
pub fn illegal_reason(dims: Dims, pos: &Position, from: Square, to: Square) -> Option<String> {
    if rules::find_move(dims, pos, from, to).is_ok() {
        return None;
    }
    let piece = [
        Piece::WhiteKing,
        Piece::WhiteRook,
        Piece::BlackKing,
    ]
    .into_iter()
    .find(|&p| pos.square_of(p) == from && p.side() == pos.stm);
    let Some(piece) = piece else {
        return Some(format!("no {} piece on {from}", pos.stm));
    };
    if !dims.contains(to) {
        return Some("destination off the board".into());
    }
    if from == to {
        return Some("piece must move".into());
    }
    let reason = match piece {
        Piece::WhiteRook => {
            if from.col != to.col && from.row != to.row {
                "rook moves along a row or column"
            } else if to == pos.wk {
                "destination occupied"
            } else if to == pos.bk {
                "cannot capture the king"
            } else {
                "path blocked"
            }
        }
        _ if from.chebyshev(to) != 1 => "king moves one square",
        Piece::WhiteKing if to == pos.wr => "destination occupied",
        Piece::WhiteKing | Piece::BlackKing => "destination attacked",
    };
    Some(reason.into())
}
