//! King+Rook vs King on generalized `m x n` boards: a rules kernel, a
//! retrograde tablebase, scripted and optimal strategies, and a verifier
//! for the fastest-mate results on these boards.

pub mod policies;
pub mod rules;
pub mod tablebase;
pub mod verify;

pub use rules::{Axis, Dims, Move, MoveOutcome, Piece, Position, RulesError, Side, Square, Terminal};
pub use tablebase::{Tablebase, TablebaseError, Value, WhiteMoveCount};
