//! Rules kernel for King+Rook vs King on an arbitrary `m x n` board.
//!
//! Coordinates are `(column, row)`, both 1-based, with `(1, 1)` in the
//! bottom-left corner. White owns the king and the rook, Black the lone king.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest board edge the kernel accepts.
pub const MIN_EDGE: u16 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RulesError {
    #[error("invalid board dimensions {m}x{n}: both edges must be at least {MIN_EDGE}")]
    InvalidDims { m: u16, n: u16 },
    #[error("invalid position: {0}")]
    InvalidPosition(&'static str),
    #[error("illegal move {0}")]
    IllegalMove(String),
    #[error("index {index} out of range (table holds {len} entries)")]
    IndexOutOfRange { index: u64, len: u64 },
}

/// Board size: `m` columns by `n` rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "(u16, u16)", into = "(u16, u16)")]
pub struct Dims {
    m: u16,
    n: u16,
}

impl Dims {
    pub fn new(m: u16, n: u16) -> Result<Self, RulesError> {
        if m < MIN_EDGE || n < MIN_EDGE {
            return Err(RulesError::InvalidDims { m, n });
        }
        Ok(Self { m, n })
    }

    #[inline]
    pub fn m(self) -> u16 {
        self.m
    }

    #[inline]
    pub fn n(self) -> u16 {
        self.n
    }

    /// Number of squares.
    #[inline]
    pub fn area(self) -> usize {
        self.m as usize * self.n as usize
    }

    /// Size of the dense position index space, `2 * area^3`.
    #[inline]
    pub fn index_len(self) -> usize {
        let s = self.area();
        2 * s * s * s
    }

    #[inline]
    pub fn contains(self, sq: Square) -> bool {
        (1..=self.m).contains(&sq.col) && (1..=self.n).contains(&sq.row)
    }

    /// Linear square index `(col - 1) + (row - 1) * m`.
    #[inline]
    pub fn square_index(self, sq: Square) -> usize {
        (sq.col as usize - 1) + (sq.row as usize - 1) * self.m as usize
    }

    #[inline]
    pub fn square_at(self, index: usize) -> Square {
        let m = self.m as usize;
        Square {
            col: (index % m) as u16 + 1,
            row: (index / m) as u16 + 1,
        }
    }

    /// Distance from `sq` to the nearest board edge (0 on the rim).
    pub fn edge_distance(self, sq: Square) -> u16 {
        (sq.col - 1)
            .min(self.m - sq.col)
            .min(sq.row - 1)
            .min(self.n - sq.row)
    }

    pub fn on_edge(self, sq: Square) -> bool {
        self.edge_distance(sq) == 0
    }
}

impl TryFrom<(u16, u16)> for Dims {
    type Error = RulesError;

    fn try_from((m, n): (u16, u16)) -> Result<Self, Self::Error> {
        Dims::new(m, n)
    }
}

impl From<Dims> for (u16, u16) {
    fn from(d: Dims) -> Self {
        (d.m, d.n)
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.m, self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Square {
    pub col: u16,
    pub row: u16,
}

impl Square {
    pub const fn new(col: u16, row: u16) -> Self {
        Self { col, row }
    }

    /// King-move distance.
    #[inline]
    pub fn chebyshev(self, other: Square) -> u16 {
        self.col.abs_diff(other.col).max(self.row.abs_diff(other.row))
    }

    #[inline]
    pub fn adjacent(self, other: Square) -> bool {
        self.chebyshev(other) <= 1
    }

    fn offset(self, dc: i32, dr: i32, dims: Dims) -> Option<Square> {
        let col = self.col as i32 + dc;
        let row = self.row as i32 + dr;
        if col < 1 || row < 1 || col > dims.m as i32 || row > dims.n as i32 {
            None
        } else {
            Some(Square::new(col as u16, row as u16))
        }
    }

    /// Algebraic-style name on boards up to 26 columns, `(c,r)` otherwise.
    pub fn display(self, dims: Dims) -> String {
        if dims.m <= 26 {
            format!("{}{}", (b'a' + (self.col - 1) as u8) as char, self.row)
        } else {
            format!("({},{})", self.col, self.row)
        }
    }
}

impl fmt::Display for Square {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.col, self.row)
    }
}

impl std::str::FromStr for Square {
    type Err = String;

    /// Parses `"c,r"`, optionally wrapped in parentheses.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().trim_start_matches('(').trim_end_matches(')');
        let (c, r) = t
            .split_once(',')
            .ok_or_else(|| format!("expected \"col,row\", got {s:?}"))?;
        let col = c.trim().parse::<u16>().map_err(|e| format!("bad column in {s:?}: {e}"))?;
        let row = r.trim().parse::<u16>().map_err(|e| format!("bad row in {s:?}: {e}"))?;
        Ok(Square::new(col, row))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    White,
    Black,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::White => Side::Black,
            Side::Black => Side::White,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::White => "White",
            Side::Black => "Black",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Piece {
    #[serde(rename = "WK")]
    WhiteKing,
    #[serde(rename = "WR")]
    WhiteRook,
    #[serde(rename = "BK")]
    BlackKing,
}

impl Piece {
    pub fn side(self) -> Side {
        match self {
            Piece::WhiteKing | Piece::WhiteRook => Side::White,
            Piece::BlackKing => Side::Black,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Piece::WhiteKing => "WK",
            Piece::WhiteRook => "WR",
            Piece::BlackKing => "BK",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Position {
    pub wk: Square,
    pub wr: Square,
    pub bk: Square,
    pub stm: Side,
}

impl Position {
    pub fn new(wk: Square, wr: Square, bk: Square, stm: Side) -> Self {
        Self { wk, wr, bk, stm }
    }

    pub fn square_of(&self, piece: Piece) -> Square {
        match piece {
            Piece::WhiteKing => self.wk,
            Piece::WhiteRook => self.wr,
            Piece::BlackKing => self.bk,
        }
    }

    /// Checks every position invariant against `dims`.
    pub fn validate(&self, dims: Dims) -> Result<(), RulesError> {
        if !(dims.contains(self.wk) && dims.contains(self.wr) && dims.contains(self.bk)) {
            return Err(RulesError::InvalidPosition("square off the board"));
        }
        if self.wk == self.wr || self.wk == self.bk || self.wr == self.bk {
            return Err(RulesError::InvalidPosition("two pieces share a square"));
        }
        if self.wk.adjacent(self.bk) {
            return Err(RulesError::InvalidPosition("kings are adjacent"));
        }
        if self.stm == Side::White && rook_attacks(self.wr, self.wk, self.bk) {
            return Err(RulesError::InvalidPosition("black king in check with White to move"));
        }
        Ok(())
    }

    pub fn is_valid(&self, dims: Dims) -> bool {
        self.validate(dims).is_ok()
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "WK{} WR{} BK{} {} to move",
            self.wk, self.wr, self.bk, self.stm
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Move {
    pub piece: Piece,
    pub from: Square,
    pub to: Square,
    pub captures_rook: bool,
}

impl Move {
    pub fn new(piece: Piece, from: Square, to: Square) -> Self {
        Self {
            piece,
            from,
            to,
            captures_rook: false,
        }
    }

    /// Wire notation `c,r:c,r`.
    pub fn coords(&self) -> String {
        format!("{},{}:{},{}", self.from.col, self.from.row, self.to.col, self.to.row)
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.captures_rook { "x" } else { "-" };
        write!(f, "{}{}{}{}", self.piece.code(), self.from, sep, self.to)
    }
}

/// Parses `"c,r:c,r"` into a from/to pair.
pub fn parse_from_to(s: &str) -> Result<(Square, Square), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected \"c,r:c,r\", got {s:?}"))?;
    Ok((a.parse()?, b.parse()?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Terminal {
    Checkmate,
    Stalemate,
    RookCaptured,
    Ongoing,
}

/// Result of playing a legal move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveOutcome {
    Continue(Position),
    RookCaptured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Columns,
    Rows,
}

/// True when a rook on `rook` attacks `target`. Only the white king blocks;
/// the black king never shields a square behind itself.
#[inline]
pub fn rook_attacks(rook: Square, wk: Square, target: Square) -> bool {
    if rook == target {
        return false;
    }
    if rook.row == target.row {
        !(wk.row == rook.row && strictly_between(wk.col, rook.col, target.col))
    } else if rook.col == target.col {
        !(wk.col == rook.col && strictly_between(wk.row, rook.row, target.row))
    } else {
        false
    }
}

#[inline]
fn strictly_between(x: u16, a: u16, b: u16) -> bool {
    (a < x && x < b) || (b < x && x < a)
}

const KING_STEPS: [(i32, i32); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

const ROOK_DIRS: [(i32, i32); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];

pub fn start_position(dims: Dims) -> Result<Position, RulesError> {
    let pos = Position::new(
        Square::new(dims.m, 1),
        Square::new(1, 1),
        Square::new(dims.m, dims.n),
        Side::White,
    );
    pos.validate(dims).map_err(|_| RulesError::InvalidDims {
        m: dims.m,
        n: dims.n,
    })?;
    Ok(pos)
}

/// Calls `f` for every legal move of the side to move, in no particular
/// order. `pos` must already be valid.
#[inline]
pub(crate) fn for_each_move(dims: Dims, pos: &Position, mut f: impl FnMut(Move)) {
    match pos.stm {
        Side::White => {
            for (dc, dr) in KING_STEPS {
                if let Some(to) = pos.wk.offset(dc, dr, dims) {
                    if to != pos.wr && !to.adjacent(pos.bk) {
                        f(Move::new(Piece::WhiteKing, pos.wk, to));
                    }
                }
            }
            for (dc, dr) in ROOK_DIRS {
                let mut cur = pos.wr;
                while let Some(to) = cur.offset(dc, dr, dims) {
                    if to == pos.wk || to == pos.bk {
                        break;
                    }
                    f(Move::new(Piece::WhiteRook, pos.wr, to));
                    cur = to;
                }
            }
        }
        Side::Black => {
            for (dc, dr) in KING_STEPS {
                if let Some(to) = pos.bk.offset(dc, dr, dims) {
                    if to.adjacent(pos.wk) {
                        continue;
                    }
                    if to == pos.wr {
                        f(Move {
                            piece: Piece::BlackKing,
                            from: pos.bk,
                            to,
                            captures_rook: true,
                        });
                    } else if !rook_attacks(pos.wr, pos.wk, to) {
                        f(Move::new(Piece::BlackKing, pos.bk, to));
                    }
                }
            }
        }
    }
}

/// Legal moves for the side to move, ordered by piece (WK before WR) and
/// then by the linear index of the destination.
pub fn legal_moves(dims: Dims, pos: &Position) -> Result<Vec<Move>, RulesError> {
    pos.validate(dims)?;
    let mut moves = Vec::with_capacity(32);
    for_each_move(dims, pos, |mv| moves.push(mv));
    moves.sort_by_key(|mv| (mv.piece, dims.square_index(mv.to)));
    Ok(moves)
}

/// Plays `mv` without re-checking legality.
#[inline]
pub(crate) fn play_unchecked(pos: &Position, mv: &Move) -> MoveOutcome {
    if mv.captures_rook {
        return MoveOutcome::RookCaptured;
    }
    let mut next = *pos;
    match mv.piece {
        Piece::WhiteKing => next.wk = mv.to,
        Piece::WhiteRook => next.wr = mv.to,
        Piece::BlackKing => next.bk = mv.to,
    }
    next.stm = pos.stm.flip();
    MoveOutcome::Continue(next)
}

pub fn apply_move(dims: Dims, pos: &Position, mv: &Move) -> Result<MoveOutcome, RulesError> {
    let legal = legal_moves(dims, pos)?;
    if !legal.contains(mv) {
        return Err(RulesError::IllegalMove(mv.to_string()));
    }
    Ok(play_unchecked(pos, mv))
}

/// Looks up the legal move of the side to move that goes `from -> to`.
pub fn find_move(dims: Dims, pos: &Position, from: Square, to: Square) -> Result<Move, RulesError> {
    legal_moves(dims, pos)?
        .into_iter()
        .find(|mv| mv.from == from && mv.to == to)
        .ok_or_else(|| RulesError::IllegalMove(format!("{from}-{to}")))
}

/// Whether the black king currently stands in check.
pub fn black_in_check(pos: &Position) -> bool {
    rook_attacks(pos.wr, pos.wk, pos.bk)
}

pub fn classify(dims: Dims, pos: &Position) -> Result<Terminal, RulesError> {
    pos.validate(dims)?;
    let mut any = false;
    for_each_move(dims, pos, |_| any = true);
    Ok(if any {
        Terminal::Ongoing
    } else if pos.stm == Side::Black && black_in_check(pos) {
        Terminal::Checkmate
    } else {
        Terminal::Stalemate
    })
}

/// Calls `f` for every valid position with the other side to move from
/// which a legal move leads to `pos`. Every move in KRK is reversible, so
/// these are the un-moves of the side that just moved.
#[inline]
pub(crate) fn for_each_predecessor(dims: Dims, pos: &Position, mut f: impl FnMut(Position)) {
    match pos.stm {
        // Black just moved.
        Side::White => {
            for (dc, dr) in KING_STEPS {
                if let Some(from) = pos.bk.offset(dc, dr, dims) {
                    if from != pos.wk && from != pos.wr && !from.adjacent(pos.wk) {
                        f(Position { bk: from, stm: Side::Black, ..*pos });
                    }
                }
            }
        }
        // White just moved; the predecessor must not leave Black in check.
        Side::Black => {
            for (dc, dr) in KING_STEPS {
                if let Some(from) = pos.wk.offset(dc, dr, dims) {
                    if from != pos.wr
                        && from != pos.bk
                        && !from.adjacent(pos.bk)
                        && !rook_attacks(pos.wr, from, pos.bk)
                    {
                        f(Position { wk: from, stm: Side::White, ..*pos });
                    }
                }
            }
            for (dc, dr) in ROOK_DIRS {
                let mut cur = pos.wr;
                while let Some(from) = cur.offset(dc, dr, dims) {
                    if from == pos.wk || from == pos.bk {
                        break;
                    }
                    if !rook_attacks(from, pos.wk, pos.bk) {
                        f(Position { wr: from, stm: Side::White, ..*pos });
                    }
                    cur = from;
                }
            }
        }
    }
}

pub fn mirror_square(dims: Dims, sq: Square, axis: Axis) -> Square {
    match axis {
        Axis::Columns => Square::new(dims.m + 1 - sq.col, sq.row),
        Axis::Rows => Square::new(sq.col, dims.n + 1 - sq.row),
    }
}

pub fn mirror(dims: Dims, pos: &Position, axis: Axis) -> Position {
    Position {
        wk: mirror_square(dims, pos.wk, axis),
        wr: mirror_square(dims, pos.wr, axis),
        bk: mirror_square(dims, pos.bk, axis),
        stm: pos.stm,
    }
}

pub fn mirror_move(dims: Dims, mv: &Move, axis: Axis) -> Move {
    Move {
        from: mirror_square(dims, mv.from, axis),
        to: mirror_square(dims, mv.to, axis),
        ..*mv
    }
}

/// Dense index `((stm * S + wk) * S + wr) * S + bk` with `S = m * n`.
pub fn index_of(dims: Dims, pos: &Position) -> Result<usize, RulesError> {
    if !(dims.contains(pos.wk) && dims.contains(pos.wr) && dims.contains(pos.bk)) {
        return Err(RulesError::InvalidPosition("square off the board"));
    }
    Ok(raw_index(dims, pos))
}

#[inline]
pub(crate) fn raw_index(dims: Dims, pos: &Position) -> usize {
    let s = dims.area();
    let stm = match pos.stm {
        Side::White => 0,
        Side::Black => 1,
    };
    ((stm * s + dims.square_index(pos.wk)) * s + dims.square_index(pos.wr)) * s
        + dims.square_index(pos.bk)
}

/// Decodes an index without checking the position invariants.
#[inline]
pub(crate) fn decode_index(dims: Dims, index: usize) -> Position {
    let s = dims.area();
    let bk = index % s;
    let wr = (index / s) % s;
    let wk = (index / (s * s)) % s;
    let stm = if index / (s * s * s) == 0 {
        Side::White
    } else {
        Side::Black
    };
    Position::new(dims.square_at(wk), dims.square_at(wr), dims.square_at(bk), stm)
}

pub fn position_of(dims: Dims, index: usize) -> Result<Position, RulesError> {
    if index >= dims.index_len() {
        return Err(RulesError::IndexOutOfRange {
            index: index as u64,
            len: dims.index_len() as u64,
        });
    }
    let pos = decode_index(dims, index);
    pos.validate(dims)?;
    Ok(pos)
}

/// Plain-text board diagram, row `n` at the top.
pub fn render(dims: Dims, pos: &Position) -> String {
    let mut out = String::new();
    let letters = dims.m <= 26;
    for row in (1..=dims.n).rev() {
        out.push_str(&format!("{row:>3} "));
        for col in 1..=dims.m {
            let sq = Square::new(col, row);
            let c = if sq == pos.wk {
                'K'
            } else if sq == pos.wr {
                'R'
            } else if sq == pos.bk {
                'k'
            } else {
                '.'
            };
            out.push(c);
            out.push(' ');
        }
        out.push('\n');
    }
    out.push_str("    ");
    for col in 1..=dims.m {
        if letters {
            out.push((b'a' + (col - 1) as u8) as char);
            out.push(' ');
        } else {
            out.push_str(&format!("{} ", col % 10));
        }
    }
    out.push('\n');
    out
}
