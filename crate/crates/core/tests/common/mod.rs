//! Reference implementations used only by tests. Nothing here calls the
//! library's move generator or solver; positions are plain data.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use krk_core::{Dims, Piece, Position, Side, Square};

/// What a brute-force move looks like: piece, from, to, capture flag.
pub type NaiveMove = (Piece, Square, Square, bool);

fn squares(dims: Dims) -> impl Iterator<Item = Square> {
    let (m, n) = (dims.m(), dims.n());
    (1..=n).flat_map(move |r| (1..=m).map(move |c| Square::new(c, r)))
}

fn king_touch(a: Square, b: Square) -> bool {
    (a.col as i32 - b.col as i32).abs() <= 1 && (a.row as i32 - b.row as i32).abs() <= 1
}

/// Rook on `rook` gives check to `target` given the other occupied squares.
fn rook_sees(rook: Square, target: Square, occupied: &[Square]) -> bool {
    if rook == target || (rook.col != target.col && rook.row != target.row) {
        return false;
    }
    // walk square by square from rook to target
    let dc = (target.col as i32 - rook.col as i32).signum();
    let dr = (target.row as i32 - rook.row as i32).signum();
    let (mut c, mut r) = (rook.col as i32 + dc, rook.row as i32 + dr);
    while (c, r) != (target.col as i32, target.row as i32) {
        if occupied.contains(&Square::new(c as u16, r as u16)) {
            return false;
        }
        c += dc;
        r += dr;
    }
    true
}

pub fn naive_valid(dims: Dims, p: &Position) -> bool {
    let on = |s: Square| s.col >= 1 && s.row >= 1 && s.col <= dims.m() && s.row <= dims.n();
    if !(on(p.wk) && on(p.wr) && on(p.bk)) {
        return false;
    }
    if p.wk == p.wr || p.wk == p.bk || p.wr == p.bk {
        return false;
    }
    if king_touch(p.wk, p.bk) {
        return false;
    }
    !(p.stm == Side::White && rook_sees(p.wr, p.bk, &[p.wk]))
}

/// Every legal move, found by trying every destination square.
pub fn naive_moves(dims: Dims, p: &Position) -> Vec<NaiveMove> {
    let mut out = Vec::new();
    for to in squares(dims) {
        match p.stm {
            Side::White => {
                if to != p.wk && king_touch(p.wk, to) && to != p.wr && to != p.bk && !king_touch(to, p.bk) {
                    out.push((Piece::WhiteKing, p.wk, to, false));
                }
                if to != p.wr
                    && to != p.wk
                    && to != p.bk
                    && (to.col == p.wr.col || to.row == p.wr.row)
                    && rook_sees(p.wr, to, &[p.wk, p.bk])
                {
                    out.push((Piece::WhiteRook, p.wr, to, false));
                }
            }
            Side::Black => {
                if to == p.bk || !king_touch(p.bk, to) || to == p.wk || king_touch(to, p.wk) {
                    continue;
                }
                if to == p.wr {
                    out.push((Piece::BlackKing, p.bk, to, true));
                } else if !rook_sees(p.wr, to, &[p.wk]) {
                    // after the move the black king is on `to`; is it attacked?
                    out.push((Piece::BlackKing, p.bk, to, false));
                }
            }
        }
    }
    out
}

pub fn naive_play(p: &Position, mv: &NaiveMove) -> Option<Position> {
    if mv.3 {
        return None;
    }
    let mut q = *p;
    match mv.0 {
        Piece::WhiteKing => q.wk = mv.2,
        Piece::WhiteRook => q.wr = mv.2,
        Piece::BlackKing => q.bk = mv.2,
    }
    q.stm = match p.stm {
        Side::White => Side::Black,
        Side::Black => Side::White,
    };
    Some(q)
}

pub fn naive_in_check(p: &Position) -> bool {
    rook_sees(p.wr, p.bk, &[p.wk])
}

/// Every valid position on the board.
pub fn all_positions(dims: Dims) -> Vec<Position> {
    let sqs: Vec<Square> = squares(dims).collect();
    let mut out = Vec::new();
    for stm in [Side::White, Side::Black] {
        for &wk in &sqs {
            for &wr in &sqs {
                for &bk in &sqs {
                    let p = Position::new(wk, wr, bk, stm);
                    if naive_valid(dims, &p) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

/// Exact distance to mate by depth-limited forward search with memoization.
pub struct ForwardSearch {
    dims: Dims,
    memo: HashMap<(Position, u16), bool>,
}

impl ForwardSearch {
    pub fn new(dims: Dims) -> Self {
        Self {
            dims,
            memo: HashMap::new(),
        }
    }

    /// Can White force mate within `depth` plies?
    pub fn wins_within(&mut self, p: &Position, depth: u16) -> bool {
        if let Some(&v) = self.memo.get(&(*p, depth)) {
            return v;
        }
        let moves = naive_moves(self.dims, p);
        let result = match p.stm {
            Side::Black => {
                if moves.is_empty() {
                    naive_in_check(p)
                } else if depth == 0 || moves.iter().any(|m| m.3) {
                    false
                } else {
                    moves.iter().all(|m| {
                        let child = naive_play(p, m).unwrap();
                        self.wins_within(&child, depth - 1)
                    })
                }
            }
            Side::White => {
                depth > 0
                    && moves.iter().any(|m| {
                        let child = naive_play(p, m).unwrap();
                        self.wins_within(&child, depth - 1)
                    })
            }
        };
        self.memo.insert((*p, depth), result);
        result
    }

    /// Plies to mate with best play, or `None` if no mate within `limit`.
    pub fn dtm(&mut self, p: &Position, limit: u16) -> Option<u16> {
        (0..=limit).find(|&d| self.wins_within(p, d))
    }
}

/// Oracle distance to mate for every valid position.
pub fn forward_table(dims: Dims) -> HashMap<Position, Option<u16>> {
    let limit = 2 * (dims.m() + dims.n()) * 4;
    let mut search = ForwardSearch::new(dims);
    all_positions(dims)
        .into_iter()
        .map(|p| {
            let v = search.dtm(&p, limit);
            (p, v)
        })
        .collect()
}

pub fn move_set(moves: &[NaiveMove]) -> HashSet<NaiveMove> {
    moves.iter().copied().collect()
}
