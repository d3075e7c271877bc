mod common;

use common::{all_positions, move_set, naive_in_check, naive_moves, naive_valid};
use krk_core::rules::{self, Axis, MoveOutcome};
use krk_core::{Dims, Position, Side, Square, Terminal};
use proptest::prelude::*;

fn small_boards() -> Vec<Dims> {
    let mut out = Vec::new();
    for m in 3..=5 {
        for n in 3..=5 {
            out.push(Dims::new(m, n).unwrap());
        }
    }
    out
}

#[test]
fn generator_matches_brute_force_on_small_boards() {
    for dims in small_boards() {
        for p in all_positions(dims) {
            let lib: Vec<_> = rules::legal_moves(dims, &p)
                .unwrap()
                .into_iter()
                .map(|m| (m.piece, m.from, m.to, m.captures_rook))
                .collect();
            assert_eq!(move_set(&lib), move_set(&naive_moves(dims, &p)), "{dims} {p}");
            assert_eq!(lib.len(), move_set(&lib).len(), "duplicate moves at {p}");
        }
    }
}

#[test]
fn validity_matches_brute_force() {
    for dims in small_boards() {
        for idx in 0..dims.index_len() {
            let decoded = rules::position_of(dims, idx);
            match decoded {
                Ok(p) => {
                    assert!(naive_valid(dims, &p));
                    assert_eq!(rules::index_of(dims, &p).unwrap(), idx);
                }
                Err(_) => {
                    let s = dims.area();
                    let sq = |i: usize| Square::new((i % dims.m() as usize) as u16 + 1, (i / dims.m() as usize) as u16 + 1);
                    let stm = if idx / (s * s * s) == 0 { Side::White } else { Side::Black };
                    let p = Position::new(sq((idx / (s * s)) % s), sq((idx / s) % s), sq(idx % s), stm);
                    assert!(!naive_valid(dims, &p), "{dims} {p} rejected");
                }
            }
        }
    }
}

#[test]
fn moves_preserve_invariants_and_ordering() {
    for dims in small_boards() {
        for p in all_positions(dims) {
            let moves = rules::legal_moves(dims, &p).unwrap();
            let keys: Vec<_> = moves.iter().map(|m| (m.piece, dims.square_index(m.to))).collect();
            assert!(keys.windows(2).all(|w| w[0] < w[1]), "ordering at {p}");
            for mv in &moves {
                assert_eq!(mv.piece.side(), p.stm);
                match rules::apply_move(dims, &p, mv).unwrap() {
                    MoveOutcome::Continue(q) => assert!(q.is_valid(dims), "{p} {mv} -> {q}"),
                    MoveOutcome::RookCaptured => assert!(mv.captures_rook),
                }
            }
        }
    }
}

#[test]
fn classification_and_edge_mates() {
    for dims in small_boards() {
        for p in all_positions(dims) {
            let none = naive_moves(dims, &p).is_empty();
            let expected = match (none, p.stm == Side::Black && naive_in_check(&p)) {
                (false, _) => Terminal::Ongoing,
                (true, true) => Terminal::Checkmate,
                (true, false) => Terminal::Stalemate,
            };
            let got = rules::classify(dims, &p).unwrap();
            assert_eq!(got, expected, "{dims} {p}");
            if got == Terminal::Checkmate {
                assert!(dims.on_edge(p.bk), "mate off the edge: {p}");
            }
            if p.stm == Side::White {
                assert_eq!(got, Terminal::Ongoing);
            }
        }
    }
}

#[test]
fn symmetry_closure_of_move_lists() {
    for dims in small_boards() {
        for p in all_positions(dims) {
            let moves = rules::legal_moves(dims, &p).unwrap();
            for axis in [Axis::Columns, Axis::Rows] {
                let q = rules::mirror(dims, &p, axis);
                let mirrored: std::collections::HashSet<_> = moves
                    .iter()
                    .map(|m| rules::mirror_move(dims, m, axis))
                    .collect();
                let direct: std::collections::HashSet<_> =
                    rules::legal_moves(dims, &q).unwrap().into_iter().collect();
                assert_eq!(mirrored, direct, "{dims} {p} {axis:?}");
            }
        }
    }
}

fn arb_position() -> impl Strategy<Value = (Dims, Position)> {
    (3u16..=12, 3u16..=12).prop_flat_map(|(m, n)| {
        let sq = move || (1..=m, 1..=n).prop_map(|(c, r)| Square::new(c, r));
        (sq(), sq(), sq(), any::<bool>()).prop_map(move |(wk, wr, bk, white)| {
            let stm = if white { Side::White } else { Side::Black };
            (Dims::new(m, n).unwrap(), Position::new(wk, wr, bk, stm))
        })
    })
}

proptest! {
    #[test]
    fn index_round_trip((dims, p) in arb_position()) {
        let idx = rules::index_of(dims, &p).unwrap();
        prop_assert!(idx < dims.index_len());
        match rules::position_of(dims, idx) {
            Ok(q) => { prop_assert!(p.is_valid(dims)); prop_assert_eq!(q, p); }
            Err(_) => prop_assert!(!p.is_valid(dims)),
        }
    }

    #[test]
    fn mirror_is_an_involution((dims, p) in arb_position(), rows in any::<bool>()) {
        let axis = if rows { Axis::Rows } else { Axis::Columns };
        let q = rules::mirror(dims, &p, axis);
        prop_assert_eq!(rules::mirror(dims, &q, axis), p);
        prop_assert_eq!(q.is_valid(dims), p.is_valid(dims));
    }
}
