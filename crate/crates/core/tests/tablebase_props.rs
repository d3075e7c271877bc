mod common;

use std::sync::OnceLock;

use common::{all_positions, forward_table};
use krk_core::rules::{self, Axis, Terminal};
use krk_core::tablebase::{self, GenOptions, Tablebase};
use krk_core::{Dims, Position, Side, Square, Value};
use proptest::prelude::*;

fn dims(m: u16, n: u16) -> Dims {
    Dims::new(m, n).unwrap()
}

fn oracle_agrees(d: Dims) {
    let tb = tablebase::generate(d).unwrap();
    let oracle = forward_table(d);
    let mut checked = 0;
    for (p, dtm) in &oracle {
        let expected = match dtm {
            Some(k) => Value::WinIn(*k),
            None => Value::Draw,
        };
        assert_eq!(tb.probe(p).unwrap(), expected, "{d} {p}");
        checked += 1;
    }
    let valid = (0..d.index_len())
        .filter(|&i| tb.value_at(i).unwrap() != Value::Illegal)
        .count();
    assert_eq!(checked, valid);
}

#[test]
fn retrograde_equals_forward_search_4x5() {
    oracle_agrees(dims(4, 5));
}

#[test]
fn retrograde_equals_forward_search_3x5() {
    oracle_agrees(dims(3, 5));
}

fn local_consistency(tb: &Tablebase) {
    let d = tb.dims();
    for p in all_positions(d) {
        let v = tb.probe(&p).unwrap();
        let term = rules::classify(d, &p).unwrap();
        if term != Terminal::Ongoing {
            let expect = if term == Terminal::Checkmate { Value::WinIn(0) } else { Value::Draw };
            assert_eq!(v, expect, "{p}");
            continue;
        }
        let children: Vec<Value> = rules::legal_moves(d, &p)
            .unwrap()
            .iter()
            .map(|mv| tb.child_value(&p, mv))
            .collect();
        let wins: Vec<u16> = children.iter().filter_map(|c| c.plies()).collect();
        let any_draw = children.contains(&Value::Draw);
        match (p.stm, v) {
            (Side::White, Value::WinIn(k)) => {
                assert_eq!(k % 2, 1, "{p}");
                assert_eq!(wins.iter().min().copied(), Some(k - 1), "{p}");
            }
            (Side::Black, Value::WinIn(k)) => {
                assert_eq!(k % 2, 0, "{p}");
                assert!(!any_draw, "{p}");
                assert_eq!(wins.iter().max().copied(), Some(k - 1), "{p}");
            }
            (Side::White, Value::Draw) => assert!(wins.is_empty(), "{p}"),
            (Side::Black, Value::Draw) => assert!(any_draw, "{p}"),
            (_, Value::Illegal) => panic!("valid position stored as illegal: {p}"),
        }
        if let Value::WinIn(k) = v {
            assert!(k <= 2 * (d.m() + d.n()) * 4);
        }
    }
}

#[test]
fn local_consistency_full_scan() {
    for (m, n) in [(4, 5), (5, 6), (6, 5)] {
        local_consistency(&tablebase::generate(dims(m, n)).unwrap());
    }
}

#[test]
fn mirror_symmetry_of_values() {
    for (m, n) in [(4, 5), (5, 6)] {
        let d = dims(m, n);
        let tb = tablebase::generate(d).unwrap();
        for p in all_positions(d) {
            let v = tb.probe(&p).unwrap();
            for axis in [Axis::Columns, Axis::Rows] {
                assert_eq!(tb.probe(&rules::mirror(d, &p, axis)).unwrap(), v, "{p} {axis:?}");
            }
        }
    }
}

#[test]
fn generation_is_independent_of_worker_count() {
    for (m, n) in [(5, 6), (7, 7)] {
        let d = dims(m, n);
        let one = tablebase::generate_with(d, GenOptions { threads: 1, ..Default::default() }).unwrap();
        let many = tablebase::generate_with(d, GenOptions { threads: 8, ..Default::default() }).unwrap();
        assert_eq!(one.to_bytes(), many.to_bytes());
        assert_eq!(one.meta().digest, many.meta().digest);
    }
}

#[test]
fn file_round_trip() {
    let d = dims(4, 5);
    let tb = tablebase::generate(d).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(tablebase::file_name(d));
    tb.save(&path).unwrap();
    let raw = std::fs::read(&path).unwrap();
    assert_eq!(&raw[..8], b"KRKTB1\0\0");
    assert_eq!(raw.len(), 22 + 2 * d.index_len() + 33);
    let back = Tablebase::load(&path).unwrap();
    assert_eq!(back.to_bytes(), raw);
    assert_eq!(back.dims(), d);
    for i in 0..d.index_len() {
        assert_eq!(back.value_at(i).unwrap(), tb.value_at(i).unwrap());
    }
}

fn table_6x7() -> &'static Tablebase {
    static TB: OnceLock<Tablebase> = OnceLock::new();
    TB.get_or_init(|| tablebase::generate(dims(6, 7)).unwrap())
}

proptest! {
    #[test]
    fn probe_is_mirror_invariant(wk in (1u16..=6, 1u16..=7), wr in (1u16..=6, 1u16..=7), bk in (1u16..=6, 1u16..=7), white in any::<bool>()) {
        let d = dims(6, 7);
        let stm = if white { Side::White } else { Side::Black };
        let p = Position::new(Square::new(wk.0, wk.1), Square::new(wr.0, wr.1), Square::new(bk.0, bk.1), stm);
        prop_assume!(p.is_valid(d));
        let tb = table_6x7();
        let v = tb.probe(&p).unwrap();
        prop_assert_eq!(tb.probe(&rules::mirror(d, &p, Axis::Columns)).unwrap(), v);
        prop_assert_eq!(tb.probe(&rules::mirror(d, &p, Axis::Rows)).unwrap(), v);
        if let Value::WinIn(k) = v {
            prop_assert_eq!(k % 2 == 1, stm == Side::White);
        }
    }
}
