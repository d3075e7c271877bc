//! Retrograde solver for KRK on one board size, plus the on-disk format.
//!
//! Values are stored as distance-to-mate in plies. A White-to-move win is
//! always an odd number of plies, a Black-to-move loss an even one.
//!
//! File layout (little-endian):
//!
//! ```text
//! magic "KRKTB1\0\0"       8 bytes
//! format version           u16 (= 1)
//! m, n                     u16, u16
//! convention flags         u8  (bit 0: plies metric)
//! reserved                 7 zero bytes
//! values                   2 * (m*n)^3 x u16 (0xFFFF illegal, 0xFFFE draw, else plies)
//! digest algorithm         u8  (1 = SHA-256)
//! digest                   32 bytes over everything above
//! ```

use std::fmt;
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::rules::{
    self, decode_index, for_each_move, for_each_predecessor, raw_index, Dims, Move, MoveOutcome,
    Position, RulesError, Side, Terminal,
};

pub const MAGIC: [u8; 8] = *b"KRKTB1\0\0";
pub const FORMAT_VERSION: u16 = 1;
pub const GENERATOR_VERSION: u16 = 1;
pub const FLAG_PLIES: u8 = 0x01;
pub const DIGEST_SHA256: u8 = 1;
/// Default bound on `m * n` for generation.
pub const DEFAULT_CAP: usize = 400;

const HEADER_LEN: usize = 22;
const TRAILER_LEN: usize = 33;

const RAW_ILLEGAL: u16 = 0xFFFF;
const RAW_DRAW: u16 = 0xFFFE;
const RAW_UNKNOWN: u16 = 0xFFFD;

#[derive(Debug, Error)]
pub enum TablebaseError {
    #[error(
        "board {dims} exceeds the generation cap of {cap} squares ({required_bytes} bytes required)"
    )]
    Resource {
        dims: Dims,
        cap: usize,
        required_bytes: u64,
    },
    #[error("table is for {table}, position given for {requested}")]
    DimsMismatch { table: Dims, requested: Dims },
    #[error("value is not a win")]
    NotAWin,
    #[error("position is terminal ({0:?})")]
    Terminal(Terminal),
    #[error("corrupt tablebase file: {0}")]
    Corrupt(String),
    #[error("unsupported tablebase format: {0}")]
    UnsupportedFormat(String),
    #[error(transparent)]
    Rules(#[from] RulesError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Game-theoretic value of a position from White's point of view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "status", content = "plies", rename_all = "lowercase")]
pub enum Value {
    Illegal,
    Draw,
    #[serde(rename = "win")]
    WinIn(u16),
}

impl Value {
    fn from_raw(raw: u16) -> Value {
        match raw {
            RAW_ILLEGAL => Value::Illegal,
            RAW_DRAW => Value::Draw,
            p => Value::WinIn(p),
        }
    }

    pub fn plies(self) -> Option<u16> {
        match self {
            Value::WinIn(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_win(self) -> bool {
        matches!(self, Value::WinIn(_))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Illegal => f.write_str("illegal"),
            Value::Draw => f.write_str("draw"),
            Value::WinIn(p) => write!(f, "win in {p} plies"),
        }
    }
}

/// Number of White moves until mate, the mating move included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WhiteMoveCount(pub u32);

pub fn white_moves(value: Value, stm: Side) -> Result<WhiteMoveCount, TablebaseError> {
    let plies = value.plies().ok_or(TablebaseError::NotAWin)? as u32;
    Ok(WhiteMoveCount(match stm {
        Side::White => plies.div_ceil(2),
        Side::Black => plies / 2,
    }))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableMeta {
    pub generator_version: u16,
    pub flags: u8,
    pub digest: [u8; 32],
}

#[derive(Debug, Clone, Copy)]
pub struct GenOptions {
    /// Upper bound on `m * n`.
    pub cap: usize,
    /// Worker threads; 0 uses the global rayon pool.
    pub threads: usize,
}

impl Default for GenOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_CAP,
            threads: 0,
        }
    }
}

/// Dense table of values for every index of one board size.
#[derive(Clone)]
pub struct Tablebase {
    dims: Dims,
    values: Vec<u16>,
    meta: TableMeta,
}

impl fmt::Debug for Tablebase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tablebase")
            .field("dims", &self.dims)
            .field("entries", &self.values.len())
            .field("meta", &self.meta)
            .finish()
    }
}

/// Bytes needed for the value array of `dims`.
pub fn required_bytes(dims: Dims) -> u64 {
    2 * dims.index_len() as u64
}

pub fn check_cap(dims: Dims, cap: usize) -> Result<(), TablebaseError> {
    if dims.area() > cap {
        return Err(TablebaseError::Resource {
            dims,
            cap,
            required_bytes: required_bytes(dims),
        });
    }
    Ok(())
}

pub fn generate(dims: Dims) -> Result<Tablebase, TablebaseError> {
    generate_with(dims, GenOptions::default())
}

pub fn generate_with(dims: Dims, opts: GenOptions) -> Result<Tablebase, TablebaseError> {
    check_cap(dims, opts.cap)?;
    if opts.threads == 0 {
        return Ok(solve(dims));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| io::Error::other(e.to_string()))?;
    Ok(pool.install(|| solve(dims)))
}

const CHUNK: usize = 1 << 14;

fn solve(dims: Dims) -> Tablebase {
    let len = dims.index_len();
    let half = len / 2;
    let mut values = vec![RAW_UNKNOWN; len];
    // Remaining unresolved replies for each Black-to-move index.
    let mut pending = vec![0u8; half];

    // Seed: classify every index, count Black's replies.
    {
        let (white, black) = values.split_at_mut(half);
        white.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            for (i, v) in chunk.iter_mut().enumerate() {
                let pos = decode_index(dims, c * CHUNK + i);
                if !pos.is_valid(dims) {
                    *v = RAW_ILLEGAL;
                }
            }
        });
        black
            .par_chunks_mut(CHUNK)
            .zip(pending.par_chunks_mut(CHUNK))
            .enumerate()
            .for_each(|(c, (chunk, counts))| {
                for (i, (v, count)) in chunk.iter_mut().zip(counts.iter_mut()).enumerate() {
                    let pos = decode_index(dims, half + c * CHUNK + i);
                    if !pos.is_valid(dims) {
                        *v = RAW_ILLEGAL;
                        continue;
                    }
                    let mut replies = 0u8;
                    let mut capture = false;
                    for_each_move(dims, &pos, |mv| {
                        replies += 1;
                        capture |= mv.captures_rook;
                    });
                    if capture {
                        *v = RAW_DRAW;
                    } else if replies == 0 {
                        *v = if rules::black_in_check(&pos) { 0 } else { RAW_DRAW };
                    } else {
                        *count = replies;
                    }
                }
            });
    }

    let mut frontier: Vec<usize> = values[half..]
        .par_iter()
        .enumerate()
        .filter(|(_, &v)| v == 0)
        .map(|(i, _)| half + i)
        .collect();

    let mut ply: u16 = 0;
    while !frontier.is_empty() {
        // Predecessor expansion is read-only and runs in parallel; the
        // updates are applied in frontier order.
        let preds: Vec<Vec<usize>> = frontier
            .par_chunks(1024)
            .map(|chunk| {
                let mut out = Vec::with_capacity(chunk.len() * 8);
                for &idx in chunk {
                    let pos = decode_index(dims, idx);
                    for_each_predecessor(dims, &pos, |q| out.push(raw_index(dims, &q)));
                }
                out
            })
            .collect();
        let next_ply = ply + 1;
        let mut next = Vec::new();
        for q in preds.into_iter().flatten() {
            if values[q] != RAW_UNKNOWN {
                continue;
            }
            if q < half {
                // White to move: the first winning child found is the fastest.
                values[q] = next_ply;
                next.push(q);
            } else {
                // Black to move: resolved once every reply is a loss.
                let count = &mut pending[q - half];
                *count -= 1;
                if *count == 0 {
                    values[q] = next_ply;
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        frontier = next;
        ply = next_ply;
    }

    values.par_iter_mut().for_each(|v| {
        if *v == RAW_UNKNOWN {
            *v = RAW_DRAW;
        }
    });

    Tablebase::from_values(dims, values)
}

impl Tablebase {
    fn from_values(dims: Dims, values: Vec<u16>) -> Tablebase {
        let mut tb = Tablebase {
            dims,
            values,
            meta: TableMeta {
                generator_version: GENERATOR_VERSION,
                flags: FLAG_PLIES,
                digest: [0; 32],
            },
        };
        let (_, digest) = tb.encode_body();
        tb.meta.digest = digest;
        tb
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn meta(&self) -> &TableMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value stored at a raw index.
    pub fn value_at(&self, index: usize) -> Result<Value, TablebaseError> {
        self.values
            .get(index)
            .map(|&raw| Value::from_raw(raw))
            .ok_or(TablebaseError::Rules(RulesError::IndexOutOfRange {
                index: index as u64,
                len: self.values.len() as u64,
            }))
    }

    pub fn probe(&self, pos: &Position) -> Result<Value, TablebaseError> {
        let idx = rules::index_of(self.dims, pos)?;
        Ok(Value::from_raw(self.values[idx]))
    }

    /// Like [`Tablebase::probe`] but checks the caller's board size first.
    pub fn probe_dims(&self, dims: Dims, pos: &Position) -> Result<Value, TablebaseError> {
        if dims != self.dims {
            return Err(TablebaseError::DimsMismatch {
                table: self.dims,
                requested: dims,
            });
        }
        self.probe(pos)
    }

    /// Value of the position reached by `mv`; a rook capture is a draw.
    pub fn child_value(&self, pos: &Position, mv: &Move) -> Value {
        match rules::play_unchecked(pos, mv) {
            MoveOutcome::RookCaptured => Value::Draw,
            MoveOutcome::Continue(child) => Value::from_raw(self.values[raw_index(self.dims, &child)]),
        }
    }

    /// Every legal move with the value after it, best first for the side
    /// to move. Ties keep the rules move order.
    pub fn best_moves(&self, pos: &Position) -> Result<Vec<(Move, Value)>, TablebaseError> {
        let term = rules::classify(self.dims, pos)?;
        if term != Terminal::Ongoing {
            return Err(TablebaseError::Terminal(term));
        }
        let mut annotated: Vec<(Move, Value)> = rules::legal_moves(self.dims, pos)?
            .into_iter()
            .map(|mv| (mv, self.child_value(pos, &mv)))
            .collect();
        match pos.stm {
            Side::White => annotated.sort_by_key(|(_, v)| match v {
                Value::WinIn(p) => (0, *p as i32),
                _ => (1, 0),
            }),
            Side::Black => annotated.sort_by_key(|(_, v)| match v {
                Value::WinIn(p) => (1, -(*p as i32)),
                _ => (0, 0),
            }),
        }
        Ok(annotated)
    }

    /// Serialized header plus values and the SHA-256 over them.
    fn encode_body(&self) -> (Vec<u8>, [u8; 32]) {
        let mut buf = Vec::with_capacity(HEADER_LEN + 2 * self.values.len() + TRAILER_LEN);
        buf.extend_from_slice(&MAGIC);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        buf.extend_from_slice(&self.dims.m().to_le_bytes());
        buf.extend_from_slice(&self.dims.n().to_le_bytes());
        buf.push(FLAG_PLIES);
        buf.extend_from_slice(&[0u8; 7]);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf.push(DIGEST_SHA256);
        let digest: [u8; 32] = Sha256::digest(&buf).into();
        (buf, digest)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let (mut buf, digest) = self.encode_body();
        buf.extend_from_slice(&digest);
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Tablebase, TablebaseError> {
        if bytes.len() < HEADER_LEN {
            return Err(TablebaseError::Corrupt(format!(
                "file is {} bytes, shorter than the header",
                bytes.len()
            )));
        }
        if bytes[..8] != MAGIC {
            return Err(TablebaseError::UnsupportedFormat("bad magic bytes".into()));
        }
        let u16_at = |at: usize| u16::from_le_bytes([bytes[at], bytes[at + 1]]);
        let version = u16_at(8);
        if version != FORMAT_VERSION {
            return Err(TablebaseError::UnsupportedFormat(format!(
                "format version {version}"
            )));
        }
        let dims = Dims::new(u16_at(10), u16_at(12))
            .map_err(|e| TablebaseError::Corrupt(e.to_string()))?;
        let flags = bytes[14];
        if flags != FLAG_PLIES {
            return Err(TablebaseError::UnsupportedFormat(format!(
                "convention flags {flags:#04x}"
            )));
        }
        let count = dims.index_len();
        let expected = HEADER_LEN + 2 * count + TRAILER_LEN;
        if bytes.len() != expected {
            return Err(TablebaseError::Corrupt(format!(
                "expected {expected} bytes for {dims}, found {}",
                bytes.len()
            )));
        }
        let algo_at = HEADER_LEN + 2 * count;
        if bytes[algo_at] != DIGEST_SHA256 {
            return Err(TablebaseError::UnsupportedFormat(format!(
                "digest algorithm {}",
                bytes[algo_at]
            )));
        }
        let digest: [u8; 32] = Sha256::digest(&bytes[..=algo_at]).into();
        if digest[..] != bytes[algo_at + 1..] {
            return Err(TablebaseError::Corrupt("digest mismatch".into()));
        }
        let values = bytes[HEADER_LEN..algo_at]
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect();
        Ok(Tablebase {
            dims,
            values,
            meta: TableMeta {
                generator_version: GENERATOR_VERSION,
                flags,
                digest,
            },
        })
    }

    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        w.write_all(&self.to_bytes())
    }

    pub fn read_from(mut r: impl Read) -> Result<Tablebase, TablebaseError> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Tablebase::from_bytes(&bytes)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TablebaseError> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Tablebase, TablebaseError> {
        Tablebase::from_bytes(&fs::read(path)?)
    }
}

/// Conventional file name for a table inside a cache directory.
pub fn file_name(dims: Dims) -> String {
    format!("krk_{}x{}.tb", dims.m(), dims.n())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{start_position, Square};

    fn d(m: u16, n: u16) -> Dims {
        Dims::new(m, n).unwrap()
    }

    fn sq(c: u16, r: u16) -> Square {
        Square::new(c, r)
    }

    #[test]
    fn white_move_conversion() {
        assert_eq!(white_moves(Value::WinIn(17), Side::White).unwrap(), WhiteMoveCount(9));
        assert_eq!(white_moves(Value::WinIn(0), Side::Black).unwrap(), WhiteMoveCount(0));
        assert_eq!(white_moves(Value::WinIn(18), Side::Black).unwrap(), WhiteMoveCount(9));
        assert!(matches!(
            white_moves(Value::Draw, Side::White),
            Err(TablebaseError::NotAWin)
        ));
        assert!(white_moves(Value::Illegal, Side::Black).is_err());
    }

    #[test]
    fn small_board_start_value() {
        let dims = d(4, 5);
        let tb = generate(dims).unwrap();
        let v = tb.probe(&start_position(dims).unwrap()).unwrap();
        assert_eq!(v, Value::WinIn(9));
        assert_eq!(white_moves(v, Side::White).unwrap(), WhiteMoveCount(5));
    }

    #[test]
    fn mates_are_zero_and_unguarded_rook_draws() {
        let dims = d(5, 5);
        let tb = generate(dims).unwrap();
        for idx in 0..dims.index_len() {
            let Ok(pos) = rules::position_of(dims, idx) else {
                assert_eq!(tb.value_at(idx).unwrap(), Value::Illegal);
                continue;
            };
            if rules::classify(dims, &pos).unwrap() == Terminal::Checkmate {
                assert_eq!(tb.value_at(idx).unwrap(), Value::WinIn(0), "{pos}");
            }
        }
        let hanging = Position::new(sq(1, 1), sq(4, 4), sq(5, 5), Side::Black);
        assert_eq!(tb.probe(&hanging).unwrap(), Value::Draw);
    }

    #[test]
    fn cap_is_enforced() {
        let dims = d(21, 20);
        match generate(dims) {
            Err(TablebaseError::Resource { required_bytes, .. }) => {
                assert_eq!(required_bytes, 2 * 2 * 420u64.pow(3));
            }
            other => panic!("expected resource error, got {other:?}"),
        }
    }

    #[test]
    fn probe_checks_dims() {
        let tb = generate(d(4, 5)).unwrap();
        let other = d(5, 5);
        assert!(matches!(
            tb.probe_dims(other, &start_position(other).unwrap()),
            Err(TablebaseError::DimsMismatch { .. })
        ));
    }

    #[test]
    fn best_moves_order() {
        let dims = d(5, 5);
        let tb = generate(dims).unwrap();
        let hanging = Position::new(sq(1, 1), sq(4, 4), sq(5, 5), Side::Black);
        let best = tb.best_moves(&hanging).unwrap();
        assert!(best[0].0.captures_rook);
        assert_eq!(best[0].1, Value::Draw);

        let start = start_position(dims).unwrap();
        let best = tb.best_moves(&start).unwrap();
        let plies: Vec<_> = best.iter().map(|(_, v)| v.plies().unwrap_or(u16::MAX)).collect();
        assert!(plies.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn best_moves_rejects_terminal() {
        let dims = d(8, 9);
        let tb = generate(dims).unwrap();
        let mate = Position::new(sq(7, 7), sq(6, 9), sq(8, 9), Side::Black);
        assert_eq!(tb.probe(&mate).unwrap(), Value::WinIn(0));
        assert!(matches!(
            tb.best_moves(&mate),
            Err(TablebaseError::Terminal(Terminal::Checkmate))
        ));
    }

    #[test]
    fn file_errors() {
        let tb = generate(d(3, 4)).unwrap();
        let bytes = tb.to_bytes();
        assert!(matches!(
            Tablebase::from_bytes(&bytes[..bytes.len() - 5]),
            Err(TablebaseError::Corrupt(_))
        ));
        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            Tablebase::from_bytes(&bad_magic),
            Err(TablebaseError::UnsupportedFormat(_))
        ));
        let mut bad_version = bytes.clone();
        bad_version[8] = 2;
        assert!(matches!(
            Tablebase::from_bytes(&bad_version),
            Err(TablebaseError::UnsupportedFormat(_))
        ));
        let mut flipped = bytes.clone();
        flipped[HEADER_LEN + 10] ^= 1;
        assert!(matches!(
            Tablebase::from_bytes(&flipped),
            Err(TablebaseError::Corrupt(_))
        ));
        let back = Tablebase::from_bytes(&bytes).unwrap();
        assert_eq!(back.values, tb.values);
        assert_eq!(back.meta, tb.meta);
    }
}
