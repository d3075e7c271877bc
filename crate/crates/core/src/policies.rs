//! Move-selection strategies.
//!
//! * [`scripted_white`]: the confine / march / finish procedure that mates
//!   from the standard start in `n` (odd `n`) or `n + 1` (even `n`) moves.
//! * [`black_heuristic`]: Black heads for the centre and stays away from the
//!   white king.
//! * [`optimal_move`]: tablebase-perfect play for either side.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rules::{
    self, find_move, start_position, Dims, Move, MoveOutcome, Position, RulesError, Side,
    Square, Terminal,
};
use crate::tablebase::{Tablebase, TablebaseError};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("off script: {reason}")]
    OffScript { reason: String },
    #[error("off script after {} plies: {reason}", trace.moves.len())]
    OffScriptTrace { reason: String, trace: Box<GameTrace> },
    #[error("position is terminal ({0:?})")]
    Terminal(Terminal),
    #[error("{policy:?} cannot move for {side}")]
    WrongSide { policy: PolicyKind, side: Side },
    #[error("policy needs a tablebase for {dims}")]
    MissingTable { dims: Dims },
    #[error("scripted play needs m >= 4 and n >= 5, got {0}")]
    OutOfScope(Dims),
    #[error(transparent)]
    Rules(#[from] RulesError),
    #[error(transparent)]
    Tablebase(#[from] TablebaseError),
}

fn off_script(reason: impl Into<String>) -> PolicyError {
    PolicyError::OffScript {
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "phase", content = "step", rename_all = "lowercase")]
pub enum Phase {
    Confine,
    March,
    /// Next step of the three-move finish.
    Finish(u8),
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScriptState {
    pub phase: Phase,
    pub waiting_moves_used: u32,
}

impl Default for ScriptState {
    fn default() -> Self {
        Self::new()
    }
}

impl ScriptState {
    pub fn new() -> Self {
        Self {
            phase: Phase::Confine,
            waiting_moves_used: 0,
        }
    }

    /// Reconstructs the phase from the board alone, for callers that do not
    /// carry state between moves. The waiting-move count is not recoverable
    /// and is reported as zero.
    pub fn infer(dims: Dims, pos: &Position) -> ScriptState {
        let (m, n) = (dims.m(), dims.n());
        let phase = if start_position(dims).ok() == Some(*pos) {
            Phase::Confine
        } else if pos.wr.col == m - 1 && pos.wk == Square::new(m, n - 3) && pos.bk == Square::new(m, n) {
            Phase::Finish(1)
        } else if pos.wr.col == m - 1
            && pos.wk == Square::new(m - 1, n - 2)
            && pos.bk == Square::new(m - 1, n)
        {
            Phase::Finish(2)
        } else if pos.wr.col == m - 2
            && pos.wk == Square::new(m - 1, n - 2)
            && pos.bk == Square::new(m, n)
        {
            Phase::Finish(3)
        } else {
            Phase::March
        };
        ScriptState {
            phase,
            waiting_moves_used: 0,
        }
    }
}

fn scripted_move(dims: Dims, pos: &Position, from: Square, to: Square) -> Result<Move, PolicyError> {
    find_move(dims, pos, from, to)
        .map_err(|_| off_script(format!("scripted move {from}-{to} is not legal in {pos}")))
}

/// One move of the scripted White procedure and the state to carry forward.
pub fn scripted_white(
    dims: Dims,
    pos: &Position,
    state: ScriptState,
) -> Result<(Move, ScriptState), PolicyError> {
    let (m, n) = (dims.m(), dims.n());
    if m < 4 || n < 5 {
        return Err(PolicyError::OutOfScope(dims));
    }
    pos.validate(dims)?;
    if pos.stm != Side::White {
        return Err(PolicyError::WrongSide {
            policy: PolicyKind::ScriptedWhite,
            side: pos.stm,
        });
    }
    let finish_trigger =
        pos.wk == Square::new(m, n - 3) && pos.bk == Square::new(m, n) && pos.wr.col == m - 1;
    let phase = match state.phase {
        Phase::March if finish_trigger => Phase::Finish(1),
        p => p,
    };
    let mut next = state;
    let mv = match phase {
        Phase::Confine => {
            if start_position(dims)? != *pos {
                return Err(off_script(format!("confinement expects the start position, got {pos}")));
            }
            next.phase = Phase::March;
            scripted_move(dims, pos, pos.wr, Square::new(m - 1, 1))?
        }
        Phase::March => {
            let rook_home = pos.wr == Square::new(m - 1, 1) || pos.wr == Square::new(m - 1, 2);
            if !rook_home
                || pos.wk.col != m
                || pos.bk.col != m
                || pos.bk.row <= pos.wk.row
                || pos.wk.row > n - 3
            {
                return Err(off_script(format!("march expects WK below BK on column {m}, got {pos}")));
            }
            let up = Square::new(m, pos.wk.row + 1);
            match find_move(dims, pos, pos.wk, up) {
                Ok(mv) => mv,
                Err(_) => {
                    // Waiting move: lose a tempo with the rook.
                    next.waiting_moves_used += 1;
                    let to = Square::new(m - 1, if pos.wr.row == 1 { 2 } else { 1 });
                    scripted_move(dims, pos, pos.wr, to)?
                }
            }
        }
        Phase::Finish(1) => {
            if !finish_trigger {
                return Err(off_script(format!("finish expects WK({m},{}) and BK({m},{n}), got {pos}", n - 3)));
            }
            next.phase = Phase::Finish(2);
            scripted_move(dims, pos, pos.wk, Square::new(m - 1, n - 2))?
        }
        Phase::Finish(2) => {
            if pos.wk != Square::new(m - 1, n - 2) || pos.bk != Square::new(m - 1, n) || pos.wr.col != m - 1 {
                return Err(off_script(format!("second finishing move does not apply to {pos}")));
            }
            next.phase = Phase::Finish(3);
            scripted_move(dims, pos, pos.wr, Square::new(m - 2, pos.wr.row))?
        }
        Phase::Finish(3) => {
            if pos.bk != Square::new(m, n) || pos.wr.col != m - 2 {
                return Err(off_script(format!("mating move does not apply to {pos}")));
            }
            next.phase = Phase::Done;
            scripted_move(dims, pos, pos.wr, Square::new(m - 2, n))?
        }
        Phase::Finish(step) => return Err(off_script(format!("no finishing step {step}"))),
        Phase::Done => return Err(off_script("script already delivered mate")),
    };
    Ok((mv, next))
}

/// Black's survival heuristic. Lexicographically maximizes
/// (rook capture, distance to the nearest edge, distance to the white king);
/// remaining ties go to the earliest move in rules order.
pub fn black_heuristic(dims: Dims, pos: &Position) -> Result<Move, PolicyError> {
    if pos.stm != Side::Black {
        return Err(PolicyError::WrongSide {
            policy: PolicyKind::HeuristicBlack,
            side: pos.stm,
        });
    }
    let moves = rules::legal_moves(dims, pos)?;
    let mut best: Option<(Move, (bool, u16, u16))> = None;
    for mv in moves {
        let key = (
            mv.captures_rook,
            dims.edge_distance(mv.to),
            mv.to.chebyshev(pos.wk),
        );
        if best.is_none_or(|(_, k)| key > k) {
            best = Some((mv, key));
        }
    }
    match best {
        Some((mv, _)) => Ok(mv),
        None => Err(PolicyError::Terminal(rules::classify(dims, pos)?)),
    }
}

/// Tablebase-best move for the side to move.
pub fn optimal_move(tb: &Tablebase, pos: &Position) -> Result<Move, PolicyError> {
    let best = tb.best_moves(pos).map_err(|e| match e {
        TablebaseError::Terminal(t) => PolicyError::Terminal(t),
        e => e.into(),
    })?;
    Ok(best[0].0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolicyKind {
    ScriptedWhite,
    HeuristicBlack,
    OptimalWhite,
    OptimalBlack,
}

impl PolicyKind {
    pub fn side(self) -> Side {
        match self {
            PolicyKind::ScriptedWhite | PolicyKind::OptimalWhite => Side::White,
            PolicyKind::HeuristicBlack | PolicyKind::OptimalBlack => Side::Black,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Policy {
    kind: PolicyKind,
    table: Option<Arc<Tablebase>>,
}

impl Policy {
    pub fn scripted_white() -> Self {
        Self {
            kind: PolicyKind::ScriptedWhite,
            table: None,
        }
    }

    pub fn heuristic_black() -> Self {
        Self {
            kind: PolicyKind::HeuristicBlack,
            table: None,
        }
    }

    pub fn optimal_white(tb: Arc<Tablebase>) -> Self {
        Self {
            kind: PolicyKind::OptimalWhite,
            table: Some(tb),
        }
    }

    pub fn optimal_black(tb: Arc<Tablebase>) -> Self {
        Self {
            kind: PolicyKind::OptimalBlack,
            table: Some(tb),
        }
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    fn check(&self, dims: Dims, side: Side) -> Result<(), PolicyError> {
        if self.kind.side() != side {
            return Err(PolicyError::WrongSide {
                policy: self.kind,
                side,
            });
        }
        match (self.kind, &self.table) {
            (PolicyKind::OptimalWhite | PolicyKind::OptimalBlack, Some(tb)) if tb.dims() != dims => {
                Err(PolicyError::MissingTable { dims })
            }
            (PolicyKind::OptimalWhite | PolicyKind::OptimalBlack, None) => {
                Err(PolicyError::MissingTable { dims })
            }
            _ => Ok(()),
        }
    }

    /// Picks a move; `state` is only read and advanced by the scripted policy.
    pub fn choose(
        &self,
        dims: Dims,
        pos: &Position,
        state: &mut ScriptState,
    ) -> Result<Move, PolicyError> {
        match self.kind {
            PolicyKind::ScriptedWhite => {
                let (mv, next) = scripted_white(dims, pos, *state)?;
                *state = next;
                Ok(mv)
            }
            PolicyKind::HeuristicBlack => black_heuristic(dims, pos),
            PolicyKind::OptimalWhite | PolicyKind::OptimalBlack => {
                let tb = self.table.as_ref().ok_or(PolicyError::MissingTable { dims })?;
                optimal_move(tb, pos)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GameEnd {
    Checkmate,
    Stalemate,
    RookCaptured,
    /// Move budget ran out before the game ended.
    Unfinished,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameTrace {
    pub dims: Dims,
    /// `positions[i]` is the position before `moves[i]`; one extra entry
    /// holds the final position unless the rook was captured.
    pub positions: Vec<Position>,
    pub moves: Vec<Move>,
    pub terminal: GameEnd,
    pub white_move_count: u32,
    pub waiting_moves_used: u32,
}

impl GameTrace {
    pub fn last_position(&self) -> Option<&Position> {
        self.positions.last()
    }

    /// Numbered move list, one full move per line.
    pub fn notation(&self) -> String {
        let mut out = String::new();
        for (i, pair) in self.moves.chunks(2).enumerate() {
            out.push_str(&format!("{:>3}. {}", i + 1, pair[0]));
            if let Some(b) = pair.get(1) {
                out.push_str(&format!("  {b}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Plays `white` against `black` from the start position until the game
/// ends or White has made `max_white_moves` moves.
pub fn play_out(
    dims: Dims,
    white: &Policy,
    black: &Policy,
    max_white_moves: u32,
) -> Result<GameTrace, PolicyError> {
    play_from(dims, start_position(dims)?, white, black, max_white_moves)
}

pub fn play_from(
    dims: Dims,
    start: Position,
    white: &Policy,
    black: &Policy,
    max_white_moves: u32,
) -> Result<GameTrace, PolicyError> {
    white.check(dims, Side::White)?;
    black.check(dims, Side::Black)?;
    let mut state = if start_position(dims).ok() == Some(start) {
        ScriptState::new()
    } else {
        ScriptState::infer(dims, &start)
    };
    let mut trace = GameTrace {
        dims,
        positions: vec![start],
        moves: Vec::new(),
        terminal: GameEnd::Unfinished,
        white_move_count: 0,
        waiting_moves_used: 0,
    };
    let mut pos = start;
    loop {
        match rules::classify(dims, &pos)? {
            Terminal::Checkmate => {
                trace.terminal = GameEnd::Checkmate;
                break;
            }
            Terminal::Stalemate => {
                trace.terminal = GameEnd::Stalemate;
                break;
            }
            _ => {}
        }
        if pos.stm == Side::White && trace.white_move_count >= max_white_moves {
            break;
        }
        let policy = if pos.stm == Side::White { white } else { black };
        let mv = match policy.choose(dims, &pos, &mut state) {
            Ok(mv) => mv,
            Err(PolicyError::OffScript { reason }) => {
                trace.waiting_moves_used = state.waiting_moves_used;
                return Err(PolicyError::OffScriptTrace {
                    reason,
                    trace: Box::new(trace),
                });
            }
            Err(e) => return Err(e),
        };
        if pos.stm == Side::White {
            trace.white_move_count += 1;
        }
        trace.moves.push(mv);
        match rules::apply_move(dims, &pos, &mv)? {
            MoveOutcome::Continue(next) => {
                trace.positions.push(next);
                pos = next;
            }
            MoveOutcome::RookCaptured => {
                trace.terminal = GameEnd::RookCaptured;
                break;
            }
        }
    }
    trace.waiting_moves_used = state.waiting_moves_used;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::Piece;
    use crate::tablebase::generate;

    fn d(m: u16, n: u16) -> Dims {
        Dims::new(m, n).unwrap()
    }

    fn sq(c: u16, r: u16) -> Square {
        Square::new(c, r)
    }

    #[test]
    fn confine_first() {
        let dims = d(9, 9);
        let start = start_position(dims).unwrap();
        let (mv, st) = scripted_white(dims, &start, ScriptState::new()).unwrap();
        assert_eq!((mv.piece, mv.from, mv.to), (Piece::WhiteRook, sq(1, 1), sq(8, 1)));
        assert_eq!(st.phase, Phase::March);
    }

    #[test]
    fn waiting_move_when_king_blocked() {
        let dims = d(5, 6);
        let pos = Position::new(sq(5, 2), sq(4, 1), sq(5, 4), Side::White);
        let state = ScriptState {
            phase: Phase::March,
            waiting_moves_used: 0,
        };
        let (mv, st) = scripted_white(dims, &pos, state).unwrap();
        assert_eq!((mv.from, mv.to), (sq(4, 1), sq(4, 2)));
        assert_eq!(st.waiting_moves_used, 1);
    }

    #[test]
    fn finish_starts_with_king_step() {
        let dims = d(8, 9);
        let pos = Position::new(sq(8, 6), sq(7, 1), sq(8, 9), Side::White);
        let state = ScriptState {
            phase: Phase::March,
            waiting_moves_used: 0,
        };
        let (mv, st) = scripted_white(dims, &pos, state).unwrap();
        assert_eq!((mv.piece, mv.to), (Piece::WhiteKing, sq(7, 7)));
        assert_eq!(st.phase, Phase::Finish(2));
        assert_eq!(ScriptState::infer(dims, &pos).phase, Phase::Finish(1));
    }

    #[test]
    fn off_script_is_reported() {
        let dims = d(8, 8);
        let pos = Position::new(sq(3, 3), sq(6, 6), sq(1, 8), Side::White);
        assert!(matches!(
            scripted_white(dims, &pos, ScriptState::new()),
            Err(PolicyError::OffScript { .. })
        ));
        let state = ScriptState {
            phase: Phase::March,
            waiting_moves_used: 0,
        };
        assert!(matches!(
            scripted_white(dims, &pos, state),
            Err(PolicyError::OffScript { .. })
        ));
    }

    #[test]
    fn scripted_needs_theorem_scope() {
        let dims = d(4, 4);
        let start = start_position(dims).unwrap();
        assert!(matches!(
            scripted_white(dims, &start, ScriptState::new()),
            Err(PolicyError::OutOfScope(_))
        ));
    }

    #[test]
    fn heuristic_follows_example_line() {
        let dims = d(9, 9);
        let p1 = Position::new(sq(9, 1), sq(1, 8), sq(9, 9), Side::Black);
        assert_eq!(black_heuristic(dims, &p1).unwrap().to, sq(8, 9));
        let p2 = Position::new(sq(8, 2), sq(1, 8), sq(8, 9), Side::Black);
        assert_eq!(black_heuristic(dims, &p2).unwrap().to, sq(7, 9));
    }

    #[test]
    fn heuristic_takes_hanging_rook() {
        let dims = d(8, 8);
        let pos = Position::new(sq(1, 1), sq(4, 4), sq(5, 5), Side::Black);
        assert!(black_heuristic(dims, &pos).unwrap().captures_rook);
    }

    #[test]
    fn optimal_moves() {
        let dims = d(9, 9);
        let tb = generate(dims).unwrap();
        let pos = Position::new(sq(9, 1), sq(8, 1), sq(9, 9), Side::Black);
        assert_eq!(optimal_move(&tb, &pos).unwrap().to, sq(9, 8));

        let small = d(5, 5);
        let tb5 = generate(small).unwrap();
        let hanging = Position::new(sq(1, 1), sq(4, 4), sq(5, 5), Side::Black);
        assert!(optimal_move(&tb5, &hanging).unwrap().captures_rook);
    }

    #[test]
    fn play_outs() {
        let dims = d(9, 9);
        let tb = Arc::new(generate(dims).unwrap());
        let trace = play_out(dims, &Policy::scripted_white(), &Policy::optimal_black(tb.clone()), 50).unwrap();
        assert_eq!(trace.terminal, GameEnd::Checkmate);
        assert_eq!(trace.white_move_count, 9);

        let dims = d(5, 6);
        let tb = Arc::new(generate(dims).unwrap());
        let trace = play_out(dims, &Policy::scripted_white(), &Policy::optimal_black(tb.clone()), 50).unwrap();
        assert_eq!(trace.terminal, GameEnd::Checkmate);
        assert_eq!(trace.white_move_count, 7);
        assert_eq!(trace.waiting_moves_used, 1);
    }

    #[test]
    fn optimal_pair_on_8x8() {
        let dims = d(8, 8);
        let tb = Arc::new(generate(dims).unwrap());
        let trace = play_out(dims, &Policy::optimal_white(tb.clone()), &Policy::optimal_black(tb), 50).unwrap();
        assert_eq!(trace.terminal, GameEnd::Checkmate);
        assert_eq!(trace.white_move_count, 9);
        assert_eq!(trace.moves[0].to, sq(7, 1));
    }

    #[test]
    fn policy_side_and_table_checks() {
        let dims = d(5, 5);
        let tb = Arc::new(generate(d(4, 5)).unwrap());
        assert!(matches!(
            play_out(dims, &Policy::optimal_white(tb), &Policy::heuristic_black(), 10),
            Err(PolicyError::MissingTable { .. })
        ));
        assert!(matches!(
            play_out(dims, &Policy::heuristic_black(), &Policy::heuristic_black(), 10),
            Err(PolicyError::WrongSide { .. })
        ));
    }

    #[test]
    fn budget_stops_game() {
        let dims = d(9, 9);
        let tb = Arc::new(generate(dims).unwrap());
        let trace = play_out(dims, &Policy::scripted_white(), &Policy::optimal_black(tb), 3).unwrap();
        assert_eq!(trace.terminal, GameEnd::Unfinished);
        assert_eq!(trace.white_move_count, 3);
    }
}
