//! Mechanical checks of the fastest-mate results for KRK from the standard
//! start (WK on `(m,1)`, WR on `(1,1)`, BK on `(m,n)`, White to move).
//!
//! Every check produces a [`ClaimReport`]. Hard claims decide the suite's
//! exit status; soft claims are measurements that are recorded but never
//! fail a run.

use std::ops::RangeInclusive;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policies::{
    play_out, scripted_white, GameEnd, GameTrace, Policy, PolicyError, ScriptState,
};
use crate::rules::{self, start_position, Dims, Move, MoveOutcome, Position, Side, Square, Terminal};
use crate::tablebase::{self, white_moves, GenOptions, Tablebase, TablebaseError, Value};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("{0} is outside the theorem's scope (m >= 4, n >= 5)")]
    OutOfScope(Dims),
    #[error("tablebase is for {table}, expected {expected}")]
    WrongTable { table: Dims, expected: Dims },
    #[error(transparent)]
    Tablebase(#[from] TablebaseError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Rules(#[from] rules::RulesError),
}

/// `n` for odd `n`, `n + 1` for even `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TheoremTarget {
    pub m: u16,
    pub n: u16,
    pub g: u32,
}

impl TheoremTarget {
    pub fn new(dims: Dims) -> Result<Self, VerifyError> {
        let (m, n) = (dims.m(), dims.n());
        if m < 4 || n < 5 {
            return Err(VerifyError::OutOfScope(dims));
        }
        Ok(Self { m, n, g: g_value(n) })
    }
}

pub fn g_value(n: u16) -> u32 {
    let n = n as u32;
    if n % 2 == 1 {
        n
    } else {
        n + 1
    }
}

/// `2 + (n - 3) + (ceil(m / 2) - 1)`: rook twice, king up the board, then
/// the chase back to the corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Case1Bound {
    pub b1: u32,
}

impl Case1Bound {
    pub fn new(dims: Dims) -> Self {
        let (m, n) = (dims.m() as u32, dims.n() as u32);
        Self {
            b1: 2 + (n - 3) + (m.div_ceil(2) - 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expected {
    /// Exactly this many White moves.
    Eq(u32),
    /// At least this many.
    Ge(u32),
}

impl Expected {
    pub fn holds(self, observed: Option<u32>) -> bool {
        match (self, observed) {
            (Expected::Eq(e), Some(o)) => o == e,
            (Expected::Ge(e), Some(o)) => o >= e,
            (_, None) => false,
        }
    }
}

impl std::fmt::Display for Expected {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Expected::Eq(v) => write!(f, "= {v}"),
            Expected::Ge(v) => write!(f, ">= {v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimReport {
    pub claim_id: String,
    pub m: u16,
    pub n: u16,
    pub expected: Expected,
    /// White moves; `None` when the observed outcome is not a win.
    pub observed: Option<u32>,
    pub pass: bool,
    pub hard: bool,
    pub details: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<GameTrace>,
}

impl ClaimReport {
    fn new(claim_id: &str, dims: Dims, expected: Expected, observed: Option<u32>, details: String) -> Self {
        Self {
            claim_id: claim_id.to_string(),
            m: dims.m(),
            n: dims.n(),
            expected,
            observed,
            pass: expected.holds(observed),
            hard: true,
            details,
            trace: None,
        }
    }

    fn soft(mut self) -> Self {
        self.hard = false;
        self
    }

    fn with_trace_on_failure(mut self, trace: GameTrace) -> Self {
        if !self.pass {
            self.trace = Some(trace);
        }
        self
    }

    /// One human-readable line.
    pub fn line(&self) -> String {
        let verdict = match (self.pass, self.hard) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "MISS",
        };
        let observed = self
            .observed
            .map_or_else(|| "none".to_string(), |o| o.to_string());
        format!(
            "{verdict} {:>2}x{:<2} {:<22} expected {:<5} observed {:<4} {}",
            self.m,
            self.n,
            self.claim_id,
            self.expected.to_string(),
            observed,
            self.details
        )
    }
}

fn check_table(tb: &Tablebase) -> Result<TheoremTarget, VerifyError> {
    TheoremTarget::new(tb.dims())
}

/// Total White moves after White plays `mv` from `pos` with best play
/// thereafter, counting `mv` itself. `None` for a draw.
pub fn total_after(tb: &Tablebase, pos: &Position, mv: &Move) -> Option<u32> {
    white_moves(tb.child_value(pos, mv), Side::Black)
        .ok()
        .map(|c| c.0 + 1)
}

fn fmt_total(total: Option<u32>) -> String {
    total.map_or_else(|| "draw".to_string(), |t| t.to_string())
}

pub fn verify_theorem(tb: &Tablebase) -> Result<ClaimReport, VerifyError> {
    let target = check_table(tb)?;
    let dims = tb.dims();
    let value = tb.probe(&start_position(dims)?)?;
    let observed = white_moves(value, Side::White).ok().map(|c| c.0);
    let details = match value {
        Value::WinIn(p) => format!("start position wins in {p} plies"),
        other => format!("start position evaluates to {other}"),
    };
    Ok(ClaimReport::new("theorem", dims, Expected::Eq(target.g), observed, details))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FirstMove {
    #[serde(rename = "move")]
    pub mv: Move,
    /// White moves to mate including this one; `None` if it throws the win.
    pub total: Option<u32>,
}

/// Every legal first move from the start with its best-play total, and
/// whether rook to `(m-1,1)` attains the minimum `G(m,n)`.
pub fn sweep_first_moves(tb: &Tablebase) -> Result<(Vec<FirstMove>, ClaimReport), VerifyError> {
    let target = check_table(tb)?;
    let dims = tb.dims();
    let start = start_position(dims)?;
    let sweep: Vec<FirstMove> = rules::legal_moves(dims, &start)?
        .into_iter()
        .map(|mv| FirstMove {
            total: total_after(tb, &start, &mv),
            mv,
        })
        .collect();
    let best = sweep.iter().filter_map(|f| f.total).min();
    let confine_to = Square::new(dims.m() - 1, 1);
    let confine = sweep
        .iter()
        .find(|f| f.mv.from == start.wr && f.mv.to == confine_to)
        .and_then(|f| f.total);
    let attaining: Vec<String> = sweep
        .iter()
        .filter(|f| f.total.is_some() && f.total == best)
        .map(|f| f.mv.to_string())
        .collect();
    let mut report = ClaimReport::new(
        "first-move-optimal",
        dims,
        Expected::Eq(target.g),
        confine,
        format!(
            "rook to {confine_to} totals {}; minimum {} attained by {} move(s): {}",
            fmt_total(confine),
            fmt_total(best),
            attaining.len(),
            attaining.join(" ")
        ),
    );
    report.pass = report.pass && confine == best;
    Ok((sweep, report))
}

fn rook_first_move(
    tb: &Tablebase,
    claim_id: &str,
    to: Square,
    expected: Expected,
) -> Result<ClaimReport, VerifyError> {
    let dims = tb.dims();
    let start = start_position(dims)?;
    let mv = rules::find_move(dims, &start, start.wr, to)?;
    let total = total_after(tb, &start, &mv);
    Ok(ClaimReport::new(
        claim_id,
        dims,
        expected,
        total,
        format!("best play after {mv}"),
    ))
}

/// Minimum total over the first rook moves that go up column 1.
pub fn verify_case1_bound(tb: &Tablebase) -> Result<Vec<ClaimReport>, VerifyError> {
    check_table(tb)?;
    let dims = tb.dims();
    let start = start_position(dims)?;
    let b1 = Case1Bound::new(dims).b1;
    let n = dims.n() as u32;
    let mut totals = Vec::new();
    for row in 2..=dims.n() {
        let mv = rules::find_move(dims, &start, start.wr, Square::new(1, row))?;
        totals.push((row, total_after(tb, &start, &mv)));
    }
    let best = totals.iter().filter_map(|(_, t)| *t).min();
    let listing: Vec<String> = totals
        .iter()
        .map(|(row, t)| format!("(1,{row}):{}", fmt_total(*t)))
        .collect();
    let mut out = vec![
        ClaimReport::new(
            "case1-bound",
            dims,
            Expected::Ge(n),
            best,
            format!("vertical first rook moves {}", listing.join(" ")),
        ),
        ClaimReport::new(
            "case1-formula-ge-n",
            dims,
            Expected::Ge(n),
            Some(b1),
            format!("2+(n-3)+(ceil(m/2)-1) = {b1}"),
        ),
        ClaimReport::new(
            "case1-formula",
            dims,
            Expected::Eq(b1),
            best,
            format!(
                "best vertical total {} {} formula {b1}",
                fmt_total(best),
                if best == Some(b1) { "equals" } else { "differs from" }
            ),
        )
        .soft(),
    ];
    if (dims.m(), dims.n()) == (9, 9) {
        out.push(rook_first_move(tb, "case1-9x9-rook-1-8", Square::new(1, 8), Expected::Eq(12))?);
    }
    Ok(out)
}

/// Minimum total over first rook moves along row 1, excluding `(m-1,1)`.
pub fn verify_case2_bound(tb: &Tablebase) -> Result<ClaimReport, VerifyError> {
    check_table(tb)?;
    let dims = tb.dims();
    let start = start_position(dims)?;
    let mut totals = Vec::new();
    for col in 2..dims.m() {
        if col == dims.m() - 1 {
            continue;
        }
        let mv = rules::find_move(dims, &start, start.wr, Square::new(col, 1))?;
        totals.push((col, total_after(tb, &start, &mv)));
    }
    let best = totals.iter().filter_map(|(_, t)| *t).min();
    let listing: Vec<String> = totals
        .iter()
        .map(|(col, t)| format!("({col},1):{}", fmt_total(*t)))
        .collect();
    // All horizontal moves drawing would also satisfy the bound.
    let observed = if totals.iter().all(|(_, t)| t.is_none()) {
        Some(u32::MAX)
    } else {
        best
    };
    Ok(ClaimReport::new(
        "case2-bound",
        dims,
        Expected::Ge(dims.n() as u32),
        observed,
        format!("horizontal first rook moves {}", listing.join(" ")),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlackDefence {
    Optimal,
    Heuristic,
}

/// Tablebase-optimal White against the given Black defence.
pub fn survival_of(tb: &Arc<Tablebase>, defence: BlackDefence) -> Result<ClaimReport, VerifyError> {
    let target = check_table(tb)?;
    let dims = tb.dims();
    let white = Policy::optimal_white(tb.clone());
    let (black, claim, expected) = match defence {
        BlackDefence::Optimal => (
            Policy::optimal_black(tb.clone()),
            "survival-optimal",
            Expected::Eq(target.g),
        ),
        BlackDefence::Heuristic => (
            Policy::heuristic_black(),
            "survival-heuristic",
            Expected::Ge(target.g - 1),
        ),
    };
    let budget = 4 * (dims.m() as u32 + dims.n() as u32);
    let trace = play_out(dims, &white, &black, budget)?;
    let observed = (trace.terminal == GameEnd::Checkmate).then_some(trace.white_move_count);
    let report = ClaimReport::new(
        claim,
        dims,
        expected,
        observed,
        format!(
            "{:?} after {} White moves; Black survived {} moves before the mate",
            trace.terminal,
            trace.white_move_count,
            trace.white_move_count.saturating_sub(1)
        ),
    );
    let report = if defence == BlackDefence::Heuristic {
        report.soft()
    } else {
        report
    };
    Ok(report.with_trace_on_failure(trace))
}

/// Summary of the scripted-strategy game tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptTree {
    pub leaves: u64,
    pub max_depth: u32,
    pub max_waiting: u32,
    pub failure: Option<(String, GameTrace)>,
}

struct Walker {
    dims: Dims,
    depth_cap: u32,
    positions: Vec<Position>,
    moves: Vec<Move>,
    tree: ScriptTree,
}

impl Walker {
    fn fail(&mut self, reason: String, terminal: GameEnd, waiting: u32) {
        if self.tree.failure.is_none() {
            let white_moves = self.moves.iter().filter(|m| m.piece.side() == Side::White).count();
            self.tree.failure = Some((
                reason,
                GameTrace {
                    dims: self.dims,
                    positions: self.positions.clone(),
                    moves: self.moves.clone(),
                    terminal,
                    white_move_count: white_moves as u32,
                    waiting_moves_used: waiting,
                },
            ));
        }
    }

    /// White to move at `depth` completed White moves.
    fn white(&mut self, pos: Position, state: ScriptState, depth: u32) {
        if self.tree.failure.is_some() {
            return;
        }
        if depth >= self.depth_cap {
            self.fail(format!("no mate within {depth} White moves"), GameEnd::Unfinished, state.waiting_moves_used);
            return;
        }
        let (mv, next) = match scripted_white(self.dims, &pos, state) {
            Ok(r) => r,
            Err(e) => {
                self.fail(e.to_string(), GameEnd::Unfinished, state.waiting_moves_used);
                return;
            }
        };
        self.tree.max_waiting = self.tree.max_waiting.max(next.waiting_moves_used);
        let child = match rules::apply_move(self.dims, &pos, &mv) {
            Ok(MoveOutcome::Continue(c)) => c,
            Ok(MoveOutcome::RookCaptured) | Err(_) => {
                self.fail(format!("scripted move {mv} is illegal"), GameEnd::Unfinished, next.waiting_moves_used);
                return;
            }
        };
        self.moves.push(mv);
        self.positions.push(child);
        self.black(child, next, depth + 1);
        self.moves.pop();
        self.positions.pop();
    }

    fn black(&mut self, pos: Position, state: ScriptState, depth: u32) {
        if self.tree.failure.is_some() {
            return;
        }
        match rules::classify(self.dims, &pos) {
            Ok(Terminal::Checkmate) => {
                self.tree.leaves += 1;
                self.tree.max_depth = self.tree.max_depth.max(depth);
                return;
            }
            Ok(Terminal::Ongoing) => {}
            Ok(t) => {
                self.fail(format!("line ends in {t:?}"), GameEnd::Stalemate, state.waiting_moves_used);
                return;
            }
            Err(e) => {
                self.fail(e.to_string(), GameEnd::Unfinished, state.waiting_moves_used);
                return;
            }
        }
        let replies = rules::legal_moves(self.dims, &pos).unwrap_or_default();
        for reply in replies {
            self.moves.push(reply);
            match rules::apply_move(self.dims, &pos, &reply) {
                Ok(MoveOutcome::Continue(child)) => {
                    self.positions.push(child);
                    self.white(child, state, depth);
                    self.positions.pop();
                }
                _ => self.fail("Black captures the rook".into(), GameEnd::RookCaptured, state.waiting_moves_used),
            }
            self.moves.pop();
            if self.tree.failure.is_some() {
                return;
            }
        }
    }
}

/// Walks every Black defence against the scripted White procedure.
pub fn explore_script(dims: Dims) -> Result<ScriptTree, VerifyError> {
    let target = TheoremTarget::new(dims)?;
    let start = start_position(dims)?;
    let mut walker = Walker {
        dims,
        depth_cap: target.g + 4,
        positions: vec![start],
        moves: Vec::new(),
        tree: ScriptTree {
            leaves: 0,
            max_depth: 0,
            max_waiting: 0,
            failure: None,
        },
    };
    walker.white(start, ScriptState::new(), 0);
    Ok(walker.tree)
}

pub fn verify_scripted_exhaustive(dims: Dims) -> Result<ClaimReport, VerifyError> {
    let target = TheoremTarget::new(dims)?;
    let tree = explore_script(dims)?;
    let (observed, details, trace) = match tree.failure {
        Some((reason, trace)) => (None, format!("failed: {reason}"), Some(trace)),
        None => (
            Some(tree.max_depth),
            format!(
                "{} defence lines, all mate; at most {} waiting move(s) per line",
                tree.leaves, tree.max_waiting
            ),
            None,
        ),
    };
    let mut report = ClaimReport::new("scripted-exhaustive", dims, Expected::Eq(target.g), observed, details);
    if tree.max_waiting > 1 {
        report.pass = false;
        report.details.push_str("; more than one waiting move");
    }
    report.trace = trace;
    Ok(report)
}

/// The 8x8 first-move comparison: the rook to the edge of the board versus
/// the rook next to the White king's file.
pub fn verify_standard_board(tb: &Tablebase) -> Result<Vec<ClaimReport>, VerifyError> {
    let dims = tb.dims();
    if (dims.m(), dims.n()) != (8, 8) {
        return Ok(Vec::new());
    }
    let start = start_position(dims)?;
    let fastest = white_moves(tb.probe(&start)?, Side::White).ok().map(|c| c.0);
    let b1 = Case1Bound::new(dims).b1;
    Ok(vec![
        ClaimReport::new(
            "8x8-fastest",
            dims,
            Expected::Eq(9),
            fastest,
            "fastest mate from the start".into(),
        ),
        rook_first_move(tb, "8x8-rook-7-1", Square::new(7, 1), Expected::Eq(9))?,
        {
            let mut r = rook_first_move(tb, "8x8-rook-1-7", Square::new(1, 7), Expected::Eq(10))?;
            r.details.push_str(&format!("; vertical-case formula gives {b1}"));
            r
        },
    ])
}

/// All checks for one board.
pub fn verify_board(tb: &Arc<Tablebase>) -> Result<Vec<ClaimReport>, VerifyError> {
    let dims = tb.dims();
    let mut out = vec![verify_theorem(tb)?];
    out.push(sweep_first_moves(tb)?.1);
    out.push(verify_scripted_exhaustive(dims)?);
    out.extend(verify_case1_bound(tb)?);
    out.push(verify_case2_bound(tb)?);
    out.push(survival_of(tb, BlackDefence::Optimal)?);
    out.push(survival_of(tb, BlackDefence::Heuristic)?);
    out.extend(verify_standard_board(tb)?);
    out.sort_by(|a, b| a.claim_id.cmp(&b.claim_id));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellError {
    pub m: u16,
    pub n: u16,
    pub resource: bool,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub claims: usize,
    pub passed: usize,
    pub hard_failures: usize,
    pub soft_misses: usize,
    pub errors: Vec<CellError>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub reports: Vec<ClaimReport>,
    pub summary: Summary,
}

impl SuiteReport {
    /// True when no hard claim failed and every cell ran.
    pub fn success(&self) -> bool {
        self.summary.hard_failures == 0 && self.summary.errors.is_empty()
    }
}

/// Runs every check on each board of the grid. Boards run in parallel and
/// the reports are merged in `(m, n, claim_id)` order.
pub fn run_suite(
    m_range: RangeInclusive<u16>,
    n_range: RangeInclusive<u16>,
    opts: GenOptions,
) -> SuiteReport {
    let cells: Vec<(u16, u16)> = m_range
        .flat_map(|m| n_range.clone().map(move |n| (m, n)))
        .collect();
    let results: Vec<Result<Vec<ClaimReport>, CellError>> = cells
        .par_iter()
        .map(|&(m, n)| run_cell(m, n, opts))
        .collect();
    let mut suite = SuiteReport::default();
    for r in results {
        match r {
            Ok(reports) => suite.reports.extend(reports),
            Err(e) => suite.summary.errors.push(e),
        }
    }
    suite
        .reports
        .sort_by(|a, b| (a.m, a.n, &a.claim_id).cmp(&(b.m, b.n, &b.claim_id)));
    let s = &mut suite.summary;
    s.claims = suite.reports.len();
    s.passed = suite.reports.iter().filter(|r| r.pass).count();
    s.hard_failures = suite.reports.iter().filter(|r| r.hard && !r.pass).count();
    s.soft_misses = suite.reports.iter().filter(|r| !r.hard && !r.pass).count();
    suite
}

fn run_cell(m: u16, n: u16, opts: GenOptions) -> Result<Vec<ClaimReport>, CellError> {
    let err = |resource: bool, message: String| CellError {
        m,
        n,
        resource,
        message,
    };
    let dims = Dims::new(m, n).map_err(|e| err(false, e.to_string()))?;
    TheoremTarget::new(dims).map_err(|e| err(false, e.to_string()))?;
    let tb = tablebase::generate_with(dims, GenOptions { threads: 0, ..opts }).map_err(|e| {
        let resource = matches!(e, TablebaseError::Resource { .. });
        err(resource, e.to_string())
    })?;
    verify_board(&Arc::new(tb)).map_err(|e| err(false, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tablebase::generate;

    fn tb(m: u16, n: u16) -> Arc<Tablebase> {
        Arc::new(generate(Dims::new(m, n).unwrap()).unwrap())
    }

    #[test]
    fn g_and_b1() {
        assert_eq!(g_value(9), 9);
        assert_eq!(g_value(8), 9);
        assert_eq!(Case1Bound::new(Dims::new(9, 9).unwrap()).b1, 12);
        assert_eq!(Case1Bound::new(Dims::new(8, 8).unwrap()).b1, 10);
        assert!(TheoremTarget::new(Dims::new(4, 4).unwrap()).is_err());
    }

    #[test]
    fn theorem_small() {
        let r = verify_theorem(&tb(4, 5)).unwrap();
        assert_eq!((r.observed, r.pass), (Some(5), true));
    }

    #[test]
    fn scripted_tree_5x6() {
        let tree = explore_script(Dims::new(5, 6).unwrap()).unwrap();
        assert!(tree.failure.is_none());
        assert_eq!(tree.max_depth, 7);
        assert_eq!(tree.max_waiting, 1);
        let tree = explore_script(Dims::new(4, 5).unwrap()).unwrap();
        assert_eq!((tree.max_depth, tree.max_waiting), (5, 0));
    }

    #[test]
    fn case_bounds_4x5() {
        let t = tb(4, 5);
        let c1 = verify_case1_bound(&t).unwrap();
        assert!(c1.iter().filter(|r| r.hard).all(|r| r.pass), "{c1:?}");
        let c2 = verify_case2_bound(&t).unwrap();
        assert!(c2.pass, "{c2:?}");
    }

    #[test]
    fn expected_semantics() {
        assert!(Expected::Eq(9).holds(Some(9)));
        assert!(!Expected::Eq(9).holds(Some(10)));
        assert!(Expected::Ge(8).holds(Some(12)));
        assert!(!Expected::Ge(8).holds(None));
    }

    #[test]
    fn empty_grid() {
        #[allow(clippy::reversed_empty_ranges)]
        let s = run_suite(5..=4, 5..=8, GenOptions::default());
        assert!(s.reports.is_empty());
        assert!(s.success());
    }

    #[test]
    fn out_of_scope_cells_are_errors() {
        let s = run_suite(3..=3, 5..=5, GenOptions::default());
        assert_eq!(s.summary.errors.len(), 1);
        assert!(!s.success());
    }

    #[test]
    fn resource_errors_do_not_abort() {
        let s = run_suite(4..=4, 5..=5, GenOptions { cap: 10, threads: 0 });
        assert!(s.summary.errors[0].resource);
    }
}
