//! `krk` command line. [`dispatch`] takes argv plus the three standard
//! streams and returns the process exit code, so tests drive it in memory.
//!
//! Exit codes: 0 success, 1 verification failure (or any other runtime
//! failure), 2 usage error, 3 resource error.

mod play;

use std::io::{BufRead, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use krk_core::policies::{play_from, GameEnd, GameTrace, Policy};
use krk_core::rules::{self, start_position, MoveOutcome};
use krk_core::tablebase::{self, white_moves, GenOptions, TablebaseError, DEFAULT_CAP};
use krk_core::verify::{self, g_value, TheoremTarget};
use krk_core::{Dims, Position, Side, Square, Tablebase, Value};
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
    Resource(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Failure(_) => EXIT_FAILURE,
            CliError::Resource(_) => EXIT_RESOURCE,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Failure(m) | CliError::Resource(m) => m,
        }
    }
}

impl From<TablebaseError> for CliError {
    fn from(e: TablebaseError) -> Self {
        match e {
            TablebaseError::Resource { .. } => CliError::Resource(e.to_string()),
            TablebaseError::Rules(r) => CliError::Usage(r.to_string()),
            e => CliError::Failure(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

type CliResult<T = i32> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "krk", version, about = "King and rook versus king on m x n boards")]
pub struct Cli {
    /// Machine-readable output: to FILE if given, otherwise to stdout.
    #[arg(long, global = true, value_name = "FILE", num_args = 0..=1)]
    json: Option<Option<PathBuf>>,
    /// Largest board area (m*n) a table may be generated for.
    #[arg(long, global = true, default_value_t = DEFAULT_CAP)]
    cap: usize,
    /// Directory of prebuilt tables; generated tables are saved there too.
    #[arg(long = "tb-dir", global = true, env = "KRK_TB_DIR", value_name = "DIR")]
    tb_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate tablebase files.
    Gen {
        #[command(flatten)]
        board: BoardArgs,
        /// Output file (one board) or directory (several boards).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Check every claim on a grid of boards.
    Verify {
        #[command(flatten)]
        board: BoardArgs,
    },
    /// Value of one position.
    Probe {
        #[command(flatten)]
        board: BoardArgs,
        #[command(flatten)]
        pos: PositionArgs,
        /// Read the table from this file instead of generating it.
        #[arg(long)]
        tb: Option<PathBuf>,
    },
    /// Every legal first move from the start with its best-play total.
    FirstMoves {
        #[command(flatten)]
        board: BoardArgs,
        #[arg(long)]
        tb: Option<PathBuf>,
    },
    /// Optimal line from the start, optionally after a fixed first move.
    BestLine {
        #[command(flatten)]
        board: BoardArgs,
        /// White's first move as "c,r:c,r".
        #[arg(long, value_name = "MOVE")]
        first_move: Option<String>,
        #[arg(long)]
        tb: Option<PathBuf>,
    },
    /// Play against the engine in the terminal.
    Play {
        #[command(flatten)]
        board: BoardArgs,
        /// Side the human plays.
        #[arg(long, value_enum, default_value_t = SideArg::B)]
        human: SideArg,
        #[arg(long, value_enum, default_value_t = PolicyArg::Scripted)]
        policy: PolicyArg,
        #[arg(long)]
        tb: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = krk_api::DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
}

#[derive(Debug, Args)]
struct BoardArgs {
    /// Columns, a single value or an inclusive range "a..b".
    #[arg(long, alias = "m-range", value_parser = parse_range)]
    m: RangeInclusive<u16>,
    /// Rows, a single value or an inclusive range "a..b".
    #[arg(long, alias = "n-range", value_parser = parse_range)]
    n: RangeInclusive<u16>,
}

impl BoardArgs {
    fn single(&self) -> CliResult<Dims> {
        if self.m.start() != self.m.end() || self.n.start() != self.n.end() {
            return Err(CliError::Usage("this command takes a single board, not a range".into()));
        }
        Dims::new(*self.m.start(), *self.n.start()).map_err(|e| CliError::Usage(e.to_string()))
    }

    fn boards(&self) -> CliResult<Vec<Dims>> {
        let mut out = Vec::new();
        for m in self.m.clone() {
            for n in self.n.clone() {
                out.push(Dims::new(m, n).map_err(|e| CliError::Usage(e.to_string()))?);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Args)]
struct PositionArgs {
    #[arg(long, value_parser = parse_square)]
    wk: Square,
    #[arg(long, value_parser = parse_square)]
    wr: Square,
    #[arg(long, value_parser = parse_square)]
    bk: Square,
    #[arg(long, value_enum, default_value_t = SideArg::W)]
    stm: SideArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SideArg {
    #[value(alias = "white")]
    W,
    #[value(alias = "black")]
    B,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Side {
        match s {
            SideArg::W => Side::White,
            SideArg::B => Side::Black,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Scripted,
    Optimal,
}

/// Parses `"a"`, `"a..b"` or `"a..=b"`.
pub fn parse_range(s: &str) -> Result<RangeInclusive<u16>, String> {
    let num = |t: &str| t.trim().parse::<u16>().map_err(|e| format!("bad number {t:?}: {e}"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?),
        None => {
            let v = num(s)?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(format!("empty range {s:?}"));
    }
    Ok(lo..=hi)
}

fn parse_square(s: &str) -> Result<Square, String> {
    s.parse()
}

/// Runs the command line and returns the exit code. Diagnostics go to `err`.
pub fn dispatch<I, T>(
    argv: I,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{rendered}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{rendered}");
                EXIT_OK
            };
        }
    };
    match run(cli, input, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "krk: {}", e.message());
            e.code()
        }
    }
}

struct Ctx {
    json: Option<Option<PathBuf>>,
    cap: usize,
    tb_dir: Option<PathBuf>,
}

impl Ctx {
    fn json_stdout(&self) -> bool {
        matches!(self.json, Some(None))
    }

    /// Writes `value` where `--json` asked for it. Returns true when the
    /// human-readable output should be suppressed.
    fn emit_json<S: Serialize>(&self, value: &S, out: &mut dyn Write) -> CliResult<bool> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Failure(e.to_string()))?;
        match &self.json {
            None => Ok(false),
            Some(None) => {
                writeln!(out, "{text}")?;
                Ok(true)
            }
            Some(Some(path)) => {
                std::fs::write(path, text + "\n")
                    .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))?;
                Ok(false)
            }
        }
    }

    /// Table from `--tb`, then from the table directory, otherwise generated
    /// (and saved to the table directory when one is set).
    fn table(&self, dims: Dims, tb: Option<&Path>) -> CliResult<Arc<Tablebase>> {
        if let Some(path) = tb {
            let t = Tablebase::load(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            if t.dims() != dims {
                return Err(CliError::Usage(format!(
                    "{} holds a {} table, not {dims}",
                    path.display(),
                    t.dims()
                )));
            }
            return Ok(Arc::new(t));
        }
        tablebase::check_cap(dims, self.cap)?;
        if let Some(dir) = &self.tb_dir {
            let path = dir.join(tablebase::file_name(dims));
            if path.exists() {
                if let Ok(t) = Tablebase::load(&path) {
                    if t.dims() == dims {
                        return Ok(Arc::new(t));
                    }
                }
            }
            let t = tablebase::generate_with(dims, GenOptions { cap: self.cap, threads: 0 })?;
            if std::fs::create_dir_all(dir).is_ok() {
                let _ = t.save(&path);
            }
            return Ok(Arc::new(t));
        }
        Ok(Arc::new(tablebase::generate_with(dims, GenOptions { cap: self.cap, threads: 0 })?))
    }
}

fn run(cli: Cli, input: &mut dyn BufRead, out: &mut dyn Write) -> CliResult {
    let ctx = Ctx {
        json: cli.json,
        cap: cli.cap,
        tb_dir: cli.tb_dir,
    };
    match cli.command {
        Command::Gen { board, out: dest, threads } => gen(&ctx, &board, dest, threads, out),
        Command::Verify { board } => verify_grid(&ctx, &board, out),
        Command::Probe { board, pos, tb } => probe(&ctx, board.single()?, &pos, tb.as_deref(), out),
        Command::FirstMoves { board, tb } => first_moves(&ctx, board.single()?, tb.as_deref(), out),
        Command::BestLine { board, first_move, tb } => {
            best_line(&ctx, board.single()?, first_move.as_deref(), tb.as_deref(), out)
        }
        Command::Play { board, human, policy, tb } => {
            let dims = board.single()?;
            let engine_policy = match policy {
                PolicyArg::Scripted => play::EnginePolicy::Scripted,
                PolicyArg::Optimal => play::EnginePolicy::Optimal,
            };
            let human = Side::from(human);
            let engine_white = human == Side::Black;
            if engine_policy == play::EnginePolicy::Scripted && engine_white {
                TheoremTarget::new(dims).map_err(|e| CliError::Usage(e.to_string()))?;
            }
            start_position(dims).map_err(|e| CliError::Usage(e.to_string()))?;
            let table = match engine_policy {
                play::EnginePolicy::Optimal => Some(ctx.table(dims, tb.as_deref())?),
                play::EnginePolicy::Scripted => None,
            };
            let trace = play::play(dims, human, engine_policy, table, input, out)?;
            if let Some(trace) = trace {
                if ctx.json.is_some() {
                    ctx.emit_json(&trace, out)?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::Serve { port, host } => serve(&ctx, host, port, out),
    }
}

#[derive(Debug, Serialize)]
struct GenSummary {
    m: u16,
    n: u16,
    path: PathBuf,
    entries: usize,
    wins: usize,
    draws: usize,
    illegal: usize,
    longest_plies: u16,
    sha256: String,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn gen(ctx: &Ctx, board: &BoardArgs, dest: Option<PathBuf>, threads: usize, out: &mut dyn Write) -> CliResult {
    let boards = board.boards()?;
    for &d in &boards {
        tablebase::check_cap(d, ctx.cap)?;
    }
    let single = boards.len() == 1;
    let dir = match (&dest, single) {
        (Some(p), false) => p.clone(),
        (None, _) => ctx.tb_dir.clone().unwrap_or_else(|| PathBuf::from(".")),
        (Some(_), true) => PathBuf::new(),
    };
    let mut summaries = Vec::new();
    for d in boards {
        let tb = tablebase::generate_with(d, GenOptions { cap: ctx.cap, threads })?;
        let path = match (&dest, single) {
            (Some(p), true) => p.clone(),
            _ => dir.join(tablebase::file_name(d)),
        };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        tb.save(&path)
            .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))?;
        let mut s = GenSummary {
            m: d.m(),
            n: d.n(),
            path,
            entries: tb.len(),
            wins: 0,
            draws: 0,
            illegal: 0,
            longest_plies: 0,
            sha256: hex(&tb.meta().digest),
        };
        for i in 0..tb.len() {
            match tb.value_at(i)? {
                Value::Illegal => s.illegal += 1,
                Value::Draw => s.draws += 1,
                Value::WinIn(p) => {
                    s.wins += 1;
                    s.longest_plies = s.longest_plies.max(p);
                }
            }
        }
        if !ctx.json_stdout() {
            writeln!(
                out,
                "wrote {}: {} entries, {} wins, {} draws, {} illegal, longest win {} plies, sha256 {}",
                s.path.display(),
                s.entries,
                s.wins,
                s.draws,
                s.illegal,
                s.longest_plies,
                s.sha256
            )?;
        }
        summaries.push(s);
    }
    ctx.emit_json(&summaries, out)?;
    Ok(EXIT_OK)
}

fn verify_grid(ctx: &Ctx, board: &BoardArgs, out: &mut dyn Write) -> CliResult {
    let boards = board.boards()?;
    for &d in &boards {
        TheoremTarget::new(d).map_err(|e| CliError::Usage(e.to_string()))?;
        tablebase::check_cap(d, ctx.cap)?;
    }
    let suite = verify::run_suite(board.m.clone(), board.n.clone(), GenOptions { cap: ctx.cap, threads: 0 });
    if !ctx.emit_json(&suite, out)? {
        for r in &suite.reports {
            writeln!(out, "{}", r.line())?;
        }
        for e in &suite.summary.errors {
            writeln!(out, "ERROR {}x{}: {}", e.m, e.n, e.message)?;
        }
        let s = &suite.summary;
        writeln!(
            out,
            "{} claims on {} boards: {} passed, {} hard failures, {} soft misses, {} errors",
            s.claims,
            boards.len(),
            s.passed,
            s.hard_failures,
            s.soft_misses,
            s.errors.len()
        )?;
    }
    if suite.summary.errors.iter().any(|e| e.resource) {
        return Ok(EXIT_RESOURCE);
    }
    Ok(if suite.success() { EXIT_OK } else { EXIT_FAILURE })
}

#[derive(Debug, Serialize)]
struct ProbeOut {
    m: u16,
    n: u16,
    position: Position,
    status: &'static str,
    plies: Option<u16>,
    white_moves: Option<u32>,
}

fn describe(v: Value, stm: Side) -> String {
    match v {
        Value::WinIn(p) => {
            let wm = white_moves(v, stm).map(|c| c.0).unwrap_or_default();
            format!("win in {wm} White moves ({p} plies)")
        }
        Value::Draw => "draw".into(),
        Value::Illegal => "illegal".into(),
    }
}

fn probe(ctx: &Ctx, dims: Dims, args: &PositionArgs, tb: Option<&Path>, out: &mut dyn Write) -> CliResult {
    let pos = Position::new(args.wk, args.wr, args.bk, args.stm.into());
    pos.validate(dims).map_err(|e| CliError::Usage(format!("{pos}: {e}")))?;
    let table = ctx.table(dims, tb)?;
    let v = table.probe(&pos)?;
    let report = ProbeOut {
        m: dims.m(),
        n: dims.n(),
        position: pos,
        status: krk_api::wire::status_of(v),
        plies: v.plies(),
        white_moves: white_moves(v, pos.stm).ok().map(|c| c.0),
    };
    if !ctx.emit_json(&report, out)? {
        writeln!(out, "{}", describe(v, pos.stm))?;
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct FirstMovesOut {
    m: u16,
    n: u16,
    g: u32,
    moves: Vec<verify::FirstMove>,
    report: verify::ClaimReport,
}

fn first_moves(ctx: &Ctx, dims: Dims, tb: Option<&Path>, out: &mut dyn Write) -> CliResult {
    TheoremTarget::new(dims).map_err(|e| CliError::Usage(e.to_string()))?;
    let table = ctx.table(dims, tb)?;
    let (mut moves, report) = verify::sweep_first_moves(&table).map_err(|e| CliError::Failure(e.to_string()))?;
    moves.sort_by_key(|f| f.total.unwrap_or(u32::MAX));
    let summary = FirstMovesOut {
        m: dims.m(),
        n: dims.n(),
        g: g_value(dims.n()),
        moves,
        report,
    };
    if !ctx.emit_json(&summary, out)? {
        writeln!(out, "first White moves on {dims}, total White moves with best play after:")?;
        for f in &summary.moves {
            let total = f.total.map_or_else(|| "draw".to_string(), |t| t.to_string());
            writeln!(out, "  {} {}: {total}", f.mv.piece.code(), f.mv.to)?;
        }
        writeln!(out, "{}", summary.report.line())?;
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct BestLineOut {
    m: u16,
    n: u16,
    first_move: Option<String>,
    white_moves: u32,
    terminal: GameEnd,
    moves: Vec<String>,
    trace: GameTrace,
}

fn best_line(
    ctx: &Ctx,
    dims: Dims,
    first: Option<&str>,
    tb: Option<&Path>,
    out: &mut dyn Write,
) -> CliResult {
    let start = start_position(dims).map_err(|e| CliError::Usage(e.to_string()))?;
    let opening = match first {
        Some(s) => {
            let (from, to) = rules::parse_from_to(s).map_err(CliError::Usage)?;
            let mv = rules::find_move(dims, &start, from, to)
                .map_err(|_| CliError::Usage(format!("{s} is not a legal first move on {dims}")))?;
            Some(mv)
        }
        None => None,
    };
    let table = ctx.table(dims, tb)?;
    let white = Policy::optimal_white(table.clone());
    let black = Policy::optimal_black(table.clone());
    let budget = 4 * (dims.m() as u32 + dims.n() as u32) + 8;
    let policy_err = |e: krk_core::policies::PolicyError| CliError::Failure(e.to_string());
    let trace = match opening {
        None => play_from(dims, start, &white, &black, budget).map_err(policy_err)?,
        Some(mv) => match rules::apply_move(dims, &start, &mv).map_err(|e| CliError::Usage(e.to_string()))? {
            MoveOutcome::RookCaptured => unreachable!("White never captures"),
            MoveOutcome::Continue(next) => {
                let mut t = play_from(dims, next, &white, &black, budget).map_err(policy_err)?;
                t.positions.insert(0, start);
                t.moves.insert(0, mv);
                t.white_move_count += 1;
                t
            }
        },
    };
    let summary = BestLineOut {
        m: dims.m(),
        n: dims.n(),
        first_move: opening.map(|m| m.coords()),
        white_moves: trace.white_move_count,
        terminal: trace.terminal,
        moves: trace.moves.iter().map(|m| m.to_string()).collect(),
        trace,
    };
    if !ctx.emit_json(&summary, out)? {
        write!(out, "{}", summary.trace.notation())?;
        match summary.terminal {
            GameEnd::Checkmate => writeln!(out, "checkmate in {} White moves", summary.white_moves)?,
            GameEnd::Stalemate => writeln!(out, "stalemate after {} White moves", summary.white_moves)?,
            GameEnd::RookCaptured => writeln!(out, "rook captured after {} White moves: draw", summary.white_moves)?,
            GameEnd::Unfinished => writeln!(out, "no mate within {} White moves: draw", summary.white_moves)?,
        }
    }
    Ok(EXIT_OK)
}

fn serve(ctx: &Ctx, host: std::net::IpAddr, port: u16, out: &mut dyn Write) -> CliResult {
    let config = krk_api::ApiConfig {
        cap: ctx.cap,
        tb_dir: ctx.tb_dir.clone(),
        ..Default::default()
    };
    let addr = std::net::SocketAddr::new(host, port);
    writeln!(out, "serving on http://{addr}/v1")?;
    out.flush()?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(krk_api::serve(addr, config))
        .map_err(|e| CliError::Resource(format!("cannot serve on {addr}: {e}")))?;
    Ok(EXIT_OK)
}
