//! Command-line interface.
//!
//! Four subcommands (`search`, `table`, `fidelity`, `verify`) wrap the
//! library. Every command writes its primary output file plus a
//! `<output>.manifest.json` [`RunManifest`] listing SHA-256 digests of what
//! was written.
//!
//! Exit codes: `0` success, `1` other failure, `2` usage, `3` search budget
//! exhausted without an incumbent, `4` invalid code file, `5` failed check.
//!
//! If `ADCODES_GRAPH_CACHE` names a directory, exact searches load and store
//! conflict graphs there.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::analysis::{
    fidelity_curve, first_order_residuals, FidelityCurve, DEFAULT_RESIDUAL_GAMMAS, FIRST_ORDER_THRESHOLD,
};
use crate::codeset::{build_conflict_graph, validate_code_set, CodeSet, ConflictGraph, ConflictMode};
use crate::error::Error;
use crate::recovery::{build_recovery, verify_recovery};
use crate::search::{
    exact_search_on_graph, rate_table, reference_table, regression_slope, search, SearchConfig, Strategy,
    DEFAULT_EXACT_LIMIT,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_INVALID_CODE: i32 = 4;
pub const EXIT_CHECK_FAILED: i32 = 5;

pub const GRAPH_CACHE_ENV: &str = "ADCODES_GRAPH_CACHE";

/// Largest number of points accepted in a `START:STEP:END` grid.
pub const MAX_GRID_POINTS: usize = 100_000;

const REFERENCE_SLOPE: f64 = 0.85;
const REFERENCE_SLOPE_TOL: f64 = 0.02;

#[derive(Parser, Debug)]
#[command(name = "adcodes", version, about = "Self-complementary codes for amplitude damping")]
struct Cli {
    /// Worker threads for parallel stages (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search for a code of length N and write it as JSON.
    Search(SearchArgs),
    /// Tabulate achieved code sizes over a range of lengths.
    Table(TableArgs),
    /// Fidelity of a code under damping plus recovery, against bare qubits.
    Fidelity(FidelityArgs),
    /// Validate a code, check its recoveries and fit first-order residuals.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct SearchArgs {
    n: usize,
    #[arg(long, default_value = "strict")]
    mode: ConflictMode,
    #[arg(long, default_value = "greedy-lex")]
    strategy: Strategy,
    /// Time budget in seconds for exact search.
    #[arg(long, default_value_t = 60.0)]
    budget: f64,
    /// Largest length accepted by exact search.
    #[arg(long, default_value_t = DEFAULT_EXACT_LIMIT)]
    exact_limit: usize,
    /// Defaults to `code_<n>_<mode>.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TableArgs {
    #[arg(long, default_value_t = 4)]
    from: usize,
    #[arg(long, default_value_t = 16)]
    to: usize,
    #[arg(long, default_value = "strict")]
    mode: ConflictMode,
    #[arg(long, default_value = "greedy-lex")]
    strategy: Strategy,
    /// Per-row time budget in seconds for exact search.
    #[arg(long, default_value_t = 60.0)]
    budget: f64,
    #[arg(long, default_value = "table.csv")]
    out: PathBuf,
    /// Also regress the bundled reference column and require a slope of 0.85 ± 0.02.
    #[arg(long)]
    check_reference: bool,
}

#[derive(Args, Debug)]
struct FidelityArgs {
    code: PathBuf,
    /// `START:STEP:END`, inclusive of END.
    #[arg(long, default_value = "0:0.02:0.5")]
    gamma_grid: String,
    /// Defaults to `<code stem>_fidelity.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    code: PathBuf,
    /// Damping strengths for the recovery checks.
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.05,0.1,0.3")]
    gammas: Vec<f64>,
    /// Sample points for the residual fits.
    #[arg(long, value_delimiter = ',')]
    residual_gammas: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Defaults to `<code stem>_verify.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Record of one CLI run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub params: serde_json::Value,
    pub version: String,
    pub wall_time_secs: f64,
    pub outputs: Vec<OutputDigest>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

impl RunManifest {
    /// Path of the manifest written for `output`.
    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::WordLength(_)
            | Error::LimitExceeded { .. }
            | Error::Config(_)
            | Error::Gamma(_)
            | Error::Parse(_) => EXIT_USAGE,
            Error::InvalidCode(_) => EXIT_INVALID_CODE,
            _ => EXIT_FAILURE,
        };
        Self::new(code, e.to_string())
    }
}

type CliResult = std::result::Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.threads {
        Some(0) => Err(Failure::new(EXIT_USAGE, "--threads must be positive")),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command)),
            Err(e) => Err(Failure::new(EXIT_FAILURE, e.to_string())),
        },
        None => dispatch(cli.command),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command) -> CliResult {
    let start = Instant::now();
    match command {
        Command::Search(a) => cmd_search(a, start),
        Command::Table(a) => cmd_table(a, start),
        Command::Fidelity(a) => cmd_fidelity(a, start),
        Command::Verify(a) => cmd_verify(a, start),
    }
}

fn budget(seconds: f64) -> std::result::Result<Duration, Failure> {
    Duration::try_from_secs_f64(seconds)
        .ok()
        .filter(|d| !d.is_zero())
        .ok_or_else(|| Failure::new(EXIT_USAGE, format!("invalid budget {seconds}")))
}

fn write_output(path: &Path, contents: &str) -> std::result::Result<OutputDigest, Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display())))?;
    Ok(OutputDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(contents.as_bytes()),
    })
}

fn write_manifest(
    primary: &Path,
    command: &str,
    params: serde_json::Value,
    start: Instant,
    outputs: Vec<OutputDigest>,
) -> std::result::Result<(), Failure> {
    let manifest = RunManifest {
        command: command.into(),
        params,
        version: env!("CARGO_PKG_VERSION").into(),
        wall_time_secs: start.elapsed().as_secs_f64(),
        outputs,
    };
    let mut text = serde_json::to_string_pretty(&manifest).map_err(Error::from)?;
    text.push('\n');
    let path = RunManifest::path_for(primary);
    std::fs::write(&path, text).map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display())))
}

fn default_beside(code: &Path, suffix: &str) -> PathBuf {
    let stem = code
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "code".into());
    code.with_file_name(format!("{stem}{suffix}"))
}

fn cmd_search(a: SearchArgs, start: Instant) -> CliResult {
    let mut config = SearchConfig::new(a.n, a.mode, a.strategy).with_budget(budget(a.budget)?);
    config.exact_limit = a.exact_limit;
    config.validate()?;
    let result = if a.strategy == Strategy::ExactBnB {
        let graph = cached_graph(a.n, a.mode)?;
        exact_search_on_graph(&config, &graph)?
    } else {
        search(&config)?
    };
    if result.k == 0 && !result.optimal {
        return Err(Failure::new(EXIT_BUDGET, "budget exhausted before any code was found"));
    }
    println!("n = {}", a.n);
    println!("k = {}", result.k);
    println!("log2 k = {:.6}", result.log2_k());
    println!("optimal = {}", result.optimal);

    let out = a
        .out
        .unwrap_or_else(|| PathBuf::from(format!("code_{}_{}.json", a.n, a.mode)));
    let digest = write_output(&out, &result.code.to_json()?)?;
    println!("wrote {}", out.display());
    let params = json!({
        "n": a.n,
        "mode": a.mode.to_string(),
        "strategy": a.strategy.to_string(),
        "budget_secs": a.budget,
        "exact_limit": a.exact_limit,
        "out": out.display().to_string(),
    });
    write_manifest(&out, "search", params, start, vec![digest])?;
    Ok(EXIT_OK)
}

fn cmd_table(a: TableArgs, start: Instant) -> CliResult {
    if a.from > a.to {
        return Err(Failure::new(
            EXIT_USAGE,
            format!("--from {} exceeds --to {}", a.from, a.to),
        ));
    }
    let config = SearchConfig::new(a.from, a.mode, a.strategy).with_budget(budget(a.budget)?);
    let report = rate_table(a.from, a.to, &config)?;

    println!("{:>3} {:>8} {:>10} {:>10}", "n", "k", "log2 k", "reference");
    for row in &report.rows {
        let reference = row.reference_k.map(|k| k.to_string()).unwrap_or_else(|| "-".into());
        match &row.result {
            Ok(r) => println!("{:>3} {:>8} {:>10.6} {:>10}", row.n, r.k, r.log2_k(), reference),
            Err(e) => println!("{:>3} {:>8} {:>10} {:>10}  failed: {e}", row.n, "-", "-", reference),
        }
    }
    match report.slope {
        Some(s) => println!("slope = {s:.6}"),
        None => println!("slope = n/a"),
    }

    let out = a.out.clone();
    let digest = write_output(&out, &report.to_csv())?;
    println!("wrote {}", out.display());
    let params = json!({
        "from": a.from,
        "to": a.to,
        "mode": a.mode.to_string(),
        "strategy": a.strategy.to_string(),
        "budget_secs": a.budget,
        "out": out.display().to_string(),
        "check_reference": a.check_reference,
    });
    write_manifest(&out, "table", params, start, vec![digest])?;

    if report.rows.iter().all(|r| r.result.is_err()) {
        return Err(Failure::new(EXIT_FAILURE, "no rows produced"));
    }
    if a.check_reference {
        let points: Vec<(f64, f64)> = reference_table()
            .into_iter()
            .map(|(n, k)| (n as f64, (k as f64).log2()))
            .collect();
        let slope = regression_slope(&points).unwrap_or(f64::NAN);
        let ok = (slope - REFERENCE_SLOPE).abs() <= REFERENCE_SLOPE_TOL;
        println!(
            "reference slope = {slope:.6} ({})",
            if ok { "ok" } else { "outside 0.85 ± 0.02" }
        );
        if !ok {
            return Ok(EXIT_CHECK_FAILED);
        }
    }
    Ok(EXIT_OK)
}

/// Parses `START:STEP:END`. `END` is included when it lies within `1e-12`
/// of a grid point.
pub fn parse_gamma_grid(text: &str) -> crate::Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, step, end] = parts.as_slice() else {
        return Err(Error::Parse(format!("grid `{text}` is not START:STEP:END")));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Parse(format!("bad number `{s}` in grid `{text}`")))
    };
    let (start, step, end) = (num(start)?, num(step)?, num(end)?);
    if step <= 0.0 || end < start {
        return Err(Error::Parse(format!("grid `{text}` needs STEP > 0 and END >= START")));
    }
    let count = ((end - start + 1e-12) / step).floor() + 1.0;
    if count > MAX_GRID_POINTS as f64 {
        return Err(Error::Parse(format!(
            "grid `{text}` has more than {MAX_GRID_POINTS} points"
        )));
    }
    Ok((0..count as usize)
        .map(|i| {
            let g = start + i as f64 * step;
            if (g - end).abs() <= 1e-12 {
                end
            } else {
                g
            }
        })
        .collect())
}

fn load_code(path: &Path) -> std::result::Result<CodeSet, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display())))?;
    let code =
        CodeSet::from_json(&text).map_err(|e| Failure::new(EXIT_INVALID_CODE, format!("{}: {e}", path.display())))?;
    let report = validate_code_set(&code);
    if !report.is_valid() {
        eprintln!("{report}");
        return Err(Failure::new(
            EXIT_INVALID_CODE,
            format!("{} is not a valid {} code", path.display(), code.mode()),
        ));
    }
    Ok(code)
}

/// Fit window for the printed deficit coefficients.
const FIT_WINDOW: (f64, f64) = (1e-3, 5e-2);

fn print_deficit_fit(curve: &FidelityCurve) {
    let in_window = curve
        .gammas
        .iter()
        .filter(|g| (FIT_WINDOW.0..=FIT_WINDOW.1).contains(*g))
        .count();
    let (lo, hi, count) = if in_window >= 2 {
        (FIT_WINDOW.0, FIT_WINDOW.1, in_window)
    } else {
        (
            0.0,
            curve.gammas.last().copied().unwrap_or(0.0),
            curve.gammas.iter().filter(|&&g| g > 0.0).count(),
        )
    };
    if count == 0 {
        println!("1 - F fit: no positive grid points");
        return;
    }
    match curve.deficit_fit(lo, hi, count.min(2)) {
        Ok(fit) => println!(
            "1 - F ≈ a1 γ + a2 γ² on [{lo}, {hi}]: a1 = {:.6e}, a2 = {:.6e}",
            fit.linear(),
            fit.quadratic()
        ),
        Err(e) => println!("1 - F fit failed: {e}"),
    }
}

fn cmd_fidelity(a: FidelityArgs, start: Instant) -> CliResult {
    let grid = parse_gamma_grid(&a.gamma_grid)?;
    let code = load_code(&a.code)?;
    let curve = fidelity_curve(&code, &grid)?;

    println!("code ({}, {}), {} grid points", code.n(), code.k(), grid.len());
    println!("baseline: {} bare qubits", curve.bare_qubit_count);
    print_deficit_fit(&curve);

    let out = a
        .out
        .clone()
        .unwrap_or_else(|| default_beside(&a.code, "_fidelity.csv"));
    let mut outputs = vec![write_output(&out, &curve.to_csv())?];
    println!("wrote {}", out.display());
    if let Some(svg) = &a.svg {
        let title = format!(
            "({}, {}) code versus {} bare qubits",
            code.n(),
            code.k(),
            curve.bare_qubit_count
        );
        outputs.push(write_output(svg, &curve.to_svg(&title))?);
        println!("wrote {}", svg.display());
    }
    let params = json!({
        "code": a.code.display().to_string(),
        "code_sha256": sha256_hex(code.to_json()?.as_bytes()),
        "gamma_grid": a.gamma_grid,
        "gammas": grid,
        "out": out.display().to_string(),
        "svg": a.svg.as_ref().map(|p| p.display().to_string()),
    });
    write_manifest(&out, "fidelity", params, start, outputs)?;
    Ok(EXIT_OK)
}

fn cmd_verify(a: VerifyArgs, start: Instant) -> CliResult {
    let code = load_code(&a.code)?;
    println!("code ({}, {}) in {} mode: valid", code.n(), code.k(), code.mode());
    let mut passed = true;

    let mut recoveries = Vec::new();
    for &g in &a.gammas {
        let recovery = build_recovery(&code, g)?;
        let report = verify_recovery(&recovery, a.tol)?;
        println!(
            "γ = {g}: gram deviation {:.2e}, trace deviation {:.2e}, targets {} -> {}",
            report.gram_deviation,
            report.trace_deviation,
            if report.targets_ok() { "ok" } else { "foreign" },
            if report.passed() { "pass" } else { "FAIL" }
        );
        passed &= report.passed();
        recoveries.push(json!({
            "gamma": g,
            "sources": report.source_count,
            "dim": report.dim,
            "gram_deviation": report.gram_deviation,
            "trace_deviation": report.trace_deviation,
            "passed": report.passed(),
        }));
    }

    let samples = a
        .residual_gammas
        .clone()
        .unwrap_or_else(|| DEFAULT_RESIDUAL_GAMMAS.to_vec());
    let residuals = first_order_residuals(&code, &samples)?;
    let max_a1 = residuals.max_abs_a1();
    let diagonal = residuals
        .entries
        .iter()
        .filter(|e| e.i == e.j)
        .map(|e| e.a1.norm())
        .fold(0.0, f64::max);
    let corrects = residuals.corrects_first_order(FIRST_ORDER_THRESHOLD);
    let mut line = String::new();
    let _ = write!(line, "max |a1| = {max_a1:.3e} (diagonal {diagonal:.3e})");
    if let Some(w) = residuals.worst() {
        let _ = write!(line, ", worst pair ({}, {})", w.i, w.j);
    }
    println!("{line}");
    println!(
        "first-order correction (|a1| < {FIRST_ORDER_THRESHOLD:e}): {}",
        if corrects { "pass" } else { "FAIL" }
    );
    passed &= corrects;

    let out = a.out.clone().unwrap_or_else(|| default_beside(&a.code, "_verify.json"));
    let report = json!({
        "n": code.n(),
        "k": code.k(),
        "mode": code.mode().to_string(),
        "recoveries": recoveries,
        "residuals": residuals,
        "max_abs_a1": max_a1,
        "threshold": FIRST_ORDER_THRESHOLD,
        "passed": passed,
    });
    let mut text = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    text.push('\n');
    let digest = write_output(&out, &text)?;
    println!("wrote {}", out.display());
    let params = json!({
        "code": a.code.display().to_string(),
        "code_sha256": sha256_hex(code.to_json()?.as_bytes()),
        "gammas": a.gammas,
        "residual_gammas": samples,
        "tol": a.tol,
        "out": out.display().to_string(),
    });
    write_manifest(&out, "verify", params, start, vec![digest])?;
    Ok(if passed { EXIT_OK } else { EXIT_CHECK_FAILED })
}

#[derive(Serialize, Deserialize)]
struct CachedGraph {
    n: usize,
    mode: ConflictMode,
    sha256: String,
    adjacency: Vec<Vec<u32>>,
    self_conflicting: Vec<bool>,
}

fn graph_digest(adjacency: &[Vec<u32>], self_conflicting: &[bool]) -> crate::Result<String> {
    let body = serde_json::to_vec(&(adjacency, self_conflicting))?;
    Ok(sha256_hex(&body))
}

/// Cache file name for the graph with the given parameters.
pub fn graph_cache_key(n: usize, mode: ConflictMode) -> String {
    sha256_hex(format!("conflict-graph/v1/n={n}/mode={mode}").as_bytes())
}

fn cached_graph(n: usize, mode: ConflictMode) -> crate::Result<ConflictGraph> {
    let Some(dir) = std::env::var_os(GRAPH_CACHE_ENV).filter(|d| !d.is_empty()) else {
        return build_conflict_graph(n, mode);
    };
    let path = Path::new(&dir).join(format!("{}.json", graph_cache_key(n, mode)));
    if let Ok(text) = std::fs::read_to_string(&path) {
        match load_cached(&text, n, mode) {
            Ok(graph) => return Ok(graph),
            Err(e) => log::warn!("ignoring graph cache entry {}: {e}", path.display()),
        }
    }
    let graph = build_conflict_graph(n, mode)?;
    let (adjacency, self_conflicting) = graph.parts();
    let entry = CachedGraph {
        n,
        mode,
        sha256: graph_digest(adjacency, self_conflicting)?,
        adjacency: adjacency.to_vec(),
        self_conflicting: self_conflicting.to_vec(),
    };
    let stored = std::fs::create_dir_all(&dir)
        .map_err(Error::from)
        .and_then(|_| Ok(serde_json::to_string(&entry)?))
        .and_then(|text| Ok(std::fs::write(&path, text)?));
    if let Err(e) = stored {
        log::warn!("could not write graph cache entry {}: {e}", path.display());
    }
    Ok(graph)
}

fn load_cached(text: &str, n: usize, mode: ConflictMode) -> crate::Result<ConflictGraph> {
    let entry: CachedGraph = serde_json::from_str(text)?;
    if entry.n != n || entry.mode != mode {
        return Err(Error::Config("parameters do not match".into()));
    }
    if graph_digest(&entry.adjacency, &entry.self_conflicting)? != entry.sha256 {
        return Err(Error::Config("digest mismatch".into()));
    }
    ConflictGraph::from_parts(n, mode, entry.adjacency, entry.self_conflicting)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = parse_gamma_grid("0:0.02:0.5").unwrap();
        assert_eq!(g.len(), 26);
        assert_eq!(g[25], 0.5);
        assert_eq!(parse_gamma_grid("0:0.01:0.01").unwrap(), vec![0.0, 0.01]);
        assert_eq!(parse_gamma_grid("0.1:1:0.1").unwrap(), vec![0.1]);
        assert_eq!(parse_gamma_grid("0:0.3:1").unwrap().len(), 4);
        for bad in ["0:0:1", "1:0.1:0", "0:0.1", "a:0.1:1", "0:1e-9:1"] {
            assert!(parse_gamma_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn manifest_path() {
        assert_eq!(
            RunManifest::path_for(Path::new("out/table.csv")),
            PathBuf::from("out/table.csv.manifest.json")
        );
    }

    #[test]
    fn cache_round_trip() {
        let graph = build_conflict_graph(6, ConflictMode::Strict).unwrap();
        let (adjacency, flags) = graph.parts();
        let entry = CachedGraph {
            n: 6,
            mode: ConflictMode::Strict,
            sha256: graph_digest(adjacency, flags).unwrap(),
            adjacency: adjacency.to_vec(),
            self_conflicting: flags.to_vec(),
        };
        let text = serde_json::to_string(&entry).unwrap();
        let back = load_cached(&text, 6, ConflictMode::Strict).unwrap();
        assert_eq!(back.parts(), graph.parts());
        assert!(load_cached(&text, 6, ConflictMode::Literal).is_err());
        let tampered = text.replacen("[1", "[2", 1);
        assert!(load_cached(&tampered, 6, ConflictMode::Strict).is_err());
    }
}
