//! Maximising the number of codeword pairs.
//!
//! Greedy strategies walk pair representatives in a fixed order and keep a
//! bitmap of every word that conflicts with something already chosen.
//! The exact strategy solves maximum independent set on the pair-class
//! conflict graph by branch and bound with a clique-cover bound.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::codeset::{
    build_conflict_graph_with_limit, conflict_neighbors, conflicts_unchecked, validate_code_set, CodeSet, CodeWord,
    ConflictGraph, ConflictMode, MAX_WORD_LENGTH,
};
use crate::error::{Error, Result};

pub const DEFAULT_EXACT_LIMIT: usize = 10;
pub const GREEDY_LIMIT: usize = 26;
pub const TABLE_LIMIT: usize = 16;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub enum Strategy {
    /// Representatives in ascending integer order.
    #[default]
    GreedyLex,
    /// Representatives by ascending weight, ties by integer value.
    GreedyByWeight,
    /// Branch and bound, seeded with the better greedy result.
    ExactBnB,
}

impl Strategy {
    pub fn is_greedy(self) -> bool {
        !matches!(self, Self::ExactBnB)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::GreedyLex => "greedy-lex",
            Self::GreedyByWeight => "greedy-weight",
            Self::ExactBnB => "exact",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy-lex" => Ok(Self::GreedyLex),
            "greedy-weight" => Ok(Self::GreedyByWeight),
            "exact" => Ok(Self::ExactBnB),
            _ => Err(Error::Parse(format!("unknown strategy {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    pub n: usize,
    pub mode: ConflictMode,
    pub strategy: Strategy,
    pub time_budget: Duration,
    /// Unused by the deterministic strategies.
    pub random_seed: u64,
    pub exact_limit: usize,
}

impl SearchConfig {
    pub fn new(n: usize, mode: ConflictMode, strategy: Strategy) -> Self {
        Self {
            n,
            mode,
            strategy,
            time_budget: Duration::from_secs(60),
            random_seed: 0,
            exact_limit: DEFAULT_EXACT_LIMIT,
        }
    }

    pub fn with_budget(mut self, budget: Duration) -> Self {
        self.time_budget = budget;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=MAX_WORD_LENGTH).contains(&self.n) {
            return Err(Error::WordLength(self.n));
        }
        if self.time_budget.is_zero() {
            return Err(Error::Config("time budget must be positive".into()));
        }
        let limit = match self.strategy {
            Strategy::ExactBnB => self.exact_limit,
            _ => GREEDY_LIMIT,
        };
        if self.n > limit {
            return Err(Error::LimitExceeded {
                what: if self.strategy.is_greedy() {
                    "greedy search"
                } else {
                    "exact search"
                },
                n: self.n,
                limit,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub code: CodeSet,
    pub k: usize,
    /// True only when an exact search ran to completion.
    pub optimal: bool,
    pub elapsed: Duration,
}

impl SearchResult {
    pub fn log2_k(&self) -> f64 {
        (self.k as f64).log2()
    }
}

/// Dispatches on `config.strategy`.
pub fn search(config: &SearchConfig) -> Result<SearchResult> {
    if config.strategy.is_greedy() {
        greedy_search(config)
    } else {
        exact_search(config)
    }
}

fn representatives(n: usize, strategy: Strategy) -> Vec<u32> {
    let mut reps: Vec<u32> = (0..1u32 << (n - 1)).collect();
    if strategy == Strategy::GreedyByWeight {
        reps.sort_by_key(|&r| (r.count_ones(), r));
    }
    reps
}

struct BitSet(Vec<u64>);

impl BitSet {
    fn new(len: usize) -> Self {
        Self(vec![0; len.div_ceil(64)])
    }
    #[inline]
    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
    #[inline]
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
}

fn self_conflicting(rep: CodeWord, mode: ConflictMode) -> bool {
    conflicts_unchecked(rep, rep.complement(), mode)
}

pub fn greedy_search(config: &SearchConfig) -> Result<SearchResult> {
    config.validate()?;
    if !config.strategy.is_greedy() {
        return Err(Error::Config("greedy_search needs a greedy strategy".into()));
    }
    let start = Instant::now();
    let n = config.n;
    let mut blocked = BitSet::new(1usize << n);
    let mut chosen = Vec::new();
    for r in representatives(n, config.strategy) {
        let rep = CodeWord::from_raw(r, n);
        let comp = rep.complement();
        if blocked.get(rep.index()) || blocked.get(comp.index()) || self_conflicting(rep, config.mode) {
            continue;
        }
        for member in [rep, comp] {
            for x in conflict_neighbors(member, config.mode) {
                blocked.set(x.index());
            }
        }
        chosen.push(rep);
    }
    let code = CodeSet::from_pairs(n, config.mode, chosen)?;
    Ok(SearchResult {
        k: code.k(),
        code,
        optimal: false,
        elapsed: start.elapsed(),
    })
}

/// True when no unused, internally consistent pair can be added to `code`.
pub fn is_maximal(code: &CodeSet) -> bool {
    let n = code.n();
    (0..1u32 << (n - 1)).all(|r| {
        let rep = CodeWord::from_raw(r, n);
        code.contains(rep)
            || self_conflicting(rep, code.mode())
            || [rep, rep.complement()]
                .into_iter()
                .any(|m| conflict_neighbors(m, code.mode()).any(|x| code.contains(x)))
    })
}

pub fn exact_search(config: &SearchConfig) -> Result<SearchResult> {
    config.validate()?;
    if config.strategy != Strategy::ExactBnB {
        return Err(Error::Config("exact_search needs the exact strategy".into()));
    }
    let graph = build_conflict_graph_with_limit(config.n, config.mode, config.exact_limit)?;
    exact_search_on_graph(config, &graph)
}

/// Exact search over a prebuilt graph (e.g. one loaded from a cache).
pub fn exact_search_on_graph(config: &SearchConfig, graph: &ConflictGraph) -> Result<SearchResult> {
    config.validate()?;
    if graph.n() != config.n || graph.mode() != config.mode {
        return Err(Error::Config("graph does not match the search configuration".into()));
    }
    let start = Instant::now();
    let mut incumbent = Vec::new();
    for strategy in [Strategy::GreedyLex, Strategy::GreedyByWeight] {
        let greedy = greedy_search(&SearchConfig {
            strategy,
            ..config.clone()
        })?;
        if greedy.k > incumbent.len() {
            incumbent = greedy.code.pairs();
        }
    }
    let mut solver = MisSolver::new(graph, start + config.time_budget);
    solver.best = incumbent.iter().map(|w| w.index()).collect();
    let complete = solver.run();
    let code = CodeSet::from_pairs(config.n, config.mode, solver.best.iter().map(|&v| graph.vertex(v)))?;
    debug_assert!(validate_code_set(&code).is_valid());
    Ok(SearchResult {
        k: code.k(),
        code,
        optimal: complete,
        elapsed: start.elapsed(),
    })
}

/// Maximum independent set by branch and bound. Candidates are partitioned
/// greedily into cliques of the conflict graph; an independent set takes at
/// most one vertex per clique, which bounds each branch.
struct MisSolver {
    /// Non-neighbours of each vertex (excluding itself).
    compatible: Vec<Vec<u64>>,
    adjacent: Vec<Vec<u64>>,
    usable: Vec<u64>,
    best: Vec<usize>,
    current: Vec<usize>,
    deadline: Instant,
    nodes: u64,
    timed_out: bool,
}

impl MisSolver {
    fn new(graph: &ConflictGraph, deadline: Instant) -> Self {
        let v = graph.vertex_count();
        let words = v.div_ceil(64);
        let mut adjacent = vec![vec![0u64; words]; v];
        let mut compatible = vec![vec![0u64; words]; v];
        let mut usable = vec![0u64; words];
        for i in 0..v {
            if !graph.is_self_conflicting(i) {
                usable[i / 64] |= 1 << (i % 64);
            }
            for &j in graph.neighbors(i) {
                adjacent[i][j as usize / 64] |= 1 << (j % 64);
            }
        }
        for i in 0..v {
            for j in 0..v {
                if j != i && !graph.is_self_conflicting(j) && adjacent[i][j / 64] >> (j % 64) & 1 == 0 {
                    compatible[i][j / 64] |= 1 << (j % 64);
                }
            }
        }
        Self {
            compatible,
            adjacent,
            usable,
            best: Vec::new(),
            current: Vec::new(),
            deadline,
            nodes: 0,
            timed_out: false,
        }
    }

    fn run(&mut self) -> bool {
        let candidates = self.usable.clone();
        self.expand(candidates);
        !self.timed_out
    }

    /// Greedy clique cover; returns vertices with their cumulative bound, in
    /// ascending bound order.
    fn cover(&self, candidates: &[u64]) -> Vec<(usize, usize)> {
        let mut order = Vec::new();
        let mut remaining = candidates.to_vec();
        let mut class = 0;
        while remaining.iter().any(|&w| w != 0) {
            class += 1;
            let mut pool = remaining.clone();
            while let Some(v) = first_bit(&pool) {
                pool[v / 64] &= !(1 << (v % 64));
                remaining[v / 64] &= !(1 << (v % 64));
                for (p, a) in pool.iter_mut().zip(&self.adjacent[v]) {
                    *p &= a;
                }
                order.push((v, class));
            }
        }
        order
    }

    fn expand(&mut self, mut candidates: Vec<u64>) {
        self.nodes += 1;
        if self.nodes.is_multiple_of(1024) && Instant::now() >= self.deadline {
            self.timed_out = true;
        }
        if self.timed_out {
            return;
        }
        let order = self.cover(&candidates);
        for &(v, bound) in order.iter().rev() {
            if self.current.len() + bound <= self.best.len() {
                return;
            }
            self.current.push(v);
            let next: Vec<u64> = candidates.iter().zip(&self.compatible[v]).map(|(c, m)| c & m).collect();
            if next.iter().all(|&w| w == 0) {
                if self.current.len() > self.best.len() {
                    self.best = self.current.clone();
                }
            } else {
                self.expand(next);
            }
            self.current.pop();
            candidates[v / 64] &= !(1 << (v % 64));
            if self.timed_out {
                return;
            }
        }
    }
}

fn first_bit(bits: &[u64]) -> Option<usize> {
    bits.iter()
        .enumerate()
        .find(|(_, &w)| w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

/// Encoded dimensions listed for small `n` in the reference greedy table.
pub const REFERENCE_TABLE_CSV: &str = include_str!("../data/table1_reference.csv");

/// `(n, k)` rows of the bundled reference table.
pub fn reference_table() -> Vec<(usize, usize)> {
    REFERENCE_TABLE_CSV
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let mut it = l.split(',');
            let n = it.next().and_then(|s| s.trim().parse().ok()).expect("reference n");
            let k = it.next().and_then(|s| s.trim().parse().ok()).expect("reference k");
            (n, k)
        })
        .collect()
}

pub fn reference_k(n: usize) -> Option<usize> {
    reference_table().into_iter().find(|&(m, _)| m == n).map(|(_, k)| k)
}

/// Least-squares slope of `y` against `x`; `None` with fewer than two distinct `x`.
pub fn regression_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Clone, Debug)]
pub struct TableRow {
    pub n: usize,
    pub result: std::result::Result<SearchResult, String>,
    pub reference_k: Option<usize>,
}

impl TableRow {
    pub fn k(&self) -> Option<usize> {
        self.result.as_ref().ok().map(|r| r.k)
    }
}

#[derive(Clone, Debug)]
pub struct TableReport {
    pub rows: Vec<TableRow>,
    /// Slope of `log2 k` against `n`; absent with fewer than two rows.
    pub slope: Option<f64>,
}

impl TableReport {
    /// `n,k,log2k,reference_k`; failed rows leave `k` and `log2k` empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,k,log2k,reference_k\n");
        for row in &self.rows {
            let (k, lk) = match &row.result {
                Ok(r) => (r.k.to_string(), format!("{:.6}", r.log2_k())),
                Err(_) => (String::new(), String::new()),
            };
            let rk = row.reference_k.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", row.n, k, lk, rk));
        }
        out
    }
}

/// Runs `config.strategy` for every `n` in `n_min..=n_max`.
pub fn rate_table(n_min: usize, n_max: usize, config: &SearchConfig) -> Result<TableReport> {
    if n_min > n_max {
        return Err(Error::Config(format!("empty range {n_min}..={n_max}")));
    }
    if n_max > TABLE_LIMIT {
        return Err(Error::LimitExceeded {
            what: "rate table",
            n: n_max,
            limit: TABLE_LIMIT,
        });
    }
    let rows: Vec<TableRow> = (n_min..=n_max)
        .map(|n| {
            let cfg = SearchConfig { n, ..config.clone() };
            TableRow {
                n,
                result: search(&cfg).map_err(|e| e.to_string()),
                reference_k: reference_k(n),
            }
        })
        .collect();
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.k().filter(|&k| k > 0).map(|k| (r.n as f64, (k as f64).log2())))
        .collect();
    Ok(TableReport {
        slope: regression_slope(&points),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codeset::build_conflict_graph;

    fn cfg(n: usize, mode: ConflictMode, strategy: Strategy) -> SearchConfig {
        SearchConfig::new(n, mode, strategy)
    }

    #[test]
    fn greedy_small() {
        let r = greedy_search(&cfg(4, ConflictMode::Strict, Strategy::GreedyLex)).unwrap();
        assert_eq!(r.k, 2);
        let words: Vec<String> = r.code.words().map(|w| w.to_string()).collect();
        assert_eq!(words, ["0000", "0011", "1100", "1111"]);

        let r = greedy_search(&cfg(2, ConflictMode::Strict, Strategy::GreedyLex)).unwrap();
        assert_eq!(r.k, 1);
        let words: Vec<String> = r.code.words().map(|w| w.to_string()).collect();
        assert_eq!(words, ["00", "11"]);
    }

    #[test]
    fn exact_small() {
        let r = exact_search(&cfg(4, ConflictMode::Strict, Strategy::ExactBnB)).unwrap();
        assert_eq!(r.k, 2);
        assert!(r.optimal);
        let r = exact_search(&cfg(4, ConflictMode::Literal, Strategy::ExactBnB)).unwrap();
        assert!(r.k >= 3);
        assert!(r.optimal);
    }

    /// Brute force over every subset of pair classes.
    fn brute_max(n: usize, mode: ConflictMode) -> usize {
        let g = build_conflict_graph(n, mode).unwrap();
        let v = g.vertex_count();
        let mut best = 0;
        for mask in 0u32..1 << v {
            let set: Vec<usize> = (0..v).filter(|i| mask >> i & 1 == 1).collect();
            if set.iter().all(|&i| !g.is_self_conflicting(i)) && g.is_independent(&set) {
                best = best.max(set.len());
            }
        }
        best
    }

    #[test]
    fn exact_matches_brute_force() {
        for n in 2..=5 {
            for mode in [ConflictMode::Literal, ConflictMode::Strict] {
                let r = exact_search(&cfg(n, mode, Strategy::ExactBnB)).unwrap();
                assert!(r.optimal);
                assert_eq!(r.k, brute_max(n, mode), "n = {n}, {mode}");
            }
        }
    }

    #[test]
    fn config_errors() {
        assert!(cfg(11, ConflictMode::Strict, Strategy::ExactBnB).validate().is_err());
        assert!(cfg(40, ConflictMode::Strict, Strategy::GreedyLex).validate().is_err());
        let zero = cfg(4, ConflictMode::Strict, Strategy::GreedyLex).with_budget(Duration::ZERO);
        assert!(zero.validate().is_err());
        assert!(greedy_search(&cfg(4, ConflictMode::Strict, Strategy::ExactBnB)).is_err());
    }

    #[test]
    fn reference_slope() {
        let pts: Vec<(f64, f64)> = reference_table()
            .into_iter()
            .map(|(n, k)| (n as f64, (k as f64).log2()))
            .collect();
        assert_eq!(pts.len(), 13);
        let slope = regression_slope(&pts).unwrap();
        assert!((slope - 0.85).abs() < 0.02, "{slope}");
    }

    #[test]
    fn degenerate_table() {
        let t = rate_table(4, 4, &cfg(4, ConflictMode::Strict, Strategy::GreedyLex)).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert!(t.slope.is_none());
        assert_eq!(t.to_csv(), "n,k,log2k,reference_k\n4,2,1.000000,2\n");
        assert!(rate_table(10, 4, &cfg(4, ConflictMode::Strict, Strategy::GreedyLex)).is_err());
    }
}
