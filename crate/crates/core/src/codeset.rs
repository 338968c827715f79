//! Binary codewords, complement-closed code sets and the single-decay
//! conflict relation.
//!
//! A word of length `n` is stored as an integer whose binary expansion is
//! the bitstring read left to right: qubit 1 is the most significant bit.
//! The same integer is the computational basis index used by the simulator.
//!
//! Two words *conflict* when a single amplitude-damping event on each of them
//! can produce the same basis state (`Literal`), or, in `Strict` mode, also
//! when one word decays into the other. A complement-closed set with no
//! conflicting members spans a self-complementary code that corrects every
//! single decay.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_WORD_LENGTH: usize = 32;

/// Largest `n` for which [`build_conflict_graph`] enumerates edges by default.
pub const DEFAULT_GRAPH_LIMIT: usize = 16;

/// An `n`-bit binary word.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CodeWord {
    // Derived `Ord` sorts by length, then value.
    n: u8,
    bits: u32,
}

fn check_len(n: usize) -> Result<()> {
    if (2..=MAX_WORD_LENGTH).contains(&n) {
        Ok(())
    } else {
        Err(Error::WordLength(n))
    }
}

#[inline]
fn mask(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

impl CodeWord {
    pub fn new(bits: u64, n: usize) -> Result<Self> {
        check_len(n)?;
        if bits > u64::from(mask(n)) {
            return Err(Error::WordOutOfRange { bits, n });
        }
        Ok(Self {
            n: n as u8,
            bits: bits as u32,
        })
    }

    /// Caller guarantees `2 <= n <= 32` and `bits < 2^n`.
    #[inline]
    pub(crate) fn from_raw(bits: u32, n: usize) -> Self {
        debug_assert!(bits & !mask(n) == 0);
        Self { n: n as u8, bits }
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::new(0, n)
    }

    #[inline]
    pub fn bits(self) -> u32 {
        self.bits
    }

    #[inline]
    pub fn len(self) -> usize {
        usize::from(self.n)
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        false
    }

    /// Basis-state index of `|u>`.
    #[inline]
    pub fn index(self) -> usize {
        self.bits as usize
    }

    /// Hamming weight.
    #[inline]
    pub fn weight(self) -> u32 {
        self.bits.count_ones()
    }

    #[inline]
    pub fn complement(self) -> Self {
        Self {
            n: self.n,
            bits: !self.bits & mask(self.len()),
        }
    }

    /// The numerically smaller of `{u, ū}`.
    #[inline]
    pub fn representative(self) -> Self {
        self.min(self.complement())
    }

    #[inline]
    pub fn distance(self, other: Self) -> u32 {
        (self.bits ^ other.bits).count_ones()
    }

    /// `e <= u` bitwise: every decay in `e` is possible on `u`.
    #[inline]
    pub fn covers(self, e: Self) -> bool {
        e.bits & !self.bits == 0
    }

    /// `u - e`, defined when `self.covers(e)`.
    #[inline]
    pub fn decay(self, e: Self) -> Option<Self> {
        self.covers(e).then_some(Self {
            n: self.n,
            bits: self.bits & !e.bits,
        })
    }

    /// Bit of qubit `j`, 1-based from the left.
    pub fn qubit(self, j: usize) -> bool {
        assert!((1..=self.len()).contains(&j), "qubit index out of range");
        self.bits >> (self.len() - j) & 1 == 1
    }
}

impl fmt::Display for CodeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 1..=self.len() {
            f.write_str(if self.qubit(j) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for CodeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CodeWord({self})")
    }
}

impl FromStr for CodeWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let n = s.len();
        if !(2..=MAX_WORD_LENGTH).contains(&n) {
            return Err(Error::Bitstring(s.to_owned()));
        }
        let mut bits = 0u64;
        for c in s.chars() {
            bits = bits << 1
                | match c {
                    '0' => 0,
                    '1' => 1,
                    _ => return Err(Error::Bitstring(s.to_owned())),
                };
        }
        Self::new(bits, n)
    }
}

impl Serialize for CodeWord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CodeWord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn complement(u: CodeWord) -> CodeWord {
    u.complement()
}

/// All words reachable from `u` by exactly one decay (clearing one set bit).
pub fn damped_descendants(u: CodeWord) -> BTreeSet<CodeWord> {
    (0..u.len())
        .filter(|b| u.bits >> b & 1 == 1)
        .map(|b| CodeWord::from_raw(u.bits & !(1 << b), u.len()))
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConflictMode {
    /// Only two distinct words sharing a single-decay descendant conflict.
    Literal,
    /// Additionally, a word conflicts with each of its single-decay descendants.
    #[default]
    Strict,
}

impl fmt::Display for ConflictMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Literal => "literal",
            Self::Strict => "strict",
        })
    }
}

impl FromStr for ConflictMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(Self::Literal),
            "strict" => Ok(Self::Strict),
            _ => Err(Error::Parse(format!("unknown conflict mode {s:?}"))),
        }
    }
}

/// Conflict test by enumerating both descendant sets.
pub fn conflicts_by_enumeration(u: CodeWord, v: CodeWord, mode: ConflictMode) -> Result<bool> {
    check_pair(u, v)?;
    let du = damped_descendants(u);
    let dv = damped_descendants(v);
    let shared = du.intersection(&dv).next().is_some();
    Ok(match mode {
        ConflictMode::Literal => shared,
        ConflictMode::Strict => shared || du.contains(&v) || dv.contains(&u),
    })
}

/// Conflict test in closed form: equal weight at distance 2, plus distance 1
/// in `Strict` mode.
pub fn conflicts(u: CodeWord, v: CodeWord, mode: ConflictMode) -> Result<bool> {
    check_pair(u, v)?;
    Ok(conflicts_unchecked(u, v, mode))
}

#[inline]
pub(crate) fn conflicts_unchecked(u: CodeWord, v: CodeWord, mode: ConflictMode) -> bool {
    match u.distance(v) {
        1 => mode == ConflictMode::Strict,
        2 => u.weight() == v.weight(),
        _ => false,
    }
}

fn check_pair(u: CodeWord, v: CodeWord) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch(u.len(), v.len()));
    }
    if u == v {
        return Err(Error::SameWord);
    }
    Ok(())
}

/// Every word that conflicts with `u`, without repetition.
pub fn conflict_neighbors(u: CodeWord, mode: ConflictMode) -> impl Iterator<Item = CodeWord> {
    let n = u.len();
    let bits = u.bits;
    let ones: Vec<usize> = (0..n).filter(|b| bits >> b & 1 == 1).collect();
    let zeros: Vec<usize> = (0..n).filter(|b| bits >> b & 1 == 0).collect();
    let flips = (0..n)
        .filter(move |_| mode == ConflictMode::Strict)
        .map(move |b| bits ^ (1 << b));
    let swaps = ones
        .into_iter()
        .flat_map(move |i| zeros.clone().into_iter().map(move |j| bits ^ (1 << i) ^ (1 << j)));
    flips.chain(swaps).map(move |b| CodeWord::from_raw(b, n))
}

/// A candidate code: the set `S` of words, closed under complement when valid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeSet {
    n: usize,
    mode: ConflictMode,
    words: BTreeSet<CodeWord>,
}

impl CodeSet {
    pub fn new(n: usize, mode: ConflictMode, words: impl IntoIterator<Item = CodeWord>) -> Result<Self> {
        check_len(n)?;
        let words: BTreeSet<_> = words.into_iter().collect();
        if let Some(w) = words.iter().find(|w| w.len() != n) {
            return Err(Error::LengthMismatch(n, w.len()));
        }
        Ok(Self { n, mode, words })
    }

    /// Builds a set from pair representatives, adding every complement.
    pub fn from_pairs(n: usize, mode: ConflictMode, reps: impl IntoIterator<Item = CodeWord>) -> Result<Self> {
        let words: Vec<_> = reps.into_iter().flat_map(|u| [u, u.complement()]).collect();
        Self::new(n, mode, words)
    }

    pub fn from_bitstrings<S: AsRef<str>>(mode: ConflictMode, words: &[S]) -> Result<Self> {
        let parsed = words
            .iter()
            .map(|s| s.as_ref().parse::<CodeWord>())
            .collect::<Result<Vec<_>>>()?;
        let n = parsed
            .first()
            .map(|w| w.len())
            .ok_or_else(|| Error::InvalidCode("empty word list".into()))?;
        Self::new(n, mode, parsed)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> ConflictMode {
        self.mode
    }

    pub fn with_mode(&self, mode: ConflictMode) -> Self {
        Self { mode, ..self.clone() }
    }

    pub fn words(&self) -> impl Iterator<Item = CodeWord> + '_ {
        self.words.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, w: CodeWord) -> bool {
        self.words.contains(&w)
    }

    /// Encoded dimension `|S| / 2`.
    pub fn k(&self) -> usize {
        self.words.len() / 2
    }

    /// Pair representatives in ascending order. Only meaningful for
    /// complement-closed sets.
    pub fn pairs(&self) -> Vec<CodeWord> {
        self.words
            .iter()
            .copied()
            .filter(|w| *w == w.representative())
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = CodeSetFile {
            n: self.n,
            mode: self.mode,
            words: self.words.iter().copied().collect(),
        };
        Ok(serde_json::to_string_pretty(&file)? + "\n")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: CodeSetFile = serde_json::from_str(s)?;
        Self::new(file.n, file.mode, file.words)
    }
}

#[derive(Serialize, Deserialize)]
struct CodeSetFile {
    n: usize,
    mode: ConflictMode,
    words: Vec<CodeWord>,
}

/// Outcome of checking complement closure and the no-conflict condition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub n: usize,
    pub mode: ConflictMode,
    /// Words whose complement is missing.
    pub complement_violations: Vec<CodeWord>,
    /// Conflicting pairs `(u, v)` with `u < v`.
    pub conflict_violations: Vec<(CodeWord, CodeWord)>,
    /// Encoded dimension, present only when the set is valid.
    pub k: Option<usize>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.k.is_some()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.k {
            Some(k) => write!(f, "valid ({} mode): n = {}, k = {k}", self.mode, self.n),
            None => {
                writeln!(f, "invalid ({} mode), n = {}", self.mode, self.n)?;
                for w in &self.complement_violations {
                    writeln!(f, "  complement of {w} missing")?;
                }
                for (u, v) in &self.conflict_violations {
                    writeln!(f, "  {u} conflicts with {v}")?;
                }
                Ok(())
            }
        }
    }
}

pub fn validate_code_set(code: &CodeSet) -> ValidationReport {
    let complement_violations: Vec<_> = code.words().filter(|w| !code.contains(w.complement())).collect();
    let mut conflict_violations = Vec::new();
    for u in code.words() {
        for v in conflict_neighbors(u, code.mode) {
            if u < v && code.contains(v) {
                conflict_violations.push((u, v));
            }
        }
    }
    conflict_violations.sort();
    let valid = complement_violations.is_empty() && conflict_violations.is_empty();
    ValidationReport {
        n: code.n,
        mode: code.mode,
        complement_violations,
        conflict_violations,
        k: valid.then(|| code.k()),
    }
}

/// Conflict graph over complement-pair classes. Vertex `i` is the pair whose
/// representative has value `i`, so there are `2^(n-1)` vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConflictGraph {
    n: usize,
    mode: ConflictMode,
    adjacency: Vec<Vec<u32>>,
    self_conflicting: Vec<bool>,
}

impl ConflictGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> ConflictMode {
        self.mode
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Representative of vertex `i`.
    pub fn vertex(&self, i: usize) -> CodeWord {
        CodeWord::from_raw(i as u32, self.n)
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.adjacency[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&(j as u32)).is_ok()
    }

    /// A pair whose two members conflict with each other can never be used.
    pub fn is_self_conflicting(&self, i: usize) -> bool {
        self.self_conflicting[i]
    }

    pub fn is_independent(&self, vertices: &[usize]) -> bool {
        let set: HashSet<usize> = vertices.iter().copied().collect();
        vertices
            .iter()
            .all(|&v| self.adjacency[v].iter().all(|&w| !set.contains(&(w as usize))))
    }

    /// Rebuilds a graph from its adjacency lists and self-conflict flags.
    pub fn from_parts(
        n: usize,
        mode: ConflictMode,
        adjacency: Vec<Vec<u32>>,
        self_conflicting: Vec<bool>,
    ) -> Result<Self> {
        check_len(n)?;
        let expect = 1usize << (n - 1);
        if adjacency.len() != expect || self_conflicting.len() != expect {
            return Err(Error::DimensionMismatch(adjacency.len(), expect));
        }
        for (i, list) in adjacency.iter().enumerate() {
            for &j in list {
                if j as usize >= expect || !adjacency[j as usize].contains(&(i as u32)) {
                    return Err(Error::Config(format!(
                        "adjacency entry {i}-{j} is not a symmetric edge"
                    )));
                }
            }
        }
        Ok(Self {
            n,
            mode,
            adjacency,
            self_conflicting,
        })
    }

    pub fn parts(&self) -> (&[Vec<u32>], &[bool]) {
        (&self.adjacency, &self.self_conflicting)
    }
}

pub fn build_conflict_graph(n: usize, mode: ConflictMode) -> Result<ConflictGraph> {
    build_conflict_graph_with_limit(n, mode, DEFAULT_GRAPH_LIMIT)
}

pub fn build_conflict_graph_with_limit(n: usize, mode: ConflictMode, limit: usize) -> Result<ConflictGraph> {
    check_len(n)?;
    if n > limit {
        return Err(Error::LimitExceeded {
            what: "conflict graph",
            n,
            limit,
        });
    }
    let count = 1u32 << (n - 1);
    let rows: Vec<(Vec<u32>, bool)> = (0..count)
        .into_par_iter()
        .map(|p| {
            let rep = CodeWord::from_raw(p, n);
            let mut self_conflict = false;
            let mut adj = Vec::new();
            for member in [rep, rep.complement()] {
                for x in conflict_neighbors(member, mode) {
                    let q = x.representative().bits;
                    if q == p {
                        self_conflict = true;
                    } else {
                        adj.push(q);
                    }
                }
            }
            adj.sort_unstable();
            adj.dedup();
            (adj, self_conflict)
        })
        .collect();
    let (adjacency, self_conflicting) = rows.into_iter().unzip();
    Ok(ConflictGraph {
        n,
        mode,
        adjacency,
        self_conflicting,
    })
}

/// `sum_{j=0}^{t} C(n, j) a^j 2^k <= 2^n`, in exact integer arithmetic.
pub fn quantum_hamming_bound(n: u32, k_qubits: u32, t: u32, a: u32) -> bool {
    let mut total = BigUint::from(0u32);
    let mut binom = BigUint::from(1u32);
    let mut power = BigUint::from(1u32);
    for j in 0..=t.min(n) {
        if j > 0 {
            binom = binom * (n - j + 1) / j;
            power *= a;
        }
        total += &binom * &power;
    }
    total << k_qubits as usize <= BigUint::from(1u32) << n as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> CodeWord {
        s.parse().unwrap()
    }

    #[test]
    fn complement_examples() {
        assert_eq!(complement(w("00110000")), w("11001111"));
        assert_eq!(complement(w("0000")), w("1111"));
        assert_eq!(complement(w("1010")), w("0101"));
    }

    #[test]
    fn bitstring_convention() {
        let u = w("1000");
        assert_eq!(u.bits(), 8);
        assert!(u.qubit(1));
        assert_eq!(u.to_string(), "1000");
        assert!("10a0".parse::<CodeWord>().is_err());
        assert!("1".parse::<CodeWord>().is_err());
        assert!(CodeWord::new(16, 4).is_err());
        assert_eq!(CodeWord::new(u32::MAX as u64, 32).unwrap().complement().bits(), 0);
    }

    #[test]
    fn descendants() {
        let d: Vec<_> = damped_descendants(w("0011")).into_iter().collect();
        assert_eq!(d, vec![w("0001"), w("0010")]);
        assert!(damped_descendants(w("0000")).is_empty());
        let d: Vec<_> = damped_descendants(w("11000000")).into_iter().collect();
        assert_eq!(d, vec![w("01000000"), w("10000000")]);
    }

    #[test]
    fn conflict_examples() {
        use ConflictMode::*;
        for f in [conflicts, conflicts_by_enumeration] {
            assert!(f(w("0011"), w("0101"), Literal).unwrap());
            assert!(!f(w("0011"), w("1100"), Literal).unwrap());
            assert!(!f(w("1111"), w("0111"), Literal).unwrap());
            assert!(f(w("1111"), w("0111"), Strict).unwrap());
        }
        assert!(matches!(conflicts(w("0011"), w("0011"), Strict), Err(Error::SameWord)));
        assert!(conflicts(w("0011"), w("00110"), Strict).is_err());
    }

    #[test]
    fn neighbors_are_exactly_the_conflicts() {
        for mode in [ConflictMode::Literal, ConflictMode::Strict] {
            for u in 0..64u32 {
                let u = CodeWord::from_raw(u, 6);
                let listed: BTreeSet<_> = conflict_neighbors(u, mode).collect();
                let brute: BTreeSet<_> = (0..64u32)
                    .map(|v| CodeWord::from_raw(v, 6))
                    .filter(|&v| v != u && conflicts_by_enumeration(u, v, mode).unwrap())
                    .collect();
                assert_eq!(listed, brute);
            }
        }
    }

    #[test]
    fn validate_examples() {
        let code = CodeSet::from_bitstrings(ConflictMode::Strict, &["0000", "1111", "0011", "1100"]).unwrap();
        let report = validate_code_set(&code);
        assert_eq!(report.k, Some(2));

        let code = CodeSet::from_bitstrings(ConflictMode::Strict, &["0000", "0011"]).unwrap();
        let report = validate_code_set(&code);
        assert!(!report.is_valid());
        assert_eq!(report.complement_violations, vec![w("0000"), w("0011")]);

        let six = ["0000", "1111", "0001", "1110", "0011", "1100"];
        let literal = CodeSet::from_bitstrings(ConflictMode::Literal, &six).unwrap();
        assert_eq!(validate_code_set(&literal).k, Some(3));
        let strict = literal.with_mode(ConflictMode::Strict);
        let report = validate_code_set(&strict);
        assert!(report.complement_violations.is_empty());
        assert!(report.conflict_violations.contains(&(w("0001"), w("0011"))));
    }

    #[test]
    fn json_round_trip_is_sorted() {
        let code = CodeSet::from_bitstrings(ConflictMode::Literal, &["1111", "0000"]).unwrap();
        let json = code.to_json().unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["mode"], "literal");
        assert_eq!(value["words"][0], "0000");
        assert_eq!(CodeSet::from_json(&json).unwrap(), code);
    }

    #[test]
    fn graph_small_cases() {
        let g = build_conflict_graph(2, ConflictMode::Strict).unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert!(!g.is_self_conflicting(0));
        assert!(g.is_self_conflicting(1));

        let g = build_conflict_graph(4, ConflictMode::Strict).unwrap();
        assert_eq!(g.vertex_count(), 8);
        assert!(!g.has_edge(0, 3));
        assert!(g.has_edge(0, 1));

        assert!(matches!(
            build_conflict_graph(20, ConflictMode::Strict),
            Err(Error::LimitExceeded { .. })
        ));
    }

    #[test]
    fn hamming_bound() {
        assert!(quantum_hamming_bound(5, 1, 1, 3));
        assert!(!quantum_hamming_bound(4, 1, 1, 3));
        assert!(quantum_hamming_bound(9, 1, 0, 3));
        assert!(!quantum_hamming_bound(200, 190, 3, 3));
        assert!(quantum_hamming_bound(200, 100, 5, 3));
    }
}
