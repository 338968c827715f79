//! Channel-adapted recovery for self-complementary codes.
//!
//! Undamped, the code state `(|u> + |ū>)/√2` shrinks to a vector along
//! `f(u) ∝ (1-γ)^{|u|/2} |u> + (1-γ)^{|ū|/2} |ū>`; `g(u)` is the orthogonal
//! direction in `span{|u>, |ū>}`. The recovery is a list of operator
//! elements, each a partial isometry sending orthonormal *sources* (basis
//! states, `f` or `g` vectors) to distinct code states:
//!
//! 1. the first element sends every `f(u)` back to its code state;
//! 2. decay patterns `e ≠ 0` are visited by weight, then in dictionary
//!    order, and each opens a new element;
//! 3. for every `u ∈ S` with `e ≤ u`: if `u - e ∈ S` and neither it nor its
//!    complement has been used outside the first element, `g(u - e)` is sent
//!    to the code state of `u`; otherwise an unused basis state `|u - e>`
//!    (never a word of `S`) is sent there;
//! 4. construction stops once the assigned rank reaches `2^n`, and the
//!    untouched orthogonal complement is kept by a final projector.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::channel::KrausChannel;
use crate::codeset::{validate_code_set, CodeSet, CodeWord};
use crate::error::{Error, Result};
use crate::linalg::{c, SparseOperator, C64};

/// Largest word length accepted by [`build_recovery`].
pub const RECOVERY_LIMIT: usize = 20;

/// Orthonormal basis `{f, g}` of `span{|u>, |ū>}` adapted to damping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DampedPairBasis {
    pub representative: CodeWord,
    /// Amplitude of `|u>` in `f` (and of `|u>` in `g`: `b`).
    a: f64,
    b: f64,
}

impl DampedPairBasis {
    /// `f = a|u> + b|ū>` as `(index, amplitude)` pairs.
    pub fn f(&self) -> [(usize, f64); 2] {
        let u = self.representative;
        [(u.index(), self.a), (u.complement().index(), self.b)]
    }

    /// `g = b|u> - a|ū>`.
    pub fn g(&self) -> [(usize, f64); 2] {
        let u = self.representative;
        [(u.index(), self.b), (u.complement().index(), -self.a)]
    }

    fn dense(pairs: [(usize, f64); 2], dim: usize) -> Vec<C64> {
        let mut v = vec![c(0.0, 0.0); dim];
        for (i, x) in pairs {
            v[i] += c(x, 0.0);
        }
        v
    }

    pub fn f_dense(&self) -> Vec<C64> {
        Self::dense(self.f(), 1 << self.representative.len())
    }

    pub fn g_dense(&self) -> Vec<C64> {
        Self::dense(self.g(), 1 << self.representative.len())
    }
}

/// Damped pair basis for the pair containing `u`; `a`, `b` are the
/// normalised amplitudes `(1-γ)^{|u|/2}` and `(1-γ)^{|ū|/2}`. When both
/// vanish (full decay of a pair with no all-zero member) `f` falls back to
/// the balanced combination.
pub fn damped_pair_vectors(u: CodeWord, gamma: f64) -> Result<DampedPairBasis> {
    crate::channel::check_gamma(gamma)?;
    let rep = u.representative();
    let keep = 1.0 - gamma;
    let a = keep.powf(f64::from(rep.weight()) / 2.0);
    let b = keep.powf(f64::from(rep.complement().weight()) / 2.0);
    let norm = a.hypot(b);
    let (a, b) = if norm > 0.0 && a != b {
        (a / norm, b / norm)
    } else {
        (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2)
    };
    Ok(DampedPairBasis {
        representative: rep,
        a,
        b,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", content = "word", rename_all = "lowercase")]
pub enum Source {
    /// `|y>` for a word outside the code.
    Basis(CodeWord),
    /// `f` of the pair with this representative.
    F(CodeWord),
    /// `g` of the pair with this representative.
    G(CodeWord),
}

impl Source {
    pub fn vector(self, gamma: f64) -> Vec<(usize, f64)> {
        match self {
            Source::Basis(y) => vec![(y.index(), 1.0)],
            Source::F(r) => damped_pair_vectors(r, gamma).expect("gamma checked").f().to_vec(),
            Source::G(r) => damped_pair_vectors(r, gamma).expect("gamma checked").g().to_vec(),
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Basis(y) => write!(f, "|{y}>"),
            Source::F(r) => write!(f, "f({r})"),
            Source::G(r) => write!(f, "g({r})"),
        }
    }
}

/// One source mapped to the code state of the pair `target`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Assignment {
    pub source: Source,
    #[serde(rename = "target_pair")]
    pub target: CodeWord,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecoveryElement {
    /// Decay pattern that opened this element; all zeros for the first.
    pub error: CodeWord,
    pub assignments: Vec<Assignment>,
}

impl RecoveryElement {
    pub fn rank(&self) -> usize {
        self.assignments.len()
    }
}

#[derive(Clone, Debug)]
pub struct RecoveryChannel {
    gamma: f64,
    code: CodeSet,
    elements: Vec<RecoveryElement>,
    completion: Vec<Source>,
}

impl RecoveryChannel {
    /// Assembles a channel without running the construction; used to check
    /// hand-built or modified recoveries with [`verify_recovery`].
    pub fn from_parts(gamma: f64, code: CodeSet, elements: Vec<RecoveryElement>, completion: Vec<Source>) -> Self {
        Self {
            gamma,
            code,
            elements,
            completion,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn code(&self) -> &CodeSet {
        &self.code
    }

    pub fn elements(&self) -> &[RecoveryElement] {
        &self.elements
    }

    /// Directions kept as they are by the final projector.
    pub fn completion(&self) -> &[Source] {
        &self.completion
    }

    pub fn dim(&self) -> usize {
        1 << self.code.n()
    }

    pub fn assigned_rank(&self) -> usize {
        self.elements.iter().map(RecoveryElement::rank).sum()
    }

    pub fn total_rank(&self) -> usize {
        self.assigned_rank() + self.completion.len()
    }

    /// Target state `(|u> + |ū>)/√2` of a pair.
    fn target_vector(rep: CodeWord) -> [(usize, f64); 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        [(rep.index(), h), (rep.complement().index(), h)]
    }

    /// Kraus operators: one per element plus the completion projector.
    pub fn to_kraus(&self) -> Result<KrausChannel> {
        let dim = self.dim();
        let mut ops = Vec::with_capacity(self.elements.len() + 1);
        for el in &self.elements {
            let entries = el.assignments.iter().flat_map(|a| {
                let src = a.source.vector(self.gamma);
                Self::target_vector(a.target)
                    .into_iter()
                    .flat_map(move |(t, ta)| src.clone().into_iter().map(move |(s, sa)| (t, s, c(ta * sa, 0.0))))
            });
            ops.push(SparseOperator::from_entries(dim, entries)?);
        }
        let entries = self.completion.iter().flat_map(|d| {
            let v = d.vector(self.gamma);
            v.clone()
                .into_iter()
                .flat_map(move |(i, x)| v.clone().into_iter().map(move |(j, y)| (i, j, c(x * y, 0.0))))
        });
        ops.push(SparseOperator::from_entries(dim, entries)?);
        KrausChannel::new(dim, ops)
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Element<'a> {
            assignments: &'a [Assignment],
        }
        #[derive(Serialize)]
        struct File<'a> {
            gamma: f64,
            elements: Vec<Element<'a>>,
            completion_rank: usize,
        }
        let file = File {
            gamma: self.gamma,
            elements: self
                .elements
                .iter()
                .map(|e| Element {
                    assignments: &e.assignments,
                })
                .collect(),
            completion_rank: self.completion.len(),
        };
        Ok(serde_json::to_string_pretty(&file)? + "\n")
    }
}

/// Runs the construction for a valid code at damping `gamma ∈ [0, 1)`.
pub fn build_recovery(code: &CodeSet, gamma: f64) -> Result<RecoveryChannel> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Gamma(gamma));
    }
    let n = code.n();
    if n > RECOVERY_LIMIT {
        return Err(Error::LimitExceeded {
            what: "recovery construction",
            n,
            limit: RECOVERY_LIMIT,
        });
    }
    let report = validate_code_set(code);
    if !report.is_valid() {
        return Err(Error::InvalidCode(report.to_string()));
    }
    let dim = 1usize << n;
    let pairs = code.pairs();
    let words: Vec<CodeWord> = code.words().collect();

    let first = RecoveryElement {
        error: CodeWord::from_raw(0, n),
        assignments: pairs
            .iter()
            .map(|&r| Assignment {
                source: Source::F(r),
                target: r,
            })
            .collect(),
    };
    let mut rank = first.rank();
    let mut elements = vec![first];
    // Words that appear in an element other than the first.
    let mut used = vec![false; dim];

    let mut errors: Vec<u32> = (1..dim as u32).collect();
    errors.sort_by_key(|&e| (e.count_ones(), e));
    for e in errors {
        if rank == dim {
            break;
        }
        let e = CodeWord::from_raw(e, n);
        let mut assignments: Vec<Assignment> = Vec::new();
        for &u in &words {
            let Some(y) = u.decay(e) else { continue };
            let target = u.representative();
            let source = if code.contains(y) {
                let yc = y.complement();
                if used[y.index()] || used[yc.index()] {
                    continue;
                }
                used[y.index()] = true;
                used[yc.index()] = true;
                Source::G(y.representative())
            } else {
                if used[y.index()] {
                    continue;
                }
                used[y.index()] = true;
                Source::Basis(y)
            };
            if assignments.iter().any(|a| a.target == target) {
                return Err(Error::Recovery(format!(
                    "two sources target pair {target} within the element for {e}"
                )));
            }
            assignments.push(Assignment { source, target });
        }
        if !assignments.is_empty() {
            rank += assignments.len();
            elements.push(RecoveryElement { error: e, assignments });
        }
    }

    let mut completion = Vec::with_capacity(dim - rank);
    for y in 0..dim as u32 {
        let y = CodeWord::from_raw(y, n);
        if used[y.index()] {
            continue;
        }
        if code.contains(y) {
            if y == y.representative() {
                completion.push(Source::G(y));
            }
        } else {
            completion.push(Source::Basis(y));
        }
    }
    let channel = RecoveryChannel {
        gamma,
        code: code.clone(),
        elements,
        completion,
    };
    if channel.total_rank() != dim {
        return Err(Error::Recovery(format!(
            "rank {} does not match dimension {dim}",
            channel.total_rank()
        )));
    }
    Ok(channel)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveryReport {
    /// Number of sources including the completion directions.
    pub source_count: usize,
    pub dim: usize,
    /// Largest entry of `Gram - I` over all sources.
    pub gram_deviation: f64,
    /// Largest entry of `Σ R†R - I`.
    pub trace_deviation: f64,
    /// Targets that are not pairs of the code.
    pub foreign_targets: Vec<CodeWord>,
    pub tol: f64,
}

impl RecoveryReport {
    pub fn gram_ok(&self) -> bool {
        self.gram_deviation <= self.tol && self.source_count == self.dim
    }

    pub fn trace_preserving(&self) -> bool {
        self.trace_deviation <= self.tol
    }

    pub fn targets_ok(&self) -> bool {
        self.foreign_targets.is_empty()
    }

    pub fn passed(&self) -> bool {
        self.gram_ok() && self.trace_preserving() && self.targets_ok()
    }
}

/// Checks orthonormality and completeness of the sources, trace
/// preservation, and that every target is a code state.
pub fn verify_recovery(r: &RecoveryChannel, tol: f64) -> Result<RecoveryReport> {
    let sources: Vec<Source> = r
        .elements
        .iter()
        .flat_map(|e| e.assignments.iter().map(|a| a.source))
        .chain(r.completion.iter().copied())
        .collect();

    // Sources have at most two nonzero coordinates; Gram entries come from
    // shared coordinates only.
    let mut by_coord: HashMap<usize, Vec<(usize, f64)>> = HashMap::new();
    for (id, s) in sources.iter().enumerate() {
        for (i, x) in s.vector(r.gamma) {
            by_coord.entry(i).or_default().push((id, x));
        }
    }
    let mut gram: HashMap<(usize, usize), f64> = HashMap::new();
    for members in by_coord.values() {
        for &(i, x) in members {
            for &(j, y) in members {
                *gram.entry((i, j)).or_default() += x * y;
            }
        }
    }
    let mut gram_deviation = 0.0f64;
    for id in 0..sources.len() {
        let diag = gram.get(&(id, id)).copied().unwrap_or(0.0);
        gram_deviation = gram_deviation.max((diag - 1.0).abs());
    }
    for (&(i, j), &v) in &gram {
        if i != j {
            gram_deviation = gram_deviation.max(v.abs());
        }
    }

    let trace_deviation = r.to_kraus()?.trace_preserving_deviation();
    let mut foreign_targets: Vec<CodeWord> = r
        .elements
        .iter()
        .flat_map(|e| e.assignments.iter().map(|a| a.target))
        .filter(|&t| !r.code.contains(t) || t != t.representative())
        .collect();
    foreign_targets.sort();
    foreign_targets.dedup();

    Ok(RecoveryReport {
        source_count: sources.len(),
        dim: r.dim(),
        gram_deviation,
        trace_deviation,
        foreign_targets,
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codeset::ConflictMode;

    fn w(s: &str) -> CodeWord {
        s.parse().unwrap()
    }

    fn code42() -> CodeSet {
        CodeSet::from_bitstrings(ConflictMode::Strict, &["0000", "0011", "1100", "1111"]).unwrap()
    }

    #[test]
    fn pair_vectors_equal_weights() {
        for g in [0.0, 0.1, 0.7] {
            let p = damped_pair_vectors(w("0011"), g).unwrap();
            let h = std::f64::consts::FRAC_1_SQRT_2;
            assert_eq!(p.f()[0].0, 3);
            assert!((p.f()[0].1 - h).abs() < 1e-15 && (p.f()[1].1 - h).abs() < 1e-15);
            assert!((p.g()[0].1 - h).abs() < 1e-15 && (p.g()[1].1 + h).abs() < 1e-15);
        }
    }

    #[test]
    fn pair_vectors_unequal_weights() {
        // |0000>: amplitude 1; |1111>: (1 - 0.36)^{4/2} = 0.8^4.
        let p = damped_pair_vectors(w("0000"), 0.36).unwrap();
        let raw_b = 0.8f64.powi(4);
        let norm = (1.0 + raw_b * raw_b).sqrt();
        assert!((p.f()[0].1 - 1.0 / norm).abs() < 1e-15);
        assert!((p.f()[1].1 - raw_b / norm).abs() < 1e-15);
        let f = p.f();
        let g = p.g();
        assert!((f[0].1 * g[0].1 + f[1].1 * g[1].1).abs() < 1e-15);
        assert!((f[0].1.hypot(f[1].1) - 1.0).abs() < 1e-15);
        // Either member of the pair gives the same basis.
        assert_eq!(damped_pair_vectors(w("1111"), 0.36).unwrap(), p);
    }

    #[test]
    fn pair_vectors_at_full_decay() {
        let p = damped_pair_vectors(w("0000"), 1.0).unwrap();
        assert_eq!(p.f(), [(0, 1.0), (15, 0.0)]);
        let p = damped_pair_vectors(w("0011"), 1.0).unwrap();
        let f = p.f();
        let g = p.g();
        assert!((f[0].1 * g[0].1 + f[1].1 * g[1].1).abs() < 1e-15);
    }

    #[test]
    fn four_two_trace() {
        let r = build_recovery(&code42(), 0.1).unwrap();
        assert_eq!(r.elements()[0].rank(), 2);
        // weight-1 errors 0001, 0010, 0100, 1000 in that order
        let e1000 = r.elements().iter().find(|e| e.error == w("1000")).unwrap();
        assert!(e1000.assignments.contains(&Assignment {
            source: Source::Basis(w("0111")),
            target: w("0000"),
        }));
        assert!(e1000.assignments.contains(&Assignment {
            source: Source::Basis(w("0100")),
            target: w("0011"),
        }));
        let weight_one: usize = r
            .elements()
            .iter()
            .filter(|e| e.error.weight() == 1)
            .map(|e| e.rank())
            .sum();
        assert_eq!(weight_one, 8);
        // every weight-1 or weight-3 word has its unique parent as target
        for el in r.elements().iter().filter(|e| e.error.weight() == 1) {
            for a in &el.assignments {
                let Source::Basis(y) = a.source else {
                    panic!("basis source expected")
                };
                assert!(y.weight() == 1 || y.weight() == 3);
                let parent = CodeWord::new(u64::from(y.bits() | el.error.bits()), 4).unwrap();
                assert_eq!(parent.representative(), a.target);
            }
        }
        assert_eq!(r.total_rank(), 16);
        // 0101, 0110, 1001, 1010 are reached by weight-2 decays of 1111.
        let report = verify_recovery(&r, 1e-10).unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn rank_after_weight_one() {
        let r = build_recovery(&code42(), 0.1).unwrap();
        let upto: usize = r
            .elements()
            .iter()
            .filter(|e| e.error.weight() <= 1)
            .map(|e| e.rank())
            .sum();
        assert_eq!(upto, 10);
        let remaining: Vec<String> = r
            .elements()
            .iter()
            .filter(|e| e.error.weight() >= 2)
            .flat_map(|e| e.assignments.iter().map(|a| a.source.to_string()))
            .chain(r.completion().iter().map(|s| s.to_string()))
            .collect();
        assert_eq!(remaining.len(), 6);
        for s in ["g(0000)", "g(0011)", "|0101>", "|0110>", "|1001>", "|1010>"] {
            assert!(remaining.contains(&s.to_string()), "{s} missing from {remaining:?}");
        }
    }

    #[test]
    fn literal_set_uses_g_vectors() {
        let six =
            CodeSet::from_bitstrings(ConflictMode::Literal, &["0000", "1111", "0001", "1110", "0011", "1100"]).unwrap();
        let r = build_recovery(&six, 0.05).unwrap();
        let e0001 = r.elements().iter().find(|e| e.error == w("0001")).unwrap();
        // 0001 - 0001 = 0000 is a codeword: g(0000) goes to the pair of 0001.
        assert!(e0001.assignments.contains(&Assignment {
            source: Source::G(w("0000")),
            target: w("0001"),
        }));
        assert!(verify_recovery(&r, 1e-10).unwrap().passed());
    }

    #[test]
    fn gamma_zero_first_element_is_identity_on_code() {
        let r = build_recovery(&code42(), 0.0).unwrap();
        for a in &r.elements()[0].assignments {
            let Source::F(rep) = a.source else { panic!() };
            assert_eq!(rep, a.target);
            let v = a.source.vector(0.0);
            let t = RecoveryChannel::target_vector(a.target);
            assert_eq!(v, t.to_vec());
        }
        assert!(verify_recovery(&r, 1e-10).unwrap().passed());
    }

    #[test]
    fn duplicated_source_fails_gram() {
        let r = build_recovery(&code42(), 0.1).unwrap();
        let mut elements = r.elements().to_vec();
        let dup = elements[1].assignments[0];
        elements.last_mut().unwrap().assignments.push(dup);
        let bad = RecoveryChannel::from_parts(0.1, code42(), elements, r.completion().to_vec());
        let report = verify_recovery(&bad, 1e-10).unwrap();
        assert!(!report.gram_ok());
        assert!(!report.passed());
    }

    #[test]
    fn rejects_invalid_input() {
        let bad = CodeSet::from_bitstrings(ConflictMode::Strict, &["0000", "0011"]).unwrap();
        assert!(matches!(build_recovery(&bad, 0.1), Err(Error::InvalidCode(_))));
        assert!(build_recovery(&code42(), 1.0).is_err());
    }

    #[test]
    fn json_shape() {
        let r = build_recovery(&code42(), 0.1).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(v["gamma"], 0.1);
        assert_eq!(v["elements"][0]["assignments"][0]["source"]["kind"], "f");
        assert_eq!(v["elements"][0]["assignments"][0]["source"]["word"], "0000");
        assert_eq!(v["elements"][0]["assignments"][0]["target_pair"], "0000");
        assert_eq!(v["completion_rank"], r.completion().len());
    }
}
