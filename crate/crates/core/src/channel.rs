//! Amplitude-damping noise as explicit Kraus operators.
//!
//! The `n`-qubit channel is the tensor power of the single-qubit channel
//! `E0 = diag(1, √(1-γ))`, `E1 = √γ |0><1|`. Its `2^n` Kraus operators are
//! indexed by the decay pattern `e`: `K_e |x> = √γ^|e| √(1-γ)^(|x|-|e|) |x - e>`
//! when `e ≤ x` bitwise, and `0` otherwise.

use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix, DensityMatrix, SparseOperator};

/// Default largest qubit count for dense simulation (density matrices of
/// dimension 4096).
pub const DEFAULT_SIMULATION_LIMIT: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelParams {
    gamma: f64,
    n: usize,
}

impl ChannelParams {
    pub fn new(gamma: f64, n: usize) -> Result<Self> {
        check_gamma(gamma)?;
        if n == 0 {
            return Err(Error::Config("qubit count must be positive".into()));
        }
        Ok(Self { gamma, n })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::Gamma(gamma))
    }
}

/// A completely positive map `ρ ↦ Σ K ρ K†`.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    dim: usize,
    elements: Vec<SparseOperator>,
}

impl KrausChannel {
    pub fn new(dim: usize, elements: Vec<SparseOperator>) -> Result<Self> {
        if let Some(e) = elements.iter().find(|e| e.dim() != dim) {
            return Err(Error::DimensionMismatch(e.dim(), dim));
        }
        Ok(Self { dim, elements })
    }

    pub fn identity(dim: usize) -> Self {
        let id = SparseOperator::from_entries(dim, (0..dim).map(|i| (i, i, c(1.0, 0.0)))).expect("in range");
        Self {
            dim,
            elements: vec![id],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[SparseOperator] {
        &self.elements
    }

    /// Applies the map to an arbitrary (not necessarily Hermitian) operator.
    pub fn apply_to_operator(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.rows() != self.dim || x.cols() != self.dim {
            return Err(Error::DimensionMismatch(x.rows(), self.dim));
        }
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for k in &self.elements {
            k.conjugate_accumulate(x, &mut out);
        }
        Ok(out)
    }

    /// `Σ K† K`.
    pub fn gram(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for k in &self.elements {
            k.gram_accumulate(&mut out);
        }
        out
    }

    /// Largest entrywise deviation of `Σ K† K` from the identity.
    pub fn trace_preserving_deviation(&self) -> f64 {
        self.gram().max_abs_diff(&ComplexMatrix::identity(self.dim))
    }
}

pub fn single_qubit_ad_kraus(gamma: f64) -> Result<KrausChannel> {
    check_gamma(gamma)?;
    let e0 = SparseOperator::from_entries(2, [(0, 0, c(1.0, 0.0)), (1, 1, c((1.0 - gamma).sqrt(), 0.0))])?;
    let e1 = SparseOperator::from_entries(2, [(0, 1, c(gamma.sqrt(), 0.0))])?;
    KrausChannel::new(2, vec![e0, e1])
}

pub fn multi_qubit_ad_kraus(params: ChannelParams) -> Result<KrausChannel> {
    multi_qubit_ad_kraus_with_limit(params, DEFAULT_SIMULATION_LIMIT)
}

/// As [`multi_qubit_ad_kraus`] with an explicit qubit cap. Element `e` of
/// the result is the Kraus operator for decay pattern `e`.
pub fn multi_qubit_ad_kraus_with_limit(params: ChannelParams, limit: usize) -> Result<KrausChannel> {
    let n = params.n;
    if n > limit || n >= usize::BITS as usize {
        return Err(Error::LimitExceeded {
            what: "simulation",
            n,
            limit,
        });
    }
    let dim = 1usize << n;
    let decay = params.gamma.sqrt();
    let keep = (1.0 - params.gamma).sqrt();
    let elements = (0..dim)
        .map(|e| {
            let flips = e.count_ones() as i32;
            let entries = (0..dim).filter(|x| x & e == e).map(|x| {
                let stay = x.count_ones() as i32 - flips;
                (x & !e, x, c(decay.powi(flips) * keep.powi(stay), 0.0))
            });
            SparseOperator::from_entries(dim, entries)
        })
        .collect::<Result<Vec<_>>>()?;
    KrausChannel::new(dim, elements)
}

/// `Σ K ρ K†`. An output that is not a unit-trace Hermitian matrix means the
/// channel is malformed.
pub fn apply_channel(ch: &KrausChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    let out = ch.apply_to_operator(rho.matrix())?;
    DensityMatrix::new_unchecked_positivity(out)
}

pub fn verify_trace_preserving(ch: &KrausChannel, tol: f64) -> bool {
    ch.trace_preserving_deviation() <= tol
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(ch: &KrausChannel) -> Vec<ComplexMatrix> {
        ch.elements().iter().map(SparseOperator::to_dense).collect()
    }

    #[test]
    fn single_qubit_examples() {
        let ch = single_qubit_ad_kraus(0.0).unwrap();
        let d = dense(&ch);
        assert_eq!(d[0], ComplexMatrix::identity(2));
        assert_eq!(d[1], ComplexMatrix::zeros(2, 2));

        let d = dense(&single_qubit_ad_kraus(1.0).unwrap());
        assert_eq!(d[0], ComplexMatrix::diagonal(&[1.0, 0.0]));
        assert_eq!(d[1][(0, 1)], c(1.0, 0.0));

        let d = dense(&single_qubit_ad_kraus(0.36).unwrap());
        assert!((d[0][(1, 1)].re - 0.8).abs() < 1e-15);
        assert!((d[1][(0, 1)].re - 0.6).abs() < 1e-15);

        assert!(single_qubit_ad_kraus(-0.1).is_err());
        assert!(single_qubit_ad_kraus(1.1).is_err());
    }

    #[test]
    fn multi_qubit_examples() {
        let g: f64 = 0.3;
        let one = multi_qubit_ad_kraus(ChannelParams::new(g, 1).unwrap()).unwrap();
        assert_eq!(dense(&one), dense(&single_qubit_ad_kraus(g).unwrap()));

        let two = multi_qubit_ad_kraus(ChannelParams::new(g, 2).unwrap()).unwrap();
        assert_eq!(two.elements().len(), 4);
        let k00 = two.elements()[0].to_dense();
        let want = [1.0, (1.0 - g).sqrt(), (1.0 - g).sqrt(), 1.0 - g];
        for (i, w) in want.iter().enumerate() {
            assert!((k00[(i, i)].re - w).abs() < 1e-15);
        }
        let k11 = &two.elements()[3];
        assert_eq!(k11.nnz(), 1);
        let (r, col, v) = k11.entries()[0];
        assert_eq!((r, col), (0, 3));
        assert!((v.re - g).abs() < 1e-15);

        assert!(multi_qubit_ad_kraus(ChannelParams::new(g, 13).unwrap()).is_err());
        assert!(multi_qubit_ad_kraus_with_limit(ChannelParams::new(g, 13).unwrap(), 13).is_ok());
    }

    #[test]
    fn at_most_one_entry_per_column() {
        let ch = multi_qubit_ad_kraus(ChannelParams::new(0.2, 4).unwrap()).unwrap();
        for k in ch.elements() {
            let mut cols: Vec<usize> = k.entries().iter().map(|e| e.1).collect();
            let len = cols.len();
            cols.dedup();
            assert_eq!(cols.len(), len);
        }
    }

    #[test]
    fn apply_examples() {
        let rho = DensityMatrix::new(ComplexMatrix::diagonal(&[0.0, 1.0])).unwrap();
        let same = apply_channel(&KrausChannel::identity(2), &rho).unwrap();
        assert_eq!(same.matrix(), rho.matrix());

        let out = apply_channel(&single_qubit_ad_kraus(0.5).unwrap(), &rho).unwrap();
        assert!(out.matrix().max_abs_diff(&ComplexMatrix::diagonal(&[0.5, 0.5])) < 1e-15);

        for g in [0.0, 0.1, 0.64, 1.0] {
            let plus = DensityMatrix::new(ComplexMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]])).unwrap();
            let out = apply_channel(&single_qubit_ad_kraus(g).unwrap(), &plus).unwrap();
            assert!((out.matrix()[(0, 1)].re - (1.0 - g).sqrt() / 2.0).abs() < 1e-15);
        }

        let wrong = DensityMatrix::maximally_mixed(4);
        assert!(apply_channel(&single_qubit_ad_kraus(0.1).unwrap(), &wrong).is_err());
    }

    #[test]
    fn trace_preservation() {
        let ch = multi_qubit_ad_kraus(ChannelParams::new(0.3, 4).unwrap()).unwrap();
        assert!(verify_trace_preserving(&ch, 1e-12));
        for n in 1..=5 {
            assert!(verify_trace_preserving(
                &multi_qubit_ad_kraus(ChannelParams::new(0.0, n).unwrap()).unwrap(),
                1e-12
            ));
        }
        let e0_only = KrausChannel::new(2, vec![single_qubit_ad_kraus(0.3).unwrap().elements()[0].clone()]).unwrap();
        assert!(!verify_trace_preserving(&e0_only, 1e-12));
        assert!((e0_only.trace_preserving_deviation() - 0.3).abs() < 1e-15);
    }
}
