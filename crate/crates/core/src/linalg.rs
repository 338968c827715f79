//! Small complex linear algebra: dense matrices, sparse operators, a
//! Hermitian eigensolver and fidelity between density matrices.
//!
//! Basis index `i` of an `n`-qubit space is the integer value of the
//! bitstring with qubit 1 as the most significant bit.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance for Hermitian checks on general matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance for density-matrix invariants.
pub const STATE_TOL: f64 = 1e-10;
/// Eigenvalues below `-PSD_ERROR_TOL` are treated as genuine negativity.
pub const PSD_ERROR_TOL: f64 = 1e-6;

const MAX_ELEMENTS: usize = 1 << 28;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let len = rows.checked_mul(cols).filter(|&l| l <= MAX_ELEMENTS);
        let len = len.unwrap_or_else(|| panic!("{}", Error::SizeOverflow(rows, cols)));
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); len],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == cols), "ragged rows");
        Self::from_fn(r, cols, |i, j| rows[i][j])
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        Self::from_fn(rows.len(), cols, |i, j| c(rows[i][j], 0.0))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = c(v, 0.0);
        }
        m
    }

    /// `|v><v|`.
    pub fn outer(v: &[C64], w: &[C64]) -> Self {
        Self::from_fn(v.len(), w.len(), |i, j| v[i] * w[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise `|a - b|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest `|M_ij - conj(M_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(self.cols, rhs.rows));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let src = rhs.row(k);
                for (o, &b) in out.row_mut(i).iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Kronecker product `self ⊗ rhs`; `self` acts on the leading qubits.
    pub fn kron(&self, rhs: &Self) -> Result<Self> {
        let rows = self.rows.checked_mul(rhs.rows);
        let cols = self.cols.checked_mul(rhs.cols);
        match (rows, cols) {
            (Some(r), Some(cc)) if r.checked_mul(cc).is_some_and(|l| l <= MAX_ELEMENTS) => {
                Ok(Self::from_fn(r, cc, |i, j| {
                    self[(i / rhs.rows, j / rhs.cols)] * rhs[(i % rhs.rows, j % rhs.cols)]
                }))
            }
            _ => Err(Error::SizeOverflow(
                self.rows.saturating_mul(rhs.rows),
                self.cols.saturating_mul(rhs.cols),
            )),
        }
    }

    /// `<v| M |w>`.
    pub fn sandwich(&self, v: &[C64], w: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (i, vi) in v.iter().enumerate() {
            if *vi == C64::new(0.0, 0.0) {
                continue;
            }
            let row = self.row(i);
            let inner: C64 = row.iter().zip(w).map(|(m, x)| m * x).sum();
            acc += vi.conj() * inner;
        }
        acc
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: Self) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: Self) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: Self) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix product dimensions")
    }
}

/// Square sparse operator with at most one entry per `(row, col)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOperator {
    /// Duplicate coordinates are summed; exact zeros are dropped.
    pub fn from_entries(dim: usize, entries: impl IntoIterator<Item = (usize, usize, C64)>) -> Result<Self> {
        let mut entries: Vec<_> = entries.into_iter().collect();
        if let Some(&(r, col, _)) = entries.iter().find(|(r, col, _)| *r >= dim || *col >= dim) {
            return Err(Error::DimensionMismatch(r.max(col), dim));
        }
        entries.sort_by_key(|&(r, col, _)| (r, col));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(entries.len());
        for (r, col, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == col => last.2 += v,
                _ => merged.push((r, col, v)),
            }
        }
        merged.retain(|e| e.2 != C64::new(0.0, 0.0));
        Ok(Self { dim, entries: merged })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn from_dense(m: &ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(m.rows(), m.cols()));
        }
        let entries = (0..m.rows()).flat_map(|i| (0..m.cols()).map(move |j| (i, j, m[(i, j)])));
        Self::from_entries(m.rows(), entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.dim, self.dim);
        for &(r, col, v) in &self.entries {
            m[(r, col)] = v;
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut entries: Vec<_> = self.entries.iter().map(|&(r, col, v)| (col, r, v.conj())).collect();
        entries.sort_by_key(|&(r, col, _)| (r, col));
        Self { dim: self.dim, entries }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim];
        for &(r, col, a) in &self.entries {
            out[r] += a * v[col];
        }
        out
    }

    /// `out += K X K†`. Cost is `nnz^2`, which stays small for operators with
    /// a handful of entries per column.
    pub fn conjugate_accumulate(&self, x: &ComplexMatrix, out: &mut ComplexMatrix) {
        for &(r, col, a) in &self.entries {
            let xrow = x.row(col);
            let orow = out.row_mut(r);
            for &(r2, col2, b) in &self.entries {
                orow[r2] += a * xrow[col2] * b.conj();
            }
        }
    }

    /// `out += K† K`.
    pub fn gram_accumulate(&self, out: &mut ComplexMatrix) {
        // entries are sorted by row
        let mut start = 0;
        while start < self.entries.len() {
            let row = self.entries[start].0;
            let end = start + self.entries[start..].iter().take_while(|e| e.0 == row).count();
            let group = &self.entries[start..end];
            for &(_, c1, a) in group {
                for &(_, c2, b) in group {
                    out[(c1, c2)] += a.conj() * b;
                }
            }
            start = end;
        }
    }

    /// Sparse Kronecker product.
    pub fn kron(&self, rhs: &Self) -> Result<Self> {
        let dim = self
            .dim
            .checked_mul(rhs.dim)
            .ok_or(Error::SizeOverflow(self.dim, rhs.dim))?;
        let entries = self.entries.iter().flat_map(|&(r1, c1, a)| {
            rhs.entries
                .iter()
                .map(move |&(r2, c2, b)| (r1 * rhs.dim + r2, c1 * rhs.dim + c2, a * b))
        });
        Self::from_entries(dim, entries)
    }
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `j` is the eigenvector of `values[j]`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `V diag(f(λ)) V†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let fl: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| self.vectors[(i, k)] * fl[k] * self.vectors[(j, k)].conj())
                .sum()
        })
    }
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
pub fn hermitian_eigendecomposition(m: &ComplexMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(m.rows(), m.cols()));
    }
    let scale = m.max_abs().max(1.0);
    let dev = m.hermitian_deviation();
    if dev > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(dev));
    }
    let n = m.rows();
    let mut a = m.clone();
    // Exact Hermitian symmetrisation.
    for i in 0..n {
        a[(i, i)] = c(a[(i, i)].re, 0.0);
        for j in i + 1..n {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
    let mut v = ComplexMatrix::identity(n);
    let frob: f64 = a.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let threshold = f64::EPSILON * frob.max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= threshold {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let g = a[(p, q)];
                let gabs = g.norm();
                if gabs <= threshold * 1e-3 {
                    continue;
                }
                let phase = g / gabs;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * gabs);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                // U = diag(1, conj(phase)) · [[cs, sn], [-sn, cs]] on (p, q).
                let u_pp = c(cs, 0.0);
                let u_pq = c(sn, 0.0);
                let u_qp = -phase.conj() * sn;
                let u_qq = phase.conj() * cs;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * u_pp + akq * u_qp;
                    a[(k, q)] = akp * u_pq + akq * u_qq;
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * u_pp + vkq * u_qp;
                    v[(k, q)] = vkp * u_pq + vkq * u_qq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
                    a[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
                }
                a[(p, q)] = c(0.0, 0.0);
                a[(q, p)] = c(0.0, 0.0);
                a[(p, p)] = c(a[(p, p)].re, 0.0);
                a[(q, q)] = c(a[(q, q)].re, 0.0);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(HermitianEigen { values, vectors })
}

/// Rejects eigenvalues below `-1e-6 · scale` and zeroes those within the
/// numerical-rank threshold `4 · dim · ε · max|λ|`, whose square roots would
/// otherwise contribute `O(√ε)` each.
fn clamp_eigenvalues(values: &[f64], scale: f64) -> Result<Vec<f64>> {
    let top = values.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let floor = 4.0 * values.len() as f64 * f64::EPSILON * top;
    values
        .iter()
        .map(|&l| {
            if l < -PSD_ERROR_TOL * scale {
                Err(Error::NotPositive(l))
            } else if l <= floor {
                Ok(0.0)
            } else {
                Ok(l)
            }
        })
        .collect()
}

/// `tr √M` for positive semidefinite `M`. Round-off negativity is clamped to
/// zero; eigenvalues below `-1e-6 · max(1, ‖M‖)` are rejected.
pub fn psd_sqrt_trace(m: &ComplexMatrix) -> Result<f64> {
    let eig = hermitian_eigendecomposition(m)?;
    let values = clamp_eigenvalues(&eig.values, m.max_abs().max(1.0))?;
    Ok(values.iter().map(|l| l.sqrt()).sum())
}

/// Principal square root of a positive semidefinite matrix.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eigendecomposition(m)?;
    let values = clamp_eigenvalues(&eig.values, m.max_abs().max(1.0))?;
    let n = values.len();
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        (0..n)
            .map(|k| eig.vectors[(i, k)] * values[k].sqrt() * eig.vectors[(j, k)].conj())
            .sum()
    }))
}

/// A validated density matrix, optionally carrying the orthonormal support
/// of a normalized projector `P / k`.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    /// `k x dim`, orthonormal rows spanning the support of `P`.
    projector_support: Option<ComplexMatrix>,
}

impl DensityMatrix {
    /// Checks Hermiticity, unit trace and positivity.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let dm = Self::new_unchecked_positivity(matrix)?;
        let eig = hermitian_eigendecomposition(&dm.matrix)?;
        if let Some(&min) = eig.values.first() {
            if min < -STATE_TOL {
                return Err(Error::NotPositive(min));
            }
        }
        Ok(dm)
    }

    /// Checks Hermiticity and unit trace only; used for outputs of
    /// completely positive maps where positivity holds by construction.
    pub fn new_unchecked_positivity(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(matrix.rows(), matrix.cols()));
        }
        let dev = matrix.hermitian_deviation();
        if dev > STATE_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::Trace(tr.re));
        }
        Ok(Self {
            matrix,
            projector_support: None,
        })
    }

    /// `|ψ><ψ|` for a unit vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        Self::new_unchecked_positivity(ComplexMatrix::outer(psi, psi))
    }

    /// `P / k` where the rows of `support` are an orthonormal basis of `P`'s range.
    pub fn normalized_projector(support: ComplexMatrix) -> Result<Self> {
        let k = support.rows();
        if k == 0 {
            return Err(Error::DimensionMismatch(0, support.cols()));
        }
        let gram = support.matmul(&support.adjoint())?;
        let dev = gram.max_abs_diff(&ComplexMatrix::identity(k));
        if dev > STATE_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let proj = support.adjoint().matmul(&support)?.scale(c(1.0 / k as f64, 0.0));
        let mut dm = Self::new_unchecked_positivity(proj)?;
        dm.projector_support = Some(support);
        Ok(dm)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale(c(1.0 / dim as f64, 0.0)),
            projector_support: Some(ComplexMatrix::identity(dim)),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn projector_support(&self) -> Option<&ComplexMatrix> {
        self.projector_support.as_ref()
    }

    /// The same state without the projector flag, forcing the full-space path.
    pub fn without_projector_flag(&self) -> Self {
        Self {
            matrix: self.matrix.clone(),
            projector_support: None,
        }
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        Self::new_unchecked_positivity(self.matrix.kron(&other.matrix)?)
    }
}

/// `tr √(√ρ σ √ρ)`. When either state is a flagged normalized projector
/// `P/k`, this reduces to `tr √(B σ B†) / √k` with `B` the support basis.
pub fn uhlmann_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    let (flagged, other) = match (rho.projector_support(), sigma.projector_support()) {
        (Some(b), _) => (Some(b), sigma),
        (None, Some(b)) => (Some(b), rho),
        _ => (None, sigma),
    };
    if let Some(basis) = flagged {
        let k = basis.rows() as f64;
        let reduced = basis.matmul(other.matrix())?.matmul(&basis.adjoint())?;
        return Ok(psd_sqrt_trace(&reduced)? / k.sqrt());
    }
    let root = psd_sqrt(rho.matrix())?;
    let inner = root.matmul(sigma.matrix())?.matmul(&root)?;
    psd_sqrt_trace(&inner)
}

pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.kron(b)
}
