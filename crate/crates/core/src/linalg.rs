//! Dense complex matrices on `ℂ^(2^n)` and the handful of Hermitian
//! routines the rest of the crate is written against.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CVector = DVector<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Square complex matrix whose dimension is `2^qubits`.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    qubits: usize,
    m: DMatrix<C64>,
}

/// Hermitian eigendecomposition with eigenvalues sorted in descending order.
///
/// `vectors.column(i)` belongs to `values[i]`. Equal eigenvalues keep the
/// order in which the solver reported them, so the result is reproducible.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

pub fn qubits_of_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

impl CMatrix {
    pub fn zeros(qubits: usize) -> Self {
        let d = 1usize << qubits;
        CMatrix { qubits, m: DMatrix::zeros(d, d) }
    }

    pub fn identity(qubits: usize) -> Self {
        let d = 1usize << qubits;
        CMatrix { qubits, m: DMatrix::identity(d, d) }
    }

    pub fn from_fn(qubits: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        let d = 1usize << qubits;
        CMatrix { qubits, m: DMatrix::from_fn(d, d, f) }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        let qubits = qubits_of_dim(diag.len())?;
        Ok(CMatrix::from_fn(qubits, |i, j| if i == j { C64::new(diag[i], 0.0) } else { ZERO }))
    }

    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let qubits = qubits_of_dim(m.nrows())?;
        Ok(CMatrix { qubits, m })
    }

    /// Row-major `[re, im]` pairs, the JSON layout of dense levels.
    pub fn from_rows(rows: &[Vec<[f64; 2]>]) -> Result<Self> {
        let qubits = qubits_of_dim(rows.len())?;
        let d = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: bad.len() });
        }
        Ok(CMatrix::from_fn(qubits, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
    }

    pub fn to_rows(&self) -> Vec<Vec<[f64; 2]>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| [self.m[(i, j)].re, self.m[(i, j)].im]).collect())
            .collect()
    }

    /// `Σ |u⟩⟨u|` over the columns of `frame`.
    pub fn gram_of_columns(frame: &DMatrix<C64>) -> Result<Self> {
        CMatrix::from_matrix(frame * frame.adjoint())
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn adjoint(&self) -> Self {
        CMatrix { qubits: self.qubits, m: self.m.adjoint() }
    }

    pub fn scale(&self, s: f64) -> Self {
        CMatrix { qubits: self.qubits, m: &self.m * C64::new(s, 0.0) }
    }

    /// `(A + A†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let m = (&self.m + self.m.adjoint()) * C64::new(0.5, 0.0);
        CMatrix { qubits: self.qubits, m }
    }

    /// Largest `|A[i,j] - conj(A[j,i])|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.m[(i, j)] - self.m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.m.iter().zip(other.m.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// `A ⊗ I₂`.
    pub fn kron_identity(&self) -> Self {
        let d = self.dim();
        let mut m = DMatrix::zeros(2 * d, 2 * d);
        for j in 0..d {
            for i in 0..d {
                let a = self.m[(i, j)];
                if a != ZERO {
                    m[(2 * i, 2 * j)] = a;
                    m[(2 * i + 1, 2 * j + 1)] = a;
                }
            }
        }
        CMatrix { qubits: self.qubits + 1, m }
    }

    /// Traces out the last qubit: `out[i,j] = A[2i,2j] + A[2i+1,2j+1]`.
    pub fn partial_trace_last(&self) -> Result<Self> {
        if self.qubits == 0 {
            return Err(Error::ZeroQubits);
        }
        let h = self.dim() / 2;
        let m = DMatrix::from_fn(h, h, |i, j| self.m[(2 * i, 2 * j)] + self.m[(2 * i + 1, 2 * j + 1)]);
        Ok(CMatrix { qubits: self.qubits - 1, m })
    }

    /// Eigendecomposition of the Hermitian part of `self`.
    pub fn hermitian_eigen(&self) -> Eigen {
        let sym = SymmetricEigen::new(self.hermitian_part().m);
        let mut order: Vec<usize> = (0..sym.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| sym.eigenvalues[b].total_cmp(&sym.eigenvalues[a]));
        let values = order.iter().map(|&i| sym.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(self.dim(), order.len(), |r, c| sym.eigenvectors[(r, order[c])]);
        Eigen { values, vectors }
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.hermitian_eigen().values[0]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.hermitian_eigen().values.last().expect("nonempty matrix")
    }

    /// `Re ⟨u|A|u⟩`.
    pub fn expectation(&self, u: &CVector) -> f64 {
        u.dotc(&(&self.m * u)).re
    }

    /// `Re Tr(A·B)` without forming the product.
    pub fn trace_product(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        let d = self.dim();
        let mut acc = 0.0;
        for i in 0..d {
            for k in 0..d {
                acc += (self.m[(i, k)] * other.m[(k, i)]).re;
            }
        }
        acc
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.qubits, rhs.qubits, "dimension mismatch");
        CMatrix { qubits: self.qubits, m: &self.m + &rhs.m }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.qubits, rhs.qubits, "dimension mismatch");
        CMatrix { qubits: self.qubits, m: &self.m - &rhs.m }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.qubits, rhs.qubits, "dimension mismatch");
        CMatrix { qubits: self.qubits, m: &self.m * &rhs.m }
    }
}

/// `u ⊗ |bit⟩`.
pub fn kron_bit(u: &CVector, bit: bool) -> CVector {
    let mut out = CVector::zeros(2 * u.len());
    for (i, a) in u.iter().enumerate() {
        out[2 * i + bit as usize] = *a;
    }
    out
}

pub fn basis_vector(dim: usize, index: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[index] = ONE;
    v
}

/// Rotates `v` so that its first component of (numerically) largest modulus
/// is real and positive.
pub fn canonicalize_phase(v: &mut CVector) {
    let top = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if top == 0.0 {
        return;
    }
    let pivot = v.iter().find(|c| c.norm() >= top - 1e-12).copied().expect("pivot exists");
    let phase = pivot.conj() / pivot.norm();
    for c in v.iter_mut() {
        *c *= phase;
    }
}

/// Largest deviation of `F†F` from the identity.
pub fn orthonormality_defect(frame: &DMatrix<C64>) -> f64 {
    let g = frame.adjoint() * frame;
    let mut worst = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}

/// Stacks vectors as the columns of a `dim × len` matrix.
pub fn columns(dim: usize, vs: &[CVector]) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(dim, vs.len());
    for (j, v) in vs.iter().enumerate() {
        m.set_column(j, v);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn kron_and_partial_trace_are_adjoint_shapes() {
        let a = CMatrix::from_fn(1, |i, j| c((i + 2 * j) as f64, i as f64 - j as f64));
        let lifted = a.kron_identity();
        assert_eq!(lifted.qubits(), 2);
        assert_eq!(lifted.get(2, 0), a.get(1, 0));
        assert_eq!(lifted.get(3, 1), a.get(1, 0));
        assert_eq!(lifted.get(2, 1), ZERO);
        // PT(A ⊗ I) = 2A
        assert_eq!(lifted.partial_trace_last().unwrap(), a.scale(2.0));
        assert!(CMatrix::identity(0).partial_trace_last().is_err());
    }

    #[test]
    fn eigen_sorted_descending() {
        let m = CMatrix::from_real_diagonal(&[0.1, 3.0, -1.0, 2.0]).unwrap();
        let e = m.hermitian_eigen();
        assert_eq!(e.values.len(), 4);
        for w in e.values.windows(2) {
            assert!(w[0] >= w[1]);
        }
        assert!((e.values[0] - 3.0).abs() < 1e-12);
        assert!((e.vectors[(1, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phase_canonical() {
        let mut v = CVector::from_vec(vec![c(0.0, 0.6), c(0.0, -0.8)]);
        canonicalize_phase(&mut v);
        assert!(v[1].im.abs() < 1e-15 && v[1].re > 0.0);
        assert!((v[1].re - 0.8).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert_eq!(qubits_of_dim(3), Err(Error::NotPowerOfTwo(3)));
        assert!(CMatrix::from_real_diagonal(&[1.0, 2.0, 3.0]).is_err());
        assert_eq!(qubits_of_dim(1), Ok(0));
    }

    #[test]
    fn trace_product_matches_multiplication() {
        let a = CMatrix::from_fn(2, |i, j| c((i * j) as f64, (i + j) as f64 * 0.5));
        let b = CMatrix::from_fn(2, |i, j| c(1.0 / (1.0 + i as f64 + j as f64), -(j as f64)));
        assert!(((&a * &b).trace().re - a.trace_product(&b)).abs() < 1e-12);
    }
}
