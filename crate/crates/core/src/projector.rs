//! Hermitian projections, stored either by an orthonormal frame of their
//! range or, for the diagonal case, by the set of basis strings they keep.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::bits::Bitstring;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64, ONE};
use crate::state::{bernoulli_weight, StatePrefix, DENSE_QUBIT_CAP, DIAGONAL_QUBIT_CAP};
use crate::tol::Tolerances;

/// When the rank of a dense projector is read off its trace.
const RANK_TRACE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    /// `frame` is `dim × rank` with orthonormal columns and `mat = F F†`.
    Dense { frame: DMatrix<C64>, mat: CMatrix },
    /// `P_S = Σ_{σ∈S} |σ⟩⟨σ|` by basis index.
    Basis(BTreeSet<u64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    qubits: usize,
    rank: usize,
    repr: Repr,
}

impl Projector {
    pub fn zero(qubits: usize) -> Self {
        Projector { qubits, rank: 0, repr: Repr::Basis(BTreeSet::new()) }
    }

    pub fn identity(qubits: usize) -> Result<Self> {
        check_basis_cap(qubits)?;
        Ok(Projector::from_basis_indices(qubits, (0..1u64 << qubits).collect()))
    }

    /// `P_S` for a set of strings of length `qubits`.
    pub fn basis(qubits: usize, strings: impl IntoIterator<Item = Bitstring>) -> Result<Self> {
        check_basis_cap(qubits)?;
        let mut set = BTreeSet::new();
        for s in strings {
            if s.len() != qubits {
                return Err(Error::DimensionMismatch { expected: qubits, found: s.len() });
            }
            set.insert(s.index());
        }
        Ok(Projector::from_basis_indices(qubits, set))
    }

    pub(crate) fn from_basis_indices(qubits: usize, set: BTreeSet<u64>) -> Self {
        Projector { qubits, rank: set.len(), repr: Repr::Basis(set) }
    }

    /// The projection onto the cylinder `⟦prefix⟧` at level `qubits`.
    pub fn cylinder(prefix: Bitstring, qubits: usize) -> Result<Self> {
        if prefix.len() > qubits {
            return Ok(Projector::zero(qubits));
        }
        check_basis_cap(qubits)?;
        let shift = qubits - prefix.len();
        let lo = prefix.index() << shift;
        Ok(Projector::from_basis_indices(qubits, (lo..lo + (1u64 << shift)).collect()))
    }

    /// From a dense Hermitian idempotent matrix.
    pub fn from_matrix(mat: CMatrix, tol: &Tolerances) -> Result<Self> {
        check_dense_cap(mat.qubits())?;
        let herm = mat.hermitian_deviation();
        if herm > tol.herm {
            return Err(Error::NotHermitian(herm));
        }
        let idem = (&(&mat * &mat) - &mat).max_abs();
        if idem > tol.proj {
            return Err(Error::NotProjection(idem));
        }
        let eig = mat.hermitian_eigen();
        let rank = eig.values.iter().filter(|&&v| v > 0.5).count();
        let tr = mat.trace().re;
        if (tr - rank as f64).abs() > RANK_TRACE_TOL {
            return Err(Error::NotProjection((tr - rank as f64).abs()));
        }
        let frame = eig.vectors.columns(0, rank).into_owned();
        Ok(Projector { qubits: mat.qubits(), rank, repr: Repr::Dense { frame, mat } })
    }

    /// From orthonormal columns spanning the range.
    pub fn from_frame(frame: DMatrix<C64>, tol: &Tolerances) -> Result<Self> {
        let qubits = linalg::qubits_of_dim(frame.nrows())?;
        check_dense_cap(qubits)?;
        let defect = linalg::orthonormality_defect(&frame);
        if defect > tol.proj {
            return Err(Error::NotOrthonormal(defect));
        }
        Ok(Projector::from_frame_unchecked(frame))
    }

    pub(crate) fn from_frame_unchecked(frame: DMatrix<C64>) -> Self {
        let mat = CMatrix::gram_of_columns(&frame).expect("power-of-two rows");
        let qubits = mat.qubits();
        Projector { qubits, rank: frame.ncols(), repr: Repr::Dense { frame, mat } }
    }

    pub fn from_vectors(qubits: usize, vectors: &[CVector], tol: &Tolerances) -> Result<Self> {
        if let Some(v) = vectors.iter().find(|v| v.len() != 1 << qubits) {
            return Err(Error::DimensionMismatch { expected: 1 << qubits, found: v.len() });
        }
        if vectors.is_empty() {
            return Ok(Projector::zero(qubits));
        }
        Projector::from_frame(linalg::columns(1 << qubits, vectors), tol)
    }

    /// Orthogonal projection onto the span of the union of the ranges of
    /// `parts`: eigenvectors of `Σ P_i` whose eigenvalue exceeds `cutoff`.
    pub fn span_union(qubits: usize, parts: &[&Projector], cutoff: f64) -> Result<Self> {
        if let Some(p) = parts.iter().find(|p| p.qubits != qubits) {
            return Err(Error::DimensionMismatch { expected: qubits, found: p.qubits });
        }
        let nonzero: Vec<&Projector> = parts.iter().copied().filter(|p| p.rank > 0).collect();
        if nonzero.is_empty() {
            return Ok(Projector::zero(qubits));
        }
        if nonzero.iter().all(|p| p.is_basis()) {
            let mut set = BTreeSet::new();
            for p in &nonzero {
                if let Repr::Basis(s) = &p.repr {
                    set.extend(s.iter().copied());
                }
            }
            return Ok(Projector::from_basis_indices(qubits, set));
        }
        if nonzero.len() == 1 {
            return Ok(nonzero[0].clone());
        }
        check_dense_cap(qubits)?;
        let mut sum = CMatrix::zeros(qubits);
        for p in &nonzero {
            sum = &sum + &p.to_matrix()?;
        }
        let eig = sum.hermitian_eigen();
        let rank = eig.values.iter().filter(|&&v| v > cutoff).count();
        Ok(Projector::from_frame_unchecked(eig.vectors.columns(0, rank).into_owned()))
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_zero(&self) -> bool {
        self.rank == 0
    }

    pub fn is_basis(&self) -> bool {
        matches!(self.repr, Repr::Basis(_))
    }

    /// Basis indices kept by a diagonal projector.
    pub fn basis_indices(&self) -> Option<&BTreeSet<u64>> {
        match &self.repr {
            Repr::Basis(s) => Some(s),
            Repr::Dense { .. } => None,
        }
    }

    /// `τ_n(P) = 2^{-n} rank(P)`.
    pub fn tau_mass(&self) -> f64 {
        self.rank as f64 / 2f64.powi(self.qubits as i32)
    }

    /// `Tr(b_n P) = Σ_σ p^{#0}(1-p)^{#1} ⟨σ|P|σ⟩`.
    pub fn bernoulli_mass(&self, p: f64) -> f64 {
        match &self.repr {
            Repr::Basis(s) => s
                .iter()
                .map(|&i| bernoulli_weight(p, Bitstring::from_index(self.qubits, i)))
                .sum(),
            Repr::Dense { mat, .. } => Bitstring::all(self.qubits)
                .map(|s| bernoulli_weight(p, s) * mat.get(s.index() as usize, s.index() as usize).re)
                .sum(),
        }
    }

    /// `⟨σ|P|σ⟩`.
    pub fn diag_entry(&self, index: u64) -> f64 {
        match &self.repr {
            Repr::Basis(s) => s.contains(&index) as u8 as f64,
            Repr::Dense { mat, .. } => mat.get(index as usize, index as usize).re,
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        match &self.repr {
            Repr::Dense { mat, .. } => Ok(mat.clone()),
            Repr::Basis(s) => {
                check_dense_cap(self.qubits)?;
                let mut diag = vec![0.0; self.dim()];
                for &i in s {
                    diag[i as usize] = 1.0;
                }
                CMatrix::from_real_diagonal(&diag)
            }
        }
    }

    /// Orthonormal columns spanning the range.
    pub fn frame(&self) -> Result<DMatrix<C64>> {
        match &self.repr {
            Repr::Dense { frame, .. } => Ok(frame.clone()),
            Repr::Basis(s) => {
                check_dense_cap(self.qubits)?;
                let mut f = DMatrix::zeros(self.dim(), s.len());
                for (j, &i) in s.iter().enumerate() {
                    f[(i as usize, j)] = ONE;
                }
                Ok(f)
            }
        }
    }

    pub fn frame_vectors(&self) -> Result<Vec<CVector>> {
        let f = self.frame()?;
        Ok((0..f.ncols()).map(|j| f.column(j).into_owned()).collect())
    }

    /// `P ⊗ I₂`.
    pub fn lift(&self) -> Projector {
        match &self.repr {
            Repr::Basis(s) => Projector::from_basis_indices(
                self.qubits + 1,
                s.iter().flat_map(|&i| [2 * i, 2 * i + 1]).collect(),
            ),
            Repr::Dense { frame, .. } => {
                let mut f = DMatrix::zeros(2 * frame.nrows(), 2 * frame.ncols());
                for j in 0..frame.ncols() {
                    for i in 0..frame.nrows() {
                        f[(2 * i, 2 * j)] = frame[(i, j)];
                        f[(2 * i + 1, 2 * j + 1)] = frame[(i, j)];
                    }
                }
                Projector::from_frame_unchecked(f)
            }
        }
    }

    /// `‖P (L ⊗ I) − (L ⊗ I)‖_max` for `self = P` on one more qubit than
    /// `lower = L`; zero exactly when `range(L ⊗ I) ⊆ range(P)`.
    pub fn nesting_defect(&self, lower: &Projector) -> Result<f64> {
        if self.qubits != lower.qubits + 1 {
            return Err(Error::DimensionMismatch { expected: lower.qubits + 1, found: self.qubits });
        }
        if lower.is_zero() {
            return Ok(0.0);
        }
        if let (Repr::Basis(hi), Repr::Basis(lo)) = (&self.repr, &lower.repr) {
            let inside = lo.iter().all(|&i| hi.contains(&(2 * i)) && hi.contains(&(2 * i + 1)));
            return Ok(if inside { 0.0 } else { 1.0 });
        }
        let w = lower.lift().frame()?;
        let p = self.to_matrix()?;
        let residual = p.as_matrix() * &w - &w;
        let defect = residual * w.adjoint();
        Ok(defect.iter().map(|c| c.norm()).fold(0.0, f64::max))
    }

    /// `‖P S − S‖_max` with `S` the projection `sub` on the same space;
    /// zero exactly when `range(S) ⊆ range(P)`.
    pub fn inclusion_defect(&self, sub: &Projector) -> Result<f64> {
        if self.qubits != sub.qubits {
            return Err(Error::DimensionMismatch { expected: self.qubits, found: sub.qubits });
        }
        if sub.is_zero() {
            return Ok(0.0);
        }
        if let (Repr::Basis(hi), Repr::Basis(lo)) = (&self.repr, &sub.repr) {
            return Ok(if lo.is_subset(hi) { 0.0 } else { 1.0 });
        }
        let w = sub.frame()?;
        let residual = self.to_matrix()?.as_matrix() * &w - &w;
        let defect = residual * w.adjoint();
        Ok(defect.iter().map(|c| c.norm()).fold(0.0, f64::max))
    }

    /// `Re Tr(ρ P)` for a dense matrix `ρ` on the same space.
    pub fn expectation_dense(&self, rho: &CMatrix) -> f64 {
        assert_eq!(rho.qubits(), self.qubits, "dimension mismatch");
        match &self.repr {
            Repr::Basis(s) => s.iter().map(|&i| rho.get(i as usize, i as usize).re).sum(),
            Repr::Dense { frame, .. } => {
                let rf = rho.as_matrix() * frame;
                (0..frame.ncols()).map(|j| frame.column(j).dotc(&rf.column(j)).re).sum()
            }
        }
    }
}

fn check_dense_cap(qubits: usize) -> Result<()> {
    if qubits > DENSE_QUBIT_CAP {
        return Err(Error::DepthCap { depth: qubits, cap: DENSE_QUBIT_CAP });
    }
    Ok(())
}

fn check_basis_cap(qubits: usize) -> Result<()> {
    if qubits > DIAGONAL_QUBIT_CAP {
        return Err(Error::DepthCap { depth: qubits, cap: DIAGONAL_QUBIT_CAP });
    }
    Ok(())
}

impl StatePrefix {
    /// `Tr(ρ_n P)` where `n` is the qubit count of `p`.
    ///
    /// Diagonal states never densify: the trace is a sum of weights against
    /// the diagonal of `p`.
    pub fn trace_with(&self, p: &Projector) -> Result<f64> {
        let n = p.qubits();
        if n == 0 || n > self.depth() {
            return Err(Error::InvalidParameter(format!(
                "projector on {n} qubits against a state of depth {}",
                self.depth()
            )));
        }
        if !self.is_diagonal() {
            return Ok(p.expectation_dense(self.dense_level(n)?.mat()));
        }
        if let Some(x) = self.classical_bits() {
            return Ok(p.diag_entry(x.prefix(n).index()));
        }
        match (&p.repr, self.bernoulli_p()) {
            (Repr::Basis(s), Some(q)) => {
                Ok(s.iter().map(|&i| bernoulli_weight(q, Bitstring::from_index(n, i))).sum())
            }
            (Repr::Dense { .. }, Some(q)) => Ok(p.bernoulli_mass(q)),
            _ => {
                let mut acc = 0.0;
                self.for_each_weight(n, |s, w| acc += w * p.diag_entry(s.index()))?;
                Ok(acc)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{make_classical, make_tau};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn dense_and_basis_agree() {
        let b = Projector::basis(2, ["01".parse().unwrap(), "11".parse().unwrap()]).unwrap();
        let d = Projector::from_matrix(b.to_matrix().unwrap(), &tol()).unwrap();
        assert_eq!(d.rank(), 2);
        assert_eq!(b.rank(), 2);
        let tau = make_tau(2).unwrap();
        assert!((tau.trace_with(&b).unwrap() - 0.5).abs() < 1e-15);
        assert!((tau.trace_with(&d).unwrap() - 0.5).abs() < 1e-15);
        let dense_tau = tau.to_dense().unwrap();
        assert!((dense_tau.trace_with(&d).unwrap() - 0.5).abs() < 1e-15);
        assert!((d.bernoulli_mass(0.25) - b.bernoulli_mass(0.25)).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_projections() {
        let m = CMatrix::from_real_diagonal(&[1.0, 0.5]).unwrap();
        assert!(matches!(Projector::from_matrix(m, &tol()), Err(Error::NotProjection(_))));
        let skew = CMatrix::from_fn(1, |i, j| if i == j { C64::new(0.0, 0.0) } else { C64::new(1.0, 0.0) * if i < j { 1.0 } else { -1.0 } });
        assert!(matches!(Projector::from_matrix(skew, &tol()), Err(Error::NotHermitian(_))));
        let bad = DMatrix::from_element(2, 1, ONE);
        assert!(matches!(Projector::from_frame(bad, &tol()), Err(Error::NotOrthonormal(_))));
    }

    #[test]
    fn lift_and_nesting() {
        let p = Projector::basis(1, ["0".parse().unwrap()]).unwrap();
        let lifted = p.lift();
        assert_eq!(lifted.basis_indices().unwrap().iter().copied().collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(lifted.nesting_defect(&p).unwrap(), 0.0);
        let ket00 = Projector::basis(2, ["00".parse().unwrap()]).unwrap();
        assert_eq!(ket00.nesting_defect(&p).unwrap(), 1.0);

        let dense = Projector::from_matrix(p.to_matrix().unwrap(), &tol()).unwrap();
        let dense_lift = dense.lift();
        assert!(dense_lift.nesting_defect(&dense).unwrap() < 1e-15);
        let dense00 = Projector::from_matrix(ket00.to_matrix().unwrap(), &tol()).unwrap();
        assert!(dense00.nesting_defect(&dense).unwrap() > 0.5);
    }

    #[test]
    fn cylinder_projector() {
        let c = Projector::cylinder("01".parse().unwrap(), 4).unwrap();
        assert_eq!(c.rank(), 4);
        assert_eq!(c.tau_mass(), 0.25);
        assert!(Projector::cylinder("0101".parse().unwrap(), 2).unwrap().is_zero());
        let x = make_classical("0110".parse().unwrap(), 4).unwrap();
        assert_eq!(x.trace_with(&c).unwrap(), 1.0);
    }

    #[test]
    fn span_union_of_overlapping_ranges() {
        let a = Projector::basis(2, ["00".parse().unwrap()]).unwrap();
        let b = Projector::basis(2, ["00".parse().unwrap(), "10".parse().unwrap()]).unwrap();
        let u = Projector::span_union(2, &[&a, &b], 1e-9).unwrap();
        assert_eq!(u.rank(), 2);
        let da = Projector::from_matrix(a.to_matrix().unwrap(), &tol()).unwrap();
        let du = Projector::span_union(2, &[&da, &b], 1e-9).unwrap();
        assert_eq!(du.rank(), 2);
        assert!(du.to_matrix().unwrap().max_abs_diff(&u.to_matrix().unwrap()) < 1e-12);
    }
}
