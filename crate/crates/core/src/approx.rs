//! Greedy extraction of a maximal orthonormal set above an eigenvalue
//! threshold, and its use to approximate the class of density matrices that
//! sit inside many of a family of subspaces.

use std::cmp::Ordering;
use std::io;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::projector::Projector;
use crate::report::Check;
use crate::state::DensityMatrix;
use crate::tol::Tolerances;

/// Eigenvalues this close to the top one count as tied.
pub const TIE_EPS: f64 = 1e-12;

/// Seeds may sit this far below the threshold before they are rejected;
/// lifted seeds inherit rounding from the level below.
pub const SEED_SLACK: f64 = 1e-8;

/// Subspaces `M_1, …, M_K` of one space, a weight `d ≥ Σ rank(M_k)`, and
/// the class parameters `δ` and `m`.
#[derive(Clone, Debug)]
pub struct ApproxInstance {
    qubits: usize,
    subspaces: Vec<Projector>,
    d: f64,
    delta: f64,
    m: usize,
}

impl ApproxInstance {
    /// Uses `d = Σ rank(M_k)`.
    pub fn new(subspaces: Vec<Projector>, delta: f64, m: usize) -> Result<Self> {
        let d = subspaces.iter().map(|p| p.rank() as f64).sum();
        ApproxInstance::with_weight(subspaces, d, delta, m)
    }

    pub fn with_weight(subspaces: Vec<Projector>, d: f64, delta: f64, m: usize) -> Result<Self> {
        let first = subspaces.first().ok_or(Error::Empty("subspace family"))?;
        let qubits = first.qubits();
        if let Some(p) = subspaces.iter().find(|p| p.qubits() != qubits) {
            return Err(Error::DimensionMismatch { expected: qubits, found: p.qubits() });
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!("delta {delta} outside (0, 1)")));
        }
        if m < 1 {
            return Err(Error::InvalidParameter("m must be at least 1".into()));
        }
        let ranks: usize = subspaces.iter().map(Projector::rank).sum();
        if (ranks as f64) > d {
            return Err(Error::InvalidParameter(format!("d = {d} is below the total rank {ranks}")));
        }
        Ok(ApproxInstance { qubits, subspaces, d, delta, m })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn subspaces(&self) -> &[Projector] {
        &self.subspaces
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `V = Σ_k M_k`.
    pub fn v(&self) -> Result<CMatrix> {
        let mut v = CMatrix::zeros(self.qubits);
        for p in &self.subspaces {
            v = &v + &p.to_matrix()?;
        }
        Ok(v)
    }

    /// `λ = mδ/4`.
    pub fn lambda(&self) -> f64 {
        self.m as f64 * self.delta / 4.0
    }

    /// `4d/(δm)`.
    pub fn trace_bound(&self) -> f64 {
        4.0 * self.d / (self.delta * self.m as f64)
    }

    /// Number of subspaces with `Tr(ρ M_k) > δ`.
    pub fn hits(&self, rho: &CMatrix) -> usize {
        self.subspaces.iter().filter(|p| p.expectation_dense(rho) > self.delta).count()
    }

    /// Whether `ρ` lies in the class: `Tr(ρ M_k) > δ` for at least `m` indices.
    pub fn in_class(&self, rho: &DensityMatrix) -> bool {
        self.hits(rho.mat()) >= self.m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EigenStep {
    pub iteration: usize,
    pub theta: f64,
    pub accepted: bool,
}

/// Output of the greedy extension: the seeds followed by the accepted
/// vectors, the projection onto their span, and one log entry per
/// eigensolve.
#[derive(Clone, Debug)]
pub struct GreedyResult {
    pub basis: Vec<CVector>,
    pub projector: Projector,
    pub seeds: usize,
    pub eigen_log: Vec<EigenStep>,
}

impl GreedyResult {
    /// `Tr(M)`, the size of the basis.
    pub fn trace(&self) -> usize {
        self.basis.len()
    }

    pub fn accepted(&self) -> usize {
        self.basis.len() - self.seeds
    }

    pub fn write_eigen_log<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for step in &self.eigen_log {
            w.serialize(step).map_err(|e| Error::Format(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))
    }
}

/// Top eigenvalue of `P V P` with `P` the projection onto the orthogonal
/// complement of `basis`; zero when the basis spans everything.
pub fn residual_max(v: &CMatrix, basis: &[CVector]) -> f64 {
    if basis.len() >= v.dim() {
        return 0.0;
    }
    let p = complement(v.dim(), basis);
    let pvp = &(&p * v) * &p;
    pvp.max_eigenvalue()
}

fn complement(dim: usize, basis: &[CVector]) -> CMatrix {
    let mut p = DMatrix::<C64>::identity(dim, dim);
    if !basis.is_empty() {
        let f = linalg::columns(dim, basis);
        p -= &f * f.adjoint();
    }
    CMatrix::from_matrix(p).expect("power-of-two dimension")
}

/// Extends the orthonormal `seeds` greedily: with `P` the projection onto
/// the orthogonal complement of the current set, take the top eigenpair
/// `(θ, w)` of `P V P`, keep `w` while `θ > λ + eps_max`, and stop at the
/// first rejection.
pub fn greedy_maximal_set(v: &CMatrix, lambda: f64, seeds: &[CVector], tol: &Tolerances) -> Result<GreedyResult> {
    let dev = v.hermitian_deviation();
    if dev > tol.herm {
        return Err(Error::NotHermitian(dev));
    }
    let dim = v.dim();
    if let Some(s) = seeds.iter().find(|s| s.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: s.len() });
    }
    if !seeds.is_empty() {
        let defect = linalg::orthonormality_defect(&linalg::columns(dim, seeds));
        if defect > tol.proj {
            return Err(Error::NotOrthonormal(defect));
        }
    }
    for (index, s) in seeds.iter().enumerate() {
        let value = v.expectation(s);
        if value <= lambda - SEED_SLACK {
            return Err(Error::SeedBelowThreshold { index, value, threshold: lambda });
        }
    }

    // Directions already chosen are pushed below every eigenvalue of V, so
    // they never compete with the complement.
    let shift = 1.0 + v.trace().re.abs() + v.max_abs() * dim as f64;
    let mut basis: Vec<CVector> = seeds.to_vec();
    let mut log = Vec::new();
    while basis.len() < dim {
        let p = complement(dim, &basis);
        let mut deflated = (&(&p * v) * &p).into_matrix();
        if !basis.is_empty() {
            let f = linalg::columns(dim, &basis);
            deflated -= (&f * f.adjoint()) * C64::new(shift, 0.0);
        }
        let eig = CMatrix::from_matrix(deflated)?.hermitian_eigen();
        let theta = eig.values[0];
        let accepted = theta > lambda + tol.eps_max;
        log.push(EigenStep { iteration: log.len(), theta, accepted });
        if !accepted {
            break;
        }
        let w = pick_top(&eig, theta);
        basis.push(orthogonalize(w, &basis));
    }
    let projector = if basis.is_empty() {
        Projector::zero(v.qubits())
    } else {
        Projector::from_frame_unchecked(linalg::columns(dim, &basis))
    };
    Ok(GreedyResult { basis, projector, seeds: seeds.len(), eigen_log: log })
}

/// Phase-canonical top eigenvector; among numerically tied eigenvalues the
/// lexicographically largest rounded vector wins.
fn pick_top(eig: &linalg::Eigen, theta: f64) -> CVector {
    let tied = eig.values.iter().take_while(|&&x| x >= theta - TIE_EPS).count();
    let mut best: Option<CVector> = None;
    for c in 0..tied {
        let mut w = eig.vectors.column(c).into_owned();
        canonicalize(&mut w);
        best = match best {
            Some(b) if lex_cmp(&b, &w) != Ordering::Less => Some(b),
            _ => Some(w),
        };
    }
    best.expect("at least one eigenvector")
}

fn canonicalize(w: &mut CVector) {
    let n = w.norm();
    w.unscale_mut(n);
    linalg::canonicalize_phase(w);
}

fn rounded(x: f64) -> i64 {
    (x / TIE_EPS).round() as i64
}

fn lex_cmp(a: &CVector, b: &CVector) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let o = (rounded(x.re), rounded(x.im)).cmp(&(rounded(y.re), rounded(y.im)));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// One pass of Gram-Schmidt against `basis` to remove rounding drift, then
/// renormalization and phase canonicalization.
fn orthogonalize(mut w: CVector, basis: &[CVector]) -> CVector {
    for u in basis {
        let c = u.dotc(&w);
        w.axpy(-c, u, C64::new(1.0, 0.0));
    }
    canonicalize(&mut w);
    w
}

/// Runs the greedy extension on `V = Σ M_k` at `λ = mδ/4` from no seeds.
/// The result satisfies `Tr(M) < 4d/(δm)`, and `Tr(Mρ) > δ/4` for every
/// `ρ` in the class of the instance.
pub fn approximate_density_class(inst: &ApproxInstance, tol: &Tolerances) -> Result<GreedyResult> {
    greedy_maximal_set(&inst.v()?, inst.lambda(), &[], tol)
}

/// The two margins of the operator form of the bound, `4 Tr(V)/(mδ) − Tr(M)`
/// and `Tr(Mρ) − δ/4`, together with the checks they come from.
#[derive(Clone, Debug)]
pub struct LemmaReview {
    pub trace: Check,
    pub transfer: Check,
}

impl LemmaReview {
    pub fn pass(&self) -> bool {
        self.trace.pass && self.transfer.pass
    }
}

/// Checks a greedy result for `V` at `λ = mδ/4` against a witness `W` with
/// `0 ≤ W ≤ V`, `‖W‖ ≤ m` and `Tr(Wρ) > mδ`.
pub fn lemma_review_check(
    v: &CMatrix,
    m: f64,
    delta: f64,
    w: &CMatrix,
    rho: &DensityMatrix,
    result: &GreedyResult,
    tol: &Tolerances,
) -> Result<LemmaReview> {
    let mut problems = Vec::new();
    let herm = w.hermitian_deviation();
    if herm > tol.herm {
        problems.push(format!("W is not Hermitian (deviation {herm:e})"));
    }
    let w_min = w.min_eigenvalue();
    if w_min < -tol.psd {
        problems.push(format!("W is not positive (min eigenvalue {w_min:e})"));
    }
    let gap = (v - w).min_eigenvalue();
    if gap < -tol.psd {
        problems.push(format!("V − W is not positive (min eigenvalue {gap:e})"));
    }
    let norm = w.max_eigenvalue();
    if norm > m + 1e-9 {
        problems.push(format!("‖W‖ = {norm} exceeds m = {m}"));
    }
    let captured = w.trace_product(rho.mat());
    if captured <= m * delta {
        problems.push(format!("Tr(Wρ) = {captured} is not above mδ = {}", m * delta));
    }
    if !problems.is_empty() {
        return Err(Error::Preconditions(problems));
    }
    let m_mat = result.projector.to_matrix()?;
    let trace = Check::less(
        "lemma-review",
        "Tr(M) < 4Tr(V)/(mδ)",
        result.trace() as f64,
        4.0 * v.trace().re / (m * delta),
        1e-7,
    );
    let transfer = Check::greater("lemma-review", "Tr(Mρ) > δ/4", m_mat.trace_product(rho.mat()), delta / 4.0, 1e-7);
    Ok(LemmaReview { trace, transfer })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::Bitstring;
    use crate::linalg::basis_vector;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn zero_operator_gives_empty_basis() {
        let r = greedy_maximal_set(&CMatrix::zeros(2), 0.1, &[], &tol()).unwrap();
        assert!(r.basis.is_empty());
        assert_eq!(r.eigen_log.len(), 1);
        assert!(!r.eigen_log[0].accepted);
    }

    #[test]
    fn identity_is_fully_accepted() {
        let r = greedy_maximal_set(&CMatrix::identity(1), 0.5, &[], &tol()).unwrap();
        assert_eq!(r.trace(), 2);
        assert!(r.projector.to_matrix().unwrap().max_abs_diff(&CMatrix::identity(1)) < 1e-12);
    }

    #[test]
    fn single_subspace_instance() {
        let e1 = Projector::basis(2, [Bitstring::new(2, 1).unwrap()]).unwrap();
        let inst = ApproxInstance::new(vec![e1], 0.5, 1).unwrap();
        assert_eq!(inst.lambda(), 0.125);
        let r = approximate_density_class(&inst, &tol()).unwrap();
        assert_eq!(r.trace(), 1);
        assert!((r.basis[0][1].re - 1.0).abs() < 1e-12);
        assert!((r.trace() as f64) < inst.trace_bound());
    }

    #[test]
    fn seeds_are_kept_and_checked() {
        let v = CMatrix::from_real_diagonal(&[1.0, 0.9, 0.0, 0.0]).unwrap();
        let seed = basis_vector(4, 1);
        let r = greedy_maximal_set(&v, 0.5, &[seed.clone()], &tol()).unwrap();
        assert_eq!(r.seeds, 1);
        assert_eq!(r.trace(), 2);
        assert_eq!(r.basis[0], seed);
        let low = basis_vector(4, 2);
        assert!(matches!(greedy_maximal_set(&v, 0.5, &[low], &tol()), Err(Error::SeedBelowThreshold { .. })));
        let dup = vec![seed.clone(), seed];
        assert!(matches!(greedy_maximal_set(&v, 0.5, &dup, &tol()), Err(Error::NotOrthonormal(_))));
    }

    #[test]
    fn rejects_non_hermitian() {
        let v = CMatrix::from_fn(1, |i, j| if i == 0 && j == 1 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        assert!(matches!(greedy_maximal_set(&v, 0.1, &[], &tol()), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn degenerate_top_is_deterministic() {
        let v = CMatrix::identity(3);
        let a = greedy_maximal_set(&v, 0.5, &[], &tol()).unwrap();
        let b = greedy_maximal_set(&v, 0.5, &[], &tol()).unwrap();
        assert_eq!(a.basis, b.basis);
        assert!(linalg::orthonormality_defect(&linalg::columns(8, &a.basis)) < 1e-12);
    }

    #[test]
    fn instance_validation() {
        let p = Projector::identity(1).unwrap();
        assert!(ApproxInstance::new(vec![p.clone()], 1.0, 1).is_err());
        assert!(ApproxInstance::new(vec![p.clone()], 0.5, 0).is_err());
        assert!(ApproxInstance::new(Vec::new(), 0.5, 1).is_err());
        assert!(ApproxInstance::with_weight(vec![p.clone()], 1.0, 0.5, 1).is_err());
        assert!(ApproxInstance::new(vec![p, Projector::zero(2)], 0.5, 1).is_err());
    }

    #[test]
    fn lemma_review_on_rank_one() {
        let m = 2.0;
        let e = Projector::basis(1, [Bitstring::zeros(1)]).unwrap().to_matrix().unwrap();
        let v = e.scale(m);
        let rho = DensityMatrix::pure(&basis_vector(2, 0)).unwrap();
        let r = greedy_maximal_set(&v, m * 0.5 / 4.0, &[], &tol()).unwrap();
        let review = lemma_review_check(&v, m, 0.5, &v, &rho, &r, &tol()).unwrap();
        assert!(review.pass());
        assert!((review.transfer.lhs - 1.0).abs() < 1e-12);
        let bad = lemma_review_check(&v, m, 0.5, &v.scale(2.0), &rho, &r, &tol());
        assert!(matches!(bad, Err(Error::Preconditions(p)) if p.len() == 2));
    }

    #[test]
    fn eigen_log_csv() {
        let r = greedy_maximal_set(&CMatrix::identity(1), 0.5, &[], &tol()).unwrap();
        let mut buf = Vec::new();
        r.write_eigen_log(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("iteration,theta,accepted"));
        assert_eq!(text.lines().count(), 3);
    }
}
