//! Density matrices, coherent state prefixes and the canonical state
//! families (tracial, classical, Bernoulli), with a sparse path for states
//! that are diagonal in the computational basis.

use std::collections::BTreeMap;

use crate::bits::Bitstring;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::tol::Tolerances;

/// Largest qubit count for dense levels (4096 × 4096).
pub const DENSE_QUBIT_CAP: usize = 12;
/// Largest qubit count for materialized diagonal levels.
pub const DIAGONAL_QUBIT_CAP: usize = 24;
/// Largest depth for the parametric classical and Bernoulli families,
/// which never materialize a level unless asked to.
pub const PARAMETRIC_DEPTH_CAP: usize = 64;

/// Positive semidefinite Hermitian matrix of unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    pub fn new(mat: CMatrix, tol: &Tolerances) -> Result<Self> {
        if mat.qubits() > DENSE_QUBIT_CAP {
            return Err(Error::DepthCap { depth: mat.qubits(), cap: DENSE_QUBIT_CAP });
        }
        let herm = mat.hermitian_deviation();
        if herm > tol.herm {
            return Err(Error::NotHermitian(herm));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > tol.trace || tr.im.abs() > tol.trace {
            return Err(Error::BadTrace(tr.re));
        }
        let low = mat.min_eigenvalue();
        if low < -tol.psd {
            return Err(Error::NotPositive(low));
        }
        Ok(DensityMatrix { mat })
    }

    pub(crate) fn new_unchecked(mat: CMatrix) -> Self {
        DensityMatrix { mat }
    }

    /// `|ψ⟩⟨ψ|` for a unit vector `ψ` (normalized here).
    pub fn pure(psi: &crate::linalg::CVector) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidParameter("zero state vector".into()));
        }
        let u = psi / crate::linalg::C64::new(norm, 0.0);
        let mat = CMatrix::from_matrix(&u * u.adjoint())?;
        DensityMatrix::new(mat.hermitian_part(), &Tolerances::default())
    }

    pub fn qubits(&self) -> usize {
        self.mat.qubits()
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_mat(self) -> CMatrix {
        self.mat
    }

    pub fn partial_trace_last(&self) -> Result<DensityMatrix> {
        partial_trace_last(self)
    }
}

/// Discards the last qubit of `rho`.
pub fn partial_trace_last(rho: &DensityMatrix) -> Result<DensityMatrix> {
    Ok(DensityMatrix { mat: rho.mat.partial_trace_last()? })
}

/// A diagonal density matrix stored as a sparse map from basis index to
/// weight. Absent indices carry weight zero.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalLevel {
    qubits: usize,
    weights: BTreeMap<u64, f64>,
}

impl DiagonalLevel {
    pub fn new(qubits: usize, weights: BTreeMap<Bitstring, f64>, tol: &Tolerances) -> Result<Self> {
        let mut by_index = BTreeMap::new();
        for (s, w) in weights {
            if s.len() != qubits {
                return Err(Error::DimensionMismatch { expected: qubits, found: s.len() });
            }
            by_index.insert(s.index(), w);
        }
        DiagonalLevel::from_indices(qubits, by_index, tol)
    }

    pub fn from_indices(qubits: usize, weights: BTreeMap<u64, f64>, tol: &Tolerances) -> Result<Self> {
        if qubits > DIAGONAL_QUBIT_CAP {
            return Err(Error::DepthCap { depth: qubits, cap: DIAGONAL_QUBIT_CAP });
        }
        if let Some((_, w)) = weights.iter().find(|(_, w)| !(w.is_finite() && **w >= -tol.psd)) {
            return Err(Error::NotPositive(*w));
        }
        if let Some(i) = weights.keys().find(|i| qubits < 64 && **i >> qubits != 0) {
            return Err(Error::BadBitstring(format!("index {i} on {qubits} qubits")));
        }
        let level = DiagonalLevel { qubits, weights };
        let total = level.total();
        if (total - 1.0).abs() > tol.trace {
            return Err(Error::BadTrace(total));
        }
        Ok(level)
    }

    pub(crate) fn from_indices_unchecked(qubits: usize, weights: BTreeMap<u64, f64>) -> Self {
        DiagonalLevel { qubits, weights }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn weight(&self, index: u64) -> f64 {
        self.weights.get(&index).copied().unwrap_or(0.0)
    }

    /// Support entries in increasing index order.
    pub fn iter(&self) -> impl Iterator<Item = (Bitstring, f64)> + '_ {
        self.weights.iter().map(move |(&i, &w)| (Bitstring::from_index(self.qubits, i), w))
    }

    pub fn indices(&self) -> &BTreeMap<u64, f64> {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.weights.values().sum()
    }

    /// Sparse partial trace: the weight of `σ` becomes `w(σ0) + w(σ1)`.
    pub fn partial_trace_last(&self) -> Result<DiagonalLevel> {
        if self.qubits == 0 {
            return Err(Error::ZeroQubits);
        }
        let mut out = BTreeMap::new();
        for (&i, &w) in &self.weights {
            *out.entry(i >> 1).or_insert(0.0) += w;
        }
        Ok(DiagonalLevel { qubits: self.qubits - 1, weights: out })
    }

    pub fn to_dense(&self) -> Result<DensityMatrix> {
        if self.qubits > DENSE_QUBIT_CAP {
            return Err(Error::DepthCap { depth: self.qubits, cap: DENSE_QUBIT_CAP });
        }
        let mut diag = vec![0.0; 1 << self.qubits];
        for (&i, &w) in &self.weights {
            diag[i as usize] = w;
        }
        Ok(DensityMatrix::new_unchecked(CMatrix::from_real_diagonal(&diag)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StateKind {
    Dense,
    Diagonal,
    Classical,
    Bernoulli,
}

impl StateKind {
    pub fn name(self) -> &'static str {
        match self {
            StateKind::Dense => "dense",
            StateKind::Diagonal => "diagonal",
            StateKind::Classical => "classical",
            StateKind::Bernoulli => "bernoulli",
        }
    }
}

/// One level of a state, materialized.
#[derive(Clone, Debug, PartialEq)]
pub enum Level {
    Dense(DensityMatrix),
    Diagonal(DiagonalLevel),
}

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    Dense(Vec<DensityMatrix>),
    Diagonal(Vec<DiagonalLevel>),
    /// `ρ_k = |x↾k⟩⟨x↾k|`; `x` is stored truncated to the depth.
    Classical(Bitstring),
    /// `ρ_k = ⊗ diag(p, 1-p)`.
    Bernoulli(f64),
}

/// The first `depth` levels `ρ_1, …, ρ_N` of a state, where level `k` acts
/// on `k` qubits and traces down to level `k-1`.
#[derive(Clone, Debug, PartialEq)]
pub struct StatePrefix {
    depth: usize,
    repr: Repr,
}

impl StatePrefix {
    /// Dense levels `ρ_1, …, ρ_N`, checked for coherence.
    pub fn dense(levels: Vec<DensityMatrix>, tol: &Tolerances) -> Result<Self> {
        check_level_shapes(levels.iter().map(|l| l.qubits()))?;
        for k in 1..levels.len() {
            let deviation = levels[k].mat.partial_trace_last()?.max_abs_diff(&levels[k - 1].mat);
            if deviation > tol.coh {
                return Err(Error::Incoherent { level: k, next: k + 1, deviation });
            }
        }
        Ok(StatePrefix { depth: levels.len(), repr: Repr::Dense(levels) })
    }

    /// Diagonal levels, checked for coherence entrywise.
    pub fn diagonal(levels: Vec<DiagonalLevel>, tol: &Tolerances) -> Result<Self> {
        check_level_shapes(levels.iter().map(|l| l.qubits()))?;
        for k in 1..levels.len() {
            let down = levels[k].partial_trace_last()?;
            let deviation = diagonal_distance(&down, &levels[k - 1]);
            if deviation > tol.coh {
                return Err(Error::Incoherent { level: k, next: k + 1, deviation });
            }
        }
        Ok(StatePrefix { depth: levels.len(), repr: Repr::Diagonal(levels) })
    }

    /// The unique coherent prefix whose deepest level is `top`.
    pub fn from_top_dense(top: DensityMatrix) -> Result<Self> {
        if top.qubits() == 0 {
            return Err(Error::ZeroQubits);
        }
        let mut levels = vec![top];
        while levels.last().expect("nonempty").qubits() > 1 {
            let next = levels.last().expect("nonempty").partial_trace_last()?;
            levels.push(next);
        }
        levels.reverse();
        Ok(StatePrefix { depth: levels.len(), repr: Repr::Dense(levels) })
    }

    pub fn from_top_diagonal(top: DiagonalLevel) -> Result<Self> {
        if top.qubits() == 0 {
            return Err(Error::ZeroQubits);
        }
        let mut levels = vec![top];
        while levels.last().expect("nonempty").qubits() > 1 {
            let next = levels.last().expect("nonempty").partial_trace_last()?;
            levels.push(next);
        }
        levels.reverse();
        Ok(StatePrefix { depth: levels.len(), repr: Repr::Diagonal(levels) })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn kind(&self) -> StateKind {
        match self.repr {
            Repr::Dense(_) => StateKind::Dense,
            Repr::Diagonal(_) => StateKind::Diagonal,
            Repr::Classical(_) => StateKind::Classical,
            Repr::Bernoulli(_) => StateKind::Bernoulli,
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.kind() != StateKind::Dense
    }

    pub fn classical_bits(&self) -> Option<Bitstring> {
        match self.repr {
            Repr::Classical(x) => Some(x),
            _ => None,
        }
    }

    pub fn bernoulli_p(&self) -> Option<f64> {
        match self.repr {
            Repr::Bernoulli(p) => Some(p),
            _ => None,
        }
    }

    fn check_level(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.depth {
            return Err(Error::InvalidParameter(format!("level {k} outside 1..={}", self.depth)));
        }
        Ok(())
    }

    /// `⟨σ|ρ_k|σ⟩` for a diagonal kind, `None` for dense states.
    pub fn diagonal_weight(&self, s: Bitstring) -> Option<f64> {
        let k = s.len();
        if k == 0 || k > self.depth {
            return Some(if k == 0 { 1.0 } else { 0.0 });
        }
        match &self.repr {
            Repr::Dense(_) => None,
            Repr::Diagonal(levels) => Some(levels[k - 1].weight(s.index())),
            Repr::Classical(x) => Some(if x.prefix(k) == s { 1.0 } else { 0.0 }),
            Repr::Bernoulli(p) => Some(bernoulli_weight(*p, s)),
        }
    }

    /// Visits the support of a diagonal level as `(σ, ⟨σ|ρ_k|σ⟩)` in
    /// increasing index order. Dense states are rejected.
    pub fn for_each_weight(&self, k: usize, mut f: impl FnMut(Bitstring, f64)) -> Result<()> {
        self.check_level(k)?;
        match &self.repr {
            Repr::Dense(_) => return Err(Error::WrongKind { expected: "diagonal" }),
            Repr::Diagonal(levels) => levels[k - 1].iter().for_each(|(s, w)| f(s, w)),
            Repr::Classical(x) => f(x.prefix(k), 1.0),
            Repr::Bernoulli(p) => {
                if k > DIAGONAL_QUBIT_CAP {
                    return Err(Error::DepthCap { depth: k, cap: DIAGONAL_QUBIT_CAP });
                }
                for s in Bitstring::all(k) {
                    let w = bernoulli_weight(*p, s);
                    if w != 0.0 {
                        f(s, w);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn diagonal_level(&self, k: usize) -> Result<DiagonalLevel> {
        if let Repr::Diagonal(levels) = &self.repr {
            self.check_level(k)?;
            return Ok(levels[k - 1].clone());
        }
        let mut weights = BTreeMap::new();
        self.for_each_weight(k, |s, w| {
            weights.insert(s.index(), w);
        })?;
        Ok(DiagonalLevel::from_indices_unchecked(k, weights))
    }

    /// Level `k` as a dense matrix; diagonal kinds are densified.
    pub fn dense_level(&self, k: usize) -> Result<DensityMatrix> {
        self.check_level(k)?;
        match &self.repr {
            Repr::Dense(levels) => Ok(levels[k - 1].clone()),
            _ => self.diagonal_level(k)?.to_dense(),
        }
    }

    pub fn level(&self, k: usize) -> Result<Level> {
        match self.kind() {
            StateKind::Dense => self.dense_level(k).map(Level::Dense),
            _ => self.diagonal_level(k).map(Level::Diagonal),
        }
    }

    /// Same state with every level densified.
    pub fn to_dense(&self) -> Result<StatePrefix> {
        if let Repr::Dense(_) = self.repr {
            return Ok(self.clone());
        }
        let levels = (1..=self.depth).map(|k| self.dense_level(k)).collect::<Result<Vec<_>>>()?;
        Ok(StatePrefix { depth: self.depth, repr: Repr::Dense(levels) })
    }

    /// Same state with diagonal levels materialized as weight maps.
    pub fn to_materialized_diagonal(&self) -> Result<StatePrefix> {
        let levels = (1..=self.depth).map(|k| self.diagonal_level(k)).collect::<Result<Vec<_>>>()?;
        Ok(StatePrefix { depth: self.depth, repr: Repr::Diagonal(levels) })
    }

    /// `max_k ‖PT(ρ_k) − ρ_{k−1}‖_max`.
    pub fn coherence_defect(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        match &self.repr {
            Repr::Dense(levels) => {
                for k in 1..levels.len() {
                    let down = levels[k].mat.partial_trace_last()?;
                    worst = worst.max(down.max_abs_diff(&levels[k - 1].mat));
                }
            }
            _ => {
                for k in 2..=self.depth.min(DIAGONAL_QUBIT_CAP) {
                    let down = self.diagonal_level(k)?.partial_trace_last()?;
                    worst = worst.max(diagonal_distance(&down, &self.diagonal_level(k - 1)?));
                }
            }
        }
        Ok(worst)
    }
}

fn check_level_shapes(qubits: impl Iterator<Item = usize>) -> Result<()> {
    let mut count = 0;
    for (k, q) in qubits.enumerate() {
        if q != k + 1 {
            return Err(Error::DimensionMismatch { expected: k + 1, found: q });
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::Empty("state prefix"));
    }
    Ok(())
}

fn diagonal_distance(a: &DiagonalLevel, b: &DiagonalLevel) -> f64 {
    let mut worst = 0.0f64;
    for (i, w) in a.indices() {
        worst = worst.max((w - b.weight(*i)).abs());
    }
    for (i, w) in b.indices() {
        worst = worst.max((w - a.weight(*i)).abs());
    }
    worst
}

/// `p^{#zeros(σ)} (1-p)^{#ones(σ)}`.
pub fn bernoulli_weight(p: f64, s: Bitstring) -> f64 {
    p.powi(s.count_zeros() as i32) * (1.0 - p).powi(s.count_ones() as i32)
}

/// The tracial state, level `k` equal to `2^{-k}·I`.
pub fn make_tau(depth: usize) -> Result<StatePrefix> {
    make_bernoulli(0.5, depth)
}

/// `ρ_k = |x↾k⟩⟨x↾k|`.
pub fn make_classical(x: Bitstring, depth: usize) -> Result<StatePrefix> {
    check_parametric_depth(depth)?;
    if x.len() < depth {
        return Err(Error::BitstringTooShort { len: x.len(), depth });
    }
    Ok(StatePrefix { depth, repr: Repr::Classical(x.prefix(depth)) })
}

/// The product state `b_k = ⊗ diag(p, 1-p)`.
pub fn make_bernoulli(p: f64, depth: usize) -> Result<StatePrefix> {
    check_parametric_depth(depth)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("Bernoulli parameter {p} outside [0, 1]")));
    }
    Ok(StatePrefix { depth, repr: Repr::Bernoulli(p) })
}

fn check_parametric_depth(depth: usize) -> Result<()> {
    if depth == 0 {
        return Err(Error::Empty("state prefix"));
    }
    if depth > PARAMETRIC_DEPTH_CAP {
        return Err(Error::DepthCap { depth, cap: PARAMETRIC_DEPTH_CAP });
    }
    Ok(())
}

/// Level-wise convex combination `Σ α_i ρ^i`.
///
/// The result is diagonal when every input is, dense otherwise.
pub fn mix_states(states: &[StatePrefix], weights: &[f64], tol: &Tolerances) -> Result<StatePrefix> {
    let first = states.first().ok_or(Error::Empty("mixture"))?;
    if states.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: states.len(), found: weights.len() });
    }
    if let Some(s) = states.iter().find(|s| s.depth() != first.depth()) {
        return Err(Error::DimensionMismatch { expected: first.depth(), found: s.depth() });
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidParameter("mixture weights must be nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > tol.trace {
        return Err(Error::BadTrace(total));
    }
    let depth = first.depth();
    if states.len() == 1 {
        return Ok(first.clone());
    }
    if states.iter().all(StatePrefix::is_diagonal) {
        let mut levels = Vec::with_capacity(depth);
        for k in 1..=depth {
            let mut acc: BTreeMap<u64, f64> = BTreeMap::new();
            for (s, &a) in states.iter().zip(weights) {
                if a == 0.0 {
                    continue;
                }
                s.for_each_weight(k, |b, w| *acc.entry(b.index()).or_insert(0.0) += a * w)?;
            }
            levels.push(DiagonalLevel::from_indices_unchecked(k, acc));
        }
        return Ok(StatePrefix { depth, repr: Repr::Diagonal(levels) });
    }
    if depth > DENSE_QUBIT_CAP {
        return Err(Error::DepthCap { depth, cap: DENSE_QUBIT_CAP });
    }
    let mut levels = Vec::with_capacity(depth);
    for k in 1..=depth {
        let mut acc = CMatrix::zeros(k);
        for (s, &a) in states.iter().zip(weights) {
            acc = &acc + &s.dense_level(k)?.mat.scale(a);
        }
        levels.push(DensityMatrix::new_unchecked(acc));
    }
    Ok(StatePrefix { depth, repr: Repr::Dense(levels) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{CVector, C64};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn bits(s: &str) -> Bitstring {
        s.parse().unwrap()
    }

    #[test]
    fn partial_trace_product_states() {
        // |00><00| -> |0><0|
        let ket00 = DensityMatrix::new(CMatrix::from_real_diagonal(&[1.0, 0.0, 0.0, 0.0]).unwrap(), &tol()).unwrap();
        let out = partial_trace_last(&ket00).unwrap();
        assert_eq!(out.mat(), &CMatrix::from_real_diagonal(&[1.0, 0.0]).unwrap());

        // (I/2) ⊗ |1><1| -> I/2
        let m = CMatrix::from_real_diagonal(&[0.0, 0.5, 0.0, 0.5]).unwrap();
        let out = partial_trace_last(&DensityMatrix::new(m, &tol()).unwrap()).unwrap();
        assert_eq!(out.mat(), &CMatrix::from_real_diagonal(&[0.5, 0.5]).unwrap());
    }

    #[test]
    fn partial_trace_bell_state() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi = CVector::from_vec(vec![C64::new(h, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(h, 0.0)]);
        let bell = DensityMatrix::pure(&phi).unwrap();
        let out = partial_trace_last(&bell).unwrap();
        assert!(out.mat().max_abs_diff(&CMatrix::identity(1).scale(0.5)) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_zero_qubits() {
        let scalar = DensityMatrix::new_unchecked(CMatrix::identity(0));
        assert_eq!(partial_trace_last(&scalar).unwrap_err(), Error::ZeroQubits);
    }

    #[test]
    fn density_matrix_validation() {
        let not_herm = CMatrix::from_fn(1, |i, j| if i < j { C64::new(0.0, 0.1) } else if i == j { C64::new(0.5, 0.0) } else { C64::new(0.0, 0.1) });
        assert!(matches!(DensityMatrix::new(not_herm, &tol()), Err(Error::NotHermitian(_))));
        let neg = CMatrix::from_real_diagonal(&[1.5, -0.5]).unwrap();
        assert!(matches!(DensityMatrix::new(neg, &tol()), Err(Error::NotPositive(_))));
        let trace2 = CMatrix::identity(1);
        assert!(matches!(DensityMatrix::new(trace2, &tol()), Err(Error::BadTrace(_))));
    }

    #[test]
    fn tau_levels() {
        let tau = make_tau(3).unwrap();
        assert_eq!(tau.dense_level(1).unwrap().mat(), &CMatrix::from_real_diagonal(&[0.5, 0.5]).unwrap());
        assert_eq!(tau.dense_level(2).unwrap().mat(), &CMatrix::identity(2).scale(0.25));
        assert_eq!(tau.coherence_defect().unwrap(), 0.0);
    }

    #[test]
    fn classical_states() {
        let x = Bitstring::periodic("01", 8).unwrap();
        let rho = make_classical(x, 2).unwrap();
        assert_eq!(rho.diagonal_weight(bits("01")), Some(1.0));
        assert_eq!(rho.diagonal_weight(bits("00")), Some(0.0));
        let ones = make_classical(Bitstring::ones(3), 3).unwrap();
        assert_eq!(ones.diagonal_level(3).unwrap().weight(7), 1.0);
        assert_eq!(ones.coherence_defect().unwrap(), 0.0);
        assert_eq!(
            make_classical(Bitstring::ones(2), 3).unwrap_err(),
            Error::BitstringTooShort { len: 2, depth: 3 }
        );
    }

    #[test]
    fn bernoulli_states() {
        let half = make_bernoulli(0.5, 4).unwrap().to_dense().unwrap();
        assert_eq!(half, make_tau(4).unwrap().to_dense().unwrap());
        let one = make_bernoulli(1.0, 2).unwrap();
        assert_eq!(one.diagonal_weight(bits("00")), Some(1.0));
        assert_eq!(one.diagonal_weight(bits("01")), Some(0.0));
        let third = make_bernoulli(1.0 / 3.0, 2).unwrap();
        assert!((third.diagonal_weight(bits("01")).unwrap() - 2.0 / 9.0).abs() < 1e-16);
        assert!(make_bernoulli(1.5, 2).is_err());
        assert!(make_bernoulli(-0.1, 2).is_err());
        assert!(make_bernoulli(0.3, 0).is_err());
    }

    #[test]
    fn mixture_of_classical_states() {
        let x = make_classical(Bitstring::zeros(4), 4).unwrap();
        let y = make_classical(Bitstring::ones(4), 4).unwrap();
        let mix = mix_states(&[x.clone(), y], &[0.5, 0.5], &tol()).unwrap();
        assert_eq!(mix.kind(), StateKind::Diagonal);
        assert_eq!(mix.dense_level(1).unwrap().mat(), &CMatrix::from_real_diagonal(&[0.5, 0.5]).unwrap());
        assert_eq!(mix_states(&[x.clone()], &[1.0], &tol()).unwrap(), x);
    }

    #[test]
    fn mixture_errors() {
        let x = make_classical(Bitstring::zeros(4), 4).unwrap();
        let short = make_tau(3).unwrap();
        assert!(matches!(mix_states(&[x.clone(), short], &[0.5, 0.5], &tol()), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(mix_states(&[x.clone(), x.clone()], &[0.5, 0.6], &tol()), Err(Error::BadTrace(_))));
        assert!(mix_states(&[x.clone(), x], &[1.5, -0.5], &tol()).is_err());
        assert!(mix_states(&[], &[], &tol()).is_err());
    }

    #[test]
    fn incoherent_levels_rejected() {
        let l1 = DiagonalLevel::new(1, [(bits("0"), 1.0)].into(), &tol()).unwrap();
        let l2 = DiagonalLevel::new(2, [(bits("10"), 1.0)].into(), &tol()).unwrap();
        assert!(matches!(StatePrefix::diagonal(vec![l1, l2], &tol()), Err(Error::Incoherent { .. })));
    }

    #[test]
    fn from_top_builds_coherent_prefix() {
        let top = DiagonalLevel::new(3, [(bits("010"), 0.25), (bits("111"), 0.75)].into(), &tol()).unwrap();
        let st = StatePrefix::from_top_diagonal(top).unwrap();
        assert_eq!(st.depth(), 3);
        assert_eq!(st.diagonal_weight(bits("0")), Some(0.25));
        assert_eq!(st.diagonal_weight(bits("11")), Some(0.75));
        let dense = st.to_dense().unwrap();
        assert!(dense.coherence_defect().unwrap() < 1e-15);
    }
}
