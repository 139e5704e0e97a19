//! Diagonal states as measures on Cantor space, classical test prefixes,
//! and the constructions that turn quantum tests into classical ones.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bits::Bitstring;
use crate::error::{Error, Result};
use crate::projector::Projector;
use crate::report::Check;
use crate::sigma::{Discipline, QuantumTest};
use crate::state::StatePrefix;
use crate::tol::Tolerances;

/// Slack on the strict counting bound, which is otherwise false for `F = 0`.
pub const COUNT_SLACK: f64 = 1e-9;

/// Slack on the measure-side transfer bounds.
pub const TRANSFER_SLACK: f64 = 1e-9;

/// Masses `μ(σ)` of the cylinders of all strings up to a depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicMeasure {
    depth: usize,
    mass: BTreeMap<Bitstring, f64>,
}

impl DyadicMeasure {
    /// Accepts a mass table that assigns 1 to the empty string and splits
    /// additively down to `depth`. Missing strings carry zero mass.
    pub fn new(depth: usize, mass: BTreeMap<Bitstring, f64>, tol: &Tolerances) -> Result<Self> {
        if let Some(s) = mass.keys().find(|s| s.len() > depth) {
            return Err(Error::InvalidParameter(format!("string {s} is deeper than {depth}")));
        }
        if let Some((s, w)) = mass.iter().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidParameter(format!("mass {w} on {s}")));
        }
        let mu = DyadicMeasure { depth, mass };
        let root = mu.mass(Bitstring::EMPTY);
        if (root - 1.0).abs() > tol.trace {
            return Err(Error::BadTrace(root));
        }
        let defect = mu.additivity_defect();
        if defect > tol.trace {
            return Err(Error::Incoherent { level: 0, next: 0, deviation: defect });
        }
        Ok(mu)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn mass(&self, s: Bitstring) -> f64 {
        self.mass.get(&s).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Bitstring, f64)> + '_ {
        self.mass.iter().map(|(s, w)| (*s, *w))
    }

    /// `max_σ |μ(σ) − μ(σ0) − μ(σ1)|` over `|σ| < depth`.
    pub fn additivity_defect(&self) -> f64 {
        let mut parents: BTreeSet<Bitstring> = self.mass.keys().filter(|s| s.len() < self.depth).copied().collect();
        parents.extend(self.mass.keys().filter_map(Bitstring::parent));
        parents
            .into_iter()
            .map(|s| (self.mass(s) - self.mass(s.push(false)) - self.mass(s.push(true))).abs())
            .fold(0.0, f64::max)
    }

    /// `μ(⟦S⟧)` for a prefix-free set `S`.
    pub fn of_prefix_free(&self, set: &BTreeSet<Bitstring>) -> f64 {
        set.iter().map(|s| self.mass(*s)).sum()
    }
}

/// The measure `μ_ρ(σ) = ⟨σ|ρ_{|σ|}|σ⟩` of a diagonal state. Only strings of
/// positive mass are stored.
pub fn measure_of(rho: &StatePrefix) -> Result<DyadicMeasure> {
    if !rho.is_diagonal() {
        return Err(Error::WrongKind { expected: "diagonal" });
    }
    let mut mass = BTreeMap::new();
    mass.insert(Bitstring::EMPTY, 1.0);
    for k in 1..=rho.depth() {
        rho.for_each_weight(k, |s, w| {
            if w > 0.0 {
                mass.insert(s, w);
            }
        })?;
    }
    Ok(DyadicMeasure { depth: rho.depth(), mass })
}

/// `μ_ρ(⟦S⟧) = Σ_{σ∈S} ⟨σ|ρ_{|σ|}|σ⟩` for a prefix-free `S`, computed from
/// the weights without materializing the measure.
pub fn measure_of_set(rho: &StatePrefix, set: &BTreeSet<Bitstring>) -> Result<f64> {
    let mut acc = 0.0;
    for s in set {
        if s.len() > rho.depth() {
            return Err(Error::InvalidParameter(format!("string {s} is deeper than the state")));
        }
        acc += rho.diagonal_weight(*s).ok_or(Error::WrongKind { expected: "diagonal" })?;
    }
    Ok(acc)
}

/// Lebesgue measure of a set of strings of one length `n`: `|S| 2^{-n}`.
pub fn lebesgue(n: usize, count: usize) -> f64 {
    count as f64 * 2f64.powi(-(n as i32))
}

/// `S^δ(F) = {σ ∈ 2^n : ⟨σ|F|σ⟩ > δ}`, which has fewer than `Tr(F)/δ`
/// elements.
pub fn threshold_basis_set(n: usize, f: &Projector, delta: f64) -> Result<BTreeSet<Bitstring>> {
    if f.qubits() != n {
        return Err(Error::DimensionMismatch { expected: n, found: f.qubits() });
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta {delta} must be positive")));
    }
    let set: BTreeSet<Bitstring> = match f.basis_indices() {
        // A basis projector has diagonal entries in {0, 1}.
        Some(idx) if delta < 1.0 => idx.iter().map(|&i| Bitstring::new(n, i)).collect::<Result<_>>()?,
        Some(_) => BTreeSet::new(),
        None => Bitstring::all(n).filter(|s| f.diag_entry(s.index()) > delta).collect(),
    };
    let bound = f.rank() as f64 / delta;
    if set.len() as f64 >= bound + COUNT_SLACK {
        return Err(Error::MassViolation(format!(
            "threshold set has {} elements, bound Tr(F)/δ = {bound}",
            set.len()
        )));
    }
    Ok(set)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassicalDiscipline {
    #[serde(rename = "MLT")]
    Mlt,
    Solovay,
    Schnorr,
}

impl fmt::Display for ClassicalDiscipline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassicalDiscipline::Mlt => "MLT",
            ClassicalDiscipline::Solovay => "Solovay",
            ClassicalDiscipline::Schnorr => "Schnorr",
        })
    }
}

/// An effectively open set given by levels `A_1, …, A_N` with `A_i ⊆ 2^i`
/// and `⟦A_i⟧ ⊆ ⟦A_{i+1}⟧`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalSet {
    levels: Vec<BTreeSet<Bitstring>>,
}

impl ClassicalSet {
    pub fn new(levels: Vec<BTreeSet<Bitstring>>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Empty("classical set levels"));
        }
        for (i, a) in levels.iter().enumerate() {
            if let Some(s) = a.iter().find(|s| s.len() != i + 1) {
                return Err(Error::InvalidParameter(format!("string {s} at level {}", i + 1)));
            }
        }
        let set = ClassicalSet { levels };
        if let Some((i, s)) = set.monotonicity_violation() {
            return Err(Error::NotNested { level: i, next: i + 1, deviation: s.len() as f64 });
        }
        Ok(set)
    }

    pub fn empty(depth: usize) -> Result<Self> {
        ClassicalSet::new(vec![BTreeSet::new(); depth])
    }

    /// Empty below level `n`, `set` at level `n`, then all extensions.
    pub fn single(n: usize, set: BTreeSet<Bitstring>, depth: usize) -> Result<Self> {
        let mut levels = vec![BTreeSet::new(); n.saturating_sub(1)];
        levels.push(set);
        while levels.len() < depth {
            let next = children(levels.last().expect("nonempty"));
            levels.push(next);
        }
        ClassicalSet::new(levels)
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Level `i`, one-based.
    pub fn level(&self, i: usize) -> &BTreeSet<Bitstring> {
        &self.levels[i - 1]
    }

    pub fn levels(&self) -> &[BTreeSet<Bitstring>] {
        &self.levels
    }

    /// First `(i, σ)` with `σ ∈ A_i` but a child of `σ` missing from
    /// `A_{i+1}`.
    pub fn monotonicity_violation(&self) -> Option<(usize, Bitstring)> {
        for i in 1..self.levels.len() {
            for s in &self.levels[i - 1] {
                if !self.levels[i].contains(&s.push(false)) || !self.levels[i].contains(&s.push(true)) {
                    return Some((i, *s));
                }
            }
        }
        None
    }

    /// Lebesgue measure, read at the deepest level.
    pub fn lebesgue(&self) -> f64 {
        lebesgue(self.depth(), self.levels.last().expect("nonempty").len())
    }

    /// `μ_ρ(⟦A_i⟧)`.
    pub fn measure_at(&self, rho: &StatePrefix, i: usize) -> Result<f64> {
        measure_of_set(rho, self.level(i))
    }

    /// `P_{A_i}`.
    pub fn projector(&self, i: usize) -> Result<Projector> {
        Projector::basis(i, self.level(i).iter().copied())
    }
}

fn children(set: &BTreeSet<Bitstring>) -> BTreeSet<Bitstring> {
    set.iter().flat_map(|s| [s.push(false), s.push(true)]).collect()
}

/// A finite classical test: members with their Lebesgue masses. MLTs carry
/// the certificate `μ(member m) ≤ scale · 2^{-m}`; Schnorr tests carry a
/// declared limit of the mass sums.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalTestPrefix {
    discipline: ClassicalDiscipline,
    members: Vec<ClassicalSet>,
    masses: Vec<f64>,
    mlt_scale: f64,
    declared_limit: Option<f64>,
}

impl ClassicalTestPrefix {
    pub fn mlt(members: Vec<ClassicalSet>, scale: f64, tol: &Tolerances) -> Result<Self> {
        let t = ClassicalTestPrefix::assemble(ClassicalDiscipline::Mlt, members, scale, None);
        for (i, &mu) in t.masses.iter().enumerate() {
            let bound = scale * 2f64.powi(-(i as i32 + 1));
            if mu > bound + tol.mass {
                return Err(Error::MassViolation(format!("member {} has measure {mu} > {bound}", i + 1)));
            }
        }
        Ok(t)
    }

    pub fn solovay(members: Vec<ClassicalSet>) -> Self {
        ClassicalTestPrefix::assemble(ClassicalDiscipline::Solovay, members, 1.0, None)
    }

    pub fn schnorr(members: Vec<ClassicalSet>, declared_limit: f64, tol: &Tolerances) -> Result<Self> {
        let t = ClassicalTestPrefix::assemble(ClassicalDiscipline::Schnorr, members, 1.0, Some(declared_limit));
        let total = t.total_mass();
        if total > declared_limit + tol.mass {
            return Err(Error::MassViolation(format!("mass sum {total} exceeds declared limit {declared_limit}")));
        }
        Ok(t)
    }

    /// Rebuilds a test from stored parts; stored masses, when given, must
    /// match the recomputed ones.
    pub fn from_parts(
        discipline: ClassicalDiscipline,
        members: Vec<ClassicalSet>,
        masses: &[f64],
        mlt_scale: Option<f64>,
        declared_limit: Option<f64>,
        tol: &Tolerances,
    ) -> Result<Self> {
        let t = match discipline {
            ClassicalDiscipline::Mlt => ClassicalTestPrefix::mlt(members, mlt_scale.unwrap_or(1.0), tol)?,
            ClassicalDiscipline::Solovay => ClassicalTestPrefix::solovay(members),
            ClassicalDiscipline::Schnorr => ClassicalTestPrefix::schnorr(
                members,
                declared_limit.ok_or(Error::Format("missing declared limit".into()))?,
                tol,
            )?,
        };
        if !masses.is_empty() {
            if masses.len() != t.masses.len() {
                return Err(Error::DimensionMismatch { expected: t.masses.len(), found: masses.len() });
            }
            if let Some((i, (a, b))) = masses.iter().zip(&t.masses).enumerate().find(|(_, (a, b))| (*a - *b).abs() > tol.mass) {
                return Err(Error::MassViolation(format!("stored mass {i} is {a}, recomputed {b}")));
            }
        }
        Ok(t)
    }

    fn assemble(
        discipline: ClassicalDiscipline,
        members: Vec<ClassicalSet>,
        mlt_scale: f64,
        declared_limit: Option<f64>,
    ) -> Self {
        let masses = members.iter().map(ClassicalSet::lebesgue).collect();
        ClassicalTestPrefix { discipline, members, masses, mlt_scale, declared_limit }
    }

    pub fn discipline(&self) -> ClassicalDiscipline {
        self.discipline
    }

    pub fn members(&self) -> &[ClassicalSet] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn mlt_scale(&self) -> f64 {
        self.mlt_scale
    }

    pub fn declared_limit(&self) -> Option<f64> {
        self.declared_limit
    }
}

/// `T^m_n = {σ ∈ 2^n : ⟨σ|G^m_n|σ⟩ > δ/4}`, the classical test read off the
/// diagonal of a q-MLT. Each level also keeps the children of the previous
/// one, which the nesting of `G^m` guarantees up to rounding.
pub fn qmlt_to_classical(qt: &QuantumTest, delta: f64, tol: &Tolerances) -> Result<ClassicalTestPrefix> {
    if qt.discipline() != Discipline::QMlt {
        return Err(Error::WrongDiscipline(qt.discipline().to_string()));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!("delta {delta} outside (0, 1]")));
    }
    let mut members = Vec::with_capacity(qt.len());
    for g in qt.sigma_members().expect("q-MLT has Σ members") {
        let mut levels: Vec<BTreeSet<Bitstring>> = Vec::with_capacity(g.depth());
        for n in 1..=g.depth() {
            let mut t = threshold_basis_set(n, g.level(n), delta / 4.0)?;
            if let Some(prev) = levels.last() {
                t.extend(children(prev));
            }
            levels.push(t);
        }
        members.push(ClassicalSet::new(levels)?);
    }
    ClassicalTestPrefix::mlt(members, qt.mlt_scale() * 4.0 / delta, tol)
}

/// `C^m_t = {σ ∈ 2^t : #{k ≤ t : σ ∈ A^k_t} > 2^{m−1}δ}` for `m = 1..=m_max`.
pub fn classical_solovay_to_mlt(st: &ClassicalTestPrefix, delta: f64, m_max: usize, tol: &Tolerances) -> Result<ClassicalTestPrefix> {
    if st.discipline() != ClassicalDiscipline::Solovay {
        return Err(Error::WrongDiscipline(st.discipline().to_string()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta {delta} outside (0, 1)")));
    }
    if m_max < 1 {
        return Err(Error::InvalidParameter("m_max must be at least 1".into()));
    }
    let first = st.members().first().ok_or(Error::Empty("Solovay members"))?;
    let depth = first.depth();
    if let Some(a) = st.members().iter().find(|a| a.depth() != depth) {
        return Err(Error::DimensionMismatch { expected: depth, found: a.depth() });
    }
    for (i, a) in st.members().iter().enumerate() {
        let k = i + 1;
        if let Some(n) = (1..k.min(depth + 1)).find(|&n| !a.level(n).is_empty()) {
            return Err(Error::InvalidParameter(format!("member {k} is nonempty at level {n} < {k}")));
        }
    }
    let total = st.total_mass();
    if total >= 1.0 {
        return Err(Error::MassViolation(format!("total measure {total} is not below 1")));
    }
    let mut counts: Vec<BTreeMap<Bitstring, usize>> = Vec::with_capacity(depth);
    for t in 1..=depth {
        let mut c = BTreeMap::new();
        for a in st.members().iter().take(t) {
            for s in a.level(t) {
                *c.entry(*s).or_insert(0) += 1;
            }
        }
        counts.push(c);
    }
    let mut members = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let threshold = 2f64.powi(m as i32 - 1) * delta;
        let levels = counts
            .iter()
            .map(|c| c.iter().filter(|(_, &n)| n as f64 > threshold).map(|(s, _)| *s).collect())
            .collect();
        members.push(ClassicalSet::new(levels)?);
    }
    ClassicalTestPrefix::mlt(members, 2.0 / delta, tol)
}

/// `T^r = S^δ(Q^r)` for each single-projection member of a quantum Schnorr
/// test; the declared limit scales by `1/δ`.
pub fn schnorr_to_classical(qt: &QuantumTest, delta: f64, tol: &Tolerances) -> Result<ClassicalTestPrefix> {
    if qt.discipline() != Discipline::QSchnorr {
        return Err(Error::WrongDiscipline(qt.discipline().to_string()));
    }
    let qs = qt.single_members().expect("Schnorr test has single members");
    let limit = qt.declared_limit().expect("Schnorr test has a limit");
    let mut members = Vec::with_capacity(qs.len());
    for q in qs {
        let n = q.qubits();
        members.push(ClassicalSet::single(n, threshold_basis_set(n, q, delta)?, n)?);
    }
    ClassicalTestPrefix::schnorr(members, limit / delta, tol)
}

/// At each level `n` with `Tr(ρ_n G^m_n) > δ`, checks
/// `μ_ρ(T^m_n) ≥ 3δ/4`.
pub fn verify_qmlt_transfer(
    rho: &StatePrefix,
    qt: &QuantumTest,
    classical: &ClassicalTestPrefix,
    delta: f64,
) -> Result<Vec<Check>> {
    let g = qt.sigma_members().ok_or_else(|| Error::WrongDiscipline(qt.discipline().to_string()))?;
    let mut checks = Vec::new();
    for (i, (gm, cm)) in g.iter().zip(classical.members()).enumerate() {
        for n in 1..=gm.depth().min(rho.depth()) {
            if rho.trace_with(gm.level(n))? > delta {
                checks.push(Check::greater_eq(
                    format!("m={} n={n}", i + 1),
                    "μ_ρ(T^m_n) ≥ 3δ/4",
                    cm.measure_at(rho, n)?,
                    0.75 * delta,
                    TRANSFER_SLACK,
                ));
            }
        }
    }
    Ok(checks)
}

/// At each level `t` where at least `2^m` Solovay members have
/// `μ_ρ(A^k_t) > δ`, checks `μ_ρ(C^m_t) > δ/2`.
pub fn verify_solovay_transfer(
    rho: &StatePrefix,
    st: &ClassicalTestPrefix,
    mlt: &ClassicalTestPrefix,
    delta: f64,
) -> Result<Vec<Check>> {
    let depth = st.members().first().map_or(0, ClassicalSet::depth).min(rho.depth());
    let mut hits = Vec::with_capacity(depth);
    for t in 1..=depth {
        let mut h = 0usize;
        for a in st.members().iter().take(t) {
            if a.measure_at(rho, t)? > delta {
                h += 1;
            }
        }
        hits.push(h);
    }
    let mut checks = Vec::new();
    for (i, c) in mlt.members().iter().enumerate() {
        let m = i + 1;
        let need = 1usize.checked_shl(m as u32).unwrap_or(usize::MAX);
        for t in 1..=depth.min(c.depth()) {
            if hits[t - 1] >= need {
                checks.push(Check::greater(
                    format!("m={m} t={t}"),
                    "μ_ρ(C^m_t) > δ/2",
                    c.measure_at(rho, t)?,
                    delta / 2.0,
                    TRANSFER_SLACK,
                ));
            }
        }
    }
    Ok(checks)
}
