//! Quantum Σ⁰₁ prefixes, the five quantum test disciplines, failure
//! evaluation and the nesting construction.

use std::fmt;

use crate::bits::Bitstring;
use crate::error::{Error, Result};
use crate::projector::Projector;
use crate::state::StatePrefix;
use crate::tol::Tolerances;

/// Eigenvalue cutoff used when extracting a basis of a union of ranges.
pub const SPAN_CUTOFF: f64 = 1e-9;

/// Default finite stand-in for "infinitely many members".
pub const DEFAULT_FAIL_COUNT: usize = 3;

/// Projections `p_1, …, p_N` with `p_k` on `k` qubits and
/// `range(p_k ⊗ I) ⊆ range(p_{k+1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct QSigmaPrefix {
    projs: Vec<Projector>,
}

impl QSigmaPrefix {
    pub fn new(projs: Vec<Projector>, tol: &Tolerances) -> Result<Self> {
        let g = QSigmaPrefix::new_unchecked(projs)?;
        for k in 1..g.projs.len() {
            let deviation = g.projs[k].nesting_defect(&g.projs[k - 1])?;
            if deviation > tol.nest {
                return Err(Error::NotNested { level: k, next: k + 1, deviation });
            }
        }
        Ok(g)
    }

    /// Checks the level shapes only.
    pub fn new_unchecked(projs: Vec<Projector>) -> Result<Self> {
        if projs.is_empty() {
            return Err(Error::Empty("q-Σ⁰₁ prefix"));
        }
        for (k, p) in projs.iter().enumerate() {
            if p.qubits() != k + 1 {
                return Err(Error::DimensionMismatch { expected: k + 1, found: p.qubits() });
            }
        }
        Ok(QSigmaPrefix { projs })
    }

    /// Builds level `k` as `level(k)` for `k = 1..=depth`.
    pub fn from_fn(
        depth: usize,
        mut level: impl FnMut(usize) -> Result<Projector>,
        tol: &Tolerances,
    ) -> Result<Self> {
        QSigmaPrefix::new((1..=depth).map(&mut level).collect::<Result<Vec<_>>>()?, tol)
    }

    /// The cylinder `⟦prefix⟧`: zero below level `|prefix|`, then every
    /// string extending `prefix`.
    pub fn cylinder(prefix: Bitstring, depth: usize) -> Result<Self> {
        let projs = (1..=depth).map(|k| Projector::cylinder(prefix, k)).collect::<Result<Vec<_>>>()?;
        QSigmaPrefix::new_unchecked(projs)
    }

    pub fn zero(depth: usize) -> Result<Self> {
        QSigmaPrefix::new_unchecked((1..=depth).map(Projector::zero).collect())
    }

    pub fn full(depth: usize) -> Result<Self> {
        QSigmaPrefix::new_unchecked((1..=depth).map(Projector::identity).collect::<Result<Vec<_>>>()?)
    }

    pub fn depth(&self) -> usize {
        self.projs.len()
    }

    /// Level `k`, one-based.
    pub fn level(&self, k: usize) -> &Projector {
        &self.projs[k - 1]
    }

    pub fn levels(&self) -> &[Projector] {
        &self.projs
    }

    pub fn last(&self) -> &Projector {
        self.projs.last().expect("nonempty prefix")
    }

    pub fn nesting_defect(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for k in 1..self.projs.len() {
            worst = worst.max(self.projs[k].nesting_defect(&self.projs[k - 1])?);
        }
        Ok(worst)
    }

    /// `b_p` mass, read at the deepest level like [`tau_value`].
    pub fn bernoulli_value(&self, p: f64) -> f64 {
        self.last().bernoulli_mass(p)
    }
}

/// `τ(G) ≈ 2^{-N} rank(p_N)`; under nesting `2^{-k} rank(p_k)` is
/// nondecreasing in `k`, so the deepest level is the best lower bound.
pub fn tau_value(g: &QSigmaPrefix) -> f64 {
    g.last().tau_mass()
}

/// `ρ(G) ≈ max_{k ≤ min depth} Tr(ρ_k p_k)`.
pub fn rho_value(rho: &StatePrefix, g: &QSigmaPrefix) -> Result<f64> {
    let top = rho.depth().min(g.depth());
    let mut best = 0.0f64;
    for k in 1..=top {
        best = best.max(rho.trace_with(g.level(k))?);
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Discipline {
    QMlt,
    QSolovay,
    StrongSolovay,
    QSchnorr,
    /// Schnorr test whose mass is measured by the Bernoulli state `b_p`.
    PSchnorr(f64),
}

impl Discipline {
    pub fn name(&self) -> &'static str {
        match self {
            Discipline::QMlt => "qMLT",
            Discipline::QSolovay => "qSolovay",
            Discipline::StrongSolovay => "strongSolovay",
            Discipline::QSchnorr => "qSchnorr",
            Discipline::PSchnorr(_) => "pSchnorr",
        }
    }

    /// Whether members are whole q-Σ⁰₁ prefixes (as opposed to single
    /// projections).
    pub fn has_sigma_members(&self) -> bool {
        matches!(self, Discipline::QMlt | Discipline::QSolovay)
    }
}

impl fmt::Display for Discipline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Discipline::PSchnorr(p) => write!(f, "pSchnorr({p})"),
            d => f.write_str(d.name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Members {
    Sigma(Vec<QSigmaPrefix>),
    Single(Vec<Projector>),
}

impl Members {
    pub fn len(&self) -> usize {
        match self {
            Members::Sigma(v) => v.len(),
            Members::Single(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A finite initial segment of a quantum test together with its mass
/// certificate.
///
/// Members are indexed from one. For a q-MLT the certificate is
/// `τ(member m) ≤ scale · 2^{-m}`, where `scale = 1` is the standard
/// definition and conversions may produce a larger constant. Solovay-type
/// tests store the running sums of member masses; Schnorr-type tests also
/// carry the declared limit of those sums.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumTest {
    discipline: Discipline,
    members: Members,
    partial_sums: Vec<f64>,
    mlt_scale: f64,
    declared_limit: Option<f64>,
}

impl QuantumTest {
    pub fn qmlt(members: Vec<QSigmaPrefix>, tol: &Tolerances) -> Result<Self> {
        QuantumTest::qmlt_scaled(members, 1.0, tol)
    }

    pub fn qmlt_scaled(members: Vec<QSigmaPrefix>, scale: f64, tol: &Tolerances) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter(format!("q-MLT scale {scale}")));
        }
        for (i, g) in members.iter().enumerate() {
            let bound = scale * 2f64.powi(-(i as i32 + 1));
            let mass = tau_value(g);
            if mass > bound + tol.mass {
                return Err(Error::MassViolation(format!(
                    "q-MLT member {} has τ-mass {mass} > {bound}",
                    i + 1
                )));
            }
        }
        let mut t = QuantumTest::assemble(Discipline::QMlt, Members::Sigma(members), None);
        t.mlt_scale = scale;
        Ok(t)
    }

    pub fn solovay(members: Vec<QSigmaPrefix>) -> Self {
        QuantumTest::assemble(Discipline::QSolovay, Members::Sigma(members), None)
    }

    pub fn strong_solovay(members: Vec<Projector>) -> Self {
        QuantumTest::assemble(Discipline::StrongSolovay, Members::Single(members), None)
    }

    pub fn schnorr(members: Vec<Projector>, declared_limit: f64, tol: &Tolerances) -> Result<Self> {
        let t = QuantumTest::assemble(Discipline::QSchnorr, Members::Single(members), Some(declared_limit));
        t.check_declared_limit(tol)?;
        Ok(t)
    }

    pub fn p_schnorr(p: f64, members: Vec<Projector>, declared_limit: f64, tol: &Tolerances) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("Bernoulli parameter {p} outside [0, 1]")));
        }
        let t = QuantumTest::assemble(Discipline::PSchnorr(p), Members::Single(members), Some(declared_limit));
        t.check_declared_limit(tol)?;
        Ok(t)
    }

    /// Rebuilds a test from stored parts, checking the stored partial sums
    /// against recomputed member masses.
    pub fn from_parts(
        discipline: Discipline,
        members: Members,
        partial_sums: &[f64],
        mlt_scale: Option<f64>,
        declared_limit: Option<f64>,
        tol: &Tolerances,
    ) -> Result<Self> {
        let t = match (discipline, members) {
            (Discipline::QMlt, Members::Sigma(m)) => QuantumTest::qmlt_scaled(m, mlt_scale.unwrap_or(1.0), tol)?,
            (Discipline::QSolovay, Members::Sigma(m)) => QuantumTest::solovay(m),
            (Discipline::StrongSolovay, Members::Single(m)) => QuantumTest::strong_solovay(m),
            (Discipline::QSchnorr, Members::Single(m)) => {
                QuantumTest::schnorr(m, declared_limit.ok_or(Error::Format("missing declared limit".into()))?, tol)?
            }
            (Discipline::PSchnorr(p), Members::Single(m)) => QuantumTest::p_schnorr(
                p,
                m,
                declared_limit.ok_or(Error::Format("missing declared limit".into()))?,
                tol,
            )?,
            (d, _) => return Err(Error::Format(format!("member shape does not match discipline {d}"))),
        };
        if !partial_sums.is_empty() {
            if partial_sums.len() != t.partial_sums.len() {
                return Err(Error::DimensionMismatch { expected: t.partial_sums.len(), found: partial_sums.len() });
            }
            for (i, (a, b)) in partial_sums.iter().zip(&t.partial_sums).enumerate() {
                if (a - b).abs() > tol.mass {
                    return Err(Error::MassViolation(format!(
                        "stored partial sum {i} is {a}, recomputed {b}"
                    )));
                }
            }
        }
        Ok(t)
    }

    fn assemble(discipline: Discipline, members: Members, declared_limit: Option<f64>) -> Self {
        let mut t = QuantumTest { discipline, members, partial_sums: Vec::new(), mlt_scale: 1.0, declared_limit };
        let mut acc = 0.0;
        for i in 0..t.len() {
            acc += t.member_mass(i);
            t.partial_sums.push(acc);
        }
        t
    }

    fn check_declared_limit(&self, tol: &Tolerances) -> Result<()> {
        let limit = self.declared_limit.unwrap_or(f64::INFINITY);
        if !limit.is_finite() {
            return Err(Error::InvalidParameter("declared limit must be finite".into()));
        }
        if let Some(&last) = self.partial_sums.last() {
            if last > limit + tol.mass {
                return Err(Error::MassViolation(format!("partial sum {last} exceeds declared limit {limit}")));
            }
        }
        Ok(())
    }

    pub fn discipline(&self) -> Discipline {
        self.discipline
    }

    pub fn members(&self) -> &Members {
        &self.members
    }

    pub fn sigma_members(&self) -> Option<&[QSigmaPrefix]> {
        match &self.members {
            Members::Sigma(v) => Some(v),
            Members::Single(_) => None,
        }
    }

    pub fn single_members(&self) -> Option<&[Projector]> {
        match &self.members {
            Members::Single(v) => Some(v),
            Members::Sigma(_) => None,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn partial_sums(&self) -> &[f64] {
        &self.partial_sums
    }

    pub fn mlt_scale(&self) -> f64 {
        self.mlt_scale
    }

    pub fn declared_limit(&self) -> Option<f64> {
        self.declared_limit
    }

    /// Mass of member `i` (zero-based) under the test's mass functional.
    pub fn member_mass(&self, i: usize) -> f64 {
        match (&self.members, self.discipline) {
            (Members::Sigma(v), _) => tau_value(&v[i]),
            (Members::Single(v), Discipline::PSchnorr(p)) => v[i].bernoulli_mass(p),
            (Members::Single(v), _) => v[i].tau_mass(),
        }
    }

    /// `ρ(member i)`, or `None` when the member lives deeper than the
    /// state prefix reaches.
    pub fn member_value(&self, rho: &StatePrefix, i: usize) -> Result<Option<f64>> {
        match &self.members {
            Members::Sigma(v) => rho_value(rho, &v[i]).map(Some),
            Members::Single(v) if v[i].qubits() <= rho.depth() => rho.trace_with(&v[i]).map(Some),
            Members::Single(_) => Ok(None),
        }
    }

    pub fn member_values(&self, rho: &StatePrefix) -> Result<Vec<Option<f64>>> {
        (0..self.len()).map(|i| self.member_value(rho, i)).collect()
    }
}

/// Whether `rho` fails the q-MLT `t` at order `delta` on the available
/// members: `min_m ρ(G^m) ≥ delta`.
pub fn fails_qmlt(rho: &StatePrefix, t: &QuantumTest, delta: f64) -> Result<bool> {
    if t.discipline() != Discipline::QMlt {
        return Err(Error::WrongDiscipline(t.discipline().to_string()));
    }
    let values: Vec<f64> = t.member_values(rho)?.into_iter().flatten().collect();
    if values.is_empty() {
        return Ok(false);
    }
    Ok(values.into_iter().fold(f64::INFINITY, f64::min) >= delta)
}

/// Whether at least `count` members capture more than `delta` of `rho`.
pub fn fails_solovay(rho: &StatePrefix, t: &QuantumTest, delta: f64, count: usize) -> Result<bool> {
    if t.discipline() == Discipline::QMlt {
        return Err(Error::WrongDiscipline(t.discipline().to_string()));
    }
    if count == 0 {
        return Err(Error::InvalidParameter("count must be at least 1".into()));
    }
    let hits = t.member_values(rho)?.into_iter().flatten().filter(|&v| v > delta).count();
    Ok(hits >= count)
}

/// Nested q-MLT: `Q^m_n` projects onto the span of the ranges of `G^i_n`
/// for `m ≤ i ≤ n`. Returned members are `Q^2, Q^3, …`, so member `j` of the
/// output is `Q^{j+1}` with `τ(Q^{j+1}) < 2^{-j}`.
pub fn build_nested(t: &QuantumTest, tol: &Tolerances) -> Result<QuantumTest> {
    if t.discipline() != Discipline::QMlt {
        return Err(Error::WrongDiscipline(t.discipline().to_string()));
    }
    if t.mlt_scale() > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "nesting needs a standard q-MLT, got scale {}",
            t.mlt_scale()
        )));
    }
    let g = t.sigma_members().expect("q-MLT has Σ members");
    let Some(first) = g.first() else {
        return QuantumTest::qmlt(Vec::new(), tol);
    };
    let depth = first.depth();
    if let Some(bad) = g.iter().find(|m| m.depth() != depth) {
        return Err(Error::DimensionMismatch { expected: depth, found: bad.depth() });
    }
    let k = g.len();
    let mut out = Vec::with_capacity(k.saturating_sub(1));
    for m in 2..=k {
        let mut levels = Vec::with_capacity(depth);
        for n in 1..=depth {
            let parts: Vec<&Projector> = (m..=n.min(k)).map(|i| g[i - 1].level(n)).collect();
            levels.push(Projector::span_union(n, &parts, SPAN_CUTOFF)?);
        }
        out.push(QSigmaPrefix::new(levels, tol)?);
    }
    QuantumTest::qmlt(out, tol)
}

/// For a mixture that captures more than `delta` at `member`, the index of
/// a component that does too. Exists by convexity of the trace.
pub fn convexity_witness(
    components: &[StatePrefix],
    weights: &[f64],
    member: &Projector,
    delta: f64,
) -> Result<Option<usize>> {
    let values = components.iter().map(|c| c.trace_with(member)).collect::<Result<Vec<_>>>()?;
    let mixed: f64 = values.iter().zip(weights).map(|(v, a)| v * a).sum();
    if mixed <= delta {
        return Ok(None);
    }
    Ok(values.iter().position(|&v| v > delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{make_classical, make_tau};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn zeros_cylinder_mlt(depth: usize, members: usize) -> QuantumTest {
        let g = (1..=members).map(|m| QSigmaPrefix::cylinder(Bitstring::zeros(m), depth).unwrap()).collect();
        QuantumTest::qmlt(g, &tol()).unwrap()
    }

    #[test]
    fn tau_value_examples() {
        assert_eq!(tau_value(&QSigmaPrefix::full(5).unwrap()), 1.0);
        let mut levels: Vec<Projector> = (1..5).map(Projector::zero).collect();
        levels.push(Projector::basis(5, [Bitstring::zeros(5)]).unwrap());
        let g = QSigmaPrefix::new(levels, &tol()).unwrap();
        assert_eq!(tau_value(&g), 2f64.powi(-5));
    }

    #[test]
    fn nesting_is_enforced() {
        let levels = (1..=3).map(|k| Projector::basis(k, [Bitstring::zeros(k)]).unwrap()).collect();
        assert!(matches!(QSigmaPrefix::new(levels, &tol()), Err(Error::NotNested { .. })));
        let levels = vec![Projector::zero(1), Projector::zero(3)];
        assert!(matches!(QSigmaPrefix::new(levels, &tol()), Err(Error::DimensionMismatch { .. })));
        assert!(QSigmaPrefix::new(Vec::new(), &tol()).is_err());
    }

    #[test]
    fn rho_value_examples() {
        let x = Bitstring::periodic("011", 6).unwrap();
        let rho = make_classical(x, 6).unwrap();
        assert_eq!(rho_value(&rho, &QSigmaPrefix::full(6).unwrap()).unwrap(), 1.0);
        // The cylinder of x↾2 contains x↾k for every k ≥ 2.
        let g = QSigmaPrefix::cylinder(x.prefix(2), 6).unwrap();
        assert_eq!(rho_value(&rho, &g).unwrap(), 1.0);
        let tau = make_tau(6).unwrap();
        assert!((rho_value(&tau, &g).unwrap() - tau_value(&g)).abs() < 1e-15);
    }

    #[test]
    fn fails_qmlt_examples() {
        let t = zeros_cylinder_mlt(6, 4);
        let zero = make_classical(Bitstring::zeros(6), 6).unwrap();
        assert!(fails_qmlt(&zero, &t, 0.99).unwrap());
        assert!(fails_qmlt(&zero, &t, 0.0).unwrap());
        let tau = make_tau(6).unwrap();
        assert!(fails_qmlt(&tau, &t, 0.0).unwrap());
        assert!(!fails_qmlt(&tau, &t, 0.1).unwrap());
        let sol = QuantumTest::solovay(t.sigma_members().unwrap().to_vec());
        assert!(matches!(fails_qmlt(&tau, &sol, 0.1), Err(Error::WrongDiscipline(_))));
    }

    #[test]
    fn fails_solovay_examples() {
        let zero = make_classical(Bitstring::zeros(8), 8).unwrap();
        assert!(!fails_solovay(&zero, &QuantumTest::strong_solovay(Vec::new()), 0.5, 1).unwrap());
        let members: Vec<Projector> = (2..=8).map(|n| Projector::basis(n, [Bitstring::zeros(n)]).unwrap()).collect();
        let t = QuantumTest::strong_solovay(members);
        for count in 1..=t.len() {
            assert!(fails_solovay(&zero, &t, 0.99, count).unwrap());
        }
        assert!(!fails_solovay(&zero, &t, 0.99, t.len() + 1).unwrap());
        assert!(fails_solovay(&zero, &t, 0.5, 0).is_err());
        let mlt = zeros_cylinder_mlt(4, 2);
        assert!(matches!(fails_solovay(&zero, &mlt, 0.5, 1), Err(Error::WrongDiscipline(_))));
    }

    #[test]
    fn single_members_beyond_depth_are_unavailable() {
        let t = QuantumTest::strong_solovay(vec![Projector::zero(3), Projector::identity(9).unwrap()]);
        let tau = make_tau(4).unwrap();
        assert_eq!(t.member_values(&tau).unwrap(), vec![Some(0.0), None]);
    }

    #[test]
    fn mlt_mass_certificate() {
        let too_big = vec![QSigmaPrefix::cylinder(Bitstring::zeros(1), 3).unwrap(); 2];
        assert!(matches!(QuantumTest::qmlt(too_big.clone(), &tol()), Err(Error::MassViolation(_))));
        assert!(QuantumTest::qmlt_scaled(too_big, 2.0, &tol()).is_ok());
    }

    #[test]
    fn schnorr_limit_certificate() {
        let members = vec![Projector::cylinder(Bitstring::zeros(1), 2).unwrap(), Projector::cylinder(Bitstring::zeros(2), 3).unwrap()];
        let t = QuantumTest::schnorr(members.clone(), 0.75, &tol()).unwrap();
        assert_eq!(t.partial_sums(), &[0.5, 0.75]);
        assert!(QuantumTest::schnorr(members.clone(), 0.7, &tol()).is_err());
        let p = QuantumTest::p_schnorr(0.25, members, 1.0, &tol()).unwrap();
        assert!((p.member_mass(0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn nested_zero_and_single_family() {
        let zeros = QuantumTest::qmlt(vec![QSigmaPrefix::zero(4).unwrap(); 3], &tol()).unwrap();
        let out = build_nested(&zeros, &tol()).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out.sigma_members().unwrap().iter().all(|g| g.levels().iter().all(Projector::is_zero)));

        // G^i = G for all i: the span of copies of G_n is G_n.
        let g = QSigmaPrefix::cylinder("000".parse().unwrap(), 5).unwrap();
        let t = QuantumTest::qmlt(vec![g.clone(); 3], &tol()).unwrap();
        let out = build_nested(&t, &tol()).unwrap();
        for (j, q) in out.sigma_members().unwrap().iter().enumerate() {
            let m = j + 2;
            for n in 1..=5 {
                let expected = if n >= m { g.level(n).rank() } else { 0 };
                assert_eq!(q.level(n).rank(), expected, "m={m} n={n}");
            }
        }
    }

    #[test]
    fn nested_rejects_non_mlt() {
        let sol = QuantumTest::solovay(vec![QSigmaPrefix::zero(2).unwrap()]);
        assert!(matches!(build_nested(&sol, &tol()), Err(Error::WrongDiscipline(_))));
    }

    #[test]
    fn convexity_witness_finds_component() {
        let x = make_classical(Bitstring::zeros(3), 3).unwrap();
        let y = make_classical(Bitstring::ones(3), 3).unwrap();
        let p = Projector::basis(3, [Bitstring::zeros(3)]).unwrap();
        assert_eq!(convexity_witness(&[y.clone(), x.clone()], &[0.3, 0.7], &p, 0.5).unwrap(), Some(1));
        assert_eq!(convexity_witness(&[y, x], &[0.7, 0.3], &p, 0.5).unwrap(), None);
    }
}
