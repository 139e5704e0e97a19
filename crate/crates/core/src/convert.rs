//! Conversion of a quantum Solovay test into a quantum Martin-Löf test by
//! greedy extension of lifted orthonormal sets, level by level.

use std::io;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::approx::greedy_maximal_set;
use crate::error::{Error, Result};
use crate::linalg::{kron_bit, CMatrix, CVector};
use crate::projector::Projector;
use crate::report::Check;
use crate::sigma::{tau_value, QSigmaPrefix, QuantumTest};
use crate::state::StatePrefix;
use crate::tol::Tolerances;

/// Slack on the output mass bound and the failure transfer.
pub const BOUND_SLACK: f64 = 1e-7;

/// A finite quantum Solovay test `S^1, …, S^K` of common depth `N` with
/// `S^k_n = 0` for `n < k`, total τ-mass below one, and a rational order `δ`.
#[derive(Clone, Debug)]
pub struct SolovayInstance {
    depth: usize,
    members: Vec<QSigmaPrefix>,
    delta: BigRational,
    total_mass: f64,
}

impl SolovayInstance {
    pub fn new(members: Vec<QSigmaPrefix>, delta: BigRational) -> Result<Self> {
        let first = members.first().ok_or(Error::Empty("Solovay members"))?;
        let depth = first.depth();
        if let Some(g) = members.iter().find(|g| g.depth() != depth) {
            return Err(Error::DimensionMismatch { expected: depth, found: g.depth() });
        }
        if !(delta.is_positive() && delta < BigRational::one()) {
            return Err(Error::InvalidParameter(format!("delta {delta} outside (0, 1)")));
        }
        for (i, g) in members.iter().enumerate() {
            let k = i + 1;
            if let Some(n) = (1..k.min(depth + 1)).find(|&n| !g.level(n).is_zero()) {
                return Err(Error::InvalidParameter(format!("member {k} is nonzero at level {n} < {k}")));
            }
        }
        let total_mass: f64 = members.iter().map(tau_value).sum();
        if total_mass >= 1.0 {
            return Err(Error::MassViolation(format!("total τ-mass {total_mass} is not below 1")));
        }
        Ok(SolovayInstance { depth, members, delta, total_mass })
    }

    /// Takes `δ` as the exact rational value of a double.
    pub fn with_float_delta(members: Vec<QSigmaPrefix>, delta: f64) -> Result<Self> {
        let exact = BigRational::from_float(delta)
            .ok_or_else(|| Error::InvalidParameter(format!("delta {delta} is not a finite rational")))?;
        SolovayInstance::new(members, exact)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn members(&self) -> &[QSigmaPrefix] {
        &self.members
    }

    pub fn delta(&self) -> &BigRational {
        &self.delta
    }

    pub fn delta_f64(&self) -> f64 {
        self.delta.to_f64().expect("delta in (0, 1)")
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn as_test(&self) -> QuantumTest {
        QuantumTest::solovay(self.members.clone())
    }

    /// `2^m δ / 4`, exactly.
    pub fn threshold(&self, m: usize) -> BigRational {
        BigRational::from_integer(BigInt::one() << m) * &self.delta / BigRational::from_integer(BigInt::from(4))
    }

    /// `V_n = Σ_{k ≤ n} S^k_n`.
    pub fn level_sum(&self, n: usize) -> Result<CMatrix> {
        let mut v = CMatrix::zeros(n);
        for g in self.members.iter().take(n) {
            let p = g.level(n);
            if !p.is_zero() {
                v = &v + &p.to_matrix()?;
            }
        }
        Ok(v)
    }

    /// Number of members `k ≤ n` with `Tr(ρ_n S^k_n) > δ`.
    pub fn hits(&self, rho: &StatePrefix, n: usize) -> Result<usize> {
        let delta = self.delta_f64();
        let mut hits = 0;
        for g in self.members.iter().take(n) {
            if rho.trace_with(g.level(n))? > delta {
                hits += 1;
            }
        }
        Ok(hits)
    }
}

/// One row of the construction trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub m: usize,
    pub n: usize,
    /// `|C^m_n|`.
    pub size: usize,
    /// Vectors added by the greedy extension on top of the lifted seeds.
    pub accepted: usize,
    /// `2^{-n} |C^m_n|`.
    pub tau_partial: f64,
    /// `min ⟨ψ⊗i|V_n|ψ⊗i⟩ − ⟨ψ|V_{n−1}|ψ⟩` over lifted vectors (zero when
    /// nothing was lifted).
    pub lift_gap: f64,
}

#[derive(Clone, Debug)]
pub struct SolovayConversion {
    /// q-MLT with mass certificate `τ(G^m) ≤ (4/δ) 2^{-m}`.
    pub mlt: QuantumTest,
    pub trace: Vec<TraceRow>,
}

impl SolovayConversion {
    pub fn write_trace<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.trace {
            w.serialize(row).map_err(|e| Error::Format(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))
    }
}

/// Builds `G^1, …, G^{m_max}`. At level `n` the set `C^m_{n−1}` is lifted to
/// `D^m_n = {ψ⊗|0⟩, ψ⊗|1⟩}` and extended greedily on `V_n` at threshold
/// `2^m δ/4`; `G^m_n` projects onto the span of the result.
pub fn solovay_to_mlt(inst: &SolovayInstance, m_max: usize, tol: &Tolerances) -> Result<SolovayConversion> {
    if m_max < 1 {
        return Err(Error::InvalidParameter("m_max must be at least 1".into()));
    }
    let sums = (1..=inst.depth).map(|n| inst.level_sum(n)).collect::<Result<Vec<_>>>()?;
    let mut members = Vec::with_capacity(m_max);
    let mut trace = Vec::new();
    for m in 1..=m_max {
        let lambda = inst.threshold(m).to_f64().expect("finite threshold");
        let mut prev: Vec<CVector> = Vec::new();
        let mut levels = Vec::with_capacity(inst.depth);
        for n in 1..=inst.depth {
            let v = &sums[n - 1];
            let mut seeds = Vec::with_capacity(2 * prev.len());
            let mut lift_gap = 0.0f64;
            for (j, psi) in prev.iter().enumerate() {
                let below = sums[n - 2].expectation(psi);
                for bit in [false, true] {
                    let lifted = kron_bit(psi, bit);
                    let gap = v.expectation(&lifted) - below;
                    lift_gap = if j == 0 && !bit { gap } else { lift_gap.min(gap) };
                    seeds.push(lifted);
                }
            }
            let result = if v.max_abs() == 0.0 && seeds.is_empty() {
                None
            } else {
                Some(greedy_maximal_set(v, lambda, &seeds, tol)?)
            };
            let (basis, projector, accepted) = match result {
                Some(r) => {
                    let accepted = r.accepted();
                    (r.basis, r.projector, accepted)
                }
                None => (Vec::new(), Projector::zero(n), 0),
            };
            trace.push(TraceRow {
                m,
                n,
                size: basis.len(),
                accepted,
                tau_partial: basis.len() as f64 / (1u64 << n) as f64,
                lift_gap,
            });
            levels.push(projector);
            prev = basis;
        }
        members.push(QSigmaPrefix::new(levels, tol)?);
    }
    let scale = (BigRational::from_integer(BigInt::from(4)) / &inst.delta).to_f64().expect("finite scale");
    let mlt = QuantumTest::qmlt_scaled(members, scale, tol)?;
    Ok(SolovayConversion { mlt, trace })
}

/// Result of checking the failure transfer for one member of the converted
/// test.
#[derive(Clone, Debug)]
pub struct TransferReport {
    pub m: usize,
    /// One check per level with at least `2^m` members above `δ`.
    pub checks: Vec<(usize, Check)>,
}

impl TransferReport {
    pub fn vacuous(&self) -> bool {
        self.checks.is_empty()
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|(_, c)| c.pass)
    }
}

/// At each level `n` where at least `2^m` indices `k` have
/// `Tr(ρ_n S^k_n) > δ`, checks `Tr(ρ_n G^m_n) > δ/4`.
pub fn verify_failure_transfer(
    rho: &StatePrefix,
    inst: &SolovayInstance,
    mlt: &QuantumTest,
    m: usize,
) -> Result<TransferReport> {
    let g = mlt.sigma_members().ok_or_else(|| Error::WrongDiscipline(mlt.discipline().to_string()))?;
    if m < 1 || m > g.len() {
        return Err(Error::InvalidParameter(format!("member {m} of a test with {} members", g.len())));
    }
    let delta = inst.delta_f64();
    let need = 1usize.checked_shl(m as u32).unwrap_or(usize::MAX);
    let top = inst.depth.min(rho.depth()).min(g[m - 1].depth());
    let mut checks = Vec::new();
    for n in 1..=top {
        if inst.hits(rho, n)? < need {
            continue;
        }
        let value = rho.trace_with(g[m - 1].level(n))?;
        checks.push((n, Check::greater(format!("m={m} n={n}"), "Tr(ρ_n G^m_n) > δ/4", value, delta / 4.0, BOUND_SLACK)));
    }
    Ok(TransferReport { m, checks })
}

/// Mass checks `τ(G^m) < (4/δ) 2^{-m}` for every converted member.
pub fn mass_checks(inst: &SolovayInstance, mlt: &QuantumTest) -> Vec<Check> {
    let delta = inst.delta_f64();
    mlt.sigma_members()
        .unwrap_or(&[])
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let m = i + 1;
            Check::less(format!("m={m}"), "τ(G^m) < (4/δ)2^{-m}", tau_value(g), 4.0 / delta * 2f64.powi(-(m as i32)), BOUND_SLACK)
        })
        .collect()
}

impl SolovayInstance {
    /// Whether `δ` has an exact binary expansion, so that float thresholds
    /// equal the rational ones.
    pub fn delta_is_dyadic(&self) -> bool {
        let d = self.delta.denom();
        !d.is_zero() && (d & (d - BigInt::one())).is_zero()
    }
}
