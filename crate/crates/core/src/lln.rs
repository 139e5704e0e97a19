//! Law-of-large-numbers observables, Chernoff-based p-Schnorr tests for
//! upward deviations, and the Markov inequality in trace form.

use std::collections::BTreeSet;
use std::io;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::bits::Bitstring;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::projector::Projector;
use crate::report::Check;
use crate::sigma::QuantumTest;
use crate::state::{DensityMatrix, StatePrefix, PARAMETRIC_DEPTH_CAP};
use crate::tol::Tolerances;

/// Levels above this use log-space binomial tails instead of exact ones.
pub const EXACT_TAIL_LEVELS: usize = 64;

/// Slack on the Chernoff mass bound.
pub const MASS_SLACK: f64 = 1e-12;

/// Slack on the Markov-type lower bounds.
pub const MARKOV_SLACK: f64 = 1e-8;

/// Probability that bit `i` (one-based) of a level-`n` sample is a one,
/// for `i = 1..=n`.
pub fn position_marginals(rho: &StatePrefix, n: usize) -> Result<Vec<f64>> {
    if n == 0 || n > rho.depth() {
        return Err(Error::InvalidParameter(format!("level {n} outside 1..={}", rho.depth())));
    }
    if let Some(x) = rho.classical_bits() {
        return Ok((0..n).map(|i| if x.bit(i) { 1.0 } else { 0.0 }).collect());
    }
    if let Some(p) = rho.bernoulli_p() {
        return Ok(vec![1.0 - p; n]);
    }
    let mut ones = vec![0.0; n];
    if rho.is_diagonal() {
        rho.for_each_weight(n, |s, w| add_bits(&mut ones, s, w))?;
    } else {
        let level = rho.dense_level(n)?;
        for s in Bitstring::all(n) {
            let w = level.mat().get(s.index() as usize, s.index() as usize).re;
            add_bits(&mut ones, s, w);
        }
    }
    Ok(ones)
}

fn add_bits(ones: &mut [f64], s: Bitstring, w: f64) {
    for (i, acc) in ones.iter_mut().enumerate() {
        if s.bit(i) {
            *acc += w;
        }
    }
}

/// `n^{-1} Σ_{i≤n} Tr(ρ_n Q^n_i)` where `Q^n_i` measures `a` on a zero and
/// `b` on a one at position `i`.
pub fn lln_average(rho: &StatePrefix, n: usize, a: f64, b: f64) -> Result<f64> {
    if let Some(p) = rho.bernoulli_p() {
        if n == 0 || n > rho.depth() {
            return Err(Error::InvalidParameter(format!("level {n} outside 1..={}", rho.depth())));
        }
        return Ok(a * p + b * (1.0 - p));
    }
    let ones = position_marginals(rho, n)?;
    let sum: f64 = ones.iter().map(|q| a * (1.0 - q) + b * q).sum();
    Ok(sum / n as f64)
}

/// The same average summed directly over the diagonal weights of a diagonal
/// state, `Σ_σ w(σ) (b·#ones(σ) + a·#zeros(σ)) / n`.
pub fn lln_average_by_weights(rho: &StatePrefix, n: usize, a: f64, b: f64) -> Result<f64> {
    let mut acc = 0.0;
    rho.for_each_weight(n, |s, w| acc += w * (b * s.count_ones() as f64 + a * s.count_zeros() as f64))?;
    Ok(acc / n as f64)
}

/// `A_n = n^{-1} Σ_i Q^n_i` as a dense diagonal matrix, for cross-checks.
pub fn average_observable(n: usize, a: f64, b: f64) -> Result<CMatrix> {
    let diag: Vec<f64> = Bitstring::all(n)
        .map(|s| (b * s.count_ones() as f64 + a * s.count_zeros() as f64) / n as f64)
        .collect();
    CMatrix::from_real_diagonal(&diag)
}

/// One level of a Chernoff test: `C_n` is the set of strings whose number
/// of ones lies in `ones`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChernoffLevel {
    pub n: usize,
    pub ones: Vec<usize>,
    /// `b_p(S_n)`.
    pub mass: f64,
    /// `exp(−2δ²nM²/(b−a)²)`.
    pub bound: f64,
}

impl ChernoffLevel {
    pub fn contains(&self, s: Bitstring) -> bool {
        self.ones.binary_search(&s.count_ones()).is_ok()
    }

    pub fn strings(&self) -> impl Iterator<Item = Bitstring> + '_ {
        Bitstring::all(self.n).filter(|s| self.contains(*s))
    }

    /// `S_n = P_{C_n}`.
    pub fn projector(&self) -> Result<Projector> {
        Projector::basis(self.n, self.strings())
    }
}

/// p-Schnorr test `S_n = P_{C_n}` with
/// `C_n = {σ ∈ 2^n : n^{-1}[b·#ones(σ) + a·#zeros(σ)] > (1+δ)M}` and
/// `M = ap + b(1−p)`.
#[derive(Clone, Debug)]
pub struct ChernoffTest {
    pub p: f64,
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub big_m: f64,
    pub levels: Vec<ChernoffLevel>,
}

impl ChernoffTest {
    pub fn level(&self, n: usize) -> Option<&ChernoffLevel> {
        self.levels.iter().find(|l| l.n == n)
    }

    /// The constant `C = (1−M)/(|z| + |3M|)` with `z = max(a, b)`.
    pub fn witness_constant(&self) -> f64 {
        (1.0 - self.big_m) / (self.a.max(self.b).abs() + (3.0 * self.big_m).abs())
    }

    /// `Tr(ρ_n S_n)`, from weights for diagonal states and from the
    /// diagonal of `ρ_n` otherwise.
    pub fn captured(&self, rho: &StatePrefix, n: usize) -> Result<f64> {
        let level = self.level(n).ok_or_else(|| Error::InvalidParameter(format!("level {n} not in the test")))?;
        if let Some(p) = rho.bernoulli_p() {
            return Ok(level.ones.iter().map(|&j| binomial_f64(n, j) * (1.0 - p).powi(j as i32) * p.powi((n - j) as i32)).sum());
        }
        if let Some(x) = rho.classical_bits() {
            return Ok(if level.contains(x.prefix(n)) { 1.0 } else { 0.0 });
        }
        if rho.is_diagonal() {
            let mut acc = 0.0;
            rho.for_each_weight(n, |s, w| {
                if level.contains(s) {
                    acc += w;
                }
            })?;
            return Ok(acc);
        }
        let d = rho.dense_level(n)?;
        Ok(level.strings().map(|s| d.mat().get(s.index() as usize, s.index() as usize).re).sum())
    }

    /// The test as a p-Schnorr test with its levels as members; the
    /// declared limit is the sum of the Chernoff bounds.
    pub fn to_quantum_test(&self, tol: &Tolerances) -> Result<QuantumTest> {
        let members = self.levels.iter().map(ChernoffLevel::projector).collect::<Result<Vec<_>>>()?;
        let limit = self.levels.iter().map(|l| l.bound).sum();
        QuantumTest::p_schnorr(self.p, members, limit, tol)
    }
}

/// Builds the Chernoff test on levels `n_min..=n_max`. Only the upward
/// deviation with `0 ≤ M < 1` is constructed; other cases reduce to it by
/// negating or rescaling `a` and `b`.
pub fn chernoff_test(p: f64, a: f64, b: f64, delta: f64, n_min: usize, n_max: usize) -> Result<ChernoffTest> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} outside [0, 1]")));
    }
    if !(a < b) {
        return Err(Error::InvalidParameter(format!("need a < b, got a = {a}, b = {b}")));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!("delta {delta} outside (0, 1]")));
    }
    let big_m = a * p + b * (1.0 - p);
    if !(0.0..1.0).contains(&big_m) {
        return Err(Error::InvalidParameter(format!(
            "M = {big_m} outside [0, 1); transform a and b first"
        )));
    }
    if n_min == 0 || n_min > n_max || n_max > PARAMETRIC_DEPTH_CAP {
        return Err(Error::InvalidParameter(format!("level range {n_min}..={n_max}")));
    }
    let exact_p = BigRational::from_float(p).expect("finite p");
    let threshold = (1.0 + delta) * big_m;
    let levels = (n_min..=n_max)
        .map(|n| {
            let ones: Vec<usize> = (0..=n)
                .filter(|&j| (b * j as f64 + a * (n - j) as f64) > n as f64 * threshold)
                .collect();
            let mass = if n <= EXACT_TAIL_LEVELS {
                exact_tail(&exact_p, n, &ones)
            } else {
                log_tail(p, n, &ones)
            };
            let bound = (-2.0 * delta * delta * n as f64 * big_m * big_m / ((b - a) * (b - a))).exp();
            ChernoffLevel { n, ones, mass, bound }
        })
        .collect();
    Ok(ChernoffTest { p, a, b, delta, big_m, levels })
}

/// `Σ_{j ∈ ones} C(n, j) (1−p)^j p^{n−j}` in exact rational arithmetic.
pub fn exact_tail(p: &BigRational, n: usize, ones: &[usize]) -> f64 {
    let q = BigRational::one() - p;
    let mut acc = BigRational::zero();
    for &j in ones {
        let term = BigRational::from_integer(binomial(n, j)) * pow(&q, j) * pow(p, n - j);
        acc += term;
    }
    acc.to_f64().expect("mass in [0, 1]")
}

fn pow(x: &BigRational, e: usize) -> BigRational {
    num_traits::pow(x.clone(), e)
}

pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    c
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    binomial(n, k).to_f64().expect("finite binomial")
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

fn log_tail(p: f64, n: usize, ones: &[usize]) -> f64 {
    ones.iter()
        .map(|&j| {
            let lq = if j == 0 { 0.0 } else { j as f64 * (1.0 - p).ln() };
            let lp = if j == n { 0.0 } else { (n - j) as f64 * p.ln() };
            (ln_binomial(n, j) + lq + lp).exp()
        })
        .sum()
}

/// One level of an LLN failure report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LlnRow {
    pub n: usize,
    pub average: f64,
    /// `δ + M`.
    pub threshold: f64,
    /// `b_p(S_n)`.
    pub mass: f64,
    pub bound: f64,
    /// `bound − mass`.
    pub margin: f64,
    /// Whether the average exceeds the threshold at this level.
    pub witness: bool,
    /// `Tr(ρ_n S_n)`.
    pub captured: f64,
    /// `Tr(ρ_n S_n) − Cδ` on witnessing levels, zero elsewhere.
    pub capture_margin: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct LlnReport {
    pub constant: f64,
    pub rows: Vec<LlnRow>,
}

impl LlnReport {
    pub fn witnesses(&self) -> impl Iterator<Item = &LlnRow> {
        self.rows.iter().filter(|r| r.witness)
    }

    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::Format(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))
    }
}

/// On every level where the average exceeds `δ + M`, checks
/// `Tr(ρ_n S_n) ≥ Cδ`; every level also checks the Chernoff mass bound.
pub fn verify_lln_failure(rho: &StatePrefix, test: &ChernoffTest) -> Result<LlnReport> {
    let constant = test.witness_constant();
    let threshold = test.delta + test.big_m;
    let mut rows = Vec::new();
    for level in test.levels.iter().filter(|l| l.n <= rho.depth()) {
        let n = level.n;
        let average = lln_average(rho, n, test.a, test.b)?;
        let witness = average > threshold;
        let captured = test.captured(rho, n)?;
        let capture_margin = if witness { captured - constant * test.delta } else { 0.0 };
        let mass_ok = level.mass <= level.bound + MASS_SLACK;
        rows.push(LlnRow {
            n,
            average,
            threshold,
            mass: level.mass,
            bound: level.bound,
            margin: level.bound - level.mass,
            witness,
            captured,
            capture_margin,
            pass: mass_ok && capture_margin >= -MARKOV_SLACK,
        });
    }
    Ok(LlnReport { constant, rows })
}

/// `(𝔼Y − μ)/(B − μ)` for a finite distribution of `(value, probability)`
/// pairs, checked against `ℙ{Y ≥ μ}`.
pub fn markov_bound(y_max: f64, mu: f64, ev: f64, probs: &[(f64, f64)]) -> Result<(f64, Check)> {
    let mut problems = Vec::new();
    if !(mu < ev) {
        problems.push(format!("μ = {mu} is not below 𝔼Y = {ev}"));
    }
    if let Some((v, _)) = probs.iter().find(|(v, _)| *v > y_max) {
        problems.push(format!("value {v} exceeds B = {y_max}"));
    }
    if let Some((_, q)) = probs.iter().find(|(_, q)| !(*q >= 0.0)) {
        problems.push(format!("negative probability {q}"));
    }
    let total: f64 = probs.iter().map(|(_, q)| q).sum();
    if (total - 1.0).abs() > 1e-9 {
        problems.push(format!("probabilities sum to {total}"));
    }
    if !problems.is_empty() {
        return Err(Error::Preconditions(problems));
    }
    let bound = (ev - mu) / (y_max - mu);
    let tail: f64 = probs.iter().filter(|(v, _)| *v >= mu).map(|(_, q)| q).sum();
    Ok((bound, Check::greater_eq("markov", "ℙ{Y ≥ μ} ≥ (𝔼Y−μ)/(B−μ)", tail, bound, MARKOV_SLACK)))
}

/// `F_μ`, the projection onto the eigenvectors of `A` with eigenvalue at
/// least `μ`, and the check `Tr(ρ F_μ) ≥ (m−μ)/(B−μ)`.
pub fn trace_markov(
    a_mat: &CMatrix,
    rho: &DensityMatrix,
    mu: f64,
    m_lb: f64,
    b_ub: f64,
    tol: &Tolerances,
) -> Result<(Projector, Check)> {
    let mut problems = Vec::new();
    let dev = a_mat.hermitian_deviation();
    if dev > tol.herm {
        problems.push(format!("A is not Hermitian (deviation {dev:e})"));
    }
    if a_mat.dim() != rho.mat().dim() {
        return Err(Error::DimensionMismatch { expected: a_mat.dim(), found: rho.mat().dim() });
    }
    let eig = a_mat.hermitian_eigen();
    if eig.values[0] > b_ub + tol.herm {
        problems.push(format!("top eigenvalue {} exceeds B = {b_ub}", eig.values[0]));
    }
    let expectation = a_mat.trace_product(rho.mat());
    if !(mu < m_lb) {
        problems.push(format!("μ = {mu} is not below m = {m_lb}"));
    }
    if m_lb > expectation + tol.trace {
        problems.push(format!("m = {m_lb} exceeds Tr(ρA) = {expectation}"));
    }
    if !problems.is_empty() {
        return Err(Error::Preconditions(problems));
    }
    let rank = eig.values.iter().take_while(|&&v| v >= mu).count();
    let f = if rank == 0 {
        Projector::zero(a_mat.qubits())
    } else {
        Projector::from_frame_unchecked(eig.vectors.columns(0, rank).into_owned())
    };
    let bound = (m_lb - mu) / (b_ub - mu);
    let captured = f.expectation_dense(rho.mat());
    Ok((f, Check::greater_eq("trace-markov", "Tr(ρF_μ) ≥ (m−μ)/(B−μ)", captured, bound, MARKOV_SLACK)))
}

/// Strings of length `n` whose one-count is in `ones`, as a set.
pub fn strings_with_ones(n: usize, ones: &[usize]) -> BTreeSet<Bitstring> {
    Bitstring::all(n).filter(|s| ones.contains(&s.count_ones())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{make_bernoulli, make_classical, make_tau};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn averages_of_standard_states() {
        let tau = make_tau(12).unwrap();
        for n in 1..=12 {
            assert_eq!(lln_average(&tau, n, 0.0, 1.0).unwrap(), 0.5);
            assert_eq!(lln_average_by_weights(&tau, n, 0.0, 1.0).unwrap(), 0.5);
        }
        let ones = make_classical(Bitstring::ones(6), 6).unwrap();
        assert_eq!(lln_average(&ones, 6, 0.0, 1.0).unwrap(), 1.0);
        let b = make_bernoulli(0.3, 8).unwrap();
        assert!((lln_average(&b, 8, -2.0, 5.0).unwrap() - (-0.6 + 3.5)).abs() < 1e-12);
        assert!((lln_average_by_weights(&b, 8, -2.0, 5.0).unwrap() - 2.9).abs() < 1e-12);
        assert!(lln_average(&b, 9, 0.0, 1.0).is_err());
    }

    #[test]
    fn dense_and_diagonal_averages_agree() {
        let b = make_bernoulli(0.3, 5).unwrap().to_materialized_diagonal().unwrap();
        let d = b.to_dense().unwrap();
        for n in 1..=5 {
            let x = lln_average(&b, n, 0.5, 2.0).unwrap();
            let y = lln_average(&d, n, 0.5, 2.0).unwrap();
            let z = average_observable(n, 0.5, 2.0).unwrap().trace_product(d.dense_level(n).unwrap().mat());
            assert!((x - y).abs() < 1e-12 && (x - z).abs() < 1e-12);
        }
    }

    #[test]
    fn fair_coin_tail() {
        let t = chernoff_test(0.5, 0.0, 1.0, 0.2, 20, 20).unwrap();
        let level = &t.levels[0];
        assert_eq!(level.ones, (13..=20).collect::<Vec<_>>());
        let oracle: f64 = (13..=20u32).map(|j| binomial_f64(20, j as usize)).sum::<f64>() / 2f64.powi(20);
        assert!((level.mass - oracle).abs() < 1e-15);
        assert!((level.bound - (-0.4f64).exp()).abs() < 1e-15);
        assert!(level.mass <= level.bound);
    }

    #[test]
    fn unattainable_threshold_is_empty() {
        let t = chernoff_test(0.5, 0.0, 1.0, 1.0, 1, 10).unwrap();
        assert!(t.levels.iter().all(|l| l.ones.is_empty() && l.mass == 0.0));
    }

    #[test]
    fn parameter_validation() {
        assert!(chernoff_test(1.5, 0.0, 1.0, 0.2, 1, 4).is_err());
        assert!(chernoff_test(0.5, 1.0, 0.0, 0.2, 1, 4).is_err());
        assert!(chernoff_test(0.5, 0.0, 1.0, 0.0, 1, 4).is_err());
        assert!(chernoff_test(0.5, 1.0, 2.0, 0.2, 1, 4).is_err());
        assert!(chernoff_test(0.5, 0.0, 1.0, 0.2, 5, 4).is_err());
    }

    #[test]
    fn all_ones_fails_the_test() {
        let t = chernoff_test(0.5, 0.0, 1.0, 0.2, 1, 16).unwrap();
        let rho = make_classical(Bitstring::ones(16), 16).unwrap();
        let report = verify_lln_failure(&rho, &t).unwrap();
        assert_eq!(report.witnesses().count(), 16);
        assert!(report.pass());
        assert!(report.witnesses().all(|r| r.captured == 1.0));
    }

    #[test]
    fn log_and_exact_tails_agree() {
        let p = 0.3;
        let ones: Vec<usize> = (30..=60).collect();
        let exact = exact_tail(&BigRational::from_float(p).unwrap(), 60, &ones);
        assert!((exact - log_tail(p, 60, &ones)).abs() < 1e-12);
    }

    #[test]
    fn markov_examples() {
        let (bound, check) = markov_bound(1.0, 0.4, 1.0, &[(1.0, 1.0)]).unwrap();
        assert_eq!(bound, 1.0);
        assert!(check.pass);
        let (bound, check) = markov_bound(1.0, 0.4, 0.5, &[(0.0, 0.5), (1.0, 0.5)]).unwrap();
        assert!((bound - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(check.lhs, 0.5);
        assert!(markov_bound(1.0, 0.6, 0.5, &[(0.0, 0.5), (1.0, 0.5)]).is_err());
    }

    #[test]
    fn trace_markov_examples() {
        let a = CMatrix::from_real_diagonal(&[0.0, 1.0]).unwrap();
        let rho = DensityMatrix::new(CMatrix::identity(1).scale(0.5), &tol()).unwrap();
        let (f, check) = trace_markov(&a, &rho, 0.4, 0.5, 1.0, &tol()).unwrap();
        assert_eq!(f.rank(), 1);
        assert!((f.diag_entry(1) - 1.0).abs() < 1e-12);
        assert!(check.pass && (check.rhs - 1.0 / 6.0).abs() < 1e-15);
        let (f, check) = trace_markov(&CMatrix::identity(1).scale(2.0), &rho, 1.0, 2.0, 2.0, &tol()).unwrap();
        assert_eq!(f.rank(), 2);
        assert!(check.pass);
        assert!(trace_markov(&a, &rho, 0.4, 0.9, 1.0, &tol()).is_err());
    }
}
