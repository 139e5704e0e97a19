use qrl::gen::{random_density, random_diagonal_state, random_hermitian, random_weights, rng_for};
use qrl::lln::{average_observable, lln_average_by_weights, MARKOV_SLACK, MASS_SLACK};
use qrl::{chernoff_test, lln_average, make_bernoulli, make_classical, make_tau, markov_bound, verify_lln_failure};
use qrl::{Bitstring, Check};
use rand::Rng;

use super::{at_least, instance, stream, Ctx};
use crate::error::CliResult;

const EXACT: f64 = 1e-12;

/// Levels at which float weight sums of non-dyadic weights stay within
/// [`EXACT`] of the closed form.
const WEIGHT_SUM_LEVELS: usize = 8;

/// Levels of the Chernoff tests. Bernoulli states are parametric, so these
/// levels are not bounded by the depth cap.
pub const CHERNOFF_LEVELS: usize = 40;

/// `(p, δ, a, b)` for the Chernoff grid; each choice keeps `0 ≤ M < 1` and
/// lets the Bernoulli(0.8) deviant clear `δ + M`.
pub const CHERNOFF_GRID: [(f64, f64, f64, f64); 4] = [
    (0.5, 0.1, 0.0, 1.0),
    (0.5, 0.2, 0.0, 1.0),
    (1.0 / 3.0, 0.1, 0.0, 1.0),
    (1.0 / 3.0, 0.2, -1.0, 1.0),
];

/// Averages of `τ` and of random `b_p` over the weight enumeration against
/// their closed forms, and weight sums against dense traces at `n ≤ 8`.
pub fn exactness(ctx: &Ctx, count: usize) -> CliResult<Vec<Check>> {
    let name = "exactness";
    let depth = ctx.depth(20);
    let mut checks = Vec::new();
    let tau = make_tau(depth)?;
    for n in 1..=depth {
        let v = lln_average_by_weights(&tau, n, 0.0, 1.0)?;
        checks.push(Check::close(instance(name, 0, &format!("tau n={n}")), "average(τ, n, 0, 1) = 0.5", v, 0.5, EXACT));
    }
    for id in 0..count {
        let mut rng = rng_for(ctx.seed, stream(name), id as u32);
        let p: f64 = rng.random_range(0.0..=1.0);
        let a: f64 = rng.random_range(-2.0..1.0);
        let b: f64 = a + rng.random_range(0.1..2.0);
        let bp = make_bernoulli(p, depth)?;
        let expected = a * p + b * (1.0 - p);
        for n in 1..=depth {
            let at = instance(name, id, &format!("b_p n={n}"));
            checks.push(Check::close(at.clone(), "average(b_p, n, a, b) = ap + b(1−p)", lln_average(&bp, n, a, b)?, expected, EXACT));
            if n <= WEIGHT_SUM_LEVELS {
                checks.push(Check::close(at, "weight sum = ap + b(1−p)", lln_average_by_weights(&bp, n, a, b)?, expected, EXACT));
            }
        }
        let d = random_diagonal_state(&mut rng, depth.min(WEIGHT_SUM_LEVELS))?;
        for n in 1..=d.depth() {
            let dense = average_observable(n, a, b)?.trace_product(d.dense_level(n)?.mat());
            checks.push(Check::close(
                instance(name, id, &format!("diag n={n}")),
                "weight sum = Tr(ρ_n A_n)",
                lln_average_by_weights(&d, n, a, b)?,
                dense,
                EXACT,
            ));
        }
    }
    Ok(checks)
}

/// Exact Chernoff masses against `exp(−2δ²nM²/(b−a)²)` on the fixed grid,
/// and the capture `Tr(ρ_n S_n) ≥ Cδ` on witnessing levels of deviant
/// states. The grid does not depend on `count`.
pub fn chernoff(_ctx: &Ctx, _count: usize) -> CliResult<Vec<Check>> {
    let name = "chernoff";
    let mut checks = Vec::new();
    for (id, &(p, delta, a, b)) in CHERNOFF_GRID.iter().enumerate() {
        let test = chernoff_test(p, a, b, delta, 1, CHERNOFF_LEVELS)?;
        for level in &test.levels {
            checks.push(Check::less_eq(
                instance(name, id, &format!("n={}", level.n)),
                "b_p(S_n) ≤ exp(−2δ²nM²/(b−a)²)",
                level.mass,
                level.bound,
                MASS_SLACK,
            ));
        }
        let mut deviants = vec![("bernoulli(0.8)", make_bernoulli(0.2, CHERNOFF_LEVELS)?)];
        if a == 0.0 {
            deviants.push(("ones", make_classical(Bitstring::ones(CHERNOFF_LEVELS), CHERNOFF_LEVELS)?));
        }
        for (label, rho) in deviants {
            let report = verify_lln_failure(&rho, &test)?;
            let bound = report.constant * delta;
            let mut witnesses = 0;
            for row in report.witnesses() {
                witnesses += 1;
                checks.push(Check::greater_eq(
                    instance(name, id, &format!("{label} n={}", row.n)),
                    "Tr(ρ_n S_n) ≥ Cδ",
                    row.captured,
                    bound,
                    MARKOV_SLACK,
                ));
            }
            checks.push(at_least(instance(name, id, label), "witnessing levels", witnesses, 1));
        }
    }
    Ok(checks)
}

/// `ℙ{Y ≥ μ} ≥ (𝔼Y−μ)/(B−μ)` on random finite distributions.
pub fn markov(ctx: &Ctx, count: usize) -> CliResult<Vec<Check>> {
    let name = "markov";
    let mut checks = Vec::with_capacity(count);
    for id in 0..count {
        let mut rng = rng_for(ctx.seed, stream(name), id as u32);
        let k = rng.random_range(1..=8usize);
        let probs = random_weights(&mut rng, k);
        let dist: Vec<(f64, f64)> = probs.into_iter().map(|q| (rng.random_range(-1.0..2.0), q)).collect();
        let ev: f64 = dist.iter().map(|(v, q)| v * q).sum();
        let lo = dist.iter().map(|d| d.0).fold(f64::INFINITY, f64::min);
        let hi = dist.iter().map(|d| d.0).fold(f64::NEG_INFINITY, f64::max);
        let y_max = hi + rng.random_range(0.0..0.5);
        let mu = ev - rng.random_range(0.01..1.0) * (ev - lo + 0.5);
        let (_, mut check) = markov_bound(y_max, mu, ev, &dist)?;
        check.instance = instance(name, id, &format!("k={k}"));
        checks.push(check);
    }
    Ok(checks)
}

/// `Tr(ρF_μ) ≥ (m−μ)/(B−μ)` on random Hermitian `A` and density `ρ` with
/// `B ≥ ‖A‖`, `m ≤ Tr(ρA)` and `μ < m`.
pub fn trace_markov(ctx: &Ctx, count: usize) -> CliResult<Vec<Check>> {
    let name = "trace_markov";
    let max_qubits = ctx.depth(6);
    let mut checks = Vec::with_capacity(count);
    for id in 0..count {
        let mut rng = rng_for(ctx.seed, stream(name), id as u32);
        let q = rng.random_range(1..=max_qubits);
        let scale = rng.random_range(0.1..2.0);
        let a = random_hermitian(&mut rng, q, scale);
        let rank = rng.random_range(1..=4);
        let rho = random_density(&mut rng, q, rank)?;
        let b_ub = a.max_eigenvalue() + rng.random_range(0.0..0.5);
        let m_lb = a.trace_product(rho.mat()) - rng.random_range(0.0..0.5);
        let mu = m_lb - rng.random_range(0.01..1.0);
        let (_, mut check) = qrl::trace_markov(&a, &rho, mu, m_lb, b_ub, &ctx.tol)?;
        check.instance = instance(name, id, &format!("dim={}", 1 << q));
        checks.push(check);
    }
    Ok(checks)
}
