use qrl::convert::mass_checks;
use qrl::gen::{planted_solovay, random_dense_state, random_qmlt, random_weights, rng_for};
use qrl::sigma::convexity_witness;
use qrl::{build_nested, mix_states, rho_value, solovay_to_mlt, tau_value, verify_failure_transfer, Check};
use rand::Rng;

use super::{at_least, instance, stream, tagged, Ctx};
use crate::error::CliResult;

pub const SOLOVAY_M_MAX: usize = 3;
const LINEARITY_SLACK: f64 = 1e-10;

/// Planted Solovay instances converted to a q-MLT: mass certificate,
/// failure transfer on every level with enough hits, nonnegative lift gaps,
/// and a transfer check at the planted level for each member.
pub fn solovay(ctx: &Ctx, count: usize) -> CliResult<Vec<Check>> {
    let name = "solovay";
    let depth = ctx.depth(8);
    let delta = ctx.delta_or(0.5);
    let mut checks = Vec::new();
    for id in 0..count {
        let mut rng = rng_for(ctx.seed, stream(name), id as u32);
        let planted = planted_solovay(&mut rng, depth, delta)?;
        let conv = solovay_to_mlt(&planted.instance, SOLOVAY_M_MAX, &ctx.tol)?;
        checks.extend(tagged(name, id, mass_checks(&planted.instance, &conv.mlt)));
        for m in 1..=SOLOVAY_M_MAX {
            let report = verify_failure_transfer(&planted.state, &planted.instance, &conv.mlt, m)?;
            let at_planted = report.checks.iter().filter(|(n, _)| *n == planted.planted_level).count();
            checks.push(at_least(instance(name, id, &format!("m={m} planted")), "checks at the planted level", at_planted, 1));
            checks.extend(tagged(name, id, report.checks.into_iter().map(|(_, c)| c)));
        }
        for pair in conv.trace.windows(2) {
            let (below, row) = (&pair[0], &pair[1]);
            if row.m == below.m && below.size > 0 {
                checks.push(Check::greater_eq(
                    instance(name, id, &format!("m={} n={}", row.m, row.n)),
                    "⟨ψ⊗i|V_n|ψ⊗i⟩ ≥ ⟨ψ|V_{n−1}|ψ⟩",
                    row.lift_gap,
                    0.0,
                    ctx.tol.nest,
                ));
            }
        }
    }
    Ok(checks)
}

/// Nested reformulation of random q-MLTs: rank bounds, range inclusions,
/// nesting of levels, τ-masses and monotonicity of ρ-values.
pub fn nesting(ctx: &Ctx, count: usize) -> CliResult<Vec<Check>> {
    let name = "nesting";
    let max_depth = ctx.depth(6);
    let tol = ctx.tol;
    let mut checks = Vec::new();
    for id in 0..count {
        let mut rng = rng_for(ctx.seed, stream(name), id as u32);
        let depth = rng.random_range(3..=max_depth);
        let k = rng.random_range(2..=depth);
        let t = random_qmlt(&mut rng, depth, k)?;
        let rank = rng.random_range(1..=3);
        let rho = random_dense_state(&mut rng, depth, rank)?;
        let nested = build_nested(&t, &tol)?;
        let g = t.sigma_members().expect("q-MLT");
        let q = nested.sigma_members().expect("q-MLT");
        for (j, qm) in q.iter().enumerate() {
            let m = j + 2;
            let at = |n: usize| instance(name, id, &format!("m={m} n={n}"));
            for n in 1..=depth {
                let level = qm.level(n);
                let cap = 2f64.powi(n as i32 - m as i32 + 1);
                checks.push(Check::less(at(n), "rank(Q^m_n) < 2^{n−m+1}", level.rank() as f64, cap, 0.0));
                let mut defect = 0.0f64;
                for gi in g.iter().take(n.min(k)).skip(m - 1) {
                    defect = defect.max(level.inclusion_defect(gi.level(n))?);
                }
                if let Some(next) = q.get(j + 1) {
                    defect = defect.max(level.inclusion_defect(next.level(n))?);
                }
                checks.push(Check::less_eq(at(n), "ranges of G^i_n, Q^{m+1}_n ⊆ Q^m_n", defect, 0.0, tol.nest));
                if n > 1 {
                    let lifted = level.nesting_defect(qm.level(n - 1))?;
                    checks.push(Check::less_eq(at(n), "range(Q^m_{n−1} ⊗ I) ⊆ Q^m_n", lifted, 0.0, tol.nest));
                    let below = rho.trace_with(qm.level(n - 1))?;
                    let here = rho.trace_with(level)?;
                    checks.push(Check::greater_eq(at(n), "Tr(ρ_n Q^m_n) ≥ Tr(ρ_{n−1} Q^m_{n−1})", here, below, tol.nest));
                }
            }
            let inst = instance(name, id, &format!("m={m}"));
            checks.push(Check::less(inst.clone(), "τ(Q^m) < 2^{−m+1}", tau_value(qm), 2f64.powi(1 - m as i32), tol.mass));
            if let Some(next) = q.get(j + 1) {
                checks.push(Check::greater_eq(inst, "ρ(Q^m) ≥ ρ(Q^{m+1})", rho_value(&rho, qm)?, rho_value(&rho, next)?, tol.nest));
            }
        }
    }
    Ok(checks)
}

/// Linearity of `Tr(ρ_k G_k)` under mixtures of random dense states, and
/// the pigeonhole witness on the top level of each member.
pub fn convexity(ctx: &Ctx, count: usize) -> CliResult<Vec<Check>> {
    let name = "convexity";
    let max_depth = ctx.depth(6);
    let mut checks = Vec::new();
    for id in 0..count {
        let mut rng = rng_for(ctx.seed, stream(name), id as u32);
        let depth = rng.random_range(2..=max_depth);
        let parts = rng.random_range(2..=4usize);
        let components = (0..parts)
            .map(|_| {
                let rank = rng.random_range(1..=3);
                random_dense_state(&mut rng, depth, rank)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let weights = random_weights(&mut rng, parts);
        let mix = mix_states(&components, &weights, &ctx.tol)?;
        let t = random_qmlt(&mut rng, depth, depth)?;
        for (i, g) in t.sigma_members().expect("q-MLT").iter().enumerate() {
            let (mut worst, mut lhs, mut rhs) = (-1.0f64, 0.0, 0.0);
            for k in 1..=depth {
                let mixed = mix.trace_with(g.level(k))?;
                let mut combined = 0.0;
                for (c, a) in components.iter().zip(&weights) {
                    combined += a * c.trace_with(g.level(k))?;
                }
                if (mixed - combined).abs() > worst {
                    (worst, lhs, rhs) = ((mixed - combined).abs(), mixed, combined);
                }
            }
            let inst = instance(name, id, &format!("G={}", i + 1));
            checks.push(Check::close(inst.clone(), "Tr(mix_k G_k) = Σα_i Tr(ρ^i_k G_k)", lhs, rhs, LINEARITY_SLACK));
            let top = g.last();
            let captured = mix.trace_with(top)?;
            if captured > 0.0 {
                let delta = 0.9 * captured;
                let found = convexity_witness(&components, &weights, top, delta)?;
                let value = match found {
                    Some(w) => components[w].trace_with(top)?,
                    None => 0.0,
                };
                checks.push(Check::greater(inst, "some component has Tr(ρ^i_N G_N) > δ", value, delta, 0.0));
            }
        }
    }
    Ok(checks)
}
