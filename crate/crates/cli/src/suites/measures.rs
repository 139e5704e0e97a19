use std::collections::BTreeSet;

use qrl::gen::{planted_diagonal, random_projector, rng_for};
use qrl::measures::{verify_qmlt_transfer, verify_solovay_transfer};
use qrl::{
    classical_solovay_to_mlt, make_classical, qmlt_to_classical, schnorr_to_classical, threshold_basis_set,
    Bitstring, CVector, Check, Error, Projector, QuantumTest, C64,
};
use rand::Rng;

use super::{at_least, instance, stream, tagged, Ctx};
use crate::error::CliResult;

pub const SOLOVAY_M_MAX: usize = 3;

/// Counting bound `|S^δ(F)| < Tr(F)/δ` against an exhaustive scan of the
/// diagonal of `F`, on random nonzero projectors and basis projectors.
/// The strict bound is false for `F = 0`.
pub fn counting(ctx: &Ctx, count: usize) -> CliResult<Vec<Check>> {
    let name = "counting";
    let max_qubits = ctx.depth(6);
    let mut checks = Vec::with_capacity(2 * count);
    for id in 0..count {
        let mut rng = rng_for(ctx.seed, stream(name), id as u32);
        let n = rng.random_range(1..=max_qubits);
        let dim = 1usize << n;
        let f = if rng.random_bool(0.5) {
            let rank = rng.random_range(1..=dim);
            random_projector(&mut rng, n, rank)?
        } else {
            let mut strings: BTreeSet<Bitstring> = BTreeSet::new();
            for s in Bitstring::all(n) {
                if rng.random_bool(0.3) {
                    strings.insert(s);
                }
            }
            if strings.is_empty() {
                strings.insert(Bitstring::new(n, rng.random_range(0..dim as u64))?);
            }
            Projector::basis(n, strings)?
        };
        let delta: f64 = rng.random_range(0.05..1.0);
        let m = f.to_matrix()?;
        let scanned = (0..dim).filter(|&i| m.get(i, i).re > delta).count();
        let inst = instance(name, id, &format!("n={n} rank={}", f.rank()));
        checks.push(Check::less(inst.clone(), "|S^δ(F)| < Tr(F)/δ", scanned as f64, f.rank() as f64 / delta, 0.0));
        let reported = match threshold_basis_set(n, &f, delta) {
            Ok(set) => set.len() as f64,
            Err(Error::MassViolation(_)) => f64::MAX,
            Err(e) => return Err(e.into()),
        };
        checks.push(Check::close(inst, "threshold set = scanned set", reported, scanned as f64, 0.0));
    }
    Ok(checks)
}

/// Planted diagonal states against a q-MLT and a classical Solovay test:
/// masses of the derived classical MLTs and the transfers
/// `μ_ρ(T^m_n) ≥ 3δ/4` and `μ_ρ(C^m_t) > δ/2`.
pub fn diagonal(ctx: &Ctx, count: usize) -> CliResult<Vec<Check>> {
    let name = "diagonal";
    let qmlt_depth = ctx.depth(8);
    let solovay_depth = ctx.depth(12);
    let qmlt_members = 4.min(qmlt_depth - 1);
    let solovay_members = 8.min(solovay_depth - 3);
    let delta = ctx.delta_or(0.5);
    let mut checks = Vec::new();
    for id in 0..count {
        let mut rng = rng_for(ctx.seed, stream(name), id as u32);
        let p = planted_diagonal(&mut rng, qmlt_depth, qmlt_members, solovay_depth, solovay_members)?;

        let classical = qmlt_to_classical(&p.qmlt, delta, &ctx.tol)?;
        for (i, mu) in classical.masses().iter().enumerate() {
            let bound = classical.mlt_scale() * 2f64.powi(-(i as i32 + 1));
            checks.push(Check::less_eq(instance(name, id, &format!("T m={}", i + 1)), "λ(T^m) ≤ (4/δ)2^{-m}", *mu, bound, ctx.tol.mass));
        }
        let transfer = verify_qmlt_transfer(&p.state, &p.qmlt, &classical, delta)?;
        checks.push(at_least(instance(name, id, "T"), "witnessing levels", transfer.len(), 1));
        checks.extend(tagged(name, id, transfer));

        let mlt = classical_solovay_to_mlt(&p.solovay, delta, SOLOVAY_M_MAX, &ctx.tol)?;
        for (i, mu) in mlt.masses().iter().enumerate() {
            let bound = mlt.mlt_scale() * 2f64.powi(-(i as i32 + 1));
            checks.push(Check::less_eq(instance(name, id, &format!("C m={}", i + 1)), "λ(C^m) ≤ (2/δ)2^{-m}", *mu, bound, ctx.tol.mass));
        }
        let transfer = verify_solovay_transfer(&p.state, &p.solovay, &mlt, delta)?;
        checks.push(at_least(instance(name, id, "C"), "witnessing levels", transfer.len(), 1));
        checks.extend(tagged(name, id, transfer));
    }
    Ok(checks)
}

/// Random quantum Schnorr tests read on the standard basis: member masses
/// `λ(T^r) ≤ τ(Q^r)/δ`, the scaled limit, and `X↾n_r ∈ T^r` whenever
/// `Tr(ρ_X Q^r) > δ`.
pub fn schnorr(ctx: &Ctx, count: usize) -> CliResult<Vec<Check>> {
    let name = "schnorr";
    let depth = ctx.depth(8);
    let delta = ctx.delta_or(0.5);
    let mut checks = Vec::new();
    for id in 0..count {
        let mut rng = rng_for(ctx.seed, stream(name), id as u32);
        let x = Bitstring::new(depth, rng.random_range(0..1u64 << depth))?;
        let state = make_classical(x, depth)?;
        let mut members = Vec::with_capacity(depth - 1);
        for r in 1..depth {
            let n = r + 1;
            let q = if r % 2 == 1 {
                let dim = 1usize << n;
                let own = x.prefix(n).index() as usize;
                let other = (own + rng.random_range(1..dim)) % dim;
                let theta: f64 = rng.random_range(0.0..0.6);
                let mut v = CVector::zeros(dim);
                v[own] = C64::new(theta.cos(), 0.0);
                v[other] = C64::from_polar(theta.sin(), rng.random_range(0.0..std::f64::consts::TAU));
                Projector::from_vectors(n, &[v], &ctx.tol)?
            } else {
                random_projector(&mut rng, n, 1)?
            };
            members.push(q);
        }
        let limit: f64 = members.iter().map(Projector::tau_mass).sum();
        let qt = QuantumTest::schnorr(members, limit, &ctx.tol)?;
        let classical = schnorr_to_classical(&qt, delta, &ctx.tol)?;
        let qs = qt.single_members().expect("Schnorr test");
        let mut hits = 0;
        for (i, (q, t)) in qs.iter().zip(classical.members()).enumerate() {
            let n = q.qubits();
            let inst = instance(name, id, &format!("r={}", i + 1));
            checks.push(Check::less_eq(inst.clone(), "λ(T^r) ≤ τ(Q^r)/δ", t.lebesgue(), q.tau_mass() / delta, ctx.tol.mass));
            if state.trace_with(q)? > delta {
                hits += 1;
                checks.push(Check::greater_eq(inst, "μ_{ρ_X}(T^r) = 1 when Tr(ρ_X Q^r) > δ", t.measure_at(&state, n)?, 1.0, 0.0));
            }
        }
        checks.push(Check::less_eq(
            instance(name, id, "limit"),
            "Σ_r λ(T^r) ≤ δ^{-1} Σ_r τ(Q^r)",
            classical.total_mass(),
            classical.declared_limit().expect("Schnorr limit"),
            ctx.tol.mass,
        ));
        checks.push(at_least(instance(name, id, "hits"), "members above δ", hits, 1));
    }
    Ok(checks)
}
