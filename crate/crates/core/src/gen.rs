//! Seeded generators for random states, projectors, tests and planted
//! instances.
//!
//! Every generator draws from a caller-supplied [`ChaCha8Rng`]; [`rng_for`]
//! derives independent per-instance streams from one seed.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::approx::ApproxInstance;
use crate::bits::Bitstring;
use crate::convert::SolovayInstance;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::measures::{ClassicalSet, ClassicalTestPrefix};
use crate::projector::Projector;
use crate::sigma::{QSigmaPrefix, QuantumTest, SPAN_CUTOFF};
use crate::state::{make_classical, mix_states, DensityMatrix, DiagonalLevel, StatePrefix};
use crate::tol::Tolerances;

/// Independent generator for instance `id` of the stream family `family`.
pub fn rng_for(seed: u64, family: u32, id: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((family as u64) << 32) | id as u64);
    rng
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn gaussian_vector(rng: &mut ChaCha8Rng, dim: usize) -> CVector {
    CVector::from_fn(dim, |_, _| gaussian(rng))
}

/// `ρ = AA†/Tr(AA†)` with `A` a `2^n × rank` complex Gaussian matrix.
pub fn random_density(rng: &mut ChaCha8Rng, qubits: usize, rank: usize) -> Result<DensityMatrix> {
    let a = gaussian_matrix(rng, 1 << qubits, rank.max(1));
    density_from_factor(&a)
}

fn density_from_factor(a: &DMatrix<C64>) -> Result<DensityMatrix> {
    let mut rho = CMatrix::gram_of_columns(a)?;
    let tr = rho.trace().re;
    rho = rho.scale(1.0 / tr).hermitian_part();
    DensityMatrix::new(rho, &Tolerances::default())
}

/// Random dense state prefix obtained by tracing out a random top level.
pub fn random_dense_state(rng: &mut ChaCha8Rng, depth: usize, rank: usize) -> Result<StatePrefix> {
    StatePrefix::from_top_dense(random_density(rng, depth, rank)?)
}

/// Random diagonal prefix with exponential top-level weights.
pub fn random_diagonal_state(rng: &mut ChaCha8Rng, depth: usize) -> Result<StatePrefix> {
    let raw: Vec<f64> = (0..1u64 << depth).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().enumerate().map(|(i, w)| (i as u64, w / total)).collect();
    StatePrefix::from_top_diagonal(DiagonalLevel::from_indices(depth, weights, &Tolerances::default())?)
}

/// Orthonormal frame of `rank` Haar-like random vectors in `ℂ^(2^n)`.
pub fn random_frame(rng: &mut ChaCha8Rng, qubits: usize, rank: usize) -> Vec<CVector> {
    let dim = 1 << qubits;
    let mut out: Vec<CVector> = Vec::with_capacity(rank);
    while out.len() < rank.min(dim) {
        let v = gaussian_vector(rng, dim);
        if let Some(u) = orthonormal_extension(&out, v) {
            out.push(u);
        }
    }
    out
}

/// `v` made orthogonal to `basis` and normalized, or `None` if it vanishes.
pub fn orthonormal_extension(basis: &[CVector], mut v: CVector) -> Option<CVector> {
    for _ in 0..2 {
        for u in basis {
            let c = u.dotc(&v);
            v.axpy(-c, u, C64::new(1.0, 0.0));
        }
    }
    let n = v.norm();
    (n > 1e-8).then(|| v.unscale(n))
}

pub fn random_projector(rng: &mut ChaCha8Rng, qubits: usize, rank: usize) -> Result<Projector> {
    if rank == 0 {
        return Ok(Projector::zero(qubits));
    }
    Projector::from_vectors(qubits, &random_frame(rng, qubits, rank), &Tolerances::default())
}

/// `(G + G†)/2` for a complex Gaussian `G`, scaled by `scale`.
pub fn random_hermitian(rng: &mut ChaCha8Rng, qubits: usize, scale: f64) -> CMatrix {
    let g = CMatrix::from_matrix(gaussian_matrix(rng, 1 << qubits, 1 << qubits)).expect("power of two");
    g.hermitian_part().scale(scale)
}

/// A random q-Σ⁰₁ prefix whose rank at level `n` never exceeds
/// `budget(n)`: each level is the lift of the previous one plus a few
/// random directions orthogonal to it.
pub fn random_sigma_prefix(
    rng: &mut ChaCha8Rng,
    depth: usize,
    budget: impl Fn(usize) -> usize,
) -> Result<QSigmaPrefix> {
    let mut levels: Vec<Projector> = Vec::with_capacity(depth);
    for n in 1..=depth {
        let lifted = levels.last().map(Projector::lift).unwrap_or_else(|| Projector::zero(n));
        let room = budget(n).saturating_sub(lifted.rank());
        let extra = if room == 0 || rng.random_bool(0.4) { 0 } else { rng.random_range(1..=room.min(3)) };
        let level = if extra == 0 {
            lifted
        } else {
            let mut frame = lifted.frame_vectors()?;
            let base = frame.len();
            while frame.len() < base + extra {
                if let Some(u) = orthonormal_extension(&frame, gaussian_vector(rng, 1 << n)) {
                    frame.push(u);
                }
            }
            Projector::from_vectors(n, &frame, &Tolerances::default())?
        };
        levels.push(level);
    }
    QSigmaPrefix::new(levels, &Tolerances::default())
}

/// A random `K`-member q-MLT of depth `N`; member `m` has rank at most
/// `2^{n−m}` at level `n`.
pub fn random_qmlt(rng: &mut ChaCha8Rng, depth: usize, members: usize) -> Result<QuantumTest> {
    let gs = (1..=members)
        .map(|m| random_sigma_prefix(rng, depth, |n| if n >= m { 1 << (n - m) } else { 0 }))
        .collect::<Result<Vec<_>>>()?;
    QuantumTest::qmlt(gs, &Tolerances::default())
}

/// Random approximation instance. The first `m` subspaces (and a random
/// share of the rest) contain a common unit vector, so the class of states
/// that sit in `m` of them is nonempty; the shared vector is returned for
/// use as a sampling centre.
pub fn random_approx_instance(rng: &mut ChaCha8Rng, max_qubits: usize) -> Result<(ApproxInstance, CVector)> {
    if max_qubits < 2 {
        return Err(Error::InvalidParameter(format!("approximation instances need 2 qubits, cap is {max_qubits}")));
    }
    let qubits = rng.random_range(2..=max_qubits);
    let dim = 1usize << qubits;
    let m = rng.random_range(1..=4usize);
    let k = rng.random_range(m.max(1)..=8usize);
    let delta = [0.2, 0.4, 0.8][rng.random_range(0..3)];
    let hot = random_frame(rng, qubits, 1).remove(0);
    let mut subspaces = Vec::with_capacity(k);
    for i in 0..k {
        let rank = rng.random_range(1..=(dim / 4).clamp(1, 6));
        let planted = i < m || rng.random_bool(0.3);
        let mut frame = if planted { vec![hot.clone()] } else { Vec::new() };
        while frame.len() < rank {
            if let Some(u) = orthonormal_extension(&frame, gaussian_vector(rng, dim)) {
                frame.push(u);
            }
        }
        subspaces.push(Projector::from_vectors(qubits, &frame, &Tolerances::default())?);
    }
    Ok((ApproxInstance::new(subspaces, delta, m)?, hot))
}

/// Density matrix concentrated near `centre`: `AA†/Tr` where each column of
/// `A` is `centre` plus Gaussian noise of a random size.
pub fn density_near(rng: &mut ChaCha8Rng, centre: &CVector) -> Result<DensityMatrix> {
    let dim = centre.len();
    let rank = rng.random_range(1..=3usize);
    let noise: f64 = rng.random_range(0.0..0.6);
    let scale = noise / (dim as f64).sqrt();
    let mut a = DMatrix::<C64>::zeros(dim, rank);
    for c in 0..rank {
        let v = centre + gaussian_vector(rng, dim) * C64::new(scale, 0.0);
        a.set_column(c, &v);
    }
    density_from_factor(&a)
}

/// Rejection sampling of class members: proposals alternate between
/// [`density_near`] and unrestricted random density matrices, and only
/// proposals inside the class are kept. Returns the samples and the number
/// of attempts used.
pub fn sample_class(
    rng: &mut ChaCha8Rng,
    inst: &ApproxInstance,
    centre: &CVector,
    want: usize,
    max_attempts: usize,
) -> Result<(Vec<DensityMatrix>, usize)> {
    let mut out = Vec::with_capacity(want);
    let mut attempts = 0;
    while out.len() < want && attempts < max_attempts {
        attempts += 1;
        let rho = if attempts % 2 == 1 {
            density_near(rng, centre)?
        } else {
            let rank = rng.random_range(1..=2usize);
            random_density(rng, inst.qubits(), rank)?
        };
        if inst.in_class(&rho) {
            out.push(rho);
        }
    }
    Ok((out, attempts))
}

/// A Solovay instance with a dense state that fails it: every member
/// captures more than `δ` of the state at the top level.
pub struct PlantedSolovay {
    pub instance: SolovayInstance,
    pub state: StatePrefix,
    pub planted_level: usize,
}

/// Planted instance on `depth` qubits. The state is mostly a random pure
/// vector `φ`; member `k` contains a perturbation of `φ` at the top level
/// and a lifted random decoy line from level `min(k + 3, depth)`.
pub fn planted_solovay(rng: &mut ChaCha8Rng, depth: usize, delta: f64) -> Result<PlantedSolovay> {
    let tol = Tolerances::default();
    let dim = 1usize << depth;
    let phi = random_frame(rng, depth, 1).remove(0);
    let weight = rng.random_range(0.85..0.95);
    let top = {
        let noise = random_density(rng, depth, 2)?;
        let pure = DensityMatrix::pure(&phi)?;
        let mat = &pure.mat().scale(weight) + &noise.mat().scale(1.0 - weight);
        DensityMatrix::new(mat.hermitian_part(), &tol)?
    };
    let state = StatePrefix::from_top_dense(top)?;
    let mut members = Vec::with_capacity(depth);
    for k in 1..=depth {
        let decoy_level = (k + 3).min(depth);
        let mut levels = Vec::with_capacity(depth);
        for n in 1..=depth {
            let level = if n < decoy_level {
                Projector::zero(n)
            } else if n == decoy_level {
                random_projector(rng, n, 1)?
            } else {
                levels.last().map(Projector::lift).expect("level below")
            };
            levels.push(level);
        }
        let eps = rng.random_range(0.05..0.2) / (dim as f64).sqrt();
        let line = orthonormal_extension(&[], &phi + gaussian_vector(rng, dim) * C64::new(eps, 0.0))
            .ok_or(Error::InvalidParameter("degenerate planted vector".into()))?;
        let planted = Projector::from_vectors(depth, &[line], &tol)?;
        let top_level = levels.pop().expect("depth ≥ 1");
        levels.push(Projector::span_union(depth, &[&top_level, &planted], SPAN_CUTOFF)?);
        members.push(QSigmaPrefix::new(levels, &tol)?);
    }
    let instance = SolovayInstance::with_float_delta(members, delta)?;
    Ok(PlantedSolovay { instance, state, planted_level: depth })
}

/// A diagonal state with most of its weight on one infinite-looking
/// sequence `X`, together with a q-MLT and a classical Solovay test that it
/// fails.
pub struct PlantedDiagonal {
    pub state: StatePrefix,
    pub x: Bitstring,
    pub qmlt: QuantumTest,
    pub solovay: ClassicalTestPrefix,
}

/// Planted diagonal instance. The state mixes `ρ_X` (weight in
/// `[0.7, 0.9]`) with a random diagonal state. q-MLT member `m` starts at
/// level `m + 1` with the line `cos θ|X↾(m+1)⟩ + sin θ|y⟩` and is lifted
/// from there; Solovay member `k` is the cylinder of `X↾(k+3)` plus a random
/// decoy string at level `k + 3`.
pub fn planted_diagonal(
    rng: &mut ChaCha8Rng,
    qmlt_depth: usize,
    qmlt_members: usize,
    solovay_depth: usize,
    solovay_members: usize,
) -> Result<PlantedDiagonal> {
    let tol = Tolerances::default();
    let depth = qmlt_depth.max(solovay_depth);
    let x = Bitstring::new(depth, rng.random_range(0..1u64 << depth))?;
    let weight = rng.random_range(0.7..0.9);
    let noise = random_diagonal_state(rng, depth)?;
    let state = mix_states(&[make_classical(x, depth)?, noise], &[weight, 1.0 - weight], &tol)?;

    let mut gs = Vec::with_capacity(qmlt_members);
    for m in 1..=qmlt_members {
        let start = m + 1;
        if start > qmlt_depth {
            return Err(Error::InvalidParameter(format!("member {m} does not fit depth {qmlt_depth}")));
        }
        let dim = 1usize << start;
        let mut y = rng.random_range(0..dim as u64);
        if y == x.prefix(start).index() {
            y = (y + 1) % dim as u64;
        }
        let theta: f64 = rng.random_range(0.1..0.4);
        let mut v = CVector::zeros(dim);
        v[x.prefix(start).index() as usize] = C64::new(theta.cos(), 0.0);
        v[y as usize] = C64::from_polar(theta.sin(), rng.random_range(0.0..std::f64::consts::TAU));
        let mut levels: Vec<Projector> = (1..start).map(Projector::zero).collect();
        levels.push(Projector::from_vectors(start, &[v], &tol)?);
        while levels.len() < qmlt_depth {
            let next = levels.last().expect("nonempty").lift();
            levels.push(next);
        }
        gs.push(QSigmaPrefix::new(levels, &tol)?);
    }
    let qmlt = QuantumTest::qmlt(gs, &tol)?;

    let mut members = Vec::with_capacity(solovay_members);
    for k in 1..=solovay_members {
        let start = k + 3;
        if start > solovay_depth {
            return Err(Error::InvalidParameter(format!("member {k} does not fit depth {solovay_depth}")));
        }
        let mut set = BTreeSet::new();
        set.insert(x.prefix(start));
        set.insert(Bitstring::new(start, rng.random_range(0..1u64 << start))?);
        members.push(ClassicalSet::single(start, set, solovay_depth)?);
    }
    let solovay = ClassicalTestPrefix::solovay(members);
    Ok(PlantedDiagonal { state, x, qmlt, solovay })
}

/// Convenience oracle: the matrix `Σ_i α_i ρ^i` of a list of levels.
pub fn mixture_matrix(levels: &[&CMatrix], weights: &[f64]) -> CMatrix {
    let mut acc = CMatrix::zeros(levels[0].qubits());
    for (l, w) in levels.iter().zip(weights) {
        acc = &acc + &l.scale(*w);
    }
    acc
}

/// Random probability vector of length `k` with exponential weights.
pub fn random_weights(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Columns of a frame as a matrix; re-exported for instance builders.
pub fn frame_matrix(dim: usize, vs: &[CVector]) -> DMatrix<C64> {
    linalg::columns(dim, vs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigma::{fails_qmlt, rho_value, tau_value};

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: f64 = rng_for(7, 1, 3).random();
        let b: f64 = rng_for(7, 1, 3).random();
        let c: f64 = rng_for(7, 1, 4).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn random_objects_are_valid() {
        let mut rng = rng_for(1, 0, 0);
        let rho = random_dense_state(&mut rng, 4, 3).unwrap();
        assert!(rho.coherence_defect().unwrap() < 1e-12);
        let p = random_projector(&mut rng, 4, 5).unwrap();
        assert_eq!(p.rank(), 5);
        let t = random_qmlt(&mut rng, 5, 3).unwrap();
        for (i, g) in t.sigma_members().unwrap().iter().enumerate() {
            assert!(tau_value(g) <= 2f64.powi(-(i as i32 + 1)));
        }
        let d = random_diagonal_state(&mut rng, 6).unwrap();
        assert!(d.coherence_defect().unwrap() < 1e-12);
    }

    #[test]
    fn approx_instances_have_nonempty_class() {
        let mut rng = rng_for(2, 0, 0);
        for _ in 0..5 {
            let (inst, hot) = random_approx_instance(&mut rng, 6).unwrap();
            let (samples, _) = sample_class(&mut rng, &inst, &hot, 3, 100_000).unwrap();
            assert_eq!(samples.len(), 3);
        }
    }

    #[test]
    fn planted_diagonal_state_fails_its_tests() {
        let mut rng = rng_for(3, 0, 0);
        let p = planted_diagonal(&mut rng, 6, 4, 12, 8).unwrap();
        assert!(fails_qmlt(&p.state, &p.qmlt, 0.5).unwrap());
        for g in p.qmlt.sigma_members().unwrap() {
            assert!(rho_value(&p.state, g).unwrap() > 0.5);
        }
        assert!(p.solovay.total_mass() < 1.0);
    }
}
