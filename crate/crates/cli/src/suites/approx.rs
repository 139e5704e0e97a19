use qrl::approx::lemma_review_check;
use qrl::convert::BOUND_SLACK;
use qrl::gen::{random_approx_instance, rng_for, sample_class};
use qrl::{approximate_density_class, CMatrix, Check, Error};

use super::{at_least, instance, stream, Ctx};
use crate::error::CliResult;

/// Class members drawn per instance.
pub const SAMPLES: usize = 50;
const MAX_ATTEMPTS: usize = 100_000;
const MAX_REDRAWS: usize = 16;

/// Bound `Tr(M) < 4d/(δm)` and transfer `Tr(Mρ) > δ/4` over sampled class
/// members, per random instance. The transfer check records the worst
/// sample; the operator form of the bound is checked on that sample too.
pub fn approx(ctx: &Ctx, count: usize) -> CliResult<Vec<Check>> {
    let name = "approx";
    let max_qubits = ctx.depth(6);
    let mut checks = Vec::with_capacity(5 * count);
    for id in 0..count {
        let mut rng = rng_for(ctx.seed, stream(name), id as u32);
        let mut drawn = None;
        for _ in 0..MAX_REDRAWS {
            let (inst, hot) = random_approx_instance(&mut rng, max_qubits)?;
            let (samples, _) = sample_class(&mut rng, &inst, &hot, SAMPLES, MAX_ATTEMPTS)?;
            if samples.len() == SAMPLES {
                drawn = Some((inst, samples));
                break;
            }
        }
        let (inst, samples) = drawn.ok_or_else(|| {
            Error::InvalidParameter(format!("instance {id}: no class with {SAMPLES} samples after {MAX_REDRAWS} draws"))
        })?;
        let result = approximate_density_class(&inst, &ctx.tol)?;
        checks.push(Check::less(
            instance(name, id, "bound"),
            "Tr(M) < 4d/(δm)",
            result.trace() as f64,
            inst.trace_bound(),
            BOUND_SLACK,
        ));
        checks.push(at_least(instance(name, id, "samples"), "class samples", samples.len(), SAMPLES));
        let values: Vec<f64> = samples.iter().map(|rho| result.projector.expectation_dense(rho.mat())).collect();
        let (worst, &value) = values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty sample");
        checks.push(Check::greater(instance(name, id, "transfer"), "Tr(Mρ) > δ/4", value, inst.delta() / 4.0, BOUND_SLACK));

        let rho = &samples[worst];
        let mut w = CMatrix::zeros(inst.qubits());
        let mut used = 0;
        for p in inst.subspaces() {
            if used < inst.m() && p.expectation_dense(rho.mat()) > inst.delta() {
                w = &w + &p.to_matrix()?;
                used += 1;
            }
        }
        let review = lemma_review_check(&inst.v()?, inst.m() as f64, inst.delta(), &w, rho, &result, &ctx.tol)?;
        for mut c in [review.trace, review.transfer] {
            c.instance = instance(name, id, "review");
            checks.push(c);
        }
    }
    Ok(checks)
}
