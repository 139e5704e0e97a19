//! Evaluation of a stored state against a stored quantum test.

use std::path::Path;

use qrl::format::{state_from_json, test_from_json};
use qrl::sigma::DEFAULT_FAIL_COUNT;
use qrl::{fails_qmlt, fails_solovay, Discipline, QuantumTest, StatePrefix, Tolerances};
use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MemberRow {
    /// One-based member index.
    pub member: usize,
    pub mass: f64,
    /// `ρ(member)`, absent when the member lies deeper than the state.
    pub value: Option<f64>,
    pub above_delta: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub discipline: String,
    pub delta: f64,
    pub state_depth: usize,
    pub members: Vec<MemberRow>,
    /// Minimum over the available member values.
    pub infimum: Option<f64>,
    /// Members with value above `δ`.
    pub above: usize,
    /// Members needed above `δ` for a Solovay-type failure.
    pub fail_count: usize,
    pub fails: bool,
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut s = format!("discipline {}  δ = {}  state depth {}\n", self.discipline, self.delta, self.state_depth);
        for r in &self.members {
            let v = r.value.map_or_else(|| "n/a".to_string(), |v| format!("{v:.12}"));
            s.push_str(&format!("  member {:>3}  mass {:.6e}  value {v}\n", r.member, r.mass));
        }
        let inf = self.infimum.map_or_else(|| "n/a".to_string(), |v| format!("{v:.12}"));
        s.push_str(&format!("infimum {inf}  above δ {}\n", self.above));
        s.push_str(if self.fails { "verdict: FAILS\n" } else { "verdict: passes\n" });
        s
    }

    pub fn to_csv(&self) -> CliResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.members {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

/// Values of every member on `rho`, with the verdict the discipline of `t`
/// assigns at order `delta`: the infimum rule for q-MLTs and the
/// "at least three members above δ" rule for the others.
pub fn evaluate(rho: &StatePrefix, t: &QuantumTest, delta: f64) -> CliResult<EvalReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(CliError::Config(format!("delta = {delta} outside (0, 1)")));
    }
    let values = t.member_values(rho)?;
    let members: Vec<MemberRow> = values
        .iter()
        .enumerate()
        .map(|(i, v)| MemberRow { member: i + 1, mass: t.member_mass(i), value: *v, above_delta: v.is_some_and(|v| v > delta) })
        .collect();
    let available: Vec<f64> = values.iter().flatten().copied().collect();
    let infimum = available.iter().copied().reduce(f64::min);
    let above = members.iter().filter(|r| r.above_delta).count();
    let fails = match t.discipline() {
        Discipline::QMlt => fails_qmlt(rho, t, delta)?,
        _ => fails_solovay(rho, t, delta, DEFAULT_FAIL_COUNT)?,
    };
    Ok(EvalReport {
        discipline: t.discipline().to_string(),
        delta,
        state_depth: rho.depth(),
        members,
        infimum,
        above,
        fail_count: DEFAULT_FAIL_COUNT,
        fails,
    })
}

pub fn eval_state_against_test(state_file: &Path, test_file: &Path, delta: f64, tol: &Tolerances) -> CliResult<EvalReport> {
    let state = std::fs::read_to_string(state_file).map_err(|e| CliError::io(state_file, e))?;
    let test = std::fs::read_to_string(test_file).map_err(|e| CliError::io(test_file, e))?;
    let rho = state_from_json(&state, tol)?;
    let t = test_from_json(&test, tol)?;
    evaluate(&rho, &t, delta)
}
