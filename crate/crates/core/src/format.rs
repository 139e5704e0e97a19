//! JSON documents for states, quantum tests, classical tests and measures.
//!
//! Floats are written in shortest round-trip form, so diagonal weights
//! survive a write/read cycle bit for bit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bits::Bitstring;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::measures::{ClassicalDiscipline, ClassicalSet, ClassicalTestPrefix, DyadicMeasure};
use crate::projector::Projector;
use crate::sigma::{Discipline, Members, QSigmaPrefix, QuantumTest};
use crate::state::{make_bernoulli, make_classical, DensityMatrix, DiagonalLevel, StateKind, StatePrefix};
use crate::tol::Tolerances;

type Rows = Vec<Vec<[f64; 2]>>;

#[derive(Serialize, Deserialize)]
struct StateDoc {
    kind: String,
    depth: usize,
    #[serde(default)]
    levels: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bits: Option<Bitstring>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
}

fn state_doc(rho: &StatePrefix) -> Result<StateDoc> {
    let depth = rho.depth();
    let kind = rho.kind();
    let (levels, bits, p) = match kind {
        StateKind::Dense => {
            let rows: Vec<Rows> = (1..=depth).map(|k| rho.dense_level(k).map(|l| l.mat().to_rows())).collect::<Result<_>>()?;
            (serde_json::to_value(rows)?, None, None)
        }
        StateKind::Diagonal => {
            let maps: Vec<BTreeMap<Bitstring, f64>> =
                (1..=depth).map(|k| rho.diagonal_level(k).map(|l| l.iter().collect())).collect::<Result<_>>()?;
            (serde_json::to_value(maps)?, None, None)
        }
        StateKind::Classical => (Value::Array(Vec::new()), rho.classical_bits(), None),
        StateKind::Bernoulli => (Value::Array(Vec::new()), None, rho.bernoulli_p()),
    };
    Ok(StateDoc { kind: kind.name().to_string(), depth, levels, bits, p })
}

pub fn state_to_json(rho: &StatePrefix) -> Result<String> {
    Ok(serde_json::to_string_pretty(&state_doc(rho)?)?)
}

pub fn state_from_json(text: &str, tol: &Tolerances) -> Result<StatePrefix> {
    let doc: StateDoc = serde_json::from_str(text)?;
    let rho = match doc.kind.as_str() {
        "dense" => {
            let rows: Vec<Rows> = serde_json::from_value(doc.levels)?;
            let levels = rows
                .iter()
                .map(|r| CMatrix::from_rows(r).and_then(|m| DensityMatrix::new(m, tol)))
                .collect::<Result<Vec<_>>>()?;
            StatePrefix::dense(levels, tol)?
        }
        "diagonal" => {
            let maps: Vec<BTreeMap<Bitstring, f64>> = serde_json::from_value(doc.levels)?;
            let levels = maps
                .into_iter()
                .enumerate()
                .map(|(i, m)| DiagonalLevel::new(i + 1, m, tol))
                .collect::<Result<Vec<_>>>()?;
            StatePrefix::diagonal(levels, tol)?
        }
        "classical" => make_classical(doc.bits.ok_or_else(|| Error::Format("classical state needs bits".into()))?, doc.depth)?,
        "bernoulli" => make_bernoulli(doc.p.ok_or_else(|| Error::Format("Bernoulli state needs p".into()))?, doc.depth)?,
        other => return Err(Error::Format(format!("unknown state kind {other:?}"))),
    };
    if rho.depth() != doc.depth {
        return Err(Error::DimensionMismatch { expected: doc.depth, found: rho.depth() });
    }
    Ok(rho)
}

/// A projector as either its basis strings or an orthonormal frame of
/// `rank` columns of length `2^qubits`.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ProjectorDoc {
    Basis { qubits: usize, basis: Vec<Bitstring> },
    Frame { qubits: usize, columns: Rows },
}

fn projector_doc(p: &Projector) -> Result<ProjectorDoc> {
    if let Some(idx) = p.basis_indices() {
        let basis = idx.iter().map(|&i| Bitstring::new(p.qubits(), i)).collect::<Result<_>>()?;
        return Ok(ProjectorDoc::Basis { qubits: p.qubits(), basis });
    }
    let columns = p.frame_vectors()?.iter().map(|v| v.iter().map(|c| [c.re, c.im]).collect()).collect();
    Ok(ProjectorDoc::Frame { qubits: p.qubits(), columns })
}

fn projector_from_doc(doc: ProjectorDoc, tol: &Tolerances) -> Result<Projector> {
    match doc {
        ProjectorDoc::Basis { qubits, basis } => Projector::basis(qubits, basis),
        ProjectorDoc::Frame { qubits, columns } => {
            let vectors: Vec<CVector> =
                columns.iter().map(|c| CVector::from_iterator(c.len(), c.iter().map(|[re, im]| C64::new(*re, *im)))).collect();
            if let Some(v) = vectors.iter().find(|v| v.len() != 1 << qubits) {
                return Err(Error::DimensionMismatch { expected: 1 << qubits, found: v.len() });
            }
            if vectors.is_empty() {
                return Ok(Projector::zero(qubits));
            }
            Projector::from_frame(linalg::columns(1 << qubits, &vectors), tol)
        }
    }
}

pub fn projector_to_json(p: &Projector) -> Result<String> {
    Ok(serde_json::to_string_pretty(&projector_doc(p)?)?)
}

pub fn projector_from_json(text: &str, tol: &Tolerances) -> Result<Projector> {
    projector_from_doc(serde_json::from_str(text)?, tol)
}

#[derive(Serialize, Deserialize)]
struct TestDoc {
    discipline: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    members: Value,
    #[serde(default)]
    partial_sums: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    declared_limit: Option<f64>,
}

pub fn test_to_json(t: &QuantumTest) -> Result<String> {
    let members = match t.members() {
        Members::Sigma(gs) => {
            let docs: Vec<Vec<ProjectorDoc>> =
                gs.iter().map(|g| g.levels().iter().map(projector_doc).collect::<Result<_>>()).collect::<Result<_>>()?;
            serde_json::to_value(docs)?
        }
        Members::Single(ps) => serde_json::to_value(ps.iter().map(projector_doc).collect::<Result<Vec<_>>>()?)?,
    };
    let p = match t.discipline() {
        Discipline::PSchnorr(p) => Some(p),
        _ => None,
    };
    let scale = (t.discipline() == Discipline::QMlt).then(|| t.mlt_scale());
    let doc = TestDoc {
        discipline: t.discipline().name().to_string(),
        p,
        members,
        partial_sums: t.partial_sums().to_vec(),
        scale,
        declared_limit: t.declared_limit(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn test_from_json(text: &str, tol: &Tolerances) -> Result<QuantumTest> {
    let doc: TestDoc = serde_json::from_str(text)?;
    let discipline = match doc.discipline.as_str() {
        "qMLT" => Discipline::QMlt,
        "qSolovay" => Discipline::QSolovay,
        "strongSolovay" => Discipline::StrongSolovay,
        "qSchnorr" => Discipline::QSchnorr,
        "pSchnorr" => Discipline::PSchnorr(doc.p.ok_or_else(|| Error::Format("pSchnorr test needs p".into()))?),
        other => return Err(Error::Format(format!("unknown discipline {other:?}"))),
    };
    let members = if discipline.has_sigma_members() {
        let docs: Vec<Vec<ProjectorDoc>> = serde_json::from_value(doc.members)?;
        let gs = docs
            .into_iter()
            .map(|levels| {
                let projs = levels.into_iter().map(|d| projector_from_doc(d, tol)).collect::<Result<Vec<_>>>()?;
                QSigmaPrefix::new(projs, tol)
            })
            .collect::<Result<Vec<_>>>()?;
        Members::Sigma(gs)
    } else {
        let docs: Vec<ProjectorDoc> = serde_json::from_value(doc.members)?;
        Members::Single(docs.into_iter().map(|d| projector_from_doc(d, tol)).collect::<Result<_>>()?)
    };
    QuantumTest::from_parts(discipline, members, &doc.partial_sums, doc.scale, doc.declared_limit, tol)
}

#[derive(Serialize, Deserialize)]
struct ClassicalDoc {
    discipline: ClassicalDiscipline,
    members: Vec<Vec<Vec<Bitstring>>>,
    #[serde(default)]
    masses: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    declared_limit: Option<f64>,
}

pub fn classical_to_json(t: &ClassicalTestPrefix) -> Result<String> {
    let doc = ClassicalDoc {
        discipline: t.discipline(),
        members: t.members().iter().map(|a| a.levels().iter().map(|l| l.iter().copied().collect()).collect()).collect(),
        masses: t.masses().to_vec(),
        scale: (t.discipline() == ClassicalDiscipline::Mlt).then(|| t.mlt_scale()),
        declared_limit: t.declared_limit(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn classical_from_json(text: &str, tol: &Tolerances) -> Result<ClassicalTestPrefix> {
    let doc: ClassicalDoc = serde_json::from_str(text)?;
    let members = doc
        .members
        .into_iter()
        .map(|levels| ClassicalSet::new(levels.into_iter().map(|l| l.into_iter().collect()).collect()))
        .collect::<Result<Vec<_>>>()?;
    ClassicalTestPrefix::from_parts(doc.discipline, members, &doc.masses, doc.scale, doc.declared_limit, tol)
}

/// A measure as a `{bitstring: mass}` map.
pub fn measure_to_json(mu: &DyadicMeasure) -> Result<String> {
    let map: BTreeMap<Bitstring, f64> = mu.iter().collect();
    Ok(serde_json::to_string_pretty(&map)?)
}

pub fn measure_from_json(text: &str, depth: usize, tol: &Tolerances) -> Result<DyadicMeasure> {
    let map: BTreeMap<Bitstring, f64> = serde_json::from_str(text)?;
    DyadicMeasure::new(depth, map, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::measure_of;
    use crate::state::make_tau;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn diagonal_state_round_trip_is_bit_exact() {
        let rho = make_bernoulli(1.0 / 3.0, 5).unwrap().to_materialized_diagonal().unwrap();
        let text = state_to_json(&rho).unwrap();
        let back = state_from_json(&text, &tol()).unwrap();
        for k in 1..=5 {
            let a = rho.diagonal_level(k).unwrap();
            let b = back.diagonal_level(k).unwrap();
            for ((s, x), (t, y)) in a.iter().zip(b.iter()) {
                assert_eq!(s, t);
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        assert_eq!(state_to_json(&back).unwrap(), text);
    }

    #[test]
    fn parametric_and_dense_states() {
        for rho in [make_classical("0110".parse().unwrap(), 4).unwrap(), make_bernoulli(0.25, 40).unwrap()] {
            let back = state_from_json(&state_to_json(&rho).unwrap(), &tol()).unwrap();
            assert_eq!(back.kind(), rho.kind());
            assert_eq!(back.depth(), rho.depth());
        }
        let dense = make_tau(3).unwrap().to_dense().unwrap();
        let back = state_from_json(&state_to_json(&dense).unwrap(), &tol()).unwrap();
        assert_eq!(back.kind(), StateKind::Dense);
        assert!(back.dense_level(3).unwrap().mat().max_abs_diff(dense.dense_level(3).unwrap().mat()) == 0.0);
        assert!(state_from_json(r#"{"kind":"weird","depth":1}"#, &tol()).is_err());
    }

    #[test]
    fn test_round_trips() {
        let t = QuantumTest::qmlt(vec![QSigmaPrefix::cylinder(Bitstring::zeros(1), 3).unwrap()], &tol()).unwrap();
        let back = test_from_json(&test_to_json(&t).unwrap(), &tol()).unwrap();
        assert_eq!(back, t);
        let h = CVector::from_vec(vec![C64::new(0.5f64.sqrt(), 0.0), C64::new(0.0, 0.5f64.sqrt())]);
        let p = Projector::from_vectors(1, &[h], &tol()).unwrap();
        let t = QuantumTest::p_schnorr(0.3, vec![p], 1.0, &tol()).unwrap();
        let back = test_from_json(&test_to_json(&t).unwrap(), &tol()).unwrap();
        assert_eq!(back.discipline(), Discipline::PSchnorr(0.3));
        assert!((back.partial_sums()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn classical_and_measure_round_trips() {
        let a = ClassicalSet::single(2, ["01".parse().unwrap()].into_iter().collect(), 3).unwrap();
        let t = ClassicalTestPrefix::mlt(vec![a], 1.0, &tol()).unwrap();
        let text = classical_to_json(&t).unwrap();
        assert!(text.contains("\"MLT\""));
        assert_eq!(classical_from_json(&text, &tol()).unwrap(), t);
        let mu = measure_of(&make_bernoulli(0.3, 3).unwrap()).unwrap();
        let back = measure_from_json(&measure_to_json(&mu).unwrap(), 3, &tol()).unwrap();
        assert_eq!(back, mu);
    }
}
