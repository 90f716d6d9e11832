//! JSON report fragments. Objects serialize with sorted keys, so reports are
//! byte-identical for identical inputs.

use serde_json::{json, Value};

use histories_core::engine::{Classification, DecoherenceReport, FunctionalKind, History, Strength, TolerancePolicy};
use histories_core::model::QuantumModel;

use crate::error::{EXIT_DECOHERENT, EXIT_MARGINAL, EXIT_NOT_DECOHERENT};
use crate::modelfile::complex_json;

pub fn exit_code(c: Classification) -> u8 {
    match c {
        Classification::Decoherent => EXIT_DECOHERENT,
        Classification::Marginal => EXIT_MARGINAL,
        Classification::NotDecoherent => EXIT_NOT_DECOHERENT,
    }
}

/// Worst of several classifications: not decoherent, then marginal.
pub fn combine(cs: &[Classification]) -> Classification {
    if cs.contains(&Classification::NotDecoherent) {
        Classification::NotDecoherent
    } else if cs.contains(&Classification::Marginal) {
        Classification::Marginal
    } else {
        Classification::Decoherent
    }
}

pub fn tolerance_json(t: TolerancePolicy) -> Value {
    json!({ "rel": t.rel, "abs": t.abs })
}

fn kind_name(k: FunctionalKind) -> &'static str {
    match k {
        FunctionalKind::Forwards => "forwards",
        FunctionalKind::Backwards => "backwards",
        FunctionalKind::TwoState => "two_state",
    }
}

fn strength_name(s: Strength) -> &'static str {
    match s {
        Strength::Weak => "weak",
        Strength::Strong => "strong",
    }
}

/// `[{history: [labels…], <key>: value}]` sorted lexicographically by labels.
pub fn labelled_table(labels: &[Vec<String>], values: &[f64], key: &str) -> Value {
    let mut rows: Vec<(&Vec<String>, f64)> = labels.iter().zip(values.iter().copied()).collect();
    rows.sort_by(|a, b| a.0.cmp(b.0));
    Value::Array(rows.into_iter().map(|(l, v)| json!({ "history": l, key: v })).collect())
}

pub fn history_labels(model: &QuantumModel, histories: &[History]) -> Vec<Vec<String>> {
    histories.iter().map(|h| h.labels(model)).collect()
}

pub fn decoherence_json(r: &DecoherenceReport) -> Value {
    let pairs: Vec<Value> = r
        .pairs
        .iter()
        .map(|p| {
            json!({
                "first": r.labels[p.first],
                "second": r.labels[p.second],
                "value": complex_json(p.value),
                "measure": p.measure,
                "threshold": p.threshold,
                "ratio": p.ratio,
            })
        })
        .collect();
    json!({
        "functional": kind_name(r.kind),
        "strength": strength_name(r.strength),
        "classification": r.classification.to_string(),
        "max_ratio": r.max_ratio,
        "pairs": pairs,
        "candidate_probabilities": labelled_table(&r.labels, &r.diagonal, "p"),
        "probabilities": r.probabilities.as_ref().map(|p| labelled_table(&r.labels, p, "p")),
    })
}
