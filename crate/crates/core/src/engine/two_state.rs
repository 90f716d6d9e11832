//! Two-state functional `Tr(ρ_f L(h) ρ_i L(h')†)` with independent initial
//! and final operators, both Heisenberg-picture (referenced to `t₀`).

use crate::error::{Error, Result};
use crate::linalg::{inner, C64, ComplexMatrix};
use crate::model::{QuantumModel, StateOperator, StateVector, STATE_TOL};

use super::{
    class_operator, enumerate_histories, labels_of, Classification, DecoherenceReport, Direction, FunctionalKind,
    FunctionalTable, History, Strength, TolerancePolicy, PROBABILITY_TOL,
};

/// Below this `|Tr(ρ_f ρ_i)|` the two-state probabilities are undefined.
pub const NORMALIZATION_FLOOR: f64 = 1e-14;

/// `ρ_f` must be Hermitian and positive semidefinite; its trace is free.
pub fn validate_final_operator(rho_f: &ComplexMatrix) -> Result<()> {
    if !rho_f.is_square() {
        return Err(Error::NotSquare {
            rows: rho_f.rows(),
            cols: rho_f.cols(),
        });
    }
    let deviation = rho_f.hermiticity_deviation();
    if deviation > STATE_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let min = rho_f.hermitian_part().herm_eig()?.values[0];
    if min < -STATE_TOL {
        return Err(Error::InvalidState(format!(
            "final operator not positive semidefinite (min eigenvalue {min:e})"
        )));
    }
    Ok(())
}

fn check_dims(model: &QuantumModel, rho_i: &StateOperator, rho_f: &ComplexMatrix) -> Result<()> {
    if rho_i.dim() != model.dim() || rho_f.rows() != model.dim() {
        return Err(Error::DimensionMismatch(format!(
            "operators must be {0}x{0} for this model",
            model.dim()
        )));
    }
    validate_final_operator(rho_f)
}

/// `Tr(ρ_f ρ_i)`; errors when it vanishes.
pub fn normalization(rho_i: &StateOperator, rho_f: &ComplexMatrix) -> Result<f64> {
    let value = rho_f.trace_product(rho_i.matrix())?.re;
    if value.abs() <= NORMALIZATION_FLOOR {
        return Err(Error::DegenerateNormalization { value });
    }
    Ok(value)
}

/// Unnormalized two-state functional over all pairs of histories.
pub fn two_state_table(model: &QuantumModel, rho_i: &StateOperator, rho_f: &ComplexMatrix) -> Result<FunctionalTable> {
    check_dims(model, rho_i, rho_f)?;
    let histories = enumerate_histories(model);
    let ops = histories
        .iter()
        .map(|h| class_operator(model, h, Direction::Forwards))
        .collect::<Result<Vec<_>>>()?;
    let left = ops
        .iter()
        .map(|l| rho_f.matmul(l)?.matmul(rho_i.matrix()))
        .collect::<Result<Vec<_>>>()?;
    // Tr(X L'†) = Σ_ab X_ab conj(L'_ab)
    let values = left
        .iter()
        .map(|x| ops.iter().map(|l2| inner(l2.as_slice(), x.as_slice())).collect())
        .collect();
    Ok(FunctionalTable { histories, values })
}

/// `Tr(ρ_f L(h) ρ_i L(h')†)`.
pub fn two_state_functional(
    model: &QuantumModel,
    rho_i: &StateOperator,
    rho_f: &ComplexMatrix,
    h: &History,
    h2: &History,
) -> Result<C64> {
    check_dims(model, rho_i, rho_f)?;
    normalization(rho_i, rho_f)?;
    let l = class_operator(model, h, Direction::Forwards)?;
    let l2 = class_operator(model, h2, Direction::Forwards)?;
    rho_f.matmul(&l)?.matmul(rho_i.matrix())?.trace_product(&l2.adjoint())
}

/// Two-state decoherence check on the table normalized by `Tr(ρ_f ρ_i)`.
pub fn check_two_state(
    model: &QuantumModel,
    rho_i: &StateOperator,
    rho_f: &ComplexMatrix,
    strength: Strength,
    tolerance: TolerancePolicy,
) -> Result<DecoherenceReport> {
    let norm = normalization(rho_i, rho_f)?;
    let mut table = two_state_table(model, rho_i, rho_f)?;
    for row in &mut table.values {
        for v in row.iter_mut() {
            *v /= norm;
        }
    }
    let labels = labels_of(model, &table.histories);
    DecoherenceReport::from_table(&table, labels, FunctionalKind::TwoState, strength, tolerance)
}

/// Normalized two-state probability of `h`; requires weak two-state decoherence.
pub fn two_state_probability(
    model: &QuantumModel,
    rho_i: &StateOperator,
    rho_f: &ComplexMatrix,
    h: &History,
    tolerance: TolerancePolicy,
) -> Result<f64> {
    h.validate(model)?;
    let report = check_two_state(model, rho_i, rho_f, Strength::Weak, tolerance)?;
    if !report.classification.is_decoherent() {
        return Err(Error::ConditionNotSatisfied(format!(
            "two-state functional is {} (worst ratio {:e})",
            report.classification, report.max_ratio
        )));
    }
    Ok(report.probability(h).expect("decoherent report has probabilities"))
}

#[derive(Clone, Debug)]
pub struct TrivialityReport {
    /// Weak two-state check with `ρ_i = ρ_f = |ψ⟩⟨ψ|`.
    pub condition: DecoherenceReport,
    /// `⟨ψ|L(h)|ψ⟩` per history.
    pub amplitudes: Vec<C64>,
    /// `|⟨ψ|L(h)|ψ⟩|²` per history.
    pub probabilities: Vec<f64>,
    /// `max_h | |a_h|² − a_h |`.
    pub identity_error: f64,
    /// `max_h min(p_h, |1 − p_h|)`.
    pub zero_one_error: f64,
    /// `Some(passed)` when the condition holds, `None` otherwise.
    pub holds: Option<bool>,
}

/// With `ρ_i = ρ_f = |ψ⟩⟨ψ|` decoherent, every probability is `|a_h|² = a_h ∈ {0, 1}`.
pub fn pure_two_state_triviality_check(
    model: &QuantumModel,
    psi: &StateVector,
    tolerance: TolerancePolicy,
) -> Result<TrivialityReport> {
    let rho = StateOperator::pure(psi.clone());
    let condition = check_two_state(model, &rho, rho.matrix(), Strength::Weak, tolerance)?;
    let amplitudes = condition
        .histories
        .iter()
        .map(|h| {
            let l = class_operator(model, h, Direction::Forwards)?;
            Ok(inner(psi.amplitudes(), &l.matvec(psi.amplitudes())?))
        })
        .collect::<Result<Vec<C64>>>()?;
    let probabilities: Vec<f64> = amplitudes.iter().map(|a| a.norm_sqr()).collect();
    let identity_error = amplitudes
        .iter()
        .zip(&probabilities)
        .map(|(a, p)| (a - p).norm())
        .fold(0.0, f64::max);
    let zero_one_error = probabilities
        .iter()
        .map(|p| p.abs().min((1.0 - p).abs()))
        .fold(0.0, f64::max);
    let holds = (condition.classification == Classification::Decoherent)
        .then_some(identity_error <= PROBABILITY_TOL && zero_one_error <= PROBABILITY_TOL);
    Ok(TrivialityReport {
        condition,
        amplitudes,
        probabilities,
        identity_error,
        zero_one_error,
        holds,
    })
}
