//! Collapse-chain simulation (Schrödinger evolution interrupted by Lüders
//! projections), its reverse-order counterpart, and the ABL rule.

use rayon::prelude::*;

use crate::engine::{enumerate_histories, History};
use crate::error::{Error, Result};
use crate::linalg::inner;
use crate::model::{QuantumModel, StateOperator, StateVector};

/// Denominators at or below this make a pre/post-selection pair impossible.
pub const ABL_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct CollapseTrajectory {
    pub history: History,
    pub labels: Vec<String>,
    /// State after each collapse, in the order the chain visits the families,
    /// followed by the state carried to the end of the chain. Truncated at the
    /// first collapse with vanishing probability.
    pub states: Vec<StateOperator>,
    pub step_probabilities: Vec<f64>,
    pub probability: f64,
}

impl CollapseTrajectory {
    /// The stored states as vectors, when every state is pure.
    pub fn state_vectors(&self) -> Option<Vec<StateVector>> {
        self.states.iter().map(|s| s.vector().cloned()).collect()
    }

    pub fn final_state(&self) -> Option<&StateOperator> {
        (self.probability > 0.0).then(|| self.states.last()).flatten()
    }
}

/// Runs one chain from grid index `start` through the families in
/// `order` (pairs of family index and member index), ending at `end`.
fn run_chain(
    model: &QuantumModel,
    state: &StateOperator,
    start: usize,
    order: &[(usize, usize)],
    end: usize,
) -> Result<(Vec<StateOperator>, Vec<f64>, f64)> {
    let mut current = state.clone();
    let mut at = start;
    let mut states = Vec::with_capacity(order.len() + 1);
    let mut steps = Vec::with_capacity(order.len());
    for &(k, i) in order {
        let fam = model.family(k)?;
        current = current.evolved(&model.propagator(at, fam.time_index())?)?;
        at = fam.time_index();
        let (p, next) = current.projected(&fam.members()[i].matrix)?;
        steps.push(p);
        match next {
            Some(s) => {
                states.push(s.clone());
                current = s;
            }
            None => return Ok((states, steps, 0.0)),
        }
    }
    states.push(current.evolved(&model.propagator(at, end)?)?);
    let probability = steps.iter().product();
    Ok((states, steps, probability))
}

/// Every outcome sequence of the forwards collapse chain from the model's
/// initial state, in history enumeration order.
pub fn collapse_chain_enumerate(model: &QuantumModel) -> Result<Vec<CollapseTrajectory>> {
    let end = model.grid().last_index();
    enumerate_histories(model)
        .into_par_iter()
        .map(|h| {
            let order: Vec<(usize, usize)> = h.indices().iter().copied().enumerate().collect();
            let (states, step_probabilities, probability) = run_chain(model, model.initial_state(), 0, &order, end)?;
            Ok(CollapseTrajectory {
                labels: h.labels(model),
                history: h,
                states,
                step_probabilities,
                probability,
            })
        })
        .collect()
}

/// The same procedure run backwards from `final_state` at the last grid
/// time: adjoint evolution, collapses in reverse family order, ending at `t₀`.
pub fn reverse_collapse_chain(model: &QuantumModel, final_state: &StateOperator) -> Result<Vec<CollapseTrajectory>> {
    if final_state.dim() != model.dim() {
        return Err(Error::DimensionMismatch("final state has wrong dimension".into()));
    }
    let start = model.grid().last_index();
    enumerate_histories(model)
        .into_par_iter()
        .map(|h| {
            let order: Vec<(usize, usize)> = h.indices().iter().copied().enumerate().rev().collect();
            let (states, step_probabilities, probability) = run_chain(model, final_state, start, &order, 0)?;
            Ok(CollapseTrajectory {
                labels: h.labels(model),
                history: h,
                states,
                step_probabilities,
                probability,
            })
        })
        .collect()
}

fn abl_numerators(psi_i: &StateVector, psi_f: &StateVector, model: &QuantumModel) -> Result<Vec<(History, f64)>> {
    if psi_i.dim() != model.dim() || psi_f.dim() != model.dim() {
        return Err(Error::DimensionMismatch("pre/post-selected states have wrong dimension".into()));
    }
    let end = model.grid().last_index();
    enumerate_histories(model)
        .into_iter()
        .map(|h| {
            let mut v = psi_i.amplitudes().to_vec();
            let mut at = 0;
            for (fam, &i) in model.families().iter().zip(h.indices()) {
                v = model.propagator(at, fam.time_index())?.matvec(&v)?;
                v = fam.members()[i].matrix.matvec(&v)?;
                at = fam.time_index();
            }
            v = model.propagator(at, end)?.matvec(&v)?;
            Ok((h, inner(psi_f.amplitudes(), &v).norm_sqr()))
        })
        .collect()
}

/// ABL probabilities for every history, with `psi_i` at `t₀` and `psi_f`
/// at the last grid time.
pub fn abl_table(psi_i: &StateVector, psi_f: &StateVector, model: &QuantumModel) -> Result<Vec<(History, f64)>> {
    let numerators = abl_numerators(psi_i, psi_f, model)?;
    let denominator: f64 = numerators.iter().map(|(_, n)| n).sum();
    if denominator <= ABL_FLOOR {
        return Err(Error::ImpossibleSelection { value: denominator });
    }
    Ok(numerators.into_iter().map(|(h, n)| (h, n / denominator)).collect())
}

pub fn abl_probability(psi_i: &StateVector, psi_f: &StateVector, model: &QuantumModel, h: &History) -> Result<f64> {
    h.validate(model)?;
    abl_table(psi_i, psi_f, model)?
        .into_iter()
        .find(|(x, _)| x == h)
        .map(|(_, p)| p)
        .ok_or_else(|| Error::InvalidHistory("history not enumerated".into()))
}

/// `⟨φ|ρ|φ⟩` of a state against a reference vector.
pub fn fidelity_with(state: &StateOperator, reference: &StateVector) -> Result<f64> {
    let v = state.matrix().matvec(reference.amplitudes())?;
    Ok(inner(reference.amplitudes(), &v).re.clamp(0.0, 1.0))
}
