//! Time-reversed history sets and the symmetric-cosmology check.
//!
//! On a grid with `t_k + t_{N-k}` constant, the time-reversed set carries the
//! family at index `k` to index `N − k` with projectors `Θ P Θ⁻¹`, so the
//! history `(α₁, …, α_n)` becomes `(α_n, …, α₁)`.

use crate::error::{Error, Result};
use crate::model::{dynamics_symmetry_diagnostics, operator_reversal_deviation, QuantumModel, StateOperator, STATE_TOL};
use crate::linalg::ComplexMatrix;

use super::{
    check_two_state, functional_table, DecoherenceReport, Direction, History, Strength, TolerancePolicy,
    PROBABILITY_TOL,
};

#[derive(Clone, Debug)]
pub struct ReversedSet {
    pub model: QuantumModel,
}

impl ReversedSet {
    /// Image of `h` in the reversed set.
    pub fn map_history(&self, h: &History) -> History {
        h.reversed()
    }
}

fn check_reflection(times: &[f64]) -> Result<()> {
    let n = times.len() - 1;
    let sum = times[0] + times[n];
    for k in 0..=n {
        let s = times[k] + times[n - k];
        let scale = times[k].abs().max(times[n - k].abs()).max(1.0);
        if (s - sum).abs() > 1e-12 * scale {
            return Err(Error::InvalidGrid(format!(
                "grid does not admit reflection: t[{k}] + t[{}] = {s} differs from {sum}",
                n - k
            )));
        }
    }
    Ok(())
}

/// The time-reversed set on the same grid, state and dynamics.
pub fn time_reversed_history_set(model: &QuantumModel) -> Result<ReversedSet> {
    check_reflection(model.grid().times())?;
    let last = model.grid().last_index();
    let families = model
        .families()
        .iter()
        .rev()
        .map(|fam| fam.map_matrices(last - fam.time_index(), |p| model.reverse_operator(p)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReversedSet {
        model: model.with_families(families)?,
    })
}

/// `max |D_f^rev(rev h, rev h') − conj D_b(h, h')|`. Vanishes when the grid,
/// the dynamics and the state at the center are time-symmetric.
pub fn mirror_identity_error(model: &QuantumModel, reversed: &ReversedSet) -> Result<f64> {
    let backwards = functional_table(model, Direction::Backwards)?;
    let forwards_rev = functional_table(&reversed.model, Direction::Forwards)?;
    let index: Vec<usize> = backwards
        .histories
        .iter()
        .map(|h| {
            forwards_rev
                .position(&reversed.map_history(h))
                .ok_or_else(|| Error::InvalidHistory("reversed history missing".into()))
        })
        .collect::<Result<_>>()?;
    let mut err: f64 = 0.0;
    for (i, &ri) in index.iter().enumerate() {
        for (j, &rj) in index.iter().enumerate() {
            err = err.max((forwards_rev.value(ri, rj) - backwards.value(i, j).conj()).norm());
        }
    }
    Ok(err)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PageOutcome {
    PreconditionFailed,
    NotDecoherent,
    Agree,
    Disagree,
}

#[derive(Clone, Debug)]
pub struct PageReport {
    pub failed_preconditions: Vec<String>,
    /// Two-state report for the original set.
    pub star: Option<DecoherenceReport>,
    /// Two-state report for the time-reversed set.
    pub doublestar: Option<DecoherenceReport>,
    /// `max_h |p(h) − p_rev(rev h)|` when both sets decohere.
    pub max_difference: Option<f64>,
    pub outcome: PageOutcome,
}

/// For time-symmetric, commuting `ρ_i` and `ρ_f` (given at `t₀`), two-state
/// decoherence of a set and of its time reversal implies equal probabilities.
pub fn page_symmetric_cosmology_check(
    rho_i: &StateOperator,
    rho_f: &ComplexMatrix,
    model: &QuantumModel,
    tolerance: TolerancePolicy,
) -> Result<PageReport> {
    let mut failed = Vec::new();
    let last = model.grid().last_index();
    let reversed = match time_reversed_history_set(model) {
        Ok(r) => Some(r),
        Err(e) => {
            failed.push(e.to_string());
            None
        }
    };
    if !last.is_multiple_of(2) {
        failed.push("grid has no center point".into());
    } else {
        let center = last / 2;
        failed.extend(dynamics_symmetry_diagnostics(model, center));
        for (name, op) in [("rho_i", rho_i.matrix()), ("rho_f", rho_f)] {
            let dev = operator_reversal_deviation(model, op, center)?;
            if dev > STATE_TOL {
                failed.push(format!("{name} not time-symmetric at the center (deviation {dev:e})"));
            }
        }
    }
    let comm = rho_i.matrix().commutator(rho_f)?.max_abs();
    if comm > STATE_TOL {
        failed.push(format!("rho_i and rho_f do not commute (max |[rho_i, rho_f]| = {comm:e})"));
    }
    let reversed = match reversed {
        Some(r) if failed.is_empty() => r,
        _ => {
            return Ok(PageReport {
                failed_preconditions: failed,
                star: None,
                doublestar: None,
                max_difference: None,
                outcome: PageOutcome::PreconditionFailed,
            })
        }
    };
    let star = check_two_state(model, rho_i, rho_f, Strength::Weak, tolerance)?;
    let doublestar = check_two_state(&reversed.model, rho_i, rho_f, Strength::Weak, tolerance)?;
    let (max_difference, outcome) = match (&star.probabilities, &doublestar.probabilities) {
        (Some(p), Some(q)) => {
            let mut diff: f64 = 0.0;
            for (h, ph) in star.histories.iter().zip(p) {
                let j = doublestar
                    .histories
                    .iter()
                    .position(|x| *x == reversed.map_history(h))
                    .expect("reversed history enumerated");
                diff = diff.max((ph - q[j]).abs());
            }
            let outcome = if diff <= PROBABILITY_TOL {
                PageOutcome::Agree
            } else {
                PageOutcome::Disagree
            };
            (Some(diff), outcome)
        }
        _ => (None, PageOutcome::NotDecoherent),
    };
    Ok(PageReport {
        failed_preconditions: failed,
        star: Some(star),
        doublestar: Some(doublestar),
        max_difference,
        outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;
    use crate::model::{ProjectorFamily, StateVector, TimeGrid};

    fn model_on(times: Vec<f64>) -> QuantumModel {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let y_basis = ComplexMatrix::from_rows(&[vec![c64(s, 0.0), c64(s, 0.0)], vec![c64(0.0, s), c64(0.0, -s)]]).unwrap();
        let fy = ProjectorFamily::from_basis(1, &y_basis, &[("y+", &[0]), ("y-", &[1])]).unwrap();
        let fz = ProjectorFamily::rank_one(2, &ComplexMatrix::identity(2)).unwrap();
        let grid = TimeGrid::trivial(times, 2).unwrap();
        QuantumModel::new(StateOperator::pure(StateVector::basis(2, 0)), grid, vec![fy, fz]).unwrap()
    }

    #[test]
    fn reversal_maps_indices_and_conjugates() {
        let m = model_on(vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        let r = time_reversed_history_set(&m).unwrap();
        let fams = r.model.families();
        assert_eq!(fams[0].time_index(), 2);
        assert_eq!(fams[1].time_index(), 3);
        // Θ|+y⟩⟨+y|Θ⁻¹ = |−y⟩⟨−y| under plain conjugation
        let y_minus = &m.family(0).unwrap().members()[1].matrix;
        assert!(fams[1].members()[0].matrix.max_abs_diff(y_minus) < 1e-15);
        assert!(r.map_history(&History::new(vec![0, 1])) == History::new(vec![1, 0]));
    }

    #[test]
    fn reversal_requires_reflection() {
        let m = model_on(vec![0.0, 1.0, 3.0, 4.5]);
        assert!(matches!(time_reversed_history_set(&m), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn round_trip() {
        let m = model_on(vec![0.0, 1.0, 3.0, 4.0]);
        let twice = time_reversed_history_set(&time_reversed_history_set(&m).unwrap().model).unwrap();
        for (a, b) in m.families().iter().zip(twice.model.families()) {
            assert_eq!(a.time_index(), b.time_index());
            for (p, q) in a.members().iter().zip(b.members()) {
                assert_eq!(p.label, q.label);
                assert!(p.matrix.max_abs_diff(&q.matrix) <= 1e-12);
            }
        }
    }

    #[test]
    fn page_preconditions_reported() {
        let m = model_on(vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus_y = StateOperator::pure(StateVector::new(vec![c64(s, 0.0), c64(0.0, s)]).unwrap());
        let r = page_symmetric_cosmology_check(&plus_y, &ComplexMatrix::identity(2), &m, TolerancePolicy::default())
            .unwrap();
        assert_eq!(r.outcome, PageOutcome::PreconditionFailed);
        assert!(r.failed_preconditions.iter().any(|f| f.contains("rho_i")));

        let diag = StateOperator::new(ComplexMatrix::from_real(2, 2, &[0.7, 0.0, 0.0, 0.3]).unwrap()).unwrap();
        let rho_f = ComplexMatrix::from_real(2, 2, &[0.2, 0.0, 0.0, 0.9]).unwrap();
        let r = page_symmetric_cosmology_check(&diag, &rho_f, &m, TolerancePolicy::default()).unwrap();
        assert!(r.failed_preconditions.is_empty(), "{:?}", r.failed_preconditions);
        assert_ne!(r.outcome, PageOutcome::PreconditionFailed);
    }
}
