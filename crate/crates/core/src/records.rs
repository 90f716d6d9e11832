//! Branch vectors of pure states, the strong-decoherence / orthogonality
//! equivalence, and generalized records at a late time.

use crate::engine::{
    check_decoherence, enumerate_histories, Classification, Direction, History, Strength, TolerancePolicy,
    PROBABILITY_TOL,
};
use crate::error::{Error, Result};
use crate::linalg::{inner, norm, norm_sqr, C64, ComplexMatrix};
use crate::model::{ProjectorFamily, QuantumModel, StateOperator, StateVector, Step, TimeGrid};

/// Branches with norm at or below this get null records.
pub const ZERO_BRANCH_NORM: f64 = 1e-14;

/// `L(h)|ψ⟩` in the Heisenberg picture (referenced to `t₀`).
#[derive(Clone, Debug, PartialEq)]
pub struct BranchVector {
    pub history: History,
    pub vector: Vec<C64>,
}

impl BranchVector {
    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.vector)
    }
}

/// The model's initial state as a vector; errors for mixed states.
pub fn pure_state(model: &QuantumModel) -> Result<StateVector> {
    model.initial_state().pure_vector().ok_or(Error::MixedState)
}

/// Branch vectors of `psi` for every history, computed by alternating
/// Schrödinger evolution and projection, then pulled back to `t₀`.
pub fn branch_vectors(model: &QuantumModel, psi: &StateVector) -> Result<Vec<BranchVector>> {
    if psi.dim() != model.dim() {
        return Err(Error::DimensionMismatch("state vector has wrong dimension".into()));
    }
    let families = model.families();
    let last = families.last().map_or(0, |f| f.time_index());
    let pull_back = model.cumulative(last)?.adjoint();
    enumerate_histories(model)
        .into_iter()
        .map(|h| {
            let mut v = psi.amplitudes().to_vec();
            let mut at = 0;
            for (fam, &i) in families.iter().zip(h.indices()) {
                v = model.propagator(at, fam.time_index())?.matvec(&v)?;
                v = fam.members()[i].matrix.matvec(&v)?;
                at = fam.time_index();
            }
            Ok(BranchVector {
                vector: pull_back.matvec(&v)?,
                history: h,
            })
        })
        .collect()
}

/// Agreement of strong decoherence and branch orthogonality for the first
/// `families` families.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncationCheck {
    pub families: usize,
    /// Largest `|⟨v_h|v_h'⟩| / ε_pair` over distinct pairs.
    pub max_overlap_ratio: f64,
    pub orthogonal: bool,
    pub strong: Classification,
    pub agree: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrthogonalityReport {
    pub truncations: Vec<TruncationCheck>,
    pub agree: bool,
}

impl OrthogonalityReport {
    /// The check on the full set of families.
    pub fn full(&self) -> &TruncationCheck {
        self.truncations.last().expect("at least one truncation")
    }
}

fn max_overlap_ratio(branches: &[BranchVector], tolerance: TolerancePolicy) -> f64 {
    let p: Vec<f64> = branches.iter().map(BranchVector::norm_sqr).collect();
    let mut worst: f64 = 0.0;
    for i in 0..branches.len() {
        for j in i + 1..branches.len() {
            let overlap = inner(&branches[i].vector, &branches[j].vector).norm();
            worst = worst.max(overlap / tolerance.threshold(p[i], p[j]));
        }
    }
    worst
}

/// Checks, for every truncation to the first `k` families, that the branch
/// vectors are pairwise orthogonal exactly when the set is strongly decoherent.
pub fn strong_decoherence_iff_orthogonality(
    model: &QuantumModel,
    psi: &StateVector,
    tolerance: TolerancePolicy,
) -> Result<OrthogonalityReport> {
    let base = model.with_initial_state(StateOperator::pure(psi.clone()))?;
    let n = model.families().len();
    let mut truncations = Vec::with_capacity(n.max(1));
    for k in (1..=n).chain((n == 0).then_some(0)) {
        let truncated = base.with_families(model.families()[..k].to_vec())?;
        let ratio = max_overlap_ratio(&branch_vectors(&truncated, psi)?, tolerance);
        let strong = check_decoherence(&truncated, Direction::Forwards, Strength::Strong, tolerance)?.classification;
        let orthogonal = ratio <= 1.0;
        truncations.push(TruncationCheck {
            families: k,
            max_overlap_ratio: ratio,
            orthogonal,
            strong,
            agree: orthogonal == strong.is_decoherent(),
        });
    }
    let agree = truncations.iter().all(|t| t.agree);
    Ok(OrthogonalityReport { truncations, agree })
}

/// Record projectors at grid index `time_index`, one per history.
#[derive(Clone, Debug)]
pub struct RecordSet {
    pub time_index: usize,
    /// The pure state the records were built for.
    pub state: StateVector,
    pub histories: Vec<History>,
    pub labels: Vec<Vec<String>>,
    /// `R_h` in the Schrödinger picture at `time_index`; zero for null branches.
    pub projections: Vec<ComplexMatrix>,
    /// `I − Σ_h R_h`.
    pub residual: ComplexMatrix,
    /// `‖v_h‖²` per history.
    pub probabilities: Vec<f64>,
    /// `correlation[h][h'] = ⟨w_h'|R_h|w_h'⟩` with `w_h` the branch at `time_index`.
    pub correlation: Vec<Vec<f64>>,
    /// `max |correlation[h][h'] − δ_hh' p_h|`.
    pub correlation_error: f64,
}

impl RecordSet {
    pub fn is_perfectly_correlated(&self) -> bool {
        self.correlation_error <= PROBABILITY_TOL
    }

    /// Label of the record member for history `i`.
    pub fn record_label(&self, i: usize) -> String {
        format!("R[{}]", self.labels[i].join(","))
    }

    /// The model's families followed by the record family `{R_h, residual}`,
    /// with the record state as initial state.
    ///
    /// When the records sit at the last grid time, the grid is extended by
    /// one identity step so the new family lies strictly inside it.
    pub fn extended_model(&self, model: &QuantumModel) -> Result<QuantumModel> {
        let last_family = model.families().last().map_or(0, |f| f.time_index());
        if self.time_index <= last_family {
            return Err(Error::InvalidFamily(format!(
                "records at grid index {} cannot follow a family at the same time",
                self.time_index
            )));
        }
        let mut members: Vec<(String, ComplexMatrix)> = self
            .projections
            .iter()
            .enumerate()
            .map(|(i, r)| (self.record_label(i), r.clone()))
            .collect();
        members.push(("rest".to_string(), self.residual.clone()));
        let record_family = ProjectorFamily::new(self.time_index, members)?;
        let mut families = model.families().to_vec();
        families.push(record_family);

        let grid = model.grid();
        let state = StateOperator::pure(self.state.clone());
        let base = if self.time_index == grid.last_index() {
            let times = grid.times();
            let dt = times.windows(2).last().map_or(1.0, |w| w[1] - w[0]);
            let mut new_times = times.to_vec();
            new_times.push(times[times.len() - 1] + dt);
            let mut steps: Vec<Step> = grid.steps().iter().cloned().map(Step::Unitary).collect();
            steps.push(Step::Unitary(ComplexMatrix::identity(model.dim())));
            let m = QuantumModel::new(state, TimeGrid::new(new_times, steps)?, vec![])?
                .with_conjugation_basis(model.conjugation_basis().clone())?;
            match model.factors() {
                Some(f) => m.with_factors(f.to_vec())?,
                None => m,
            }
        } else {
            model.with_initial_state(state)?
        };
        base.with_families(families)
    }
}

/// Builds records at grid index `time_index` for a strongly decoherent set.
pub fn construct_records(
    model: &QuantumModel,
    psi: &StateVector,
    time_index: usize,
    tolerance: TolerancePolicy,
) -> Result<RecordSet> {
    let last_family = model.families().last().map_or(0, |f| f.time_index());
    if time_index < last_family || time_index > model.grid().last_index() {
        return Err(Error::IndexOutOfRange(format!(
            "record time index {time_index} must lie in [{last_family}, {}]",
            model.grid().last_index()
        )));
    }
    let with_psi = model.with_initial_state(StateOperator::pure(psi.clone()))?;
    let report = check_decoherence(&with_psi, Direction::Forwards, Strength::Strong, tolerance)?;
    if !report.classification.is_decoherent() {
        return Err(Error::ConditionNotSatisfied(format!(
            "records require strong forwards decoherence (set is {}, worst ratio {:e})",
            report.classification, report.max_ratio
        )));
    }
    let branches = branch_vectors(model, psi)?;
    let w_f = model.cumulative(time_index)?;
    let evolved: Vec<Vec<C64>> = branches
        .iter()
        .map(|b| w_f.matvec(&b.vector))
        .collect::<Result<_>>()?;
    let dim = model.dim();
    let projections: Vec<ComplexMatrix> = evolved
        .iter()
        .map(|w| {
            let n = norm(w);
            if n > ZERO_BRANCH_NORM {
                let unit: Vec<C64> = w.iter().map(|z| z / n).collect();
                ComplexMatrix::outer(&unit, &unit)
            } else {
                ComplexMatrix::zeros(dim, dim)
            }
        })
        .collect();
    let residual = projections
        .iter()
        .fold(ComplexMatrix::identity(dim), |acc, r| &acc - r);
    let probabilities: Vec<f64> = branches.iter().map(BranchVector::norm_sqr).collect();
    let correlation: Vec<Vec<f64>> = projections
        .iter()
        .map(|r| {
            evolved
                .iter()
                .map(|w| r.matvec(w).map(|rw| norm_sqr(&rw)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut correlation_error: f64 = 0.0;
    for (i, row) in correlation.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            let expected = if i == j { probabilities[i] } else { 0.0 };
            correlation_error = correlation_error.max((c - expected).abs());
        }
    }
    let histories: Vec<History> = branches.into_iter().map(|b| b.history).collect();
    Ok(RecordSet {
        time_index,
        state: psi.clone(),
        labels: histories.iter().map(|h| h.labels(model)).collect(),
        histories,
        projections,
        residual,
        probabilities,
        correlation,
        correlation_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;

    fn qubit(psi: Vec<C64>, families: Vec<ProjectorFamily>, times: Vec<f64>) -> QuantumModel {
        let grid = TimeGrid::trivial(times, 2).unwrap();
        QuantumModel::new(StateOperator::pure(StateVector::new(psi).unwrap()), grid, families).unwrap()
    }

    #[test]
    fn single_basis_family_gives_components() {
        let psi = vec![c64(0.6, 0.0), c64(0.0, 0.8)];
        let fam = ProjectorFamily::rank_one(1, &ComplexMatrix::identity(2)).unwrap();
        let m = qubit(psi.clone(), vec![fam], vec![0.0, 1.0, 2.0]);
        let b = branch_vectors(&m, &pure_state(&m).unwrap()).unwrap();
        assert_eq!(b[0].vector, vec![psi[0], c64(0.0, 0.0)]);
        assert_eq!(b[1].vector, vec![c64(0.0, 0.0), psi[1]]);
        let r = strong_decoherence_iff_orthogonality(&m, &pure_state(&m).unwrap(), TolerancePolicy::default()).unwrap();
        assert!(r.agree && r.full().orthogonal);
    }

    #[test]
    fn bare_qubit_interference_fails_both_sides() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let xb = ComplexMatrix::from_real(2, 2, &[s, s, s, -s]).unwrap();
        let fx = ProjectorFamily::from_basis(1, &xb, &[("x+", &[0]), ("x-", &[1])]).unwrap();
        let fz = ProjectorFamily::rank_one(2, &ComplexMatrix::identity(2)).unwrap();
        let m = qubit(vec![c64(1.0, 0.0), c64(0.0, 0.0)], vec![fx, fz], vec![0.0, 1.0, 2.0, 3.0]);
        let psi = pure_state(&m).unwrap();
        let b = branch_vectors(&m, &psi).unwrap();
        // v_(x+,z+) = v_(x-,z+) = e0/2
        let overlap = inner(&b[0].vector, &b[2].vector);
        assert!((overlap - c64(0.25, 0.0)).norm() < 1e-15, "{overlap}");
        let r = strong_decoherence_iff_orthogonality(&m, &psi, TolerancePolicy::default()).unwrap();
        assert!(r.agree);
        assert!(!r.full().orthogonal);
        assert!(r.truncations[0].orthogonal);
        assert!(construct_records(&m, &psi, 2, TolerancePolicy::default()).is_err());
    }

    #[test]
    fn deterministic_records() {
        let fam = ProjectorFamily::rank_one(1, &ComplexMatrix::identity(2)).unwrap();
        let m = qubit(vec![c64(0.0, 0.0), c64(1.0, 0.0)], vec![fam], vec![0.0, 1.0, 2.0]);
        let psi = pure_state(&m).unwrap();
        let r = construct_records(&m, &psi, 2, TolerancePolicy::default()).unwrap();
        assert_eq!(r.projections[0], ComplexMatrix::zeros(2, 2));
        assert!(r.projections[1].max_abs_diff(&psi.density()) < 1e-15);
        assert!(r.is_perfectly_correlated());
        let ext = r.extended_model(&m).unwrap();
        assert_eq!(ext.grid().len(), 4);
        assert_eq!(ext.families().len(), 2);
        assert!(construct_records(&m, &psi, 3, TolerancePolicy::default()).is_err());
        assert!(construct_records(&m, &psi, 0, TolerancePolicy::default()).is_err());
    }

    #[test]
    fn mixed_state_refused() {
        let fam = ProjectorFamily::rank_one(1, &ComplexMatrix::identity(2)).unwrap();
        let grid = TimeGrid::trivial(vec![0.0, 1.0, 2.0], 2).unwrap();
        let m = QuantumModel::new(StateOperator::maximally_mixed(2), grid, vec![fam]).unwrap();
        assert_eq!(pure_state(&m), Err(Error::MixedState));
    }
}
