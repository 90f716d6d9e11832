//! Mirroring a model with families before `t = 0` into a time-symmetric one,
//! and tracking how its decoherence unwinds after the center.

use crate::engine::{
    branch_columns, check_decoherence, mirror_identity_error, time_reversed_history_set, DecoherenceReport, Direction, Strength, TolerancePolicy,
};
use crate::error::{Error, Result};
use crate::linalg::{inner, C64, ComplexMatrix};
use crate::model::{partial_trace, time_reverse_state, QuantumModel, Step, TimeGrid, STATE_TOL};

#[derive(Clone, Debug)]
pub struct RecoherenceScenario {
    pub model: QuantumModel,
    /// Grid index of `t = 0`.
    pub center: usize,
    /// True when the state at the center had to be replaced by `(ρ + Θρ)/2`.
    pub symmetrized: bool,
    pub analysis: RecoherenceAnalysis,
}

/// One point of a curve over the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub index: usize,
    pub time: f64,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct RecoherenceAnalysis {
    /// Weak forwards check of the original families.
    pub forwards: DecoherenceReport,
    /// Interference between the original histories seen by a probe family
    /// (the time-reversed image of the first family) placed at each grid
    /// time from the last family onwards: `max |D((h, β), (h', β))|`, `h ≠ h'`.
    pub interference: Vec<CurvePoint>,
    /// Weak backwards check of the original set.
    pub backwards: DecoherenceReport,
    /// Weak backwards check of the time-reversed set.
    pub reversed_backwards: DecoherenceReport,
    /// `max |D_b^rev(rev h, rev h') − conj D_f(h, h')|`.
    pub mirror_error: f64,
    /// Forwards classification of the original set equals the backwards
    /// classification of the reversed set.
    pub equivalent: bool,
    /// Purity of the reduced state of factor 0 (or of the full state when
    /// the model declares no factors) at every grid time.
    pub purity: Vec<CurvePoint>,
}

impl RecoherenceAnalysis {
    pub fn purity_at(&self, index: usize) -> Option<f64> {
        self.purity.iter().find(|p| p.index == index).map(|p| p.value)
    }
}

/// Extends `base` to the mirror-image grid `t₀ < … < 0 < … < −t₀` with the
/// time-reversed dynamics after the center.
pub fn recoherence_scenario(base: &QuantumModel, tolerance: TolerancePolicy) -> Result<RecoherenceScenario> {
    let times = base.grid().times();
    let last_time = times[times.len() - 1];
    if last_time > 0.0 {
        return Err(Error::Scenario(format!("base grid must end at or before t = 0 (ends at {last_time})")));
    }
    if base.families().is_empty() {
        return Err(Error::Scenario("base model has no families".into()));
    }
    for fam in base.families() {
        let t = times[fam.time_index()];
        if t >= 0.0 {
            return Err(Error::Scenario(format!("family at t = {t} is not before t = 0")));
        }
    }
    let dim = base.dim();
    let mut first_half: Vec<f64> = times.to_vec();
    let mut steps: Vec<ComplexMatrix> = base.grid().steps().to_vec();
    if last_time < 0.0 {
        first_half.push(0.0);
        steps.push(ComplexMatrix::identity(dim));
    }
    let center = first_half.len() - 1;
    let c = base.antiunitary_matrix();
    let mirrored: Vec<ComplexMatrix> = steps.iter().rev().map(|u| &(&c * &u.transpose()) * &c.adjoint()).collect();
    let mut all_times = first_half.clone();
    all_times.extend(first_half[..center].iter().rev().map(|t| -t));
    steps.extend(mirrored);
    let grid = TimeGrid::new(all_times, steps.into_iter().map(Step::Unitary).collect())?;

    let skeleton = QuantumModel::new(base.initial_state().clone(), grid, base.families().to_vec())?
        .with_conjugation_basis(base.conjugation_basis().clone())?;
    let skeleton = match base.factors() {
        Some(f) => skeleton.with_factors(f.to_vec())?,
        None => skeleton,
    };
    let at_center = skeleton.evolve_state(center)?;
    let reversed = time_reverse_state(&at_center, skeleton.conjugation_basis())?;
    let symmetrized = reversed.matrix().max_abs_diff(at_center.matrix()) > STATE_TOL;
    let model = if symmetrized {
        let sym = at_center.average(&reversed)?;
        skeleton.with_initial_state(sym.evolved(&skeleton.cumulative(center)?.adjoint())?)?
    } else {
        skeleton
    };
    let analysis = analyze_recoherence(&model, tolerance)?;
    Ok(RecoherenceScenario {
        model,
        center,
        symmetrized,
        analysis,
    })
}

/// The four parts of the recoherence analysis for a mirrored model.
pub fn analyze_recoherence(model: &QuantumModel, tolerance: TolerancePolicy) -> Result<RecoherenceAnalysis> {
    let forwards = check_decoherence(model, Direction::Forwards, Strength::Weak, tolerance)?;
    let backwards = check_decoherence(model, Direction::Backwards, Strength::Weak, tolerance)?;
    let reversed = time_reversed_history_set(model)?;
    let reversed_backwards = check_decoherence(&reversed.model, Direction::Backwards, Strength::Weak, tolerance)?;
    let mirror_error = mirror_identity_error(&reversed.model, &time_reversed_history_set(&reversed.model)?)?;
    let equivalent = forwards.classification == reversed_backwards.classification;
    Ok(RecoherenceAnalysis {
        interference: interference_curve(model)?,
        purity: purity_curve(model)?,
        forwards,
        backwards,
        reversed_backwards,
        mirror_error,
        equivalent,
    })
}

fn interference_curve(model: &QuantumModel) -> Result<Vec<CurvePoint>> {
    let (_, branches) = branch_columns(model, Direction::Forwards)?;
    let probe: Vec<ComplexMatrix> = model.family(0)?.members().iter().map(|m| model.reverse_operator(&m.matrix)).collect();
    let start = model.families().last().map_or(0, |f| f.time_index());
    let times = model.grid().times();
    (start..=model.grid().last_index())
        .map(|j| {
            let w = model.cumulative(j)?;
            let evolved: Vec<Vec<Vec<C64>>> = branches
                .iter()
                .map(|cols| cols.iter().map(|c| w.matvec(c)).collect::<Result<Vec<_>>>())
                .collect::<Result<_>>()?;
            let mut worst: f64 = 0.0;
            for p in &probe {
                let projected: Vec<Vec<Vec<C64>>> = evolved
                    .iter()
                    .map(|cols| cols.iter().map(|c| p.matvec(c)).collect::<Result<Vec<_>>>())
                    .collect::<Result<_>>()?;
                for a in 0..projected.len() {
                    for b in a + 1..projected.len() {
                        let d: C64 = projected[a]
                            .iter()
                            .zip(&projected[b])
                            .map(|(x, y)| inner(y, x))
                            .sum();
                        worst = worst.max(d.norm());
                    }
                }
            }
            Ok(CurvePoint {
                index: j,
                time: times[j],
                value: worst,
            })
        })
        .collect()
}

fn purity_curve(model: &QuantumModel) -> Result<Vec<CurvePoint>> {
    let times = model.grid().times();
    (0..model.grid().len())
        .map(|j| {
            let state = model.evolve_state(j)?;
            let value = match model.factors() {
                Some(f) => partial_trace(&state, f, &[0])?.purity(),
                None => state.purity(),
            };
            Ok(CurvePoint {
                index: j,
                time: times[j],
                value,
            })
        })
        .collect()
}
