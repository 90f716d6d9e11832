//! Histories, decoherence functionals, candidate probabilities and
//! consistency checks.
//!
//! With Heisenberg-picture projectors `P_k(t_k)` the forwards class operator
//! of a history `h = (α₁, …, α_n)` is `L(h) = P_{α_n}(t_n)···P_{α_1}(t_1)` and
//! the backwards one is `L_b(h) = P_{α_1}(t_1)···P_{α_n}(t_n)`. In both cases
//! `D(h, h') = Tr(L(h) ρ L(h')†)`, evaluated as `Σ_k ⟨L(h') c_k | L(h) c_k⟩`
//! over the branch columns `c_k = √λ_k e_k` of `ρ`.

mod reversal;
mod two_state;

pub use reversal::{
    mirror_identity_error, page_symmetric_cosmology_check, time_reversed_history_set, PageOutcome, PageReport,
    ReversedSet,
};
pub use two_state::{
    check_two_state, normalization, pure_two_state_triviality_check, two_state_functional, two_state_probability,
    two_state_table, validate_final_operator, TrivialityReport,
};

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{inner, C64, ComplexMatrix};
use crate::model::{ProjectorFamily, QuantumModel};

/// Candidate probabilities may overshoot `[0, 1]` by this much before the
/// model is considered broken.
pub const PROBABILITY_SLACK: f64 = 1e-10;
/// A pair within this factor of its threshold is classified as marginal.
pub const MARGINAL_FACTOR: f64 = 1e3;
/// Additivity tolerance for coarse-graining and probability comparisons.
pub const PROBABILITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Forwards,
    Backwards,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forwards => "forwards",
            Direction::Backwards => "backwards",
        })
    }
}

/// Which functional a report was computed from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FunctionalKind {
    Forwards,
    Backwards,
    TwoState,
}

impl From<Direction> for FunctionalKind {
    fn from(d: Direction) -> Self {
        match d {
            Direction::Forwards => FunctionalKind::Forwards,
            Direction::Backwards => FunctionalKind::Backwards,
        }
    }
}

impl fmt::Display for FunctionalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FunctionalKind::Forwards => "forwards",
            FunctionalKind::Backwards => "backwards",
            FunctionalKind::TwoState => "two_state",
        })
    }
}

/// Weak decoherence tests `Re D`, strong decoherence tests `|D|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strength {
    Weak,
    Strong,
}

impl Strength {
    fn measure(self, v: C64) -> f64 {
        match self {
            Strength::Weak => v.re.abs(),
            Strength::Strong => v.norm(),
        }
    }
}

impl fmt::Display for Strength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strength::Weak => "weak",
            Strength::Strong => "strong",
        })
    }
}

/// Per-pair threshold `max(abs, rel·√(p_h p_h'))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TolerancePolicy {
    pub rel: f64,
    pub abs: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self { rel: 1e-9, abs: 1e-12 }
    }
}

impl TolerancePolicy {
    pub fn threshold(&self, p: f64, q: f64) -> f64 {
        self.abs.max(self.rel * (p.max(0.0) * q.max(0.0)).sqrt())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Classification {
    Decoherent,
    Marginal,
    NotDecoherent,
}

impl Classification {
    fn from_ratio(max_ratio: f64) -> Self {
        if max_ratio <= 1.0 {
            Classification::Decoherent
        } else if max_ratio <= MARGINAL_FACTOR {
            Classification::Marginal
        } else {
            Classification::NotDecoherent
        }
    }

    pub fn is_decoherent(self) -> bool {
        self == Classification::Decoherent
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Decoherent => "decoherent",
            Classification::Marginal => "marginal",
            Classification::NotDecoherent => "not_decoherent",
        })
    }
}

/// One member index per family, in family order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct History(Vec<usize>);

impl History {
    pub fn new(indices: Vec<usize>) -> Self {
        Self(indices)
    }

    pub fn from_labels(model: &QuantumModel, labels: &[&str]) -> Result<Self> {
        if labels.len() != model.families().len() {
            return Err(Error::InvalidHistory(format!(
                "{} labels for {} families",
                labels.len(),
                model.families().len()
            )));
        }
        labels
            .iter()
            .zip(model.families())
            .map(|(l, fam)| {
                fam.position(l)
                    .ok_or_else(|| Error::InvalidHistory(format!("unknown label {l:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self, model: &QuantumModel) -> Vec<String> {
        self.labels_in(model.families())
    }

    pub fn labels_in(&self, families: &[ProjectorFamily]) -> Vec<String> {
        self.0
            .iter()
            .zip(families)
            .map(|(&i, fam)| fam.members()[i].label.clone())
            .collect()
    }

    pub fn reversed(&self) -> History {
        History(self.0.iter().rev().copied().collect())
    }

    pub fn validate(&self, model: &QuantumModel) -> Result<()> {
        if self.0.len() != model.families().len() {
            return Err(Error::InvalidHistory(format!(
                "history has {} entries, model has {} families",
                self.0.len(),
                model.families().len()
            )));
        }
        for (k, (&i, fam)) in self.0.iter().zip(model.families()).enumerate() {
            if i >= fam.len() {
                return Err(Error::InvalidHistory(format!(
                    "member {i} out of range for family {k} ({} members)",
                    fam.len()
                )));
            }
        }
        Ok(())
    }
}

/// All histories in lexicographic order of the member indices.
pub fn enumerate_histories(model: &QuantumModel) -> Vec<History> {
    let sizes: Vec<usize> = model.families().iter().map(ProjectorFamily::len).collect();
    enumerate_multi_indices(&sizes).into_iter().map(History).collect()
}

pub(crate) fn enumerate_multi_indices(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &s in sizes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..s).map(move |i| {
                    let mut v = prefix.clone();
                    v.push(i);
                    v
                })
            })
            .collect();
    }
    out
}

/// Heisenberg projectors of every family, indexed `[family][member]`.
pub(crate) fn heisenberg_projectors(model: &QuantumModel) -> Result<Vec<Vec<ComplexMatrix>>> {
    (0..model.families().len())
        .map(|k| model.heisenberg_family(k))
        .collect()
}

/// Projector chain in application order for `direction`.
fn chain<'a>(projectors: &'a [Vec<ComplexMatrix>], h: &History, direction: Direction) -> Vec<&'a ComplexMatrix> {
    let mut ops: Vec<&ComplexMatrix> = h.indices().iter().enumerate().map(|(k, &i)| &projectors[k][i]).collect();
    if direction == Direction::Backwards {
        ops.reverse();
    }
    ops
}

/// Class operator `L(h)` (forwards) or `L_b(h)` (backwards).
pub fn class_operator(model: &QuantumModel, h: &History, direction: Direction) -> Result<ComplexMatrix> {
    h.validate(model)?;
    let projectors = heisenberg_projectors(model)?;
    let mut l = ComplexMatrix::identity(model.dim());
    for p in chain(&projectors, h, direction) {
        l = p.matmul(&l)?;
    }
    Ok(l)
}

fn apply_chain(ops: &[&ComplexMatrix], v: &[C64]) -> Vec<C64> {
    ops.iter()
        .fold(v.to_vec(), |acc, p| p.matvec(&acc).expect("dimensions validated by the model"))
}

/// Complex functional values for every pair of histories, `values[i][j] = D(h_i, h_j)`.
#[derive(Clone, Debug)]
pub struct FunctionalTable {
    pub histories: Vec<History>,
    pub values: Vec<Vec<C64>>,
}

impl FunctionalTable {
    pub fn value(&self, i: usize, j: usize) -> C64 {
        self.values[i][j]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.histories.len()).map(|i| self.values[i][i].re).collect()
    }

    pub fn position(&self, h: &History) -> Option<usize> {
        self.histories.iter().position(|x| x == h)
    }

    /// Gram table of per-history branch columns, `values[i][j] = Σ_k ⟨b_j,k | b_i,k⟩`.
    pub(crate) fn from_branches(histories: Vec<History>, branches: &[Vec<Vec<C64>>]) -> Self {
        let m = histories.len();
        let values = (0..m)
            .into_par_iter()
            .map(|i| {
                (0..m)
                    .map(|j| {
                        branches[i]
                            .iter()
                            .zip(&branches[j])
                            .map(|(bi, bj)| inner(bj, bi))
                            .sum()
                    })
                    .collect()
            })
            .collect();
        Self { histories, values }
    }
}

/// One vector per column of the initial state's factorization.
pub type BranchColumns = Vec<Vec<C64>>;

/// Branch columns `L(h) c_k` for every history, in enumeration order.
pub fn branch_columns(model: &QuantumModel, direction: Direction) -> Result<(Vec<History>, Vec<BranchColumns>)> {
    let projectors = heisenberg_projectors(model)?;
    let columns = model.initial_state().branch_columns();
    let histories = enumerate_histories(model);
    let branches = histories
        .par_iter()
        .map(|h| {
            let ops = chain(&projectors, h, direction);
            columns.iter().map(|c| apply_chain(&ops, c)).collect()
        })
        .collect();
    Ok((histories, branches))
}

/// The full decoherence functional over all pairs of histories.
pub fn functional_table(model: &QuantumModel, direction: Direction) -> Result<FunctionalTable> {
    let (histories, branches) = branch_columns(model, direction)?;
    Ok(FunctionalTable::from_branches(histories, &branches))
}

/// `D(h, h')` for the given direction.
pub fn decoherence_functional(model: &QuantumModel, h: &History, h2: &History, direction: Direction) -> Result<C64> {
    h.validate(model)?;
    h2.validate(model)?;
    let projectors = heisenberg_projectors(model)?;
    let (a, b) = (chain(&projectors, h, direction), chain(&projectors, h2, direction));
    Ok(model
        .initial_state()
        .branch_columns()
        .iter()
        .map(|c| inner(&apply_chain(&b, c), &apply_chain(&a, c)))
        .sum())
}

/// Clamps values within [`PROBABILITY_SLACK`] of `[0, 1]`; anything further
/// out means the model invariants are broken.
pub fn to_probability(value: f64) -> Result<f64> {
    if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&value) {
        return Err(Error::ProbabilityOutOfRange { value });
    }
    Ok(value.clamp(0.0, 1.0))
}

pub fn candidate_probability(model: &QuantumModel, h: &History, direction: Direction) -> Result<f64> {
    to_probability(decoherence_functional(model, h, h, direction)?.re)
}

/// `Tr(L(h) ρ L(h)†)` with the forwards chain.
pub fn candidate_probability_forwards(model: &QuantumModel, h: &History) -> Result<f64> {
    candidate_probability(model, h, Direction::Forwards)
}

/// `Tr(L_b(h) ρ L_b(h)†)` with the backwards chain.
pub fn candidate_probability_backwards(model: &QuantumModel, h: &History) -> Result<f64> {
    candidate_probability(model, h, Direction::Backwards)
}

/// One off-diagonal pair `(i, j)`, `i < j`, of a report.
#[derive(Clone, Debug, PartialEq)]
pub struct PairEntry {
    pub first: usize,
    pub second: usize,
    pub value: C64,
    /// `|Re v|` or `|v|` depending on the strength.
    pub measure: f64,
    pub threshold: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct DecoherenceReport {
    pub kind: FunctionalKind,
    pub strength: Strength,
    pub tolerance: TolerancePolicy,
    pub histories: Vec<History>,
    pub labels: Vec<Vec<String>>,
    /// Diagonal values (normalized for two-state reports), aligned with `histories`.
    pub diagonal: Vec<f64>,
    /// Off-diagonal pairs, worst ratio first.
    pub pairs: Vec<PairEntry>,
    pub max_ratio: f64,
    pub classification: Classification,
    /// Present only when the set is decoherent.
    pub probabilities: Option<Vec<f64>>,
}

impl DecoherenceReport {
    /// Builds a report from a (normalized) functional table.
    pub fn from_table(
        table: &FunctionalTable,
        labels: Vec<Vec<String>>,
        kind: FunctionalKind,
        strength: Strength,
        tolerance: TolerancePolicy,
    ) -> Result<Self> {
        let diagonal = table.diagonal();
        let m = diagonal.len();
        let mut pairs = Vec::with_capacity(m * m.saturating_sub(1) / 2);
        for i in 0..m {
            for j in i + 1..m {
                let value = table.value(i, j);
                let measure = strength.measure(value);
                let threshold = tolerance.threshold(diagonal[i], diagonal[j]);
                pairs.push(PairEntry {
                    first: i,
                    second: j,
                    value,
                    measure,
                    threshold,
                    ratio: measure / threshold,
                });
            }
        }
        pairs.sort_by(|a, b| {
            b.ratio
                .total_cmp(&a.ratio)
                .then(a.first.cmp(&b.first))
                .then(a.second.cmp(&b.second))
        });
        let max_ratio = pairs.first().map_or(0.0, |p| p.ratio);
        let classification = Classification::from_ratio(max_ratio);
        let probabilities = if classification.is_decoherent() {
            Some(diagonal.iter().map(|&p| to_probability(p)).collect::<Result<Vec<_>>>()?)
        } else {
            None
        };
        Ok(Self {
            kind,
            strength,
            tolerance,
            histories: table.histories.clone(),
            labels,
            diagonal,
            pairs,
            max_ratio,
            classification,
            probabilities,
        })
    }

    pub fn probability(&self, h: &History) -> Option<f64> {
        let i = self.histories.iter().position(|x| x == h)?;
        self.probabilities.as_ref().map(|p| p[i])
    }

    pub fn worst(&self) -> Option<&PairEntry> {
        self.pairs.first()
    }
}

pub(crate) fn labels_of(model: &QuantumModel, histories: &[History]) -> Vec<Vec<String>> {
    histories.iter().map(|h| h.labels(model)).collect()
}

/// Evaluates every off-diagonal pair against the tolerance policy.
pub fn check_decoherence(
    model: &QuantumModel,
    direction: Direction,
    strength: Strength,
    tolerance: TolerancePolicy,
) -> Result<DecoherenceReport> {
    let table = functional_table(model, direction)?;
    let labels = labels_of(model, &table.histories);
    for &p in &table.diagonal() {
        to_probability(p)?;
    }
    DecoherenceReport::from_table(&table, labels, direction.into(), strength, tolerance)
}

/// Per-family partition of member indices into labelled blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct CoarseGraining {
    blocks: Vec<Vec<(String, Vec<usize>)>>,
}

impl CoarseGraining {
    pub fn new(model: &QuantumModel, blocks: Vec<Vec<(String, Vec<usize>)>>) -> Result<Self> {
        if blocks.len() != model.families().len() {
            return Err(Error::InvalidFamily(format!(
                "graining has {} entries for {} families",
                blocks.len(),
                model.families().len()
            )));
        }
        for (k, (fam_blocks, fam)) in blocks.iter().zip(model.families()).enumerate() {
            let mut seen = vec![false; fam.len()];
            for (label, members) in fam_blocks {
                if members.is_empty() {
                    return Err(Error::InvalidFamily(format!("empty block {label:?} in family {k}")));
                }
                for &i in members {
                    if i >= fam.len() || seen[i] {
                        return Err(Error::InvalidFamily(format!(
                            "member {i} of family {k} is out of range or in two blocks"
                        )));
                    }
                    seen[i] = true;
                }
            }
            if seen.iter().any(|s| !s) {
                return Err(Error::InvalidFamily(format!("blocks of family {k} do not cover all members")));
            }
        }
        Ok(Self { blocks })
    }

    /// Every member in its own block.
    pub fn trivial(model: &QuantumModel) -> Self {
        Self {
            blocks: model
                .families()
                .iter()
                .map(|fam| {
                    fam.members()
                        .iter()
                        .enumerate()
                        .map(|(i, m)| (m.label.clone(), vec![i]))
                        .collect()
                })
                .collect(),
        }
    }

    /// Trivial graining except family `k`, whose members are merged into one block.
    pub fn merge_family(model: &QuantumModel, k: usize, label: &str) -> Result<Self> {
        let mut g = Self::trivial(model);
        let fam = model.family(k)?;
        g.blocks[k] = vec![(label.to_string(), (0..fam.len()).collect())];
        Ok(g)
    }

    pub fn blocks(&self) -> &[Vec<(String, Vec<usize>)>] {
        &self.blocks
    }

    /// The model with each family replaced by its block sums.
    pub fn apply(&self, model: &QuantumModel) -> Result<QuantumModel> {
        let families = self
            .blocks
            .iter()
            .zip(model.families())
            .map(|(fam_blocks, fam)| {
                let members = fam_blocks
                    .iter()
                    .map(|(label, idx)| {
                        let sum = idx.iter().fold(ComplexMatrix::zeros(model.dim(), model.dim()), |acc, &i| {
                            &acc + &fam.members()[i].matrix
                        });
                        (label.clone(), sum)
                    })
                    .collect();
                ProjectorFamily::new(fam.time_index(), members)
            })
            .collect::<Result<Vec<_>>>()?;
        model.with_families(families)
    }

    fn coarse_of(&self, fine: &History) -> Vec<usize> {
        fine.indices()
            .iter()
            .zip(&self.blocks)
            .map(|(&i, fam_blocks)| {
                fam_blocks
                    .iter()
                    .position(|(_, idx)| idx.contains(&i))
                    .expect("graining covers every member")
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoarseEntry {
    pub history: History,
    pub labels: Vec<String>,
    pub coarse_probability: f64,
    pub fine_sum: f64,
    /// `coarse_probability − fine_sum`.
    pub violation: f64,
}

#[derive(Clone, Debug)]
pub struct CoarseGrainReport {
    pub direction: Direction,
    pub entries: Vec<CoarseEntry>,
    pub max_violation: f64,
    pub additive: bool,
    pub fine_classification: Classification,
}

/// Compares candidate probabilities of the coarse-grained set against sums
/// of the fine-grained ones.
pub fn coarse_grain_check(
    model: &QuantumModel,
    graining: &CoarseGraining,
    direction: Direction,
    tolerance: TolerancePolicy,
) -> Result<CoarseGrainReport> {
    let fine = check_decoherence(model, direction, Strength::Weak, tolerance)?;
    let coarse_model = graining.apply(model)?;
    let coarse_table = functional_table(&coarse_model, direction)?;
    let mut fine_sums = vec![0.0; coarse_table.histories.len()];
    for (h, &p) in fine.histories.iter().zip(&fine.diagonal) {
        let c = History(graining.coarse_of(h));
        let i = coarse_table.position(&c).expect("coarse history enumerated");
        fine_sums[i] += p;
    }
    let entries: Vec<CoarseEntry> = coarse_table
        .histories
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let coarse_probability = coarse_table.value(i, i).re;
            CoarseEntry {
                history: h.clone(),
                labels: h.labels(&coarse_model),
                coarse_probability,
                fine_sum: fine_sums[i],
                violation: coarse_probability - fine_sums[i],
            }
        })
        .collect();
    let max_violation = entries.iter().map(|e| e.violation.abs()).fold(0.0, f64::max);
    Ok(CoarseGrainReport {
        direction,
        entries,
        max_violation,
        additive: max_violation <= PROBABILITY_TOL,
        fine_classification: fine.classification,
    })
}

/// Additivity defect of merging two histories into one class operator
/// `L(h) + L(h')`: `p(h ∨ h') − p(h) − p(h')`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairAdditivity {
    pub first: usize,
    pub second: usize,
    pub violation: f64,
    /// Twice the pair threshold of the tolerance policy.
    pub threshold: f64,
}

/// Additivity defects for every pair of histories, computed from the merged
/// class operators rather than from the functional.
pub fn pairwise_additivity(
    model: &QuantumModel,
    direction: Direction,
    tolerance: TolerancePolicy,
) -> Result<Vec<PairAdditivity>> {
    let (_, branches) = branch_columns(model, direction)?;
    let norm2 = |cols: &[Vec<C64>]| -> f64 { cols.iter().map(|c| crate::linalg::norm_sqr(c)).sum() };
    let p: Vec<f64> = branches.iter().map(|b| norm2(b)).collect();
    let m = branches.len();
    let mut out = Vec::with_capacity(m * m.saturating_sub(1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            let merged: Vec<Vec<C64>> = branches[i]
                .iter()
                .zip(&branches[j])
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect();
            out.push(PairAdditivity {
                first: i,
                second: j,
                violation: norm2(&merged) - p[i] - p[j],
                threshold: 2.0 * tolerance.threshold(p[i], p[j]),
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct BothConditionsReport {
    pub forwards: Classification,
    pub backwards: Classification,
    /// Both weak conditions hold.
    pub applicable: bool,
    pub histories: Vec<History>,
    pub labels: Vec<Vec<String>>,
    pub forwards_probabilities: Vec<f64>,
    pub backwards_probabilities: Vec<f64>,
    /// `Re Tr(L(h) ρ)` for every history.
    pub trace_forms: Vec<f64>,
    /// Largest difference among the three tables.
    pub max_difference: f64,
    /// `Some(agree)` when applicable.
    pub holds: Option<bool>,
}

/// When forwards and backwards weak decoherence both hold, the forwards and
/// backwards candidate probabilities and `Re Tr(L(h) ρ)` must coincide.
pub fn both_conditions_theorem_check(model: &QuantumModel, tolerance: TolerancePolicy) -> Result<BothConditionsReport> {
    let fwd = check_decoherence(model, Direction::Forwards, Strength::Weak, tolerance)?;
    let bwd = check_decoherence(model, Direction::Backwards, Strength::Weak, tolerance)?;
    let projectors = heisenberg_projectors(model)?;
    let columns = model.initial_state().branch_columns();
    let trace_forms: Vec<f64> = fwd
        .histories
        .iter()
        .map(|h| {
            let ops = chain(&projectors, h, Direction::Forwards);
            columns
                .iter()
                .map(|c| inner(c, &apply_chain(&ops, c)))
                .sum::<C64>()
                .re
        })
        .collect();
    let max_difference = fwd
        .diagonal
        .iter()
        .zip(&bwd.diagonal)
        .zip(&trace_forms)
        .map(|((f, b), t)| (f - b).abs().max((f - t).abs()).max((b - t).abs()))
        .fold(0.0, f64::max);
    let applicable = fwd.classification.is_decoherent() && bwd.classification.is_decoherent();
    Ok(BothConditionsReport {
        forwards: fwd.classification,
        backwards: bwd.classification,
        applicable,
        histories: fwd.histories.clone(),
        labels: fwd.labels.clone(),
        forwards_probabilities: fwd.diagonal.clone(),
        backwards_probabilities: bwd.diagonal.clone(),
        trace_forms,
        max_difference,
        holds: applicable.then_some(max_difference <= PROBABILITY_TOL),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;
    use crate::model::{StateOperator, StateVector, TimeGrid};

    fn h() -> f64 {
        std::f64::consts::FRAC_1_SQRT_2
    }

    /// Bare qubit: σ_x family then σ_z family with identity dynamics.
    fn bare_qubit(psi: Vec<C64>) -> QuantumModel {
        let s = h();
        let x_basis = ComplexMatrix::from_real(2, 2, &[s, s, s, -s]).unwrap();
        let fx = ProjectorFamily::from_basis(1, &x_basis, &[("x+", &[0]), ("x-", &[1])]).unwrap();
        let fz = ProjectorFamily::from_basis(2, &ComplexMatrix::identity(2), &[("z+", &[0]), ("z-", &[1])]).unwrap();
        let grid = TimeGrid::trivial(vec![0.0, 1.0, 2.0, 3.0], 2).unwrap();
        let state = StateOperator::pure(StateVector::new(psi).unwrap());
        QuantumModel::new(state, grid, vec![fx, fz]).unwrap()
    }

    #[test]
    fn enumeration_is_lexicographic() {
        assert_eq!(enumerate_multi_indices(&[2, 3]).len(), 6);
        assert_eq!(enumerate_multi_indices(&[2, 3])[4], vec![1, 1]);
        assert_eq!(enumerate_multi_indices(&[]), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn bare_qubit_interference() {
        // ψ = |+z⟩: branches (x±, z±) are ±1/2-weighted, interfering
        let m = bare_qubit(vec![c64(1.0, 0.0), c64(0.0, 0.0)]);
        let t = functional_table(&m, Direction::Forwards).unwrap();
        for &p in &t.diagonal() {
            assert!((p - 0.25).abs() < 1e-14);
        }
        // D((x+,z+),(x-,z+)) = ⟨+z|P_{x-}P_{z+}P_{x+}|+z⟩ = (1/√2)(1/√2)(1/√2)(−1/√2)
        let a = History::from_labels(&m, &["x+", "z+"]).unwrap();
        let b = History::from_labels(&m, &["x-", "z+"]).unwrap();
        let v = decoherence_functional(&m, &a, &b, Direction::Forwards).unwrap();
        assert!((v - c64(0.25, 0.0)).norm() < 1e-14, "{v}");
        let r = check_decoherence(&m, Direction::Forwards, Strength::Weak, TolerancePolicy::default()).unwrap();
        assert_eq!(r.classification, Classification::NotDecoherent);
        assert!(r.probabilities.is_none());
    }

    #[test]
    fn report_orders_pairs_worst_first() {
        let m = bare_qubit(vec![c64(0.6, 0.0), c64(0.8, 0.0)]);
        let r = check_decoherence(&m, Direction::Forwards, Strength::Strong, TolerancePolicy::default()).unwrap();
        assert_eq!(r.pairs.len(), 6);
        assert!(r.pairs.windows(2).all(|w| w[0].ratio >= w[1].ratio));
        assert_eq!(r.max_ratio, r.pairs[0].ratio);
    }

    #[test]
    fn class_operator_matches_branch_route() {
        let m = bare_qubit(vec![c64(0.6, 0.0), c64(0.0, 0.8)]);
        for h in enumerate_histories(&m) {
            for dir in [Direction::Forwards, Direction::Backwards] {
                let l = class_operator(&m, &h, dir).unwrap();
                let rho = m.initial_state().matrix();
                let direct = l.matmul(rho).unwrap().matmul(&l.adjoint()).unwrap().trace().unwrap().re;
                let p = candidate_probability(&m, &h, dir).unwrap();
                assert!((direct - p).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn probability_clamping() {
        assert_eq!(to_probability(-5e-11).unwrap(), 0.0);
        assert_eq!(to_probability(1.0 + 5e-11).unwrap(), 1.0);
        assert!(to_probability(1.1).is_err());
        assert!(to_probability(-1e-6).is_err());
    }

    #[test]
    fn coarse_graining_validation() {
        let m = bare_qubit(vec![c64(1.0, 0.0), c64(0.0, 0.0)]);
        let bad = vec![vec![("a".to_string(), vec![0])], vec![("b".to_string(), vec![0, 1])]];
        assert!(CoarseGraining::new(&m, bad).is_err());
        let dup = vec![
            vec![("a".to_string(), vec![0, 1]), ("b".to_string(), vec![1])],
            vec![("c".to_string(), vec![0, 1])],
        ];
        assert!(CoarseGraining::new(&m, dup).is_err());
        let g = CoarseGraining::trivial(&m);
        let r = coarse_grain_check(&m, &g, Direction::Forwards, TolerancePolicy::default()).unwrap();
        assert!(r.max_violation < 1e-15);
    }

    #[test]
    fn history_validation() {
        let m = bare_qubit(vec![c64(1.0, 0.0), c64(0.0, 0.0)]);
        assert!(History::new(vec![0]).validate(&m).is_err());
        assert!(History::new(vec![0, 2]).validate(&m).is_err());
        assert!(History::from_labels(&m, &["x+", "q"]).is_err());
        let h = History::from_labels(&m, &["x-", "z+"]).unwrap();
        assert_eq!(h.indices(), &[1, 0]);
        assert_eq!(h.labels(&m), vec!["x-", "z+"]);
    }
}
