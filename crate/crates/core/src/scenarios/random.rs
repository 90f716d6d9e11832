//! Seeded random models for property tests and the `random` scenario.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::model::{ProjectorFamily, QuantumModel, StateOperator, StateVector, TimeGrid};
use crate::random::{haar_unitary, random_density, random_vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomModelConfig {
    pub dim: usize,
    pub families: usize,
    /// Upper bound on members per family (at least 2 are always used).
    pub max_members: usize,
    /// Rank of the initial state; 1 gives a pure state.
    pub rank: usize,
}

impl Default for RandomModelConfig {
    fn default() -> Self {
        Self {
            dim: 4,
            families: 2,
            max_members: 3,
            rank: 1,
        }
    }
}

impl RandomModelConfig {
    fn validate(&self) -> Result<()> {
        if self.dim < 2 || self.rank == 0 || self.rank > self.dim || self.max_members < 2 {
            return Err(Error::Scenario(format!("invalid random model configuration {self:?}")));
        }
        Ok(())
    }
}

/// Random partition of `0..dim` into between 2 and `max_members` nonempty blocks.
fn random_partition(rng: &mut ChaCha8Rng, dim: usize, max_members: usize) -> Vec<Vec<usize>> {
    let m = rng.random_range(2..=max_members.min(dim));
    let mut idx: Vec<usize> = (0..dim).collect();
    idx.shuffle(rng);
    let mut blocks: Vec<Vec<usize>> = idx[..m].iter().map(|&i| vec![i]).collect();
    for &i in &idx[m..] {
        let b = rng.random_range(0..m);
        blocks[b].push(i);
    }
    for b in &mut blocks {
        b.sort_unstable();
    }
    blocks
}

fn family_from_partition(time_index: usize, basis: &ComplexMatrix, blocks: &[Vec<usize>]) -> Result<ProjectorFamily> {
    let labels: Vec<String> = (0..blocks.len()).map(|j| format!("p{j}")).collect();
    let blocks_by_label: Vec<(&str, &[usize])> = labels.iter().map(String::as_str).zip(blocks.iter().map(Vec::as_slice)).collect();
    ProjectorFamily::from_basis(time_index, basis, &blocks_by_label)
}

fn random_state(rng: &mut ChaCha8Rng, dim: usize, rank: usize) -> Result<StateOperator> {
    if rank == 1 {
        Ok(StateOperator::pure(StateVector::normalized(random_vector(rng, dim))?))
    } else {
        StateOperator::new(random_density(rng, dim, rank))
    }
}

fn random_grid(rng: &mut ChaCha8Rng, dim: usize, families: usize) -> Result<TimeGrid> {
    let times: Vec<f64> = (0..=families + 1).map(|k| k as f64).collect();
    let steps = (0..=families).map(|_| haar_unitary(rng, dim)).collect();
    TimeGrid::from_unitaries(times, steps)
}

/// Haar-random dynamics, families from random orthonormal bases and a
/// random state. Families sit at grid indices `1..=n` of `0..=n+1`.
pub fn random_model(seed: u64, config: RandomModelConfig) -> Result<QuantumModel> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = random_grid(&mut rng, config.dim, config.families)?;
    let families = (1..=config.families)
        .map(|k| {
            let basis = haar_unitary(&mut rng, config.dim);
            let blocks = random_partition(&mut rng, config.dim, config.max_members);
            family_from_partition(k, &basis, &blocks)
        })
        .collect::<Result<Vec<_>>>()?;
    let state = random_state(&mut rng, config.dim, config.rank)?;
    QuantumModel::new(state, grid, families)
}

/// Random dynamics whose Heisenberg-picture projectors all commute: each
/// family partitions the same random basis `V`, placed at `t_k` as `W_k V`.
/// Such sets decohere in both directions for every state.
///
/// With `eigenstate = Some(j)` the state is the pure basis vector `V e_j`,
/// an eigenvector of every Heisenberg projector.
pub fn commuting_model(seed: u64, config: RandomModelConfig, eigenstate: Option<usize>) -> Result<QuantumModel> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = random_grid(&mut rng, config.dim, config.families)?;
    let common = haar_unitary(&mut rng, config.dim);
    let skeleton = QuantumModel::new(StateOperator::maximally_mixed(config.dim), grid, vec![])?;
    let families = (1..=config.families)
        .map(|k| {
            let basis = skeleton.cumulative(k)?.matmul(&common)?;
            let blocks = random_partition(&mut rng, config.dim, config.max_members);
            family_from_partition(k, &basis, &blocks)
        })
        .collect::<Result<Vec<_>>>()?;
    let state = match eigenstate {
        Some(j) if j < config.dim => StateOperator::pure(StateVector::normalized(common.column(j))?),
        Some(j) => return Err(Error::Scenario(format!("eigenstate index {j} out of range"))),
        None => random_state(&mut rng, config.dim, config.rank)?,
    };
    skeleton.with_families(families)?.with_initial_state(state)
}

/// Pure state `e₀` with rank-1 families onto the columns of each cumulative
/// unitary: the history `(0, …, 0)` has probability 1.
pub fn deterministic_chain(seed: u64, dim: usize, families: usize) -> Result<QuantumModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = random_grid(&mut rng, dim, families)?;
    let skeleton = QuantumModel::new(StateOperator::pure(StateVector::basis(dim, 0)), grid, vec![])?;
    let fams = (1..=families)
        .map(|k| ProjectorFamily::rank_one(k, skeleton.cumulative(k)?))
        .collect::<Result<Vec<_>>>()?;
    skeleton.with_families(fams)
}
