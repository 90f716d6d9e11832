//! Spin-½ particle measured in x then z by two three-state apparatuses.
//!
//! Factors are particle ⊗ M¹ ⊗ M²; each pointer space has basis
//! `{M₀, M₊, M₋}`. Premeasurement maps `|±⟩|M₀⟩ ↦ |±⟩|M_±⟩` are completed
//! to unitaries by swapping `M₀ ↔ M_±`.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::linalg::{c64, C64, ComplexMatrix};
use crate::model::{ProjectorFamily, QuantumModel, StateOperator, StateVector, TimeGrid};

pub const PARTICLE: usize = 2;
pub const POINTER: usize = 3;
pub const SPIN_FACTORS: [usize; 3] = [PARTICLE, POINTER, POINTER];
/// Grid of the spin model: `t₀ < t₁ < t₂ < t₃`.
pub const SPIN_TIMES: [f64; 4] = [-3.0, -2.0, -1.0, 0.0];

pub const M0: usize = 0;
pub const M_PLUS: usize = 1;
pub const M_MINUS: usize = 2;

/// `|+x⟩`, `|−x⟩`, `|+z⟩`, `|−z⟩` as particle vectors.
pub fn plus_x() -> Vec<C64> {
    vec![c64(FRAC_1_SQRT_2, 0.0), c64(FRAC_1_SQRT_2, 0.0)]
}

pub fn minus_x() -> Vec<C64> {
    vec![c64(FRAC_1_SQRT_2, 0.0), c64(-FRAC_1_SQRT_2, 0.0)]
}

pub fn plus_z() -> Vec<C64> {
    vec![c64(1.0, 0.0), c64(0.0, 0.0)]
}

pub fn minus_z() -> Vec<C64> {
    vec![c64(0.0, 0.0), c64(1.0, 0.0)]
}

pub fn pointer(k: usize) -> Vec<C64> {
    let mut v = vec![c64(0.0, 0.0); POINTER];
    v[k] = c64(1.0, 0.0);
    v
}

fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// `particle ⊗ M¹ ⊗ M²` product vector.
pub fn product(particle: &[C64], m1: usize, m2: usize) -> Vec<C64> {
    kron_vec(&kron_vec(particle, &pointer(m1)), &pointer(m2))
}

/// Pointer swap `M₀ ↔ M_k`, identity on the remaining state.
fn pointer_swap(k: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(POINTER, POINTER, |i, j| {
        let image = if j == M0 {
            k
        } else if j == k {
            M0
        } else {
            j
        };
        c64(if i == image { 1.0 } else { 0.0 }, 0.0)
    })
}

fn particle_projectors(plus: &[C64], minus: &[C64]) -> (ComplexMatrix, ComplexMatrix) {
    (ComplexMatrix::outer(plus, plus), ComplexMatrix::outer(minus, minus))
}

/// `P₊ ⊗ X₊ + P₋ ⊗ X₋` acting on the particle and apparatus `which` (1 or 2).
fn premeasurement(plus: &[C64], minus: &[C64], which: usize) -> ComplexMatrix {
    let (pp, pm) = particle_projectors(plus, minus);
    let id = ComplexMatrix::identity(POINTER);
    let (xp, xm) = (pointer_swap(M_PLUS), pointer_swap(M_MINUS));
    let term = |p: &ComplexMatrix, x: &ComplexMatrix| {
        if which == 1 {
            p.kron(x).kron(&id)
        } else {
            p.kron(&id).kron(x)
        }
    };
    &term(&pp, &xp) + &term(&pm, &xm)
}

/// Particle projector family `{P₊ ⊗ I ⊗ I, P₋ ⊗ I ⊗ I}`.
fn particle_family(time_index: usize, plus: &[C64], minus: &[C64], labels: [&str; 2]) -> Result<ProjectorFamily> {
    let (pp, pm) = particle_projectors(plus, minus);
    let id = ComplexMatrix::identity(POINTER * POINTER);
    ProjectorFamily::new(
        time_index,
        vec![(labels[0].to_string(), pp.kron(&id)), (labels[1].to_string(), pm.kron(&id))],
    )
}

pub fn x_family(time_index: usize) -> Result<ProjectorFamily> {
    particle_family(time_index, &plus_x(), &minus_x(), ["x+", "x-"])
}

pub fn z_family(time_index: usize) -> Result<ProjectorFamily> {
    particle_family(time_index, &plus_z(), &minus_z(), ["z+", "z-"])
}

/// `(α|+x⟩ + β|−x⟩) ⊗ |M₀⟩ ⊗ |M₀⟩`.
pub fn spin_initial_state(alpha: C64, beta: C64) -> Result<StateVector> {
    let total = alpha.norm_sqr() + beta.norm_sqr();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Scenario(format!("|alpha|^2 + |beta|^2 = {total}, expected 1")));
    }
    let particle: Vec<C64> = plus_x()
        .iter()
        .zip(minus_x())
        .map(|(p, m)| alpha * p + beta * m)
        .collect();
    StateVector::new(product(&particle, M0, M0))
}

/// x measurement recorded in M¹ during `[t₀, t₁]`, z measurement recorded
/// in M² during `[t₁, t₂]`, no evolution during `[t₂, t₃]`.
pub fn spin_model(alpha: C64, beta: C64) -> Result<QuantumModel> {
    let psi = spin_initial_state(alpha, beta)?;
    let steps = vec![
        premeasurement(&plus_x(), &minus_x(), 1),
        premeasurement(&plus_z(), &minus_z(), 2),
        ComplexMatrix::identity(PARTICLE * POINTER * POINTER),
    ];
    let grid = TimeGrid::from_unitaries(SPIN_TIMES.to_vec(), steps)?;
    QuantumModel::new(StateOperator::pure(psi), grid, vec![x_family(1)?, z_family(2)?])?
        .with_factors(SPIN_FACTORS.to_vec())
}

/// Bare qubit pre-selected in `|+x⟩` and post-selected in `|+z⟩` with a
/// z family in between and no dynamics.
pub fn spin_post() -> Result<(QuantumModel, StateVector)> {
    let fam = ProjectorFamily::new(
        1,
        vec![
            ("z+".to_string(), ComplexMatrix::outer(&plus_z(), &plus_z())),
            ("z-".to_string(), ComplexMatrix::outer(&minus_z(), &minus_z())),
        ],
    )?;
    let grid = TimeGrid::trivial(vec![0.0, 1.0, 2.0], PARTICLE)?;
    let model = QuantumModel::new(StateOperator::pure(StateVector::new(plus_x())?), grid, vec![fam])?;
    Ok((model, StateVector::new(plus_z())?))
}
