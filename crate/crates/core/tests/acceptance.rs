//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

mod common;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use histories_core::engine::{
    both_conditions_theorem_check, candidate_probability_forwards, check_decoherence, check_two_state,
    functional_table, page_symmetric_cosmology_check, pure_two_state_triviality_check, two_state_table,
    Classification, Direction, History, PageOutcome, Strength, TolerancePolicy,
};
use histories_core::linalg::{c64, inner, C64, ComplexMatrix};
use histories_core::model::{QuantumModel, StateOperator, StateVector, TimeGrid};
use histories_core::random::random_density;
use histories_core::records::{branch_vectors, construct_records, strong_decoherence_iff_orthogonality};
use histories_core::scenarios::random::{commuting_model, deterministic_chain, random_model, RandomModelConfig};
use histories_core::scenarios::spin::{plus_z, product, spin_model, M_PLUS};
use histories_core::scenarios::{
    build_scenario, collapse_chain_enumerate, fidelity_with, recoherence_scenario, reverse_collapse_chain,
};
use histories_core::Result;

use common::{history, H};

struct Outcome {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(id: &'static str, title: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { id, title, pass, detail }
}

fn run(id: &'static str, title: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Outcome {
    match f() {
        Ok((pass, detail)) => outcome(id, title, pass, detail),
        Err(e) => outcome(id, title, false, format!("error: {e}")),
    }
}

fn tol() -> TolerancePolicy {
    TolerancePolicy::default()
}

/// Seed-derived configuration with `dim ≤ 8` and at most three families.
fn random_config(seed: u64) -> RandomModelConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_cafe);
    let dim = rng.random_range(2..=8);
    RandomModelConfig {
        dim,
        families: rng.random_range(1..=3),
        max_members: rng.random_range(2..=4),
        rank: rng.random_range(1..=dim),
    }
}

fn pure_config(seed: u64) -> RandomModelConfig {
    RandomModelConfig {
        rank: 1,
        ..random_config(seed)
    }
}

fn spin_amplitudes() -> Vec<(C64, C64)> {
    let mut out: Vec<(C64, C64)> = [0.0, 0.1, 0.36, 0.5, 0.81, 1.0]
        .iter()
        .map(|&p: &f64| (c64(p.sqrt(), 0.0), c64((1.0 - p).sqrt(), 0.0)))
        .collect();
    out.push((C64::from_polar(0.6, 0.7), C64::from_polar(0.8, -1.9)));
    out.push((C64::from_polar(H, 2.1), C64::from_polar(H, 0.4)));
    out
}

fn criterion_1() -> Result<(bool, String)> {
    let start = Instant::now();
    let mut err: f64 = 0.0;
    for (a, b) in spin_amplitudes() {
        let p = a.norm_sqr();
        let model = spin_model(a, b)?;
        let table = functional_table(&model, Direction::Forwards)?;
        let expected = [
            (["x+", "z+"], p / 2.0),
            (["x+", "z-"], p / 2.0),
            (["x-", "z+"], (1.0 - p) / 2.0),
            (["x-", "z-"], (1.0 - p) / 2.0),
        ];
        for (labels, value) in expected {
            let i = table.position(&history(&model, &labels)).expect("history enumerated");
            err = err.max((table.value(i, i).re - value).abs());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    Ok((
        err <= 1e-10 && elapsed < 1.0,
        format!("max |p - expected| = {err:.1e}, {} amplitudes in {elapsed:.3} s", spin_amplitudes().len()),
    ))
}

fn criterion_2() -> Result<(bool, String)> {
    let mut err: f64 = 0.0;
    let mut wrong = Vec::new();
    for (a, b) in spin_amplitudes() {
        let model = spin_model(a, b)?;
        let report = check_decoherence(&model, Direction::Backwards, Strength::Weak, tol())?;
        err = report.diagonal.iter().map(|p| (p - 0.25).abs()).fold(err, f64::max);
        let balanced = (a.norm_sqr() - 0.5).abs() < 1e-12;
        if report.classification.is_decoherent() != balanced {
            wrong.push(format!("|a|^2={:.2}:{}", a.norm_sqr(), report.classification));
        }
    }
    Ok((
        err <= 1e-10 && wrong.is_empty(),
        format!("max |p - 1/4| = {err:.1e}, classification mismatches {wrong:?}"),
    ))
}

fn criterion_3() -> Result<(bool, String)> {
    let mut err: f64 = 0.0;
    let mut sum_err: f64 = 0.0;
    for seed in 0..200 {
        let model = random_model(seed, random_config(seed))?;
        let trajectories = collapse_chain_enumerate(&model)?;
        let mut total = 0.0;
        for t in &trajectories {
            err = err.max((t.probability - candidate_probability_forwards(&model, &t.history)?).abs());
            total += t.probability;
        }
        sum_err = sum_err.max((total - 1.0).abs());
    }
    Ok((
        err <= 1e-10 && sum_err <= 1e-9,
        format!("200 models: max |collapse - candidate| = {err:.1e}, max |sum - 1| = {sum_err:.1e}"),
    ))
}

fn criterion_4() -> Result<(bool, String)> {
    let (a, b) = (c64(0.6, 0.0), c64(0.8, 0.0));
    let model = spin_model(a, b)?;
    let final_state = StateOperator::pure(StateVector::new(product(&plus_z(), M_PLUS, M_PLUS))?);
    let trajectories = reverse_collapse_chain(&model, &final_state)?;
    let target = history(&model, &["x+", "z+"]);
    let t = trajectories.iter().find(|t| t.history == target).expect("history enumerated");
    let reconstructed = t.final_state().expect("nonzero trajectory");
    let psi0 = model.initial_state().pure_vector().expect("pure initial state");
    let fidelity = fidelity_with(reconstructed, &psi0)?;
    let perr = (t.probability - 0.5).abs();
    Ok((
        perr <= 1e-10 && fidelity < 1.0 - 1e-3,
        format!("P(x+, z+) = {:.12}, fidelity with psi(t0) = {fidelity:.6}", t.probability),
    ))
}

fn criterion_5() -> Result<(bool, String)> {
    let mut applicable = 0;
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    let mut record = |model: &QuantumModel| -> Result<()> {
        let r = both_conditions_theorem_check(model, tol())?;
        if r.applicable {
            applicable += 1;
            worst = worst.max(r.max_difference);
            if r.max_difference > 1e-9 {
                failures += 1;
            }
        }
        Ok(())
    };
    for seed in 0..100 {
        record(&commuting_model(seed, random_config(seed), None)?)?;
        record(&random_model(seed, random_config(seed))?)?;
    }
    record(&spin_model(c64(H, 0.0), c64(H, 0.0))?)?;
    let spin = both_conditions_theorem_check(&spin_model(c64(H, 0.0), c64(H, 0.0))?, tol())?;
    Ok((
        failures == 0 && applicable >= 100 && spin.applicable,
        format!("{applicable} models with both conditions, max |p_f - p_b| = {worst:.1e}, balanced spin applicable = {}", spin.applicable),
    ))
}

/// `P₁(t₁) ··· P_n(t_n)` for `h`.
fn backwards_chain(model: &QuantumModel, h: &History) -> Result<ComplexMatrix> {
    let mut l = ComplexMatrix::identity(model.dim());
    for (k, &i) in h.indices().iter().enumerate() {
        l = l.matmul(&model.heisenberg_projector(k, i)?)?;
    }
    Ok(l)
}

fn criterion_6() -> Result<(bool, String)> {
    // ρ_f = I against the forwards functional
    let mut reduction: f64 = 0.0;
    for seed in 0..50 {
        let model = random_model(seed, random_config(seed))?;
        let two = two_state_table(&model, model.initial_state(), &ComplexMatrix::identity(model.dim()))?;
        let fwd = functional_table(&model, Direction::Forwards)?;
        for i in 0..fwd.histories.len() {
            for j in 0..fwd.histories.len() {
                reduction = reduction.max((two.value(i, j) - fwd.value(i, j)).norm());
            }
        }
    }
    // diagonal sum against Tr(ρ_f ρ_i) for operators diagonal in the common basis
    let mut norm_err: f64 = 0.0;
    for seed in 0..50 {
        let config = random_config(seed);
        let vectors: Vec<StateVector> = (0..config.dim)
            .map(|j| Ok(commuting_model(seed, config, Some(j))?.initial_state().pure_vector().expect("pure")))
            .collect::<Result<_>>()?;
        let model = commuting_model(seed, config, None)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mix = |rng: &mut ChaCha8Rng, scale: f64| {
            vectors.iter().fold(ComplexMatrix::zeros(config.dim, config.dim), |acc, v| {
                &acc + &v.density().scale_real(scale * rng.random_range(0.05..1.0))
            })
        };
        let raw = mix(&mut rng, 1.0);
        let trace = raw.trace()?.re;
        let rho_i = StateOperator::new(raw.scale_real(1.0 / trace))?;
        let rho_f = mix(&mut rng, 3.0);
        let report = check_two_state(&model, &rho_i, &rho_f, Strength::Weak, tol())?;
        if !report.classification.is_decoherent() {
            return Ok((false, format!("seed {seed}: commuting two-state set not decoherent")));
        }
        let table = two_state_table(&model, &rho_i, &rho_f)?;
        let sum: f64 = table.diagonal().iter().sum();
        let expected = rho_f.matmul(rho_i.matrix())?.trace()?.re;
        norm_err = norm_err.max((sum - expected).abs());
    }
    // Tr(ρ_f L ρ_i L'†) = Tr(ρ_i L_b(h') ρ_f L_b(h)†), both normalized
    let mut cyclic: f64 = 0.0;
    for seed in 0..50 {
        let config = random_config(seed);
        let model = random_model(seed, config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1000);
        let rank_f = rng.random_range(1..=config.dim);
        let rho_f = random_density(&mut rng, config.dim, rank_f).scale_real(rng.random_range(0.5..4.0));
        let rho_i = model.initial_state();
        let norm = rho_f.matmul(rho_i.matrix())?.trace()?.re;
        let table = two_state_table(&model, rho_i, &rho_f)?;
        let chains: Vec<ComplexMatrix> = table.histories.iter().map(|h| backwards_chain(&model, h)).collect::<Result<_>>()?;
        for i in 0..chains.len() {
            for j in 0..chains.len() {
                let rhs = rho_i.matrix().matmul(&chains[j])?.matmul(&rho_f)?.matmul(&chains[i].adjoint())?.trace()?;
                cyclic = cyclic.max(((table.value(i, j) - rhs) / norm).norm());
            }
        }
    }
    Ok((
        reduction <= 1e-12 && norm_err <= 1e-10 && cyclic <= 1e-12,
        format!("rho_f = I: {reduction:.1e}; normalization: {norm_err:.1e}; cyclic identity: {cyclic:.1e}"),
    ))
}

fn criterion_7() -> Result<(bool, String)> {
    let mut zero_one: f64 = 0.0;
    let mut not_holding = 0;
    let mut constructed = Vec::new();
    for seed in 0..50 {
        let config = pure_config(seed);
        constructed.push(commuting_model(seed, config, Some(seed as usize % config.dim))?);
        constructed.push(deterministic_chain(seed, config.dim, config.families)?);
    }
    for model in &constructed {
        let psi = model.initial_state().pure_vector().expect("pure");
        let r = pure_two_state_triviality_check(model, &psi, tol())?;
        zero_one = zero_one.max(r.zero_one_error);
        if r.holds != Some(true) {
            not_holding += 1;
        }
    }
    let spin = spin_model(c64(H, 0.0), c64(H, 0.0))?;
    let psi = spin.initial_state().pure_vector().expect("pure");
    let witness = pure_two_state_triviality_check(&spin, &psi, tol())?;
    let both = both_conditions_theorem_check(&spin, tol())?;
    let quarter = both.forwards_probabilities.iter().map(|p| (p - 0.25).abs()).fold(0.0, f64::max);
    let witness_ok = both.applicable && quarter <= 1e-9 && !witness.condition.classification.is_decoherent();
    Ok((
        not_holding == 0 && zero_one <= 1e-9 && witness_ok,
        format!(
            "{} constructed models, max distance to {{0,1}} = {zero_one:.1e}; balanced spin: probabilities 1/4 (err {quarter:.1e}), forwards {} backwards {}, pure two-state condition {}",
            constructed.len(),
            both.forwards,
            both.backwards,
            witness.condition.classification
        ),
    ))
}

fn criterion_8() -> Result<(bool, String)> {
    let model = spin_model(c64(0.6, 0.0), c64(0.8, 0.0))?;
    let psi = model.initial_state().pure_vector().expect("pure");
    let strong = check_decoherence(&model, Direction::Forwards, Strength::Strong, tol())?;
    let branches = branch_vectors(&model, &psi)?;
    let mut gram: f64 = 0.0;
    for i in 0..branches.len() {
        for j in 0..branches.len() {
            if i != j {
                gram = gram.max(inner(&branches[i].vector, &branches[j].vector).norm());
            }
        }
    }
    let records = construct_records(&model, &psi, model.grid().last_index(), tol())?;
    let probabilities = strong.probabilities.clone().unwrap_or_default();
    let mut corr: f64 = 0.0;
    for (i, h) in records.histories.iter().enumerate() {
        let p = strong.probability(h).unwrap_or(f64::NAN);
        corr = corr.max((records.correlation[i][i] - p).abs());
    }
    let mut disagreements = 0;
    let (mut orthogonal, mut overlapping) = (0, 0);
    for seed in 0..200 {
        let config = pure_config(seed);
        let model = if seed % 2 == 0 {
            random_model(seed, config)?
        } else {
            commuting_model(seed, config, None)?
        };
        let psi = model.initial_state().pure_vector().expect("pure");
        let r = strong_decoherence_iff_orthogonality(&model, &psi, tol())?;
        if !r.agree {
            disagreements += 1;
        }
        if r.full().orthogonal {
            orthogonal += 1;
        } else {
            overlapping += 1;
        }
    }
    let pass = strong.classification == Classification::Decoherent
        && probabilities.len() == 4
        && gram <= 1e-10
        && corr <= 1e-9
        && records.correlation_error <= 1e-9
        && disagreements == 0;
    Ok((
        pass,
        format!(
            "spin strong: {}, Gram off-diagonal {gram:.1e}, record correlation {corr:.1e}; iff disagreements {disagreements}/200 ({orthogonal} orthogonal, {overlapping} not)",
            strong.classification
        ),
    ))
}

fn index_of_time(model: &QuantumModel, t: f64) -> usize {
    model
        .grid()
        .times()
        .iter()
        .position(|&x| (x - t).abs() < 1e-12)
        .expect("time on grid")
}

/// Purity of the particle at `−t₁` in the mirrored spin model.
/// The purity at `−t₀` is returned as an informational note.
fn criterion_9a() -> (Vec<Outcome>, Vec<String>) {
    let mut out = Vec::new();
    let mut notes = Vec::new();
    for (a, b) in [(0.6, 0.8), (H, H)] {
        let result = (|| -> Result<(f64, f64)> {
            let base = spin_model(c64(a, 0.0), c64(b, 0.0))?;
            let t1 = base.grid().times()[base.family(0)?.time_index()];
            let t0 = base.grid().times()[0];
            let s = recoherence_scenario(&base, tol())?;
            let at = |t: f64| s.analysis.purity_at(index_of_time(&s.model, t)).expect("purity on grid");
            Ok((at(-t1), at(-t0)))
        })();
        match result {
            Ok((p1, p0)) => {
                out.push(outcome(
                    "9a",
                    "particle purity returns to 1 at -t1",
                    (p1 - 1.0).abs() <= 1e-9,
                    format!("a = {a:.4}: purity at -t1 = {p1:.10}"),
                ));
                notes.push(format!("a = {a:.4}: purity at -t0 = {p0:.10}"));
            }
            Err(e) => out.push(outcome("9a", "particle purity returns to 1 at -t1", false, format!("error: {e}"))),
        }
    }
    (out, notes)
}

/// Spin mirrors plus random models shifted to end at `t = 0`.
fn criterion_9b() -> Result<(bool, String)> {
    let mut bases = Vec::new();
    for p in [0.36f64, 0.5, 0.1, 1.0] {
        bases.push(spin_model(c64(p.sqrt(), 0.0), c64((1.0 - p).sqrt(), 0.0))?);
    }
    for seed in 0..40 {
        let m = random_model(seed, pure_config(seed))?;
        let last = m.grid().times()[m.grid().last_index()];
        let times: Vec<f64> = m.grid().times().iter().map(|t| t - last - 1.0).collect();
        let grid = TimeGrid::from_unitaries(times, m.grid().steps().to_vec())?;
        bases.push(QuantumModel::new(m.initial_state().clone(), grid, m.families().to_vec())?);
    }
    let mut mismatches = 0;
    let mut mirror: f64 = 0.0;
    let (mut decoherent, mut not) = (0, 0);
    for base in &bases {
        let s = recoherence_scenario(base, tol())?;
        mirror = mirror.max(s.analysis.mirror_error);
        if !s.analysis.equivalent {
            mismatches += 1;
        }
        if s.analysis.forwards.classification.is_decoherent() {
            decoherent += 1;
        } else {
            not += 1;
        }
    }
    Ok((
        mismatches == 0 && mirror <= 1e-10,
        format!(
            "{} mirrored models ({decoherent} forwards decoherent, {not} not): classification mismatches {mismatches}, max mirror error {mirror:.1e}",
            bases.len()
        ),
    ))
}

fn criterion_10() -> Result<(bool, String)> {
    let model = build_scenario::<&str>("spin-symmetric", &[], None)?.model;
    let rho_f = ComplexMatrix::identity(model.dim());
    let report = page_symmetric_cosmology_check(model.initial_state(), &rho_f, &model, tol())?;
    let diff = report.max_difference.unwrap_or(f64::NAN);
    Ok((
        report.outcome == PageOutcome::Agree && diff <= 1e-9,
        format!(
            "outcome {:?}, max |p - p_rev| = {diff:.1e}, failed preconditions {:?}",
            report.outcome, report.failed_preconditions
        ),
    ))
}

fn main() {
    let start = Instant::now();
    let mut outcomes = vec![
        run("1", "spin forwards probabilities", criterion_1),
        run("2", "spin backwards probabilities", criterion_2),
        run("3", "collapse chain matches candidate probabilities", criterion_3),
        run("4", "reverse procedure from the spin final state", criterion_4),
        run("5", "both-conditions theorem", criterion_5),
        run("6", "two-state reductions", criterion_6),
        run("7", "pure two-state triviality", criterion_7),
        run("8", "records and branch orthogonality", criterion_8),
    ];
    let (purity, notes) = criterion_9a();
    outcomes.extend(purity);
    outcomes.push(run("9b", "recoherence iff backwards decoherence of the reversed set", criterion_9b));
    outcomes.push(run("10", "symmetric-cosmology check", criterion_10));
    let elapsed = start.elapsed().as_secs_f64();
    outcomes.push(outcome("runtime", "full suite under 60 s", elapsed < 60.0, format!("{elapsed:.2} s")));

    for o in &outcomes {
        println!("{} {:<7} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.id, o.title, o.detail);
    }
    for note in &notes {
        println!("INFO 9a      {note}");
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!("acceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
