//! Independent oracles shared by the integration tests. Everything here is
//! computed with explicit matrices in the Schrödinger picture, without the
//! engine's branch factorization.

#![allow(dead_code)]

use histories_core::engine::History;
use histories_core::linalg::{c64, C64, ComplexMatrix};
use histories_core::model::QuantumModel;

pub const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn step_product(model: &QuantumModel, from: usize, to: usize) -> ComplexMatrix {
    let mut u = ComplexMatrix::identity(model.dim());
    for s in &model.grid().steps()[from..to] {
        u = s * &u;
    }
    u
}

fn projector(model: &QuantumModel, k: usize, h: &History) -> ComplexMatrix {
    model.families()[k].members()[h.indices()[k]].matrix.clone()
}

/// `U_{N,n} P_n U_{n,n-1} ··· P_1 U_{1,0}` in the Schrödinger picture.
pub fn schrodinger_chain(model: &QuantumModel, h: &History) -> ComplexMatrix {
    let mut at = 0;
    let mut c = ComplexMatrix::identity(model.dim());
    for (k, fam) in model.families().iter().enumerate() {
        c = &step_product(model, at, fam.time_index()) * &c;
        c = &projector(model, k, h) * &c;
        at = fam.time_index();
    }
    &step_product(model, at, model.grid().last_index()) * &c
}

/// Forwards functional as `Tr(C(h) ρ(t₀) C(h')†)`.
pub fn forwards_oracle(model: &QuantumModel, h: &History, h2: &History) -> C64 {
    let rho = model.initial_state().matrix();
    let c = schrodinger_chain(model, h);
    let c2 = schrodinger_chain(model, h2);
    (&(&c * rho) * &c2.adjoint()).trace().unwrap()
}

/// Backwards functional in the form
/// `Tr(P₁ U₂₁† ··· P_n U_{N,n}† ρ(t_N) U_{N,n} P'_n ··· U₂₁ P'₁)`.
pub fn backwards_oracle(model: &QuantumModel, h: &History, h2: &History) -> C64 {
    let last = model.grid().last_index();
    let w = step_product(model, 0, last);
    let rho_final = &(&w * model.initial_state().matrix()) * &w.adjoint();
    let build = |hist: &History| {
        // B(h) = P₁ U₂₁† P₂ ··· P_n U_{N,n}†
        let mut b = ComplexMatrix::identity(model.dim());
        let fams = model.families();
        for k in (0..fams.len()).rev() {
            let next = if k + 1 < fams.len() { fams[k + 1].time_index() } else { last };
            b = &step_product(model, fams[k].time_index(), next).adjoint() * &b;
            b = &projector(model, k, hist) * &b;
        }
        b
    };
    let b = build(h);
    let b2 = build(h2);
    (&(&b * &rho_final) * &b2.adjoint()).trace().unwrap()
}

/// Final spin-model state worked out by hand from the premeasurement maps.
pub fn spin_final_state(alpha: C64, beta: C64) -> Vec<C64> {
    use histories_core::scenarios::spin::{minus_z, plus_z, product, M_MINUS, M_PLUS};
    let s = c64(H, 0.0);
    let terms = [
        (alpha * s, product(&plus_z(), M_PLUS, M_PLUS)),
        (alpha * s, product(&minus_z(), M_PLUS, M_MINUS)),
        (beta * s, product(&plus_z(), M_MINUS, M_PLUS)),
        (-beta * s, product(&minus_z(), M_MINUS, M_MINUS)),
    ];
    let mut v = vec![c64(0.0, 0.0); 18];
    for (amp, vec) in terms {
        for (x, y) in v.iter_mut().zip(vec) {
            *x += amp * y;
        }
    }
    v
}

pub fn max_abs_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn history(model: &QuantumModel, labels: &[&str]) -> History {
    History::from_labels(model, labels).unwrap()
}
