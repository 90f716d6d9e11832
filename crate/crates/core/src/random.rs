//! Seeded random matrices: Gaussian, Hermitian, Haar unitaries, states.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{norm, C64, ComplexMatrix};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Complex Ginibre matrix (i.i.d. standard complex normal entries).
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    random_matrix(rng, n, n).hermitian_part()
}

pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..n).map(|_| gaussian(rng)).collect();
    let nv = norm(&v);
    v.into_iter().map(|z| z / nv).collect()
}

/// Haar-distributed unitary: Gram-Schmidt QR of a Ginibre matrix with the
/// diagonal of R made positive.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = random_matrix(rng, n, n);
    let mut q: Vec<Vec<C64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = g.column(j);
        // two passes of modified Gram-Schmidt keep the columns orthonormal to ~1e-15
        for _ in 0..2 {
            for u in &q {
                let proj: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= proj * ui;
                }
            }
        }
        let nv = norm(&v);
        q.push(v.into_iter().map(|z| z / nv).collect());
    }
    ComplexMatrix::from_columns(&q).expect("square")
}

/// Random density matrix `G G† / Tr(G G†)` with `rank` columns in `G`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> ComplexMatrix {
    let g = random_matrix(rng, n, rank.max(1));
    let rho = &g * &g.adjoint();
    let tr = rho.trace().expect("square").re;
    rho.scale_real(1.0 / tr).hermitian_part()
}
