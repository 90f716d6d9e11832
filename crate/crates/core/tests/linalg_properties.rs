//! Algebraic identities of the dense complex matrix layer.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use histories_core::linalg::{c64, exp_generator, inner, ComplexMatrix};
use histories_core::random::{haar_unitary, random_density, random_hermitian, random_matrix, random_vector};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `Σ_k (−i h t)^k / k!`, summed until the terms fall below 1e-18.
fn exp_taylor(h: &ComplexMatrix, t: f64) -> ComplexMatrix {
    let n = h.rows();
    let x = h.scale(c64(0.0, -t));
    let mut term = ComplexMatrix::identity(n);
    let mut sum = term.clone();
    for k in 1..200 {
        term = (&term * &x).scale_real(1.0 / k as f64);
        sum = &sum + &term;
        if term.max_abs() < 1e-18 {
            break;
        }
    }
    sum
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_is_cyclic(seed in any::<u64>(), n in 1usize..7) {
        let mut r = rng(seed);
        let (a, b, c) = (random_matrix(&mut r, n, n), random_matrix(&mut r, n, n), random_matrix(&mut r, n, n));
        let abc = (&(&a * &b) * &c).trace().unwrap();
        let cab = (&(&c * &a) * &b).trace().unwrap();
        prop_assert!((abc - cab).norm() <= 1e-12 * (1.0 + abc.norm()));
    }

    #[test]
    fn adjoint_reverses_products(seed in any::<u64>(), n in 1usize..6, m in 1usize..6, k in 1usize..6) {
        let mut r = rng(seed);
        let a = random_matrix(&mut r, n, m);
        let b = random_matrix(&mut r, m, k);
        let lhs = (&a * &b).adjoint();
        let rhs = &b.adjoint() * &a.adjoint();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-13);
        prop_assert_eq!(a.adjoint().adjoint(), a);
    }

    #[test]
    fn kron_mixed_product(seed in any::<u64>(), n in 1usize..4, m in 1usize..4) {
        let mut r = rng(seed);
        let (a, c) = (random_matrix(&mut r, n, n), random_matrix(&mut r, n, n));
        let (b, d) = (random_matrix(&mut r, m, m), random_matrix(&mut r, m, m));
        let lhs = &a.kron(&b) * &c.kron(&d);
        let rhs = (&a * &c).kron(&(&b * &d));
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn exp_matches_taylor_and_composes(seed in any::<u64>(), n in 1usize..6, s in -1.5f64..1.5, t in -1.5f64..1.5) {
        let mut r = rng(seed);
        let h = random_hermitian(&mut r, n).scale_real(0.5);
        let us = exp_generator(&h, s).unwrap();
        let ut = exp_generator(&h, t).unwrap();
        prop_assert!(us.max_abs_diff(&exp_taylor(&h, s)) <= 1e-10);
        prop_assert!((&us * &ut).max_abs_diff(&exp_generator(&h, s + t).unwrap()) <= 1e-11);
        prop_assert!(us.unitarity_deviation() <= 1e-12);
    }

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), n in 1usize..9) {
        let mut r = rng(seed);
        let h = random_hermitian(&mut r, n);
        let eig = h.herm_eig().unwrap();
        prop_assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(eig.vectors.unitarity_deviation() <= 1e-11);
        for (j, &lambda) in eig.values.iter().enumerate() {
            let v = eig.vectors.column(j);
            let hv = h.matvec(&v).unwrap();
            let resid = hv.iter().zip(&v).map(|(a, b)| (a - b * lambda).norm()).fold(0.0, f64::max);
            prop_assert!(resid <= 1e-10);
        }
    }

    #[test]
    fn haar_unitaries_preserve_inner_products(seed in any::<u64>(), n in 1usize..9) {
        let mut r = rng(seed);
        let u = haar_unitary(&mut r, n);
        let (a, b) = (random_vector(&mut r, n), random_vector(&mut r, n));
        let ua = u.matvec(&a).unwrap();
        let ub = u.matvec(&b).unwrap();
        prop_assert!((inner(&ua, &ub) - inner(&a, &b)).norm() <= 1e-12);
    }

    #[test]
    fn random_densities_are_states(seed in any::<u64>(), n in 1usize..9, rank in 1usize..9) {
        let rank = rank.min(n);
        let rho = random_density(&mut rng(seed), n, rank);
        prop_assert!((rho.trace().unwrap() - c64(1.0, 0.0)).norm() <= 1e-12);
        let eig = rho.herm_eig().unwrap();
        prop_assert!(eig.values[0] >= -1e-12);
        prop_assert_eq!(eig.values.iter().filter(|&&v| v > 1e-10).count(), rank);
    }
}
