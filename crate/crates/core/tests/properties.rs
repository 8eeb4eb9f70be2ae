use nalgebra::DMatrix;
use pmsqm::basis::{
    build_hamiltonian, trace_diagonal, x_matrix_power, x_power_element_closed, BasisSpec,
    HamiltonianMatrix, PolynomialPotential,
};
use pmsqm::evolution::{
    gaussian_coefficients_closed, gaussian_coefficients_quadrature, observable_series,
    project_to_eigenbasis, x2_series, EvolutionState,
};
use pmsqm::spectrum::{eigendecompose, solve_spectrum, OmegaMode, SigmaMode};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn random_symmetric(n: usize, seed: u64) -> HamiltonianMatrix {
    let mut rng = StdRng::seed_from_u64(seed);
    let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    HamiltonianMatrix::from_upper(m).unwrap()
}

/// Even confining polynomial: positive leading quartic, free quadratic.
fn even_quartic() -> impl Strategy<Value = PolynomialPotential> {
    (0.2f64..2.0, -1.0f64..1.0, 0.01f64..1.0).prop_map(|(kinetic, v2, v4)| {
        PolynomialPotential::new(kinetic, vec![0.0, 0.0, v2, 0.0, v4]).unwrap()
    })
}

fn general_sextic() -> impl Strategy<Value = PolynomialPotential> {
    (prop::collection::vec(-1.0f64..1.0, 6), 0.05f64..1.0).prop_map(|(mut v, lead)| {
        v.push(lead);
        PolynomialPotential::new(0.5, v).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_form_agrees_with_ladder(omega in 0.05f64..20.0, n in 1usize..16, p in 0usize..9) {
        let basis = BasisSpec::new(omega, n).unwrap();
        let ladder = x_matrix_power(&basis, p);
        let scale = ladder.amax().max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in 0..n {
                let closed = x_power_element_closed(&basis, i, j, p);
                prop_assert!((closed - ladder[(i, j)]).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn parity_selection(omega in 0.05f64..20.0, n in 1usize..16, p in 0usize..9) {
        let x = x_matrix_power(&BasisSpec::new(omega, n).unwrap(), p);
        for i in 0..n {
            for j in 0..n {
                if (i + j + p) % 2 == 1 || i.abs_diff(j) > p {
                    prop_assert_eq!(x[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn power_scales_with_frequency(omega in 0.05f64..20.0, factor in 0.1f64..10.0, p in 0usize..9) {
        let a = x_matrix_power(&BasisSpec::new(omega, 8).unwrap(), p);
        let b = x_matrix_power(&BasisSpec::new(omega * factor, 8).unwrap(), p);
        let expected = a * factor.powf(-(p as f64) / 2.0);
        prop_assert!((b - &expected).amax() <= 1e-12 * expected.amax().max(1.0));
    }

    #[test]
    fn hamiltonian_symmetric_with_matching_trace(v in general_sextic(), omega in 0.1f64..5.0, sigma in -1.0f64..1.0, n in 1usize..20) {
        let basis = BasisSpec::shifted(omega, sigma, n).unwrap();
        let h = build_hamiltonian(&v, &basis);
        prop_assert_eq!(h.entries(), &h.entries().transpose());
        let diag = trace_diagonal(&v, &basis);
        prop_assert!((h.trace() - diag).abs() <= 1e-10 * diag.abs().max(1.0));
    }

    #[test]
    fn eigenvalues_sum_to_trace(v in even_quartic(), omega in 0.1f64..5.0, n in 1usize..30) {
        let basis = BasisSpec::new(omega, n).unwrap();
        let h = build_hamiltonian(&v, &basis);
        let dec = eigendecompose(&h, &basis).unwrap();
        let sum: f64 = dec.energies().iter().sum();
        prop_assert!((sum - h.trace()).abs() <= 1e-10 * h.trace().abs().max(1.0));
        prop_assert!(dec.energies().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn trace_invariant_under_rotation(n in 2usize..20, seed in any::<u64>()) {
        let basis = BasisSpec::new(1.0, n).unwrap();
        let rotation = eigendecompose(&random_symmetric(n, seed), &basis).unwrap();
        let h = random_symmetric(n, seed.wrapping_add(1));
        let d = rotation.vectors();
        let rotated = d * h.entries() * d.transpose();
        prop_assert!((rotated.trace() - h.trace()).abs() <= 1e-12 * n as f64);
    }

    #[test]
    fn projection_is_isometric(n in 1usize..24, seed in any::<u64>()) {
        let basis = BasisSpec::new(1.0, n).unwrap();
        let dec = eigendecompose(&random_symmetric(n, seed), &basis).unwrap();
        let mut rng = StdRng::seed_from_u64(seed ^ 0x9e37_79b9);
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = project_to_eigenbasis(&c, &dec).unwrap();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((norm(&a) - norm(&c)).abs() <= 1e-14 * norm(&c).max(1.0));
    }

    #[test]
    fn closed_coefficients_match_quadrature(m in 0.05f64..5.0, omega in 0.05f64..5.0, n in 1usize..24) {
        let basis = BasisSpec::new(omega, n).unwrap();
        let closed = gaussian_coefficients_closed(m, &basis).unwrap();
        let quad = gaussian_coefficients_quadrature(m, &basis).unwrap();
        for (a, b) in closed.iter().zip(&quad) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
        let total: f64 = closed.iter().map(|c| c * c).sum();
        prop_assert!(total <= 1.0 + 1e-12);
    }

    #[test]
    fn series_even_in_time(v in even_quartic(), m in 0.1f64..2.0, n in 2usize..16, t in 0.0f64..50.0) {
        let dec = solve_spectrum(&v, n, OmegaMode::pms_numeric(), SigmaMode::default()).unwrap();
        let state = EvolutionState::gaussian(&dec, m).unwrap();
        let s = x2_series(&state, &[-t, t]).unwrap();
        prop_assert!((s.x2[0] - s.x2[1]).abs() <= 1e-14 * s.x2[1].abs().max(1.0));
    }

    #[test]
    fn observable_consistency(v in even_quartic(), m in 0.1f64..2.0, n in 2usize..16, t in 0.0f64..50.0) {
        let dec = solve_spectrum(&v, n, OmegaMode::pms_numeric(), SigmaMode::default()).unwrap();
        let state = EvolutionState::gaussian(&dec, m).unwrap();
        let times = [0.0, t];
        let x1 = observable_series(&state, &times, 1).unwrap();
        prop_assert!(x1.values.iter().all(|x| x.abs() <= 1e-12));
        let x2 = observable_series(&state, &times, 2).unwrap();
        prop_assert_eq!(&x2.values, &x2_series(&state, &times).unwrap().x2);
        let expected: f64 = state.a().iter().zip(dec.energies()).map(|(a, e)| a * a * e).sum();
        prop_assert!(x2.energy.iter().all(|e| *e == expected));
    }
}
