//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line.
//!
//! Run with `cargo test -p pmsqm --test acceptance -- --nocapture --test-threads=1`.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use pmsqm::basis::{
    slow_roll_parameters, x_matrix_power, x_power_element_closed, BasisSpec, PolynomialPotential,
};
use pmsqm::evolution::{
    breathing_x2, completeness_deficit, gaussian_coefficients_closed, time_grid, x2_series,
    EvolutionState, ObservableSeries,
};
use pmsqm::oracle::{crank_nicolson_evolve, grid_eigensolve, GridSpec};
use pmsqm::pms::{omega_pms_closed, optimize_pms_numeric, trace_scan};
use pmsqm::spectrum::{solve_spectrum, OmegaMode, SigmaMode};

fn report(id: &str, title: &str, pass: bool, detail: String) {
    println!(
        "[{}] {id} {title}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{id} {title}: {detail}");
}

fn slow_roll() -> PolynomialPotential {
    PolynomialPotential::slow_roll(5.0, 0.01).unwrap()
}

fn slow_roll_width() -> f64 {
    slow_roll_parameters(5.0, 0.01).0.sqrt()
}

fn sci(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn ac1_harmonic_exactness() {
    let start = Instant::now();
    let mut worst_energy = 0.0f64;
    let mut worst_vector = 0.0f64;
    for omega in [1.0, 0.7] {
        let v = PolynomialPotential::harmonic(omega).unwrap();
        for n in [4, 16, 64] {
            let dec = solve_spectrum(&v, n, OmegaMode::Fixed(omega), SigmaMode::default()).unwrap();
            for (k, e) in dec.energies().iter().enumerate() {
                worst_energy = worst_energy.max((e - omega * (k as f64 + 0.5)).abs());
            }
            worst_vector =
                worst_vector.max((dec.vectors() - DMatrix::<f64>::identity(n, n)).amax());
        }
    }
    let elapsed = start.elapsed();
    report(
        "AC1",
        "harmonic exactness",
        worst_energy <= 1e-12 && worst_vector <= 1e-12 && elapsed < Duration::from_secs(1),
        format!("max |E_n - w(n+1/2)| = {worst_energy:.2e}, max |d - I| = {worst_vector:.2e}, {elapsed:?}"),
    );
}

#[test]
fn ac2_matrix_element_oracle_equivalence() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for omega in [0.2026, 1.0, 3.7] {
        for n in 1..=20 {
            let basis = BasisSpec::new(omega, n).unwrap();
            for p in 0..=8 {
                let ladder = x_matrix_power(&basis, p);
                let scale = ladder.amax().max(f64::MIN_POSITIVE);
                for i in 0..n {
                    for j in 0..n {
                        let closed = x_power_element_closed(&basis, i, j, p);
                        worst = worst.max((closed - ladder[(i, j)]).abs() / scale);
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    report(
        "AC2",
        "closed-form x^p elements match ladder construction",
        worst <= 1e-12 && elapsed < Duration::from_secs(1),
        format!("max scaled deviation {worst:.2e} over p <= 8, N <= 20, {elapsed:?}"),
    );
}

#[test]
fn ac3_pms_consistency() {
    let v = slow_roll();
    let (m_sq, g) = slow_roll_parameters(5.0, 0.01);
    let grid: Vec<f64> = (0..=400).map(|i| 0.05 + 0.95 * i as f64 / 400.0).collect();
    let mut worst_rel = 0.0f64;
    let mut minima = Vec::new();
    for n in [6, 8, 10] {
        let closed = omega_pms_closed(n, m_sq, g).unwrap();
        let numeric = optimize_pms_numeric(&v, n, (0.01, 5.0), false)
            .unwrap()
            .omega;
        worst_rel = worst_rel.max((closed - numeric).abs() / closed);

        let scan = trace_scan(&v, n, &grid).unwrap();
        let slopes: Vec<f64> = scan
            .windows(2)
            .map(|w| w[1].trace_over_n - w[0].trace_over_n)
            .collect();
        let sign_changes = slopes
            .windows(2)
            .filter(|w| w[0].signum() != w[1].signum())
            .count();
        let interior_min = slopes[0] < 0.0 && *slopes.last().unwrap() > 0.0;
        minima.push((n, sign_changes, interior_min));
    }
    let shapes_ok = minima
        .iter()
        .all(|&(_, changes, interior)| changes == 1 && interior);
    report(
        "AC3",
        "PMS closed form vs numeric, single trace minimum",
        worst_rel <= 1e-8 && shapes_ok,
        format!("max relative omega difference {worst_rel:.2e}; (N, slope sign changes, interior) = {minima:?}"),
    );
}

#[test]
fn ac4_spectrum_vs_oracle() {
    let start = Instant::now();
    let v = slow_roll();
    let dec = solve_spectrum(&v, 10, OmegaMode::PmsClosed, SigmaMode::default()).unwrap();
    let grid = grid_eigensolve(&v, &GridSpec::slow_roll_default(), 4).unwrap();
    let rel: Vec<f64> = dec.energies()[..4]
        .iter()
        .zip(&grid.energies)
        .map(|(e, r)| ((e - r) / r).abs())
        .collect();
    let worst = rel.iter().cloned().fold(0.0, f64::max);
    let elapsed = start.elapsed();
    report(
        "AC4",
        "slow-roll N=10 lowest four energies vs finite-difference oracle",
        worst <= 1e-6 && elapsed < Duration::from_secs(10),
        format!(
            "relative deviations {} (limit 1e-6), {elapsed:?}",
            sci(&rel)
        ),
    );
}

#[test]
fn ac5_dynamics_reproduction() {
    let start = Instant::now();
    let v = slow_roll();
    let m = slow_roll_width();
    let times = time_grid(0.0, 30.0, 0.05).unwrap();
    let oracle = crank_nicolson_evolve(&v, m, &GridSpec::slow_roll_default(), &times).unwrap();
    let reference = oracle.x2_rms();
    let range = reference.iter().cloned().fold(f64::MIN, f64::max)
        - reference.iter().cloned().fold(f64::MAX, f64::min);

    let mut deviations = Vec::new();
    let mut initial = Vec::new();
    for n in [6, 8, 10] {
        let dec = solve_spectrum(&v, n, OmegaMode::PmsClosed, SigmaMode::default()).unwrap();
        let state = EvolutionState::gaussian(&dec, m).unwrap();
        let rms = x2_series(&state, &times).unwrap().x2_rms();
        initial.push(rms[0]);
        deviations.push(max_abs_diff(&rms, &reference));
    }
    let elapsed = start.elapsed();
    let initial_ok = initial.iter().all(|r| (r - 1.5651).abs() <= 1e-3);
    let monotone = deviations.windows(2).all(|w| w[1] <= w[0]);
    let fraction = deviations[2] / range;
    report(
        "AC5",
        "slow-roll <x^2>^(1/2)(t) vs Crank-Nicolson oracle",
        initial_ok && monotone && fraction < 0.01 && elapsed < Duration::from_secs(120),
        format!(
            "t=0 values {initial:.5?}; max deviations N=6,8,10 {deviations:.4?}; N=10 deviation / range = {fraction:.4} (limit 0.01); {elapsed:?}"
        ),
    );
}

fn constant_columns(series: &ObservableSeries) -> (bool, f64) {
    let norm_exact = series.norm.iter().all(|n| *n == series.norm[0]);
    let e0 = series.energy[0];
    let drift = series
        .energy
        .iter()
        .map(|e| (e - e0).abs() / e0.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    (norm_exact, drift)
}

#[test]
fn ac6_conservation() {
    let v = slow_roll();
    let m = slow_roll_width();
    let times = time_grid(0.0, 30.0, 0.05).unwrap();
    let mut all_exact = true;
    let mut worst_drift = 0.0f64;
    for n in [6, 8, 10, 14] {
        let dec = solve_spectrum(&v, n, OmegaMode::PmsClosed, SigmaMode::default()).unwrap();
        let series = x2_series(&EvolutionState::gaussian(&dec, m).unwrap(), &times).unwrap();
        let (exact, drift) = constant_columns(&series);
        all_exact &= exact;
        worst_drift = worst_drift.max(drift);
    }

    let omega = 1.0;
    let width = 0.5;
    let harmonic = PolynomialPotential::harmonic(omega).unwrap();
    let dec = solve_spectrum(
        &harmonic,
        48,
        OmegaMode::pms_numeric(),
        SigmaMode::default(),
    )
    .unwrap();
    let period = std::f64::consts::PI / omega;
    let times = time_grid(0.0, period, period / 200.0).unwrap();
    let series = x2_series(&EvolutionState::gaussian(&dec, width).unwrap(), &times).unwrap();
    let (exact, drift) = constant_columns(&series);
    all_exact &= exact;
    worst_drift = worst_drift.max(drift);
    let breathing = series
        .times
        .iter()
        .zip(&series.x2)
        .map(|(t, x2)| (x2 - breathing_x2(width, omega, *t)).abs())
        .fold(0.0, f64::max);

    report(
        "AC6",
        "conservation and harmonic breathing",
        all_exact && worst_drift <= 1e-10 && breathing <= 1e-8,
        format!("norm columns exactly constant: {all_exact}; max relative energy drift {worst_drift:.2e}; breathing max deviation {breathing:.2e}"),
    );
}

#[test]
fn ac7_quartic_convergence() {
    let q = PolynomialPotential::quartic_benchmark(1000.0).unwrap();
    let reference = solve_spectrum(&q, 100, OmegaMode::PmsClosed, SigmaMode::default())
        .unwrap()
        .energies()[0];
    let errors: Vec<f64> = [20, 40, 60, 80]
        .iter()
        .map(|&n| {
            let e0 = solve_spectrum(&q, n, OmegaMode::PmsClosed, SigmaMode::default())
                .unwrap()
                .energies()[0];
            (e0 - reference).abs()
        })
        .collect();
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[1] / w[0]).collect();
    let trend_ok = errors.windows(2).all(|w| w[1] < w[0]) && ratios.iter().all(|r| *r < 0.5);

    let grid = grid_eigensolve(&q, &GridSpec::new(2.5, 8000, 0.01).unwrap(), 1).unwrap();
    let oracle_rel = ((reference - grid.energies[0]) / grid.energies[0]).abs();

    report(
        "AC7",
        "quartic g=1000 ground-state convergence",
        trend_ok && oracle_rel <= 1e-8,
        format!(
            "E0(100) = {reference:.15}; |E0(N) - E0(100)| for N=20,40,60,80: {}; ratios {ratios:.3?}; grid oracle relative difference {oracle_rel:.2e}",
            sci(&errors)
        ),
    );
}

#[test]
fn ac8_parity_and_completeness() {
    let v = slow_roll();
    let m = slow_roll_width();
    let mut worst_odd = 0.0f64;
    let mut deficits = Vec::new();
    for n in [6, 8, 10, 14] {
        let dec = solve_spectrum(&v, n, OmegaMode::PmsClosed, SigmaMode::default()).unwrap();
        let c = gaussian_coefficients_closed(m, dec.basis()).unwrap();
        for odd in c.iter().skip(1).step_by(2) {
            worst_odd = worst_odd.max(odd.abs());
        }
        deficits.push(completeness_deficit(m, dec.basis()).unwrap());
    }
    let decreasing = deficits.windows(2).all(|w| w[1] < w[0]);
    report(
        "AC8",
        "parity of c_n and completeness deficit",
        worst_odd <= 1e-12 && decreasing,
        format!(
            "max |c_odd| = {worst_odd:.2e}; deficits N=6,8,10,14: {}",
            sci(&deficits)
        ),
    );
}
