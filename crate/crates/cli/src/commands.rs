use std::path::PathBuf;

use pmsqm::basis::{build_hamiltonian, PolynomialPotential};
use pmsqm::evolution::{x2_series, EvolutionState, ObservableSeries};
use pmsqm::oracle::{crank_nicolson_evolve, grid_eigensolve};
use pmsqm::pms::{omega_pms_closed, optimize_pms_numeric, trace_scan, PmsResult};
use pmsqm::spectrum::{
    choose_basis, convergence_study, eigendecompose, OmegaMode, SigmaMode, SpectralDecomposition,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{csv, float_row, fmt_float, write_atomic};

/// Resolved inputs shared by all commands.
pub struct Run {
    pub config: RunConfig,
    pub potential: PolynomialPotential,
    pub n_basis: Vec<usize>,
    pub omega_mode: OmegaMode,
    pub sigma_mode: SigmaMode,
}

impl Run {
    pub fn new(config: RunConfig) -> Result<Self, CliError> {
        let potential = config.potential.build()?;
        let n_basis = config.n_basis()?;
        let sigma_mode = config.sigma_mode()?;
        let omega_mode =
            config
                .omega_choice()?
                .mode(&potential, sigma_mode, config.basis.omega_bounds);
        Ok(Self {
            config,
            potential,
            n_basis,
            omega_mode,
            sigma_mode,
        })
    }

    fn solve(&self, n: usize) -> Result<(SpectralDecomposition, Option<PmsResult>), CliError> {
        let (basis, pms) = choose_basis(&self.potential, n, self.omega_mode, self.sigma_mode)?;
        let dec = eigendecompose(&build_hamiltonian(&self.potential, &basis), &basis)?;
        Ok((dec, pms))
    }

    fn evolve(&self, n: usize, times: &[f64]) -> Result<(ObservableSeries, f64), CliError> {
        let m = self.config.m_init(&self.potential)?;
        let (dec, _) = self.solve(n)?;
        let state = EvolutionState::gaussian(&dec, m)?;
        let deficit = if dec.basis().sigma() == 0.0 {
            state.completeness_deficit()?
        } else {
            1.0 - state.c().iter().map(|c| c * c).sum::<f64>()
        };
        Ok((x2_series(&state, times)?, deficit))
    }

    fn out_dir(&self) -> PathBuf {
        self.config.output.dir.clone()
    }
}

#[derive(Serialize)]
struct PotentialReport {
    kinetic: f64,
    coefficients: Vec<f64>,
}

#[derive(Serialize)]
struct SpectrumRun {
    n_basis: usize,
    omega: f64,
    sigma: f64,
    omega_method: &'static str,
    trace: f64,
    energies: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eigenvectors: Option<Vec<Vec<f64>>>,
}

#[derive(Serialize)]
struct ConvergenceReport {
    reference_n: usize,
    n_basis: Vec<usize>,
    /// `|E_i(N) - E_i(reference_n)|` for the lowest levels.
    errors: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct SpectrumReport {
    potential: PotentialReport,
    runs: Vec<SpectrumRun>,
    #[serde(skip_serializing_if = "Option::is_none")]
    convergence: Option<ConvergenceReport>,
}

fn potential_report(v: &PolynomialPotential) -> PotentialReport {
    PotentialReport {
        kinetic: v.kinetic_coeff(),
        coefficients: v.coeffs().to_vec(),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    text
}

fn omega_method(mode: OmegaMode, pms: &Option<PmsResult>) -> &'static str {
    match (mode, pms) {
        (_, Some(p)) => p.method.as_str(),
        (OmegaMode::Fixed(_), None) => "fixed",
        _ => "unknown",
    }
}

/// Sizes used for the convergence metadata: the requested ones, padded with
/// `N/2` and `3N/4` when only one size was asked for.
fn convergence_sizes(n_basis: &[usize]) -> Vec<usize> {
    let mut sizes = n_basis.to_vec();
    if let [n] = n_basis {
        sizes.extend([n / 2, 3 * n / 4].into_iter().filter(|k| *k >= 1));
    }
    sizes.sort_unstable();
    sizes.dedup();
    sizes
}

pub fn spectrum(run: &Run) -> Result<Vec<PathBuf>, CliError> {
    let mut runs = Vec::new();
    let mut rows = Vec::new();
    for &n in &run.n_basis {
        let (dec, pms) = run.solve(n)?;
        let basis = dec.basis();
        for (level, e) in dec.energies().iter().enumerate() {
            let mut row = vec![n.to_string(), level.to_string()];
            row.extend(float_row(&[basis.omega(), basis.sigma(), *e]));
            rows.push(row);
        }
        let vectors = dec.vectors();
        runs.push(SpectrumRun {
            n_basis: n,
            omega: basis.omega(),
            sigma: basis.sigma(),
            omega_method: omega_method(run.omega_mode, &pms),
            trace: dec.energies().iter().sum(),
            energies: dec.energies().to_vec(),
            eigenvectors: run.config.basis.eigenvectors.then(|| {
                (0..vectors.nrows())
                    .map(|i| vectors.row(i).iter().copied().collect())
                    .collect()
            }),
        });
    }
    let convergence = if run.sigma_mode == SigmaMode::Fixed(0.0) {
        let sizes = convergence_sizes(&run.n_basis);
        (sizes.len() > 1)
            .then(|| convergence_study(&run.potential, &sizes, run.omega_mode))
            .transpose()?
            .map(|table| ConvergenceReport {
                reference_n: *sizes.last().expect("non-empty"),
                n_basis: table.rows.iter().map(|r| r.n_basis).collect(),
                errors: table.rows.iter().map(|r| r.errors.clone()).collect(),
            })
    } else {
        None
    };
    let report = SpectrumReport {
        potential: potential_report(&run.potential),
        runs,
        convergence,
    };
    let dir = run.out_dir();
    Ok(vec![
        write_atomic(&dir, "spectrum.json", &to_json(&report))?,
        write_atomic(
            &dir,
            "spectrum.csv",
            &csv(&["n_basis", "level", "omega", "sigma", "energy"], &rows),
        )?,
    ])
}

const EVOLVE_HEADER: [&str; 5] = ["t", "x2_mean", "x2_rms", "norm", "energy"];

fn series_csv(series: &ObservableSeries) -> String {
    let rms = series.x2_rms();
    let rows: Vec<Vec<String>> = (0..series.times.len())
        .map(|i| {
            float_row(&[
                series.times[i],
                series.x2[i],
                rms[i],
                series.norm[i],
                series.energy[i],
            ])
        })
        .collect();
    csv(&EVOLVE_HEADER, &rows)
}

pub fn evolve(run: &Run) -> Result<Vec<PathBuf>, CliError> {
    let times = run.config.evolution.times.samples()?;
    let dir = run.out_dir();
    let mut written = Vec::new();
    for &n in &run.n_basis {
        let (series, deficit) = run.evolve(n, &times)?;
        eprintln!("N={n}: completeness deficit {}", fmt_float(deficit));
        written.push(write_atomic(
            &dir,
            &format!("evolve_N{n}.csv"),
            &series_csv(&series),
        )?);
    }
    if run.config.evolution.oracle {
        let m = run.config.m_init(&run.potential)?;
        let grid = run.config.oracle.grid()?;
        let series = crank_nicolson_evolve(&run.potential, m, &grid, &times)?;
        written.push(write_atomic(
            &dir,
            "evolve_oracle.csv",
            &series_csv(&series),
        )?);
    }
    Ok(written)
}

pub fn pms_scan(run: &Run) -> Result<Vec<PathBuf>, CliError> {
    let grid = run.config.scan.grid()?;
    let mut columns = Vec::new();
    for &n in &run.n_basis {
        let scan = trace_scan(&run.potential, n, &grid)?;
        let best = scan
            .iter()
            .min_by(|a, b| a.trace_over_n.total_cmp(&b.trace_over_n))
            .expect("non-empty grid");
        eprintln!(
            "N={n}: grid minimum of T/N at omega = {}",
            fmt_float(best.omega)
        );
        columns.push(scan);
    }
    let mut header = vec!["omega".to_string()];
    header.extend(run.n_basis.iter().map(|n| format!("trace_over_n_N{n}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = grid
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let mut row = vec![w];
            row.extend(columns.iter().map(|c| c[i].trace_over_n));
            float_row(&row)
        })
        .collect();
    Ok(vec![write_atomic(
        &run.out_dir(),
        "pms_scan.csv",
        &csv(&header, &rows),
    )?])
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn from_result(
        name: &'static str,
        result: Result<(bool, String), CliError>,
    ) -> Result<Self, CliError> {
        match result {
            Ok((passed, detail)) => Ok(Self {
                name,
                passed,
                detail,
            }),
            Err(CliError::Numerical(e)) => Ok(Self {
                name,
                passed: false,
                detail: e.to_string(),
            }),
            Err(other) => Err(other),
        }
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn range(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    let min = values.iter().cloned().fold(f64::MAX, f64::min);
    max - min
}

fn check_pms(run: &Run) -> Result<(bool, String), CliError> {
    let Some((m_sq, g)) = run.potential.as_double_well() else {
        let mut parts = Vec::new();
        for &n in &run.n_basis {
            let pms =
                optimize_pms_numeric(&run.potential, n, run.config.basis.omega_bounds, false)?;
            parts.push(format!("N={n}: omega={:.10}", pms.omega));
        }
        return Ok((true, format!("numeric only: {}", parts.join(", "))));
    };
    let mut worst = 0.0f64;
    for &n in &run.n_basis {
        let closed = omega_pms_closed(n, m_sq, g)?;
        let numeric =
            optimize_pms_numeric(&run.potential, n, run.config.basis.omega_bounds, false)?;
        worst = worst.max((closed - numeric.omega).abs() / closed);
    }
    Ok((
        worst <= 1e-8,
        format!("max relative difference {worst:.2e} (limit 1e-8)"),
    ))
}

fn check_spectrum(run: &Run) -> Result<(bool, String), CliError> {
    let v = &run.config.validate;
    let (dec, _) = run.solve(v.spectrum_n)?;
    let levels = dec.dim().min(4);
    let grid = grid_eigensolve(&run.potential, &run.config.oracle.grid()?, levels)?;
    let rel: Vec<f64> = dec.energies()[..levels]
        .iter()
        .zip(&grid.energies)
        .map(|(e, r)| ((e - r) / r.abs().max(f64::MIN_POSITIVE)).abs())
        .collect();
    let worst = rel.iter().cloned().fold(0.0, f64::max);
    Ok((
        worst <= v.spectrum_tol,
        format!(
            "N={}: max relative deviation {worst:.2e} over {levels} levels (limit {:.0e})",
            v.spectrum_n, v.spectrum_tol
        ),
    ))
}

fn conservation_ok(series: &ObservableSeries) -> bool {
    let e0 = series.energy[0];
    series.norm.iter().all(|n| *n == series.norm[0])
        && series
            .energy
            .iter()
            .all(|e| (e - e0).abs() <= 1e-10 * e0.abs().max(f64::MIN_POSITIVE))
}

struct DynamicsChecks {
    convergence: Result<(bool, String), CliError>,
    oracle: Result<(bool, String), CliError>,
    conservation: Result<(bool, String), CliError>,
}

fn check_dynamics(run: &Run) -> Result<DynamicsChecks, CliError> {
    let v = &run.config.validate;
    let times = run.config.evolution.times.samples()?;
    let (small, large) = v.convergence_pair;
    let (a, _) = run.evolve(small, &times)?;
    let (b, _) = run.evolve(large, &times)?;
    let (ra, rb) = (a.x2_rms(), b.x2_rms());
    let scale = range(&rb).max(f64::MIN_POSITIVE);
    let fraction = max_abs_diff(&ra, &rb) / scale;
    let convergence = Ok((
        fraction < v.dynamics_tol,
        format!(
            "N={small} vs N={large}: max deviation {:.3e} = {fraction:.2e} of range (limit {})",
            max_abs_diff(&ra, &rb),
            v.dynamics_tol
        ),
    ));
    let oracle = (|| {
        let m = run.config.m_init(&run.potential)?;
        let reference =
            crank_nicolson_evolve(&run.potential, m, &run.config.oracle.grid()?, &times)?.x2_rms();
        let fraction = max_abs_diff(&rb, &reference) / range(&reference).max(f64::MIN_POSITIVE);
        Ok((
            fraction < v.dynamics_tol,
            format!(
                "N={large} vs grid propagator: {fraction:.2e} of range (limit {})",
                v.dynamics_tol
            ),
        ))
    })();
    let conserved = conservation_ok(&a) && conservation_ok(&b);
    let conservation = Ok((
        conserved,
        format!("norm constant and energy drift <= 1e-10 relative: {conserved}"),
    ));
    Ok(DynamicsChecks {
        convergence,
        oracle,
        conservation,
    })
}

fn check_parity(run: &Run) -> Result<(bool, String), CliError> {
    if !run.potential.is_even() || run.sigma_mode != SigmaMode::Fixed(0.0) {
        return Ok((true, "skipped: potential or basis not symmetric".into()));
    }
    let m = run.config.m_init(&run.potential)?;
    let mut worst = 0.0f64;
    let mut deficits = Vec::new();
    for &n in &run.n_basis {
        let (dec, _) = run.solve(n)?;
        let state = EvolutionState::gaussian(&dec, m)?;
        for c in state.c().iter().skip(1).step_by(2) {
            worst = worst.max(c.abs());
        }
        deficits.push(format!("{:.3e}", state.completeness_deficit()?));
    }
    Ok((
        worst <= 1e-12,
        format!(
            "max |c_odd| = {worst:.2e}; completeness deficits {}",
            deficits.join(", ")
        ),
    ))
}

pub fn validate(run: &Run) -> Result<(Vec<Check>, Vec<PathBuf>), CliError> {
    let mut checks = vec![
        Check::from_result("pms-consistency", check_pms(run))?,
        Check::from_result("spectrum-vs-grid", check_spectrum(run))?,
    ];
    match check_dynamics(run) {
        Ok(d) => {
            checks.push(Check::from_result("self-convergence", d.convergence)?);
            checks.push(Check::from_result("dynamics-vs-grid", d.oracle)?);
            checks.push(Check::from_result("conservation", d.conservation)?);
        }
        Err(e) => checks.push(Check::from_result("dynamics", Err(e))?),
    }
    checks.push(Check::from_result("parity", check_parity(run))?);
    let path = write_atomic(&run.out_dir(), "validate.json", &to_json(&checks))?;
    Ok((checks, vec![path]))
}
