//! Diagonalization of the truncated Hamiltonian and convergence studies.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::basis::{build_hamiltonian, BasisSpec, HamiltonianMatrix, PolynomialPotential};
use crate::error::{Error, Result};
use crate::pms::{optimize_pms_numeric, pms_closed_for, PmsResult, DEFAULT_OMEGA_BOUNDS};

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;
const SIGN_THRESHOLD: f64 = 1e-8;
const ORTHONORMALITY_TOL: f64 = 1e-10;
const RECONSTRUCTION_TOL: f64 = 1e-9;

/// Eigenpairs of a truncated Hamiltonian.
///
/// Row `n` of [`vectors`](Self::vectors) holds the components `d_{nk}` of
/// the `n`-th eigenfunction over the basis functions `phi_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    basis: BasisSpec,
    energies: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    /// Ascending energies `E_0 <= E_1 <= ...`.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `d^T diag(E) d`, which should reproduce the Hamiltonian.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            self.energies[i] * self.vectors[(i, j)]
        });
        self.vectors.transpose() * scaled
    }

    /// Value of the `n`-th approximate eigenfunction at `x`.
    pub fn eigenfunction_at(&self, n: usize, x: f64) -> f64 {
        let phi = self.basis.functions_at(x);
        self.vectors
            .row(n)
            .iter()
            .zip(&phi)
            .map(|(d, p)| d * p)
            .sum()
    }
}

/// Full eigendecomposition of `h`, sorted ascending, with each eigenvector's
/// first component above `1e-8` in magnitude made positive.
pub fn eigendecompose(h: &HamiltonianMatrix, basis: &BasisSpec) -> Result<SpectralDecomposition> {
    let dim = h.dim();
    if dim != basis.n_basis() {
        return Err(Error::DimensionMismatch {
            expected: basis.n_basis(),
            got: dim,
        });
    }
    let eigen = SymmetricEigen::try_new(h.entries().clone(), EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or(Error::EigenFailure(dim))?;

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[a].total_cmp(&eigen.eigenvalues[b]));

    let energies: Vec<f64> = order.iter().map(|&i| eigen.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(dim, dim);
    for (row, &col) in order.iter().enumerate() {
        let v = eigen.eigenvectors.column(col);
        let sign = v
            .iter()
            .find(|c| c.abs() > SIGN_THRESHOLD)
            .map_or(1.0, |c| c.signum());
        for k in 0..dim {
            vectors[(row, k)] = sign * v[k];
        }
    }

    let dec = SpectralDecomposition {
        basis: *basis,
        energies,
        vectors,
    };

    let gram = &dec.vectors * dec.vectors.transpose();
    let ortho = (gram - DMatrix::<f64>::identity(dim, dim)).amax();
    if ortho > ORTHONORMALITY_TOL {
        return Err(Error::NumericalCheck(format!(
            "eigenvectors deviate from orthonormality by {ortho:e}"
        )));
    }
    let scale = h.entries().amax().max(f64::MIN_POSITIVE);
    let residual = (dec.reconstruct() - h.entries()).amax();
    if residual > RECONSTRUCTION_TOL * scale {
        return Err(Error::NumericalCheck(format!(
            "reconstruction residual {residual:e} exceeds {:e}",
            RECONSTRUCTION_TOL * scale
        )));
    }
    Ok(dec)
}

/// How the basis frequency is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmegaMode {
    /// Closed-form PMS frequency; the potential must be an even quartic.
    PmsClosed,
    /// Numeric PMS search within the given bounds.
    PmsNumeric {
        bounds: (f64, f64),
    },
    Fixed(f64),
}

impl OmegaMode {
    pub fn pms_numeric() -> Self {
        OmegaMode::PmsNumeric {
            bounds: DEFAULT_OMEGA_BOUNDS,
        }
    }
}

/// How the basis center is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaMode {
    Fixed(f64),
    /// Optimized jointly with the frequency; requires [`OmegaMode::PmsNumeric`].
    Pms,
}

impl Default for SigmaMode {
    fn default() -> Self {
        SigmaMode::Fixed(0.0)
    }
}

/// Resolves the basis for a run; the PMS result is returned when one was
/// computed.
pub fn choose_basis(
    potential: &PolynomialPotential,
    n_basis: usize,
    omega_mode: OmegaMode,
    sigma_mode: SigmaMode,
) -> Result<(BasisSpec, Option<PmsResult>)> {
    match (omega_mode, sigma_mode) {
        (OmegaMode::Fixed(omega), SigmaMode::Fixed(sigma)) => {
            Ok((BasisSpec::shifted(omega, sigma, n_basis)?, None))
        }
        (OmegaMode::PmsClosed, SigmaMode::Fixed(sigma)) => {
            if sigma != 0.0 {
                return Err(Error::Unsupported(
                    "closed-form PMS frequency assumes a basis centered at the origin".into(),
                ));
            }
            let pms = pms_closed_for(potential, n_basis)?;
            Ok((pms.basis(n_basis)?, Some(pms)))
        }
        (OmegaMode::PmsNumeric { bounds }, SigmaMode::Fixed(sigma)) => {
            if sigma != 0.0 {
                return Err(Error::Unsupported(
                    "numeric 1d PMS with a fixed off-origin center is not supported".into(),
                ));
            }
            let pms = optimize_pms_numeric(potential, n_basis, bounds, false)?;
            Ok((pms.basis(n_basis)?, Some(pms)))
        }
        (OmegaMode::PmsNumeric { bounds }, SigmaMode::Pms) => {
            let pms = optimize_pms_numeric(potential, n_basis, bounds, true)?;
            Ok((pms.basis(n_basis)?, Some(pms)))
        }
        (_, SigmaMode::Pms) => Err(Error::Unsupported(
            "optimizing the basis center requires the numeric PMS frequency mode".into(),
        )),
    }
}

/// Basis selection, Hamiltonian construction and diagonalization in one go.
pub fn solve_spectrum(
    potential: &PolynomialPotential,
    n_basis: usize,
    omega_mode: OmegaMode,
    sigma_mode: SigmaMode,
) -> Result<SpectralDecomposition> {
    let (basis, _) = choose_basis(potential, n_basis, omega_mode, sigma_mode)?;
    eigendecompose(&build_hamiltonian(potential, &basis), &basis)
}

/// Number of levels tracked by [`convergence_study`].
pub const TRACKED_LEVELS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n_basis: usize,
    pub omega: f64,
    /// Lowest `min(N, 4)` energies.
    pub energies: Vec<f64>,
    /// `|E_i(N) - E_i(N_max)|` per tracked level.
    pub errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Whether errors never grow with `N` by more than `noise_floor`,
    /// level by level.
    pub fn is_non_increasing(&self, noise_floor: f64) -> bool {
        self.rows.windows(2).all(|w| {
            w[0].errors
                .iter()
                .zip(&w[1].errors)
                .all(|(prev, next)| *next <= prev + noise_floor)
        })
    }
}

/// Energies for each truncation order in `n_list` (ascending), with errors
/// measured against the largest order.
pub fn convergence_study(
    potential: &PolynomialPotential,
    n_list: &[usize],
    omega_mode: OmegaMode,
) -> Result<ConvergenceTable> {
    if n_list.is_empty() {
        return Err(Error::InvalidParameter(
            "empty list of truncation orders".into(),
        ));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(format!(
            "truncation orders must be strictly ascending, got {n_list:?}"
        )));
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let dec = solve_spectrum(potential, n, omega_mode, SigmaMode::default())?;
        rows.push(ConvergenceRow {
            n_basis: n,
            omega: dec.basis().omega(),
            energies: dec
                .energies()
                .iter()
                .take(TRACKED_LEVELS)
                .copied()
                .collect(),
            errors: Vec::new(),
        });
    }
    let reference = rows.last().expect("non-empty").energies.clone();
    for row in &mut rows {
        row.errors = row
            .energies
            .iter()
            .zip(&reference)
            .map(|(e, r)| (e - r).abs())
            .collect();
    }
    Ok(ConvergenceTable { rows })
}
