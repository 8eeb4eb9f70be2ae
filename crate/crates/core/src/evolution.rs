//! Time evolution by the method of stationary states.
//!
//! The initial state is expanded over the basis (`c_n`), rotated into the
//! approximate eigenbasis (`a_n = sum_l d_{nl} c_l`), and every expectation
//! value becomes a finite cosine sum over the Bohr frequencies
//! `omega_{nl} = E_n - E_l`:
//!
//! ```text
//! <x^k>(t) = sum_{n,l} a_n a_l X_{nl} cos(omega_{nl} t),   X = d (x^k) d^T
//! ```
//!
//! Everything is real; phases only enter through the cosines.

use nalgebra::{Complex, DMatrix, DVector};

use crate::basis::{x_matrix_power, BasisSpec};
use crate::error::{Error, Result};
use crate::oracle::{quadrature_overlaps, validate_times};
use crate::spectrum::SpectralDecomposition;

/// `<x^2>`, norm and energy sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    pub x2: Vec<f64>,
    pub norm: Vec<f64>,
    pub energy: Vec<f64>,
}

impl ObservableSeries {
    /// `<x^2>^{1/2}` per sample.
    pub fn x2_rms(&self) -> Vec<f64> {
        self.x2.iter().map(|v| v.sqrt()).collect()
    }
}

/// `<x^k>` with norm and energy, as produced by [`observable_series`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationSeries {
    pub power: usize,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub norm: Vec<f64>,
    pub energy: Vec<f64>,
}

fn check_width(m: f64) -> Result<()> {
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Gaussian width parameter must be positive, got {m}"
        )));
    }
    Ok(())
}

/// Basis coefficients of `(m/pi)^{1/4} exp(-m x^2 / 2)` in closed form.
///
/// Odd coefficients vanish. For the even ones, the Hermite expansion with the
/// Gaussian moments `Gamma(l - k + 1/2)` leaves a binomial sum over `k` that
/// collapses to
///
/// ```text
/// c_{2l} = (4 m omega / (m + omega)^2)^{1/4} sqrt((2l)!) / (2^l l!) rho^l,
/// rho = (omega - m) / (omega + m),
/// ```
///
/// evaluated here by the ratio `c_{2l} / c_{2l-2}` so no factorial is formed.
pub fn gaussian_coefficients_closed(m: f64, basis: &BasisSpec) -> Result<Vec<f64>> {
    check_width(m)?;
    if basis.sigma() != 0.0 {
        return Err(Error::Unsupported(
            "closed-form overlaps need a basis centered at the origin; use the quadrature path"
                .into(),
        ));
    }
    let omega = basis.omega();
    let rho = (omega - m) / (omega + m);
    let mut c = vec![0.0; basis.n_basis()];
    let mut value = (4.0 * m * omega / ((m + omega) * (m + omega))).powf(0.25);
    for (l, slot) in c.iter_mut().step_by(2).enumerate() {
        if l > 0 {
            let two_l = 2.0 * l as f64;
            value *= rho * (two_l * (two_l - 1.0)).sqrt() / two_l;
        }
        *slot = value;
    }
    Ok(c)
}

/// Basis coefficients of the Gaussian by Gauss-Hermite quadrature; works for
/// shifted bases.
pub fn gaussian_coefficients_quadrature(m: f64, basis: &BasisSpec) -> Result<Vec<f64>> {
    quadrature_overlaps(m, basis)
}

/// `1 - sum_{n<N} c_n^2` for the Gaussian, i.e. the squared norm lost to
/// truncation. For a centered basis it is summed from the closed-form tail
/// `sum_{n>=N} c_n^2`, which keeps it accurate far below machine epsilon.
pub fn completeness_deficit(m: f64, basis: &BasisSpec) -> Result<f64> {
    check_width(m)?;
    if basis.sigma() != 0.0 {
        let c = gaussian_coefficients_quadrature(m, basis)?;
        return Ok(1.0 - c.iter().map(|x| x * x).sum::<f64>());
    }
    let omega = basis.omega();
    let rho_sq = ((omega - m) / (omega + m)).powi(2);
    let mut term = (4.0 * m * omega / ((m + omega) * (m + omega))).sqrt();
    let mut l = 0usize;
    while 2 * l < basis.n_basis() {
        l += 1;
        let two_l = 2.0 * l as f64;
        term *= rho_sq * (two_l - 1.0) / two_l;
    }
    let mut tail = 0.0;
    for _ in 0..10_000_000 {
        if term == 0.0 || term <= 1e-17 * tail {
            break;
        }
        tail += term;
        l += 1;
        let two_l = 2.0 * l as f64;
        term *= rho_sq * (two_l - 1.0) / two_l;
    }
    Ok(tail)
}

/// `a_n = sum_l d_{nl} c_l`. Since `d` is orthogonal this is the inverse
/// change of coordinates, and `|a| = |c|`.
pub fn project_to_eigenbasis(c: &[f64], dec: &SpectralDecomposition) -> Result<Vec<f64>> {
    if c.len() != dec.dim() {
        return Err(Error::DimensionMismatch {
            expected: dec.dim(),
            got: c.len(),
        });
    }
    let a = dec.vectors() * DVector::from_column_slice(c);
    Ok(a.iter().copied().collect())
}

/// Initial state expressed in the basis and in the approximate eigenbasis.
#[derive(Debug, Clone)]
pub struct EvolutionState<'a> {
    c: Vec<f64>,
    a: Vec<f64>,
    decomposition: &'a SpectralDecomposition,
    m_init: f64,
}

impl<'a> EvolutionState<'a> {
    /// The Gaussian `(m/pi)^{1/4} exp(-m x^2/2)`; closed-form coefficients
    /// for a centered basis, quadrature otherwise.
    pub fn gaussian(decomposition: &'a SpectralDecomposition, m_init: f64) -> Result<Self> {
        let basis = decomposition.basis();
        let c = if basis.sigma() == 0.0 {
            gaussian_coefficients_closed(m_init, basis)?
        } else {
            gaussian_coefficients_quadrature(m_init, basis)?
        };
        let a = project_to_eigenbasis(&c, decomposition)?;
        Ok(Self {
            c,
            a,
            decomposition,
            m_init,
        })
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn decomposition(&self) -> &SpectralDecomposition {
        self.decomposition
    }

    pub fn m_init(&self) -> f64 {
        self.m_init
    }

    /// `sum_n a_n^2`.
    pub fn norm(&self) -> f64 {
        self.a.iter().map(|x| x * x).sum()
    }

    /// `<H> = sum_n a_n^2 E_n`, constant in time.
    pub fn energy(&self) -> f64 {
        self.a
            .iter()
            .zip(self.decomposition.energies())
            .map(|(a, e)| a * a * e)
            .sum()
    }

    pub fn completeness_deficit(&self) -> Result<f64> {
        completeness_deficit(self.m_init, self.decomposition.basis())
    }

    /// `Psi(x, t) = sum_n a_n exp(-i E_n t) psi_n(x)`, for inspection only.
    pub fn wavefunction_at(&self, x: f64, t: f64) -> Complex<f64> {
        let dec = self.decomposition;
        let phi = DVector::from_vec(dec.basis().functions_at(x));
        let psi = dec.vectors() * phi;
        self.a
            .iter()
            .zip(dec.energies())
            .zip(psi.iter())
            .map(|((a, e), p)| Complex::from_polar(a * p, -e * t))
            .sum()
    }

    /// Sum of `a_n a_l X_{nl} cos(omega_{nl} t)` over all pairs.
    fn cosine_sum(&self, eigen_matrix: &DMatrix<f64>, t: f64) -> f64 {
        let e = self.decomposition.energies();
        let n = self.a.len();
        let mut total = 0.0;
        for i in 0..n {
            total += self.a[i] * self.a[i] * eigen_matrix[(i, i)];
            for j in i + 1..n {
                total +=
                    2.0 * self.a[i] * self.a[j] * eigen_matrix[(i, j)] * ((e[i] - e[j]) * t).cos();
            }
        }
        total
    }

    /// `d (x^k) d^T`.
    fn eigenbasis_power(&self, k: usize) -> DMatrix<f64> {
        let d = self.decomposition.vectors();
        d * x_matrix_power(self.decomposition.basis(), k) * d.transpose()
    }
}

/// `<x^2>(t)` at each time, with the constant norm and energy attached.
pub fn x2_series(state: &EvolutionState<'_>, times: &[f64]) -> Result<ObservableSeries> {
    let series = observable_series(state, times, 2)?;
    Ok(ObservableSeries {
        times: series.times,
        x2: series.values,
        norm: series.norm,
        energy: series.energy,
    })
}

/// `<x^k>(t)` with the same cosine-sum structure as [`x2_series`].
pub fn observable_series(
    state: &EvolutionState<'_>,
    times: &[f64],
    k: usize,
) -> Result<ExpectationSeries> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("non-finite sample time".into()));
    }
    let eigen_matrix = state.eigenbasis_power(k);
    let norm = state.norm();
    let energy = state.energy();
    Ok(ExpectationSeries {
        power: k,
        times: times.to_vec(),
        values: times
            .iter()
            .map(|&t| state.cosine_sum(&eigen_matrix, t))
            .collect(),
        norm: vec![norm; times.len()],
        energy: vec![energy; times.len()],
    })
}

/// Uniform time grid `start, start + step, ...` up to and including `stop`
/// (within a relative tolerance of `1e-9` steps).
pub fn time_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0 && start.is_finite() && stop.is_finite() && stop >= start) {
        return Err(Error::InvalidParameter(format!(
            "invalid time grid {start}:{stop}:{step}"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    let times: Vec<f64> = (0..=count).map(|i| start + i as f64 * step).collect();
    validate_times(&times)?;
    Ok(times)
}

/// Exact `<x^2>(t)` of `(m/pi)^{1/4} exp(-m x^2/2)` evolving under
/// `p^2/2 + omega^2 x^2/2`.
pub fn breathing_x2(m: f64, omega: f64, t: f64) -> f64 {
    let (s, c) = (omega * t).sin_cos();
    c * c / (2.0 * m) + m * s * s / (2.0 * omega * omega)
}
