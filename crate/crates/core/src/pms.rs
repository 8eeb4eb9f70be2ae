//! Choice of the basis frequency (and optionally the center) by minimal
//! sensitivity of the truncated trace `T_N`.
//!
//! For `p^2/2 - m^2 x^2/2 + g x^4` the trace is
//!
//! ```text
//! (4/N) T_N = N (omega - m^2/omega) + g (1 + 2 N^2) / omega^2
//! ```
//!
//! and its stationary point is the positive root of
//! `omega^3 + m^2 omega = 2 g (1 + 2 N^2) / N`. Other potentials go through
//! the numeric optimizer, which works on the analytic gradient of the trace.

use crate::basis::{trace_diagonal, trace_gradient, BasisSpec, PolynomialPotential};
use crate::error::{Error, Result};
use crate::numeric::{brent_root, nelder_mead_2d};

/// Frequency window searched when the caller does not supply one.
pub const DEFAULT_OMEGA_BOUNDS: (f64, f64) = (1e-4, 1e4);

const SCAN_POINTS: usize = 400;
const ROOT_REL_TOL: f64 = 1e-13;
const POLISH_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmsMethod {
    ClosedForm,
    Numeric1d,
    Numeric2d,
}

impl PmsMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            PmsMethod::ClosedForm => "closed-form",
            PmsMethod::Numeric1d => "numeric-1d",
            PmsMethod::Numeric2d => "numeric-2d",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PmsResult {
    pub omega: f64,
    pub sigma: f64,
    pub trace_value: f64,
    pub method: PmsMethod,
    /// Free-form notes, e.g. when several minima were found.
    pub diagnostics: Vec<String>,
}

impl PmsResult {
    pub fn basis(&self, n_basis: usize) -> Result<BasisSpec> {
        BasisSpec::shifted(self.omega, self.sigma, n_basis)
    }
}

/// Positive root of `omega^3 + m_sq omega - 2 g (1 + 2N^2)/N = 0`.
///
/// Uses the Cardano expression
/// `omega = X^{1/3}/3 - m^2/X^{1/3}` with
/// `X = (3/N) [9 g (1+2N^2) + sqrt(3) (N^2 m^6 + 27 g^2 (1+2N^2)^2)^{1/2}]`
/// when the square root is real, and the trigonometric form of the largest
/// root otherwise (only possible for `m_sq < 0`). One Newton step polishes
/// the result.
pub fn omega_pms_closed(n_basis: usize, m_sq: f64, g: f64) -> Result<f64> {
    if n_basis == 0 {
        return Err(Error::InvalidParameter("n_basis must be at least 1".into()));
    }
    if !(g.is_finite() && g > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "quartic coupling must be positive, got {g}"
        )));
    }
    if !m_sq.is_finite() {
        return Err(Error::InvalidParameter(format!("non-finite m^2 {m_sq}")));
    }
    let n = n_basis as f64;
    let s = 1.0 + 2.0 * n * n;
    let c = 2.0 * g * s / n;
    let inner = n * n * m_sq.powi(3) + 27.0 * g * g * s * s;
    let mut omega = if inner >= 0.0 {
        let x = 3.0 / n * (9.0 * g * s + 3f64.sqrt() * inner.sqrt());
        let cbrt = x.cbrt();
        cbrt / 3.0 - m_sq / cbrt
    } else {
        // three real roots; the largest is the only positive one
        let amp = 2.0 * (-m_sq / 3.0).sqrt();
        let arg = (1.5 * c / m_sq * (-3.0 / m_sq).sqrt()).clamp(-1.0, 1.0);
        amp * ((-arg).acos() / 3.0).cos()
    };
    let slope = 3.0 * omega * omega + m_sq;
    if slope > 0.0 {
        omega -= (omega * omega * omega + m_sq * omega - c) / slope;
    }
    if omega.is_nan() || omega <= 0.0 {
        return Err(Error::NumericalCheck(format!(
            "closed-form frequency is not positive ({omega})"
        )));
    }
    Ok(omega)
}

/// Closed-form PMS for potentials of the form
/// `kinetic p^2 + v0 + v2 x^2 + v4 x^4`, basis centered at the origin.
pub fn pms_closed_for(potential: &PolynomialPotential, n_basis: usize) -> Result<PmsResult> {
    let (m_sq, g) = potential.as_double_well().ok_or_else(|| {
        Error::InvalidModel(format!(
            "potential of degree {} with coefficients {:?}",
            potential.degree(),
            potential.coeffs()
        ))
    })?;
    let omega = omega_pms_closed(n_basis, m_sq, g)?;
    let basis = BasisSpec::new(omega, n_basis)?;
    Ok(PmsResult {
        omega,
        sigma: 0.0,
        trace_value: trace_diagonal(potential, &basis),
        method: PmsMethod::ClosedForm,
        diagnostics: Vec::new(),
    })
}

fn slope_omega(potential: &PolynomialPotential, n_basis: usize, omega: f64, sigma: f64) -> f64 {
    let basis = BasisSpec::shifted(omega, sigma, n_basis).expect("positive frequency");
    trace_gradient(potential, &basis).0
}

fn trace_at(potential: &PolynomialPotential, n_basis: usize, omega: f64, sigma: f64) -> f64 {
    let basis = BasisSpec::shifted(omega, sigma, n_basis).expect("positive frequency");
    trace_diagonal(potential, &basis)
}

fn check_bounds(bounds: (f64, f64)) -> Result<()> {
    let (lo, hi) = bounds;
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
        return Err(Error::InvalidParameter(format!(
            "frequency bounds must satisfy 0 < lower < upper, got [{lo}, {hi}]"
        )));
    }
    Ok(())
}

/// Minima of `T_N(omega)` at fixed `sigma`: sign changes `- -> +` of the
/// analytic slope on a log-spaced grid, each refined with Brent's method.
/// Returns the lowest-trace minimum and a note when several exist.
fn minimize_omega(
    potential: &PolynomialPotential,
    n_basis: usize,
    sigma: f64,
    bounds: (f64, f64),
) -> Result<(f64, Vec<String>)> {
    let (lo, hi) = bounds;
    let ratio = (hi / lo).ln();
    let grid: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| lo * (ratio * i as f64 / (SCAN_POINTS - 1) as f64).exp())
        .collect();
    let slopes: Vec<f64> = grid
        .iter()
        .map(|&w| slope_omega(potential, n_basis, w, sigma))
        .collect();

    let mut minima = Vec::new();
    for i in 0..SCAN_POINTS - 1 {
        if slopes[i] < 0.0 && slopes[i + 1] >= 0.0 {
            let root = brent_root(
                |w| slope_omega(potential, n_basis, w, sigma),
                grid[i],
                grid[i + 1],
                ROOT_REL_TOL,
                200,
            )
            .expect("bracketed");
            minima.push(root);
        }
    }
    let mut diagnostics = Vec::new();
    if minima.is_empty() {
        return Err(Error::NoStationaryPoint {
            lower: lo,
            upper: hi,
            slope_lower: slopes[0],
            slope_upper: slopes[SCAN_POINTS - 1],
        });
    }
    if minima.len() > 1 {
        diagnostics.push(format!(
            "{} local minima of the trace in omega at {:?}; lowest trace selected",
            minima.len(),
            minima
        ));
    }
    let best = minima
        .into_iter()
        .min_by(|&a, &b| {
            trace_at(potential, n_basis, a, sigma)
                .total_cmp(&trace_at(potential, n_basis, b, sigma))
        })
        .expect("non-empty");
    Ok((best, diagnostics))
}

/// Minimum of `T_N(sigma)` at fixed `omega`, searched outward from `start`.
fn minimize_sigma(
    potential: &PolynomialPotential,
    n_basis: usize,
    omega: f64,
    start: f64,
) -> Option<f64> {
    let slope = |s: f64| {
        let basis = BasisSpec::shifted(omega, s, n_basis).expect("positive frequency");
        trace_gradient(potential, &basis).1
    };
    let s0 = slope(start);
    if s0 == 0.0 {
        return Some(start);
    }
    // walk downhill until the slope turns
    let dir = -s0.signum();
    let mut step = 0.05 / omega.sqrt();
    let mut prev = start;
    for _ in 0..200 {
        let next = prev + dir * step;
        if slope(next).signum() != s0.signum() {
            let (a, b) = if dir > 0.0 {
                (prev, next)
            } else {
                (next, prev)
            };
            return brent_root(slope, a, b, ROOT_REL_TOL, 200);
        }
        prev = next;
        step *= 1.5;
    }
    None
}

/// Locates the PMS frequency numerically within `bounds`; with
/// `optimize_sigma` the basis center is optimized as well.
pub fn optimize_pms_numeric(
    potential: &PolynomialPotential,
    n_basis: usize,
    bounds: (f64, f64),
    optimize_sigma: bool,
) -> Result<PmsResult> {
    if n_basis == 0 {
        return Err(Error::InvalidParameter("n_basis must be at least 1".into()));
    }
    check_bounds(bounds)?;
    let (omega, mut diagnostics) = minimize_omega(potential, n_basis, 0.0, bounds)?;
    if !optimize_sigma {
        return Ok(PmsResult {
            omega,
            sigma: 0.0,
            trace_value: trace_at(potential, n_basis, omega, 0.0),
            method: PmsMethod::Numeric1d,
            diagnostics,
        });
    }

    // Simplex over (ln omega, sigma), warm-started from the 1d solution.
    let objective = |p: [f64; 2]| {
        let w = p[0].exp();
        if w < bounds.0 || w > bounds.1 {
            return f64::INFINITY;
        }
        trace_at(potential, n_basis, w, p[1])
    };
    let length = 1.0 / omega.sqrt();
    let start = nelder_mead_2d(
        objective,
        [omega.ln(), 0.0],
        [0.1, 0.1 * length],
        1e-10,
        4000,
    );
    let mut omega = start[0].exp();
    let mut sigma = start[1];

    let mut converged = false;
    for _ in 0..200 {
        let (next_omega, _) = minimize_omega(potential, n_basis, sigma, bounds)?;
        let next_sigma =
            minimize_sigma(potential, n_basis, next_omega, sigma).ok_or_else(|| {
                Error::NumericalCheck("no minimum of the trace along the basis center".into())
            })?;
        let d_omega = (next_omega - omega).abs() / omega;
        let d_sigma = (next_sigma - sigma).abs() / length;
        omega = next_omega;
        sigma = next_sigma;
        if d_omega < POLISH_TOL && d_sigma < POLISH_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        diagnostics.push("coordinate polish stopped before reaching tolerance".into());
    }
    Ok(PmsResult {
        omega,
        sigma,
        trace_value: trace_at(potential, n_basis, omega, sigma),
        method: PmsMethod::Numeric2d,
        diagnostics,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub omega: f64,
    pub trace_over_n: f64,
}

/// `T_N / N` sampled on a frequency grid.
pub fn trace_scan(
    potential: &PolynomialPotential,
    n_basis: usize,
    omega_grid: &[f64],
) -> Result<Vec<TraceSample>> {
    omega_grid
        .iter()
        .map(|&omega| {
            let basis = BasisSpec::new(omega, n_basis)?;
            Ok(TraceSample {
                omega,
                trace_over_n: trace_diagonal(potential, &basis) / n_basis as f64,
            })
        })
        .collect()
}
