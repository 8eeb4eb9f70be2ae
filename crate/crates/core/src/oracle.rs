//! Grid-based reference solutions, independent of the oscillator basis.
//!
//! * [`grid_eigensolve`]: second-order central differences on `[-L, L]` with
//!   Dirichlet walls. The tridiagonal eigenproblem is solved by Sturm-sequence
//!   bisection plus inverse iteration on three successively halved grids;
//!   reported energies are Richardson-extrapolated.
//! * [`crank_nicolson_evolve`]: unitary Crank-Nicolson propagation of the
//!   initial Gaussian on the same grid, run at `dt` and `dt/2`.
//! * [`quadrature_overlaps`]: Gauss-Hermite overlaps of the Gaussian with the
//!   basis functions.

use nalgebra::Complex;

use crate::basis::{hermite_functions, BasisSpec, PolynomialPotential};
use crate::error::{Error, Result};
use crate::evolution::ObservableSeries;

type C64 = Complex<f64>;

/// Relative change allowed between the `h` and `h/2` energies.
pub const RICHARDSON_TOL: f64 = 1e-7;
/// Allowed change of `<x^2>` samples between the `dt` and `dt/2` runs.
pub const STEP_HALVING_TOL: f64 = 1e-6;
/// `|psi|` at the outermost grid points relative to its maximum.
pub const BOUNDARY_TOL: f64 = 1e-8;
pub const NORM_TOL: f64 = 1e-10;
pub const ENERGY_DRIFT_TOL: f64 = 1e-8;
/// Largest allowed change of any overlap when the node count doubles.
pub const QUADRATURE_TOL: f64 = 1e-12;

/// Uniform grid on `[-half_width, half_width]` with `n_points` interior
/// points and a time step for the propagator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    half_width: f64,
    n_points: usize,
    dt: f64,
}

impl GridSpec {
    pub fn new(half_width: f64, n_points: usize, dt: f64) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid half width must be positive, got {half_width}"
            )));
        }
        if n_points < 3 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 3 points, got {n_points}"
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive, got {dt}"
            )));
        }
        Ok(Self {
            half_width,
            n_points,
            dt,
        })
    }

    /// Defaults for the slow-roll double well (`a = 5`). At `dt = 0.005` the
    /// step-halving check on `<x^2>` over `t <= 30` fails (change ~5e-6), so
    /// the default step is 0.002.
    pub fn slow_roll_default() -> Self {
        Self {
            half_width: 15.0,
            n_points: 3000,
            dt: 0.002,
        }
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n_points + 1) as f64
    }

    /// Same interval and time step with half the spacing.
    pub fn refined(&self) -> Self {
        Self {
            n_points: 2 * self.n_points + 1,
            ..*self
        }
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n_points)
            .map(|i| -self.half_width + (i + 1) as f64 * h)
            .collect()
    }
}

/// `kinetic * p^2 + V(x)` as seen by the grid methods.
pub trait GridPotential {
    fn kinetic_coeff(&self) -> f64;
    fn potential_at(&self, x: f64) -> f64;
}

impl GridPotential for PolynomialPotential {
    fn kinetic_coeff(&self) -> f64 {
        PolynomialPotential::kinetic_coeff(self)
    }

    fn potential_at(&self, x: f64) -> f64 {
        self.value(x)
    }
}

/// `kinetic * p^2` with no potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeParticle {
    pub kinetic: f64,
}

impl GridPotential for FreeParticle {
    fn kinetic_coeff(&self) -> f64 {
        self.kinetic
    }

    fn potential_at(&self, _x: f64) -> f64 {
        0.0
    }
}

/// Symmetric tridiagonal finite-difference Hamiltonian.
struct Tridiagonal {
    diag: Vec<f64>,
    off: f64,
}

impl Tridiagonal {
    fn finite_difference<P: GridPotential + ?Sized>(potential: &P, grid: &GridSpec) -> Self {
        let h = grid.spacing();
        let k = potential.kinetic_coeff() / (h * h);
        let diag = grid
            .points()
            .into_iter()
            .map(|x| 2.0 * k + potential.potential_at(x))
            .collect();
        Self { diag, off: -k }
    }

    fn len(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues below `lambda`.
    fn count_below(&self, lambda: f64) -> usize {
        let off_sq = self.off * self.off;
        let mut count = 0;
        let mut q = 1.0;
        for (i, &d) in self.diag.iter().enumerate() {
            q = if i == 0 {
                d - lambda
            } else {
                d - lambda - off_sq / q
            };
            if q == 0.0 {
                q = -f64::EPSILON * (d.abs() + lambda.abs() + f64::MIN_POSITIVE);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let r = 2.0 * self.off.abs();
        let lo = self.diag.iter().fold(f64::INFINITY, |a, &d| a.min(d - r));
        let hi = self
            .diag
            .iter()
            .fold(f64::NEG_INFINITY, |a, &d| a.max(d + r));
        (lo, hi)
    }

    /// The `index`-th smallest eigenvalue by bisection.
    fn eigenvalue(&self, index: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Solves `(T - shift) y = rhs` by Gaussian elimination with partial
    /// pivoting.
    fn solve_shifted(&self, shift: f64, rhs: &[f64]) -> Vec<f64> {
        let n = self.len();
        // rows stored as (sub, diag, sup, sup2) after pivoting
        let mut a: Vec<f64> = self.diag.iter().map(|d| d - shift).collect();
        let mut b = vec![self.off; n]; // super-diagonal
        let mut c = vec![0.0; n]; // second super-diagonal from pivoting
        let mut y = rhs.to_vec();
        let tiny = f64::EPSILON * self.gershgorin().1.abs().max(1.0);
        for i in 0..n - 1 {
            let sub = self.off;
            if sub.abs() > a[i].abs() {
                // swap rows i and i+1
                let (ai, bi, ci) = (a[i], b[i], c[i]);
                a[i] = sub;
                b[i] = a[i + 1];
                c[i] = if i + 1 < n - 1 { b[i + 1] } else { 0.0 };
                let factor = ai / sub;
                a[i + 1] = bi - factor * b[i];
                if i + 1 < n - 1 {
                    b[i + 1] = ci - factor * c[i];
                }
                y.swap(i, i + 1);
                y[i + 1] -= factor * y[i];
            } else {
                if a[i] == 0.0 {
                    a[i] = tiny;
                }
                let factor = sub / a[i];
                a[i + 1] -= factor * b[i];
                if i + 1 < n - 1 {
                    b[i + 1] -= factor * c[i];
                }
                y[i + 1] -= factor * y[i];
            }
        }
        if a[n - 1] == 0.0 {
            a[n - 1] = tiny;
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut acc = y[i];
            if i + 1 < n {
                acc -= b[i] * x[i + 1];
            }
            if i + 2 < n {
                acc -= c[i] * x[i + 2];
            }
            x[i] = acc / a[i];
        }
        x
    }

    fn apply(&self, v: &[C64]) -> Vec<C64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut acc = v[i] * self.diag[i];
                if i > 0 {
                    acc += v[i - 1] * self.off;
                }
                if i + 1 < n {
                    acc += v[i + 1] * self.off;
                }
                acc
            })
            .collect()
    }
}

/// Lowest eigenpairs on the grid. Vectors are normalized so that
/// `h * sum psi_i^2 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpectrum {
    pub grid: GridSpec,
    /// Richardson-extrapolated energies `(4 E_{h/4} - E_{h/2}) / 3`.
    pub energies: Vec<f64>,
    /// Raw energies at spacing `h`.
    pub coarse_energies: Vec<f64>,
    /// Raw energies at spacing `h/4`.
    pub fine_energies: Vec<f64>,
    /// Points of the finest grid.
    pub points: Vec<f64>,
    /// Eigenvectors on the finest grid.
    pub vectors: Vec<Vec<f64>>,
}

impl GridSpectrum {
    /// Trapezoidal inner product on the finest grid (walls contribute zero).
    pub fn inner(&self, i: usize, j: usize) -> f64 {
        let h = self.grid.refined().refined().spacing();
        h * self.vectors[i]
            .iter()
            .zip(&self.vectors[j])
            .map(|(a, b)| a * b)
            .sum::<f64>()
    }
}

fn grid_eigenpairs(t: &Tridiagonal, count: usize, h: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = t.len();
    let energies: Vec<f64> = (0..count).map(|k| t.eigenvalue(k)).collect();
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(count);
    for &e in &energies {
        let perturb = 1e-10 * e.abs().max(t.off.abs() * 1e-6).max(1e-300);
        let mut v: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.01 * ((i * 7919 % 101) as f64))
            .collect();
        for _ in 0..4 {
            v = t.solve_shifted(e + perturb, &v);
            for prev in &vectors {
                let overlap: f64 = prev.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() * h;
                for (vi, pi) in v.iter_mut().zip(prev) {
                    *vi -= overlap * pi;
                }
            }
            let norm = (v.iter().map(|x| x * x).sum::<f64>() * h).sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
        }
        // sign: first significant entry positive
        let max = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-8 * max) {
            if *first < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        vectors.push(v);
    }
    (energies, vectors)
}

fn check_boundary(psi_abs: impl Iterator<Item = f64> + Clone, n: usize) -> Result<()> {
    let max = psi_abs.clone().fold(0.0f64, f64::max);
    let edge = psi_abs
        .enumerate()
        .filter(|(i, _)| *i == 0 || *i == n - 1)
        .map(|(_, v)| v)
        .fold(0.0f64, f64::max);
    let ratio = if max > 0.0 { edge / max } else { 0.0 };
    if ratio > BOUNDARY_TOL {
        return Err(Error::BoundaryLeak { ratio });
    }
    Ok(())
}

/// Lowest `count` eigenpairs of the finite-difference Hamiltonian.
///
/// Energies are computed with spacings `h`, `h/2` and `h/4`. The two
/// Richardson estimates `(4 E_{h/2} - E_h)/3` and `(4 E_{h/4} - E_{h/2})/3`
/// must agree to [`RICHARDSON_TOL`] (relative to the larger of `|E|` and the
/// spread of the requested levels); the finer one is reported.
pub fn grid_eigensolve<P: GridPotential + ?Sized>(
    potential: &P,
    grid: &GridSpec,
    count: usize,
) -> Result<GridSpectrum> {
    if count == 0 || count > grid.n_points() / 4 {
        return Err(Error::InvalidParameter(format!(
            "requested {count} states on {} points; at most n_points/4 are resolvable",
            grid.n_points()
        )));
    }
    let middle = grid.refined();
    let finest = middle.refined();
    let fine = Tridiagonal::finite_difference(potential, &finest);
    let (fine_energies, vectors) = grid_eigenpairs(&fine, count, finest.spacing());
    for v in &vectors {
        check_boundary(v.iter().map(|x| x.abs()), v.len())?;
    }
    let coarse = Tridiagonal::finite_difference(potential, grid);
    let mid = Tridiagonal::finite_difference(potential, &middle);
    let coarse_energies: Vec<f64> = (0..count).map(|k| coarse.eigenvalue(k)).collect();
    let mid_energies: Vec<f64> = (0..count).map(|k| mid.eigenvalue(k)).collect();

    let extrapolate = |c: &[f64], f: &[f64]| -> Vec<f64> {
        c.iter().zip(f).map(|(c, f)| (4.0 * f - c) / 3.0).collect()
    };
    let first = extrapolate(&coarse_energies, &mid_energies);
    let energies = extrapolate(&mid_energies, &fine_energies);

    let spread = energies[count - 1] - energies[0];
    for (k, (a, b)) in first.iter().zip(&energies).enumerate() {
        let scale = b.abs().max(spread).max(f64::MIN_POSITIVE);
        let change = (b - a).abs() / scale;
        if change >= RICHARDSON_TOL {
            return Err(Error::Resolution(format!(
                "level {k}: halving the spacing changed the energy by {change:e} (relative), limit {RICHARDSON_TOL:e}"
            )));
        }
    }
    Ok(GridSpectrum {
        grid: *grid,
        energies,
        coarse_energies,
        fine_energies,
        points: finest.points(),
        vectors,
    })
}

/// `(I + i tau H)` factorized for repeated Thomas solves.
struct CrankNicolsonStep {
    tau: f64,
    modified_sup: Vec<C64>,
    pivots: Vec<C64>,
}

impl CrankNicolsonStep {
    fn new(h: &Tridiagonal, dt: f64) -> Self {
        let tau = 0.5 * dt;
        let n = h.len();
        let off = C64::new(0.0, tau * h.off);
        let mut modified_sup = vec![C64::new(0.0, 0.0); n];
        let mut pivots = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            let diag = C64::new(1.0, tau * h.diag[i]);
            let pivot = if i == 0 {
                diag
            } else {
                diag - off * modified_sup[i - 1]
            };
            pivots[i] = pivot;
            modified_sup[i] = off / pivot;
        }
        Self {
            tau,
            modified_sup,
            pivots,
        }
    }

    fn advance(&self, h: &Tridiagonal, psi: &mut [C64]) {
        let n = psi.len();
        let i_tau = C64::new(0.0, self.tau);
        let h_psi = h.apply(psi);
        let off = C64::new(0.0, self.tau * h.off);
        let mut rhs: Vec<C64> = psi
            .iter()
            .zip(&h_psi)
            .map(|(p, hp)| p - i_tau * hp)
            .collect();
        // forward sweep
        rhs[0] /= self.pivots[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - off * rhs[i - 1]) / self.pivots[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] = rhs[i] - self.modified_sup[i] * rhs[i + 1];
        }
        psi.copy_from_slice(&rhs);
    }
}

struct RawSeries {
    x2: Vec<f64>,
    norm: Vec<f64>,
    energy: Vec<f64>,
}

fn propagate(
    hamiltonian: &Tridiagonal,
    points: &[f64],
    h: f64,
    initial: &[C64],
    dt: f64,
    times: &[f64],
) -> Result<RawSeries> {
    let step = CrankNicolsonStep::new(hamiltonian, dt);
    let mut psi = initial.to_vec();
    let mut now = 0.0;
    let mut out = RawSeries {
        x2: Vec::with_capacity(times.len()),
        norm: Vec::with_capacity(times.len()),
        energy: Vec::with_capacity(times.len()),
    };
    for &target in times {
        let remaining = target - now;
        let full_steps = ((remaining / dt) * (1.0 + 1e-12)).floor() as usize;
        for _ in 0..full_steps {
            step.advance(hamiltonian, &mut psi);
        }
        now += full_steps as f64 * dt;
        let rest = target - now;
        if rest > 1e-12 * dt.max(target.abs()) {
            CrankNicolsonStep::new(hamiltonian, rest).advance(hamiltonian, &mut psi);
        }
        now = target;

        check_boundary(psi.iter().map(|z| z.norm()), psi.len())?;
        let density: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
        let norm = h * density.iter().sum::<f64>();
        let x2 = h * density
            .iter()
            .zip(points)
            .map(|(d, x)| d * x * x)
            .sum::<f64>();
        let h_psi = hamiltonian.apply(&psi);
        let energy = h * psi
            .iter()
            .zip(&h_psi)
            .map(|(p, hp)| (p.conj() * hp).re)
            .sum::<f64>();
        out.x2.push(x2 / norm);
        out.norm.push(norm);
        out.energy.push(energy);
    }
    Ok(out)
}

/// Crank-Nicolson propagation of `(m/pi)^{1/4} exp(-m x^2 / 2)`.
///
/// On each spatial grid the run is repeated with `dt/2`; the samples of
/// `<x^2>` must agree to [`STEP_HALVING_TOL`] and are combined as
/// `(4 x2_{dt/2} - x2_dt) / 3`. The whole procedure is done on `grid` and on
/// [`GridSpec::refined`], and the two results are combined the same way to
/// cancel the `O(h^2)` spatial error. Norm and energy come from the finest
/// run. The Hamiltonian is offset by the initial energy so that the scheme's
/// phase error is measured from the center of the populated spectrum;
/// reported energies include the offset back.
pub fn crank_nicolson_evolve<P: GridPotential + ?Sized>(
    potential: &P,
    m_init: f64,
    grid: &GridSpec,
    times: &[f64],
) -> Result<ObservableSeries> {
    if !(m_init.is_finite() && m_init > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Gaussian width parameter must be positive, got {m_init}"
        )));
    }
    validate_times(times)?;
    if times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidParameter(
            "sample times must be non-negative".into(),
        ));
    }
    let coarse = evolve_on_grid(potential, m_init, grid, times)?;
    let fine = evolve_on_grid(potential, m_init, &grid.refined(), times)?;
    let x2 = coarse
        .x2
        .iter()
        .zip(&fine.x2)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect();
    Ok(ObservableSeries {
        times: times.to_vec(),
        x2,
        norm: fine.norm,
        energy: fine.energy,
    })
}

/// Time-extrapolated propagation on a single spatial grid.
fn evolve_on_grid<P: GridPotential + ?Sized>(
    potential: &P,
    m_init: f64,
    grid: &GridSpec,
    times: &[f64],
) -> Result<RawSeries> {
    let points = grid.points();
    let h = grid.spacing();
    let mut hamiltonian = Tridiagonal::finite_difference(potential, grid);

    let prefactor = (m_init / std::f64::consts::PI).powf(0.25);
    let mut initial: Vec<C64> = points
        .iter()
        .map(|&x| C64::new(prefactor * (-0.5 * m_init * x * x).exp(), 0.0))
        .collect();
    let norm0 = (h * initial.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
    initial.iter_mut().for_each(|z| *z /= norm0);
    check_boundary(initial.iter().map(|z| z.norm()), initial.len())?;

    let h_psi0 = hamiltonian.apply(&initial);
    let offset = h * initial
        .iter()
        .zip(&h_psi0)
        .map(|(p, hp)| (p.conj() * hp).re)
        .sum::<f64>();
    hamiltonian.diag.iter_mut().for_each(|d| *d -= offset);

    let coarse = propagate(&hamiltonian, &points, h, &initial, grid.dt(), times)?;
    let fine = propagate(&hamiltonian, &points, h, &initial, 0.5 * grid.dt(), times)?;

    let change = coarse
        .x2
        .iter()
        .zip(&fine.x2)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if change >= STEP_HALVING_TOL {
        return Err(Error::StepSize { change });
    }
    if let Some(bad) = fine.norm.iter().find(|n| (*n - 1.0).abs() > NORM_TOL) {
        return Err(Error::NumericalCheck(format!(
            "Crank-Nicolson norm drifted to {bad}"
        )));
    }
    let energy: Vec<f64> = fine.energy.iter().map(|e| e + offset).collect();
    let e0 = energy.first().copied().unwrap_or(offset);
    let drift = energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max);
    if drift > ENERGY_DRIFT_TOL * e0.abs().max(offset.abs()).max(f64::MIN_POSITIVE) {
        return Err(Error::NumericalCheck(format!(
            "Crank-Nicolson energy drifted by {drift:e}"
        )));
    }
    let x2 = coarse
        .x2
        .iter()
        .zip(&fine.x2)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect();
    Ok(RawSeries {
        x2,
        norm: fine.norm,
        energy,
    })
}

pub(crate) fn validate_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("non-finite sample time".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "sample times must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Gauss-Hermite nodes and weights for the weight `exp(-z^2)`, by Newton
/// iteration on the normalized Hermite recurrence.
pub fn gauss_hermite(count: usize) -> (Vec<f64>, Vec<f64>) {
    let n = count;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[0],
            3 => 1.91 * z - 0.91 * nodes[1],
            _ => 2.0 * z - nodes[i - 2],
        };
        let mut derivative = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            derivative = (2.0 * nf).sqrt() * p2;
            let previous = z;
            z = previous - p1 / derivative;
            if (z - previous).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        weights[i] = 2.0 / (derivative * derivative);
        weights[n - 1 - i] = weights[i];
    }
    (nodes, weights)
}

fn overlaps_with_nodes(m: f64, basis: &BasisSpec, count: usize) -> Vec<f64> {
    let omega = basis.omega();
    let alpha = basis.alpha();
    let sigma = basis.sigma();
    let n_basis = basis.n_basis();
    // phi_n(x) psi(x) carries the Gaussian exp(-s (x - center)^2 - shift)
    let s = 0.5 * (omega + m);
    let center = omega * sigma / (omega + m);
    let shift = omega * m * sigma * sigma / (2.0 * (omega + m));
    let scale = (m / std::f64::consts::PI).powf(0.25) * alpha.sqrt() * (-shift).exp() / s.sqrt();
    let (nodes, weights) = gauss_hermite(count);
    let mut out = vec![0.0; n_basis];
    for (&z, &w) in nodes.iter().zip(&weights) {
        let x = center + z / s.sqrt();
        let y = alpha * (x - sigma);
        for (acc, hn) in out.iter_mut().zip(hermite_functions(y, n_basis)) {
            *acc += w * hn;
        }
    }
    out.iter_mut().for_each(|c| *c *= scale);
    out
}

/// Overlaps `c_n = <phi_n | psi>` of the normalized Gaussian
/// `(m/pi)^{1/4} exp(-m x^2 / 2)` with every basis function. The node count
/// doubles until no overlap moves by more than [`QUADRATURE_TOL`].
pub fn quadrature_overlaps(m: f64, basis: &BasisSpec) -> Result<Vec<f64>> {
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Gaussian width parameter must be positive, got {m}"
        )));
    }
    let mut count = (basis.n_basis() / 2 + 8).max(16);
    let mut previous = overlaps_with_nodes(m, basis, count);
    loop {
        count *= 2;
        let next = overlaps_with_nodes(m, basis, count);
        let change = previous
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if change <= QUADRATURE_TOL {
            return Ok(next);
        }
        if count > 4096 {
            return Err(Error::NumericalCheck(format!(
                "Gauss-Hermite overlaps not stable at {count} nodes (change {change:e})"
            )));
        }
        previous = next;
    }
}

/// Single overlap `c_n`.
pub fn quadrature_overlap(m: f64, basis: &BasisSpec, n: usize) -> Result<f64> {
    let b = basis.with_n_basis(n + 1)?;
    Ok(quadrature_overlaps(m, &b)?[n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_spec_validation() {
        assert!(GridSpec::new(0.0, 100, 0.01).is_err());
        assert!(GridSpec::new(1.0, 2, 0.01).is_err());
        assert!(GridSpec::new(1.0, 100, 0.0).is_err());
        let g = GridSpec::new(1.0, 3, 0.1).unwrap();
        assert_eq!(g.points(), vec![-0.5, 0.0, 0.5]);
        assert_eq!(g.refined().n_points(), 7);
        assert_relative_eq!(g.refined().spacing(), 0.5 * g.spacing());
    }

    #[test]
    fn gauss_hermite_moments() {
        let (z, w) = gauss_hermite(20);
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert_relative_eq!(w.iter().sum::<f64>(), sqrt_pi, max_relative = 1e-14);
        let m2: f64 = z.iter().zip(&w).map(|(z, w)| w * z * z).sum();
        assert_relative_eq!(m2, sqrt_pi / 2.0, max_relative = 1e-13);
        let m8: f64 = z.iter().zip(&w).map(|(z, w)| w * z.powi(8)).sum();
        assert_relative_eq!(m8, 105.0 / 16.0 * sqrt_pi, max_relative = 1e-12);
    }

    #[test]
    fn tridiagonal_solver() {
        let t = Tridiagonal {
            diag: vec![2.0, -1.0, 0.5, 3.0, 1.0],
            off: 1.5,
        };
        let rhs = vec![1.0, 2.0, -1.0, 0.5, 0.3];
        let x = t.solve_shifted(0.2, &rhs);
        for i in 0..5 {
            let mut lhs = (t.diag[i] - 0.2) * x[i];
            if i > 0 {
                lhs += t.off * x[i - 1];
            }
            if i < 4 {
                lhs += t.off * x[i + 1];
            }
            assert_relative_eq!(lhs, rhs[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn sturm_count_matches_dense() {
        use nalgebra::DMatrix;
        let t = Tridiagonal {
            diag: vec![0.3, -1.0, 2.0, 0.7, 1.1, -0.4],
            off: 0.8,
        };
        let dense = DMatrix::from_fn(6, 6, |i, j| {
            if i == j {
                t.diag[i]
            } else if i.abs_diff(j) == 1 {
                t.off
            } else {
                0.0
            }
        });
        let mut eig: Vec<f64> = dense.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        for (k, e) in eig.iter().enumerate() {
            assert_relative_eq!(t.eigenvalue(k), *e, epsilon = 1e-13);
        }
    }

    #[test]
    fn harmonic_ground_state() {
        let v = PolynomialPotential::harmonic(1.0).unwrap();
        let grid = GridSpec::new(12.0, 2000, 0.01).unwrap();
        let levels = grid_eigensolve(&v, &grid, 3).unwrap();
        assert!((levels.energies[0] - 0.5).abs() < 1e-7);
        assert!((levels.energies[2] - 2.5).abs() < 1e-7);
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((levels.inner(i, j) - expected).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let v = PolynomialPotential::harmonic(1.0).unwrap();
        let grid = GridSpec::new(12.0, 40, 0.01).unwrap();
        assert!(matches!(
            grid_eigensolve(&v, &grid, 3),
            Err(Error::Resolution(_))
        ));
        assert!(grid_eigensolve(&v, &grid, 11).is_err());
    }

    #[test]
    fn narrow_box_leaks() {
        let v = PolynomialPotential::harmonic(1.0).unwrap();
        let grid = GridSpec::new(3.0, 4000, 0.01).unwrap();
        assert!(matches!(
            grid_eigensolve(&v, &grid, 2),
            Err(Error::BoundaryLeak { .. })
        ));
    }

    #[test]
    fn free_gaussian_spreading() {
        let free = FreeParticle { kinetic: 0.5 };
        let m = 1.0;
        let grid = GridSpec::new(15.0, 3000, 0.001).unwrap();
        let times: Vec<f64> = (0..=10).map(|i| 0.2 * i as f64).collect();
        let series = crank_nicolson_evolve(&free, m, &grid, &times).unwrap();
        for (t, x2) in series.times.iter().zip(&series.x2) {
            let exact = (1.0 + m * m * t * t) / (2.0 * m);
            assert!((x2 - exact).abs() < 1e-8, "t={t}: {x2} vs {exact}");
        }
        assert!(series.norm.iter().all(|n| (n - 1.0).abs() < 1e-10));
    }

    #[test]
    fn quadrature_known_overlaps() {
        let b = BasisSpec::new(0.8, 6).unwrap();
        let c = quadrature_overlaps(0.8, &b).unwrap();
        assert_relative_eq!(c[0], 1.0, epsilon = 1e-14);
        assert!(c[1..].iter().all(|x| x.abs() < 1e-14));

        let (m, omega) = (0.3, 1.7);
        let c0 = quadrature_overlap(m, &BasisSpec::new(omega, 4).unwrap(), 0).unwrap();
        let expected = (4.0 * m * omega / ((m + omega) * (m + omega))).powf(0.25);
        assert_relative_eq!(c0, expected, max_relative = 1e-13);
    }

    #[test]
    fn quadrature_coherent_state() {
        // displaced ground state: basis centered at sigma, Gaussian at 0, same width
        let (omega, sigma) = (1.3, 0.9);
        let b = BasisSpec::shifted(omega, sigma, 12).unwrap();
        let c = quadrature_overlaps(omega, &b).unwrap();
        // coherent state amplitude; the Gaussian sits at -sigma relative to the basis center
        let beta = -sigma * (omega / 2.0).sqrt();
        let mut factorial = 1.0;
        for (n, cn) in c.iter().enumerate() {
            if n > 0 {
                factorial *= n as f64;
            }
            let expected = (-beta * beta / 2.0).exp() * beta.powi(n as i32) / factorial.sqrt();
            assert_relative_eq!(*cn, expected, epsilon = 1e-13);
        }
    }
}
