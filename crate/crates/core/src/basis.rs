//! Harmonic-oscillator basis and matrix representations of polynomial
//! Hamiltonians.
//!
//! The basis functions are
//!
//! ```text
//! phi_n(x) = N_n exp(-alpha^2 xi^2 / 2) H_n(alpha xi),   xi = x - sigma,
//! N_n = (alpha / (2^n n! sqrt(pi)))^(1/2),               alpha^2 = omega.
//! ```
//!
//! Position powers are built from the ladder representation
//! `xi = (a + a^dagger) / (sqrt(2) alpha)`. Since `xi` only couples adjacent
//! levels, the leading `N x N` block of `xi^p` computed in an `N + p`
//! dimensional space is exact.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Frequency, center and truncation order of an oscillator basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSpec {
    omega: f64,
    sigma: f64,
    n_basis: usize,
}

impl BasisSpec {
    /// A basis centered on the origin.
    pub fn new(omega: f64, n_basis: usize) -> Result<Self> {
        Self::shifted(omega, 0.0, n_basis)
    }

    /// A basis centered on `x = sigma`.
    pub fn shifted(omega: f64, sigma: f64, n_basis: usize) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "basis frequency must be positive and finite, got {omega}"
            )));
        }
        if !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "basis center must be finite, got {sigma}"
            )));
        }
        if n_basis == 0 {
            return Err(Error::InvalidParameter(
                "basis truncation order must be at least 1".into(),
            ));
        }
        Ok(Self {
            omega,
            sigma,
            n_basis,
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// `alpha = sqrt(omega)`, the inverse length scale of the basis.
    pub fn alpha(&self) -> f64 {
        self.omega.sqrt()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn with_n_basis(&self, n_basis: usize) -> Result<Self> {
        Self::shifted(self.omega, self.sigma, n_basis)
    }

    /// Values `phi_0(x), ..., phi_{N-1}(x)` of the basis functions.
    pub fn functions_at(&self, x: f64) -> Vec<f64> {
        let alpha = self.alpha();
        let y = alpha * (x - self.sigma);
        let envelope = alpha.sqrt() * (-0.5 * y * y).exp();
        hermite_functions(y, self.n_basis)
            .into_iter()
            .map(|h| h * envelope)
            .collect()
    }
}

/// Normalized Hermite polynomials `h_n(y) = H_n(y) / sqrt(2^n n! sqrt(pi))`
/// for `n < count`, by the stable three-term recurrence.
pub(crate) fn hermite_functions(y: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    let h0 = std::f64::consts::PI.powf(-0.25);
    out.push(h0);
    if count == 1 {
        return out;
    }
    out.push(std::f64::consts::SQRT_2 * y * h0);
    for n in 1..count - 1 {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * y * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// `H = kinetic * p^2 + sum_j v_j x^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialPotential {
    kinetic: f64,
    coeffs: Vec<f64>,
}

impl PolynomialPotential {
    /// Validates confinement: the highest nonzero power must be even with a
    /// positive coefficient. Trailing zero coefficients are dropped.
    pub fn new(kinetic_coeff: f64, potential_coeffs: Vec<f64>) -> Result<Self> {
        if !(kinetic_coeff.is_finite() && kinetic_coeff > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "kinetic coefficient must be positive, got {kinetic_coeff}"
            )));
        }
        if let Some(bad) = potential_coeffs.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite potential coefficient {bad}"
            )));
        }
        let mut coeffs = potential_coeffs;
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        let degree = coeffs.len().saturating_sub(1);
        match coeffs.last() {
            None => return Err(Error::NotConfining("potential is identically zero".into())),
            Some(_) if degree == 0 => return Err(Error::NotConfining("constant potential".into())),
            Some(_) if degree % 2 == 1 => {
                return Err(Error::NotConfining(format!("odd leading degree {degree}")))
            }
            Some(&lead) if lead < 0.0 => {
                return Err(Error::NotConfining(format!(
                    "leading coefficient of x^{degree} is negative ({lead})"
                )))
            }
            _ => {}
        }
        Ok(Self {
            kinetic: kinetic_coeff,
            coeffs,
        })
    }

    /// `p^2/2 + omega^2 x^2 / 2`.
    pub fn harmonic(omega: f64) -> Result<Self> {
        Self::new(0.5, vec![0.0, 0.0, 0.5 * omega * omega])
    }

    /// `p^2/2 - m_sq x^2 / 2 + g x^4`.
    pub fn double_well(m_sq: f64, g: f64) -> Result<Self> {
        Self::new(0.5, vec![0.0, 0.0, -0.5 * m_sq, 0.0, g])
    }

    /// `p^2/2 + coupling (x^2 - a^2)^2 / 24`, constant dropped; this is the
    /// double well with `m^2 = coupling a^2 / 6` and `g = coupling / 24`.
    pub fn slow_roll(a: f64, coupling_lambda: f64) -> Result<Self> {
        let (m_sq, g) = slow_roll_parameters(a, coupling_lambda);
        Self::double_well(m_sq, g)
    }

    /// `p^2 + x^2 + 2 g x^4`.
    pub fn quartic_benchmark(g: f64) -> Result<Self> {
        Self::new(1.0, vec![0.0, 0.0, 1.0, 0.0, 2.0 * g])
    }

    pub fn kinetic_coeff(&self) -> f64 {
        self.kinetic
    }

    /// `v_0, ..., v_J` with `v_J != 0`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_even(&self) -> bool {
        self.coeffs.iter().skip(1).step_by(2).all(|&v| v == 0.0)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &v| acc * x + v)
    }

    /// Coefficients `w_k` of `V(sigma + xi) = sum_k w_k xi^k`.
    pub fn shifted_coeffs(&self, sigma: f64) -> Vec<f64> {
        if sigma == 0.0 {
            return self.coeffs.clone();
        }
        // Repeated synthetic division by (x - sigma) (Taylor shift).
        let mut w = self.coeffs.clone();
        let len = w.len();
        for k in 0..len {
            for j in (k..len - 1).rev() {
                w[j] += sigma * w[j + 1];
            }
        }
        w
    }

    /// `(m^2, g)` of the equivalent double well `p^2/2 - m^2 x^2/2 + g x^4`
    /// after dividing by `2 * kinetic`, when the potential is of the form
    /// `v0 + v2 x^2 + v4 x^4` with `v4 > 0`.
    pub fn as_double_well(&self) -> Option<(f64, f64)> {
        if self.degree() != 4 || !self.is_even() {
            return None;
        }
        let v2 = self.coeffs[2];
        let v4 = self.coeffs[4];
        Some((-v2 / self.kinetic, v4 / (2.0 * self.kinetic)))
    }
}

/// `(m^2, g) = (coupling a^2 / 6, coupling / 24)`.
pub fn slow_roll_parameters(a: f64, coupling_lambda: f64) -> (f64, f64) {
    (coupling_lambda * a * a / 6.0, coupling_lambda / 24.0)
}

/// Dense, exactly symmetric truncated Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    entries: DMatrix<f64>,
}

impl HamiltonianMatrix {
    /// Wraps a square matrix, mirroring its upper triangle so the result is
    /// bit-for-bit symmetric.
    pub fn from_upper(mut entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                got: entries.ncols(),
            });
        }
        mirror_upper(&mut entries);
        Ok(Self { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }
}

fn mirror_upper(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in j + 1..n {
            m[(i, j)] = m[(j, i)];
        }
    }
}

/// Successive powers of the ladder position operator in an embedding large
/// enough to keep the leading `n x n` block exact up to `max_power`.
struct LadderPowers {
    n: usize,
    dim: usize,
    offdiag: Vec<f64>,
    current: DMatrix<f64>,
    power: usize,
}

impl LadderPowers {
    fn new(basis: &BasisSpec, max_power: usize) -> Self {
        let n = basis.n_basis();
        let dim = n + max_power;
        let inv_two_omega = 1.0 / (2.0 * basis.omega());
        let offdiag = (0..dim.saturating_sub(1))
            .map(|k| ((k + 1) as f64 * inv_two_omega).sqrt())
            .collect();
        Self {
            n,
            dim,
            offdiag,
            current: DMatrix::identity(dim, dim),
            power: 0,
        }
    }

    /// Multiplies the running power by `xi` from the right.
    fn advance(&mut self) {
        let dim = self.dim;
        let mut next = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = 0.0;
                if j > 0 {
                    acc += self.current[(i, j - 1)] * self.offdiag[j - 1];
                }
                if j + 1 < dim {
                    acc += self.current[(i, j + 1)] * self.offdiag[j];
                }
                next[(i, j)] = acc;
            }
        }
        self.current = next;
        self.power += 1;
    }

    fn leading_block(&self) -> DMatrix<f64> {
        let mut block = self.current.view((0, 0), (self.n, self.n)).into_owned();
        mirror_upper(&mut block);
        block
    }
}

/// Exact truncated matrix of `xi^p`, `xi = x - sigma`, in the basis.
pub fn x_matrix_power(basis: &BasisSpec, p: usize) -> DMatrix<f64> {
    let mut ladder = LadderPowers::new(basis, p);
    for _ in 0..p {
        ladder.advance();
    }
    ladder.leading_block()
}

/// Closed-form matrix element `(xi^p)_{n l}`.
///
/// Uses the Morales-type finite sums with prefactor `alpha^{-p}`, written as
/// a positive series whose terms are generated by their ratio so that no
/// factorial is ever formed. Elements violating the parity or range
/// selection rules are exactly zero.
pub fn x_power_element_closed(basis: &BasisSpec, n: usize, l: usize, p: usize) -> f64 {
    let (n, l) = if l < n { (l, n) } else { (n, l) };
    let offset = l - n;
    if (offset + p) % 2 == 1 || offset > p {
        return 0.0;
    }
    let alpha = basis.alpha();
    // p = 2r (+1), offset = 2 * parity_offset (+1)
    let r = p / 2;
    let parity_offset = offset / 2;
    if r < parity_offset {
        return 0.0;
    }
    let odd = p % 2;
    let free = r - parity_offset;

    // First term (k = 0):
    //   p! / (free! * offset!) * sqrt(l!/n!) / (alpha^p 2^(2r - parity_offset + odd/2))
    let mut first = 1.0;
    for i in 1..=p {
        first *= i as f64;
    }
    for i in 1..=free {
        first /= i as f64;
    }
    for i in 1..=offset {
        first /= i as f64;
    }
    let mut ratio_fact = 1.0;
    for i in n + 1..=l {
        ratio_fact *= i as f64;
    }
    first *= ratio_fact.sqrt();
    let mut exponent = (2 * r - parity_offset) as f64;
    if odd == 1 {
        exponent += 0.5;
    }
    first /= alpha.powi(p as i32) * 2f64.powf(exponent);

    let mut term = first;
    let mut sum = first;
    for k in 1..=n.min(free) {
        let kf = k as f64;
        term *= 2.0 * (free - k + 1) as f64 * (n - k + 1) as f64 / ((offset + k) as f64 * kf);
        sum += term;
    }
    sum
}

/// `(p^2)_{n l}`: `omega (l + 1/2)` on the diagonal and
/// `-(omega/2) sqrt(l (l - 1))` two steps off it. Independent of `sigma`.
pub fn p2_matrix(basis: &BasisSpec) -> DMatrix<f64> {
    let n = basis.n_basis();
    let omega = basis.omega();
    let mut m = DMatrix::zeros(n, n);
    for l in 0..n {
        m[(l, l)] = omega * (l as f64 + 0.5);
        if l >= 2 {
            let v = -0.5 * omega * ((l * (l - 1)) as f64).sqrt();
            m[(l - 2, l)] = v;
            m[(l, l - 2)] = v;
        }
    }
    m
}

/// Truncated `H_{n l}` for the potential in the given basis.
pub fn build_hamiltonian(potential: &PolynomialPotential, basis: &BasisSpec) -> HamiltonianMatrix {
    let w = potential.shifted_coeffs(basis.sigma());
    let mut h = p2_matrix(basis) * potential.kinetic_coeff();
    let n = basis.n_basis();
    for i in 0..n {
        h[(i, i)] += w[0];
    }
    let mut ladder = LadderPowers::new(basis, w.len() - 1);
    for &wk in &w[1..] {
        ladder.advance();
        if wk != 0.0 {
            for j in 0..n {
                for i in 0..=j {
                    h[(i, j)] += wk * ladder.current[(i, j)];
                }
            }
        }
    }
    HamiltonianMatrix::from_upper(h).expect("square by construction")
}

/// `tr(xi^k)` over the truncated basis for `k = 0..=max_power`, from the
/// closed-form diagonal elements.
pub(crate) fn power_traces(basis: &BasisSpec, max_power: usize) -> Vec<f64> {
    (0..=max_power)
        .map(|k| {
            if k % 2 == 1 {
                0.0
            } else {
                (0..basis.n_basis())
                    .map(|n| x_power_element_closed(basis, n, n, k))
                    .sum()
            }
        })
        .collect()
}

/// `T_N = sum_{n < N} H_{nn}`, from diagonal elements only.
pub fn trace_diagonal(potential: &PolynomialPotential, basis: &BasisSpec) -> f64 {
    let n = basis.n_basis() as f64;
    let w = potential.shifted_coeffs(basis.sigma());
    let traces = power_traces(basis, w.len() - 1);
    let kinetic = potential.kinetic_coeff() * basis.omega() * n * n / 2.0;
    kinetic + w.iter().zip(&traces).map(|(a, b)| a * b).sum::<f64>()
}

/// Partial derivatives `(dT/d omega, dT/d sigma)` of the truncated trace.
///
/// `tr(xi^k)` scales as `omega^{-k/2}` and `d w_k / d sigma = (k+1) w_{k+1}`.
pub fn trace_gradient(potential: &PolynomialPotential, basis: &BasisSpec) -> (f64, f64) {
    let n = basis.n_basis() as f64;
    let omega = basis.omega();
    let w = potential.shifted_coeffs(basis.sigma());
    let traces = power_traces(basis, w.len() - 1);
    let mut d_omega = potential.kinetic_coeff() * n * n / 2.0;
    let mut d_sigma = 0.0;
    for (k, (&wk, &tk)) in w.iter().zip(&traces).enumerate() {
        d_omega -= wk * tk * k as f64 / (2.0 * omega);
        if k + 1 < w.len() {
            d_sigma += (k + 1) as f64 * w[k + 1] * tk;
        }
    }
    (d_omega, d_sigma)
}
