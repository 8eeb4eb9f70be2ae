//! Variational spectra and dynamics of one-dimensional polynomial potentials
//! in a harmonic-oscillator basis whose frequency is fixed by a
//! trace-stationarity condition.
//!
//! ```
//! use pmsqm::basis::PolynomialPotential;
//! use pmsqm::spectrum::{solve_spectrum, OmegaMode, SigmaMode};
//!
//! let q = PolynomialPotential::quartic_benchmark(1000.0)?;
//! let dec = solve_spectrum(&q, 60, OmegaMode::PmsClosed, SigmaMode::default())?;
//! assert!((dec.energies()[0] - 13.388441701005).abs() < 1e-10);
//! # Ok::<(), pmsqm::error::Error>(())
//! ```

pub mod basis;
pub mod error;
pub mod evolution;
mod numeric;
pub mod oracle;
pub mod pms;
pub mod spectrum;

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/basis.md")]
    mod basis {}
    #[doc = include_str!("../../../book/src/pms.md")]
    mod pms {}
    #[doc = include_str!("../../../book/src/spectrum.md")]
    mod spectrum {}
    #[doc = include_str!("../../../book/src/evolution.md")]
    mod evolution {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
