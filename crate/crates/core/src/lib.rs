//! Numerical laboratory for the vanishing-viscosity limit of the 2D
//! incompressible Navier-Stokes equations on the periodic box.
//!
//! The crate is organized bottom-up:
//!
//! * [`spectral`]: grids, real fields in Fourier form, derivatives,
//!   Biot-Savart, dealiased products and the Leray projection.
//! * [`littlewood_paley`]: smooth dyadic blocks, low-pass filters and
//!   Besov / Zygmund norms.
//! * [`paraproduct`]: Bony decomposition, localized commutators and the
//!   mollifier remainders.
//! * [`solver`]: integrating-factor RK4 for the vorticity equation and the
//!   Duhamel consistency check.
//! * [`diagnostics`]: measured inequality audits and the frequency split of
//!   the viscous error.
//! * [`harness`]: configuration, sweeps, rate fits and report files.
//!
//! ```
//! use vvlab::spectral::{biot_savart, Grid, SpectralField};
//!
//! let grid = Grid::periodic(32)?;
//! let omega = SpectralField::from_fn(&grid, |x, _| x.cos());
//! let v = biot_savart(&omega)?;
//! let expect = SpectralField::from_fn(&grid, |x, _| x.sin());
//! assert!((v.u2() - &expect).sup_norm() < 1e-14);
//! # Ok::<(), vvlab::Error>(())
//! ```

pub mod audit;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod littlewood_paley;
pub mod paraproduct;
pub mod solver;
pub mod spectral;

pub use audit::InequalityAudit;
pub use error::{Error, Result};
pub use littlewood_paley::{BesovSpec, DyadicPartition};
pub use solver::{FlowState, SolverConfig, Trajectory};
pub use spectral::{Grid, SpectralField, VectorField};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/fields.md")]
    mod fields {}
    #[doc = include_str!("../../../book/src/littlewood_paley.md")]
    mod littlewood_paley {}
    #[doc = include_str!("../../../book/src/paraproducts.md")]
    mod paraproducts {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/audits.md")]
    mod audits {}
    #[doc = include_str!("../../../book/src/sweeps.md")]
    mod sweeps {}
}
