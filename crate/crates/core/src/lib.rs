#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Spectral energy-balance climate model with a dynamic ice line.
//!
//! Zonal surface temperature is expanded in even Legendre polynomials and
//! coupled to a slowly moving ice edge `eta` (sine of the ice-line latitude).
//! Two meridional heat transports are supported (spherical diffusion and
//! relaxation to the global mean) together with two piecewise-constant
//! albedos (the classic two-zone albedo and the three-zone "Jormungand"
//! albedo with a bare-ice band equatorward of a fixed latitude `rho`).
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches the
//! filesystem, the command line or threads lives in the companion `ebm-cli`
//! crate.
//!
//! Layering, bottom up:
//!
//! * [`poly`] and [`legendre`]: monomial polynomials and the even Legendre basis.
//! * [`quadrature`]: adaptive Simpson, used for the insolation integral and
//!   as an independent oracle in tests.
//! * [`insolation`] and [`albedo`]: the forcing and its Legendre moments.
//! * [`model`]: right-hand sides of the finite-dimensional ODE systems.
//! * [`reduced`]: the slow scalar flow `eta' = eps * h(eta)`, its roots and
//!   their stability.
//! * [`dynamics`]: time integration with switching, sliding and boundary
//!   handling.
//! * [`sweep`]: one-parameter bifurcation sweeps.

extern crate alloc;

pub mod albedo;
pub mod dynamics;
mod error;
pub mod insolation;
pub mod legendre;
mod math;
pub mod model;
pub mod ode;
pub mod poly;
pub mod quadrature;
pub mod reduced;
pub mod roots;
pub mod sweep;

pub use error::{Error, Result};
