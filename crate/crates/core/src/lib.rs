//! Numerical laboratory for delayed reaction-diffusion equations
//! `u_t = u_xx - u + g(u(t-h, x))`: characteristic roots, linear decay,
//! Halanay bounds and the stability of semi-wavefronts.

pub mod birthfuncs;
pub mod charspec;
pub mod error;
pub mod halanay;
pub mod linsolve;
pub mod rdwave;
mod numeric;

pub use error::{Error, Result};
