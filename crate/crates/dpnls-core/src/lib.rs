//! Double-pole solitons of the focusing NLS equation
//! `i q_t + q_xx / 2 + |q|^2 q = 0`, their long-time asymptotics inside
//! space-time cones, forward scattering from sampled profiles, and a
//! split-step Fourier integrator used as an independent oracle.

pub mod asymptotics;
pub mod error;
pub mod io;
pub mod ode;
pub mod pde_oracle;
pub mod phase;
pub mod quad;
pub mod scattering;
pub mod soliton;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// 2x2 complex matrix, row major.
pub type Mat2 = [[C64; 2]; 2];

pub(crate) const I: C64 = C64::new(0.0, 1.0);

#[cfg(test)]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
