//! Simulation and attractor verification for the 1D nonautonomous
//! reaction-diffusion inclusion
//!
//! ```text
//! u_t − u_xx ∈ b(t)·H₀(u) + ω(t)·u   on (0,1),   u(t,0) = u(t,1) = 0,
//! ```
//!
//! where `H₀` is the set-valued Heaviside map.
//!
//! * [`coefficients`]: the symbol `σ = (b, ω)`, translations and hull samples.
//! * [`selections`]: single-valued selections of `H₀` (sign, delayed ignition, regularized).
//! * [`fdsolver`]: the monotone implicit-Euler scheme and its audits.
//! * [`spectral`]: sine-series mild solutions used as an independent oracle.
//! * [`attractor`]: `v₁⁺`, sandwich bounds, `ξ_M`, connections and sections.
//! * [`skewflow`]: cocycle and translation identities, uniform attractor, gradient structure.
//! * [`cli`]: configuration files, experiments and CSV/JSON output.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attractor;
pub mod cli;
pub mod coefficients;
pub mod error;
pub mod fdsolver;
pub mod grid;
pub mod selections;
pub mod skewflow;
pub mod spectral;
pub mod tridiag;

pub use coefficients::{Bounds, HullSample, HullStrategy, Series, Symbol, Term, PI_SQUARED};
pub use error::{Error, Result};
pub use fdsolver::{Discretization, Scheme, Trajectory};
pub use grid::{Field, Grid};
pub use selections::SelectionPolicy;
