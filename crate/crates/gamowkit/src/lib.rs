//! Resonance (Gamow) states of finite-range model potentials: pole
//! location, normalized pole states, completeness sums on deformed
//! contours, pole expansions of the time propagator, and transient
//! transmission through 1D barriers, together with the brute-force
//! oracles used to validate each of those against an independent route.
//!
//! Radial modules use units hbar = 2m = 1, so E = k^2 and velocities are
//! 2k; the 1D transient module keeps m and hbar explicit.

pub mod cerf;
pub mod expand;
pub mod model;
pub mod gamow;
pub mod oracle;
pub mod poles;
pub mod error;
pub mod quad;

pub use error::{Error, Result};
