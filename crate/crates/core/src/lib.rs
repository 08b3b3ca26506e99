//! Decentralized oscillation-damping certificates for power networks with
//! grid-forming and grid-following inverters.
//!
//! Each device checks a local gain inequality on the finite boundary of a
//! prohibited pole region. When every device passes, no closed-loop pole of
//! the interconnected system lies in that region. The crate also carries a
//! centralized pole and step-response oracle to validate certificates.
//!
//! - [`ratcalc`]: polynomials, rational functions, root finding, Routh tests
//! - [`netmodel`]: line admittances, Laplacian assembly, Kron reduction
//! - [`devices`]: GFM/GFL models and device-side prechecks
//! - [`domain`]: prohibited region membership and boundary sampling
//! - [`certify`]: local gain checks and feasible-region sweeps
//! - [`analysis`]: closed-loop poles, damping ratios, step responses

pub mod analysis;
pub mod certify;
pub mod devices;
pub mod domain;
pub mod error;
pub mod linalg;
pub mod netmodel;
pub mod ratcalc;

pub use error::{Error, Result};
pub use num_complex::Complex64;
