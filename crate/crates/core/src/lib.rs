//! Sets of real numbers that avoid approximate arithmetic progressions.
//!
//! The crate is organised around five modules:
//!
//! - [`szemeredi`]: exact values and constructive lower bounds for the
//!   Szemerédi numbers `r_k(N)`, with witnesses and a persistent cache.
//! - [`construction`]: the self-similar digit-set attractors, their exact
//!   finite-level interval approximations and randomly rotated variants.
//! - [`verifier`]: branch-and-bound certification that an interval union
//!   ε-avoids k-term progressions over a window of gap lengths.
//! - [`bounds`]: evaluators for the known upper and lower bounds on the
//!   dimension `d(k, ε)` plus checkers for the discrete counting lemmas.
//! - [`fourier`]: Fourier transforms of the uniform measures on interval
//!   unions and empirical decay-exponent fits.

pub mod bounds;
pub mod construction;
pub mod error;
pub mod fourier;
pub mod rational;
pub mod szemeredi;
pub mod verifier;

pub use error::{Error, Result};
pub use rational::{parse_rational, Rational};
