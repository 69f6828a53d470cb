//! Sub-Nyquist multiband spectrum sensing with frequency locator polynomials.
//!
//! The pipeline runs in five stages:
//!
//! * [`siggen`] synthesizes sparse complex baseband scenes and adds white noise.
//! * [`mcsampler`] takes `r` interleaved cosets at `1/alpha` of the Nyquist rate
//!   and forms the aliased spectrum matrix.
//! * [`flpcore`] fits a frequency locator polynomial per bucket window and
//!   evaluates it on the candidate roots. It also holds the closed-form
//!   statistics.
//! * [`detector`] scans the spectrum, thresholds the evaluations and recovers
//!   the occupied support and band parameters.
//! * [`harness`] runs the Monte Carlo experiments and the energy detection
//!   baseline.

pub mod detector;
pub mod error;
pub mod flpcore;
pub mod harness;
pub mod io;
pub mod mcsampler;
pub mod rng;
pub mod siggen;

pub use error::{Error, Result};
pub use num_complex::Complex64;
