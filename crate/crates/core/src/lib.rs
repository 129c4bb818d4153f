//! Exact ergodic mutual information of MIMO Rayleigh-fading links whose
//! one-sided correlation has eigenvalues of arbitrary multiplicity, and the
//! multiuser-interference and relay figures built from it.

// `!(x > 0.0)` guards reject NaN on purpose; index loops follow matrix notation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod capacity;
pub mod cli;
pub mod covariance;
pub mod eigpdf;
pub mod error;
pub mod figures;
pub mod highprec;
pub mod hypfun;
pub mod linalg;
pub mod montecarlo;
pub mod quad;
pub mod report;
pub mod scenario;
pub mod signed_log;
pub mod specfun;
pub mod verify;

pub use covariance::{CovarianceSpec, MultiplicityIndex, NetworkScenario, User};
pub use error::{Error, Result};
pub use signed_log::SignedLogValue;
