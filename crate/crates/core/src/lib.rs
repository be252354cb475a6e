//! Numerical experiments on the spectral flow and eta invariant of a
//! one-parameter family of twisted Dirac operators on flat tori.

pub mod clifford;
pub mod dirac;
pub mod eigen;
pub mod error;
pub mod eta;
pub mod flow;
pub mod forms;
pub mod gauge;
pub mod harness;
pub mod linalg;
pub mod mehler;
pub mod report;

pub use error::{Error, Result};
