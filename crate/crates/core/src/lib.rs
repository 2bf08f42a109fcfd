//! Adaptive local basis sets for spectral projectors of second-order
//! operators on periodic boxes.

pub mod basis;
pub mod dg;
pub mod domain;
pub mod eig;
pub mod error;
pub mod experiment;
pub mod filter;
pub mod krylov;
pub mod operator;
pub mod scf;

pub use error::{Error, Result};
