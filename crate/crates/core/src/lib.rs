pub mod error;
pub mod gtrig;
pub(crate) mod quad;

pub use error::{Error, Result};
pub mod atlas;
pub mod cli;
pub mod discrete;
pub mod flow;
pub mod nehari;
pub mod shooting;
pub mod solver;
pub mod spectral1d;
