pub mod analysis;
pub mod banded;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod functionals;
pub mod geometry;
pub mod operators;
pub mod quadrature;
pub mod stencil;

pub use error::{Error, Result};
