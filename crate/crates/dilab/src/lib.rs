pub mod config;
pub mod error;
pub mod experiments;
pub(crate) mod fourier;
pub mod fitting;
pub mod functionals;
pub mod grid;
pub mod multiplier;
pub mod potential;
pub mod report;
pub mod scattering;
pub mod spectral;

pub use error::{DilabError, Result};
