pub mod error;
pub mod experiments;
pub mod extension;
pub mod initial_data;
pub mod norms;
pub mod solver;
pub mod spectral;
pub mod vorticity;

#[cfg(test)]
pub(crate) mod test_util;

pub use error::{Error, Result};
