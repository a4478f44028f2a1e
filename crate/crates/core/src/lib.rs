pub mod config;
pub mod constants;
pub mod moments;
pub mod operators;
pub mod potential;
pub mod quad;
pub mod scattering;
pub mod studies;
pub mod testfn;
pub mod vec3;

mod error;

pub use error::{Error, Result};
