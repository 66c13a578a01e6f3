pub mod chart;
pub mod error;
pub mod foliation;
pub mod geodesic;
pub mod germ;
pub mod leaf;
pub mod operators;
pub mod sampling;
pub mod scenario;
pub mod verification;

pub use error::{Error, Result};
