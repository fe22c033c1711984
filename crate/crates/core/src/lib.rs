//! Numerical laboratory for curved Kakeya and Nikodym maximal estimates.

pub mod compression;
pub mod curve;
pub mod error;
pub mod exec;
pub mod exponents;
pub mod family;
pub mod fit;
pub mod grain;
pub mod grid;
pub mod hypothesis;
pub mod linalg;
pub mod maximal;
pub mod oscillatory;
pub mod phase;
pub mod poly;
pub mod sampling;
pub mod sublevel;
pub mod taylor;
pub mod tubes;

pub use error::{Error, Result};
