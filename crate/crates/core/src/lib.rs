pub mod error;
pub mod special;
pub mod cft;
pub mod blocks;
pub mod bootstrap;
pub mod lattice;
mod series;

pub use error::{Error, Result};
