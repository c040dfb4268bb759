pub mod chains;
pub mod detection;
pub mod error;
pub mod evaluation;
pub mod factorization;
pub mod graph;
pub mod io;
pub mod normalize;
pub mod par;
pub mod scoring;

pub use error::{Error, Result};
