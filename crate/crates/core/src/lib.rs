//! Random products in `SL_d` over local fields: Cartan decompositions,
//! ping-pong certificates for free subgroups, random walks and the
//! statistics used to measure their contraction.

pub mod decomp;
pub mod error;
pub mod pingpong;
pub mod projlin;
pub mod scalar;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};
