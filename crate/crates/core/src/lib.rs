pub mod electric;
pub mod environment;
pub mod error;
pub mod graph;
pub mod harness;
pub mod lattice;
pub mod observables;
pub mod reduction;
pub mod rng;
pub mod sampler;

pub use error::{Error, Result};
