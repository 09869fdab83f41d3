//! Exact comparison-based similarity search.
//!
//! A sprawl is a directed hypergraph over data points whose edges carry
//! positive (discovery) and negative (elimination) regions. Regions are
//! ambits: preimages of balls under a remoteness map of focal distances.

pub mod ambit;
pub mod comparison;
pub mod error;
pub mod hypergraph;
pub mod optimize;
pub mod persist;
pub mod sprawl;

pub use error::{Error, Result};
