//! Desk-scale toolkit for three-colour bipartite Ramsey experiments:
//! extremal colourings, exact small bipartite Ramsey numbers, regularity
//! certification, monochromatic connected matchings, bandwidth-based target
//! partitioning, compatibility verification, and greedy embedding.
//!
//! Everything is exact and reproducible: densities and thresholds are
//! rationals, random generators are seeded, and searches are deterministic
//! regardless of worker count.

pub mod bits;
pub mod cm;
pub mod colouring;
pub mod embed;
pub mod error;
pub mod graphs;
pub mod partition;
pub mod ramsey;
pub mod rat;
pub mod regularity;

pub use error::{Error, Result};
pub use rat::Rat;
