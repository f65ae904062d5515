//! Asymptotic and finite-length analysis of LDPC message-passing decoders
//! whose wiring has missing connections.
//!
//! * [`ensemble`]: edge-perspective degree distributions.
//! * [`de`]: density-evolution maps for peeling, Gallager A and Gallager B.
//! * [`analysis`]: thresholds, useful regions, sensitivities, yield.
//! * [`graph`]: Tanner-graph sampling and miswiring masks.
//! * [`sim`]: bit-level decoders, Monte Carlo harness and an exact oracle.

pub mod analysis;
pub mod de;
pub mod ensemble;
pub mod graph;
pub mod error;
pub mod seed;
pub mod sim;

pub use de::{DecoderKind, DecoderSpec, MassConvention};
pub use ensemble::DegreeDistribution;
pub use error::{Error, Result};
