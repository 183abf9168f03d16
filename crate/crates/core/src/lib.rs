//! Exact counting, sampling, coupling and formula evaluation for random
//! regular graphs.

pub mod asymptotics;
pub mod coupling;
pub mod error;
pub mod exactcount;
pub mod graph;
pub mod overlap;
pub mod sampler;
pub mod subgraphs;
pub mod symmat;

pub use error::{Error, Result};
pub use graph::{DegreeSequence, Graph, RegularityCertificate};
pub use sampler::SeedSpec;
pub use symmat::{LogDet, Spectrum, SymmetricMatrix};
