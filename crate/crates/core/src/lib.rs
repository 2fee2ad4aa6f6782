pub mod affiliation;
pub mod content;
pub mod coordination;
pub mod corpus;
pub mod error;
pub mod export;
pub mod fixture;
pub mod graph;
pub mod inauthenticity;
pub mod metrics;
pub mod network;
pub mod pipeline;
pub mod polarisation;
pub mod report;
pub mod scalar;
pub mod synth;
pub mod timeutil;

#[cfg(test)]
mod testutil;

pub use affiliation::{Affiliation, AffiliationMap};
pub use corpus::{Corpus, PhaseConfig, PhasedCorpus, TweetRecord};
pub use error::{Error, Result};
pub use network::{InteractionKind, InteractionNetwork};
pub use scalar::{RealScalar, Scalar};

/// Double-precision forms of the generic reports.
pub type CentralityReport = metrics::CentralityReport<f64>;
pub type NodeCentrality = metrics::NodeCentrality<f64>;
pub type GroupMean = metrics::GroupMean<f64>;
/// Exact rational for ratio statistics.
pub type Rational = num_rational::Ratio<i64>;
