//! Network statistics: centralities, k-cores, homophily measures and the
//! per-group activity tables.

mod centrality;
mod homophily;
mod kcore;
mod tables;

pub use centrality::{
    betweenness, centralities, closeness, degree_centrality, eigenvector, CentralityOptions,
    CentralityReport, ClosenessConvention, GroupMean, NodeCentrality, Orientation,
};
pub use homophily::{
    assortativity, assortativity_from_mixing, ei_index, ei_index_network, mixing_matrix,
    mixing_matrix_from_edges, EiCombine, EiOptions, EiScope, EiVariant,
};
pub use kcore::{core_histogram, core_numbers, kcore, CoreHistogram, KCoreReport};
pub use tables::{
    activity_table, concentration_table, group_matrix, retweet_concentration, ActivityCell,
    ActivityMetric, ActivityTable, ConcentrationRow, GroupMatrix, PhaseSlot,
};
