//! Counting and modelling small induced collaboration patterns in hypergraphs.

pub mod census;
pub mod citation;
pub mod cohort;
pub mod combin;
pub mod ego;
pub mod error;
pub mod hypergraph;
pub mod io;
pub mod null_model;
pub mod pattern;
pub mod rng;

pub use census::{
    census_all, census_all_with, census_sampled, formation_patterns, monthly_frequencies, subset_pattern,
    CensusEngine, CensusOptions, FormationEvent, PatternCensus,
};
pub use error::{Error, Result};
pub use hypergraph::{EdgeRef, HyperEdge, Hypergraph, HypergraphBuilder, NodeId, NodeSubset};
pub use null_model::{
    analytic_prevalence, crossing_point, extreme_set, mc_prevalence, p_for_target, sample,
    subset_connection_prob, ModelParams, PrevalenceCurve, PrevalenceTable,
};
pub use pattern::{
    canonicalize, enumerate_patterns, parse_name, MPattern, PatternCounts, PatternId, PatternSpace,
    SlotMask,
};
