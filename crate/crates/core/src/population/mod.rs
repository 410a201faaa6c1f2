//! Stochastic generation of MVL populations whose summary statistics match
//! the measured physical characteristics, plus the statistics used to
//! validate them and swelling-solution embedding of initial contents.

mod dist;
mod embed;
mod generator;
mod stats;

pub use dist::{DistFamily, TruncatedDist};
pub use embed::{assignments_as_mixture, embed_swelling_solution};
pub use generator::{
    derive_stream, sample_mvl, sample_mvl_with_id, sample_population, sample_population_item,
    GeneratorParams, MAX_PACKING_ATTEMPTS, PACKING_HEADROOM,
};
pub use stats::{population_stats, PopulationStats, SummaryStats};
