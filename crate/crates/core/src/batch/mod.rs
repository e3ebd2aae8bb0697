//! Diverse batches: per-group relevance regions, exact k-DPP sampling and
//! greedy pure exploration over them, and the two ways of combining per-group
//! picks into full points.

mod combine;
mod dpp;
mod driver;
mod pe;
mod region;

pub use combine::{combine_quality, combine_random, GroupSelection};
pub use dpp::{elementary_symmetric_log, kdpp_sample};
pub use driver::{run_batch_bo, BatchConfig, Combiner, Explorer};
pub use pe::pe_greedy_select;
pub use region::{build_relevance_region, RelevanceRegion};
