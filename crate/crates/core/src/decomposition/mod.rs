//! Latent additive structure: the assignment type, its Dirichlet-multinomial
//! posterior, the collapsed Gibbs sampler, partial-learning baselines, and
//! recovery metrics against a known decomposition.

mod gibbs;
mod metrics;
mod partial;
mod partition;
mod posterior;

pub use gibbs::{gibbs_conditional, gibbs_sample, gumbel_argmax, GibbsConfig, GibbsOutput, GibbsSampler};
pub use metrics::{grouped_together_rate, rand_index, separated_rate};
pub use partial::{partial_learning, random_decomposition};
pub use partition::Decomposition;
pub use posterior::{decomposition_log_posterior, log_prior};
