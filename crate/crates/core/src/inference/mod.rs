//! Simulated acquisition, Gaussian likelihood over the closed-form spectrum, Metropolis
//! sampling of the eight model parameters, and posterior summaries.

pub mod dataset;
pub mod likelihood;
pub mod measurement;
pub mod metropolis;
pub mod summary;

pub use dataset::{simulate_dataset, Dataset};
pub use likelihood::{Bounds, Likelihood};
pub use measurement::{shot_equivalence_factor, MeasurementMode, MeasurementModel, ShotTiming};
pub use metropolis::{gelman_rubin, metropolis, run_chains, Chain, MetropolisConfig, Stall, Tuning};
pub use summary::{marginal_summary, Histogram, Marginal, Quantity, Summary};
