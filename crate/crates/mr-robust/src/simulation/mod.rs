//! Seeded Monte Carlo machinery: reproducible random streams, the
//! two-sample genetic data-generating process, and the experiment engine.
//!
//! Everything here is concrete in `f64`. The statistical routines the
//! experiments exercise are generic over the scalar type, but simulation
//! exists to produce reference numbers, and a single well-understood
//! precision keeps streams and results bit-for-bit reproducible across
//! platforms and thread counts.

mod dgp;
mod experiment;
mod rng;

pub use dgp::{
    banded_correlation, draw_gamma_vector, generate_dataset, generate_dataset_with, marginal_ols,
    stress_transform, Dataset, DgpConfig, IndividualSample,
};
pub use experiment::{
    run_experiment, run_stress_experiment_on, ExperimentConfig, ExperimentKind, ExperimentResult,
    ExperimentSeries,
};
pub use rng::{inverse_normal_cdf, SimRng};
