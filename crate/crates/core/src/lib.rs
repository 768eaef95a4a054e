//! Stochastic multi-agent model of knowledge creation and propagation.
//!
//! Agents hold tabular knowledge functions mapping experiences to concepts.
//! At each step they resample data from peers, weighted by a fixed structure
//! matrix and a credibility score, or from their own exploration, and refit
//! by least squares. The crate provides the model primitives, spectral
//! diagnostics of the influence matrices, the simulation loop, convergence
//! metrics and preset experiments.

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod influence;
pub mod knowledge;
pub mod metrics;
pub mod rng;
pub mod spectral;

pub use dynamics::{
    draw_individual, draw_sample, draw_social, least_squares_update, run, step, MetricVariant,
    Model, PopulationState, RunOutput, Sample, SimulationConfig,
};
pub use error::{Error, Result};
pub use influence::{
    compute_credibility, compute_social_learning, normalize_rows, CredibilityMatrix,
    SocialLearningMatrix, StructureMatrix,
};
pub use knowledge::{
    distance_c, ConceptSpace, KnowledgeFunction, KnowledgeSetting, LikelihoodLandscape,
};
pub use metrics::{
    consensus_distance, delta_i, nearest_individual_distance, relative_entropy, MetricRow,
    MetricTrace,
};
pub use spectral::{communicates, dobrushin_coefficient, is_primitive, SpectralReport};
