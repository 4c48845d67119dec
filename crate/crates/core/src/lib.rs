//! Linear softmax classification with entropy regularization over
//! Gaussian-mixture feature distributions.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`, with `…32` variants for `f32`.
//!
//! ```
//! use maxent_core::{Mixture, Model, Objective, Batch, analytic_diversity};
//!
//! let mix = Mixture::standard_normal(3).unwrap();
//! assert_eq!(analytic_diversity(&mix).unwrap().nu, 3.0);
//!
//! let data = mix.sample(8, 7);
//! let model = Model::zeros(4, 3).unwrap();
//! let loss = Objective::MaxEnt { gamma: 1.0 }.loss(&model, Batch::full(&data)).unwrap();
//! // Uniform predictions: cross-entropy ln 4 minus entropy ln 4.
//! assert!(loss.abs() < 1e-12);
//! ```

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod checkpoint;
pub mod classifier;
pub mod dataset;
pub mod diversity;
pub mod error;
pub mod linalg;
pub mod mixture;
pub mod rng;
pub mod scalar;
pub mod trainer;

pub use bounds::{
    check_theorem1, corollary1_bound, corollary1_leading_form, entropy_floor, mc_verify, theorem1_bound,
    theorem2_bound, BoundQuery, BoundReport, ModelSampler, TailBound, Theorem, VerificationReport, VerifyOptions,
};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use classifier::{
    empirical_mean_entropy, entropy, expected_entropy_mc, label_smoothing_loss, maxent_gradient, maxent_loss,
    softmax, Batch, Gradient, LinearSoftmaxModel, LossAndGradient, MonteCarloEstimate, Objective, Prediction,
    ProbVector,
};
pub use dataset::LabeledDataset;
pub use diversity::{
    analytic_diversity, empirical_diversity, population_covariance, spectrum_tail_mass, top_principal_components,
    write_pc_csv, DiversityReport, DiversitySource, PrincipalComponents,
};
pub use error::{Error, Result};
pub use linalg::{Matrix, SymmetricEigen};
pub use mixture::{Component, GaussianMixture, MomentSummary};
pub use scalar::{Real, RunningStats};
pub use trainer::{
    evaluate, gamma_sweep, init_model, inject_label_noise, train, EpochRecord, Evaluation, LrSchedule,
    ObjectiveKind, SweepRow, TrainConfig, TrainHistory,
};

pub type Mat = Matrix<f64>;
pub type Mixture = GaussianMixture<f64>;
pub type Model = LinearSoftmaxModel<f64>;
pub type Dataset = LabeledDataset<f64>;
pub type Config = TrainConfig<f64>;

pub type Mat32 = Matrix<f32>;
pub type Mixture32 = GaussianMixture<f32>;
pub type Model32 = LinearSoftmaxModel<f32>;
pub type Dataset32 = LabeledDataset<f32>;
pub type Config32 = TrainConfig<f32>;
