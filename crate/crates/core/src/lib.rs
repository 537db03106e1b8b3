//! Differentiable fuzzy rule networks for transparent recommendation.
//!
//! A network of `k` conjunctive rules over `n` named atoms is trained by
//! gradient descent; its fuzzy weight matrix reads back as Horn clauses.
//! Everything numeric is generic over [`scalar::Scalar`] (`f32` or `f64`);
//! the aliases below fix the scalar to `f64`.

pub mod atoms;
pub mod baseline;
pub mod checkpoint;
pub mod config;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod explain;
pub mod fuzzy;
pub mod gradcheck;
pub mod matrix;
pub mod network;
pub mod pipeline;
pub mod scalar;
pub mod training;

pub use error::{Error, Result};

pub type Real = f64;
pub type Network = network::RuleNetwork<Real>;
pub type Weights = matrix::Matrix<Real>;
pub type Checkpoint = checkpoint::Checkpoint<Real>;
pub type TrainConfig = training::TrainConfig<Real>;
pub type TrainHistory = training::TrainHistory<Real>;
pub type Dataset = training::LabeledAtoms<Real>;
pub type TrainedModel = pipeline::TrainedModel<Real>;
