#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autodiff;
pub mod cli;
pub mod data;
pub mod error;
pub mod io;
pub mod metrics;
pub mod models;
pub mod nn;
pub mod scalar;
pub mod train;
pub mod wtc;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// `f64` instantiations of the generic core.
pub type Graph = autodiff::Graph<f64>;
pub type Tensor = autodiff::Tensor<f64>;
pub type DenseNet = nn::DenseNet<f64>;
pub type GenerativeModel = models::GenerativeModel<f64>;
pub type Critic = wtc::Critic<f64>;
pub type TrainConfig = train::TrainConfig<f64>;
pub type Trainer = train::Trainer<f64>;
