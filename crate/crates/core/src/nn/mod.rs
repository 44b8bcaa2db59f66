//! Dense networks and the Adam optimizer.

mod adam;
mod dense;

pub use adam::{AdamConfig, AdamState};
pub use dense::{Activation, BoundNet, DenseNet, Param};
