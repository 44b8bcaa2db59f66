//! Disentanglement metrics over encoder means, Wasserstein-1 kernels and
//! rank correlation between metrics.

mod dependency;
mod factorvae;
mod info;
mod rank;
mod report;
mod wasserstein;

pub use dependency::{
    dependency_matrix, mi_matrix, mig, modularity, wasserstein_dependency, wdg, wdg_from_matrix, Representation,
};
pub use factorvae::{factor_vae_score, factor_vae_score_with, FactorVaeConfig};
pub use info::{discretize, entropy, histogram_total_correlation, mutual_information};
pub use rank::{average_ranks, rank_correlation, rank_correlation_matrix};
pub use report::{evaluate, evaluate_embedding, reconstruction_nll, Embedding, EvalConfig, MetricReport, Summary};
pub use wasserstein::{exact_empirical_w1_nd, min_cost_assignment, w1_empirical_1d};
