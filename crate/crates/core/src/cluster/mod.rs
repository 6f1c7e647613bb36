//! KMeans with KMeans++ seeding and restart selection by total SSE, XMeans
//! model selection, and majority-label evaluation.

mod evaluate;
mod kmeans;
mod xmeans;

pub use evaluate::{evaluate_majority, majority_labels};
pub use kmeans::{
    all_restarts, best_of_restarts, centroid_matrix, kmeanspp_init, lloyd, restart_seed, ClusteringReport,
    ClusteringRun, RestartConfig,
};
pub use xmeans::{spherical_bic, xmeans};
