//! Embedding quality metrics: link-prediction ranking scores, K-means node
//! clustering with label-matched metrics, and a 2-D PCA projection for
//! visualization export.

mod cluster;
mod pca;
mod rank;

pub use cluster::{
    adjusted_rand_index, cluster_accuracy, evaluate_clustering, hungarian_min_assignment, kmeans,
    kmeans_inertia_trace, mapped_f1_precision, nmi, ClusterEvalResult,
};
pub use pca::pca_2d;
pub use rank::{auc, average_precision, evaluate_link_prediction, EvalSide, LinkEvalResult};
