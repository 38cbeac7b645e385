//! Evaluation protocol: MOS processing, agreement metrics, grouped k-fold
//! validation and the SVR variant.

pub mod benchmark;
pub mod kfold;
pub mod logistic;
pub mod metrics;
pub mod mos;
pub mod svr;

pub use benchmark::{run_benchmark, BenchmarkItem, BenchmarkReport, FoldReport, Method};
pub use kfold::{fold_hash, kfold_splits, Fold};
pub use logistic::{logistic5, logistic_remap, Mapping};
pub use metrics::{correlation_metrics, kendall_tau_b, pearson, rmse, spearman, Metrics};
pub use mos::{compute_mos, read_mos_csv, z_scores, MosTable, RatingsMatrix, Screening};
pub use svr::{svr_predict, svr_train, SvrModel, SvrParams};
