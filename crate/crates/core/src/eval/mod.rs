//! Discrimination metrics and the hourly evaluation protocol.

pub mod auc;
pub mod bootstrap;
pub mod compare;
pub mod curves;
pub mod features;
pub mod report;

pub use auc::roc_auc;
pub use bootstrap::{bootstrap_aucs, bootstrap_ci, interval_of, percentile, ConfidenceInterval, DEFAULT_ITERATIONS};
pub use compare::{compare_mean_auc, compare_models, paired_p_value, ComparisonPoint, MeanAucComparison};
pub use curves::{
    hourly_curve, mean_auc, stratified_mean_prob, Alignment, AucPoint, HourlyPredictions, MeanEstimate,
    StratifiedPoint, DEFAULT_HORIZON,
};
pub use features::{aggregate_features, aggregate_trajectory, train_logistic, LogisticConfig, LogisticModel, N_FEATURES};
