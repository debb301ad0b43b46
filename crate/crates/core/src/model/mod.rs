//! GRU network with causal attention and a per-hour mortality output.

pub mod checkpoint;
pub mod config;
pub mod export;
pub mod network;
pub mod params;
pub mod predictor;
pub mod train;

pub use checkpoint::{decode_model, encode_model, load_model, save_model};
pub use config::{AttentionMode, FeatureSubset, ModelConfig};
pub use network::{attend, forward, gru_step, loss, sequence_gradient, PredictionTrajectory};
pub use params::{init_params, AttentionParams, GruParams, ModelParams};
pub use predictor::{predict_stream, HourOutput, Model, Normalization, StreamingPredictor};
pub use train::{
    final_hour_probs, gradients, split_validation, train, train_with_validator, validation_auc, EarlyStopping,
    EpochRecord, StopDecision, TrainingLog,
};
