//! Attentive message-passing property predictor: graph featurization, the
//! attention/GRU network, training with target standardization, and
//! regression metrics.

pub mod featurize;
pub mod model;
pub mod train;

pub use featurize::{featurize, FeaturizeError, GraphTensors, EDGE_FEATURES, NODE_FEATURES};
pub use model::{
    attention_diagnostics, predictor_backward, predictor_forward, predictor_forward_steps,
    AttentionDiagnostics, PredictorParams,
};
pub use train::{
    predict, predict_standardized, regression_metrics, train_predictor, PredictorCheckpoint,
    PredictorConfig, PredictorError, PredictorHistory, TargetMetrics, TargetScaler,
};
