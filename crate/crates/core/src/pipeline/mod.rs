//! Datasets, metrics, baselines and the experiment drivers.

mod baselines;
mod dataset;
mod experiment;
mod humans;
mod metrics;

use thiserror::Error;

use crate::io::IoError;
use crate::net::NetError;

pub use baselines::{baseline_fit_predict, BaselineKind, Knn, LinearRegression, RIDGE_FALLBACK};
pub use dataset::{Dataset, Split};
pub use experiment::{
    learning_curve, pretrain, prior_name, run_pipeline, score, train_on_humans, ConditionResult,
    CurvePoint, LearningCurveConfig, LearningCurveReport, PhaseConfig, PipelineConfig,
    PipelineReport, Pretrained, Prior, TrainConfig,
};
pub use humans::{simulate_human_targets, HumanSimConfig};
pub use metrics::{
    bootstrap_mse, mean_and_se, mse, per_problem_mse, BootstrapConfig, BootstrapSummary,
    HistogramBin,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("{0}")]
    Invalid(String),
    #[error("target refers to unknown problem {0:?}")]
    UnknownProblem(String),
    #[error("length mismatch: {predictions} predictions for {targets} targets")]
    LengthMismatch { predictions: usize, targets: usize },
}

impl PipelineError {
    /// Whether the failure happened while training rather than while
    /// validating inputs.
    pub fn is_training_failure(&self) -> bool {
        matches!(
            self,
            PipelineError::Net(NetError::Diverged { .. } | NetError::EmptyData)
        )
    }
}
