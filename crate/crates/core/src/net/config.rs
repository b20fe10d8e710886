use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A sparse network must stay strictly below this many trainable parameters.
pub const MAX_SPARSE_PARAMS: usize = 10_000;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("invalid network config: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: expected width {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("sparse network has {count} parameters, limit is {limit}")]
    TooManyParameters { count: usize, limit: usize },
    #[error("non-finite loss at epoch {epoch}")]
    Diverged { epoch: u32 },
    #[error("empty training set")]
    EmptyData,
    #[error("target {value} at row {row} is outside [0, 1]")]
    Target { row: usize, value: f64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("checkpoint version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("checkpoint io at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkConfig {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub dropout: f64,
    pub sparse: bool,
    /// Expected density parameter of the Erdős–Rényi initial topology.
    pub epsilon: f64,
    /// Fraction of edges pruned and regrown per evolution step.
    pub zeta: f64,
    pub learning_rate: f64,
    pub rms_decay: f64,
    pub rms_epsilon: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            input_dim: 12,
            hidden: vec![200, 275, 100],
            dropout: 0.15,
            sparse: true,
            epsilon: 5.0,
            zeta: 0.3,
            learning_rate: 1e-3,
            rms_decay: 0.9,
            rms_epsilon: 1e-8,
            batch_size: 128,
            seed: 0,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        let bad = |m: &str| Err(NetError::InvalidConfig(m.to_string()));
        if self.input_dim == 0 {
            return bad("input_dim must be positive");
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return bad("hidden layer widths must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must be in [0, 1)");
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be positive");
        }
        if !(0.0..=1.0).contains(&self.zeta) {
            return bad("zeta must be in [0, 1]");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be non-negative");
        }
        if !(0.0..1.0).contains(&self.rms_decay) {
            return bad("rms_decay must be in [0, 1)");
        }
        if !(self.rms_epsilon > 0.0) {
            return bad("rms_epsilon must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        Ok(())
    }
}
