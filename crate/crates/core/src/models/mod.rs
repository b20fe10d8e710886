//! Cognitive decision models that map a problem to per-block choice-A rates.

pub mod beast;
pub mod eu;
pub mod pt;
pub mod targets;

use serde::{Deserialize, Serialize};

pub use beast::{beast_rate, BeastParams, BeastVariant, Tool};
pub use eu::eu_rate;
pub use pt::{pt_rate, pt_value, PtParams};
pub use targets::{for_each_target, generate_targets, ModelSpec};

/// One block at which a model is queried.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub block: u32,
    pub feedback: bool,
}

impl BlockSpec {
    pub const fn new(block: u32, feedback: bool) -> Self {
        BlockSpec { block, feedback }
    }

    /// Two-block layout used for choices13k-style data: block 1 without
    /// feedback, block 2 with feedback.
    pub fn two_block() -> Vec<BlockSpec> {
        vec![BlockSpec::new(1, false), BlockSpec::new(2, true)]
    }

    /// CPC layout: five blocks, feedback from block 2 on.
    pub fn cpc_five_block() -> Vec<BlockSpec> {
        (1..=5).map(|b| BlockSpec::new(b, b > 1)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockRate {
    pub block: u32,
    pub feedback: bool,
    pub a_rate: f64,
}

/// A model's per-block predictions for one problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub problem_id: String,
    pub blocks: Vec<BlockRate>,
}

/// `1 / (1 + e^-x)`.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Soft choice rule shared by the closed-form models. A non-positive
/// temperature gives the hard argmax, with ties at 0.5.
pub(crate) fn choice_rate(advantage: f64, temperature: f64) -> f64 {
    if temperature > 0.0 {
        logistic(advantage / temperature)
    } else if advantage.abs() < 1e-12 {
        0.5
    } else if advantage > 0.0 {
        1.0
    } else {
        0.0
    }
}
