//! Synthetic target generation.

use serde::{Deserialize, Serialize};

use crate::gamble::Problem;
use crate::io::TargetRecord;
use crate::seed::derived_rng;

use super::{beast_rate, eu_rate, pt_rate, BeastParams, BeastVariant, BlockSpec, PtParams};

/// Which model labels the problems.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelSpec {
    Eu {
        temperature: f64,
    },
    Pt {
        #[serde(default)]
        params: PtParams,
        temperature: f64,
    },
    Beast {
        variant: BeastVariant,
        #[serde(default)]
        params: BeastParams,
    },
}

impl ModelSpec {
    pub fn beast15() -> Self {
        ModelSpec::Beast {
            variant: BeastVariant::Beast15,
            params: BeastParams::default(),
        }
    }

    pub fn beast18() -> Self {
        ModelSpec::Beast {
            variant: BeastVariant::Beast18,
            params: BeastParams::default(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            ModelSpec::Eu { temperature } | ModelSpec::Pt { temperature, .. }
                if !temperature.is_finite() =>
            {
                Err("temperature must be finite".into())
            }
            ModelSpec::Pt { params, .. } => params.validate(),
            ModelSpec::Beast { params, .. } => params.validate(),
            ModelSpec::Eu { .. } => Ok(()),
        }
    }

    /// The `n` column: simulated agents, or 0 for closed-form models.
    pub fn n(&self) -> u32 {
        match self {
            ModelSpec::Beast { params, .. } => params.n_agents,
            _ => 0,
        }
    }

    /// Per-block rates for one problem. Stochastic models draw from a stream
    /// derived from `(seed, problem id)`.
    pub fn rates(&self, p: &Problem, blocks: &[BlockSpec], seed: u64) -> Vec<f64> {
        match self {
            ModelSpec::Eu { temperature } => vec![eu_rate(p, *temperature); blocks.len()],
            ModelSpec::Pt {
                params,
                temperature,
            } => vec![pt_rate(p, params, *temperature); blocks.len()],
            ModelSpec::Beast { variant, params } => {
                let mut rng = derived_rng(seed, p.id());
                beast_rate(p, *variant, params, blocks, &mut rng)
                    .blocks
                    .iter()
                    .map(|b| b.a_rate)
                    .collect()
            }
        }
    }
}

/// Calls `emit` with one record per (problem, block), in problem order.
pub fn for_each_target<E, F>(
    problems: &[Problem],
    model: &ModelSpec,
    blocks: &[BlockSpec],
    seed: u64,
    mut emit: F,
) -> Result<(), E>
where
    F: FnMut(TargetRecord) -> Result<(), E>,
{
    let n = model.n();
    for (i, p) in problems.iter().enumerate() {
        for (b, rate) in blocks.iter().zip(model.rates(p, blocks, seed)) {
            emit(TargetRecord {
                problem_id: p.id().to_string(),
                block: b.block,
                feedback: b.feedback,
                n,
                a_rate: rate,
            })?;
        }
        if (i + 1) % 10_000 == 0 {
            log::info!("labelled {} / {} problems", i + 1, problems.len());
        }
    }
    Ok(())
}

pub fn generate_targets(
    problems: &[Problem],
    model: &ModelSpec,
    blocks: &[BlockSpec],
    seed: u64,
) -> Vec<TargetRecord> {
    let mut out = Vec::with_capacity(problems.len() * blocks.len());
    for_each_target::<std::convert::Infallible, _>(problems, model, blocks, seed, |r| {
        out.push(r);
        Ok(())
    })
    .unwrap_or_else(|never| match never {});
    out
}
