//! Pseudo-human choice data: a distorted, finitely sampled version of a base
//! model's predictions.

use std::collections::HashMap;

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::gamble::Problem;
use crate::io::TargetRecord;
use crate::models::{BlockSpec, ModelSpec, PtParams};
use crate::seed::derived_rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HumanSimConfig {
    /// Model whose rates are blended into the base rates.
    pub distortion: ModelSpec,
    /// Weight of the base rate in the blend.
    pub base_weight: f64,
    /// `None` means infinitely many participants (no sampling noise).
    pub participants: Option<u32>,
    pub trials_per_participant: u32,
}

impl Default for HumanSimConfig {
    fn default() -> Self {
        HumanSimConfig {
            distortion: ModelSpec::Pt {
                params: PtParams::default(),
                temperature: 10.0,
            },
            base_weight: 0.8,
            participants: Some(16),
            trials_per_participant: 5,
        }
    }
}

impl HumanSimConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(0.0..=1.0).contains(&self.base_weight) {
            return Err(PipelineError::Invalid("base_weight must be in [0, 1]".into()));
        }
        if self.participants == Some(0) || self.trials_per_participant == 0 {
            return Err(PipelineError::Invalid("participants and trials must be positive".into()));
        }
        self.distortion.validate().map_err(PipelineError::Invalid)
    }
}

/// Turns base-model targets into pseudo-human targets. Each record's rate is
/// blended with the distortion model, then every simulated participant makes
/// `trials_per_participant` choices; the reported rate is the mean over
/// participants of their choice proportions.
pub fn simulate_human_targets(
    problems: &[Problem],
    base: &[TargetRecord],
    cfg: &HumanSimConfig,
    seed: u64,
) -> Result<Vec<TargetRecord>, PipelineError> {
    cfg.validate()?;
    let by_id: HashMap<&str, &Problem> = problems.iter().map(|p| (p.id(), p)).collect();
    let mut distortion_cache: HashMap<&str, f64> = HashMap::new();
    let mut out = Vec::with_capacity(base.len());
    for t in base {
        let p = by_id
            .get(t.problem_id.as_str())
            .ok_or_else(|| PipelineError::UnknownProblem(t.problem_id.clone()))?;
        let block = BlockSpec::new(t.block, t.feedback);
        let d = match &cfg.distortion {
            ModelSpec::Beast { .. } => cfg.distortion.rates(p, &[block], seed)[0],
            other => *distortion_cache
                .entry(p.id())
                .or_insert_with(|| other.rates(p, &[block], seed)[0]),
        };
        let rate = (cfg.base_weight * t.a_rate + (1.0 - cfg.base_weight) * d).clamp(0.0, 1.0);
        let (a_rate, n) = match cfg.participants {
            None => (rate, 0),
            Some(n) => {
                let mut rng = derived_rng(seed, &format!("{}#{}", t.problem_id, t.block));
                let trials = u64::from(cfg.trials_per_participant);
                let binom = Binomial::new(trials, rate)
                    .map_err(|e| PipelineError::Invalid(format!("binomial: {e}")))?;
                let chosen: u64 = (0..n).map(|_| binom.sample(&mut rng)).sum();
                (chosen as f64 / (u64::from(n) * trials) as f64, n)
            }
        };
        out.push(TargetRecord {
            problem_id: t.problem_id.clone(),
            block: t.block,
            feedback: t.feedback,
            n,
            a_rate,
        });
    }
    Ok(out)
}
