//! Pretrain, fine-tune and compare against training from scratch.

use serde::{Deserialize, Serialize};

use super::metrics::{mean_and_se, mse, per_problem_mse};
use super::{baseline_fit_predict, BaselineKind, Dataset, PipelineError, Split};
use crate::net::{fit, FitOptions, FitReport, NetworkConfig, SparseNetwork};
use crate::seed::{config_hash, derive_seed};

/// Settings for one training phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhaseConfig {
    pub learning_rate: f64,
    pub max_epochs: u32,
    pub patience: Option<u32>,
    pub evolve: bool,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        PhaseConfig {
            learning_rate: 1e-3,
            max_epochs: 300,
            patience: Some(20),
            evolve: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub network: NetworkConfig,
    pub pretrain: PhaseConfig,
    /// Fine-tuning a pretrained net; topology stays fixed.
    pub finetune: PhaseConfig,
    /// Training a freshly initialized net on human data.
    pub scratch: PhaseConfig,
    /// Fraction of synthetic problems held out for pretraining early stopping.
    pub pretrain_holdout: f64,
    /// Fraction of a human training set held out for early stopping.
    pub inner_holdout: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let human = PhaseConfig {
            learning_rate: 1e-3,
            max_epochs: 200,
            patience: Some(40),
            evolve: false,
        };
        TrainConfig {
            network: NetworkConfig::default(),
            pretrain: PhaseConfig::default(),
            finetune: PhaseConfig {
                learning_rate: 1e-4,
                ..human.clone()
            },
            scratch: human,
            pretrain_holdout: 0.05,
            inner_holdout: 0.1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Prior {
    Random,
    Pretrained,
}

#[derive(Clone, Debug)]
pub struct Pretrained {
    pub net: SparseNetwork,
    pub report: FitReport,
    pub holdout_mse: f64,
}

fn check_width(net: &NetworkConfig, data: &Dataset) -> Result<(), PipelineError> {
    if net.input_dim != data.dim() {
        return Err(PipelineError::Invalid(format!(
            "network expects {} features, dataset has {}",
            net.input_dim,
            data.dim()
        )));
    }
    if data.is_empty() {
        return Err(PipelineError::Invalid("dataset is empty".into()));
    }
    Ok(())
}

/// Trains on synthetic targets with a held-out slice for early stopping.
pub fn pretrain(synth: &Dataset, cfg: &TrainConfig, seed: u64) -> Result<Pretrained, PipelineError> {
    check_width(&cfg.network, synth)?;
    let parts = synth.split_by_problem(&[1.0 - cfg.pretrain_holdout, cfg.pretrain_holdout], derive_seed(seed, "pretrain-split"))?;
    let (train, holdout) = (&parts[0], &parts[1]);
    let mut net = SparseNetwork::init(&NetworkConfig {
        learning_rate: cfg.pretrain.learning_rate,
        seed: derive_seed(seed, "pretrain-init"),
        ..cfg.network.clone()
    })?;
    let val = if holdout.is_empty() { None } else { Some(holdout.samples()?) };
    let report = fit(
        &mut net,
        train.samples()?,
        val,
        &phase_options(&cfg.pretrain, true, derive_seed(seed, "pretrain-fit")),
    )?;
    let eval = if holdout.is_empty() { train } else { holdout };
    let holdout_mse = mse(&net.predict(eval.features())?, eval.targets())?;
    log::info!(
        "pretrained for {} epochs, holdout mse {holdout_mse:.5}",
        report.epochs.len()
    );
    Ok(Pretrained {
        net,
        report,
        holdout_mse,
    })
}

fn phase_options(phase: &PhaseConfig, fit_standardizer: bool, seed: u64) -> FitOptions {
    FitOptions {
        max_epochs: phase.max_epochs,
        patience: phase.patience,
        evolve: phase.evolve,
        fit_standardizer,
        seed,
    }
}

/// Trains a net for `prior` on human data. An inner slice of `train` serves
/// for early stopping unless `monitor` is given, in which case the full
/// `train` set is used and `monitor` is scored every epoch (the phase's
/// patience still applies to it).
pub fn train_on_humans(
    prior: Prior,
    pretrained: Option<&SparseNetwork>,
    train: &Dataset,
    monitor: Option<&Dataset>,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(SparseNetwork, FitReport), PipelineError> {
    check_width(&cfg.network, train)?;
    let (phase, mut net) = match prior {
        Prior::Random => (
            &cfg.scratch,
            SparseNetwork::init(&NetworkConfig {
                seed: derive_seed(seed, "scratch-init"),
                ..cfg.network.clone()
            })?,
        ),
        Prior::Pretrained => {
            let net = pretrained
                .ok_or_else(|| PipelineError::Invalid("pretrained prior needs a pretrained net".into()))?
                .clone();
            (&cfg.finetune, net)
        }
    };
    net.set_learning_rate(phase.learning_rate);
    let opts = phase_options(phase, prior == Prior::Random, derive_seed(seed, "human-fit"));
    let report = match monitor {
        Some(m) => fit(&mut net, train.samples()?, Some(m.samples()?), &opts)?,
        None => {
            let parts = train.split_by_problem(&[1.0 - cfg.inner_holdout, cfg.inner_holdout], derive_seed(seed, "inner-split"))?;
            if parts[0].is_empty() || parts[1].is_empty() {
                fit(&mut net, train.samples()?, Some(train.samples()?), &opts)?
            } else {
                fit(&mut net, parts[0].samples()?, Some(parts[1].samples()?), &opts)?
            }
        }
    };
    Ok((net, report))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub condition: String,
    pub split: Split,
    pub rows: usize,
    /// Averaged over rows (problem x block).
    pub mse: f64,
    /// Averaged within problem, then over problems.
    pub mse_per_problem: f64,
}

pub fn score(condition: &str, preds: &[f64], data: &Dataset) -> Result<ConditionResult, PipelineError> {
    Ok(ConditionResult {
        condition: condition.to_string(),
        split: data.split().unwrap_or(Split::Test),
        rows: data.len(),
        mse: mse(preds, data.targets())?,
        mse_per_problem: per_problem_mse(preds, data)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub train: TrainConfig,
    /// Train, validation, test fractions of the human problems.
    pub human_split: [f64; 3],
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            train: TrainConfig::default(),
            human_split: [0.8, 0.1, 0.1],
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub config: PipelineConfig,
    pub config_hash: String,
    pub pretrain_holdout_mse: f64,
    pub pretrain: FitReport,
    pub finetune: FitReport,
    pub scratch: FitReport,
    pub conditions: Vec<ConditionResult>,
}

impl PipelineReport {
    pub fn find(&self, condition: &str, split: Split) -> Option<&ConditionResult> {
        self.conditions
            .iter()
            .find(|c| c.condition == condition && c.split == split)
    }
}

/// Pretrains on `synth`, then compares the pretrained net, its fine-tuned
/// version and a net trained from scratch on the human splits.
pub fn run_pipeline(synth: &Dataset, human: &Dataset, cfg: &PipelineConfig) -> Result<PipelineReport, PipelineError> {
    check_width(&cfg.train.network, synth)?;
    check_width(&cfg.train.network, human)?;
    if synth.schema() != human.schema() {
        return Err(PipelineError::Invalid("synthetic and human data use different schemas".into()));
    }
    let parts = human.split_by_problem(&cfg.human_split, derive_seed(cfg.seed, "human-split"))?;
    let [train, val, test] = <[Dataset; 3]>::try_from(parts)
        .map_err(|_| PipelineError::Invalid("human_split must have three parts".into()))?;
    let train = train.with_split(Split::Train);
    let val = val.with_split(Split::Validation);
    let test = test.with_split(Split::Test);

    let pre = pretrain(synth, &cfg.train, derive_seed(cfg.seed, "pretrain"))?;
    let (tuned, finetune) =
        train_on_humans(Prior::Pretrained, Some(&pre.net), &train, None, &cfg.train, derive_seed(cfg.seed, "finetune"))?;
    let (scratch_net, scratch) =
        train_on_humans(Prior::Random, None, &train, None, &cfg.train, derive_seed(cfg.seed, "scratch"))?;

    let mut conditions = Vec::new();
    for data in [&val, &test] {
        if data.is_empty() {
            continue;
        }
        for (name, net) in [("pretrained", &pre.net), ("finetuned", &tuned), ("random_init", &scratch_net)] {
            conditions.push(score(name, &net.predict(data.features())?, data)?);
        }
    }
    // Fit on the fine-tuning distribution itself.
    for (name, net) in [("pretrained", &pre.net), ("finetuned", &tuned)] {
        conditions.push(score(name, &net.predict(train.features())?, &train)?);
    }
    Ok(PipelineReport {
        config_hash: config_hash(cfg),
        config: cfg.clone(),
        pretrain_holdout_mse: pre.holdout_mse,
        pretrain: pre.report,
        finetune,
        scratch,
        conditions,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningCurveConfig {
    pub fractions: Vec<f64>,
    pub repeats: u32,
    pub priors: Vec<Prior>,
    /// Also fit linear regression and k-NN at every fraction.
    pub baselines: bool,
    pub knn_k: usize,
    /// Share of problems forming the constant validation set.
    pub validation_fraction: f64,
    pub train: TrainConfig,
    pub seed: u64,
}

impl Default for LearningCurveConfig {
    fn default() -> Self {
        LearningCurveConfig {
            fractions: vec![0.01, 0.02, 0.04, 0.08, 0.16, 0.32, 0.64, 1.0],
            repeats: 10,
            priors: vec![Prior::Random, Prior::Pretrained],
            baselines: true,
            knn_k: 20,
            validation_fraction: 0.2,
            train: TrainConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub fraction: f64,
    /// A prior name or a baseline name.
    pub model: String,
    pub mses: Vec<f64>,
    pub mean: f64,
    pub se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningCurveReport {
    pub config: LearningCurveConfig,
    pub config_hash: String,
    pub points: Vec<CurvePoint>,
    /// Smallest fraction at which the pretrained prior beats every
    /// non-pretrained model on mean validation MSE.
    pub crossover_fraction: Option<f64>,
}

impl LearningCurveReport {
    pub fn point(&self, fraction: f64, model: &str) -> Option<&CurvePoint> {
        self.points
            .iter()
            .find(|p| p.model == model && (p.fraction - fraction).abs() < 1e-12)
    }
}

pub fn prior_name(p: Prior) -> &'static str {
    match p {
        Prior::Random => "random",
        Prior::Pretrained => "pretrained",
    }
}

pub fn learning_curve(
    human: &Dataset,
    pretrained: Option<&SparseNetwork>,
    cfg: &LearningCurveConfig,
) -> Result<LearningCurveReport, PipelineError> {
    if cfg.fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
        return Err(PipelineError::Invalid("fractions must lie in (0, 1]".into()));
    }
    if cfg.repeats == 0 {
        return Err(PipelineError::Invalid("repeats must be positive".into()));
    }
    let parts = human.split_by_problem(
        &[1.0 - cfg.validation_fraction, cfg.validation_fraction],
        derive_seed(cfg.seed, "curve-split"),
    )?;
    let (pool, val) = (&parts[0], parts[1].clone().with_split(Split::Validation));
    let knn = BaselineKind::Knn {
        k: cfg.knn_k,
        inverse_distance: false,
    };
    let mut points = Vec::new();
    for &fraction in &cfg.fractions {
        let mut by_model: Vec<(String, Vec<f64>)> = Vec::new();
        let mut record = |name: &str, v: f64| match by_model.iter_mut().find(|(n, _)| n == name) {
            Some((_, vs)) => vs.push(v),
            None => by_model.push((name.to_string(), vec![v])),
        };
        for repeat in 0..cfg.repeats {
            let key = format!("curve-{fraction}-{repeat}");
            let train = pool.sample_problems(fraction, derive_seed(cfg.seed, &key))?;
            for &prior in &cfg.priors {
                let (net, _) = train_on_humans(prior, pretrained, &train, None, &cfg.train, derive_seed(cfg.seed, &format!("{key}-{prior:?}")))?;
                let m = mse(&net.predict(val.features())?, val.targets())?;
                log::info!("fraction {fraction} repeat {repeat} {}: {m:.5}", prior_name(prior));
                record(prior_name(prior), m);
            }
            if cfg.baselines {
                for kind in [BaselineKind::LinearRegression, knn.clone()] {
                    let (_, m) = baseline_fit_predict(&kind, &train, &val)?;
                    record(&kind.name(), m);
                }
            }
        }
        for (model, mses) in by_model {
            let (mean, se) = mean_and_se(&mses);
            points.push(CurvePoint {
                fraction,
                model,
                mses,
                mean,
                se,
            });
        }
    }
    let crossover_fraction = cfg.fractions.iter().copied().find(|&f| {
        let at: Vec<&CurvePoint> = points.iter().filter(|p| p.fraction == f).collect();
        let pre = at.iter().find(|p| p.model == "pretrained");
        let best_other = at
            .iter()
            .filter(|p| p.model != "pretrained")
            .map(|p| p.mean)
            .fold(f64::INFINITY, f64::min);
        pre.is_some_and(|p| best_other.is_finite() && p.mean < best_other)
    });
    Ok(LearningCurveReport {
        config_hash: config_hash(cfg),
        config: cfg.clone(),
        points,
        crossover_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn configs_round_trip_through_json() {
        let cfg = PipelineConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: PipelineConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(config_hash(&back), config_hash(&cfg));
        let lc: LearningCurveConfig = serde_json::from_str(&serde_json::to_string(&LearningCurveConfig::default()).unwrap()).unwrap();
        assert_eq!(lc.repeats, 10);
    }
}
