use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, PipelineError};
use crate::seed::rng_from_seed;

pub fn mse(predictions: &[f64], targets: &[f64]) -> Result<f64, PipelineError> {
    if predictions.len() != targets.len() {
        return Err(PipelineError::LengthMismatch {
            predictions: predictions.len(),
            targets: targets.len(),
        });
    }
    if targets.is_empty() {
        return Err(PipelineError::Invalid("mse of an empty set".into()));
    }
    Ok(predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t).powi(2))
        .sum::<f64>()
        / targets.len() as f64)
}

/// Averages squared error within each problem first, then across problems.
pub fn per_problem_mse(predictions: &[f64], data: &Dataset) -> Result<f64, PipelineError> {
    if predictions.len() != data.len() {
        return Err(PipelineError::LengthMismatch {
            predictions: predictions.len(),
            targets: data.len(),
        });
    }
    let groups = data.problem_groups();
    if groups.is_empty() {
        return Err(PipelineError::Invalid("mse of an empty set".into()));
    }
    let t = data.targets();
    let total: f64 = groups
        .iter()
        .map(|g| g.iter().map(|&i| (predictions[i] - t[i]).powi(2)).sum::<f64>() / g.len() as f64)
        .sum();
    Ok(total / groups.len() as f64)
}

/// Mean and standard error of the mean (sample standard deviation / sqrt n).
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub n_samples: usize,
    /// Problems per resample.
    pub sample_size: usize,
    pub with_replacement: bool,
    pub bins: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            n_samples: 100,
            sample_size: 210,
            with_replacement: true,
            bins: 20,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub config: BootstrapConfig,
    pub mses: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation across resamples.
    pub std: f64,
    pub histogram: Vec<HistogramBin>,
}

/// Problem-level bootstrap of the MSE of `predictions` against `data`.
pub fn bootstrap_mse(
    predictions: &[f64],
    data: &Dataset,
    cfg: &BootstrapConfig,
) -> Result<BootstrapSummary, PipelineError> {
    if predictions.len() != data.len() {
        return Err(PipelineError::LengthMismatch {
            predictions: predictions.len(),
            targets: data.len(),
        });
    }
    let groups = data.problem_groups();
    if cfg.sample_size == 0 || cfg.sample_size > groups.len() {
        return Err(PipelineError::Invalid(format!(
            "bootstrap sample size {} must be in 1..={}",
            cfg.sample_size,
            groups.len()
        )));
    }
    if cfg.n_samples == 0 {
        return Err(PipelineError::Invalid("bootstrap needs at least one sample".into()));
    }
    let t = data.targets();
    let sq: Vec<(f64, usize)> = groups
        .iter()
        .map(|g| {
            let s = g.iter().map(|&i| (predictions[i] - t[i]).powi(2)).sum::<f64>();
            (s, g.len())
        })
        .collect();
    let mut rng = rng_from_seed(cfg.seed);
    let mut mses = Vec::with_capacity(cfg.n_samples);
    for _ in 0..cfg.n_samples {
        let picks: Vec<usize> = if cfg.with_replacement {
            (0..cfg.sample_size)
                .map(|_| rng.random_range(0..groups.len()))
                .collect()
        } else {
            sample_indices(&mut rng, groups.len(), cfg.sample_size).into_vec()
        };
        let (s, n) = picks
            .iter()
            .fold((0.0, 0usize), |(s, n), &g| (s + sq[g].0, n + sq[g].1));
        mses.push(s / n as f64);
    }
    let (mean, se) = mean_and_se(&mses);
    let std = se * (mses.len() as f64).sqrt();
    Ok(BootstrapSummary {
        config: cfg.clone(),
        histogram: histogram(&mses, cfg.bins.max(1)),
        mses,
        mean,
        std,
    })
}

fn histogram(values: &[f64], bins: usize) -> Vec<HistogramBin> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|b| HistogramBin {
            lo: lo + b as f64 * width,
            hi: lo + (b + 1) as f64 * width,
            count: 0,
        })
        .collect();
    for v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        out[b].count += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_arithmetic() {
        assert_eq!(mse(&[0.3, 0.9], &[0.3, 0.9]).unwrap(), 0.0);
        assert_eq!(mse(&[0.5; 4], &[0.0, 1.0, 0.0, 1.0]).unwrap(), 0.25);
        assert!((mse(&[0.2, 0.7], &[0.4, 0.4]).unwrap() - 0.065).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(matches!(
            mse(&[0.1], &[0.1, 0.2]),
            Err(PipelineError::LengthMismatch { predictions: 1, targets: 2 })
        ));
        assert!(mse(&[], &[]).is_err());
    }

    #[test]
    fn standard_error_of_known_values() {
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn histogram_counts_everything() {
        let h = histogram(&[0.0, 0.1, 0.5, 1.0, 1.0], 4);
        assert_eq!(h.iter().map(|b| b.count).sum::<usize>(), 5);
        assert_eq!(h[3].count, 2);
    }
}
