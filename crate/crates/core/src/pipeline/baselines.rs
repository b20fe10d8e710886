//! Non-network reference models.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{mse, Dataset, PipelineError};
use crate::net::Standardizer;

/// Ridge strength used when the design matrix is rank deficient.
pub const RIDGE_FALLBACK: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaselineKind {
    LinearRegression,
    Knn {
        k: usize,
        #[serde(default)]
        inverse_distance: bool,
    },
}

impl BaselineKind {
    pub fn name(&self) -> String {
        match self {
            BaselineKind::LinearRegression => "linear_regression".into(),
            BaselineKind::Knn { k, inverse_distance } => {
                format!("knn_k{k}{}", if *inverse_distance { "_idw" } else { "" })
            }
        }
    }
}

/// Ordinary least squares with an intercept. Predictions are clamped to [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct LinearRegression {
    /// Intercept first, then one coefficient per feature.
    pub coefficients: Vec<f64>,
    pub used_ridge: bool,
}

impl LinearRegression {
    pub fn fit(features: &[f64], targets: &[f64], dim: usize) -> Result<Self, PipelineError> {
        let n = targets.len();
        if n == 0 || features.len() != n * dim {
            return Err(PipelineError::Invalid("linear regression needs matching, non-empty data".into()));
        }
        let p = dim + 1;
        let x = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { features[i * dim + j - 1] });
        let y = DVector::from_column_slice(targets);
        let svd = x.clone().svd(true, true);
        let sv = &svd.singular_values;
        let max = sv.max();
        let min = sv.min();
        let full_rank = n >= p && max > 0.0 && min / max > 1e-12;
        if full_rank {
            let beta = svd
                .solve(&y, 0.0)
                .map_err(|e| PipelineError::Invalid(format!("least squares failed: {e}")))?;
            return Ok(LinearRegression {
                coefficients: beta.iter().copied().collect(),
                used_ridge: false,
            });
        }
        log::warn!("design matrix is rank deficient; falling back to ridge with lambda {RIDGE_FALLBACK}");
        let xt = x.transpose();
        let gram = &xt * &x + DMatrix::identity(p, p) * RIDGE_FALLBACK;
        let rhs = &xt * &y;
        let beta = gram
            .cholesky()
            .ok_or_else(|| PipelineError::Invalid("ridge system is not positive definite".into()))?
            .solve(&rhs);
        Ok(LinearRegression {
            coefficients: beta.iter().copied().collect(),
            used_ridge: true,
        })
    }

    pub fn predict(&self, features: &[f64]) -> Vec<f64> {
        let dim = self.coefficients.len() - 1;
        features
            .chunks_exact(dim)
            .map(|row| {
                let y = self.coefficients[0]
                    + row.iter().zip(&self.coefficients[1..]).map(|(x, b)| x * b).sum::<f64>();
                y.clamp(0.0, 1.0)
            })
            .collect()
    }
}

/// Brute-force k-nearest-neighbour regression on z-scored features.
#[derive(Clone, Debug)]
pub struct Knn {
    k: usize,
    inverse_distance: bool,
    scaler: Standardizer,
    train: Vec<f64>,
    targets: Vec<f64>,
    dim: usize,
}

impl Knn {
    pub fn fit(
        features: &[f64],
        targets: &[f64],
        dim: usize,
        k: usize,
        inverse_distance: bool,
    ) -> Result<Self, PipelineError> {
        if k == 0 || targets.is_empty() || features.len() != targets.len() * dim {
            return Err(PipelineError::Invalid("knn needs k >= 1 and matching, non-empty data".into()));
        }
        let scaler = Standardizer::fit(features, dim);
        let train = scale(&scaler, features, dim);
        Ok(Knn {
            k: k.min(targets.len()),
            inverse_distance,
            scaler,
            train,
            targets: targets.to_vec(),
            dim,
        })
    }

    pub fn predict(&self, features: &[f64]) -> Vec<f64> {
        let query = scale(&self.scaler, features, self.dim);
        let mut dist: Vec<(f64, usize)> = Vec::with_capacity(self.targets.len());
        query
            .chunks_exact(self.dim)
            .map(|q| {
                dist.clear();
                dist.extend(self.train.chunks_exact(self.dim).enumerate().map(|(i, t)| {
                    let d2: f64 = q.iter().zip(t).map(|(a, b)| (a - b).powi(2)).sum();
                    (d2, i)
                }));
                let k = self.k;
                if k < dist.len() {
                    dist.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                }
                let nearest = &dist[..k];
                if self.inverse_distance {
                    let exact: Vec<f64> = nearest
                        .iter()
                        .filter(|(d, _)| *d == 0.0)
                        .map(|(_, i)| self.targets[*i])
                        .collect();
                    if !exact.is_empty() {
                        return exact.iter().sum::<f64>() / exact.len() as f64;
                    }
                    let (num, den) = nearest.iter().fold((0.0, 0.0), |(n, d), (d2, i)| {
                        let w = 1.0 / d2.sqrt();
                        (n + w * self.targets[*i], d + w)
                    });
                    num / den
                } else {
                    nearest.iter().map(|(_, i)| self.targets[*i]).sum::<f64>() / k as f64
                }
            })
            .collect()
    }
}

fn scale(s: &Standardizer, features: &[f64], dim: usize) -> Vec<f64> {
    features
        .iter()
        .enumerate()
        .map(|(i, &x)| s.apply(i % dim, x))
        .collect()
}

/// Fits `kind` on `train` and returns predictions for `eval` with their MSE.
pub fn baseline_fit_predict(
    kind: &BaselineKind,
    train: &Dataset,
    eval: &Dataset,
) -> Result<(Vec<f64>, f64), PipelineError> {
    if train.dim() != eval.dim() {
        return Err(PipelineError::Invalid("train and eval feature widths differ".into()));
    }
    let preds = match kind {
        BaselineKind::LinearRegression => {
            LinearRegression::fit(train.features(), train.targets(), train.dim())?.predict(eval.features())
        }
        BaselineKind::Knn { k, inverse_distance } => {
            Knn::fit(train.features(), train.targets(), train.dim(), *k, *inverse_distance)?
                .predict(eval.features())
        }
    };
    let m = mse(&preds, eval.targets())?;
    Ok((preds, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_linear_map_is_recovered() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..50 {
            let a = (i as f64 * 0.37).sin();
            let b = (i as f64 * 0.11).cos();
            x.extend([a, b]);
            y.push(0.5 + 0.2 * a - 0.1 * b);
        }
        let lr = LinearRegression::fit(&x, &y, 2).unwrap();
        assert!(!lr.used_ridge);
        let pred = lr.predict(&x);
        assert!(mse(&pred, &y).unwrap() < 1e-10);
    }

    #[test]
    fn collinear_design_falls_back_to_ridge() {
        let x: Vec<f64> = (0..20).flat_map(|i| [i as f64, 2.0 * i as f64]).collect();
        let y: Vec<f64> = (0..20).map(|i| i as f64 / 40.0).collect();
        let lr = LinearRegression::fit(&x, &y, 2).unwrap();
        assert!(lr.used_ridge);
        assert!(mse(&lr.predict(&x), &y).unwrap() < 1e-6);
    }

    #[test]
    fn predictions_are_clamped() {
        let lr = LinearRegression {
            coefficients: vec![0.0, 10.0],
            used_ridge: false,
        };
        assert_eq!(lr.predict(&[-1.0, 0.05, 1.0]), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn one_nearest_neighbour_returns_the_duplicate() {
        let x = [0.0, 0.0, 1.0, 5.0, 2.0, -3.0];
        let y = [0.1, 0.6, 0.9];
        for idw in [false, true] {
            let knn = Knn::fit(&x, &y, 2, 1, idw).unwrap();
            assert_eq!(knn.predict(&[1.0, 5.0]), vec![0.6]);
        }
        let knn = Knn::fit(&x, &y, 2, 3, false).unwrap();
        assert!((knn.predict(&[1.0, 5.0])[0] - 1.6 / 3.0).abs() < 1e-12);
    }
}
