//! Training loops: epochs, early-stopped fitting and fine-tuning.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::config::NetError;
use super::network::{SparseNetwork, Standardizer};
use crate::seed::{rng_from_seed, Rng};

/// Fine-tuning learning rate used unless the caller overrides it.
pub const FINETUNE_LEARNING_RATE: f64 = 1e-6;

/// Borrowed view of row-major features with one target per row.
#[derive(Clone, Copy, Debug)]
pub struct Samples<'a> {
    features: &'a [f64],
    targets: &'a [f64],
    dim: usize,
}

impl<'a> Samples<'a> {
    pub fn new(features: &'a [f64], targets: &'a [f64], dim: usize) -> Result<Self, NetError> {
        if dim == 0 || features.len() != targets.len() * dim {
            return Err(NetError::Shape {
                expected: targets.len() * dim,
                got: features.len(),
            });
        }
        Ok(Samples {
            features,
            targets,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn features(&self) -> &'a [f64] {
        self.features
    }

    pub fn targets(&self) -> &'a [f64] {
        self.targets
    }

    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    fn check_targets(&self) -> Result<(), NetError> {
        match self
            .targets
            .iter()
            .position(|t| !(0.0..=1.0).contains(t))
        {
            Some(row) => Err(NetError::Target {
                row,
                value: self.targets[row],
            }),
            None => Ok(()),
        }
    }
}

/// Mean squared error of eval-mode predictions.
pub fn evaluate(net: &SparseNetwork, data: Samples<'_>) -> Result<f64, NetError> {
    if data.is_empty() {
        return Err(NetError::EmptyData);
    }
    let pred = net.predict(data.features)?;
    Ok(pred
        .iter()
        .zip(data.targets)
        .map(|(y, t)| (y - t).powi(2))
        .sum::<f64>()
        / data.len() as f64)
}

/// One shuffled pass of minibatch RMSProp with dropout. Returns the mean
/// training loss over the epoch.
pub fn train_epoch(
    net: &mut SparseNetwork,
    data: Samples<'_>,
    rng: &mut Rng,
) -> Result<f64, NetError> {
    if data.is_empty() {
        return Err(NetError::EmptyData);
    }
    if data.dim != net.input_dim() {
        return Err(NetError::Shape {
            expected: net.input_dim(),
            got: data.dim,
        });
    }
    data.check_targets()?;
    let epoch = net.epochs_trained + 1;
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(rng);
    let batch_size = net.config.batch_size;
    let mut rows = Vec::with_capacity(batch_size * data.dim);
    let mut targets = Vec::with_capacity(batch_size);
    let mut total = 0.0;
    for chunk in order.chunks(batch_size) {
        rows.clear();
        targets.clear();
        for &i in chunk {
            rows.extend_from_slice(data.row(i));
            targets.push(data.targets[i]);
        }
        let (loss, grads) = net.loss_and_gradients(&rows, &targets, Some(rng))?;
        if !loss.is_finite() || !grads.is_finite() {
            return Err(NetError::Diverged { epoch });
        }
        net.apply_gradients(&grads);
        total += loss * chunk.len() as f64;
    }
    net.epochs_trained = epoch;
    Ok(total / data.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_epochs: u32,
    /// Stop after this many epochs without validation improvement.
    pub patience: Option<u32>,
    /// Prune and regrow sparse layers after every epoch.
    pub evolve: bool,
    /// Fit z-score constants on the training features before the first epoch.
    pub fit_standardizer: bool,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_epochs: 500,
            patience: Some(20),
            evolve: true,
            fit_standardizer: true,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: u32,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub initial_val_loss: Option<f64>,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: Option<u32>,
    pub best_val_loss: Option<f64>,
    pub stopped_early: bool,
}

impl FitReport {
    pub fn val_trace(&self) -> Vec<f64> {
        self.epochs.iter().filter_map(|e| e.val_loss).collect()
    }
}

/// Trains until `max_epochs` or early stopping. With validation data the
/// best-scoring weights are restored at the end; validation happens before
/// each topology update so the restored net is exactly the scored one.
pub fn fit(
    net: &mut SparseNetwork,
    train: Samples<'_>,
    val: Option<Samples<'_>>,
    opts: &FitOptions,
) -> Result<FitReport, NetError> {
    if train.is_empty() {
        return Err(NetError::EmptyData);
    }
    if opts.fit_standardizer {
        net.set_standardizer(Some(Standardizer::fit(train.features, train.dim)))?;
    }
    let mut rng = rng_from_seed(opts.seed);
    let mut report = FitReport {
        initial_val_loss: val.map(|v| evaluate(net, v)).transpose()?,
        ..FitReport::default()
    };
    let mut best: Option<(f64, SparseNetwork)> = None;
    let mut since_best = 0u32;
    let evolve = opts.evolve && net.config.sparse;
    for i in 0..opts.max_epochs {
        let train_loss = train_epoch(net, train, &mut rng)?;
        let val_loss = val.map(|v| evaluate(net, v)).transpose()?;
        let epoch = net.epochs_trained;
        log::debug!("epoch {epoch}: train {train_loss:.6} val {val_loss:?}");
        report.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        if let Some(v) = val_loss {
            if !v.is_finite() {
                return Err(NetError::Diverged { epoch });
            }
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, net.clone()));
                report.best_epoch = Some(epoch);
                report.best_val_loss = Some(v);
                since_best = 0;
            } else {
                since_best += 1;
            }
            if opts.patience.is_some_and(|p| since_best >= p) {
                report.stopped_early = true;
                break;
            }
        }
        if evolve && i + 1 < opts.max_epochs {
            net.evolve_topology(&mut rng);
        }
    }
    if let Some((_, snapshot)) = best {
        *net = snapshot;
    }
    Ok(report)
}

/// Continues training an already trained net at a small learning rate with a
/// fixed topology and frozen input scaling.
pub fn finetune(
    net: &mut SparseNetwork,
    train: Samples<'_>,
    learning_rate: f64,
    epochs: u32,
    seed: u64,
) -> Result<FitReport, NetError> {
    net.set_learning_rate(learning_rate);
    fit(
        net,
        train,
        None,
        &FitOptions {
            max_epochs: epochs,
            patience: None,
            evolve: false,
            fit_standardizer: false,
            seed,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::NetworkConfig;

    fn teacher(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        use rand::Rng as _;
        let mut rng = rng_from_seed(seed);
        let mut x = Vec::with_capacity(n * 4);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let row: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            y.push(0.5 + 0.2 * row[0] - 0.1 * row[1] + 0.05 * row[2] + 0.1 * row[3]);
            x.extend(row);
        }
        (x, y)
    }

    fn small(sparse: bool) -> NetworkConfig {
        NetworkConfig {
            input_dim: 4,
            hidden: vec![16, 8],
            sparse,
            epsilon: 2.0,
            dropout: 0.0,
            batch_size: 32,
            ..NetworkConfig::default()
        }
    }

    #[test]
    fn zero_learning_rate_leaves_weights_unchanged() {
        let (x, y) = teacher(100, 1);
        let data = Samples::new(&x, &y, 4).unwrap();
        let mut net = SparseNetwork::init(&NetworkConfig {
            learning_rate: 0.0,
            ..small(true)
        })
        .unwrap();
        let before = net.layers().to_vec();
        let mut rng = rng_from_seed(3);
        let l1 = train_epoch(&mut net, data, &mut rng).unwrap();
        let l2 = train_epoch(&mut net, data, &mut rng).unwrap();
        for (a, b) in before.iter().zip(net.layers()) {
            assert_eq!(a.dense_weights(), b.dense_weights());
            assert_eq!(a.bias(), b.bias());
            assert_eq!(a.srelu(), b.srelu());
        }
        assert!((l1 - l2).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_target_is_rejected() {
        let x = vec![0.0; 8];
        let y = vec![0.5, 1.5];
        let mut net = SparseNetwork::init(&small(false)).unwrap();
        let err = train_epoch(&mut net, Samples::new(&x, &y, 4).unwrap(), &mut rng_from_seed(0));
        assert!(matches!(err, Err(NetError::Target { row: 1, .. })));
    }

    #[test]
    fn zero_epoch_finetune_is_a_no_op() {
        let (x, y) = teacher(50, 2);
        let mut net = SparseNetwork::init(&small(true)).unwrap();
        let before = net.clone();
        let report = finetune(&mut net, Samples::new(&x, &y, 4).unwrap(), 1e-6, 0, 0).unwrap();
        assert!(report.epochs.is_empty());
        assert_eq!(net.layers(), before.layers());
    }

    #[test]
    fn fit_is_seed_deterministic() {
        let (x, y) = teacher(200, 4);
        let data = Samples::new(&x, &y, 4).unwrap();
        let run = || {
            let mut net = SparseNetwork::init(&NetworkConfig {
                dropout: 0.15,
                ..small(true)
            })
            .unwrap();
            let opts = FitOptions {
                max_epochs: 5,
                seed: 9,
                ..FitOptions::default()
            };
            fit(&mut net, data, Some(data), &opts).unwrap();
            net
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn fit_restores_best_validation_snapshot() {
        let (x, y) = teacher(200, 5);
        let (vx, vy) = teacher(100, 6);
        let mut net = SparseNetwork::init(&small(true)).unwrap();
        let val = Samples::new(&vx, &vy, 4).unwrap();
        let opts = FitOptions {
            max_epochs: 30,
            patience: Some(5),
            ..FitOptions::default()
        };
        let report = fit(&mut net, Samples::new(&x, &y, 4).unwrap(), Some(val), &opts).unwrap();
        let best = report.best_val_loss.unwrap();
        assert_eq!(evaluate(&net, val).unwrap(), best);
        assert!(report.val_trace().iter().all(|v| *v >= best));
    }
}
