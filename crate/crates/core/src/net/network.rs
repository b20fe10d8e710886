//! Layered MLP with coordinate-list sparse connectivity.
//!
//! Each layer stores only its active edges, sorted by `(row, col)`, so a
//! position outside the connectivity mask has no storage and is zero by
//! construction. Dense layers simply list every position.
//!
//! Batched passes keep activations unit-major (`unit * batch + sample`) so the
//! per-edge inner loops run over contiguous memory.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{NetError, NetworkConfig, MAX_SPARSE_PARAMS};
use super::srelu::Srelu;
use crate::seed::{rng_from_seed, Rng as StreamRng};

/// Per-feature z-score constants, computed on the training data and frozen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Fits on row-major `rows` of width `dim`. Constant features get std 1.
    pub fn fit(rows: &[f64], dim: usize) -> Self {
        let n = (rows.len() / dim.max(1)).max(1) as f64;
        let mut mean = vec![0.0; dim];
        for row in rows.chunks_exact(dim) {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for row in rows.chunks_exact(dim) {
            for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
                *v += (x - m).powi(2);
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > 1e-12 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, std }
    }

    #[inline]
    pub fn apply(&self, j: usize, x: f64) -> f64 {
        (x - self.mean[j]) / self.std[j]
    }
}

/// Which SReLU parameter a [`ParamId::Srelu`] refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SreluParam {
    TLeft,
    ALeft,
    TRight,
    ARight,
}

impl SreluParam {
    pub const ALL: [SreluParam; 4] = [
        SreluParam::TLeft,
        SreluParam::ALeft,
        SreluParam::TRight,
        SreluParam::ARight,
    ];

    fn index(self) -> usize {
        self as usize
    }
}

/// Addresses one trainable scalar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamId {
    Weight { layer: usize, edge: usize },
    Bias { layer: usize, unit: usize },
    Srelu { layer: usize, unit: usize, param: SreluParam },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub(crate) in_dim: usize,
    pub(crate) out_dim: usize,
    pub(crate) sparse: bool,
    pub(crate) rows: Vec<u32>,
    pub(crate) cols: Vec<u32>,
    pub(crate) weights: Vec<f64>,
    pub(crate) bias: Vec<f64>,
    /// Empty for the sigmoid output layer.
    pub(crate) srelu: Vec<Srelu>,
    pub(crate) ms_weights: Vec<f64>,
    pub(crate) ms_bias: Vec<f64>,
    pub(crate) ms_srelu: Vec<[f64; 4]>,
}

impl Layer {
    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn is_sparse(&self) -> bool {
        self.sparse
    }

    pub fn edge_count(&self) -> usize {
        self.weights.len()
    }

    pub fn edge(&self, e: usize) -> (usize, usize, f64) {
        (self.rows[e] as usize, self.cols[e] as usize, self.weights[e])
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.edge_count()).map(move |e| self.edge(e))
    }

    pub fn srelu(&self) -> &[Srelu] {
        &self.srelu
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Full `out_dim x in_dim` weight matrix, zero off the mask.
    pub fn dense_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.in_dim * self.out_dim];
        for (r, c, v) in self.edges() {
            w[r * self.in_dim + c] = v;
        }
        w
    }

    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.in_dim * self.out_dim];
        for (r, c, _) in self.edges() {
            m[r * self.in_dim + c] = true;
        }
        m
    }

    fn init_limit(&self) -> f64 {
        (6.0 / (self.in_dim + self.out_dim) as f64).sqrt()
    }

    pub fn parameter_count(&self) -> usize {
        self.edge_count() + self.bias.len() + 4 * self.srelu.len()
    }

    fn check(&self) -> Result<(), NetError> {
        let bad = |m: &str| Err(NetError::Checkpoint(m.to_string()));
        let n = self.weights.len();
        if self.rows.len() != n || self.cols.len() != n || self.ms_weights.len() != n {
            return bad("edge arrays have inconsistent lengths");
        }
        if self.bias.len() != self.out_dim || self.ms_bias.len() != self.out_dim {
            return bad("bias length does not match layer width");
        }
        if self.srelu.len() != self.ms_srelu.len()
            || !(self.srelu.is_empty() || self.srelu.len() == self.out_dim)
        {
            return bad("SReLU parameter count does not match layer width");
        }
        let mut prev: Option<usize> = None;
        for (r, c, _) in self.edges() {
            if r >= self.out_dim || c >= self.in_dim {
                return bad("edge outside layer bounds");
            }
            let flat = r * self.in_dim + c;
            if prev.is_some_and(|p| p >= flat) {
                return bad("edges must be sorted and unique");
            }
            prev = Some(flat);
        }
        Ok(())
    }
}

/// Activations of one batched forward pass.
#[derive(Clone, Debug)]
pub struct ForwardPass {
    batch: usize,
    /// Standardized inputs, unit-major.
    inputs: Vec<f64>,
    /// Per layer, pre-activations `W x + b`.
    pre: Vec<Vec<f64>>,
    /// Per hidden layer, SReLU output after dropout (the next layer's input).
    post: Vec<Vec<f64>>,
    /// Per hidden layer, dropout multipliers (empty in eval mode).
    keep: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl ForwardPass {
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    /// Pre-activation of `unit` in `layer` for `sample`.
    pub fn pre_activation(&self, layer: usize, unit: usize, sample: usize) -> f64 {
        self.pre[layer][unit * self.batch + sample]
    }
}

/// Gradients with the same layout as the network's parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub(crate) weights: Vec<Vec<f64>>,
    pub(crate) bias: Vec<Vec<f64>>,
    pub(crate) srelu: Vec<Vec<[f64; 4]>>,
}

impl Gradients {
    pub fn get(&self, id: ParamId) -> f64 {
        match id {
            ParamId::Weight { layer, edge } => self.weights[layer][edge],
            ParamId::Bias { layer, unit } => self.bias[layer][unit],
            ParamId::Srelu { layer, unit, param } => self.srelu[layer][unit][param.index()],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().flatten().all(|g| g.is_finite())
            && self.bias.iter().flatten().all(|g| g.is_finite())
            && self.srelu.iter().flatten().flatten().all(|g| g.is_finite())
    }
}

/// Outcome of one topology evolution step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvolveStats {
    /// `(layer, row, col)` of every pruned edge.
    pub removed: Vec<(usize, usize, usize)>,
    /// `(layer, row, col)` of every regrown edge.
    pub added: Vec<(usize, usize, usize)>,
    pub skipped_layers: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseNetwork {
    pub(crate) config: NetworkConfig,
    pub(crate) layers: Vec<Layer>,
    pub(crate) standardizer: Option<Standardizer>,
    pub(crate) epochs_trained: u32,
}

impl SparseNetwork {
    /// Builds a network from `cfg`, seeded by `cfg.seed`.
    ///
    /// Hidden layers of a sparse network keep each potential edge with
    /// probability `epsilon (n_in + n_out) / (n_in n_out)`; the one-unit
    /// output layer is always dense.
    pub fn init(cfg: &NetworkConfig) -> Result<Self, NetError> {
        cfg.validate()?;
        let mut rng = rng_from_seed(cfg.seed);
        let mut dims = vec![cfg.input_dim];
        dims.extend(&cfg.hidden);
        dims.push(1);
        let n_layers = dims.len() - 1;
        let mut layers = Vec::with_capacity(n_layers);
        for k in 0..n_layers {
            let (n_in, n_out) = (dims[k], dims[k + 1]);
            let is_output = k + 1 == n_layers;
            let sparse = cfg.sparse && !is_output;
            let keep_prob = if sparse {
                (cfg.epsilon * (n_in + n_out) as f64 / (n_in * n_out) as f64).min(1.0)
            } else {
                1.0
            };
            let limit = (6.0 / (n_in + n_out) as f64).sqrt();
            let (mut rows, mut cols, mut weights) = (Vec::new(), Vec::new(), Vec::new());
            for r in 0..n_out {
                for c in 0..n_in {
                    if keep_prob >= 1.0 || rng.random::<f64>() < keep_prob {
                        rows.push(r as u32);
                        cols.push(c as u32);
                        weights.push(rng.random_range(-limit..=limit));
                    }
                }
            }
            let n_edges = weights.len();
            let srelu = if is_output {
                Vec::new()
            } else {
                vec![Srelu::default(); n_out]
            };
            layers.push(Layer {
                in_dim: n_in,
                out_dim: n_out,
                sparse,
                rows,
                cols,
                weights,
                bias: vec![0.0; n_out],
                ms_srelu: vec![[0.0; 4]; srelu.len()],
                srelu,
                ms_weights: vec![0.0; n_edges],
                ms_bias: vec![0.0; n_out],
            });
        }
        let net = SparseNetwork {
            config: cfg.clone(),
            layers,
            standardizer: None,
            epochs_trained: 0,
        };
        if cfg.sparse && net.parameter_count() >= MAX_SPARSE_PARAMS {
            return Err(NetError::TooManyParameters {
                count: net.parameter_count(),
                limit: MAX_SPARSE_PARAMS,
            });
        }
        Ok(net)
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    pub fn epochs_trained(&self) -> u32 {
        self.epochs_trained
    }

    pub fn standardizer(&self) -> Option<&Standardizer> {
        self.standardizer.as_ref()
    }

    pub fn set_standardizer(&mut self, s: Option<Standardizer>) -> Result<(), NetError> {
        if let Some(st) = &s {
            if st.mean.len() != self.input_dim() || st.std.len() != self.input_dim() {
                return Err(NetError::Shape {
                    expected: self.input_dim(),
                    got: st.mean.len(),
                });
            }
        }
        self.standardizer = s;
        Ok(())
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        self.config.learning_rate = lr;
    }

    /// Weights, biases and SReLU parameters.
    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(Layer::parameter_count).sum()
    }

    pub fn nonzero_weight_count(&self) -> usize {
        self.layers
            .iter()
            .flat_map(|l| &l.weights)
            .filter(|w| **w != 0.0)
            .count()
    }

    pub fn edge_count(&self) -> usize {
        self.layers.iter().map(Layer::edge_count).sum()
    }

    /// Every trainable scalar, layer by layer.
    pub fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = Vec::with_capacity(self.parameter_count());
        for (layer, l) in self.layers.iter().enumerate() {
            ids.extend((0..l.edge_count()).map(|edge| ParamId::Weight { layer, edge }));
            ids.extend((0..l.out_dim).map(|unit| ParamId::Bias { layer, unit }));
            for unit in 0..l.srelu.len() {
                ids.extend(
                    SreluParam::ALL
                        .iter()
                        .map(|&param| ParamId::Srelu { layer, unit, param }),
                );
            }
        }
        ids
    }

    pub fn get_param(&self, id: ParamId) -> f64 {
        match id {
            ParamId::Weight { layer, edge } => self.layers[layer].weights[edge],
            ParamId::Bias { layer, unit } => self.layers[layer].bias[unit],
            ParamId::Srelu { layer, unit, param } => {
                self.layers[layer].srelu[unit].to_array()[param.index()]
            }
        }
    }

    pub fn set_param(&mut self, id: ParamId, value: f64) {
        match id {
            ParamId::Weight { layer, edge } => self.layers[layer].weights[edge] = value,
            ParamId::Bias { layer, unit } => self.layers[layer].bias[unit] = value,
            ParamId::Srelu { layer, unit, param } => {
                let mut a = self.layers[layer].srelu[unit].to_array();
                a[param.index()] = value;
                self.layers[layer].srelu[unit] = Srelu::from_array(a);
            }
        }
    }

    /// Runs a batch of row-major feature vectors. Passing a random stream
    /// enables (inverted) dropout on hidden-layer outputs.
    pub fn forward(
        &self,
        rows: &[f64],
        dropout: Option<&mut StreamRng>,
    ) -> Result<ForwardPass, NetError> {
        let dim = self.input_dim();
        if dim == 0 || rows.len() % dim != 0 {
            return Err(NetError::Shape {
                expected: dim,
                got: rows.len(),
            });
        }
        let batch = rows.len() / dim;
        let mut inputs = vec![0.0; dim * batch];
        for (s, row) in rows.chunks_exact(dim).enumerate() {
            for (j, &x) in row.iter().enumerate() {
                inputs[j * batch + s] = match &self.standardizer {
                    Some(st) => st.apply(j, x),
                    None => x,
                };
            }
        }

        let rate = self.config.dropout;
        let mut rng = dropout;
        let n_layers = self.layers.len();
        let mut pre = Vec::with_capacity(n_layers);
        let mut post: Vec<Vec<f64>> = Vec::with_capacity(n_layers - 1);
        let mut keep = Vec::with_capacity(n_layers - 1);
        for (k, layer) in self.layers.iter().enumerate() {
            let x = if k == 0 { &inputs } else { &post[k - 1] };
            let mut z = vec![0.0; layer.out_dim * batch];
            for (r, b) in layer.bias.iter().enumerate() {
                z[r * batch..(r + 1) * batch].fill(*b);
            }
            for e in 0..layer.weights.len() {
                let w = layer.weights[e];
                let r = layer.rows[e] as usize;
                let c = layer.cols[e] as usize;
                let zr = &mut z[r * batch..(r + 1) * batch];
                let xc = &x[c * batch..(c + 1) * batch];
                for (zi, xi) in zr.iter_mut().zip(xc) {
                    *zi += w * xi;
                }
            }
            if k + 1 < n_layers {
                let mut h: Vec<f64> = Vec::with_capacity(z.len());
                for (r, unit) in layer.srelu.iter().enumerate() {
                    h.extend(z[r * batch..(r + 1) * batch].iter().map(|&v| unit.apply(v)));
                }
                let mut mult = Vec::new();
                if let Some(rng) = rng.as_deref_mut() {
                    if rate > 0.0 {
                        let scale = 1.0 / (1.0 - rate);
                        mult = (0..h.len())
                            .map(|_| if rng.random::<f64>() < rate { 0.0 } else { scale })
                            .collect();
                        h.iter_mut().zip(&mult).for_each(|(v, m)| *v *= m);
                    }
                }
                keep.push(mult);
                post.push(h);
            }
            pre.push(z);
        }
        let output = pre[n_layers - 1].iter().map(|&z| sigmoid(z)).collect();
        Ok(ForwardPass {
            batch,
            inputs,
            pre,
            post,
            keep,
            output,
        })
    }

    /// Eval-mode predictions for row-major features.
    pub fn predict(&self, rows: &[f64]) -> Result<Vec<f64>, NetError> {
        const CHUNK: usize = 1024;
        let dim = self.input_dim();
        let mut out = Vec::with_capacity(rows.len() / dim.max(1));
        for chunk in rows.chunks(CHUNK * dim.max(1)) {
            out.extend_from_slice(self.forward(chunk, None)?.output());
        }
        Ok(out)
    }

    /// Mean squared error of the batch and its gradient.
    pub fn loss_and_gradients(
        &self,
        rows: &[f64],
        targets: &[f64],
        dropout: Option<&mut StreamRng>,
    ) -> Result<(f64, Gradients), NetError> {
        let pass = self.forward(rows, dropout)?;
        let batch = pass.batch;
        if targets.len() != batch {
            return Err(NetError::Shape {
                expected: batch,
                got: targets.len(),
            });
        }
        let loss = pass
            .output
            .iter()
            .zip(targets)
            .map(|(y, t)| (y - t).powi(2))
            .sum::<f64>()
            / batch as f64;

        let n_layers = self.layers.len();
        let mut g_w: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.edge_count()]).collect();
        let mut g_b: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.out_dim]).collect();
        let mut g_s: Vec<Vec<[f64; 4]>> =
            self.layers.iter().map(|l| vec![[0.0; 4]; l.srelu.len()]).collect();

        // dL/dz at the output.
        let mut dz: Vec<f64> = pass
            .output
            .iter()
            .zip(targets)
            .map(|(y, t)| 2.0 * (y - t) / batch as f64 * y * (1.0 - y))
            .collect();

        for k in (0..n_layers).rev() {
            let layer = &self.layers[k];
            let x = if k == 0 { &pass.inputs } else { &pass.post[k - 1] };
            for (r, gb) in g_b[k].iter_mut().enumerate() {
                *gb = dz[r * batch..(r + 1) * batch].iter().sum();
            }
            let mut dx = if k > 0 {
                vec![0.0; layer.in_dim * batch]
            } else {
                Vec::new()
            };
            for e in 0..layer.weights.len() {
                let r = layer.rows[e] as usize;
                let c = layer.cols[e] as usize;
                let dzr = &dz[r * batch..(r + 1) * batch];
                let xc = &x[c * batch..(c + 1) * batch];
                g_w[k][e] = dzr.iter().zip(xc).map(|(a, b)| a * b).sum();
                if k > 0 {
                    let w = layer.weights[e];
                    let dxc = &mut dx[c * batch..(c + 1) * batch];
                    for (d, g) in dxc.iter_mut().zip(dzr) {
                        *d += w * g;
                    }
                }
            }
            if k == 0 {
                break;
            }
            // Back through dropout and the SReLU of layer k-1.
            let below = &self.layers[k - 1];
            let z_below = &pass.pre[k - 1];
            let keep = &pass.keep[k - 1];
            let mut dz_below = vec![0.0; below.out_dim * batch];
            for (r, unit) in below.srelu.iter().enumerate() {
                let mut acc = [0.0; 4];
                for s in 0..batch {
                    let i = r * batch + s;
                    let mut da = dx[i];
                    if !keep.is_empty() {
                        da *= keep[i];
                    }
                    if da == 0.0 {
                        continue;
                    }
                    let g = unit.grad(z_below[i]);
                    dz_below[i] = da * g.dx;
                    for (a, d) in acc.iter_mut().zip(g.dparams) {
                        *a += da * d;
                    }
                }
                g_s[k - 1][r] = acc;
            }
            dz = dz_below;
        }
        Ok((
            loss,
            Gradients {
                weights: g_w,
                bias: g_b,
                srelu: g_s,
            },
        ))
    }

    /// One RMSProp step. Only stored (unmasked) weights are touched.
    pub fn apply_gradients(&mut self, grads: &Gradients) {
        let lr = self.config.learning_rate;
        let rho = self.config.rms_decay;
        let eps = self.config.rms_epsilon;
        let step = |p: &mut f64, ms: &mut f64, g: f64| {
            *ms = rho * *ms + (1.0 - rho) * g * g;
            *p -= lr * g / (ms.sqrt() + eps);
        };
        for (k, layer) in self.layers.iter_mut().enumerate() {
            for ((w, ms), g) in layer
                .weights
                .iter_mut()
                .zip(layer.ms_weights.iter_mut())
                .zip(&grads.weights[k])
            {
                step(w, ms, *g);
            }
            for ((b, ms), g) in layer.bias.iter_mut().zip(layer.ms_bias.iter_mut()).zip(&grads.bias[k]) {
                step(b, ms, *g);
            }
            for ((unit, ms), g) in layer
                .srelu
                .iter_mut()
                .zip(layer.ms_srelu.iter_mut())
                .zip(&grads.srelu[k])
            {
                let mut a = unit.to_array();
                for i in 0..4 {
                    step(&mut a[i], &mut ms[i], g[i]);
                }
                *unit = Srelu::from_array(a);
            }
        }
    }

    /// Replaces the connectivity of `layer` with `edges` (`(row, col)`
    /// pairs), drawing fresh weights from the init distribution.
    pub fn set_layer_edges<R: Rng + ?Sized>(
        &mut self,
        layer: usize,
        edges: &[(usize, usize)],
        rng: &mut R,
    ) -> Result<(), NetError> {
        let l = self
            .layers
            .get_mut(layer)
            .ok_or_else(|| NetError::InvalidConfig(format!("no layer {layer}")))?;
        let mut flat: Vec<usize> = Vec::with_capacity(edges.len());
        for &(r, c) in edges {
            if r >= l.out_dim || c >= l.in_dim {
                return Err(NetError::InvalidConfig(format!(
                    "edge ({r}, {c}) outside {}x{} layer",
                    l.out_dim, l.in_dim
                )));
            }
            flat.push(r * l.in_dim + c);
        }
        flat.sort_unstable();
        flat.dedup();
        let limit = l.init_limit();
        l.rows = flat.iter().map(|f| (f / l.in_dim) as u32).collect();
        l.cols = flat.iter().map(|f| (f % l.in_dim) as u32).collect();
        l.weights = flat.iter().map(|_| rng.random_range(-limit..=limit)).collect();
        l.ms_weights = vec![0.0; flat.len()];
        Ok(())
    }

    /// SET step: in every sparse layer, prune the `zeta` fraction of
    /// smallest-magnitude weights (ties by `(row, col)`) and regrow as many
    /// edges uniformly among vacant positions.
    pub fn evolve_topology<R: Rng + ?Sized>(&mut self, rng: &mut R) -> EvolveStats {
        let zeta = self.config.zeta;
        let mut stats = EvolveStats::default();
        for (k, layer) in self.layers.iter_mut().enumerate() {
            if !layer.sparse {
                continue;
            }
            let n = layer.edge_count();
            let capacity = layer.in_dim * layer.out_dim;
            if n >= capacity {
                log::warn!("layer {k} has no vacant positions; skipping topology evolution");
                stats.skipped_layers.push(k);
                continue;
            }
            let n_remove = ((zeta * n as f64).round() as usize).min(n);
            if n_remove == 0 {
                continue;
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| layer.weights[a].abs().total_cmp(&layer.weights[b].abs()));
            let mut remove = vec![false; n];
            for &e in &order[..n_remove] {
                remove[e] = true;
                stats.removed.push((k, layer.rows[e] as usize, layer.cols[e] as usize));
            }

            let in_dim = layer.in_dim;
            let mut occupied = vec![false; capacity];
            let mut kept: Vec<(usize, f64, f64)> = Vec::with_capacity(n);
            for e in 0..n {
                if !remove[e] {
                    let flat = layer.rows[e] as usize * in_dim + layer.cols[e] as usize;
                    occupied[flat] = true;
                    kept.push((flat, layer.weights[e], layer.ms_weights[e]));
                }
            }
            let vacant: Vec<usize> = (0..capacity).filter(|&i| !occupied[i]).collect();
            let limit = layer.init_limit();
            let n_add = n_remove.min(vacant.len());
            for i in sample_indices(rng, vacant.len(), n_add).into_vec() {
                let flat = vacant[i];
                kept.push((flat, rng.random_range(-limit..=limit), 0.0));
                stats.added.push((k, flat / in_dim, flat % in_dim));
            }
            kept.sort_by_key(|e| e.0);
            layer.rows = kept.iter().map(|e| (e.0 / in_dim) as u32).collect();
            layer.cols = kept.iter().map(|e| (e.0 % in_dim) as u32).collect();
            layer.weights = kept.iter().map(|e| e.1).collect();
            layer.ms_weights = kept.iter().map(|e| e.2).collect();
        }
        stats
    }

    pub(crate) fn check(&self) -> Result<(), NetError> {
        if self.layers.is_empty() {
            return Err(NetError::Checkpoint("network has no layers".into()));
        }
        let mut prev = self.config.input_dim;
        for l in &self.layers {
            if l.in_dim != prev {
                return Err(NetError::Checkpoint("layer widths do not chain".into()));
            }
            l.check()?;
            prev = l.out_dim;
        }
        if prev != 1 {
            return Err(NetError::Checkpoint("output layer must have one unit".into()));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    crate::models::logistic(z)
}
