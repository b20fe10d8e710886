use cogprior_core::net::{
    evaluate, finetune, fit, train_epoch, FitOptions, NetworkConfig, ParamId, Samples,
    SparseNetwork, Srelu, SreluParam, MAX_SPARSE_PARAMS,
};
use cogprior_core::seed::rng_from_seed;
use proptest::prelude::*;
use rand::Rng;

fn random_rows(n: usize, dim: usize, scale: f64, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..n * dim).map(|_| rng.random_range(-scale..scale)).collect()
}

fn tiny_net() -> SparseNetwork {
    let cfg = NetworkConfig {
        input_dim: 5,
        hidden: vec![3, 2],
        dropout: 0.0,
        sparse: false,
        ..NetworkConfig::default()
    };
    let mut net = SparseNetwork::init(&cfg).unwrap();
    let mut rng = rng_from_seed(11);
    for id in net.param_ids() {
        match id {
            ParamId::Weight { .. } => net.set_param(id, rng.random_range(-1.2..1.2)),
            ParamId::Bias { .. } => net.set_param(id, rng.random_range(-0.3..0.3)),
            ParamId::Srelu { param, .. } => {
                let v = match param {
                    SreluParam::TLeft => rng.random_range(-0.6..-0.1),
                    SreluParam::ALeft => rng.random_range(0.05..0.4),
                    SreluParam::TRight => rng.random_range(0.2..0.7),
                    SreluParam::ARight => rng.random_range(0.3..1.5),
                };
                net.set_param(id, v);
            }
        }
    }
    net
}

/// Per-sample smallest distance from a hidden pre-activation to an SReLU
/// threshold.
fn kink_margins(net: &SparseNetwork, rows: &[f64]) -> Vec<f64> {
    let pass = net.forward(rows, None).unwrap();
    let batch = rows.len() / net.input_dim();
    let mut margin = vec![f64::INFINITY; batch];
    for (k, layer) in net.layers().iter().enumerate() {
        for (u, s) in layer.srelu().iter().enumerate() {
            for (i, m) in margin.iter_mut().enumerate() {
                let z = pass.pre_activation(k, u, i);
                *m = m.min((z - s.t_left).abs()).min((z - s.t_right).abs());
            }
        }
    }
    margin
}

#[test]
fn gradients_match_central_differences_for_every_parameter() {
    let net = tiny_net();
    let pool = random_rows(64, 5, 1.5, 12);
    let rows: Vec<f64> = pool
        .chunks(5)
        .zip(kink_margins(&net, &pool))
        .filter(|(_, m)| *m > 1e-3)
        .take(16)
        .flat_map(|(r, _)| r.to_vec())
        .collect();
    assert_eq!(rows.len(), 16 * 5);
    let targets: Vec<f64> = (0..16).map(|i| (i as f64 * 0.61).fract()).collect();

    let (_, grads) = net.loss_and_gradients(&rows, &targets, None).unwrap();
    let h = 1e-6;
    let mut classes = [0usize; 3];
    for id in net.param_ids() {
        let mut plus = net.clone();
        plus.set_param(id, net.get_param(id) + h);
        let mut minus = net.clone();
        minus.set_param(id, net.get_param(id) - h);
        let lp = plus.loss_and_gradients(&rows, &targets, None).unwrap().0;
        let lm = minus.loss_and_gradients(&rows, &targets, None).unwrap().0;
        let numeric = (lp - lm) / (2.0 * h);
        let analytic = grads.get(id);
        let scale = analytic.abs().max(numeric.abs());
        if scale > 1e-9 {
            let rel = (analytic - numeric).abs() / scale;
            assert!(rel < 1e-4, "{id:?}: analytic {analytic} numeric {numeric}");
            classes[match id {
                ParamId::Weight { .. } => 0,
                ParamId::Bias { .. } => 1,
                ParamId::Srelu { .. } => 2,
            }] += 1;
        }
    }
    assert!(classes.iter().all(|&c| c > 0), "{classes:?}");
}

#[test]
fn inverted_dropout_preserves_expected_pre_activation() {
    let cfg = NetworkConfig {
        input_dim: 12,
        hidden: vec![200, 20],
        sparse: false,
        dropout: 0.15,
        ..NetworkConfig::default()
    };
    let net = SparseNetwork::init(&cfg).unwrap();
    let row: Vec<f64> = (0..12).map(|j| 0.5 + 0.1 * j as f64).collect();
    let eval = net.forward(&row, None).unwrap();
    let unit = (0..20)
        .max_by(|&a, &b| {
            let za = eval.pre_activation(1, a, 0).abs();
            let zb = eval.pre_activation(1, b, 0).abs();
            za.total_cmp(&zb)
        })
        .unwrap();
    let expected = eval.pre_activation(1, unit, 0);

    let passes = 10_000;
    let batch: Vec<f64> = row.iter().copied().cycle().take(12 * passes).collect();
    let mut rng = rng_from_seed(5);
    let train = net.forward(&batch, Some(&mut rng)).unwrap();
    let mean = (0..passes).map(|i| train.pre_activation(1, unit, i)).sum::<f64>() / passes as f64;
    assert!(
        (mean - expected).abs() <= 0.01 * expected.abs(),
        "mean {mean} vs eval {expected}"
    );
}

#[test]
fn dense_net_fits_a_linear_teacher() {
    let x = random_rows(200, 4, 1.0, 21);
    let y: Vec<f64> = x
        .chunks(4)
        .map(|r| 0.5 + 0.15 * r[0] - 0.1 * r[1] + 0.08 * r[2] - 0.05 * r[3])
        .collect();
    let data = Samples::new(&x, &y, 4).unwrap();
    let mut net = SparseNetwork::init(&NetworkConfig {
        input_dim: 4,
        hidden: vec![32, 16],
        sparse: false,
        dropout: 0.0,
        batch_size: 32,
        ..NetworkConfig::default()
    })
    .unwrap();
    let opts = FitOptions {
        max_epochs: 500,
        patience: None,
        evolve: false,
        ..FitOptions::default()
    };
    fit(&mut net, data, None, &opts).unwrap();
    let mse = evaluate(&net, data).unwrap();
    assert!(mse < 1e-3, "training mse {mse}");
}

#[test]
fn masked_positions_stay_zero_through_training_and_evolution() {
    let mut net = SparseNetwork::init(&NetworkConfig {
        seed: 3,
        ..NetworkConfig::default()
    })
    .unwrap();
    let x = random_rows(300, 12, 2.0, 1);
    let y: Vec<f64> = x.chunks(12).map(|r| if r[0] > 0.0 { 0.8 } else { 0.3 }).collect();
    let data = Samples::new(&x, &y, 12).unwrap();
    let count = net.parameter_count();
    let mut rng = rng_from_seed(2);
    for _ in 0..3 {
        train_epoch(&mut net, data, &mut rng).unwrap();
        for layer in net.layers() {
            let mask = layer.mask();
            for (w, m) in layer.dense_weights().iter().zip(&mask) {
                assert!(*m || *w == 0.0);
            }
        }
        net.evolve_topology(&mut rng);
        assert_eq!(net.parameter_count(), count);
        assert!(count < MAX_SPARSE_PARAMS);
    }
}

#[test]
fn evolution_of_a_thousand_edge_layer_moves_exactly_three_hundred() {
    let mut net = SparseNetwork::init(&NetworkConfig {
        input_dim: 40,
        hidden: vec![100],
        epsilon: 1.0,
        ..NetworkConfig::default()
    })
    .unwrap();
    let mut rng = rng_from_seed(8);
    let mut all: Vec<(usize, usize)> = (0..100).flat_map(|r| (0..40).map(move |c| (r, c))).collect();
    use rand::seq::SliceRandom;
    all.shuffle(&mut rng);
    net.set_layer_edges(0, &all[..1000], &mut rng).unwrap();
    assert_eq!(net.layers()[0].edge_count(), 1000);

    // Full-sort oracle: order every edge by |w| then by (row, col).
    let mut oracle: Vec<(f64, usize, usize)> = net.layers()[0]
        .edges()
        .map(|(r, c, w)| (w.abs(), r, c))
        .collect();
    oracle.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut expected: Vec<(usize, usize)> = oracle[..300].iter().map(|e| (e.1, e.2)).collect();
    expected.sort();

    let stats = net.evolve_topology(&mut rng);
    let mut removed: Vec<(usize, usize)> = stats
        .removed
        .iter()
        .filter(|e| e.0 == 0)
        .map(|e| (e.1, e.2))
        .collect();
    removed.sort();
    let added = stats.added.iter().filter(|e| e.0 == 0).count();
    assert_eq!(removed, expected);
    assert_eq!(added, 300);
    assert_eq!(net.layers()[0].edge_count(), 1000);
}

#[test]
fn finetuning_on_the_pretraining_data_is_stable() {
    let x = random_rows(400, 12, 1.0, 30);
    let y: Vec<f64> = x.chunks(12).map(|r| 1.0 / (1.0 + (-r[0] - r[1]).exp())).collect();
    let data = Samples::new(&x, &y, 12).unwrap();
    let mut net = SparseNetwork::init(&NetworkConfig::default()).unwrap();
    fit(
        &mut net,
        data,
        Some(data),
        &FitOptions {
            max_epochs: 20,
            ..FitOptions::default()
        },
    )
    .unwrap();
    let before = evaluate(&net, data).unwrap();
    finetune(&mut net, data, 1e-6, 5, 1).unwrap();
    let after = evaluate(&net, data).unwrap();
    assert!(after <= before + 1e-4, "{before} -> {after}");
}

#[test]
fn srelu_default_is_relu_on_ordinary_inputs() {
    let s = Srelu::default();
    assert_eq!(s.apply(-3.0), 0.0);
    assert_eq!(s.apply(42.0), 42.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn evolution_conserves_counts(seed in 0u64..1000, steps in 1usize..5, zeta in 0.0f64..1.0) {
        let mut net = SparseNetwork::init(&NetworkConfig {
            input_dim: 8,
            hidden: vec![30, 20],
            epsilon: 2.0,
            zeta,
            seed,
            ..NetworkConfig::default()
        }).unwrap();
        let counts: Vec<usize> = net.layers().iter().map(|l| l.edge_count()).collect();
        let mut rng = rng_from_seed(seed);
        for _ in 0..steps {
            net.evolve_topology(&mut rng);
        }
        let after: Vec<usize> = net.layers().iter().map(|l| l.edge_count()).collect();
        prop_assert_eq!(counts, after);
    }

    #[test]
    fn predictions_stay_in_open_unit_interval(
        xs in proptest::collection::vec(-1e3f64..1e3, 12),
        seed in 0u64..50,
    ) {
        let net = SparseNetwork::init(&NetworkConfig { seed, ..NetworkConfig::default() }).unwrap();
        let y = net.predict(&xs).unwrap()[0];
        prop_assert!(y > 0.0 && y < 1.0);
    }
}
