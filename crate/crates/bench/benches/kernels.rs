use criterion::{black_box, criterion_group, criterion_main, Criterion};
use fried_bench::{gaussian, interaction_predictor, network, synth};
use fried_core::audit::{shapley_attribution, ShapleyConfig, ShapleyMode};
use fried_core::fried::{train, Architecture, TrainConfig};
use fried_core::infotheory::{chernoff_information, DiscreteDistribution};

fn mlp(c: &mut Criterion) {
    let net = network(&[16, 64, 32, 8], 1);
    let x = gaussian(100, 16, 2);
    c.bench_function("mlp_forward_100x16", |b| b.iter(|| net.forward(black_box(&x)).unwrap()));
    let (out, cache) = net.forward(&x).unwrap();
    c.bench_function("mlp_backward_100x16", |b| {
        b.iter(|| net.backward(black_box(&cache), black_box(&out)).unwrap())
    });
}

fn chernoff(c: &mut Criterion) {
    let p = DiscreteDistribution::from_weights(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
    let q = DiscreteDistribution::from_weights(&[0.6, 0.5, 0.4, 0.3, 0.2, 0.1]).unwrap();
    c.bench_function("chernoff_6_outcomes", |b| {
        b.iter(|| chernoff_information(black_box(&p), black_box(&q)).unwrap())
    });
}

fn shapley(c: &mut Criterion) {
    let f = interaction_predictor(6);
    let x = gaussian(10, 6, 3);
    let bg = gaussian(50, 6, 4);
    for (name, mode) in [("shapley_exhaustive_6", ShapleyMode::Exhaustive), ("shapley_mc_6", ShapleyMode::MonteCarlo)] {
        let cfg = ShapleyConfig { n_samples: 500, mode };
        c.bench_function(name, |b| b.iter(|| shapley_attribution(&f, &x, &bg, &cfg, 0).unwrap()));
    }
}

fn training(c: &mut Criterion) {
    let ds = synth(1000);
    let cfg = TrainConfig {
        epochs: 1,
        architecture: Architecture {
            hidden: vec![16, 8],
            latent_dim: 8,
            critic_hidden: vec![16, 8],
        },
        ..TrainConfig::default()
    };
    let mut group = c.benchmark_group("training");
    group.sample_size(10);
    group.bench_function("train_epoch_1000_rows", |b| b.iter(|| train(black_box(&ds), &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, mlp, chernoff, shapley, training);
criterion_main!(benches);
