use fried_core::infotheory::{
    cmi_estimate_difference, informativeness_from_codes, kl_discrete, kl_estimate_classifier, separability_check,
    DiscreteDistribution, KlEstimatorConfig, SampleTriple, SeparabilityConfig,
};
use fried_core::numkit::{Matrix, Rng};

fn gaussians(n: usize, seed: u64) -> (Matrix, Matrix) {
    let mut rng = Rng::new(seed);
    let p = Matrix::from_fn(n, 1, |_, _| rng.normal());
    let q = Matrix::from_fn(n, 1, |_, _| rng.normal() + 1.0);
    (p, q)
}

fn quick(epochs: usize) -> KlEstimatorConfig {
    let mut cfg = KlEstimatorConfig::default();
    cfg.classifier.epochs = epochs;
    cfg
}

#[test]
fn one_hot_bernoulli_kl_matches_discrete_oracle() {
    let n = 5000;
    let mut rng = Rng::new(11);
    let one_hot = |rate: f64, rng: &mut Rng| {
        let mut m = Matrix::zeros(n, 2);
        for i in 0..n {
            let k = usize::from(rng.bernoulli(rate));
            m.set(i, k, 1.0);
        }
        m
    };
    let p = one_hot(0.5, &mut rng);
    let q = one_hot(0.25, &mut rng);
    let oracle = kl_discrete(
        &DiscreteDistribution::bernoulli(0.5).unwrap(),
        &DiscreteDistribution::bernoulli(0.25).unwrap(),
    )
    .unwrap();
    assert!((oracle - 0.1438).abs() < 1e-4);
    let est = kl_estimate_classifier(&p, &q, &KlEstimatorConfig::default(), 3).unwrap();
    assert!(est.reliable);
    assert!((est.value - oracle).abs() < 0.05, "{} vs {oracle}", est.value);
}

#[test]
fn markov_chain_has_no_conditional_information() {
    let n = 5000;
    let mut rng = Rng::new(12);
    let x = Matrix::from_fn(n, 1, |_, _| rng.normal());
    let z = Matrix::from_fn(n, 1, |i, _| 0.8 * x.get(i, 0) + 0.6 * rng.normal());
    let y = Matrix::from_fn(n, 1, |i, _| 0.8 * z.get(i, 0) + 0.6 * rng.normal());
    let est = cmi_estimate_difference(&SampleTriple::new(x, y, z).unwrap(), &KlEstimatorConfig::default(), 4).unwrap();
    assert!(est.value < 0.05, "{}", est.value);
    assert!(est.mi_x_z.value > 0.2, "X and Z are dependent: {}", est.mi_x_z.value);
}

#[test]
fn gaussian_kl_error_shrinks_with_sample_size() {
    let cfg = KlEstimatorConfig::default();
    let mut medians = Vec::new();
    for n in [500, 2000, 8000] {
        let mut errs: Vec<f64> = (0..5u64)
            .map(|seed| {
                let (p, q) = gaussians(n, 40 + seed);
                (kl_estimate_classifier(&p, &q, &cfg, seed).unwrap().value - 0.5).abs()
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        medians.push(errs[2]);
    }
    assert!(medians.windows(2).all(|w| w[1] <= w[0]), "{medians:?}");
}

#[test]
fn shuffled_inputs_give_a_centered_null() {
    let n = 1000;
    let cfg = quick(50);
    let mut rng = Rng::new(13);
    let x = Matrix::from_fn(n, 1, |_, _| rng.normal());
    let z = Matrix::from_fn(n, 1, |_, _| rng.normal());
    let y = Matrix::from_fn(n, 1, |i, _| x.get(i, 0) + 0.5 * z.get(i, 0) + 0.5 * rng.normal());
    let tau = 0.05;
    let inside = (0..20u64)
        .filter(|&t| {
            let perm = Rng::new(100 + t).permutation(n);
            let triple = SampleTriple::new(x.select_rows(&perm), y.clone(), z.clone()).unwrap();
            cmi_estimate_difference(&triple, &cfg, t).unwrap().value.abs() < tau
        })
        .count();
    assert!(inside >= 18, "{inside}/20 within {tau}");
}

fn sep_cfg() -> SeparabilityConfig {
    SeparabilityConfig {
        estimator: quick(60),
        permutations: 10,
        ..SeparabilityConfig::default()
    }
}

fn separability_data(n: usize, seed: u64) -> (Matrix, Vec<u8>, Vec<u8>) {
    let mut rng = Rng::new(seed);
    let y: Vec<u8> = (0..n).map(|_| u8::from(rng.bernoulli(0.5))).collect();
    let p: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    let x = Matrix::from_fn(n, 2, |_, _| rng.normal());
    (x, y, p)
}

#[test]
fn copied_features_do_not_improve() {
    let (x, y, p) = separability_data(1600, 14);
    let r = separability_check(&x, &x.clone(), &y, &p, &sep_cfg(), 1).unwrap();
    assert!(!r.improves, "cmi {} tau {}", r.cmi, r.tau);
    assert_eq!(r.n_rows, 800);
}

#[test]
fn label_leak_improves_and_noise_does_not() {
    let (x, y, p) = separability_data(1600, 15);
    let mut rng = Rng::new(16);
    let leak = Matrix::from_fn(y.len(), 1, |i, _| f64::from(y[i]) + 0.1 * rng.normal());
    let r = separability_check(&x, &leak, &y, &p, &sep_cfg(), 2).unwrap();
    assert!(r.improves && r.cmi > 5.0 * r.tau, "cmi {} tau {}", r.cmi, r.tau);

    let noise = Matrix::from_fn(y.len(), 2, |_, _| rng.normal());
    let r = separability_check(&x, &noise, &y, &p, &sep_cfg(), 3).unwrap();
    assert!(!r.improves, "cmi {} tau {}", r.cmi, r.tau);
    assert_eq!(r.null.len(), 10);
}

#[test]
fn informativeness_of_constant_and_copied_codes() {
    let n = 1000;
    let mut rng = Rng::new(17);
    let x = Matrix::from_fn(n, 1, |_, _| rng.normal());
    let cfg = quick(100);
    let zero = informativeness_from_codes(&x, &Matrix::zeros(n, 2), &cfg, 1).unwrap();
    assert!(zero.score < 0.05, "{}", zero.score);
    let mut last = zero.score;
    for noise in [1.0, 0.3, 0.05] {
        let z = Matrix::from_fn(n, 1, |i, _| x.get(i, 0) + noise * rng.normal());
        let r = informativeness_from_codes(&x, &z, &cfg, 1).unwrap();
        assert!(r.score > last, "noise {noise}: {} after {last}", r.score);
        assert!((0.0..=1.0).contains(&r.score));
        last = r.score;
    }
}
