use proptest::prelude::*;
use rand::Rng as _;
use voltcast::dataset::{apply_standardizer, fit_standardizer, make_windows};
use voltcast::neural::{
    gradient_agrees, gradient_check, lstm_backward, lstm_forward, train, train_with_callback, Activation, AutoencoderParams, GradModel,
    Labeled, LstmParams, MlpParams, SeqSample, TrainConfig,
};
use voltcast::rng::rng_from_seed;
use voltcast::synthgen::{simulate_charge_cycles, BatteryModelParams, CurrentProfile, SimulationConfig};

fn nz(n: usize) -> std::num::NonZeroUsize {
    std::num::NonZeroUsize::new(n).unwrap()
}

fn random_lstm_case(seed: u64, h: usize, l: usize, d: usize) -> (LstmParams, SeqSample) {
    let p = LstmParams::init(d, h, seed);
    let mut rng = rng_from_seed(seed.wrapping_mul(31).wrapping_add(7));
    let steps = (0..l).map(|_| (0..d).map(|_| rng.random_range(-1.5..1.5)).collect()).collect();
    (p, SeqSample { steps, target: rng.random_range(-2.0..2.0) })
}

fn random_mlp_case(seed: u64) -> (MlpParams, Labeled) {
    let mut rng = rng_from_seed(seed ^ 0xabc);
    let d = rng.random_range(1..=4);
    let act = if seed.is_multiple_of(2) { Activation::Tanh } else { Activation::Sigmoid };
    let hidden: Vec<usize> = (0..rng.random_range(1..=2)).map(|_| rng.random_range(1..=4)).collect();
    let m = MlpParams::init(d, &hidden, act, seed);
    let x = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
    (m, Labeled { x, y: rng.random_range(-3.0..3.0) })
}

fn random_ae_case(seed: u64) -> (AutoencoderParams, Vec<f64>) {
    let mut rng = rng_from_seed(seed ^ 0xae);
    let d = rng.random_range(1..=5);
    let h = rng.random_range(1..=d);
    let p = AutoencoderParams::init(d, h, Activation::Tanh, seed).unwrap();
    (p, (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
}

#[test]
fn lstm_gradients_match_finite_differences_h2_l3_d2() {
    for seed in 0..25 {
        let (p, s) = random_lstm_case(seed, 2, 3, 2);
        let err = gradient_check(&p, &s, 1e-5).unwrap();
        assert!(err <= 1e-4, "seed {seed}: {err}");
    }
}

#[test]
fn mlp_gradients_one_hidden_layer_of_three() {
    for seed in 0..25 {
        let m = MlpParams::init(3, &[3], Activation::Tanh, seed);
        let s = Labeled { x: vec![0.3, -1.1, 0.8], y: 0.4 + seed as f64 * 0.1 };
        let err = gradient_check(&m, &s, 1e-5).unwrap();
        assert!(err <= 1e-4, "seed {seed}: {err}");
    }
}

#[test]
fn zero_loss_instance_has_negligible_error() {
    let p = LstmParams::zeros(2, 2);
    let s = SeqSample { steps: vec![vec![0.5, -0.5]; 3], target: 0.0 };
    assert!(gradient_check(&p, &s, 1e-5).unwrap() < 1e-6);
    let mut g = p.zeroed();
    let (_, cache) = lstm_forward(&p, &s.steps).unwrap();
    let grads = lstm_backward(&p, &s.steps, s.target, &cache).unwrap();
    assert!(grads.flat_params().iter().all(|&v| v == 0.0));
    p.accumulate_grad(&s, &mut g).unwrap();
    assert!(g.flat_params().iter().all(|&v| v == 0.0));
}

#[test]
fn epsilon_outside_range_is_rejected() {
    let (p, s) = random_lstm_case(1, 2, 2, 1);
    assert!(gradient_check(&p, &s, 1e-2).is_err());
    assert!(gradient_check(&p, &s, 1e-9).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lstm_gradient_property(seed in any::<u64>(), h in 1usize..=3, l in 1usize..=4, d in 1usize..=2) {
        let (p, s) = random_lstm_case(seed, h, l, d);
        prop_assert!(gradient_agrees(&p, &s, 1e-5, 1e-4).unwrap(), "relative error {}", gradient_check(&p, &s, 1e-5).unwrap());
    }

    #[test]
    fn mlp_gradient_property(seed in any::<u64>()) {
        let (m, s) = random_mlp_case(seed);
        prop_assert!(gradient_agrees(&m, &s, 1e-5, 1e-4).unwrap());
    }

    #[test]
    fn autoencoder_gradient_property(seed in any::<u64>()) {
        let (p, x) = random_ae_case(seed);
        prop_assert!(gradient_agrees(&p, &x, 1e-5, 1e-4).unwrap());
    }

    #[test]
    fn forward_pass_stays_in_activation_ranges(seed in any::<u64>(), l in 1usize..=6) {
        let (p, s) = random_lstm_case(seed, 3, l, 2);
        let (_, cache) = lstm_forward(&p, &s.steps).unwrap();
        for t in 0..l {
            for k in 0..3 {
                for v in [cache.i[t][k], cache.f[t][k], cache.o[t][k]] {
                    prop_assert!(v > 0.0 && v < 1.0);
                }
                prop_assert!(cache.g[t][k].abs() < 1.0 && cache.tanh_c[t][k].abs() < 1.0);
                prop_assert!(cache.c[t + 1][k].is_finite());
            }
        }
    }

    #[test]
    fn initialization_respects_fan_in(seed in any::<u64>(), d in 1usize..=6, h in 1usize..=6) {
        let p = LstmParams::init(d, h, seed);
        let gate_bound = 1.0 / ((d + h) as f64).sqrt();
        for g in [&p.input_gate, &p.forget_gate, &p.output_gate, &p.candidate] {
            for t in [&g.w, &g.u, &g.b] {
                prop_assert!(t.data().iter().all(|v| v.abs() <= gate_bound));
            }
        }
        let readout = 1.0 / (h as f64).sqrt();
        prop_assert!(p.w_y.data().iter().all(|v| v.abs() <= readout) && p.b_y.abs() <= readout);
    }

    #[test]
    fn readout_bias_gradient_is_the_residual(seed in any::<u64>()) {
        let (p, s) = random_lstm_case(seed, 2, 3, 2);
        let (pred, cache) = lstm_forward(&p, &s.steps).unwrap();
        let g = lstm_backward(&p, &s.steps, s.target, &cache).unwrap();
        prop_assert!((g.b_y - (pred - s.target)).abs() <= 1e-12);
    }
}

fn regression_samples(n: usize) -> Vec<Labeled> {
    (0..n)
        .map(|i| {
            let a = (i as f64 * 0.37).sin();
            let b = (i as f64 * 0.11).cos();
            Labeled { x: vec![a, b], y: 0.8 * a - 0.3 * b + 0.1 }
        })
        .collect()
}

#[test]
fn zero_learning_rate_leaves_parameters_unchanged() {
    let init = MlpParams::init(2, &[4], Activation::Tanh, 5);
    let cfg = TrainConfig { epochs: nz(1), batch_size: nz(8), learning_rate: 0.0, seed: 3, ..TrainConfig::default() };
    let (fitted, trace) = train(init.clone(), &regression_samples(40), &cfg).unwrap();
    assert_eq!(fitted, init);
    assert_eq!(trace.train_loss.len(), 1);
}

#[test]
fn training_is_bit_reproducible() {
    let cfg = TrainConfig { epochs: nz(5), batch_size: nz(4), learning_rate: 0.05, seed: 11, validation_fraction: 0.2, ..TrainConfig::default() };
    let run = || train(MlpParams::init(2, &[5], Activation::Tanh, 2), &regression_samples(30), &cfg).unwrap();
    let (a, ta) = run();
    let (b, tb) = run();
    assert_eq!(a.flat_params(), b.flat_params());
    assert_eq!(ta, tb);
    assert_eq!(ta.val_loss.as_ref().unwrap().len(), 5);
}

#[test]
fn callback_snapshots_match_shorter_runs() {
    let data = regression_samples(32);
    let base = TrainConfig { epochs: nz(6), batch_size: nz(8), learning_rate: 0.1, seed: 4, ..TrainConfig::default() };
    let mut snapshots = Vec::new();
    train_with_callback(MlpParams::init(2, &[3], Activation::Tanh, 1), &data, &base, |e, m, t| {
        snapshots.push((e, m.clone(), t.clone()))
    })
    .unwrap();
    for (epoch, model, trace) in snapshots.into_iter().filter(|(e, _, _)| e % 3 == 0) {
        let cfg = TrainConfig { epochs: nz(epoch), ..base };
        let (m, t) = train(MlpParams::init(2, &[3], Activation::Tanh, 1), &data, &cfg).unwrap();
        assert_eq!(m, model);
        assert_eq!(t, trace);
    }
}

#[test]
fn oversized_batch_and_bad_rates_are_rejected() {
    let data = regression_samples(10);
    let m = MlpParams::init(2, &[2], Activation::Tanh, 0);
    assert!(train(m.clone(), &data, &TrainConfig { batch_size: nz(11), ..TrainConfig::default() }).is_err());
    assert!(train(m.clone(), &data, &TrainConfig { batch_size: nz(4), learning_rate: f64::NAN, ..TrainConfig::default() }).is_err());
    assert!(train(m, &data, &TrainConfig { batch_size: nz(4), validation_fraction: 1.0, ..TrainConfig::default() }).is_err());
}

#[test]
fn exploding_learning_rate_reports_divergence() {
    let data: Vec<Labeled> = regression_samples(20).into_iter().map(|s| Labeled { y: s.y * 1e200, ..s }).collect();
    let cfg = TrainConfig { epochs: nz(3), batch_size: nz(5), learning_rate: 1e300, grad_clip: None, ..TrainConfig::default() };
    let err = train(MlpParams::init(2, &[2], Activation::Tanh, 0), &data, &cfg).unwrap_err();
    assert!(matches!(err, voltcast::neural::NeuralError::Diverged { epoch: 1 }), "{err:?}");
}

fn constant_current_sequences() -> Vec<SeqSample> {
    let cfg = SimulationConfig {
        params: BatteryModelParams { noise_std_v: 0.0, ..BatteryModelParams::default() },
        n_cycles: 4,
        dt_s: 120.0,
        current_profile: CurrentProfile::Constant { amps: 2.0 },
        ..SimulationConfig::default()
    };
    let table = simulate_charge_cycles(&cfg).unwrap().table;
    let features: Vec<String> = ["voltage_V", "temperature_C"].map(String::from).to_vec();
    let params = fit_standardizer(&table, &features).unwrap();
    let z = apply_standardizer(&table, &params).unwrap();
    let series = make_windows(&z, 5, 1, &features).unwrap();
    series.windows.into_iter().map(|w| SeqSample { steps: w.steps, target: w.target }).collect()
}

#[test]
fn lstm_loss_decreases_on_constant_current_cycles() {
    let data = constant_current_sequences();
    let cfg = TrainConfig { epochs: nz(50), batch_size: nz(16), learning_rate: 0.01, seed: 2024, ..TrainConfig::default() };
    let (_, trace) = train(LstmParams::init(2, 8, 2024), &data, &cfg).unwrap();
    assert_eq!(trace.train_loss.len(), 50);
    assert!(trace.train_loss[49] < trace.train_loss[0], "{:?}", trace.train_loss);
}

#[test]
fn autoencoder_reconstruction_improves() {
    let data: Vec<Vec<f64>> = constant_current_sequences().into_iter().map(|s| s.steps.concat()).collect();
    let init = AutoencoderParams::init(data[0].len(), 2, Activation::Tanh, 7).unwrap();
    let before = data.iter().map(|x| init.loss(x).unwrap()).sum::<f64>() / data.len() as f64;
    let cfg = TrainConfig { epochs: nz(40), batch_size: nz(8), learning_rate: 0.05, seed: 7, ..TrainConfig::default() };
    let (fitted, _) = train(init, &data, &cfg).unwrap();
    let after = data.iter().map(|x| fitted.loss(x).unwrap()).sum::<f64>() / data.len() as f64;
    assert!(after < before, "{after} >= {before}");
}
