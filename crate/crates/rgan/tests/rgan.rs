use ndarray::Array2;
use proptest::prelude::*;
use synthbt_core::process::simulate;
use synthbt_core::{PathOrigin, PathSet, ProcessSpec};
use synthbt_neural::{count_params, grad_check, Architecture, Parameters};
use synthbt_rgan::*;

fn small_config() -> GanConfig {
    GanConfig {
        hidden_units: 4,
        seq_len: 6,
        batch_size: 8,
        max_batches: 20,
        eval_every: 5,
        seed: 3,
        ..GanConfig::default()
    }
}

fn gbm_data(steps: usize, n: usize, seed: u64) -> PathSet {
    simulate(&ProcessSpec::default_gbm(), steps, n, seed).unwrap()
}

fn softplus(x: f64) -> f64 {
    (1.0 + x.exp()).ln()
}

#[test]
fn scaler_round_trip() {
    let s = Scaler::new(-3.7, 12.25, 2.0).unwrap();
    let mut rng = synthbt_core::rng::substream(1, 0);
    let worst = (0..1000)
        .map(|_| {
            let x = -3.7 + 15.95 * rand::Rng::random::<f64>(&mut rng);
            (s.inverse(s.transform(x)) - x).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn scaler_rejects_constant_data() {
    let flat = PathSet::new(
        vec![synthbt_core::PricePath::from_values(vec![1.0; 4]).unwrap()],
        PathOrigin::External { label: "flat".into() },
    )
    .unwrap();
    assert!(matches!(Scaler::fit(&flat, 2.0), Err(RganError::Validation(_))));
}

#[test]
fn latent_moments() {
    let z = sample_latent(200_000, 1, 42);
    let n = z.len() as f64;
    assert_eq!(n, 1e6);
    let mean = z.sum() / n;
    let var = z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    assert!(mean.abs() < 9.0 / 1e3, "{mean}");
    assert!((var - 1.0).abs() < 0.02, "{var}");
    for k in 0..LATENT_DIM {
        let c = z.index_axis(ndarray::Axis(2), k);
        let m = c.sum() / c.len() as f64;
        assert!(m.abs() < 9.0 / (c.len() as f64).sqrt(), "component {k}: {m}");
    }
    assert_eq!(sample_latent(3, 4, 42), sample_latent(3, 4, 42));
    assert_ne!(sample_latent(3, 4, 42), sample_latent(3, 4, 43));
    // a sequence does not depend on how many others are drawn
    assert_eq!(
        sample_latent(2, 4, 9).index_axis(ndarray::Axis(0), 1),
        sample_latent(5, 4, 9).index_axis(ndarray::Axis(0), 1)
    );
}

#[test]
fn loss_hand_cases() {
    let zero = vec![Array2::zeros((3, 1)); 4];
    let l = adversarial_losses(&zero, &zero).unwrap();
    assert!((l.d_loss - 2f64.ln()).abs() < 1e-15);
    assert!((l.g_loss - 2f64.ln()).abs() < 1e-15);

    let l = adversarial_losses(&[Array2::from_elem((1, 1), 1.0)], &[Array2::from_elem((1, 1), -1.0)]).unwrap();
    assert!((l.d_loss - softplus(-1.0)).abs() < 1e-15);
    assert!((l.d_loss - 0.31326).abs() < 1e-5);

    let l = adversarial_losses(&[Array2::from_elem((2, 1), 40.0)], &[Array2::from_elem((2, 1), -40.0)]).unwrap();
    assert!(l.d_loss < 1e-15);

    let bad = adversarial_losses(&[Array2::from_elem((1, 1), f64::NAN)], &[Array2::zeros((1, 1))]);
    assert!(matches!(bad, Err(RganError::Neural(_))));
    assert!(adversarial_losses(&zero, &zero[..2]).is_err());
}

#[test]
fn model_sizes_match_oracle() {
    for h in [1, 4, 10] {
        let cfg = GanConfig {
            hidden_units: h,
            ..small_config()
        };
        let m = GanModel::new(cfg, Scaler::new(0.0, 1.0, 2.0).unwrap()).unwrap();
        assert_eq!(m.generator.num_params(), count_params(Architecture::Generator, h));
        assert_eq!(
            m.discriminator.num_params(),
            count_params(Architecture::Discriminator, h)
        );
    }
}

fn time_major(data: &PathSet, scaler: &Scaler, rows: usize) -> Vec<Array2<f64>> {
    let scaled: Vec<Vec<f64>> = data.paths()[..rows].iter().map(|p| scaler.transform_path(p)).collect();
    (0..data.path_len())
        .map(|t| Array2::from_shape_fn((rows, 1), |(i, _)| scaled[i][t]))
        .collect()
}

#[test]
fn full_stack_gradients() {
    let cfg = GanConfig {
        hidden_units: 3,
        seq_len: 4,
        ..small_config()
    };
    let data = gbm_data(4, 10, 5);
    let model = GanModel::new(cfg, Scaler::fit(&data, 2.0).unwrap()).unwrap();
    let real = time_major(&data, &model.scaler, 2);
    let z = latent_steps(&sample_latent(2, 5, 8));

    let err = grad_check(
        &model.discriminator,
        |d| {
            let m = GanModel {
                discriminator: d.clone(),
                ..model.clone()
            };
            let (l, g) = discriminator_loss_and_grad(&m, &real, &z).unwrap();
            (l.d_loss, g)
        },
        1e-5,
    );
    assert!(err < 1e-4, "discriminator {err}");

    let err = grad_check(
        &model.generator,
        |g| {
            let m = GanModel {
                generator: g.clone(),
                ..model.clone()
            };
            generator_loss_and_grad(&m, &z).unwrap()
        },
        1e-5,
    );
    assert!(err < 1e-4, "generator {err}");
}

#[test]
fn steps_touch_only_their_own_network() {
    let data = gbm_data(6, 40, 1);
    let mut t = Trainer::new(small_config(), &data).unwrap();
    let (g0, d0) = (t.model().generator.clone(), t.model().discriminator.clone());
    t.d_step().unwrap();
    assert_eq!(t.model().generator, g0);
    assert_ne!(t.model().discriminator, d0);
    let d1 = t.model().discriminator.clone();
    t.g_step().unwrap();
    assert_eq!(t.model().discriminator, d1);
    assert_ne!(t.model().generator, g0);
}

#[test]
fn zero_batches_returns_initial_model() {
    let data = gbm_data(6, 40, 1);
    let cfg = GanConfig {
        max_batches: 0,
        ..small_config()
    };
    let (model, log) = train(cfg.clone(), &data, None).unwrap();
    assert!(log.is_empty());
    let fresh = GanModel::new(cfg, Scaler::fit(&data, 2.0).unwrap()).unwrap();
    assert_eq!(model, fresh);
    assert_eq!(model.steps_trained, 0);
}

#[test]
fn seeded_training_is_deterministic() {
    let data = gbm_data(6, 40, 2);
    let spec = ProcessSpec::default_gbm();
    let run = || {
        let mut hook = gbm_moment_hook(spec, 100, 7);
        train(small_config(), &data, Some(&mut hook)).unwrap()
    };
    let (ma, la) = run();
    let (mb, lb) = run();
    assert_eq!(la, lb);
    assert_eq!(ma.generator.to_flat(), mb.generator.to_flat());
    assert_eq!(la.records.len(), 4);
    assert!(la.records.windows(2).all(|w| w[0].batches < w[1].batches));
    assert_eq!(ma.steps_trained, 20);
}

#[test]
fn training_rejects_bad_inputs() {
    let data = gbm_data(6, 5, 2);
    assert!(matches!(
        train(small_config(), &data, None),
        Err(RganError::Validation(_))
    ));
    let wrong_len = gbm_data(7, 40, 2);
    assert!(matches!(
        train(small_config(), &wrong_len, None),
        Err(RganError::Validation(_))
    ));
    let cfg = GanConfig {
        latent_dim: 4,
        ..small_config()
    };
    assert!(matches!(
        train(cfg, &gbm_data(6, 40, 2), None),
        Err(RganError::Validation(_))
    ));
}

#[test]
fn divergence_keeps_partial_log() {
    let data = gbm_data(6, 40, 2);
    let mut model = GanModel::new(small_config(), Scaler::fit(&data, 2.0).unwrap()).unwrap();
    model.discriminator.head.weight[(0, 0)] = f64::NAN;
    let err = train_with(Trainer::resume(model, &data), None).unwrap_err();
    match err {
        RganError::Diverged { batches, log, .. } => {
            assert_eq!(batches, 0);
            assert!(log.is_empty());
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn generation_contract() {
    let data = gbm_data(6, 40, 4);
    let (model, _) = train(small_config(), &data, None).unwrap();
    let raw = generate_scaled(&model, 30, 6, 11).unwrap();
    assert!(raw.iter().all(|v| v.abs() < 1.0));
    let a = generate(&model, 30, 6, 11).unwrap();
    assert_eq!(a, generate(&model, 30, 6, 11).unwrap());
    assert_eq!(a.path_len(), 7);
    assert!(a.paths().iter().all(|p| p.source == "gan"));
    let (lo, hi) = model.scaler.output_bounds();
    assert!(a.paths().iter().flat_map(|p| p.values()).all(|v| *v > lo && *v < hi));
    match a.origin() {
        PathOrigin::Generator { extrapolated, .. } => assert!(!extrapolated),
        o => panic!("{o:?}"),
    }
    let long = generate(&model, 3, 12, 11).unwrap();
    assert!(matches!(
        long.origin(),
        PathOrigin::Generator { extrapolated: true, .. }
    ));
}

#[test]
fn checkpoint_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = gbm_data(6, 40, 4);
    let (model, _) = train(small_config(), &data, None).unwrap();
    save_checkpoint(&model, dir.path()).unwrap();
    let back = load_checkpoint(dir.path()).unwrap();
    assert_eq!(back, model);
    assert_eq!(back.scaler.min.to_bits(), model.scaler.min.to_bits());
    assert_eq!(generate(&back, 20, 6, 5).unwrap(), generate(&model, 20, 6, 5).unwrap());

    let manifest = dir.path().join("manifest.json");
    let text = std::fs::read_to_string(&manifest).unwrap();
    std::fs::write(
        &manifest,
        text.replace("\"format_version\": 1", "\"format_version\": 99"),
    )
    .unwrap();
    assert!(matches!(load_checkpoint(dir.path()), Err(RganError::Checkpoint(_))));
    std::fs::remove_file(&manifest).unwrap();
    assert!(matches!(load_checkpoint(dir.path()), Err(RganError::Checkpoint(_))));
}

#[test]
fn train_log_csv() {
    let log = TrainLog {
        records: vec![TrainRecord {
            batches: 100,
            d_loss: 0.5,
            g_loss: 1.25,
            r2_mean: Some(0.9),
            r2_var: None,
        }],
    };
    let mut out = Vec::new();
    log.write_csv(&mut out).unwrap();
    assert_eq!(
        String::from_utf8(out).unwrap(),
        "batches,d_loss,g_loss,r2_mean,r2_var\n100,0.5,1.25,0.9,NaN\n"
    );
}

proptest! {
    #[test]
    fn scaler_maps_range_into_band(min in -1e3f64..1e3, width in 1e-3f64..1e3, s in 1.0f64..10.0, u in 0.0f64..=1.0) {
        let sc = Scaler::new(min, min + width, s).unwrap();
        let x = min + u * width;
        let y = sc.transform(x);
        prop_assert!(y.abs() <= 1.0 / s + 1e-12);
        prop_assert!((sc.inverse(y) - x).abs() <= 1e-12 * (1.0 + x.abs().max(width)));
    }
}
