use proptest::prelude::*;
use synthbt_core::backtest::{backtest, select_best, sharpe_distribution, SharpeSample};
use synthbt_core::evaluation::{compare_sharpe_dists, effectiveness};
use synthbt_core::process::{read_csv, simulate, write_csv};
use synthbt_core::stats::{ks_one_sample, r_squared};
use synthbt_core::strategy::{enumerate_grid, positions, ParamGrid, Side};
use synthbt_core::{PathOrigin, PathSet, PricePath, ProcessSpec, StrategyConfig, StrategyKind};

fn price_path() -> impl Strategy<Value = Vec<f64>> {
    (prop::collection::vec(-2.0f64..2.0, 20..120), -5.0f64..5.0).prop_map(|(steps, start)| {
        let mut v = vec![start];
        for s in steps {
            // Quantize so that some paths contain flat stretches.
            let last = *v.last().unwrap();
            v.push(last + (s * 4.0).round() / 4.0);
        }
        v
    })
}

fn mac_config() -> impl Strategy<Value = StrategyConfig> {
    (1u32..=50, 1u32..=50).prop_map(|(p1, p2)| StrategyConfig::Mac { p1, p2 })
}

fn bh_config() -> impl Strategy<Value = StrategyConfig> {
    (1u32..=30, 1u32..=30, 0u32..=20, any::<bool>()).prop_map(|(entry, hold, stop_loss, long)| StrategyConfig::Bh {
        entry,
        hold,
        stop_loss,
        side: if long { Side::Long } else { Side::Short },
    })
}

fn any_config() -> impl Strategy<Value = StrategyConfig> {
    prop_oneof![mac_config(), bh_config()]
}

fn path(values: Vec<f64>) -> PricePath {
    PricePath::from_values(values).unwrap()
}

fn external(paths: Vec<PricePath>) -> PathSet {
    PathSet::new(paths, PathOrigin::External { label: "test".into() }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn no_lookahead(values in price_path(), cut in 2usize..20, config in any_config()) {
        let full = positions(&path(values.clone()), &config).unwrap();
        let k = values.len() - cut;
        let short = positions(&path(values[..=k].to_vec()), &config).unwrap();
        prop_assert_eq!(&full.as_slice()[..k], short.as_slice());
    }

    #[test]
    fn bh_side_flip_negates(values in price_path(), entry in 1u32..=30, hold in 1u32..=30) {
        let p = path(values);
        let long = positions(&p, &StrategyConfig::Bh { entry, hold, stop_loss: 0, side: Side::Long }).unwrap();
        let short = positions(&p, &StrategyConfig::Bh { entry, hold, stop_loss: 0, side: Side::Short }).unwrap();
        prop_assert_eq!(long.negated(), short);
    }

    #[test]
    fn equity_telescopes(values in price_path(), config in any_config()) {
        let p = path(values.clone());
        let pos = positions(&p, &config).unwrap();
        let report = backtest(&p, &config).unwrap();
        let mut sum = 0.0;
        for (w, x) in values.windows(2).zip(pos.as_slice()) {
            sum += x.as_f64() * (w[1] - w[0]);
        }
        prop_assert_eq!(report.total_pnl(), sum);
        prop_assert_eq!(report.equity.len(), values.len());
        prop_assert!(pos.as_slice().iter().all(|x| [-1.0, 0.0, 1.0].contains(&x.as_f64())));
    }

    #[test]
    fn scaling_prices_keeps_sharpe(values in price_path(), config in mac_config(), e in -3i32..=4) {
        // Powers of two scale exactly, so moving-average ties are preserved.
        let k = 2f64.powi(e);
        let p = path(values);
        let base = backtest(&p, &config).unwrap();
        let scaled = backtest(&p.scaled(k), &config).unwrap();
        prop_assert_eq!(positions(&p, &config).unwrap(), positions(&p.scaled(k), &config).unwrap());
        prop_assert_eq!(scaled.total_pnl(), k * base.total_pnl());
        match (base.sharpe, scaled.sharpe) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-6 * (1.0 + a.abs()), "{} vs {}", a, b),
            (None, None) => {}
            (a, b) => prop_assert!(false, "definedness changed: {:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn scaling_prices_keeps_bh_sharpe_with_scaled_stop(values in price_path(), entry in 1u32..=30, hold in 1u32..=30, stop in 0u32..=10, long in any::<bool>()) {
        let side = if long { Side::Long } else { Side::Short };
        let p = path(values);
        let base = backtest(&p, &StrategyConfig::Bh { entry, hold, stop_loss: stop, side }).unwrap();
        let scaled = backtest(&p.scaled(2.0), &StrategyConfig::Bh { entry, hold, stop_loss: 2 * stop, side }).unwrap();
        prop_assert_eq!(scaled.total_pnl(), 2.0 * base.total_pnl());
        prop_assert_eq!(base.sharpe.is_some(), scaled.sharpe.is_some());
        if let (Some(a), Some(b)) = (base.sharpe, scaled.sharpe) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn grid_search_matches_exhaustive(paths in prop::collection::vec(price_path(), 1..4), len in 25usize..40) {
        let paths: Vec<PricePath> = paths.into_iter().filter(|v| v.len() >= len).map(|v| path(v[..len].to_vec())).collect();
        prop_assume!(!paths.is_empty());
        let configs: Vec<StrategyConfig> =
            (1..=5).flat_map(|p1| (1..=5).map(move |p2| StrategyConfig::Mac { p1, p2 })).collect();
        let grid = ParamGrid::from_configs(StrategyKind::Mac, configs.clone()).unwrap();
        let set = external(paths.clone());
        let got = select_best(&set, &grid).unwrap();

        // Independent oracle: undefined per-path values take the lowest
        // defined value anywhere in the search.
        let table: Vec<Vec<Option<f64>>> = configs
            .iter()
            .map(|c| paths.iter().map(|p| backtest(p, c).unwrap().sharpe).collect())
            .collect();
        let floor = table.iter().flatten().flatten().copied().fold(f64::INFINITY, f64::min);
        let mut best: Option<(usize, f64)> = None;
        for (i, row) in table.iter().enumerate() {
            if row.iter().all(Option::is_none) {
                continue;
            }
            let score = row.iter().map(|s| s.unwrap_or(floor)).sum::<f64>() / row.len() as f64;
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((i, score));
            }
        }
        let (_, top) = best.expect("oracle found no defined configuration");
        let chosen = configs.iter().position(|c| *c == got.best_config).unwrap();
        let row = &table[chosen];
        let chosen_score = row.iter().map(|s| s.unwrap_or(floor)).sum::<f64>() / row.len() as f64;
        prop_assert!((chosen_score - top).abs() < 1e-9, "chose {:?} at {} but best is {}", got.best_config, chosen_score, top);
        prop_assert!((got.best_score - top).abs() < 1e-9);
    }

    #[test]
    fn r2_never_exceeds_one(obs in prop::collection::vec(-10.0f64..10.0, 3..40), shift in -1.0f64..1.0) {
        let predicted: Vec<f64> = obs.iter().enumerate().map(|(i, _)| i as f64 * shift).collect();
        if let Some(r) = r_squared(&obs, &predicted) {
            prop_assert!(r <= 1.0);
        }
        if let Some(r) = r_squared(&obs, &obs) {
            prop_assert_eq!(r, 1.0);
        }
    }

    #[test]
    fn cdfs_monotone_and_pdfs_normalized(
        a in prop::collection::vec(-3.0f64..3.0, 1..200),
        b in prop::collection::vec(-3.0f64..3.0, 1..200),
        bins in prop::option::of(1usize..40),
    ) {
        let c = compare_sharpe_dists(&a, &b, bins).unwrap();
        for cdf in [&c.cdf_target, &c.cdf_experimental] {
            prop_assert!(cdf.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!((cdf.last().unwrap() - 1.0).abs() < 1e-12);
        }
        for pdf in [&c.pdf_target, &c.pdf_experimental] {
            prop_assert!((pdf.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        prop_assert!((0.0..=1.0).contains(&c.ks_statistic));
    }

    #[test]
    fn verdict_monotone_in_replaced_element(
        sample in prop::collection::vec(prop::option::of(-1.0f64..1.0), 1..60),
        idx in any::<prop::sample::Index>(),
        threshold in 0.0f64..1.0,
    ) {
        let i = idx.index(sample.len());
        let mut better = sample.clone();
        better[i] = Some(0.5);
        let before = effectiveness(&SharpeSample { per_path: sample }, threshold).unwrap();
        let after = effectiveness(&SharpeSample { per_path: better }, threshold).unwrap();
        prop_assert!(after.fraction_positive >= before.fraction_positive);
        prop_assert!(!before.effective || after.effective);
    }

    #[test]
    fn csv_round_trip_is_exact(seed in any::<u64>(), n in 1usize..5) {
        let set = simulate(&ProcessSpec::default_gbm(), 12, n, seed).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("p.csv");
        write_csv(&set, &file).unwrap();
        let back = read_csv(&file).unwrap();
        for (a, b) in set.paths().iter().zip(back.paths()) {
            prop_assert_eq!(a.values(), b.values());
        }
    }
}

#[test]
fn simulation_is_deterministic() {
    for spec in [
        ProcessSpec::random_walk(1.0),
        ProcessSpec::white_noise(2.0),
        ProcessSpec::default_gbm(),
        ProcessSpec::default_ar2(),
    ] {
        assert_eq!(
            simulate(&spec, 50, 20, 11).unwrap(),
            simulate(&spec, 50, 20, 11).unwrap()
        );
        assert_ne!(
            simulate(&spec, 50, 20, 11).unwrap(),
            simulate(&spec, 50, 20, 12).unwrap()
        );
    }
}

#[test]
fn random_walk_increments_are_normal() {
    let sigma = 1.5;
    let normal = statrs::distribution::Normal::new(0.0, sigma).unwrap();
    let passes = (0..100)
        .filter(|&seed| {
            let set = simulate(&ProcessSpec::random_walk(sigma), 500, 1, seed).unwrap();
            let inc: Vec<f64> = set.paths()[0].values().windows(2).map(|w| w[1] - w[0]).collect();
            use statrs::distribution::ContinuousCDF;
            ks_one_sample(&inc, |x| normal.cdf(x)).p_value > 0.01
        })
        .count();
    assert!(passes >= 99, "{passes}/100 seeds pass");
}

#[test]
fn fixed_bh_config_has_zero_expected_pnl() {
    let set = simulate(&ProcessSpec::random_walk(1.0), 300, 2000, 5).unwrap();
    for config in [
        StrategyConfig::Bh {
            entry: 1,
            hold: 30,
            stop_loss: 0,
            side: Side::Long,
        },
        StrategyConfig::Bh {
            entry: 10,
            hold: 5,
            stop_loss: 0,
            side: Side::Short,
        },
        StrategyConfig::Bh {
            entry: 25,
            hold: 17,
            stop_loss: 0,
            side: Side::Long,
        },
    ] {
        let pnl: Vec<f64> = set
            .paths()
            .iter()
            .map(|p| backtest(p, &config).unwrap().total_pnl())
            .collect();
        let n = pnl.len() as f64;
        let mean = pnl.iter().sum::<f64>() / n;
        let se = (pnl.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt();
        assert!(mean.abs() <= 3.0 * se, "{config:?}: mean {mean} se {se}");
    }
}

#[test]
fn full_grids_score_every_config() {
    let set = simulate(&ProcessSpec::random_walk(1.0), 60, 3, 2).unwrap();
    for kind in [StrategyKind::Mac, StrategyKind::Bh] {
        let grid = enumerate_grid(kind);
        let result = select_best(&set, &grid).unwrap();
        assert_eq!(result.scores.len(), grid.len());
        let direct = sharpe_distribution(&result.best_config, &set).unwrap();
        assert!(!direct.defined().is_empty());
    }
}
