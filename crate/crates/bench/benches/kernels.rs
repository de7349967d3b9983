//! Benchmarks of the hot estimation kernels: HAC covariance, the threshold
//! grid search, two-stage least squares, path simulation, and boosting.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use liqrec::calendar::{date, TradingCalendar};
use liqrec::datagen::{
    build_stacked_panel, gen_events, gen_market, EventGenConfig, MarketGenConfig,
};
use liqrec::econ::{
    fit_gbr, newey_west, threshold_regression, tsls, GbrConfig, ThresholdOptions, TslsConfig,
};
use liqrec::structmodel::{simulate_path, PathConfig, StructuralParams};
use liqrec::tables::{EventCatalog, MarketPanel};

/// One deterministic two-year market with fifty events, shared by the
/// estimator benchmarks.
fn demo_data() -> (MarketPanel, EventCatalog) {
    let calendar = TradingCalendar::weekdays_from(date(2022, 1, 3), 750, &[]).unwrap();
    let events = gen_events(&EventGenConfig::default(), &calendar, 42).unwrap();
    let cfg = MarketGenConfig {
        path: PathConfig { settlement_lag_days: 1, ..PathConfig::default() },
        ..MarketGenConfig::default()
    };
    let market =
        gen_market(&calendar, &events, &cfg, &StructuralParams::default(), 42).unwrap();
    (market.panel, events)
}

fn bench_newey_west(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let t = 500;
    let k = 6;
    let columns: Vec<Vec<f64>> =
        (0..k).map(|_| (0..t).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let residuals: Vec<f64> = (0..t).map(|_| rng.gen_range(-1.0..1.0)).collect();
    c.bench_function("newey_west_t500_k6_lag5", |b| {
        b.iter(|| newey_west(black_box(&columns), black_box(&residuals), 5).unwrap())
    });
}

fn bench_threshold_grid(c: &mut Criterion) {
    let (panel, events) = demo_data();
    let controls =
        ["vix", "dxy", "btc_return", "gas_gwei"].map(String::from).to_vec();
    let build =
        build_stacked_panel(&panel, &events, (-5, 3), "cp_spread_bps", &controls).unwrap();
    let opts = ThresholdOptions {
        n_bootstrap: 0, // grid search only; the bootstrap just repeats it
        controls: Some(vec!["vix".into(), "dxy".into(), "btc_return".into()]),
        ..ThresholdOptions::default()
    };
    c.bench_function("threshold_grid_450rows", |b| {
        b.iter(|| threshold_regression(black_box(&build.panel), "gas_gwei", &opts).unwrap())
    });
}

fn bench_tsls(c: &mut Criterion) {
    let (panel, events) = demo_data();
    let float = PathConfig::default().float_size_usd;
    let mut by_day: std::collections::BTreeMap<usize, (Vec<f64>, Vec<f64>)> =
        std::collections::BTreeMap::new();
    for ev in events.events() {
        let t = panel.calendar().position(ev.date).unwrap();
        let e = by_day.entry(t).or_default();
        e.0.push((ev.tvl_usd / float).min(1.0));
        e.1.push(-ev.loss_usd / ev.tvl_usd);
    }
    let days: Vec<liqrec::econ::GivDay> = by_day
        .into_iter()
        .map(|(day_index, (weights, shocks))| liqrec::econ::GivDay { day_index, weights, shocks })
        .collect();
    let giv = liqrec::econ::build_giv(panel.n_days(), &days, false).unwrap();
    let cfg = TslsConfig::default();
    c.bench_function("tsls_750days_50events", |b| {
        b.iter(|| tsls(black_box(&panel), &events, &giv, &cfg).unwrap())
    });
}

fn bench_simulate_path(c: &mut Criterion) {
    let calendar = TradingCalendar::weekdays_from(date(2022, 1, 3), 2000, &[]).unwrap();
    let n = calendar.len();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut losses = vec![0.0; n];
    for _ in 0..100 {
        let t = rng.gen_range(0..n);
        losses[t] += rng.gen_range(1e6..5e8);
    }
    let returns: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.05..0.05)).collect();
    let params = StructuralParams::default();
    let cfg = PathConfig::default();
    c.bench_function("simulate_path_2000days", |b| {
        b.iter(|| simulate_path(black_box(&calendar), &losses, &returns, &params, &cfg, 3).unwrap())
    });
}

fn bench_gbr(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 1000;
    let gas: Vec<f64> = (0..n).map(|_| rng.gen_range(5.0..80.0)).collect();
    let vix: Vec<f64> = (0..n).map(|_| rng.gen_range(12.0..40.0)).collect();
    let target: Vec<f64> = gas
        .iter()
        .zip(&vix)
        .map(|(g, v)| if *g > 36.0 { 2.0 } else { -1.0 } + 0.05 * v + rng.gen_range(-0.5..0.5))
        .collect();
    let features = vec![("gas".to_string(), gas), ("vix".to_string(), vix)];
    let cfg = GbrConfig::default();
    c.bench_function("gbr_100trees_1000rows", |b| {
        b.iter(|| fit_gbr(black_box(&features), &target, &cfg).unwrap())
    });
}

criterion_group!(
    benches,
    bench_newey_west,
    bench_threshold_grid,
    bench_tsls,
    bench_simulate_path,
    bench_gbr
);
criterion_main!(benches);
