//! `estimate <which>`: run one estimator on the configured dataset and
//! write its result tables (CSV + JSON) plus the run manifest.

use liqrec::datagen::{aggregate_monthly, build_did_panel, build_stacked_panel};
use liqrec::econ::{
    did_event_study, event_study, event_time_effects, local_projections,
    state_dependence_monthly, threshold_regression, tsls, MonthlySpec, RegressionResult,
    ThresholdResult, TslsResult,
};
use liqrec::error::{Error, Result};
use liqrec::tables::{MarketPanel, YearMonth};

use super::{control_columns, giv_from_events, load_or_generate, loss_shock_series, Ctx, DataBundle};
use crate::output::{coefficient_table, fmt_num, OutputSink, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Which {
    EventStudy,
    Threshold,
    Giv,
    Lp,
    Did,
    Monthly,
}

impl Which {
    fn slug(self) -> &'static str {
        match self {
            Which::EventStudy => "event_study",
            Which::Threshold => "threshold",
            Which::Giv => "giv",
            Which::Lp => "lp",
            Which::Did => "did",
            Which::Monthly => "monthly",
        }
    }
}

pub fn run(ctx: &Ctx, which: Which, bootstrap_override: Option<usize>) -> Result<()> {
    let data = load_or_generate(ctx)?;
    let mut sink = OutputSink::new(&ctx.out_dir)?;
    match which {
        Which::EventStudy => {
            event_study_tables(ctx, &data, &mut sink)?;
        }
        Which::Threshold => {
            threshold_tables(ctx, &data, &mut sink, bootstrap_override)?;
        }
        Which::Giv => {
            giv_tables(ctx, &data, &mut sink)?;
        }
        Which::Lp => lp_tables(ctx, &data, &mut sink)?,
        Which::Did => {
            did_tables(ctx, &data, &mut sink)?;
        }
        Which::Monthly => {
            monthly_tables(ctx, &data, &mut sink)?;
        }
    }
    let manifest = sink.finish(
        &format!("estimate_{}", which.slug()),
        ctx.seed,
        &ctx.cfg.canonical_toml()?,
    )?;
    eprintln!("estimate {}: {}", which.slug(), manifest.display());
    Ok(())
}

pub fn event_study_tables(
    ctx: &Ctx,
    data: &DataBundle,
    sink: &mut OutputSink,
) -> Result<RegressionResult> {
    let es = &ctx.cfg.event_study;
    let build =
        build_stacked_panel(&data.panel, &data.events, es.window(), &es.outcome_col, &es.controls)?;
    warn_all(&build.warnings);
    let result = event_study(&build.panel, &es.options())?;

    let mut t = Table::new(
        "event_study",
        &["rel_day", "estimate", "se", "t", "p", "ci_lo", "ci_hi", "baseline"],
    );
    for e in event_time_effects(&result, es.window(), es.baseline)? {
        t.push(vec![
            e.rel_day.to_string(),
            fmt_num(e.estimate),
            fmt_num(e.se),
            fmt_num(e.t_stat),
            fmt_num(e.p_value),
            fmt_num(e.ci_95.0),
            fmt_num(e.ci_95.1),
            e.baseline.to_string(),
        ]);
    }
    for jt in &result.joint_tests {
        t.push(vec![
            format!("joint:{}", jt.name),
            fmt_num(jt.f_stat),
            String::new(),
            String::new(),
            fmt_num(jt.p_value),
            String::new(),
            String::new(),
            String::new(),
        ]);
    }
    sink.write_table(&t)?;
    sink.write_table(&coefficient_table("event_study_coefficients", &result))?;
    Ok(result)
}

pub fn threshold_tables(
    ctx: &Ctx,
    data: &DataBundle,
    sink: &mut OutputSink,
    bootstrap_override: Option<usize>,
) -> Result<ThresholdResult> {
    let es = &ctx.cfg.event_study;
    let th = &ctx.cfg.threshold;
    // The stacked panel must carry the threshold variable alongside the
    // regression controls.
    let mut stack_controls = th.controls.clone();
    if !stack_controls.contains(&th.threshold_var) {
        stack_controls.push(th.threshold_var.clone());
    }
    let build = build_stacked_panel(
        &data.panel,
        &data.events,
        es.window(),
        &es.outcome_col,
        &stack_controls,
    )?;
    warn_all(&build.warnings);
    let opts = th.options(ctx.seed, bootstrap_override);
    let r = threshold_regression(&build.panel, &th.threshold_var, &opts)?;

    let mut t = Table::new("threshold", &["metric", "value"]);
    for (metric, value) in [
        ("gamma_hat", r.gamma_hat),
        ("ci_lo", r.ci_95.0),
        ("ci_hi", r.ci_95.1),
        ("bootstrap_p", r.bootstrap_p),
        ("f_stat", r.f_stat),
        ("low_regime_coef", r.low_regime.coef),
        ("low_regime_se", r.low_regime.se),
        ("high_regime_coef", r.high_regime.coef),
        ("high_regime_se", r.high_regime.se),
        ("n_obs", r.n_obs as f64),
        ("n_bootstrap", opts.n_bootstrap as f64),
    ] {
        t.push(vec![metric.to_string(), fmt_num(value)]);
    }
    sink.write_table(&t)?;

    // SSR profile over the admissible grid, for plotting.
    let mut grid = Table::new("threshold_grid", &["candidate", "ssr"]);
    for (c, ssr) in r.grid.iter().zip(&r.ssr_grid) {
        grid.push(vec![fmt_num(*c), fmt_num(*ssr)]);
    }
    sink.write_table(&grid)?;
    Ok(r)
}

pub fn giv_tables(ctx: &Ctx, data: &DataBundle, sink: &mut OutputSink) -> Result<TslsResult> {
    let g = &ctx.cfg.giv;
    let float = ctx.cfg.params.path()?.float_size_usd;
    let giv = giv_from_events(&data.panel, &data.events, float, g.demean)?;
    let r = tsls(&data.panel, &data.events, &giv, &g.tsls())?;

    if r.weak_instrument {
        eprintln!(
            "warning: weak instrument, first-stage F = {:.3} below {}",
            r.first_stage_f, g.weak_f_threshold
        );
    }
    for ev in &r.dropped_events {
        eprintln!("warning: event {ev} dropped for incomplete window coverage");
    }

    let mut t = Table::new("giv_summary", &["metric", "value"]);
    for (metric, value) in [
        ("multiplier_bps_per_100m", r.multiplier_bps_per_100m),
        ("multiplier_se_bps_per_100m", r.multiplier_se_bps_per_100m),
        ("first_stage_f", r.first_stage_f),
        ("weak_instrument", f64::from(u8::from(r.weak_instrument))),
        ("n_events_used", r.flow_hat_per_event.len() as f64),
        ("n_events_dropped", r.dropped_events.len() as f64),
    ] {
        t.push(vec![metric.to_string(), fmt_num(value)]);
    }
    sink.write_table(&t)?;
    sink.write_table(&coefficient_table("giv_first_stage", &r.first_stage))?;
    sink.write_table(&coefficient_table("giv_second_stage", &r.second_stage))?;
    Ok(r)
}

pub fn lp_tables(ctx: &Ctx, data: &DataBundle, sink: &mut OutputSink) -> Result<()> {
    let lp = &ctx.cfg.lp;
    let outcome = data.panel.column(&lp.outcome_col)?;
    let shock = loss_shock_series(&data.panel, &data.events, lp.loss_unit_usd)?;
    let controls = control_columns(&data.panel, &lp.controls)?;
    let irfs = local_projections(outcome, &shock, &controls, lp.max_horizon)?;

    let mut t = Table::new("lp_irf", &["horizon", "estimate", "se", "t", "p", "ci_lo", "ci_hi"]);
    for irf in &irfs {
        let i = irf.result.index_of("shock")?;
        let (lo, hi) = irf.result.ci95(i);
        t.push(vec![
            irf.horizon.to_string(),
            fmt_num(irf.result.coef[i]),
            fmt_num(irf.result.se(i)),
            fmt_num(irf.result.t_stat(i)),
            fmt_num(irf.result.p_value(i)),
            fmt_num(lo),
            fmt_num(hi),
        ]);
    }
    sink.write_table(&t)
}

pub fn did_tables(
    ctx: &Ctx,
    data: &DataBundle,
    sink: &mut OutputSink,
) -> Result<RegressionResult> {
    let d = &ctx.cfg.did;
    let build = build_did_panel(&data.panel, &data.events, &d.build())?;
    warn_all(&build.warnings);
    let result = did_event_study(&build.panel, d.baseline)?;
    sink.write_table(&coefficient_table("did", &result))?;
    Ok(result)
}

pub fn monthly_tables(
    ctx: &Ctx,
    data: &DataBundle,
    sink: &mut OutputSink,
) -> Result<RegressionResult> {
    let es = &ctx.cfg.event_study;
    let build =
        build_stacked_panel(&data.panel, &data.events, es.window(), &es.outcome_col, &es.controls)?;
    warn_all(&build.warnings);

    let share = prime_share_series(ctx, &data.panel)?;
    let hack_dates: Vec<chrono::NaiveDate> = data.events.dates().collect();
    let monthly = aggregate_monthly(&build.panel, &data.panel, &share, &hack_dates)?;
    if monthly.prime_share_degenerate {
        eprintln!("warning: prime-share series has zero variance across included months");
    }

    let spec = match ctx.cfg.monthly.spec.as_str() {
        "level" => MonthlySpec::Level,
        _ => MonthlySpec::Change,
    };
    let result = state_dependence_monthly(&monthly, spec)?;
    sink.write_table(&coefficient_table("monthly", &result))?;

    // The aggregated panel itself, for plotting and inspection.
    let mut t = Table::new(
        "monthly_panel",
        &["month", "spread_bps", "spread_change_bps", "hack_month", "prime_share_z"],
    );
    for row in &monthly.rows {
        t.push(vec![
            row.month.to_string(),
            fmt_num(row.spread_bps),
            row.spread_change_bps.map(fmt_num).unwrap_or_default(),
            row.hack_month.to_string(),
            fmt_num(row.prime_share_z),
        ]);
    }
    sink.write_table(&t)?;
    Ok(result)
}

/// Monthly prime-CP-share series: the configured CSV when given, otherwise
/// a stand-in proxy built from monthly mean VIX (risk appetite shifts money
/// out of prime funds when volatility is high). The series is standardized
/// downstream, so only its month-to-month variation matters.
fn prime_share_series(ctx: &Ctx, panel: &MarketPanel) -> Result<Vec<(YearMonth, f64)>> {
    if let Some(path) = &ctx.cfg.paths.prime_share {
        return read_prime_share_csv(path);
    }
    eprintln!("note: no prime-share file configured; using a VIX-based stand-in proxy");
    let vix = panel.column("vix")?;
    let mut sums: std::collections::BTreeMap<YearMonth, (f64, usize)> =
        std::collections::BTreeMap::new();
    for (date, v) in panel.dates().iter().zip(vix) {
        let e = sums.entry(YearMonth::of(*date)).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    Ok(sums
        .into_iter()
        .map(|(m, (sum, n))| {
            let mean_vix = sum / n as f64;
            (m, (0.30 - 0.005 * (mean_vix - 20.0)).clamp(0.05, 0.95))
        })
        .collect())
}

/// Parse a `month,share` CSV with months as `YYYY-MM`.
fn read_prime_share_csv(path: &std::path::Path) -> Result<Vec<(YearMonth, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::data(format!("cannot open {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
        let line = i + 2;
        if rec.len() != 2 {
            return Err(Error::data(format!(
                "{} line {line}: expected 2 columns (month,share), got {}",
                path.display(),
                rec.len()
            )));
        }
        let month = parse_year_month(&rec[0])
            .ok_or_else(|| Error::data(format!("{} line {line}: bad month '{}'", path.display(), &rec[0])))?;
        let share: f64 = rec[1].parse().map_err(|_| {
            Error::data(format!("{} line {line}: bad share '{}'", path.display(), &rec[1]))
        })?;
        out.push((month, share));
    }
    if out.is_empty() {
        return Err(Error::data(format!("{}: no prime-share rows", path.display())));
    }
    Ok(out)
}

fn parse_year_month(s: &str) -> Option<YearMonth> {
    let (y, m) = s.split_once('-')?;
    let year: i32 = y.parse().ok()?;
    let month: u32 = m.parse().ok()?;
    (1..=12).contains(&month).then_some(YearMonth { year, month })
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}
