//! `report`: the full pipeline on one dataset — every estimator, the
//! boosted-tree gas-threshold diagnostic, the calibration tables, and a
//! one-page summary of the headline numbers.

use liqrec::datagen::build_stacked_panel;
use liqrec::econ::{elbow_detect, fit_gbr, partial_dependence, rel_day_name, GbrConfig};
use liqrec::error::Result;

use super::estimate::{
    did_tables, event_study_tables, giv_tables, lp_tables, monthly_tables, threshold_tables,
};
use super::{calibrate, load_or_generate, Ctx, DataBundle};
use crate::output::{fmt_num, OutputSink, Table};

pub fn run(ctx: &Ctx) -> Result<()> {
    let data = load_or_generate(ctx)?;
    let mut sink = OutputSink::new(&ctx.out_dir)?;
    let mut summary = Table::new("report_summary", &["metric", "value"]);
    let put = |t: &mut Table, metric: &str, value: f64| {
        t.push(vec![metric.to_string(), fmt_num(value)]);
    };

    // Stacked event study.
    let es = event_study_tables(ctx, &data, &mut sink)?;
    if let Ok(i) = es.index_of(&rel_day_name(0)) {
        put(&mut summary, "event_study_delta0_bps", es.coef[i]);
        put(&mut summary, "event_study_delta0_se", es.se(i));
    }
    if let Some(jt) = es.joint_tests.iter().find(|t| t.name == "pre-trend") {
        put(&mut summary, "pre_trend_f", jt.f_stat);
        put(&mut summary, "pre_trend_p", jt.p_value);
    }

    // Hansen threshold on the congestion variable.
    let th = threshold_tables(ctx, &data, &mut sink, None)?;
    put(&mut summary, "threshold_gamma_hat", th.gamma_hat);
    put(&mut summary, "threshold_bootstrap_p", th.bootstrap_p);

    // Granular-IV price impact.
    let giv = giv_tables(ctx, &data, &mut sink)?;
    put(&mut summary, "giv_multiplier_bps_per_100m", giv.multiplier_bps_per_100m);
    put(&mut summary, "giv_first_stage_f", giv.first_stage_f);

    // Local projections (table only; the IRF speaks for itself).
    lp_tables(ctx, &data, &mut sink)?;

    // Difference-in-differences across CP market segments.
    let did = did_tables(ctx, &data, &mut sink)?;
    put(&mut summary, "did_n_obs", did.n_obs as f64);

    // Monthly state dependence.
    let monthly = monthly_tables(ctx, &data, &mut sink)?;
    if let Ok(i) = monthly.index_of("hack_x_prime_share_z") {
        put(&mut summary, "monthly_interaction", monthly.coef[i]);
        put(&mut summary, "monthly_interaction_p", monthly.p_value(i));
    }

    // Boosted-tree congestion threshold.
    if let Some(elbow) = gbr_tables(ctx, &data, &mut sink)? {
        put(&mut summary, "gbr_gas_elbow_gwei", elbow);
    }

    // Structural calibration tables. η = 1 − β/λ at the unit price impact.
    calibrate::tables(ctx, &mut sink)?;
    let cal = &ctx.cfg.calibrate;
    put(&mut summary, "beta_bps", cal.beta_bps);
    put(&mut summary, "eta_at_lambda_1", 1.0 - cal.beta_bps);

    sink.write_table(&summary)?;
    let manifest = sink.finish("report", ctx.seed, &ctx.cfg.canonical_toml()?)?;
    eprintln!("report: {}", manifest.display());
    Ok(())
}

/// Fit a gradient-boosted ensemble of the post-event spread change on the
/// congestion variable and the market controls, then locate the elbow of
/// the congestion partial-dependence curve. Returns `None` when too few
/// post-event rows exist to fit.
fn gbr_tables(ctx: &Ctx, data: &DataBundle, sink: &mut OutputSink) -> Result<Option<f64>> {
    let es = &ctx.cfg.event_study;
    let th = &ctx.cfg.threshold;
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
    let post: Vec<_> = build.panel.rows.iter().filter(|r| r.rel_day >= 0).collect();
    if post.len() < 20 {
        eprintln!("note: skipping boosted-tree diagnostic, only {} post rows", post.len());
        return Ok(None);
    }
    let features: Vec<(String, Vec<f64>)> = build
        .panel
        .control_names
        .iter()
        .enumerate()
        .map(|(j, name)| (name.clone(), post.iter().map(|r| r.controls[j]).collect()))
        .collect();
    let target: Vec<f64> = post.iter().map(|r| r.outcome - r.outcome_prev).collect();
    let model = fit_gbr(&features, &target, &GbrConfig::default())?;
    if let Some(w) = &model.warning {
        eprintln!("warning: {w}");
    }

    let mut imp = Table::new("gbr_importance", &["feature", "importance"]);
    for (name, v) in model.feature_names.iter().zip(&model.importances) {
        imp.push(vec![name.clone(), fmt_num(*v)]);
    }
    sink.write_table(&imp)?;

    let pd = partial_dependence(&model, &features, &th.threshold_var, 50)?;
    let mut pd_t = Table::new("gbr_partial_dependence", &[th.threshold_var.as_str(), "prediction"]);
    for (x, y) in &pd {
        pd_t.push(vec![fmt_num(*x), fmt_num(*y)]);
    }
    sink.write_table(&pd_t)?;

    Ok(Some(elbow_detect(&pd)?))
}
