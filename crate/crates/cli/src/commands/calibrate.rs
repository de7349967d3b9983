//! `calibrate`: deterministic structural calibration report — the
//! elasticity sensitivity table, the robust-portfolio sweep over the
//! ambiguity-tolerance grid, and the run-game thresholds.

use liqrec::ambiguity::optimal_weight;
use liqrec::econ::eta_recovery;
use liqrec::error::Result;
use liqrec::globalgame::{ambiguous_threshold, avg_congestion, run_threshold};

use crate::output::{fmt_num, OutputSink, Table};

use super::Ctx;

pub fn run(ctx: &Ctx) -> Result<()> {
    let mut sink = OutputSink::new(&ctx.out_dir)?;
    tables(ctx, &mut sink)?;
    let manifest = sink.finish("calibrate", ctx.seed, &ctx.cfg.canonical_toml()?)?;
    eprintln!("calibrate: {}", manifest.display());
    Ok(())
}

pub fn tables(ctx: &Ctx, sink: &mut OutputSink) -> Result<()> {
    let cal = &ctx.cfg.calibrate;

    // Elasticity of substitution over the assumed price-impact grid.
    let mut eta = Table::new("eta_sensitivity", &["lambda", "eta", "se", "ci_lo", "ci_hi"]);
    for row in eta_recovery(cal.beta_bps, cal.se_beta, &cal.lambdas)? {
        eta.push(vec![
            fmt_num(row.lambda),
            fmt_num(row.eta),
            fmt_num(row.se),
            fmt_num(row.ci_95.0),
            fmt_num(row.ci_95.1),
        ]);
    }
    sink.write_table(&eta)?;

    // Robust portfolio sweep: optimal exposure and worst-case distortion at
    // each ambiguity tolerance.
    let asset = cal.asset();
    let mut port = Table::new(
        "robust_portfolio",
        &["psi", "risky_weight", "distortion", "amplification", "foc_residual", "regime"],
    );
    for &psi in &cal.psi_grid {
        let s = optimal_weight(&cal.preferences(psi), &asset)?;
        port.push(vec![
            fmt_num(psi),
            fmt_num(s.risky_weight),
            fmt_num(s.distortion),
            fmt_num(s.amplification),
            fmt_num(s.foc_residual),
            format!("{:?}", s.regime).to_lowercase(),
        ]);
    }
    sink.write_table(&port)?;

    // Run-game thresholds, with and without the ambiguity distortion.
    let mut game = Table::new(
        "run_thresholds",
        &["ambiguity_exponent", "avg_congestion", "theta_star", "theta_star_ambiguous"],
    );
    for &a in &cal.ambiguity_exponents {
        let params = cal.game(a);
        params.validate()?;
        let c_bar = avg_congestion(&params);
        game.push(vec![
            fmt_num(a),
            fmt_num(c_bar),
            fmt_num(run_threshold(c_bar)?),
            fmt_num(ambiguous_threshold(c_bar, a)?),
        ]);
    }
    sink.write_table(&game)
}
