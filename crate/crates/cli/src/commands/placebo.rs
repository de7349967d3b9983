//! `placebo`: covariate-matched pseudo-event Monte Carlo, writing per-day
//! empirical p-values, the raw draw matrix, and the real fit it is
//! calibrated against.

use liqrec::econ::placebo;
use liqrec::error::Result;

use super::{load_or_generate, Ctx};
use crate::output::{coefficient_table, fmt_num, OutputSink, Table};

pub fn run(ctx: &Ctx) -> Result<()> {
    let data = load_or_generate(ctx)?;
    let mut sink = OutputSink::new(&ctx.out_dir)?;
    tables(ctx, &data, &mut sink)?;
    let manifest = sink.finish("placebo", ctx.seed, &ctx.cfg.canonical_toml()?)?;
    eprintln!("placebo: {}", manifest.display());
    Ok(())
}

pub fn tables(ctx: &Ctx, data: &super::DataBundle, sink: &mut OutputSink) -> Result<()> {
    let r = placebo(&data.panel, &data.events, &ctx.cfg.placebo.options(ctx.seed))?;
    eprintln!(
        "placebo: pool of {} candidate dates, {} draws",
        r.pool_size,
        r.draws.len()
    );

    let mut p = Table::new("placebo_p", &["rel_day", "actual", "empirical_p", "pool_size"]);
    for i in 0..r.rel_days.len() {
        p.push(vec![
            r.rel_days[i].to_string(),
            fmt_num(r.actual[i]),
            fmt_num(r.empirical_p[i]),
            r.pool_size.to_string(),
        ]);
    }
    sink.write_table(&p)?;

    // Raw draw matrix: one row per draw, one column per event-time day.
    let cols: Vec<String> = r.rel_days.iter().map(|k| format!("d_{k}")).collect();
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut draws = Table::new("placebo_draws", &col_refs);
    for draw in &r.draws {
        draws.push(draw.iter().map(|v| fmt_num(*v)).collect());
    }
    sink.write_table(&draws)?;

    sink.write_table(&coefficient_table("placebo_real", &r.real_result))
}
