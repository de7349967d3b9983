//! `simulate`: generate the synthetic daily panel and event catalog and
//! write them, the ground-truth sidecar, and the run manifest.

use liqrec::error::Result;
use liqrec::ingest::{write_events_csv, write_panel_csv};

use super::{load_or_generate, Ctx};
use crate::output::OutputSink;

pub fn run(ctx: &Ctx) -> Result<()> {
    let data = load_or_generate(ctx)?;
    let mut sink = OutputSink::new(&ctx.out_dir)?;

    write_panel_csv(&data.panel, &sink.dir().join("panel.csv"))?;
    sink.record_existing("panel.csv")?;

    write_events_csv(&data.events, &sink.dir().join("events.csv"))?;
    sink.record_existing("events.csv")?;

    if let Some(truth) = &data.truth {
        truth.write_to(&sink.dir().join("ground_truth.txt"))?;
        sink.record_existing("ground_truth.txt")?;
    }

    let manifest = sink.finish("simulate", ctx.seed, &ctx.cfg.canonical_toml()?)?;
    eprintln!(
        "simulate: {} days, {} events -> {}",
        data.panel.n_days(),
        data.events.len(),
        manifest.display()
    );
    Ok(())
}
