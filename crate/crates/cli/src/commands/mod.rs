//! Command implementations. Each command takes the resolved configuration,
//! writes its artifacts through an [`OutputSink`](crate::output::OutputSink),
//! and finishes with a manifest.

pub mod calibrate;
pub mod estimate;
pub mod placebo;
pub mod report;
pub mod simulate;

use std::path::PathBuf;

use liqrec::calendar::TradingCalendar;
use liqrec::datagen::{gen_events, gen_market, GroundTruth};
use liqrec::econ::{build_giv, protocol_shock, GivDay, GivSeries};
use liqrec::error::{Error, Result};
use liqrec::ingest::{parse_events, read_panel_csv};
use liqrec::tables::{EventCatalog, MarketPanel};

use crate::config::RunConfig;

/// Everything a command needs to run: the resolved config, the effective
/// seed, and the output directory (all flag overrides already applied).
pub struct Ctx {
    pub cfg: RunConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
}

/// The dataset a command runs on, either loaded from the configured paths
/// or simulated in memory from the simulate block.
pub struct DataBundle {
    pub panel: MarketPanel,
    pub events: EventCatalog,
    /// Present only for simulated data.
    pub truth: Option<GroundTruth>,
}

/// Load the panel and events from `paths` when given, otherwise simulate
/// them from the simulate block under the run seed.
pub fn load_or_generate(ctx: &Ctx) -> Result<DataBundle> {
    if let Some(panel_path) = &ctx.cfg.paths.panel {
        let events_path = ctx.cfg.paths.events.as_ref().ok_or_else(|| {
            Error::config("paths.events is required when paths.panel is set")
        })?;
        let panel = read_panel_csv(panel_path)?;
        let events = parse_events(events_path, panel.calendar())?;
        return Ok(DataBundle { panel, events, truth: None });
    }
    let sim = &ctx.cfg.simulate;
    eprintln!(
        "note: no paths.panel configured; simulating {} days, {} events (seed {})",
        sim.n_days, sim.n_events, ctx.seed
    );
    let calendar = TradingCalendar::weekdays_from(sim.start()?, sim.n_days, &[])?;
    let events = gen_events(&sim.event_gen(), &calendar, ctx.seed)?;
    let params = ctx.cfg.params.structural()?;
    let market =
        gen_market(&calendar, &events, &sim.market_gen(ctx.cfg.params.path()?), &params, ctx.seed)?;
    Ok(DataBundle { panel: market.panel, events, truth: Some(market.truth) })
}

/// Build the granular instrument from the event catalog: one cross-section
/// per event day, size weights `TVL/float` (rescaled when a day's weights
/// sum past one) and relative shocks `−loss/TVL`.
pub fn giv_from_events(
    panel: &MarketPanel,
    events: &EventCatalog,
    float_size_usd: f64,
    demean: bool,
) -> Result<GivSeries> {
    if !(float_size_usd > 0.0) {
        return Err(Error::config(format!(
            "float size must be positive to form GIV weights, got {float_size_usd}"
        )));
    }
    let mut by_day: std::collections::BTreeMap<usize, (Vec<f64>, Vec<f64>)> =
        std::collections::BTreeMap::new();
    for ev in events.events() {
        let t = panel.calendar().position(ev.date).ok_or_else(|| {
            Error::data(format!("event {} ({}) is off the panel calendar", ev.date, ev.protocol))
        })?;
        let entry = by_day.entry(t).or_default();
        entry.0.push((ev.tvl_usd / float_size_usd).min(1.0));
        entry.1.push(protocol_shock(ev.loss_usd, ev.tvl_usd)?);
    }
    let days: Vec<GivDay> = by_day
        .into_iter()
        .map(|(day_index, (mut weights, shocks))| {
            let total: f64 = weights.iter().sum();
            if total > 1.0 {
                for w in &mut weights {
                    *w /= total;
                }
            }
            GivDay { day_index, weights, shocks }
        })
        .collect();
    build_giv(panel.n_days(), &days, demean)
}

/// Per-day loss shock series in `loss_unit_usd` units; days without events
/// are zero, same-day events add.
pub fn loss_shock_series(
    panel: &MarketPanel,
    events: &EventCatalog,
    loss_unit_usd: f64,
) -> Result<Vec<f64>> {
    if !(loss_unit_usd > 0.0) {
        return Err(Error::config(format!(
            "loss unit must be positive, got {loss_unit_usd}"
        )));
    }
    let mut shock = vec![0.0; panel.n_days()];
    for ev in events.events() {
        let t = panel.calendar().position(ev.date).ok_or_else(|| {
            Error::data(format!("event {} ({}) is off the panel calendar", ev.date, ev.protocol))
        })?;
        shock[t] += ev.loss_usd / loss_unit_usd;
    }
    Ok(shock)
}

/// Named control columns pulled off the panel.
pub fn control_columns(panel: &MarketPanel, names: &[String]) -> Result<Vec<(String, Vec<f64>)>> {
    names
        .iter()
        .map(|name| Ok((name.clone(), panel.column(name)?.to_vec())))
        .collect()
}
