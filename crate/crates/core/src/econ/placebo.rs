//! Covariate-adaptive placebo inference: rerun the stacked event study on
//! pseudo-event dates drawn from days that look like the real event days
//! but lie outside their windows, and read off an empirical p-value.
//!
//! The candidate pool contains days whose VIX and spread levels fall within
//! tolerance bands around the real event-day means, at least
//! `exclusion_days + 1` days away from every real event, and with full
//! window coverage. Each draw resamples `n_dates` pool days with
//! replacement and reruns the identical stacked regression; the one-sided
//! empirical p-value at day `k` is the fraction of draws with
//! `β_placebo,k ≤ β_real,k`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tables::{EventCatalog, EventRecord, MarketPanel};

use super::event_study::{build_design, event_study, EventStudyOptions};
use super::regress::{ols_ssr, RegressionResult};

/// Options for [`placebo`].
#[derive(Debug, Clone)]
pub struct PlaceboOptions {
    pub outcome_col: String,
    pub vix_col: String,
    /// Controls for the stacked regression (must exist on the panel).
    pub controls: Vec<String>,
    pub window: (i32, i32),
    pub baseline: i32,
    pub difference_outcome: bool,
    /// VIX matching tolerance; `None` uses 0.5 × sample SD.
    pub delta_vix: Option<f64>,
    /// Spread matching tolerance; `None` uses 0.5 × sample SD.
    pub delta_spread: Option<f64>,
    /// Pseudo-events must lie more than this many trading days from every
    /// real event.
    pub exclusion_days: usize,
    pub n_draws: usize,
    /// Pseudo-event dates per draw, sampled with replacement.
    pub n_dates: usize,
    pub seed: u64,
}

impl Default for PlaceboOptions {
    fn default() -> Self {
        Self {
            outcome_col: "cp_spread_bps".into(),
            vix_col: "vix".into(),
            controls: Vec::new(),
            window: (-5, 3),
            baseline: -1,
            difference_outcome: false,
            delta_vix: None,
            delta_spread: None,
            exclusion_days: 10,
            n_draws: 500,
            n_dates: 50,
            seed: 0,
        }
    }
}

/// Placebo distribution and the actual estimates it is compared against.
#[derive(Debug, Clone)]
pub struct PlaceboResult {
    /// Estimated event-time days (baseline omitted), ascending.
    pub rel_days: Vec<i32>,
    /// Real stacked-regression coefficients per day.
    pub actual: Vec<f64>,
    /// One-sided empirical p per day: fraction of draws at or below the
    /// real coefficient.
    pub empirical_p: Vec<f64>,
    /// Draw matrix, `n_draws × rel_days.len()`, in draw order.
    pub draws: Vec<Vec<f64>>,
    pub pool_size: usize,
    /// The real event-study fit the placebo is calibrated against.
    pub real_result: RegressionResult,
}

fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Run the placebo Monte Carlo against the real events on `panel`.
pub fn placebo(
    panel: &MarketPanel,
    events: &EventCatalog,
    opts: &PlaceboOptions,
) -> Result<PlaceboResult> {
    if events.is_empty() {
        return Err(Error::estimation("placebo needs at least one real event"));
    }
    if opts.n_draws == 0 || opts.n_dates == 0 {
        return Err(Error::estimation("placebo needs n_draws >= 1 and n_dates >= 1"));
    }
    let n = panel.n_days();
    let vix = panel.column(&opts.vix_col)?;
    let spread = panel.column(&opts.outcome_col)?;

    // Real estimate.
    let es_opts = EventStudyOptions {
        baseline: opts.baseline,
        difference_outcome: opts.difference_outcome,
        controls: None,
    };
    let build = crate::datagen::build_stacked_panel(
        panel,
        events,
        opts.window,
        &opts.outcome_col,
        &opts.controls,
    )?;
    let real_result = event_study(&build.panel, &es_opts)?;

    // Event positions (all real events, including any dropped from the
    // stacking, still contaminate their neighborhoods).
    let positions: Vec<usize> = events
        .events()
        .iter()
        .filter_map(|e| panel.calendar().position(e.date))
        .collect();
    if positions.is_empty() {
        return Err(Error::data("no real event lies on the panel calendar"));
    }
    let mu_vix = positions.iter().map(|&p| vix[p]).sum::<f64>() / positions.len() as f64;
    let mu_spread = positions.iter().map(|&p| spread[p]).sum::<f64>() / positions.len() as f64;
    let delta_vix = opts.delta_vix.unwrap_or_else(|| 0.5 * sample_sd(vix));
    let delta_spread = opts.delta_spread.unwrap_or_else(|| 0.5 * sample_sd(spread));

    // Candidate pool with per-constraint diagnostics.
    let (w_lo, w_hi) = opts.window;
    let mut pool: Vec<usize> = Vec::new();
    let (mut n_vix, mut n_spread, mut n_clear, mut n_covered) = (0usize, 0usize, 0usize, 0usize);
    for d in 0..n {
        let vix_ok = (vix[d] - mu_vix).abs() < delta_vix;
        let spread_ok = (spread[d] - mu_spread).abs() < delta_spread;
        let clear = positions
            .iter()
            .all(|&p| (d as i64 - p as i64).unsigned_abs() as usize > opts.exclusion_days);
        // The stacker needs one extra day before the window for the
        // difference outcome, so coverage starts at w_lo − 1.
        let covered =
            d as i64 + w_lo as i64 - 1 >= 0 && d as i64 + (w_hi as i64) < n as i64;
        n_vix += usize::from(vix_ok);
        n_spread += usize::from(spread_ok);
        n_clear += usize::from(clear);
        n_covered += usize::from(covered);
        if vix_ok && spread_ok && clear && covered {
            pool.push(d);
        }
    }
    if pool.is_empty() {
        return Err(Error::estimation(format!(
            "empty placebo pool over {n} days: {n_vix} match VIX (±{delta_vix:.3}), \
             {n_spread} match spread (±{delta_spread:.3}), {n_clear} clear the \
             ±{} day exclusion zone, {n_covered} have window coverage",
            opts.exclusion_days
        )));
    }

    // Day layout of the draw regressions (identical across draws by
    // construction: every pool day has full coverage).
    let rel_days: Vec<i32> = (w_lo..=w_hi).filter(|&k| k != opts.baseline).collect();
    let actual: Vec<f64> = rel_days
        .iter()
        .map(|&k| real_result.coef_named(&super::event_study::rel_day_name(k)))
        .collect::<Result<_>>()?;

    let draws: Vec<Vec<f64>> = (0..opts.n_draws)
        .into_par_iter()
        .map(|draw| -> Result<Vec<f64>> {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(draw as u64));
            let records: Vec<EventRecord> = (0..opts.n_dates)
                .map(|j| {
                    let d = pool[rng.gen_range(0..pool.len())];
                    EventRecord {
                        date: panel.calendar().day(d),
                        protocol: format!("placebo-{draw}-{j}"),
                        chain: "placebo".into(),
                        loss_usd: 1.0,
                        tvl_usd: 1.0,
                        gas_gwei: 0.0,
                    }
                })
                .collect();
            let catalog = EventCatalog::new(records)?;
            let pseudo = crate::datagen::build_stacked_panel(
                panel,
                &catalog,
                opts.window,
                &opts.outcome_col,
                &opts.controls,
            )?;
            if pseudo.panel.n_events() != opts.n_dates {
                return Err(Error::estimation(
                    "placebo draw lost events despite pool coverage filtering",
                ));
            }
            let (design, _) = build_design(&pseudo.panel, &es_opts)?;
            let (beta, _) = ols_ssr(&design)?;
            // dummies are the first columns, in ascending rel-day order
            Ok(beta[..rel_days.len()].to_vec())
        })
        .collect::<Result<_>>()?;

    let empirical_p: Vec<f64> = (0..rel_days.len())
        .map(|j| {
            let hits = draws.iter().filter(|d| d[j] <= actual[j]).count();
            hits as f64 / opts.n_draws as f64
        })
        .collect();

    Ok(PlaceboResult {
        rel_days,
        actual,
        empirical_p,
        draws,
        pool_size: pool.len(),
        real_result,
    })
}
