//! Granular instrumental variable: a size-weighted aggregate of de-meaned
//! protocol-level shocks, and the two-stage least-squares estimator that
//! uses it to price aggregate flow impact.
//!
//! On a shock day the instrument is
//!
//! ```text
//! u_{i,t} = g_{i,t} − ḡ_t        (ḡ_t: equal-weighted mean over active protocols)
//! Z_t     = Σ_i S_{i,t−1} · u_{i,t}
//! ```
//!
//! with prior-day value shares `S`. Days without shocks carry `Z_t = 0`.
//! De-meaning removes the common component so the size-weighted sum loads
//! only on idiosyncratic granularity; the `demean=false` variant keeps the
//! raw shocks for comparison.

use crate::error::{Error, Result};
use crate::tables::{EventCatalog, MarketPanel};

use super::regress::{ols, residualize, Design, RegressionResult, SeFlavor};

/// Relative protocol shock `g = −loss / TVL_{t−1}`.
///
/// Errors when the prior-day TVL is missing or non-positive: a loss without
/// a base is not a rate.
pub fn protocol_shock(loss_usd: f64, tvl_prev_usd: f64) -> Result<f64> {
    if !loss_usd.is_finite() || loss_usd < 0.0 {
        return Err(Error::data(format!("protocol loss must be finite and >= 0, got {loss_usd}")));
    }
    if !tvl_prev_usd.is_finite() || tvl_prev_usd <= 0.0 {
        return Err(Error::data(format!(
            "prior-day TVL must be positive on a shock day, got {tvl_prev_usd}"
        )));
    }
    Ok(-loss_usd / tvl_prev_usd)
}

/// One day's cross-section of active protocols: prior-day value shares and
/// contemporaneous shocks, in parallel order.
#[derive(Debug, Clone)]
pub struct GivDay {
    pub day_index: usize,
    /// Prior-day value shares `S_{i,t−1}`, each in [0,1], summing to ≤ 1.
    pub weights: Vec<f64>,
    /// Relative shocks `g_{i,t}` (zero for active-but-unshocked protocols).
    pub shocks: Vec<f64>,
}

/// A shock day after de-meaning, kept for diagnostics.
#[derive(Debug, Clone)]
pub struct GivDayDetail {
    pub day_index: usize,
    pub weights: Vec<f64>,
    pub shocks: Vec<f64>,
    /// De-meaned residual shocks `u_{i,t}` actually aggregated.
    pub residuals: Vec<f64>,
}

/// The instrument series over the full calendar.
#[derive(Debug, Clone)]
pub struct GivSeries {
    /// Per-day instrument value; zero on days without shocks.
    pub z: Vec<f64>,
    /// Shock-day cross-sections, ascending by day.
    pub days: Vec<GivDayDetail>,
}

impl GivSeries {
    pub fn n_days(&self) -> usize {
        self.z.len()
    }
}

/// Build the instrument series on an `n_days` calendar from the given
/// shock-day cross-sections.
pub fn build_giv(n_days: usize, days: &[GivDay], demean: bool) -> Result<GivSeries> {
    let mut z = vec![0.0; n_days];
    let mut details: Vec<GivDayDetail> = Vec::with_capacity(days.len());
    let mut seen = vec![false; n_days];
    for day in days {
        if day.day_index >= n_days {
            return Err(Error::data(format!(
                "shock day index {} outside the {n_days}-day calendar",
                day.day_index
            )));
        }
        if seen[day.day_index] {
            return Err(Error::data(format!("duplicate shock cross-section for day {}", day.day_index)));
        }
        seen[day.day_index] = true;
        if day.weights.is_empty() || day.weights.len() != day.shocks.len() {
            return Err(Error::data(format!(
                "day {}: weights ({}) and shocks ({}) must be non-empty and aligned",
                day.day_index,
                day.weights.len(),
                day.shocks.len()
            )));
        }
        let mut sum_w = 0.0;
        for &w in &day.weights {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::data(format!(
                    "day {}: weight {w} outside [0, 1]",
                    day.day_index
                )));
            }
            sum_w += w;
        }
        if sum_w > 1.0 + 1e-9 {
            return Err(Error::data(format!(
                "day {}: weights sum to {sum_w:.6}, above 1",
                day.day_index
            )));
        }
        if day.shocks.iter().any(|g| !g.is_finite()) {
            return Err(Error::data(format!("day {}: non-finite shock", day.day_index)));
        }

        let g_bar = if demean {
            day.shocks.iter().sum::<f64>() / day.shocks.len() as f64
        } else {
            0.0
        };
        let residuals: Vec<f64> = day.shocks.iter().map(|g| g - g_bar).collect();
        z[day.day_index] = day.weights.iter().zip(&residuals).map(|(w, u)| w * u).sum();
        details.push(GivDayDetail {
            day_index: day.day_index,
            weights: day.weights.clone(),
            shocks: day.shocks.clone(),
            residuals,
        });
    }
    details.sort_by_key(|d| d.day_index);
    Ok(GivSeries { z, days: details })
}

/// Configuration for [`tsls`].
#[derive(Debug, Clone)]
pub struct TslsConfig {
    /// Days the instrument is lagged in the first stage.
    pub instrument_lag: usize,
    /// First-stage F below this flags a weak instrument.
    pub weak_f_threshold: f64,
    /// Event window for the second stage; post-event means `k ≥ 0`.
    pub window: (i32, i32),
    /// Aggregate-flow column (dollars; positive = outflow).
    pub flow_col: String,
    /// Outcome column (bps) to residualize and stack.
    pub outcome_col: String,
    /// Macro factors the outcome is residualized on before stacking.
    pub factor_cols: Vec<String>,
}

impl Default for TslsConfig {
    fn default() -> Self {
        Self {
            instrument_lag: 1,
            weak_f_threshold: 10.0,
            window: (-5, 3),
            flow_col: "net_redemption_usd".into(),
            outcome_col: "cp_spread_bps".into(),
            factor_cols: vec!["vix".into(), "dxy".into(), "btc_return".into()],
        }
    }
}

/// Two-stage output: both stages, the instrument diagnostic, and the
/// headline flow multiplier.
#[derive(Debug, Clone)]
pub struct TslsResult {
    pub first_stage: RegressionResult,
    pub second_stage: RegressionResult,
    /// First-stage F (squared t on the lagged instrument).
    pub first_stage_f: f64,
    /// True when the first-stage F falls below the configured threshold.
    pub weak_instrument: bool,
    /// Price impact per $100M of instrumented flow, in bps.
    pub multiplier_bps_per_100m: f64,
    pub multiplier_se_bps_per_100m: f64,
    /// Window-summed predicted flow per retained event (dollars).
    pub flow_hat_per_event: Vec<f64>,
    /// Events dropped for incomplete window coverage.
    pub dropped_events: Vec<String>,
}

/// Instrumented price-impact estimation.
///
/// Stage 1 regresses the aggregate flow on the lagged instrument over the
/// full sample. Stage 2 stacks event windows of the residualized outcome on
/// `Post` and `Post × predicted event flow` with event fixed effects,
/// clustering by event. The predicted event flow is the first-stage fitted
/// flow summed over the post-event days `k ∈ [0, window.1]`. The reported
/// multiplier rescales the interaction coefficient from per-dollar to
/// per-$100M units.
pub fn tsls(
    panel: &MarketPanel,
    events: &EventCatalog,
    giv: &GivSeries,
    cfg: &TslsConfig,
) -> Result<TslsResult> {
    let n = panel.n_days();
    if giv.n_days() != n {
        return Err(Error::data(format!(
            "instrument has {} days, panel has {n}",
            giv.n_days()
        )));
    }
    let lag = cfg.instrument_lag;
    if lag >= n {
        return Err(Error::data(format!("instrument lag {lag} must be below the {n}-day panel")));
    }
    let flow = panel.column(&cfg.flow_col)?;
    let outcome = panel.column(&cfg.outcome_col)?;
    let factors: Vec<Vec<f64>> = cfg
        .factor_cols
        .iter()
        .map(|c| panel.column(c).map(<[f64]>::to_vec))
        .collect::<Result<_>>()?;

    // Stage 1: flow_t on Z_{t−lag}.
    let y1: Vec<f64> = flow[lag..].to_vec();
    let z_lagged: Vec<f64> = giv.z[..n - lag].to_vec();
    let mut d1 = Design::new(y1);
    d1.add_intercept()?;
    d1.add_column("giv_lagged", z_lagged)?;
    let first_stage = ols(&d1, SeFlavor::Hc1)?;
    let zi = first_stage.index_of("giv_lagged")?;
    let t_z = first_stage.t_stat(zi);
    let first_stage_f = t_z * t_z;
    let (alpha, gamma) = (first_stage.coef[0], first_stage.coef[zi]);

    // Fitted flow per day, defined from `lag` onward.
    let flow_hat: Vec<f64> = (0..n)
        .map(|t| if t >= lag { alpha + gamma * giv.z[t - lag] } else { f64::NAN })
        .collect();

    let abnormal = residualize(outcome, &factors)?;

    // Stack event windows; drop events without full coverage.
    let (w_lo, w_hi) = cfg.window;
    let mut rows: Vec<(usize, i32, f64)> = Vec::new(); // (event, k, abnormal outcome)
    let mut flow_hat_per_event = Vec::new();
    let mut dropped = Vec::new();
    let mut kept = 0usize;
    for ev in events.events() {
        let Some(t0) = panel.calendar().position(ev.date) else {
            dropped.push(format!("{} ({}): date not on the panel calendar", ev.protocol, ev.date));
            continue;
        };
        let lo = t0 as i64 + w_lo as i64;
        let hi = t0 as i64 + w_hi as i64;
        if lo < 0 || hi >= n as i64 || t0 < lag {
            dropped.push(format!("{} ({}): window not fully covered", ev.protocol, ev.date));
            continue;
        }
        let fhat: f64 = (0..=w_hi as i64).map(|k| flow_hat[(t0 as i64 + k) as usize]).sum();
        for k in w_lo..=w_hi {
            let t = (t0 as i64 + k as i64) as usize;
            rows.push((kept, k, abnormal[t]));
        }
        flow_hat_per_event.push(fhat);
        kept += 1;
    }
    if kept < 2 {
        return Err(Error::estimation(format!(
            "second stage needs >= 2 covered events, kept {kept} of {}",
            events.len()
        )));
    }

    let y2: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let post: Vec<f64> = rows.iter().map(|r| if r.1 >= 0 { 1.0 } else { 0.0 }).collect();
    let inter: Vec<f64> = rows
        .iter()
        .zip(&post)
        .map(|(r, p)| p * flow_hat_per_event[r.0])
        .collect();
    let event_keys: Vec<usize> = rows.iter().map(|r| r.0).collect();
    let mut d2 = Design::new(y2);
    d2.add_column("post", post)?;
    d2.add_column("post_x_flowhat", inter)?;
    d2.add_fixed_effect("event", &event_keys)?;
    d2.set_clusters("event", &event_keys)?;
    let second_stage = ols(&d2, SeFlavor::Cluster)?;
    let bi = second_stage.index_of("post_x_flowhat")?;
    let multiplier = second_stage.coef[bi] * 1e8;
    let multiplier_se = second_stage.se(bi) * 1e8;

    Ok(TslsResult {
        first_stage,
        second_stage,
        first_stage_f,
        weak_instrument: first_stage_f < cfg.weak_f_threshold,
        multiplier_bps_per_100m: multiplier,
        multiplier_se_bps_per_100m: multiplier_se,
        flow_hat_per_event,
        dropped_events: dropped,
    })
}
