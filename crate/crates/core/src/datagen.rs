//! Synthetic data generation and estimation-panel assembly.
//!
//! Generation happens in two steps: [`gen_events`] draws a calibrated event
//! catalog (lognormal losses, uniform dates with blackout and separation
//! rules), and [`gen_market`] runs the structural model over those events on
//! top of AR(1) macro factors, returning the daily panel together with a
//! [`GroundTruth`] record so parameter-recovery tests never have to guess
//! what generated the data.
//!
//! Assembly turns a panel plus catalog into the estimation-ready shapes:
//! [`build_stacked_panel`] (single-series stacked event windows),
//! [`build_did_panel`] (asset × day windows with a treated flag), and
//! [`aggregate_monthly`] (event-window month aggregates for the
//! state-dependence tests). All generators are bit-reproducible for a fixed
//! seed.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use crate::calendar::TradingCalendar;
use crate::error::{Error, Result};
use crate::structmodel::{
    availability, friction, simulate_path, PathConfig, StructuralParams,
};
use crate::tables::{
    EventCatalog, EventRecord, MarketPanel, MonthlyPanel, MonthlyRow, StackedPanel, StackedRow,
    YearMonth,
};

/// Lognormal loss calibration: parameters of the underlying normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossDistribution {
    pub log_mean: f64,
    pub log_sd: f64,
}

impl Default for LossDistribution {
    /// Matches the observed log-loss moments of the major-incident sample.
    fn default() -> Self {
        Self { log_mean: 16.98, log_sd: 1.97 }
    }
}

/// Configuration for [`gen_events`].
#[derive(Debug, Clone, PartialEq)]
pub struct EventGenConfig {
    pub n_events: usize,
    pub loss: LossDistribution,
    /// Dates events must avoid (scheduled-announcement cleansing).
    pub blackout: Vec<NaiveDate>,
    /// Trading days kept clear at both calendar ends so event windows
    /// (including the pre-window day used by difference outcomes) fit.
    pub margin_days: usize,
    /// Minimum trading-day distance between any two event dates; zero
    /// allows same-day events.
    pub min_separation_days: usize,
    /// TVL is the loss times a uniform multiple from this range; the lower
    /// bound must be ≥ 1 so losses never exceed TVL.
    pub tvl_multiple_range: (f64, f64),
}

impl Default for EventGenConfig {
    fn default() -> Self {
        Self {
            n_events: 50,
            loss: LossDistribution::default(),
            blackout: Vec::new(),
            margin_days: 6,
            min_separation_days: 0,
            tvl_multiple_range: (2.0, 25.0),
        }
    }
}

const CHAINS: [&str; 5] = ["ethereum", "bsc", "polygon", "solana", "avalanche"];

/// Draw a synthetic event catalog on the given calendar.
///
/// Dates are uniform over the eligible days (inside the margins, off the
/// blackout list), thinned by rejection until the pairwise separation rule
/// holds. Losses are lognormal; TVL is a uniform multiple of the loss; the
/// recorded event gas is the default calibration's friction map evaluated at
/// the loss, so it matches the simulated panel's gas on default-parameter
/// runs. Deterministic for a fixed seed; `n_events = 0` yields an empty
/// catalog.
pub fn gen_events(
    cfg: &EventGenConfig,
    calendar: &TradingCalendar,
    seed: u64,
) -> Result<EventCatalog> {
    if !cfg.loss.log_sd.is_finite() || cfg.loss.log_sd < 0.0 || !cfg.loss.log_mean.is_finite() {
        return Err(Error::config(format!(
            "loss distribution needs finite log_mean and log_sd >= 0, got ({}, {})",
            cfg.loss.log_mean, cfg.loss.log_sd
        )));
    }
    let (m_lo, m_hi) = cfg.tvl_multiple_range;
    if !(1.0 <= m_lo && m_lo < m_hi && m_hi.is_finite()) {
        return Err(Error::config(format!(
            "tvl_multiple_range must satisfy 1 <= lo < hi, got ({m_lo}, {m_hi})"
        )));
    }
    if cfg.n_events == 0 {
        return EventCatalog::new(Vec::new());
    }

    let n = calendar.len();
    let blackout: BTreeSet<NaiveDate> = cfg.blackout.iter().copied().collect();
    let eligible: Vec<usize> = (0..n)
        .filter(|&p| {
            p >= cfg.margin_days
                && p + cfg.margin_days < n
                && !blackout.contains(&calendar.day(p))
        })
        .collect();
    if eligible.is_empty() {
        return Err(Error::config(format!(
            "calendar of {n} trading days leaves no eligible event day \
             (margin {} days each side, {} blacked out)",
            cfg.margin_days,
            cfg.blackout.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions: Vec<usize> = Vec::with_capacity(cfg.n_events);
    let max_attempts = 10_000 + 1_000 * cfg.n_events;
    let mut attempts = 0usize;
    while positions.len() < cfg.n_events {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::config(format!(
                "could not place {} events with min separation {} on {} eligible days",
                cfg.n_events,
                cfg.min_separation_days,
                eligible.len()
            )));
        }
        let p = eligible[rng.gen_range(0..eligible.len())];
        let clear = positions
            .iter()
            .all(|&q| p.abs_diff(q) >= cfg.min_separation_days);
        if clear {
            positions.push(p);
        }
    }
    positions.sort_unstable();

    let loss_dist = LogNormal::new(cfg.loss.log_mean, cfg.loss.log_sd)
        .map_err(|e| Error::config(format!("invalid loss distribution: {e}")))?;
    let gas_params = StructuralParams::default();
    let mut events = Vec::with_capacity(cfg.n_events);
    for (i, &p) in positions.iter().enumerate() {
        let loss = loss_dist.sample(&mut rng);
        let multiple = rng.gen_range(m_lo..m_hi);
        let omega = availability(loss, gas_params.vulnerability)?;
        let gas = friction(
            omega,
            gas_params.base_gas_gwei,
            gas_params.congestion_gas_gwei,
            gas_params.congestion_exponent,
        )?;
        events.push(EventRecord {
            date: calendar.day(p),
            protocol: format!("protocol-{i:03}"),
            chain: CHAINS[i % CHAINS.len()].to_string(),
            loss_usd: loss,
            tvl_usd: loss * multiple,
            gas_gwei: gas,
        });
    }
    EventCatalog::new(events)
}

/// Stationary AR(1) specification: `x_t = μ + ρ(x_{t−1} − μ) + ε_t` with the
/// innovation variance chosen so the long-run standard deviation is `sd`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1Config {
    pub mean: f64,
    pub sd: f64,
    pub persistence: f64,
}

impl Ar1Config {
    fn validate(&self, name: &str) -> Result<()> {
        if !self.mean.is_finite() || !self.sd.is_finite() || self.sd < 0.0 {
            return Err(Error::config(format!(
                "{name}: AR(1) needs finite mean and sd >= 0"
            )));
        }
        if !(self.persistence.abs() < 1.0) {
            return Err(Error::config(format!(
                "{name}: AR(1) persistence must satisfy |rho| < 1, got {}",
                self.persistence
            )));
        }
        Ok(())
    }
}

/// Configuration for [`gen_market`].
#[derive(Debug, Clone, PartialEq)]
pub struct MarketGenConfig {
    /// Units bridge and observation noise passed through to the simulator.
    pub path: PathConfig,
    pub vix: Ar1Config,
    pub dxy: Ar1Config,
    /// 3-month T-bill yield, percent.
    pub tbill_pct: Ar1Config,
    /// Daily crypto-return moments (iid normal).
    pub btc_mean: f64,
    pub btc_sd: f64,
    /// Fixed split of the aggregate redemption flow into per-stablecoin
    /// columns `net_redemption_usd_<name>`; shares must sum to 1. Empty
    /// skips the split columns.
    pub stablecoin_shares: Vec<(String, f64)>,
    /// When set, also generate the DiD asset block: `tbill_pct` plus
    /// per-asset rate columns (percent), of which only the AA non-financial
    /// CP rate responds to events.
    pub did_assets: bool,
}

impl Default for MarketGenConfig {
    /// Long-run moments match the observed sample: VIX 19.44 (sd 5.28),
    /// DXY 101.04 (sd 5.80), daily BTC return 0.18% (sd 3.94%).
    fn default() -> Self {
        Self {
            path: PathConfig::default(),
            vix: Ar1Config { mean: 19.44, sd: 5.28, persistence: 0.95 },
            dxy: Ar1Config { mean: 101.04, sd: 5.80, persistence: 0.98 },
            tbill_pct: Ar1Config { mean: 4.50, sd: 0.25, persistence: 0.99 },
            btc_mean: 0.0018,
            btc_sd: 0.0394,
            stablecoin_shares: vec![
                ("usdt".into(), 0.6),
                ("usdc".into(), 0.3),
                ("dai".into(), 0.1),
            ],
            did_assets: true,
        }
    }
}

/// Everything that generated a synthetic panel, for recovery tests.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub params: StructuralParams,
    pub path: PathConfig,
    pub seed: u64,
}

impl GroundTruth {
    /// Serialize as documented plain text: one `key=value` per line, `#`
    /// comments, floats in shortest round-trip form.
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let p = &self.params;
        let c = &self.path;
        let f = |v: f64| format!("{v}");
        vec![
            ("vulnerability".into(), f(p.vulnerability)),
            ("base_gas_gwei".into(), f(p.base_gas_gwei)),
            ("congestion_gas_gwei".into(), f(p.congestion_gas_gwei)),
            ("congestion_exponent".into(), f(p.congestion_exponent)),
            ("redemption_base".into(), f(p.redemption_base)),
            ("redemption_price_sensitivity".into(), f(p.redemption_price_sensitivity)),
            ("panic_premium".into(), f(p.panic_premium)),
            ("friction_sensitivity".into(), f(p.friction_sensitivity)),
            ("safety_threshold".into(), f(p.safety_threshold)),
            ("substitution_elasticity".into(), f(p.substitution_elasticity)),
            ("price_impact_bps_per_100m".into(), f(p.price_impact_bps_per_100m)),
            ("baseline_spread_bps".into(), f(c.baseline_spread_bps)),
            ("float_size_usd".into(), f(c.float_size_usd)),
            ("noise_sd_bps".into(), f(c.noise_sd_bps)),
            ("settlement_lag_days".into(), format!("{}", c.settlement_lag_days)),
            ("seed".into(), format!("{}", self.seed)),
        ]
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut out = String::from("# ground truth of the synthetic panel (key=value)\n");
        for (k, v) in self.to_key_values() {
            out.push_str(&k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::data(format!("{}: line {}: expected key=value", path.display(), i + 1))
            })?;
            if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(Error::data(format!(
                    "{}: duplicate key '{}'",
                    path.display(),
                    k.trim()
                )));
            }
        }
        let take_f = |key: &str| -> Result<f64> {
            map.get(key)
                .ok_or_else(|| Error::data(format!("{}: missing key '{key}'", path.display())))?
                .parse::<f64>()
                .map_err(|_| Error::data(format!("{}: bad value for '{key}'", path.display())))
        };
        let params = StructuralParams {
            vulnerability: take_f("vulnerability")?,
            base_gas_gwei: take_f("base_gas_gwei")?,
            congestion_gas_gwei: take_f("congestion_gas_gwei")?,
            congestion_exponent: take_f("congestion_exponent")?,
            redemption_base: take_f("redemption_base")?,
            redemption_price_sensitivity: take_f("redemption_price_sensitivity")?,
            panic_premium: take_f("panic_premium")?,
            friction_sensitivity: take_f("friction_sensitivity")?,
            safety_threshold: take_f("safety_threshold")?,
            substitution_elasticity: take_f("substitution_elasticity")?,
            price_impact_bps_per_100m: take_f("price_impact_bps_per_100m")?,
        };
        let path_cfg = PathConfig {
            baseline_spread_bps: take_f("baseline_spread_bps")?,
            float_size_usd: take_f("float_size_usd")?,
            noise_sd_bps: take_f("noise_sd_bps")?,
            settlement_lag_days: take_f("settlement_lag_days")? as usize,
        };
        let seed = take_f("seed")? as u64;
        Ok(Self { params, path: path_cfg, seed })
    }
}

/// A generated market: the observable panel plus its ground truth.
#[derive(Debug, Clone)]
pub struct MarketGen {
    pub panel: MarketPanel,
    pub truth: GroundTruth,
}

fn simulate_ar1(cfg: &Ar1Config, n: usize, floor: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let innovation_sd = cfg.sd * (1.0 - cfg.persistence * cfg.persistence).sqrt();
    let station = Normal::new(0.0, 1.0).expect("unit normal");
    let mut out = Vec::with_capacity(n);
    let mut x = cfg.mean + cfg.sd * station.sample(rng);
    for _ in 0..n {
        out.push(x.max(floor));
        x = cfg.mean + cfg.persistence * (x - cfg.mean) + innovation_sd * station.sample(rng);
    }
    out
}

/// Simulate the daily market panel for an event catalog.
///
/// Macro factors are stationary AR(1) draws (VIX floored at 1, yields at 0);
/// crypto returns are iid normal; spreads, gas, and flows come from the
/// structural simulator driven by the catalog's per-day losses. Columns:
/// `cp_spread_bps`, `gas_gwei`, `net_redemption_usd`, `btc_return`, `vix`,
/// `dxy`, optional per-stablecoin flow splits, and (with `did_assets`) the
/// `tbill_pct` yield plus five asset rate columns of which only
/// `rate_aa_nonfin` carries the event response.
pub fn gen_market(
    calendar: &TradingCalendar,
    events: &EventCatalog,
    cfg: &MarketGenConfig,
    params: &StructuralParams,
    seed: u64,
) -> Result<MarketGen> {
    params.validate()?;
    cfg.path.validate()?;
    cfg.vix.validate("vix")?;
    cfg.dxy.validate("dxy")?;
    cfg.tbill_pct.validate("tbill_pct")?;
    if !cfg.btc_sd.is_finite() || cfg.btc_sd < 0.0 || !cfg.btc_mean.is_finite() {
        return Err(Error::config("btc return moments must be finite with sd >= 0"));
    }
    if !cfg.stablecoin_shares.is_empty() {
        let sum: f64 = cfg.stablecoin_shares.iter().map(|(_, s)| s).sum();
        if cfg.stablecoin_shares.iter().any(|(_, s)| !(0.0..=1.0).contains(s))
            || (sum - 1.0).abs() > 1e-9
        {
            return Err(Error::config(format!(
                "stablecoin shares must lie in [0,1] and sum to 1, got sum {sum}"
            )));
        }
    }

    let n = calendar.len();
    let mut losses = vec![0.0; n];
    for ev in events.events() {
        let t = calendar.position(ev.date).ok_or_else(|| {
            Error::config(format!(
                "event {} ({}) is not on the simulation calendar",
                ev.date, ev.protocol
            ))
        })?;
        losses[t] += ev.loss_usd;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vix = simulate_ar1(&cfg.vix, n, 1.0, &mut rng);
    let dxy = simulate_ar1(&cfg.dxy, n, f64::NEG_INFINITY, &mut rng);
    let tbill = simulate_ar1(&cfg.tbill_pct, n, 0.0, &mut rng);
    let btc_dist = Normal::new(cfg.btc_mean, cfg.btc_sd)
        .map_err(|e| Error::config(format!("invalid btc moments: {e}")))?;
    let btc: Vec<f64> = (0..n).map(|_| btc_dist.sample(&mut rng)).collect();

    let sim = simulate_path(calendar, &losses, &btc, params, &cfg.path, seed.wrapping_add(1))?;
    let mut panel = sim.panel;
    panel.insert("vix", vix.clone())?;
    panel.insert("dxy", dxy)?;

    if !cfg.stablecoin_shares.is_empty() {
        let aggregate = panel.column("net_redemption_usd")?.to_vec();
        for (name, share) in &cfg.stablecoin_shares {
            let col: Vec<f64> = aggregate.iter().map(|f| f * share).collect();
            panel.insert(format!("net_redemption_usd_{name}"), col)?;
        }
    }

    if cfg.did_assets {
        let spread = panel.column("cp_spread_bps")?.to_vec();
        panel.insert("tbill_pct", tbill.clone())?;
        // Treated asset: the AA non-financial CP rate embeds the simulated
        // spread exactly, so rate − tbill recovers it.
        let treated: Vec<f64> =
            tbill.iter().zip(&spread).map(|(t, s)| t + s / 100.0).collect();
        panel.insert("rate_aa_nonfin", treated)?;
        // Control assets: VIX-sensitive baseline spreads with idiosyncratic
        // noise and no event response.
        let noise = Normal::new(0.0, 0.8).expect("control-asset noise");
        for (name, base_bps) in [
            ("rate_a2p2", 25.0),
            ("rate_sofr", 2.0),
            ("rate_aa_fin", 15.0),
            ("rate_abcp", 20.0),
        ] {
            let col: Vec<f64> = (0..n)
                .map(|t| {
                    let s_bps =
                        base_bps + 0.15 * (vix[t] - cfg.vix.mean) + noise.sample(&mut rng);
                    tbill[t] + s_bps / 100.0
                })
                .collect();
            panel.insert(name, col)?;
        }
    }

    Ok(MarketGen {
        panel,
        truth: GroundTruth { params: params.clone(), path: cfg.path.clone(), seed },
    })
}

/// A stacked panel plus the per-event drop warnings from its assembly.
#[derive(Debug, Clone)]
pub struct StackedBuild {
    pub panel: StackedPanel,
    pub warnings: Vec<String>,
}

/// Stack single-series event windows into a long panel.
///
/// One row per event per relative day `k ∈ [window.0, window.1]`, carrying
/// the outcome, the previous trading day's outcome (for difference
/// specifications — so coverage requires one extra day before the window),
/// and the named control columns. Events whose extended window runs off the
/// calendar or hits a missing value are dropped with a warning; overlapping
/// events duplicate calendar days by design. Kept events are renumbered
/// densely in date order.
pub fn build_stacked_panel(
    panel: &MarketPanel,
    events: &EventCatalog,
    window: (i32, i32),
    outcome_col: &str,
    controls: &[String],
) -> Result<StackedBuild> {
    let (w_lo, w_hi) = window;
    if w_lo > w_hi {
        return Err(Error::config(format!("window [{w_lo}, {w_hi}] is empty")));
    }
    let outcome = panel.column(outcome_col)?;
    let control_cols: Vec<&[f64]> =
        controls.iter().map(|c| panel.column(c)).collect::<Result<_>>()?;
    let n = panel.n_days() as i64;

    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut kept = 0usize;
    'events: for ev in events.events() {
        let Some(t0) = panel.calendar().position(ev.date) else {
            warnings.push(format!(
                "dropped event {} ({}): date not on the panel calendar",
                ev.protocol, ev.date
            ));
            continue;
        };
        let t0 = t0 as i64;
        if t0 + w_lo as i64 - 1 < 0 || t0 + w_hi as i64 >= n {
            warnings.push(format!(
                "dropped event {} ({}): window [{w_lo}, {w_hi}] not fully covered",
                ev.protocol, ev.date
            ));
            continue;
        }
        for k in (w_lo - 1)..=w_hi {
            let t = (t0 + k as i64) as usize;
            let complete = outcome[t].is_finite()
                && (k < w_lo || control_cols.iter().all(|c| c[t].is_finite()));
            if !complete {
                warnings.push(format!(
                    "dropped event {} ({}): missing value on {} (k={k})",
                    ev.protocol,
                    ev.date,
                    panel.calendar().day(t)
                ));
                continue 'events;
            }
        }
        for k in w_lo..=w_hi {
            let t = (t0 + k as i64) as usize;
            rows.push(StackedRow {
                event: kept,
                date: panel.calendar().day(t),
                rel_day: k,
                outcome: outcome[t],
                outcome_prev: outcome[t - 1],
                controls: control_cols.iter().map(|c| c[t]).collect(),
                asset: None,
                treated: true,
            });
        }
        kept += 1;
    }
    if rows.is_empty() {
        return Err(Error::data(format!(
            "no event with full [{w_lo}, {w_hi}] window coverage out of {} ({} dropped)",
            events.len(),
            warnings.len()
        )));
    }
    Ok(StackedBuild {
        panel: StackedPanel {
            window,
            control_names: controls.to_vec(),
            assets: Vec::new(),
            rows,
        },
        warnings,
    })
}

/// Aggregate a stacked panel to months for the state-dependence tests.
///
/// Only months containing at least one event-window day enter; each month's
/// spread (and each control) averages over the *distinct* event-window days
/// that fall in it. `spread_change_bps` is the difference to the previous
/// calendar month when that month is also included. `hack_month` flags
/// months containing one of `hack_dates`. The prime CP share is standardized
/// to mean 0, sd 1 (sample sd) over the included months; a zero-variance
/// share series yields all-zero z-scores with the panel's degenerate flag
/// set instead of an error.
pub fn aggregate_monthly(
    stacked: &StackedPanel,
    panel: &MarketPanel,
    prime_share: &[(YearMonth, f64)],
    hack_dates: &[NaiveDate],
) -> Result<MonthlyPanel> {
    if stacked.rows.is_empty() {
        return Err(Error::data("monthly aggregation needs a non-empty stacked panel"));
    }
    let mut share_map: BTreeMap<YearMonth, f64> = BTreeMap::new();
    for &(m, s) in prime_share {
        if share_map.insert(m, s).is_some() {
            return Err(Error::data(format!("duplicate prime-share month {m}")));
        }
    }

    // Distinct event-window days (overlapping events count a day once).
    let mut by_day: BTreeMap<NaiveDate, (f64, Vec<f64>)> = BTreeMap::new();
    for row in &stacked.rows {
        if panel.calendar().position(row.date).is_none() {
            return Err(Error::data(format!(
                "stacked row date {} is not on the panel calendar",
                row.date
            )));
        }
        by_day.entry(row.date).or_insert_with(|| (row.outcome, row.controls.clone()));
    }

    let mut by_month: BTreeMap<YearMonth, Vec<&(f64, Vec<f64>)>> = BTreeMap::new();
    for (day, cell) in &by_day {
        by_month.entry(YearMonth::of(*day)).or_default().push(cell);
    }
    let hack_months: BTreeSet<YearMonth> =
        hack_dates.iter().map(|d| YearMonth::of(*d)).collect();

    let months: Vec<YearMonth> = by_month.keys().copied().collect();
    let n_controls = stacked.control_names.len();
    let mut spreads = Vec::with_capacity(months.len());
    let mut control_means = Vec::with_capacity(months.len());
    let mut shares = Vec::with_capacity(months.len());
    for m in &months {
        let cells = &by_month[m];
        let inv = 1.0 / cells.len() as f64;
        spreads.push(cells.iter().map(|(s, _)| s).sum::<f64>() * inv);
        let mut cm = vec![0.0; n_controls];
        for (_, ctrl) in cells.iter() {
            for (acc, v) in cm.iter_mut().zip(ctrl) {
                *acc += v * inv;
            }
        }
        control_means.push(cm);
        shares.push(*share_map.get(m).ok_or_else(|| {
            Error::data(format!("prime-share series does not cover month {m}"))
        })?);
    }

    // Standardize the share over included months; zero variance degrades to
    // zeros rather than erroring so parameter sweeps stay alive.
    let k = shares.len();
    let mean = shares.iter().sum::<f64>() / k as f64;
    let sd = if k > 1 {
        (shares.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
    } else {
        0.0
    };
    let degenerate = !(sd > 0.0);
    let z: Vec<f64> = if degenerate {
        vec![0.0; k]
    } else {
        shares.iter().map(|s| (s - mean) / sd).collect()
    };

    let included: BTreeSet<YearMonth> = months.iter().copied().collect();
    let rows = months
        .iter()
        .enumerate()
        .map(|(i, &m)| MonthlyRow {
            month: m,
            spread_bps: spreads[i],
            spread_change_bps: if included.contains(&m.prev()) {
                let j = months.iter().position(|&x| x == m.prev()).expect("included month");
                Some(spreads[i] - spreads[j])
            } else {
                None
            },
            hack_month: hack_months.contains(&m),
            prime_share_z: z[i],
            controls: control_means[i].clone(),
        })
        .collect();
    Ok(MonthlyPanel {
        rows,
        control_names: stacked.control_names.clone(),
        prime_share_degenerate: degenerate,
    })
}

/// Configuration for [`build_did_panel`].
#[derive(Debug, Clone, PartialEq)]
pub struct DidConfig {
    /// Per-asset rate (or spread) columns; order fixes the asset indices.
    pub rate_cols: Vec<String>,
    /// Which of `rate_cols` is the treated asset.
    pub treat_col: String,
    /// When set, the outcome is `rate − tbill` in the columns' native units;
    /// when `None` the rate columns are used as spreads directly.
    pub tbill_col: Option<String>,
    pub window: (i32, i32),
    pub control_cols: Vec<String>,
}

impl Default for DidConfig {
    fn default() -> Self {
        Self {
            rate_cols: vec![
                "rate_aa_nonfin".into(),
                "rate_a2p2".into(),
                "rate_sofr".into(),
                "rate_aa_fin".into(),
                "rate_abcp".into(),
            ],
            treat_col: "rate_aa_nonfin".into(),
            tbill_col: Some("tbill_pct".into()),
            window: (-5, 5),
            control_cols: Vec::new(),
        }
    }
}

/// Stack asset × day event windows for difference-in-differences.
///
/// For each kept event and each window day, one row per asset with the
/// spread outcome and `treated` set on the configured asset. Days where the
/// T-bill, any asset rate, or any control is missing are deleted listwise —
/// all assets lose the day, nothing is interpolated. Events off the calendar
/// or with truncated windows are dropped with a warning, as is an event
/// whose every window day was deleted.
pub fn build_did_panel(
    panel: &MarketPanel,
    events: &EventCatalog,
    cfg: &DidConfig,
) -> Result<StackedBuild> {
    let (w_lo, w_hi) = cfg.window;
    if w_lo > w_hi {
        return Err(Error::config(format!("window [{w_lo}, {w_hi}] is empty")));
    }
    if cfg.rate_cols.len() < 2 {
        return Err(Error::config(
            "difference-in-differences needs at least two asset columns",
        ));
    }
    let Some(treat_idx) = cfg.rate_cols.iter().position(|c| c == &cfg.treat_col) else {
        return Err(Error::config(format!(
            "treated asset column '{}' is not among the asset columns",
            cfg.treat_col
        )));
    };
    let rates: Vec<&[f64]> =
        cfg.rate_cols.iter().map(|c| panel.column(c)).collect::<Result<_>>()?;
    let tbill: Option<&[f64]> = match &cfg.tbill_col {
        Some(c) => Some(panel.column(c)?),
        None => None,
    };
    let control_cols: Vec<&[f64]> =
        cfg.control_cols.iter().map(|c| panel.column(c)).collect::<Result<_>>()?;
    let n = panel.n_days() as i64;

    // Spread of asset `a` on day `t`; NaN marks a deleted cell.
    let spread_at = |a: usize, t: i64| -> f64 {
        if t < 0 {
            return f64::NAN;
        }
        let t = t as usize;
        match tbill {
            Some(tb) => rates[a][t] - tb[t],
            None => rates[a][t],
        }
    };
    let day_complete = |t: usize| -> bool {
        tbill.is_none_or(|tb| tb[t].is_finite())
            && rates.iter().all(|r| r[t].is_finite())
            && control_cols.iter().all(|c| c[t].is_finite())
    };

    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut kept = 0usize;
    for ev in events.events() {
        let Some(t0) = panel.calendar().position(ev.date) else {
            warnings.push(format!(
                "dropped event {} ({}): date not on the panel calendar",
                ev.protocol, ev.date
            ));
            continue;
        };
        let t0 = t0 as i64;
        if t0 + w_lo as i64 - 1 < 0 || t0 + w_hi as i64 >= n {
            warnings.push(format!(
                "dropped event {} ({}): window [{w_lo}, {w_hi}] not fully covered",
                ev.protocol, ev.date
            ));
            continue;
        }
        let mut any_day = false;
        for k in w_lo..=w_hi {
            let t = t0 + k as i64;
            if !day_complete(t as usize) {
                continue; // listwise deletion: the day vanishes for all assets
            }
            any_day = true;
            for (a, _) in cfg.rate_cols.iter().enumerate() {
                rows.push(StackedRow {
                    event: kept,
                    date: panel.calendar().day(t as usize),
                    rel_day: k,
                    outcome: spread_at(a, t),
                    outcome_prev: spread_at(a, t - 1),
                    controls: control_cols.iter().map(|c| c[t as usize]).collect(),
                    asset: Some(a),
                    treated: a == treat_idx,
                });
            }
        }
        if any_day {
            kept += 1;
        } else {
            warnings.push(format!(
                "dropped event {} ({}): every window day had missing rates",
                ev.protocol, ev.date
            ));
        }
    }
    if rows.is_empty() {
        return Err(Error::data(format!(
            "no usable asset × day rows out of {} events ({} dropped)",
            events.len(),
            warnings.len()
        )));
    }
    Ok(StackedBuild {
        panel: StackedPanel {
            window: cfg.window,
            control_names: cfg.control_cols.clone(),
            assets: cfg.rate_cols.clone(),
            rows,
        },
        warnings,
    })
}
