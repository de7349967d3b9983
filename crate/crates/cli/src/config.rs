//! Run configuration: one TOML file with nested sections, every block
//! optional, unknown keys rejected everywhere. Environment variables
//! (`LIQREC_PANEL`, `LIQREC_EVENTS`, `LIQREC_OUT`, `LIQREC_SEED`) override
//! only paths and the seed; command-line flags override both.

use std::path::{Path, PathBuf};

use liqrec::ambiguity::{JumpAsset, Preferences};
use liqrec::datagen::{EventGenConfig, LossDistribution, MarketGenConfig};
use liqrec::econ::{EventStudyOptions, PlaceboOptions, ThresholdOptions, TslsConfig};
use liqrec::error::{Error, Result};
use liqrec::globalgame::GameParams;
use liqrec::structmodel::{PathConfig, StructuralParams};
use serde::{Deserialize, Serialize};

fn parse_date(s: &str) -> Result<chrono::NaiveDate> {
    chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|_| Error::config(format!("bad date '{s}', expected YYYY-MM-DD")))
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: PathsBlock,
    pub params: ParamsBlock,
    pub simulate: SimulateBlock,
    pub event_study: EventStudyBlock,
    pub threshold: ThresholdBlock,
    pub giv: GivBlock,
    pub lp: LpBlock,
    pub did: DidBlock,
    pub monthly: MonthlyBlock,
    pub placebo: PlaceboBlock,
    pub calibrate: CalibrateBlock,
}

impl RunConfig {
    /// Load from a TOML file, then apply the environment overrides.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        cfg.apply_env()?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Built-in defaults plus environment overrides (used without --config).
    pub fn from_env() -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_env()?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var("LIQREC_PANEL") {
            self.paths.panel = Some(PathBuf::from(v));
        }
        if let Ok(v) = std::env::var("LIQREC_EVENTS") {
            self.paths.events = Some(PathBuf::from(v));
        }
        if let Ok(v) = std::env::var("LIQREC_OUT") {
            self.paths.output_dir = PathBuf::from(v);
        }
        if let Ok(v) = std::env::var("LIQREC_SEED") {
            self.seed = v
                .parse()
                .map_err(|_| Error::config(format!("LIQREC_SEED must be an integer, got '{v}'")))?;
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        self.params.structural()?.validate()?;
        self.params.path()?.validate()?;
        parse_date(&self.simulate.start_date)?;
        if self.simulate.tvl_multiple.len() != 2 {
            return Err(Error::config("simulate.tvl_multiple must be [lo, hi]"));
        }
        window_pair(&self.event_study.window)?;
        window_pair(&self.giv.window)?;
        window_pair(&self.did.window)?;
        window_pair(&self.placebo.window)?;
        if !["level", "change"].contains(&self.monthly.spec.as_str()) {
            return Err(Error::config(format!(
                "monthly.spec must be 'level' or 'change', got '{}'",
                self.monthly.spec
            )));
        }
        Ok(())
    }

    /// Deterministic serialization of the fully-resolved configuration, the
    /// text the manifest's config hash is computed over.
    pub fn canonical_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(format!("config serialization: {e}")))
    }
}

fn window_pair(w: &[i32]) -> Result<(i32, i32)> {
    if w.len() != 2 || w[0] > w[1] {
        return Err(Error::config(format!("window must be [lo, hi] with lo <= hi, got {w:?}")));
    }
    Ok((w[0], w[1]))
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsBlock {
    /// Existing daily panel CSV; omitted → the panel is simulated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub panel: Option<PathBuf>,
    /// Existing event catalog CSV; required when `panel` is set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub events: Option<PathBuf>,
    /// Output directory (created if missing); `--out` overrides. Excluded
    /// from the canonical serialization: where results land does not change
    /// what they are, so manifests stay identical across output locations.
    #[serde(skip_serializing)]
    pub output_dir: PathBuf,
    /// Optional monthly prime-CP-share CSV (`month,share`) for the monthly
    /// estimator; omitted → a VIX-based stand-in proxy is synthesized.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prime_share: Option<PathBuf>,
}

impl Default for PathsBlock {
    fn default() -> Self {
        Self { panel: None, events: None, output_dir: PathBuf::from("out"), prime_share: None }
    }
}

/// Structural and simulation parameters; unset fields keep the library
/// defaults so a config file only states what it changes.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vulnerability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_gas_gwei: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub congestion_gas_gwei: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub congestion_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub redemption_base: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub redemption_price_sensitivity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub panic_premium: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub friction_sensitivity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub safety_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub substitution_elasticity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub price_impact_bps_per_100m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_spread_bps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub float_size_usd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_sd_bps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub settlement_lag_days: Option<usize>,
}

impl ParamsBlock {
    pub fn structural(&self) -> Result<StructuralParams> {
        let mut p = StructuralParams::default();
        if let Some(v) = self.vulnerability {
            p.vulnerability = v;
        }
        if let Some(v) = self.base_gas_gwei {
            p.base_gas_gwei = v;
        }
        if let Some(v) = self.congestion_gas_gwei {
            p.congestion_gas_gwei = v;
        }
        if let Some(v) = self.congestion_exponent {
            p.congestion_exponent = v;
        }
        if let Some(v) = self.redemption_base {
            p.redemption_base = v;
        }
        if let Some(v) = self.redemption_price_sensitivity {
            p.redemption_price_sensitivity = v;
        }
        if let Some(v) = self.panic_premium {
            p.panic_premium = v;
        }
        if let Some(v) = self.friction_sensitivity {
            p.friction_sensitivity = v;
        }
        if let Some(v) = self.safety_threshold {
            p.safety_threshold = v;
        }
        if let Some(v) = self.substitution_elasticity {
            p.substitution_elasticity = v;
        }
        if let Some(v) = self.price_impact_bps_per_100m {
            p.price_impact_bps_per_100m = v;
        }
        Ok(p)
    }

    pub fn path(&self) -> Result<PathConfig> {
        let mut c = PathConfig::default();
        if let Some(v) = self.baseline_spread_bps {
            c.baseline_spread_bps = v;
        }
        if let Some(v) = self.float_size_usd {
            c.float_size_usd = v;
        }
        if let Some(v) = self.noise_sd_bps {
            c.noise_sd_bps = v;
        }
        if let Some(v) = self.settlement_lag_days {
            c.settlement_lag_days = v;
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateBlock {
    pub n_days: usize,
    pub start_date: String,
    pub n_events: usize,
    pub loss_log_mean: f64,
    pub loss_log_sd: f64,
    pub margin_days: usize,
    pub min_separation_days: usize,
    pub tvl_multiple: Vec<f64>,
    /// Also generate the multi-asset rate block used by the DiD estimator.
    pub did_assets: bool,
}

impl Default for SimulateBlock {
    fn default() -> Self {
        let loss = LossDistribution::default();
        let ev = EventGenConfig::default();
        Self {
            n_days: 750,
            start_date: "2022-01-03".into(),
            n_events: 50,
            loss_log_mean: loss.log_mean,
            loss_log_sd: loss.log_sd,
            margin_days: ev.margin_days,
            min_separation_days: ev.min_separation_days,
            tvl_multiple: vec![ev.tvl_multiple_range.0, ev.tvl_multiple_range.1],
            did_assets: true,
        }
    }
}

impl SimulateBlock {
    pub fn start(&self) -> Result<chrono::NaiveDate> {
        parse_date(&self.start_date)
    }

    pub fn event_gen(&self) -> EventGenConfig {
        EventGenConfig {
            n_events: self.n_events,
            loss: LossDistribution { log_mean: self.loss_log_mean, log_sd: self.loss_log_sd },
            blackout: Vec::new(),
            margin_days: self.margin_days,
            min_separation_days: self.min_separation_days,
            tvl_multiple_range: (self.tvl_multiple[0], self.tvl_multiple[1]),
        }
    }

    pub fn market_gen(&self, path: PathConfig) -> MarketGenConfig {
        MarketGenConfig { path, did_assets: self.did_assets, ..MarketGenConfig::default() }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct EventStudyBlock {
    pub window: Vec<i32>,
    pub baseline: i32,
    pub difference_outcome: bool,
    pub outcome_col: String,
    pub controls: Vec<String>,
}

impl Default for EventStudyBlock {
    fn default() -> Self {
        Self {
            window: vec![-5, 3],
            baseline: -1,
            difference_outcome: false,
            outcome_col: "cp_spread_bps".into(),
            controls: vec!["vix".into(), "dxy".into(), "btc_return".into()],
        }
    }
}

impl EventStudyBlock {
    pub fn window(&self) -> (i32, i32) {
        (self.window[0], self.window[1])
    }

    pub fn options(&self) -> EventStudyOptions {
        EventStudyOptions {
            baseline: self.baseline,
            difference_outcome: self.difference_outcome,
            controls: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdBlock {
    pub threshold_var: String,
    pub trim_fraction: f64,
    pub n_bootstrap: usize,
    pub lr_cutoff_95: f64,
    pub controls: Vec<String>,
}

impl Default for ThresholdBlock {
    fn default() -> Self {
        let o = ThresholdOptions::default();
        Self {
            threshold_var: "gas_gwei".into(),
            trim_fraction: o.trim_fraction,
            n_bootstrap: 200,
            lr_cutoff_95: o.lr_cutoff_95,
            controls: vec!["vix".into(), "dxy".into(), "btc_return".into()],
        }
    }
}

impl ThresholdBlock {
    pub fn options(&self, seed: u64, bootstrap_override: Option<usize>) -> ThresholdOptions {
        ThresholdOptions {
            trim_fraction: self.trim_fraction,
            n_bootstrap: bootstrap_override.unwrap_or(self.n_bootstrap),
            lr_cutoff_95: self.lr_cutoff_95,
            seed,
            post_var: None,
            controls: Some(self.controls.clone()),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct GivBlock {
    pub instrument_lag: usize,
    pub weak_f_threshold: f64,
    pub window: Vec<i32>,
    pub flow_col: String,
    pub outcome_col: String,
    pub factor_cols: Vec<String>,
    /// Demean shocks within each event day's cross-section (only effective
    /// when several protocols are hit the same day).
    pub demean: bool,
}

impl Default for GivBlock {
    fn default() -> Self {
        let c = TslsConfig::default();
        Self {
            instrument_lag: c.instrument_lag,
            weak_f_threshold: c.weak_f_threshold,
            window: vec![c.window.0, c.window.1],
            flow_col: c.flow_col,
            outcome_col: c.outcome_col,
            factor_cols: c.factor_cols,
            demean: false,
        }
    }
}

impl GivBlock {
    pub fn tsls(&self) -> TslsConfig {
        TslsConfig {
            instrument_lag: self.instrument_lag,
            weak_f_threshold: self.weak_f_threshold,
            window: (self.window[0], self.window[1]),
            flow_col: self.flow_col.clone(),
            outcome_col: self.outcome_col.clone(),
            factor_cols: self.factor_cols.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct LpBlock {
    pub max_horizon: usize,
    pub outcome_col: String,
    pub controls: Vec<String>,
    /// Shock units: event loss divided by this (default $100M).
    pub loss_unit_usd: f64,
}

impl Default for LpBlock {
    fn default() -> Self {
        Self {
            max_horizon: 10,
            outcome_col: "cp_spread_bps".into(),
            controls: vec!["vix".into(), "dxy".into()],
            loss_unit_usd: 1e8,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct DidBlock {
    pub rate_cols: Vec<String>,
    pub treat_col: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tbill_col: Option<String>,
    pub window: Vec<i32>,
    pub baseline: i32,
    pub control_cols: Vec<String>,
}

impl Default for DidBlock {
    fn default() -> Self {
        let c = liqrec::datagen::DidConfig::default();
        Self {
            rate_cols: c.rate_cols,
            treat_col: c.treat_col,
            tbill_col: c.tbill_col,
            window: vec![c.window.0, c.window.1],
            baseline: -1,
            control_cols: c.control_cols,
        }
    }
}

impl DidBlock {
    pub fn build(&self) -> liqrec::datagen::DidConfig {
        liqrec::datagen::DidConfig {
            rate_cols: self.rate_cols.clone(),
            treat_col: self.treat_col.clone(),
            tbill_col: self.tbill_col.clone(),
            window: (self.window[0], self.window[1]),
            control_cols: self.control_cols.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonthlyBlock {
    /// Outcome: "level" or "change".
    pub spec: String,
}

impl Default for MonthlyBlock {
    fn default() -> Self {
        Self { spec: "change".into() }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlaceboBlock {
    pub n_draws: usize,
    pub n_dates: usize,
    pub window: Vec<i32>,
    pub baseline: i32,
    pub difference_outcome: bool,
    pub exclusion_days: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_vix: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_spread: Option<f64>,
    pub outcome_col: String,
    pub vix_col: String,
}

impl Default for PlaceboBlock {
    fn default() -> Self {
        let o = PlaceboOptions::default();
        Self {
            n_draws: o.n_draws,
            n_dates: o.n_dates,
            window: vec![o.window.0, o.window.1],
            baseline: o.baseline,
            difference_outcome: o.difference_outcome,
            exclusion_days: o.exclusion_days,
            delta_vix: o.delta_vix,
            delta_spread: o.delta_spread,
            outcome_col: o.outcome_col,
            vix_col: o.vix_col,
        }
    }
}

impl PlaceboBlock {
    pub fn options(&self, seed: u64) -> PlaceboOptions {
        PlaceboOptions {
            outcome_col: self.outcome_col.clone(),
            vix_col: self.vix_col.clone(),
            controls: Vec::new(),
            window: (self.window[0], self.window[1]),
            baseline: self.baseline,
            difference_outcome: self.difference_outcome,
            delta_vix: self.delta_vix,
            delta_spread: self.delta_spread,
            exclusion_days: self.exclusion_days,
            n_draws: self.n_draws,
            n_dates: self.n_dates,
            seed,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrateBlock {
    /// Multiplier estimate fed to the elasticity identity (bps per $100M).
    pub beta_bps: f64,
    pub se_beta: f64,
    /// Price-impact grid for the elasticity table.
    pub lambdas: Vec<f64>,
    /// Ambiguity-tolerance grid for the robust portfolio table.
    pub psi_grid: Vec<f64>,
    /// Preference/asset blocks for the portfolio problem.
    pub risk_aversion: f64,
    pub discount_rate: f64,
    pub value_scale: f64,
    pub risk_premium: f64,
    pub volatility: f64,
    pub hack_intensity: f64,
    pub loss_given_hack: f64,
    /// Run-game cost primitives.
    pub base_cost: f64,
    pub congestion_scale: f64,
    pub congestion_exponent: f64,
    /// Ambiguity exponents for the distorted run threshold.
    pub ambiguity_exponents: Vec<f64>,
}

impl Default for CalibrateBlock {
    fn default() -> Self {
        let prefs = Preferences::default();
        let asset = JumpAsset::default();
        let game = GameParams::default();
        Self {
            beta_bps: -2.73,
            se_beta: 0.88,
            lambdas: vec![0.5, 0.75, 1.0, 1.25, 1.5, 2.0],
            psi_grid: vec![0.25, 0.5, 1.0, 1.5, 2.0, 4.0],
            risk_aversion: prefs.risk_aversion,
            discount_rate: prefs.discount_rate,
            value_scale: prefs.value_scale,
            risk_premium: asset.risk_premium,
            volatility: asset.volatility,
            hack_intensity: asset.hack_intensity,
            loss_given_hack: asset.loss_given_hack,
            base_cost: game.base_cost,
            congestion_scale: game.congestion_scale,
            congestion_exponent: game.congestion_exponent,
            ambiguity_exponents: vec![1.0, 1.5, 2.0],
        }
    }
}

impl CalibrateBlock {
    pub fn preferences(&self, psi: f64) -> Preferences {
        Preferences {
            risk_aversion: self.risk_aversion,
            discount_rate: self.discount_rate,
            ambiguity_tolerance: psi,
            value_scale: self.value_scale,
        }
    }

    pub fn asset(&self) -> JumpAsset {
        JumpAsset {
            risk_premium: self.risk_premium,
            volatility: self.volatility,
            hack_intensity: self.hack_intensity,
            loss_given_hack: self.loss_given_hack,
        }
    }

    pub fn game(&self, ambiguity_exponent: f64) -> GameParams {
        GameParams {
            base_cost: self.base_cost,
            congestion_scale: self.congestion_scale,
            congestion_exponent: self.congestion_exponent,
            ambiguity_exponent,
        }
    }
}
