//! Three-sector structural transmission model.
//!
//! An attack loss impairs bridge availability, which drives up gas frictions;
//! redemption demand rises with crypto drawdowns and jumps when availability
//! breaches a safety threshold; frictions throttle realized redemptions; and
//! realized redemptions move the commercial-paper spread through a price
//! impact scaled by the substitution elasticity into safe assets:
//!
//! ```text
//! availability    Ω = clamp(1 − κ·I, 0, 1)
//! friction        Φ = φ₀ + φ₁·(1−Ω)^γ                    (Gwei)
//! demand          Rᵈ = ρ₀ + ρ₁·(−Δp) + ρ₂·1{Ω < Ω̄}       (fraction of float)
//! net redemption  R  = Rᵈ / (1 + ψ·Φ)
//! spread change   ΔSpread = λ·(1 − η)·R                  (bps, R in $100M)
//! ```
//!
//! With η > 1 each redeemed dollar generates more than a dollar of safe-asset
//! demand, so redemptions *narrow* the spread — the sign law
//! `sign(ΔSpread) = sign(1−η)·sign(R)` holds exactly.

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::calendar::TradingCalendar;
use crate::error::{Error, Result};
use crate::tables::MarketPanel;

/// Calibration constants of the structural model.
///
/// None of these are estimated; they are configuration. The two that carry
/// empirical anchors are `substitution_elasticity` (the recovered η) and
/// `price_impact_bps_per_100m` (the price-impact normalization λ).
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralParams {
    /// Availability lost per USD of attack loss (κ ≥ 0).
    pub vulnerability: f64,
    /// Gas cost in Gwei on a fully available network (φ₀).
    pub base_gas_gwei: f64,
    /// Congestion gas sensitivity in Gwei (φ₁ > 0).
    pub congestion_gas_gwei: f64,
    /// Congestion exponent (γ ≥ 1): curvature of gas in lost availability.
    pub congestion_exponent: f64,
    /// Redemption intercept, fraction of stablecoin float (ρ₀).
    pub redemption_base: f64,
    /// Redemption response to a crypto price *decline* (ρ₁, fraction per unit return).
    pub redemption_price_sensitivity: f64,
    /// Panic redemption premium once availability breaches the safety
    /// threshold (ρ₂ ≥ 0, fraction of float).
    pub panic_premium: f64,
    /// Friction drag on realized redemptions (ψ > 0, per Gwei).
    pub friction_sensitivity: f64,
    /// Availability safety threshold Ω̄ ∈ (0,1); the panic premium switches on
    /// strictly below it.
    pub safety_threshold: f64,
    /// Elasticity of substitution into safe assets (η). η > 1 flips the sign
    /// of the spread response.
    pub substitution_elasticity: f64,
    /// Price impact λ in bps per $100M of net redemption (> 0).
    pub price_impact_bps_per_100m: f64,
}

impl Default for StructuralParams {
    /// Calibration chosen so a typical $100M loss produces gas near the
    /// observed event median (~42 Gwei) and a spread move of a few bps,
    /// while quiet-day redemptions are small enough that the baseline
    /// spread drifts by well under a basis point per year.
    fn default() -> Self {
        Self {
            vulnerability: 4e-9,
            base_gas_gwei: 10.0,
            congestion_gas_gwei: 200.0,
            congestion_exponent: 2.0,
            redemption_base: 1e-6,
            redemption_price_sensitivity: 5e-4,
            panic_premium: 8e-4,
            friction_sensitivity: 0.01,
            safety_threshold: 0.8,
            substitution_elasticity: 3.73,
            price_impact_bps_per_100m: 1.0,
        }
    }
}

impl StructuralParams {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(format!("structural params: {msg}")))
            }
        };
        check(self.vulnerability >= 0.0, "vulnerability must be >= 0")?;
        check(self.congestion_gas_gwei > 0.0, "congestion_gas_gwei must be > 0")?;
        check(self.congestion_exponent >= 1.0, "congestion_exponent must be >= 1")?;
        check(self.friction_sensitivity > 0.0, "friction_sensitivity must be > 0")?;
        check(
            self.safety_threshold > 0.0 && self.safety_threshold < 1.0,
            "safety_threshold must lie in (0,1)",
        )?;
        check(self.panic_premium >= 0.0, "panic_premium must be >= 0")?;
        check(
            self.price_impact_bps_per_100m > 0.0,
            "price_impact_bps_per_100m must be > 0",
        )?;
        for (name, v) in [
            ("vulnerability", self.vulnerability),
            ("base_gas_gwei", self.base_gas_gwei),
            ("congestion_gas_gwei", self.congestion_gas_gwei),
            ("congestion_exponent", self.congestion_exponent),
            ("redemption_base", self.redemption_base),
            ("redemption_price_sensitivity", self.redemption_price_sensitivity),
            ("panic_premium", self.panic_premium),
            ("friction_sensitivity", self.friction_sensitivity),
            ("safety_threshold", self.safety_threshold),
            ("substitution_elasticity", self.substitution_elasticity),
            ("price_impact_bps_per_100m", self.price_impact_bps_per_100m),
        ] {
            check(v.is_finite(), &format!("{name} must be finite"))?;
        }
        Ok(())
    }
}

/// Network-sector state on one day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkState {
    /// Attack loss in USD.
    pub loss_usd: f64,
    /// Bridge availability Ω ∈ [0,1].
    pub availability: f64,
    /// Gas friction Φ in Gwei.
    pub friction_gwei: f64,
}

/// Flow-sector state on one day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowState {
    /// Daily crypto return Δp.
    pub crypto_return: f64,
    /// Potential redemption demand Rᵈ, fraction of float.
    pub demand: f64,
    /// Realized net redemption R, fraction of float.
    pub net_redemption: f64,
    /// Net safe-asset supply change (1−η)·R, same units as R.
    pub net_supply: f64,
    /// Spread change λ(1−η)R in bps (R converted to $100M units).
    pub spread_change_bps: f64,
}

/// Bridge availability after a loss: `clamp(1 − κ·loss, 0, 1)`.
///
/// The linear form can go negative for large losses; availability is a
/// physical fraction, so it is clamped to [0, 1].
pub fn availability(loss_usd: f64, vulnerability: f64) -> Result<f64> {
    if loss_usd < 0.0 || !loss_usd.is_finite() {
        return Err(Error::config(format!("loss_usd must be >= 0, got {loss_usd}")));
    }
    if vulnerability < 0.0 || !vulnerability.is_finite() {
        return Err(Error::config(format!(
            "vulnerability must be >= 0, got {vulnerability}"
        )));
    }
    Ok((1.0 - vulnerability * loss_usd).clamp(0.0, 1.0))
}

/// Gas friction given availability: `φ₀ + φ₁·(1−Ω)^γ`.
pub fn friction(
    availability: f64,
    base_gas_gwei: f64,
    congestion_gas_gwei: f64,
    congestion_exponent: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&availability) {
        return Err(Error::config(format!(
            "availability must lie in [0,1], got {availability}"
        )));
    }
    Ok(base_gas_gwei + congestion_gas_gwei * (1.0 - availability).powf(congestion_exponent))
}

/// Potential redemption demand: `ρ₀ + ρ₁·(−Δp) + ρ₂·1{Ω < Ω̄}`.
///
/// The panic indicator uses a *strict* inequality: at Ω = Ω̄ exactly the
/// premium stays off.
pub fn redemption_demand(crypto_return: f64, availability: f64, params: &StructuralParams) -> f64 {
    let panic = if availability < params.safety_threshold {
        params.panic_premium
    } else {
        0.0
    };
    params.redemption_base + params.redemption_price_sensitivity * (-crypto_return) + panic
}

/// Realized net redemption: demand throttled by gas friction, `Rᵈ/(1+ψΦ)`.
///
/// Assumes `friction_sensitivity >= 0` and `friction_gwei >= 0`, which holds
/// for validated params and `friction()` output.
pub fn net_redemption(demand: f64, friction_gwei: f64, friction_sensitivity: f64) -> f64 {
    demand / (1.0 + friction_sensitivity * friction_gwei)
}

/// Spread change in bps for a net redemption measured in $100M units:
/// `λ·(1−η)·R`. Negative exactly when η > 1 and R > 0.
pub fn spread_change(
    net_redemption_100m: f64,
    substitution_elasticity: f64,
    price_impact_bps_per_100m: f64,
) -> f64 {
    price_impact_bps_per_100m * (1.0 - substitution_elasticity) * net_redemption_100m
}

/// Simulation-only constants: units bridge, observation noise, settlement.
#[derive(Debug, Clone, PartialEq)]
pub struct PathConfig {
    /// Spread level in quiet times, bps.
    pub baseline_spread_bps: f64,
    /// Stablecoin float in USD; converts redemption fractions to dollars.
    pub float_size_usd: f64,
    /// SD of additive Gaussian observation noise on the spread, bps.
    pub noise_sd_bps: f64,
    /// Trading days between a shock and the realized redemption flow
    /// (settlement). The spread impact stays on the shock day; only the
    /// recorded dollar flow shifts. Flows shifted past the calendar end are
    /// discarded.
    pub settlement_lag_days: usize,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self {
            baseline_spread_bps: 12.34,
            float_size_usd: 130e9,
            noise_sd_bps: 1.0,
            settlement_lag_days: 0,
        }
    }
}

impl PathConfig {
    pub fn validate(&self) -> Result<()> {
        if self.float_size_usd <= 0.0 || !self.float_size_usd.is_finite() {
            return Err(Error::config("float_size_usd must be positive"));
        }
        if self.noise_sd_bps < 0.0 || !self.noise_sd_bps.is_finite() {
            return Err(Error::config("noise_sd_bps must be >= 0"));
        }
        if !self.baseline_spread_bps.is_finite() {
            return Err(Error::config("baseline_spread_bps must be finite"));
        }
        Ok(())
    }
}

/// Structural states for one simulated day.
#[derive(Debug, Clone, Copy)]
pub struct DayState {
    pub date: NaiveDate,
    pub network: NetworkState,
    pub flow: FlowState,
}

/// A simulated path: the observable panel plus per-day structural states.
#[derive(Debug, Clone)]
pub struct SimulatedPath {
    pub panel: MarketPanel,
    pub days: Vec<DayState>,
}

/// Simulate a daily path from per-day losses and crypto returns.
///
/// Composes availability → friction → demand → net redemption → spread change
/// each day. The observed spread is `baseline + Σ_{s≤t} ΔSpread_s + ε_t` with
/// iid Gaussian observation noise; gas and realized dollar redemptions are
/// recorded alongside. Deterministic for a fixed seed.
///
/// Panel columns: `cp_spread_bps`, `gas_gwei`, `net_redemption_usd`,
/// `btc_return`.
pub fn simulate_path(
    calendar: &TradingCalendar,
    losses_usd: &[f64],
    crypto_returns: &[f64],
    params: &StructuralParams,
    config: &PathConfig,
    seed: u64,
) -> Result<SimulatedPath> {
    params.validate()?;
    config.validate()?;
    let n = calendar.len();
    if losses_usd.len() != n || crypto_returns.len() != n {
        return Err(Error::data(format!(
            "series not aligned with calendar: {} losses, {} returns, {} days",
            losses_usd.len(),
            crypto_returns.len(),
            n
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, config.noise_sd_bps)
        .map_err(|e| Error::config(format!("invalid noise SD: {e}")))?;

    let mut days = Vec::with_capacity(n);
    let mut spread = vec![0.0; n];
    let mut gas = vec![0.0; n];
    let mut flows_usd = vec![0.0; n];
    let mut btc = vec![0.0; n];
    let mut cum_change = 0.0;

    for t in 0..n {
        let omega = availability(losses_usd[t], params.vulnerability)?;
        let phi = friction(
            omega,
            params.base_gas_gwei,
            params.congestion_gas_gwei,
            params.congestion_exponent,
        )?;
        let demand = redemption_demand(crypto_returns[t], omega, params);
        let realized = net_redemption(demand, phi, params.friction_sensitivity);
        let realized_100m = realized * config.float_size_usd / 1e8;
        let d_spread = spread_change(
            realized_100m,
            params.substitution_elasticity,
            params.price_impact_bps_per_100m,
        );

        cum_change += d_spread;
        spread[t] = config.baseline_spread_bps + cum_change + noise.sample(&mut rng);
        gas[t] = phi;
        btc[t] = crypto_returns[t];
        // Settlement: the dollar flow is recorded with a lag, the price
        // impact is not.
        let settle = t + config.settlement_lag_days;
        if settle < n {
            flows_usd[settle] += realized * config.float_size_usd;
        }

        days.push(DayState {
            date: calendar.day(t),
            network: NetworkState { loss_usd: losses_usd[t], availability: omega, friction_gwei: phi },
            flow: FlowState {
                crypto_return: crypto_returns[t],
                demand,
                net_redemption: realized,
                net_supply: (1.0 - params.substitution_elasticity) * realized,
                spread_change_bps: d_spread,
            },
        });
    }

    let mut panel = MarketPanel::new(calendar.clone());
    panel.insert("cp_spread_bps", spread)?;
    panel.insert("gas_gwei", gas)?;
    panel.insert("net_redemption_usd", flows_usd)?;
    panel.insert("btc_return", btc)?;
    Ok(SimulatedPath { panel, days })
}
