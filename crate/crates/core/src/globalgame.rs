//! Global-game run threshold under congestion and ambiguity.
//!
//! In the vanishing-noise limit of the coordination game, an agent at the
//! threshold holds Laplacian beliefs — the attacking mass `A` is uniform on
//! [0, 1] — so the expected exit cost under the congestion schedule
//! `C(A) = φ₀ + γ·A^λ` is the integral
//!
//! ```text
//! C̄ = φ₀ + γ/(λ+1),
//! ```
//!
//! and the unique dominance-solvable run threshold on fundamentals is
//! `θ* = 1 − C̄`: congestion shrinks the run region. Ambiguity-averse agents
//! act on distorted beliefs `Ψ(p) ≤ p` about the mass of runners; under the
//! power family `Ψ(p) = p^a` (a ≥ 1) the indifference condition inverts in
//! closed form to
//!
//! ```text
//! θ*_amb = (1 − C̄)^{1/a} ≥ θ*,
//! ```
//!
//! so uncertainty widens the run region. The map from the unit-interval
//! threshold to an observable gas price is affine reporting glue supplied by
//! configuration, not a model claim.

use crate::error::{Error, Result};

/// Parameters of the congestion/ambiguity game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameParams {
    /// Baseline run cost φ₀ (utility units).
    pub base_cost: f64,
    /// Congestion coefficient γ (> 0).
    pub congestion_scale: f64,
    /// Congestion exponent λ (≥ 1).
    pub congestion_exponent: f64,
    /// Exponent `a` of the belief-distortion family Ψ(p) = p^a (a ≥ 1);
    /// a = 1 is ambiguity-neutral.
    pub ambiguity_exponent: f64,
}

impl Default for GameParams {
    fn default() -> Self {
        Self {
            base_cost: 0.1,
            congestion_scale: 0.3,
            congestion_exponent: 2.0,
            ambiguity_exponent: 2.0,
        }
    }
}

impl GameParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.congestion_scale > 0.0) {
            return Err(Error::config("congestion_scale must be > 0"));
        }
        if !(self.congestion_exponent >= 1.0) {
            return Err(Error::config("congestion_exponent must be >= 1"));
        }
        if !(self.ambiguity_exponent >= 1.0) {
            return Err(Error::config("ambiguity_exponent must be >= 1"));
        }
        if !self.base_cost.is_finite() || self.base_cost < 0.0 {
            return Err(Error::config("base_cost must be >= 0"));
        }
        let c_bar = self.base_cost + self.congestion_scale / (self.congestion_exponent + 1.0);
        if !(0.0..1.0).contains(&c_bar) {
            return Err(Error::config(format!(
                "average congestion cost {c_bar} leaves no meaningful threshold (need C̄ in [0,1))"
            )));
        }
        Ok(())
    }
}

/// Expected exit cost under Laplacian beliefs: `C̄ = φ₀ + γ/(λ+1)`.
pub fn avg_congestion(params: &GameParams) -> f64 {
    params.base_cost + params.congestion_scale / (params.congestion_exponent + 1.0)
}

/// Run threshold on fundamentals: `θ* = 1 − C̄`.
pub fn run_threshold(avg_cost: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&avg_cost) {
        return Err(Error::config(format!(
            "average congestion cost must lie in [0,1], got {avg_cost}"
        )));
    }
    Ok(1.0 - avg_cost)
}

/// Ambiguity-adjusted threshold `θ*_amb = (1 − C̄)^{1/a}`.
///
/// Equals the neutral threshold at a = 1 and increases towards 1 as a → ∞:
/// uncertainty amplifies the run.
pub fn ambiguous_threshold(avg_cost: f64, ambiguity_exponent: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&avg_cost) {
        return Err(Error::config(format!(
            "average congestion cost must lie in [0,1), got {avg_cost}"
        )));
    }
    if !(ambiguity_exponent >= 1.0) {
        return Err(Error::config(format!(
            "ambiguity exponent must be >= 1, got {ambiguity_exponent}"
        )));
    }
    Ok((1.0 - avg_cost).powf(1.0 / ambiguity_exponent))
}

/// Affine map from the unit-interval threshold to a gas price in Gwei:
/// `m·(1−θ) + b`. Reporting glue anchored by configuration.
pub fn gas_threshold(theta: f64, slope: f64, intercept: f64) -> f64 {
    slope * (1.0 - theta) + intercept
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn avg_congestion_hand_values() {
        let p = |phi0: f64, gamma: f64, lambda: f64| GameParams {
            base_cost: phi0,
            congestion_scale: gamma,
            congestion_exponent: lambda,
            ambiguity_exponent: 1.0,
        };
        assert_relative_eq!(
            avg_congestion(&p(0.0, 1e-12, 1.0)),
            0.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(avg_congestion(&p(0.1, 0.3, 2.0)), 0.2, epsilon = 1e-15);
        assert_relative_eq!(avg_congestion(&p(0.1, 0.3, 1.0)), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn run_threshold_hand_values() {
        assert_eq!(run_threshold(0.0).unwrap(), 1.0);
        assert_relative_eq!(run_threshold(0.2).unwrap(), 0.8, epsilon = 1e-15);
        assert_eq!(run_threshold(1.0).unwrap(), 0.0);
        assert!(run_threshold(1.2).is_err());
        assert!(run_threshold(-0.1).is_err());
    }

    #[test]
    fn ambiguity_widens_the_run_region() {
        assert_relative_eq!(
            ambiguous_threshold(0.2, 1.0).unwrap(),
            run_threshold(0.2).unwrap(),
            epsilon = 1e-15
        );
        assert_relative_eq!(
            ambiguous_threshold(0.2, 2.0).unwrap(),
            0.8f64.sqrt(),
            epsilon = 1e-15
        );
        assert_eq!(ambiguous_threshold(0.0, 7.0).unwrap(), 1.0);
        // strictly increasing in the ambiguity exponent
        let mut last = 0.0;
        for a in [1.0, 1.5, 2.0, 4.0] {
            let th = ambiguous_threshold(0.3, a).unwrap();
            assert!(th > last);
            last = th;
        }
        // θ*_amb → 1 as a → ∞
        assert!((ambiguous_threshold(0.9, 1e3).unwrap() - 1.0).abs() < 0.01);
    }

    #[test]
    fn gas_map_hand_values() {
        assert_eq!(gas_threshold(0.42, 0.0, 32.93), 32.93);
        assert_relative_eq!(gas_threshold(0.8, 100.0, 0.0), 20.0, epsilon = 1e-12);
        assert_eq!(gas_threshold(1.0, 55.0, 7.25), 7.25);
    }

    #[test]
    fn params_validation_guards_threshold_range() {
        assert!(GameParams::default().validate().is_ok());
        let bad = GameParams { base_cost: 1.2, ..GameParams::default() };
        assert!(bad.validate().is_err());
    }
}
