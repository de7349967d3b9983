//! Monthly state dependence: does the event-month spread response scale
//! with how exposed prime money funds are to commercial paper?
//!
//! Level specification (per month m):
//!
//! ```text
//! Spread_m = α + β·HackMonth_m + φ·pcs_z_m + θ·(HackMonth_m × pcs_z_m) + controls'δ + ε_m
//! ```
//!
//! The change specification replaces the outcome with ΔSpread_m and drops
//! months without a defined change. Inference is Newey–West with one
//! monthly lag.

use crate::error::{Error, Result};
use crate::tables::MonthlyPanel;

use super::regress::{ols, Design, RegressionResult, SeFlavor};

/// Outcome definition for [`state_dependence_monthly`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonthlySpec {
    /// Spread level in bps.
    Level,
    /// Month-over-month spread change in bps.
    Change,
}

/// Run the monthly interaction regression.
pub fn state_dependence_monthly(
    monthly: &MonthlyPanel,
    spec: MonthlySpec,
) -> Result<RegressionResult> {
    if monthly.prime_share_degenerate {
        return Err(Error::estimation(
            "prime CP share is constant: the interaction term drops and the state test is undefined",
        ));
    }

    // Rows usable under the requested outcome, kept in month order.
    let rows: Vec<(&crate::tables::MonthlyRow, f64)> = monthly
        .rows
        .iter()
        .filter_map(|r| match spec {
            MonthlySpec::Level => Some((r, r.spread_bps)),
            MonthlySpec::Change => r.spread_change_bps.map(|c| (r, c)),
        })
        .collect();
    if rows.len() < 12 {
        return Err(Error::estimation(format!(
            "state-dependence regression needs >= 12 months, got {}",
            rows.len()
        )));
    }
    let n_hack = rows.iter().filter(|(r, _)| r.hack_month).count();
    if n_hack == 0 {
        return Err(Error::estimation(
            "no hack months in the sample: the interaction term is degenerate",
        ));
    }
    let z_sd = {
        let zs: Vec<f64> = rows.iter().map(|(r, _)| r.prime_share_z).collect();
        let mean = zs.iter().sum::<f64>() / zs.len() as f64;
        (zs.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / zs.len() as f64).sqrt()
    };
    if z_sd == 0.0 {
        return Err(Error::estimation(
            "prime CP share is constant: the interaction term drops and the state test is undefined",
        ));
    }

    let y: Vec<f64> = rows.iter().map(|(_, v)| *v).collect();
    let mut design = Design::new(y);
    design.add_intercept()?;
    design.add_column(
        "hack_month",
        rows.iter().map(|(r, _)| f64::from(u8::from(r.hack_month))).collect::<Vec<_>>(),
    )?;
    design.add_column(
        "prime_share_z",
        rows.iter().map(|(r, _)| r.prime_share_z).collect::<Vec<_>>(),
    )?;
    design.add_column(
        "hack_x_prime_share_z",
        rows.iter()
            .map(|(r, _)| f64::from(u8::from(r.hack_month)) * r.prime_share_z)
            .collect::<Vec<_>>(),
    )?;
    for (i, name) in monthly.control_names.iter().enumerate() {
        design.add_column(
            name.clone(),
            rows.iter().map(|(r, _)| r.controls[i]).collect::<Vec<_>>(),
        )?;
    }
    ols(&design, SeFlavor::NeweyWest { lag: 1 })
}
