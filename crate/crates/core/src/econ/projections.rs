//! Local projections: one regression per horizon, each tracing the response
//! of the outcome to a contemporaneous shock.
//!
//! For horizon `h` the regression rows are days `t` with full data:
//!
//! ```text
//! y_{t+h} − y_{t−1} = α_h + β_h·shock_t + controls_{t−1}'δ_h + ε_t
//! ```
//!
//! Controls enter with one lag so they are predetermined relative to the
//! shock. Inference is Newey–West with bandwidth `h + 1`: overlapping
//! horizons mechanically induce an MA(h) error.

use crate::error::{Error, Result};

use super::regress::{ols, Design, RegressionResult, SeFlavor};

/// One horizon's estimates; the shock response is the `"shock"` coefficient.
#[derive(Debug, Clone)]
pub struct LocalProjection {
    pub horizon: usize,
    pub result: RegressionResult,
}

/// Estimate impulse responses at horizons `0..=max_horizon`.
pub fn local_projections(
    outcome: &[f64],
    shock: &[f64],
    controls: &[(String, Vec<f64>)],
    max_horizon: usize,
) -> Result<Vec<LocalProjection>> {
    let n = outcome.len();
    if shock.len() != n {
        return Err(Error::estimation(format!(
            "shock series has {} days, outcome has {n}",
            shock.len()
        )));
    }
    for (name, c) in controls {
        if c.len() != n {
            return Err(Error::estimation(format!(
                "control '{name}' has {} days, outcome has {n}",
                c.len()
            )));
        }
    }
    // Need at least rows t ∈ [1, n−1−h]; demand a handful for the longest
    // horizon so the per-horizon regression is not vacuous.
    let k = 2 + controls.len();
    if max_horizon + k + 2 >= n {
        return Err(Error::estimation(format!(
            "horizon {max_horizon} leaves too few of the {n} observations"
        )));
    }

    let mut out = Vec::with_capacity(max_horizon + 1);
    for h in 0..=max_horizon {
        let rows: Vec<usize> = (1..n - h).collect();
        let y: Vec<f64> = rows.iter().map(|&t| outcome[t + h] - outcome[t - 1]).collect();
        let mut design = Design::new(y);
        design.add_intercept()?;
        design.add_column("shock", rows.iter().map(|&t| shock[t]).collect::<Vec<_>>())?;
        for (name, c) in controls {
            design.add_column(name.clone(), rows.iter().map(|&t| c[t - 1]).collect::<Vec<_>>())?;
        }
        let result = ols(&design, SeFlavor::NeweyWest { lag: h + 1 })?;
        out.push(LocalProjection { horizon: h, result });
    }
    Ok(out)
}
