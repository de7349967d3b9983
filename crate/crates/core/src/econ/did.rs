//! Dynamic difference-in-differences on an asset × day panel: treated and
//! control assets around the same events, with asset and calendar-date
//! fixed effects and event-time × treated interaction dummies.
//!
//! ```text
//! y_{a,t} = α_a + τ_t + Σ_{k≠baseline} β_k·1{rel_day=k}·Treat_a + ε_{a,t}
//! ```
//!
//! The date effects absorb anything common to all assets on a day — the
//! macro environment, common shocks — so β_k is identified purely from the
//! treated-vs-control gap. Clustered by event when two or more events are
//! stacked.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::tables::StackedPanel;

use super::event_study::rel_day_name;
use super::regress::{ols, Design, RegressionResult, SeFlavor};

/// Canonical coefficient name for the treated × event-time dummy at `k`.
pub fn treat_day_name(k: i32) -> String {
    format!("treat:{}", rel_day_name(k))
}

/// Run the difference-in-differences event study on a panel built with
/// asset rows (see the DiD panel builder).
pub fn did_event_study(stacked: &StackedPanel, baseline: i32) -> Result<RegressionResult> {
    if stacked.rows.is_empty() {
        return Err(Error::estimation("difference-in-differences needs a non-empty panel"));
    }
    let (w_lo, w_hi) = stacked.window;
    if baseline < w_lo || baseline > w_hi {
        return Err(Error::estimation(format!(
            "baseline day {baseline} lies outside the window [{w_lo}, {w_hi}]"
        )));
    }

    let mut assets: BTreeSet<usize> = BTreeSet::new();
    let (mut n_treated, mut n_control) = (0usize, 0usize);
    let mut rel_days: BTreeSet<i32> = BTreeSet::new();
    for row in &stacked.rows {
        let a = row.asset.ok_or_else(|| {
            Error::estimation("difference-in-differences rows must carry an asset id")
        })?;
        assets.insert(a);
        if row.treated {
            n_treated += 1;
        } else {
            n_control += 1;
        }
        rel_days.insert(row.rel_day);
    }
    if assets.len() < 2 {
        return Err(Error::estimation("difference-in-differences needs >= 2 assets"));
    }
    if n_treated == 0 || n_control == 0 {
        return Err(Error::estimation(
            "no within variation: need both treated and control rows",
        ));
    }

    let outcome: Vec<f64> = stacked.rows.iter().map(|r| r.outcome).collect();
    let mut design = Design::new(outcome);
    for &k in rel_days.iter().filter(|&&k| k != baseline) {
        let col: Vec<f64> = stacked
            .rows
            .iter()
            .map(|r| if r.rel_day == k && r.treated { 1.0 } else { 0.0 })
            .collect();
        design.add_column(treat_day_name(k), col)?;
    }
    for (i, name) in stacked.control_names.iter().enumerate() {
        let col: Vec<f64> = stacked.rows.iter().map(|r| r.controls[i]).collect();
        design.add_column(name.clone(), col)?;
    }
    let asset_keys: Vec<usize> = stacked.rows.iter().map(|r| r.asset.unwrap_or(0)).collect();
    let date_keys: Vec<chrono::NaiveDate> = stacked.rows.iter().map(|r| r.date).collect();
    let event_keys: Vec<usize> = stacked.rows.iter().map(|r| r.event).collect();
    design.add_fixed_effect("asset", &asset_keys)?;
    design.add_fixed_effect("date", &date_keys)?;
    design.set_clusters("event", &event_keys)?;

    let flavor = if stacked.n_events() >= 2 { SeFlavor::Cluster } else { SeFlavor::Classical };
    ols(&design, flavor)
}
