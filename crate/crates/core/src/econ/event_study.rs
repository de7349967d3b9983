//! Stacked event study: pooled event windows with event fixed effects and
//! event-time dummies, the baseline day omitted.
//!
//! The regression is
//!
//! ```text
//! y_{i,k} = α_i + Σ_{k≠baseline} δ_k·1{rel_day=k} + controls'β + ε_{i,k}
//! ```
//!
//! clustered by event (falling back to classical covariance when only one
//! event is present, where clustering is undefined). The joint pre-trend
//! test pools every dummy strictly before the baseline day.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::tables::StackedPanel;

use super::regress::{ols, Design, RegressionResult, SeFlavor};

/// Options for [`event_study`].
#[derive(Debug, Clone)]
pub struct EventStudyOptions {
    /// Omitted event-time day; its effect is normalized to zero.
    pub baseline: i32,
    /// Regress the day-over-day change of the outcome instead of its level.
    pub difference_outcome: bool,
    /// Control columns to include; `None` uses every control on the panel.
    pub controls: Option<Vec<String>>,
}

impl Default for EventStudyOptions {
    fn default() -> Self {
        Self { baseline: -1, difference_outcome: false, controls: None }
    }
}

/// Canonical coefficient name for the event-time dummy at relative day `k`.
pub fn rel_day_name(k: i32) -> String {
    format!("k={k}")
}

/// Run the stacked event-study regression and attach the joint pre-trend
/// test over all days strictly before the baseline.
pub fn event_study(stacked: &StackedPanel, opts: &EventStudyOptions) -> Result<RegressionResult> {
    let (design, rel_days) = build_design(stacked, opts)?;
    let n_events = stacked.n_events();
    let se = if n_events >= 2 { SeFlavor::Cluster } else { SeFlavor::Classical };
    let mut result = ols(&design, se)?;

    // Joint pre-trend F over k < baseline. Skipped for a saturated
    // single-event design, where the covariance carries no information.
    let pre: Vec<usize> = rel_days
        .iter()
        .filter(|&&k| k < opts.baseline)
        .map(|&k| result.index_of(&rel_day_name(k)))
        .collect::<Result<_>>()?;
    if !pre.is_empty() && n_events >= 2 {
        result.wald_joint("pre-trend", &pre)?;
    }
    Ok(result)
}

/// Shared design construction, also used by the placebo Monte Carlo where
/// only coefficients are needed.
pub(super) fn build_design(
    stacked: &StackedPanel,
    opts: &EventStudyOptions,
) -> Result<(Design, Vec<i32>)> {
    if stacked.rows.is_empty() {
        return Err(Error::estimation("event study needs a non-empty stacked panel"));
    }
    let (w_lo, w_hi) = stacked.window;
    if opts.baseline < w_lo || opts.baseline > w_hi {
        return Err(Error::estimation(format!(
            "baseline day {} lies outside the window [{w_lo}, {w_hi}]",
            opts.baseline
        )));
    }

    // Window consistency and per-event baseline coverage.
    let mut rel_days: BTreeSet<i32> = BTreeSet::new();
    let mut have_baseline: BTreeSet<usize> = BTreeSet::new();
    let mut events: BTreeSet<usize> = BTreeSet::new();
    for row in &stacked.rows {
        if row.rel_day < w_lo || row.rel_day > w_hi {
            return Err(Error::estimation(format!(
                "relative day {} on event {} lies outside the window [{w_lo}, {w_hi}]",
                row.rel_day, row.event
            )));
        }
        rel_days.insert(row.rel_day);
        events.insert(row.event);
        if row.rel_day == opts.baseline {
            have_baseline.insert(row.event);
        }
    }
    for &e in &events {
        if !have_baseline.contains(&e) {
            return Err(Error::estimation(format!(
                "event {e} is missing its baseline day k={}",
                opts.baseline
            )));
        }
    }

    // Control selection.
    let control_idx: Vec<(String, usize)> = match &opts.controls {
        None => stacked
            .control_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect(),
        Some(wanted) => wanted
            .iter()
            .map(|name| {
                stacked
                    .control_names
                    .iter()
                    .position(|n| n == name)
                    .map(|i| (name.clone(), i))
                    .ok_or_else(|| {
                        Error::estimation(format!("control column '{name}' not on the stacked panel"))
                    })
            })
            .collect::<Result<_>>()?,
    };

    let outcome: Vec<f64> = stacked
        .rows
        .iter()
        .map(|r| if opts.difference_outcome { r.outcome - r.outcome_prev } else { r.outcome })
        .collect();

    let mut design = Design::new(outcome);
    let dummy_days: Vec<i32> = rel_days.iter().copied().filter(|&k| k != opts.baseline).collect();
    for &k in &dummy_days {
        let col: Vec<f64> = stacked
            .rows
            .iter()
            .map(|r| if r.rel_day == k { 1.0 } else { 0.0 })
            .collect();
        design.add_column(rel_day_name(k), col)?;
    }
    for (name, ci) in &control_idx {
        let col: Vec<f64> = stacked.rows.iter().map(|r| r.controls[*ci]).collect();
        design.add_column(name.clone(), col)?;
    }
    let event_keys: Vec<usize> = stacked.rows.iter().map(|r| r.event).collect();
    design.add_fixed_effect("event", &event_keys)?;
    design.set_clusters("event", &event_keys)?;
    Ok((design, dummy_days))
}

/// One row of the event-time effect table.
#[derive(Debug, Clone, Copy)]
pub struct EventTimeEffect {
    pub rel_day: i32,
    pub estimate: f64,
    pub se: f64,
    pub t_stat: f64,
    pub p_value: f64,
    pub ci_95: (f64, f64),
    /// True on the omitted baseline day, whose effect is zero by
    /// normalization.
    pub baseline: bool,
}

/// Extract the per-day effect table from an event-study result, including a
/// zero row for the baseline day.
pub fn event_time_effects(
    result: &RegressionResult,
    window: (i32, i32),
    baseline: i32,
) -> Result<Vec<EventTimeEffect>> {
    let mut out = Vec::new();
    for k in window.0..=window.1 {
        if k == baseline {
            out.push(EventTimeEffect {
                rel_day: k,
                estimate: 0.0,
                se: 0.0,
                t_stat: 0.0,
                p_value: 1.0,
                ci_95: (0.0, 0.0),
                baseline: true,
            });
            continue;
        }
        let i = result.index_of(&rel_day_name(k))?;
        out.push(EventTimeEffect {
            rel_day: k,
            estimate: result.coef[i],
            se: result.se(i),
            t_stat: result.t_stat(i),
            p_value: result.p_value(i),
            ci_95: result.ci95(i),
            baseline: false,
        });
    }
    Ok(out)
}
