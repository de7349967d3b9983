//! Estimation engine: panel regressions with fixed effects and robust
//! inference, threshold regression with bootstrap, granular-IV two-stage
//! least squares, local projections, event studies, difference-in-
//! differences, placebo Monte Carlo, monthly state-dependence tests,
//! gradient-boosted threshold detection, and structural elasticity
//! recovery.
//!
//! Everything here is pure given its inputs and seed. Bootstrap and Monte
//! Carlo draws run in parallel with one RNG stream per replicate and are
//! reduced in replicate order, so results do not depend on scheduling.

mod did;
mod event_study;
mod gbr;
mod giv;
mod monthly;
mod placebo;
mod projections;
mod recovery;
mod regress;
mod threshold;

pub use did::did_event_study;
pub use event_study::{event_study, event_time_effects, rel_day_name, EventStudyOptions, EventTimeEffect};
pub use gbr::{elbow_detect, fit_gbr, partial_dependence, GbrConfig, GbrModel};
pub use giv::{build_giv, protocol_shock, tsls, GivDay, GivDayDetail, GivSeries, TslsConfig, TslsResult};
pub use monthly::{state_dependence_monthly, MonthlySpec};
pub use placebo::{placebo, PlaceboOptions, PlaceboResult};
pub use projections::{local_projections, LocalProjection};
pub use recovery::{eta_recovery, EtaRow};
pub use regress::{
    newey_west, ols, ols_ssr, residualize, welch_diff_means, Design, FixedEffect, JointTest,
    RegressionResult, SeFlavor, WelchTest,
};
pub use threshold::{threshold_regression, RegimeCoef, ThresholdOptions, ThresholdResult};
