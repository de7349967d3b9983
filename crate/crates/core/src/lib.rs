//! Structural simulation and econometric estimation of "liquidity recycling":
//! how on-chain credit events (protocol hacks) push stablecoin redemptions
//! into traditional safe assets and move commercial-paper spreads.
//!
//! The crate has three layers:
//!
//! * **Structural theory** — [`structmodel`] (the three-sector transmission
//!   model), [`ambiguity`] (robust portfolio choice under jump ambiguity,
//!   which microfounds the amplification factor η), and [`globalgame`]
//!   (run thresholds under congestion and ambiguity).
//! * **Data** — [`ingest`] (CSV parsing, calendar alignment, cleaning rules)
//!   and [`datagen`] (calibrated synthetic catalogs/panels plus the
//!   estimation-ready stacked, monthly, and DiD panels).
//! * **Estimation** — [`econ`]: fixed-effects OLS with robust/clustered/HAC
//!   inference, stacked event studies, Hansen threshold regression with
//!   bootstrap, granular-IV 2SLS, local projections, covariate-adaptive
//!   placebo inference, gradient-boosted threshold detection, and the
//!   structural η recovery.

pub mod ambiguity;
pub mod calendar;
pub mod datagen;
pub mod econ;
pub mod error;
pub mod globalgame;
pub mod ingest;
pub mod structmodel;
pub mod tables;

pub use calendar::TradingCalendar;
pub use error::{Error, Result};
pub use tables::{
    EventCatalog, EventRecord, MarketPanel, MonthlyPanel, MonthlyRow, StackedPanel, StackedRow,
    YearMonth,
};
