//! Scenario files, command dispatch and result emission for `tippinglab`.

pub mod config;
pub mod run;

pub use config::{bundled, ScenarioConfig, SCENARIOS};
pub use run::{error_code, run, RunOptions, RunOutcome};
