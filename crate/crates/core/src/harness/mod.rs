//! Scenarios, trial runs, reports, plots and the acceptance suite.

pub mod brute;
pub mod instances;
pub mod plot;
pub mod report;
pub mod run;
pub mod scenario;
pub mod verify;

pub use plot::{emit_plot, emit_scenario_plot};
pub use report::{TrialRecord, TrialReport};
pub use run::run_scenario;
pub use scenario::{builtin, Scenario, BUILTIN_NAMES};
pub use verify::{verify, VerifyReport, ALL_CRITERIA};
