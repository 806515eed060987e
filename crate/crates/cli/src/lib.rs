//! Scenario runner for `foliate-core`: parses scenario files, runs the
//! analysis stages and writes versioned reports.

pub mod pipeline;
pub mod report;
pub mod scenario;

pub use pipeline::run_scenario;
pub use report::{canonical_json, emit_report, Format, Report, Verdict};
pub use scenario::{parse_scenario, ConfigError, Scenario, Stage};
