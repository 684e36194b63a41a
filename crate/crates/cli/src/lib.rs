//! Batch driver for nilspherical: configuration, verification suites and
//! reports.

pub mod checks;
pub mod commands;
pub mod config;
pub mod report;

pub use checks::{resolve_suite, run_check, CheckResult, Context, Status, CHECKS};
pub use commands::{main_with_args, verify, EXIT_CONFIG, EXIT_FAIL, EXIT_PASS};
pub use config::{parse_config, parse_config_str, ConfigError, RunConfig};
pub use report::SuiteReport;
