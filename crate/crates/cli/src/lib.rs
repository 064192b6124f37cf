//! Batch front end: problem specs in TOML, one subcommand per check family,
//! JSON and CSV reports.

pub mod report;
pub mod run;
pub mod spec;

pub use report::{Check, RunReport};
pub use run::{run, Command, UsageError};
pub use spec::{emit_spec, parse_spec, parse_spec_str, ProblemSpec, SpecErrors};
