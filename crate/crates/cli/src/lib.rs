//! Command-line front end for `fairfluid`: instance files, reproduction
//! suites for the worked instances, and report export.

pub mod error;
pub mod instance;
pub mod policy_spec;
pub mod report;
pub mod repro;

pub use error::{CliError, Result};
pub use instance::parse_instance_file;
pub use policy_spec::PolicySpec;
pub use report::{export, Format, Provenance, Quantity, ReproReport};
pub use repro::{run_repro, ReproParams};
