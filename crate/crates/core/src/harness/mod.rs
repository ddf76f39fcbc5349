//! Config files, experiment orchestration, output files, sweeps and the
//! property suites driven by the CLI.

pub mod checks;
pub mod config;
pub mod experiment;
pub mod sweep;

pub use checks::{run_suite, CheckLine, Suite};
pub use config::{ExperimentConfig, RawConfig};
pub use experiment::{prepare, run_config_file, write_trace, Outcome, Prepared, TRACE_HEADER};
pub use sweep::{sweep, write_sweep, SweepKey, SweepRow};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Process exit code for a failed run.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Diverged { .. } => EXIT_DIVERGED,
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}
