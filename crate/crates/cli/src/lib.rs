//! Command implementations behind the `crystal` binary.

pub mod commands;
pub mod config;
pub mod report;

pub use commands::{
    analyze, cmd_analyze, cmd_generate, cmd_roundtrip, roundtrip, CliError, CliResult,
    GeneratorArgs, GeneratorKindArg, EXIT_CRYSTAL, EXIT_ERROR, EXIT_MISMATCH, EXIT_NO_CRYSTAL,
};
pub use config::{OutputFormat, RunConfig};
pub use report::{strip_timings, Report};

/// Size the global rayon pool; `None` or `0` keeps the default.
pub fn init_threads(threads: Option<usize>) -> CliResult<()> {
    match threads {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError(e.to_string())),
        _ => Ok(()),
    }
}
