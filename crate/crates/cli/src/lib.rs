//! Batch front-end over `ttlab-core`: every subcommand resolves to a
//! [`config::RunConfig`], which is saved next to the outputs with a manifest.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

pub use commands::execute;
pub use config::RunConfig;
pub use error::CliError;

/// Resolve a config from the command line and run it, returning stdout text.
pub fn run(cfg: &RunConfig) -> Result<String, CliError> {
    if cfg.global.threads > 0 {
        // Fails only if a pool already exists, which keeps the first size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.global.threads).build_global();
    }
    let (outputs, manifest) = execute(cfg)?;
    log::info!("{} files written to {}", manifest.files.len(), cfg.global.out.display());
    Ok(outputs.stdout)
}
