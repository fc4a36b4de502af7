//! `compacton-lab`: configuration, experiment recipes and artifact writers for the
//! K(m, n) simulator.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{execute, plan, Command, Job, Outcome};
pub use config::Config;
pub use error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;
