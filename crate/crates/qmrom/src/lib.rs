//! File formats, reference caching and the `qmrom` command line around
//! [`qmrom_core`].

pub mod cache;
pub mod cli;
pub mod commands;
pub mod config;
pub mod formats;
pub mod metadata;

pub use cli::main_with;
