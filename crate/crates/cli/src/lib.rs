//! Command-line front end for `safechain`: TOML experiment configs, CSV
//! trajectories and SVG plots.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod svg;

pub use error::CliError;
