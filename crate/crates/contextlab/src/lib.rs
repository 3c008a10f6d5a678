//! Command-line front end and file formats for the `contextlab-core`
//! analysis library: JSON/CSV artifact construction, config-file merging,
//! the built-in ray realization data, and per-command reference checks.

pub mod cli;
pub mod commands;
pub mod data;
pub mod io;
pub mod selftest;
