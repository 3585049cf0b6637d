//! Library side of the `dunkl` command: option parsing, config merging and
//! the subcommands themselves.

pub mod commands;
pub mod config;
