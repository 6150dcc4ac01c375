//! Configuration, commands and exit codes of the `sosdecomp` binary.

pub mod commands;
pub mod config;
pub mod error;
