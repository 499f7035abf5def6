//! Library half of the `a2w` command-line tool: weight specs, subcommands
//! and the randomized verification suites.

pub mod commands;
pub mod spec;
pub mod verify;
