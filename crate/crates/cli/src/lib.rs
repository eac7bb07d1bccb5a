//! Library side of the `gencrit` command: problem files, reports, commands
//! and the built-in fixture suite. `main.rs` only parses arguments and maps
//! [`report::Status`] onto the exit code.

pub mod commands;
pub mod problem;
pub mod report;
pub mod suite;
