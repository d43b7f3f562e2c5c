//! Command-line front end over `buildings-core`: JSON run reports, DOT
//! export and the acceptance suite.

pub mod checks;
pub mod cli;
pub mod commands;
pub mod dot;
pub mod report;
pub mod suite;
