//! Config parsing, subcommand runners and CSV/SVG output for the `twoscale` binary.

pub mod commands;
pub mod config;
pub mod report;
pub mod svg;
