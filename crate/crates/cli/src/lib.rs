//! Driver for the magnetic double-well lab: configuration, per-`h`
//! pipelines, CSV reports.

pub mod commands;
pub mod config;
pub mod pipeline;
pub mod report;
