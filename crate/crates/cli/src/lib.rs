//! Command-line layer: physical presets, SI → dimensionless conversion,
//! pipeline orchestration, and deterministic result emission.

pub mod commands;
pub mod config;
pub mod output;
pub mod pipeline;
pub mod preset;
pub mod threads;
