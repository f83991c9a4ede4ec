//! Command-line companion to [`cvci_core`]: CSV ingestion, a
//! reproducible result-document format, a bounded worker pool for
//! replicate fan-out, and the four subcommands (`estimate`,
//! `simulate`, `bootstrap`, `sweep`).

pub mod config;
pub mod csvio;
pub mod document;
pub mod error;
pub mod runner;
pub mod threads;
