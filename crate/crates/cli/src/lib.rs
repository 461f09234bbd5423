//! File formats, experiment configuration, and report emission around
//! `vqsid-core`, plus the implementations of the CLI subcommands.

pub mod commands;
pub mod config;
pub mod corpus;
pub mod models;
pub mod output;
pub mod wav;
