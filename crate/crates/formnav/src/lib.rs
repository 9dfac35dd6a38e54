//! Command line, file formats and live backends for `formnav-core`.

pub mod backend;
pub mod cli;
pub mod config;
pub mod error;
pub mod http;
pub mod io;
pub mod llm;
pub mod pipeline;
pub mod schema;

pub use formnav_core as core;
