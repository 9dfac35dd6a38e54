//! Core engine for modelling web sites as screen transition graphs and web forms as state
//! graphs, and for generating, executing and scoring navigation scenarios and form-filling
//! test scripts against them.
//!
//! The crate is `no_std` with `alloc`. File IO, HTTP and the command line live in the
//! companion `formnav` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod constraints;
pub mod browser;
pub mod dom;
pub mod eval;
pub mod explore;
pub mod llm;
pub mod bench;
pub mod scenario;
pub mod script;
pub mod site;
