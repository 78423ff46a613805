//! Command line and HTTP front end for `tvlp-core`.

pub mod cli;
pub mod json;
pub mod service;
