//! File formats, configuration and the `pgs` command line on top of
//! `pgs-core`.

pub mod artifacts;
pub mod config;
pub mod run;
