//! Configuration, orchestration and artifact emission for the `gchlab`
//! experiment runner.

pub mod config;
pub mod run;
pub mod svg;
