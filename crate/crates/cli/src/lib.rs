//! Command-line driver plumbing for the soliton profile library: the JSON
//! configuration document, the report schema, and the mode drivers shared
//! between the binary and its tests.

pub mod config;
pub mod report;
pub mod run;

pub use config::FileConfig;
pub use report::{QuotientReport, RunReport, SweepReport};
