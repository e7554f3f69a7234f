//! Command line harness for `cortexsim-core`: scenario scripts, binary
//! snapshots, trace files, rule files, sandglass reports and a REPL.

pub mod cli;
pub mod error;
pub mod repl;
pub mod rules;
pub mod scenario;
pub mod snapshot;
pub mod topo;
pub mod trace;

pub use error::{HarnessError, Result};
pub use scenario::{parse_scenario, Session};
