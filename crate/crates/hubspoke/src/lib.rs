//! Registry, evidence ledger, workflows, acceptance runner and the `hs` command line.

pub mod acceptance;
pub mod cli;
pub mod defs;
pub mod error;
pub mod ledger;
pub mod registry;
pub mod workflow;

pub use hubspoke_core as core;

pub use error::{Kind, PlatformError, Result};
pub use ledger::{Clock, FixedClock, Ledger, LedgerEntry, LedgerVerdict, SystemClock, WorkflowKind};
pub use registry::{Registry, Resolver};
