//! Configuration, initial data, the ε study and the invariant suite.

pub mod check;
pub mod config;
pub mod initial;
pub mod run;
pub mod sweep;

pub use check::{run_check, CheckItem, CheckReport};
pub use config::{IcKind, RunConfig, CONFIG_KEYS};
pub use initial::{make_initial_data, InitialReport};
pub use run::{run_picard, run_single, RunOutcome, SnapshotWriter, Solver};
pub use sweep::{run_sweep, SweepMember, SweepOutcome};
