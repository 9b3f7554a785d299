//! Driver library behind the `cns` binary: configuration parsing, snapshot
//! i/o, CSV emission, and the three subcommand entry points (`run`,
//! `verify`, `expand`). Split from the binary so integration tests can reuse
//! the exact parsing and snapshot-decoding paths the executable runs.

pub mod config;
pub mod csvout;
pub mod errors;
pub mod expand;
pub mod run;
pub mod snapshot;
pub mod verify;
