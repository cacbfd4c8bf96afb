//! Persistence, export and orchestration around `ngc-core`: an on-disk
//! evaluation cache, run configurations, JSON/CSV output and pair-search tables.

pub mod budget;
pub mod cache;
pub mod config;
pub mod export;
pub mod run;

/// Process exit codes of the `ngc` binary.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const INPUT: i32 = 2;
    pub const ASSERTION: i32 = 3;
    pub const BUDGET: i32 = 4;
}
