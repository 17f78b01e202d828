//! File formats, checkpointing, and orchestration glue for the `cycler`
//! command-line tool. All algorithms live in `cycler-core`; this crate only
//! moves data in and out of files.

pub mod checkpoint;
pub mod formats;
pub mod run;
