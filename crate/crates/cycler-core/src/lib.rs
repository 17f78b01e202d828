//! Core algorithms for LTL-constrained policy optimization with accepting-cycle
//! reward shaping.
//!
//! The crate is `no_std` + `alloc`: everything here is pure computation over
//! owned values, so it can be embedded anywhere. File formats, JSON, and the
//! command-line front end live in the companion `cycler` crate.
//!
//! Module map:
//!
//! * [`ltl`] — formula trees, parsing, Boolean and quantitative (robustness)
//!   evaluation over states and finite traces.
//! * [`automaton`] — limit-deterministic Büchi automata (LDBA), the `ldba v1`
//!   text format, structural validation, and letter/jump stepping.
//! * [`cycles`] — enumeration of minimal accepting initial paths and minimal
//!   accepting cycles, plus a brute-force oracle for testing.
//! * [`shaping`] — cycle-based LTL reward shaping in discrete and quantitative
//!   modes, eventual discounting, and the Lagrange-weight bound.
//! * [`product`] — environment × automaton synchronization and rollouts.
//! * [`env`] — the FlatWorld continuous benchmark and the GridLab tabular
//!   environment used by the exact oracle.
//! * [`learn`] — a small hand-rolled policy-gradient trainer (clipped ratio,
//!   entropy bonus, value baseline) with a finite-difference gradient check.
//! * [`exact`] — exhaustive policy enumeration on deterministic products with
//!   closed-form lasso values, used to check the dual-objective guarantee.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod automaton;
pub mod cycles;
pub mod env;
pub mod exact;
pub mod learn;
pub mod ltl;
pub(crate) mod math;
pub mod product;
pub mod shaping;

pub use rand_chacha::ChaCha8Rng;
