//! Multi-task representation learning laboratory.
//!
//! The crate is organised around the `(n, m)`-sample setting: `n` tasks drawn
//! from an environment, each observed `m` times. It provides
//!
//! * [`nnet`]: dense sigmoid / linear networks and ±1 binary networks with
//!   exact gradients,
//! * [`optim`]: a Polak–Ribière conjugate-gradient minimiser with exact line
//!   search, weight clipping and restart-on-plateau,
//! * [`envs`]: enumerable toy environments and `(n, m)` sample generation,
//! * [`replearn`]: shared-trunk multi-task training and exact error evaluation,
//! * [`binexp`]: exhaustive search over binary representations,
//! * [`cdm`]: canonical distortion measures and distortion-optimal quantization,
//! * [`directrep`]: representation learning by metric matching,
//! * [`bounds`]: closed-form sample-complexity calculators.
//!
//! Data-parallel loops (grid sweeps, candidate scans, Monte-Carlo batches) run
//! on rayon when the `parallel` feature is enabled (the default) and fall back
//! to plain iterators otherwise. Results are identical either way.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod binexp;
pub mod bounds;
pub mod cdm;
pub mod directrep;
pub mod envs;
mod error;
pub mod nnet;
pub mod optim;
pub mod par;
pub mod replearn;
pub mod rng;

pub use error::{Error, Result};
