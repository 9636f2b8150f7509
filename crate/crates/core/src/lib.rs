//! Choose which base classes to pre-train on so that every novel class has
//! a few highly similar neighbours while the selection as a whole stays
//! diverse. The objective is a top-K similarity surrogate; engines cover
//! the monotone case (greedy) and the non-monotone case (random greedy,
//! continuous double greedy with pipage rounding).
//!
//! Each runnable file under `examples/` covers one capability; the
//! `baseselect` binary exposes the same pipeline on CSV/JSON files.

pub mod baselines;
pub mod cli;
pub mod continuous;
pub mod error;
pub mod greedy;
pub mod io;
pub mod problem;
pub mod regression;
pub mod run;
pub mod similarity;
pub mod state;
pub mod synth;
pub mod verify;

pub use error::{Error, Result};
