//! On-line learning of coupled nonlinear vehicle dynamics.
//!
//! The crate couples an incremental ε-support-vector-regression learner with
//! strategies that keep its support buffer bounded on a data stream:
//!
//! * [`kernel`] — squared-exponential kernel and multivariate kernel density
//!   estimation over sample buffers.
//! * [`svr`] — the ε-SVR dual problem solved by sequential minimal
//!   optimization with warm starting.
//! * [`learner`] — the five-node on-line pipeline: an inclusion gate, the
//!   sample collector, incremental training, IQR outlier rejection, and
//!   density-aware forgetting (plus a FIFO pruning baseline).
//! * [`dynamics`] — a 3-DOF horizontal-plane AUV simulator used as the
//!   ground-truth generator with three switchable physical configurations.
//! * [`eval`] — R² scoring, stratified splits, offline baselines, and the
//!   on-line evaluation protocol with configuration switches.
//!
//! The crate is `no_std`-compatible (with `alloc`); disable the default
//! `std` feature for embedded targets. File formats, persistence, and the
//! command-line harness live in the companion `auvlearn` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod dynamics;
pub mod error;
pub mod eval;
mod gram;
pub mod kernel;
pub mod learner;
mod math;
pub mod svr;

pub use error::{Error, Result};
