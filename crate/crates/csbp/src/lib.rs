//! Simulation and validation toolkit for continuous-state branching processes
//! (CSBPs), the flows of subordinators that represent them, and the
//! consecutive coalescents that describe their genealogies.
//!
//! The crate is organized around one object, the branching mechanism
//! `Psi(q) = (sigma^2/2) q^2 - beta q + int (e^{-qx} - 1 + qx 1_{x<=1}) pi(dx)`,
//! and three views of the process it generates:
//!
//! * [`mechanism`]: the mechanism itself, its cumulant `v_t` (the Laplace
//!   exponent of the population at time t), criticality and boundary behavior.
//! * [`flow`], [`feller`]: pathwise representations. The population at time t
//!   started from every initial mass simultaneously is a subordinator in the
//!   initial mass; its right inverse maps individuals to ancestors.
//! * [`partition`], [`poissonbox`], [`coalescent`]: genealogies of individuals
//!   sampled by a Poisson process, which are consecutive partitions of the
//!   integers coalescing by merges of adjacent blocks.
//!
//! Every simulated law ships with an independent check: a closed form, an
//! exact finite-state oracle, or a second sampling route. [`harness`] holds
//! the statistical machinery and the named validation experiments.

pub mod coalescent;
pub mod error;
pub mod feller;
pub mod flow;
pub mod harness;
pub mod mechanism;
mod numerics;
pub mod partition;
pub mod poissonbox;

pub use error::{Error, Result};
