//! Regulation capacity estimation for an electric-vehicle aggregator.
//!
//! An aggregator coordinating autonomous EVs is modeled as a three-stage
//! infinite-server queueing network (regulation-down, regulation-up-and-down,
//! and regulation-up queues). The crate provides:
//!
//! - [`analytic`]: closed-form steady-state expected counts and the
//!   regulation-up/-down capacities of the network.
//! - [`smart_charge`]: the charging mechanism that shapes per-queue service
//!   times into exponential distributions under stay and charging-rate
//!   constraints, recycling unadopted draws through FIFO reservoirs.
//! - [`des`]: a discrete-event simulator of the full aggregator.
//! - [`stats`]: warm-up truncation, steady-state means, a
//!   Kolmogorov-Smirnov exponential goodness-of-fit test, and replication
//!   aggregation.
//! - [`scenario`]: the scenario file format and EV generation rules.
//! - [`experiment`]: replication batches, service-rate sweeps, and CSV
//!   output.
//!
//! See the `examples/` directory for one runnable example per capability,
//! and the `v2gcap` binary for the command-line front end.

pub mod analytic;
pub mod des;
pub mod distributions;
pub mod error;
pub mod experiment;
pub mod scenario;
pub mod smart_charge;
pub mod stats;

pub use error::{Error, Result};
