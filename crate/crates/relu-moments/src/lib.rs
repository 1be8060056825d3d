//! Moments of ReLU networks at i.i.d. Gaussian initialization.
//!
//! A feed-forward ReLU network with widths `(n_0, ..., n_L)` and weight
//! entries drawn i.i.d. from `N(0, beta_l^2)` has closed-form expressions for
//! the mean and second moment of every hidden activation and for the variance
//! of every backward derivative. Those expressions are what make the classic
//! fan-in (`beta_k^2 = 2/n_{k-1}`) and fan-out (`beta_k^2 = 2/n_k`)
//! initialization rules work.
//!
//! This crate has two halves that deliberately know nothing about each other's
//! internals:
//!
//! * a **predictor** ([`moments`], backed by [`combinatorics`]) that evaluates
//!   the closed forms and the bounds that sandwich them, and
//! * a **simulator** ([`netsim`]) that samples actual weight matrices from a
//!   counter-based RNG, runs the forward pass, and computes every backward
//!   derivative exactly.
//!
//! [`stats`] compares the two with streaming moment estimates and z-tests, and
//! [`runner`] wires everything into reproducible, machine-readable experiments
//! (see the `relu-moments` CLI and the browser demo).
//!
//! Layer indices are 1-based throughout the public API, matching the usual
//! mathematical convention: weights are `W_1..W_L`, hidden activations are
//! `f_1..f_{L-1}`, and the scalar output is `f_L`.

mod lgamma;

pub mod combinatorics;
pub mod config;
pub mod moments;
pub mod netsim;
pub mod report;
pub mod rng;
pub mod runner;
pub mod stats;

pub use config::{ExperimentConfig, InputSpec, ScheduleSpec};
pub use moments::{InitSchedule, MomentPrediction, NetworkShape};
pub use netsim::{ForwardTrace, WeightSample};
pub use report::Report;
pub use stats::{StreamingStats, Verdict};
