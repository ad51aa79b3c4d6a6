//! Photocounting statistics of quantum light behind a realistic detector.
//!
//! A photodetector with quantum efficiency below one and a thermal
//! background registers a count distribution that differs from the photon
//! statistics of the incident field. This crate models that measurement as
//! a positive operator-valued measure (POVM) that is diagonal in the Fock
//! basis, and provides everything needed to move between the two sides of
//! it:
//!
//! * forward: count distributions, coherent-state symbols, conditional
//!   probability matrices, count moments and the Mandel Q parameter, for
//!   both the Poissonian-background limit and the finite-mode thermal
//!   background ([`povm`], [`statistics`]);
//! * backward: exact analytic inverses for the pure-loss and
//!   unit-efficiency channels, and a least-squares deconvolution for the
//!   general channel ([`inversion`]);
//! * scalar regime formulas: thermal mode count from the bandwidth-time
//!   product, the critical detection time below which the background stops
//!   looking Poissonian, and the background level at which sub-Poissonian
//!   statistics disappear ([`model`], [`statistics::noise_threshold`]);
//! * independent cross-checks: Monte Carlo sampling of the underlying
//!   beam-splitter picture, direct convolution, an exact normal-ordered
//!   operator expansion, and a truncated two-mode Fock-space simulation
//!   ([`oracle`]).
//!
//! The closed forms multiply factorially large and small factors, so all
//! probability assembly runs in sign/log space ([`specfun::LogReal`]) with
//! a single exponentiation at the end; same-sign series are accumulated
//! largest term first.
//!
//! The `examples/` directory contains one runnable program per capability;
//! a thin `photocount` binary exposes the same operations for scripting.

pub mod error;
pub mod inversion;
pub mod model;
pub mod oracle;
pub mod povm;
pub mod specfun;
pub mod states;
pub mod statistics;

pub use error::{Error, Result};
pub use model::{BathSpec, DetectorConfig, NoiseModel};
pub use povm::{ConditionalMatrix, SignalAmplitudes};
pub use states::{PhotonStatistics, StateMoments, StateSpec};
pub use statistics::{CountDistribution, Provenance, ThresholdOutcome};
