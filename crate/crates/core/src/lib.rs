//! Desk-scale simulation and randomness analysis of time-tagged biphoton
//! coincidence records.
//!
//! The crate is organised as a pipeline:
//!
//! * [`timetag`] reads and writes detection streams, pairs A/B detections into
//!   coincidences and folds them onto the pump period.
//! * [`quantum`] holds the two-parameter mixed-state model and the CHSH,
//!   concurrence and purity estimators.
//! * [`simulator`] produces seeded detection streams for a state and a pair of
//!   polarizer settings.
//! * [`series`] turns coincidence lists into the three series types and
//!   binarizes them.
//! * [`randomness`], [`dynamics`] and [`stationarity`] implement the
//!   indicators applied to every series.
//! * [`pipeline`] runs the whole battery, aggregates tables and ledgers and
//!   backs the command-line interface.

// `!(x > 0.0)` is used on purpose so that NaN fails the check too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod pipeline;
pub mod quantum;
pub mod randomness;
pub mod series;
pub mod simulator;
pub mod stationarity;
pub mod stats;
pub mod timetag;
