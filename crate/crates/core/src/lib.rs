//! Frame synchronization for burst-mode links under amplifier
//! nonlinearity, multipath fading, and noise.
//!
//! The crate simulates the full receive chain at symbol rate and
//! compares three offset estimators over seeded Monte Carlo sweeps:
//!
//! * `corr` — classical argmax of the cross-correlation metric,
//! * `prop` — a single-hidden-layer network fed the normalized metric,
//! * `fs_learn` — the same network fed the raw observation (ablation).
//!
//! Modules follow the processing chain: [`waveform`] builds frames,
//! [`impairments`] pushes them through the amplifier/channel/noise,
//! [`metrics`] scores candidate offsets, [`elm`] trains and runs the
//! network, and [`harness`] drives reproducible experiments and writes
//! their results.
//!
//! Everything is deterministic given the three experiment seeds; see
//! [`rng`] for the stream derivation and [`exec`] for the parallel /
//! sequential execution story.

pub mod elm;
pub mod error;
pub mod exec;
pub mod harness;
pub mod impairments;
pub mod linalg;
pub mod metrics;
pub mod rng;
pub mod waveform;

pub use error::{Error, Result};
