//! Neural prediction of circuit angles: a from-scratch reverse-mode
//! differentiation engine (`tape`), the backbone and heads (`model`), the
//! deterministic training loop (`train`), and checkpoint I/O (`checkpoint`).

pub mod checkpoint;
pub mod model;
pub mod tape;
pub mod train;

pub use model::{Head, ModelConfig, ModelParams};
pub use train::{train, Hyper, TrainOutcome};
