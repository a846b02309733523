//! Separable-pair-ansatz VQE datasets for hydrogenic systems and neural
//! prediction of the circuit angles.
//!
//! The pipeline runs end to end: generate hydrogen geometries (`geom`), pair
//! the atoms by minimum-weight perfect matching (`matching`), build the
//! minimal-basis electronic Hamiltonian and its qubit image (`integrals`,
//! `hamiltonian`), optimize the separable pair circuit exactly (`spa`,
//! `optimize`), persist labeled instances as JSONL (`pipeline`), train
//! SchNet-style angle predictors (`nn`), and score zero-shot energy errors
//! (`eval`). See the `examples/` directory for one runnable program per
//! capability.

pub mod cli;
pub mod error;
pub mod eval;
pub mod geom;
pub mod hamiltonian;
pub mod integrals;
pub mod matching;
pub mod nn;
pub mod optimize;
pub mod pauli;
pub mod pipeline;
pub mod spa;

pub use error::{Error, Result};
