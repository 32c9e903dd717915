//! Benchmarking toolkit for quantum-annealing style Ising solvers.
//!
//! The pieces follow the life of a problem: build an Ising
//! [`Hamiltonian`](ising::Hamiltonian), map it onto a [Chimera](chimera)
//! working graph through an [`Embedding`](embedding::Embedding), program it
//! with [control errors](ice), [sample](sampler) it, [clean up](postprocess)
//! the reads and [score](metrics) them against an [exact](exact) oracle.
//! [`generators`] produces the benchmark instance classes and
//! [`experiment`] ties everything into reproducible parameter sweeps.

pub mod archive;
pub mod chimera;
pub mod embedding;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod generators;
pub mod ice;
pub mod ising;
pub mod metrics;
pub mod postprocess;
pub mod rng;
pub mod sampler;

pub use error::{Error, Result};
pub use ising::{GaugeVector, Hamiltonian, SpinState};
