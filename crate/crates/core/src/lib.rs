//! Constructive almost-periodicity of convolutions on finite abelian groups.

pub mod bohr;
pub mod error;
pub mod fourier;
pub mod freiman;
pub mod groups;
pub mod pipelines;
pub mod primes;
pub mod progression;
pub mod rng;
pub mod sampling;
pub mod subspace;

pub use error::{Error, Result};
