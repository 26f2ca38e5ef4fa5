#![no_std]
#![warn(missing_docs)]

//! Capacity of the discrete-time AWGN channel observed through a K-bin
//! scalar quantizer.
//!
//! The crate is `no_std` and only needs `alloc`. It covers:
//!
//! - [`channel`]: transition probabilities, output PMF, mutual information
//!   and the divergence function `d(x;F)` for discrete inputs.
//! - [`solver`]: capacity under an average power constraint for a fixed
//!   quantizer, using a power-penalised Blahut-Arimoto inner solver with a
//!   cutting-plane support refinement and KKT certification.
//! - [`design`]: the uniform PAM / ML-threshold benchmark and symmetric
//!   2-bit and 3-bit quantizer optimisation.
//! - [`analysis`]: unquantized capacity, SNR-for-rate inversion and
//!   reproduction of the reference capacity tables.
//!
//! Enable the `parallel` feature to evaluate sweeps with rayon (pulls in
//! `std`), and `serde` to derive serialisation on the result types.

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod analysis;
pub mod channel;
pub mod design;
mod error;
pub mod solver;
pub mod special;
mod par;

pub use channel::{ChannelParams, InputDistribution, OutputPmf, QuantizerSpec, TransitionMatrix};
pub use error::{Error, Result};
pub use solver::{CapacityResult, SolverOptions, SupportBound};
