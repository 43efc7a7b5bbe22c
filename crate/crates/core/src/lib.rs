//! Achievable information rates for probabilistic amplitude shaping (PAS).
//!
//! The crate is organised bottom-up:
//!
//! * [`alphabets`]: ASK constellations, the sign × amplitude factorization and
//!   binary reflected Gray labels.
//! * [`channel`]: discrete memoryless channels, in particular the quantized
//!   AWGN channel, and sequence likelihoods.
//! * [`infomeasures`]: entropies, mutual information, the BMD rate, GMI and
//!   LM-rate evaluation on finite tables.
//! * [`airsolver`]: power-constrained capacity of ASK inputs with symmetric
//!   distributions and the operating points derived from it.
//! * [`typicality`]: exhaustive enumeration of weakly typical, jointly typical
//!   and B-typical sequence sets.
//! * [`signcode`]: the random sign-coding experiment with symbol-metric and
//!   bit-metric joint-typicality decoding.
//!
//! Data-parallel loops (sweeps, enumeration ranges, Monte Carlo trials) run on
//! rayon when the default `parallel` feature is enabled and sequentially
//! otherwise. Results never depend on the number of worker threads.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod airsolver;
pub mod alphabets;
pub mod channel;
mod error;
pub mod infomeasures;
pub mod par;
pub mod signcode;
pub mod typicality;

pub use error::{Error, Result};
