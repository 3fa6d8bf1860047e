//! Seeded end-to-end simulation of one block: quantum exchange, sifting,
//! error estimation, reconciliation, equivalence check, authentication
//! accounting and privacy amplification.
//!
//! All randomness derives from the session seed through independent ChaCha8
//! streams: the quantum channel, the public randomness both parties share
//! (shuffle, sample positions, validation subsets), and the preshared secret
//! pool that supplies hash indices.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::hashing::HashError;
use crate::secrecy::SecrecyError;

pub mod exchange;
pub mod reconcile;
pub mod session;
pub mod sift;
pub mod transcript;

pub use exchange::{simulate_quantum_exchange, Detection, QuantumExchangeRecord};
pub use reconcile::{error_correct, validate_reconciled, EcOutcome, ValidationOutcome};
pub use session::{
    run_session, run_session_with, SessionOptions, SessionOutcome, SessionReport, MAX_SIMULATED_M,
};
pub use sift::{sift, SiftResult};
pub use transcript::{EcIteration, ParityCounts, TranscriptLedger, TranscriptRecord};

pub const STREAM_QUANTUM: u64 = 1;
pub const STREAM_SHARED: u64 = 2;
pub const STREAM_SECRET: u64 = 3;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("string lengths differ: alice {alice}, bob {bob}")]
    LengthMismatch { alice: usize, bob: usize },
    #[error("raw_block_m = {m} exceeds the simulation limit of {limit}")]
    BlockTooLarge { m: u64, limit: u64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Secrecy(#[from] SecrecyError),
    #[error(transparent)]
    Hash(#[from] HashError),
}
