//! BB84 quantum key distribution post-processing: a seeded protocol
//! simulation (sifting, error correction, authentication, privacy
//! amplification) and analytic models for secrecy capacity, effective key
//! rate, optimal mean photon number and classical computational load.
//!
//! The analytic models are generic over [`Scalar`] (`f32` or `f64`); the
//! `*F32` / `*F64` aliases below name the concrete instantiations.

pub mod bits;
pub mod gf2;
pub mod hashing;
pub mod loadmodel;
pub mod optimize;
pub mod params;
pub mod photonics;
pub mod protocol;
pub mod scalar;
pub mod secrecy;

pub use bits::BitString;
pub use params::{AttackScenario, SourceKind, SystemConfig, SystemConfigF32, SystemConfigF64};
pub use protocol::{run_session, SessionReport};
pub use scalar::Scalar;
pub use secrecy::{LeakageModel, PrivacyAmpBudget};
