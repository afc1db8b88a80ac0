//! Cryptanalysis lab for a Paillier-based privacy-preserving behavioral
//! authentication protocol.
//!
//! The honest protocol lives in [`protocol`]; [`attacks`] recovers the
//! user's secrets from the positions of a curious server and an on-path
//! adversary; [`harness`] runs both against ground truth.

pub mod attacks;
pub mod harness;
pub mod hexint;
pub mod modmath;
pub mod paillier;
pub mod protocol;
pub mod rng;
pub mod transcript;

pub use paillier::{Ciphertext, Plaintext, PrivateKey, PublicKey};
pub use rng::{InsecureSeededRng, OsRandom, RandomSource, SeedMaterial};
