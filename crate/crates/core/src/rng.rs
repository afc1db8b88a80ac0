//! Injected randomness.
//!
//! Every operation that samples takes a `&mut R where R: RandomSource`. Two
//! sources exist: [`OsRandom`] for real use and [`InsecureSeededRng`] for
//! reproducible runs. The seeded source has to be asked for by name.

use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// A source of random bytes usable by the lab.
pub trait RandomSource: RngCore {}

/// Operating-system backed cryptographic randomness.
#[derive(Debug, Default, Clone, Copy)]
pub struct OsRandom;

impl RngCore for OsRandom {
    fn next_u32(&mut self) -> u32 {
        rand::rngs::OsRng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        rand::rngs::OsRng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        rand::rngs::OsRng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        rand::rngs::OsRng.try_fill_bytes(dest)
    }
}

impl CryptoRng for OsRandom {}
impl RandomSource for OsRandom {}

/// Deterministic ChaCha20 stream seeded from a `u64`.
///
/// Only for tests and reproducible demos: anyone who knows the seed knows
/// every key and ephemeral value the lab produces.
#[derive(Debug, Clone)]
pub struct InsecureSeededRng(ChaCha20Rng);

impl InsecureSeededRng {
    pub fn new_insecure(seed: u64) -> Self {
        InsecureSeededRng(ChaCha20Rng::seed_from_u64(seed))
    }

    /// Independent stream for one party of a seeded run. Parties sharing a
    /// seed but using different stream ids never consume each other's bytes.
    pub fn new_insecure_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        InsecureSeededRng(inner)
    }
}

impl RngCore for InsecureSeededRng {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}

impl RandomSource for InsecureSeededRng {}

/// Seed for a family of independent per-party ChaCha20 streams.
///
/// A run draws every party's randomness from one root so that a scenario can
/// be re-executed with identical user and server ephemerals (the stealth
/// comparison needs that) while the adversary uses a stream of its own.
#[derive(Clone, PartialEq, Eq)]
pub struct SeedMaterial([u8; 32]);

impl std::fmt::Debug for SeedMaterial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SeedMaterial(..)")
    }
}

impl SeedMaterial {
    /// 256 bits from the operating system.
    pub fn from_os() -> Self {
        let mut seed = [0u8; 32];
        rand::rngs::OsRng.fill_bytes(&mut seed);
        SeedMaterial(seed)
    }

    /// Expanded from a `u64`. Reproducible and therefore insecure.
    pub fn insecure_from_u64(seed: u64) -> Self {
        SeedMaterial(ChaCha20Rng::seed_from_u64(seed).get_seed())
    }

    pub fn from_optional_seed(seed: Option<u64>) -> Self {
        seed.map_or_else(SeedMaterial::from_os, SeedMaterial::insecure_from_u64)
    }

    pub fn stream(&self, id: u64) -> PartyRng {
        let mut inner = ChaCha20Rng::from_seed(self.0);
        inner.set_stream(id);
        PartyRng(inner)
    }
}

/// One party's stream derived from a [`SeedMaterial`].
#[derive(Debug, Clone)]
pub struct PartyRng(ChaCha20Rng);

impl RngCore for PartyRng {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}

impl CryptoRng for PartyRng {}
impl RandomSource for PartyRng {}
