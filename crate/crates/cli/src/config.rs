use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use num_bigint::BigUint;

use ppba::harness::ScenarioParams;
use ppba::SeedMaterial;

use crate::store::read_json;
use crate::RngArgs;

pub const DEFAULT_BITS: u64 = 1024;
pub const DEFAULT_T: usize = 8;
pub const DEFAULT_BOUND: u64 = 65536;
pub const MIN_BITS: u64 = 64;

pub fn check_bits(bits: u64) -> Result<()> {
    if bits < MIN_BITS || !bits.is_multiple_of(2) {
        bail!("--bits must be even and at least {MIN_BITS}, got {bits}");
    }
    Ok(())
}

/// `t >= 1` and `t * bound^2 < 2^(bits - 1)`.
pub fn check_shape(bits: u64, t: usize, bound: u64) -> Result<()> {
    if t == 0 {
        bail!("t must be at least 1");
    }
    if bound < 2 {
        bail!("--bound must be at least 2");
    }
    let worst = BigUint::from(t) * BigUint::from(bound).pow(2);
    if worst >= BigUint::from(1u32) << (bits - 1) {
        bail!(
            "t * bound^2 = {worst} does not fit below 2^{}; inner products could wrap mod n",
            bits - 1
        );
    }
    Ok(())
}

pub fn seed_material(seed: Option<u64>, insecure: bool) -> Result<SeedMaterial> {
    match (seed, insecure) {
        (Some(_), false) => {
            bail!("a seed makes every key and ephemeral predictable; pass --insecure-seeded-rng to allow it")
        }
        (None, true) => bail!("--insecure-seeded-rng needs a --seed"),
        (seed, _) => Ok(SeedMaterial::from_optional_seed(seed)),
    }
}

pub fn rng_seeds(rng: &RngArgs) -> Result<SeedMaterial> {
    seed_material(rng.seed, rng.insecure_seeded_rng)
}

pub struct RunOverrides {
    pub config: Option<PathBuf>,
    pub bits: Option<u64>,
    pub t: Option<usize>,
    pub bound: Option<u64>,
    pub threshold: Option<String>,
    pub features: Option<Vec<u64>>,
    pub user_id: Option<String>,
    pub rng: RngArgs,
}

/// Parameters of `ppba run` after merging the config file and flags.
#[derive(Debug)]
pub struct RunConfig {
    pub params: ScenarioParams,
    /// Set when `--t` or the config file named a length explicitly.
    pub explicit_t: bool,
    pub threshold: BigUint,
    pub features: Option<Vec<u64>>,
    pub insecure_seeded_rng: bool,
}

impl RunConfig {
    pub fn resolve(o: RunOverrides) -> Result<Self> {
        let (mut params, explicit_t) = match &o.config {
            Some(path) => {
                let raw: serde_json::Value = read_json(path)?;
                let explicit_t = raw.get("t").is_some();
                let params = serde_json::from_value(raw).with_context(|| format!("parsing {}", path.display()))?;
                (params, explicit_t)
            }
            None => (ScenarioParams::default(), false),
        };
        if let Some(bits) = o.bits {
            params.key_bits = bits;
        }
        if let Some(t) = o.t {
            params.t = t;
        }
        if let Some(bound) = o.bound {
            params.feature_bound = bound;
        }
        if let Some(user_id) = o.user_id {
            params.user_id = user_id;
        }
        if o.rng.seed.is_some() {
            params.seed = o.rng.seed;
        }
        let threshold = match &o.threshold {
            Some(s) => s
                .parse::<BigUint>()
                .with_context(|| format!("--threshold {s:?} is not a non-negative decimal integer"))?,
            None => BigUint::from(params.threshold),
        };
        // Surface a bad seed/flag combination before any work is done.
        seed_material(params.seed, o.rng.insecure_seeded_rng)?;
        Ok(RunConfig {
            params,
            explicit_t: explicit_t || o.t.is_some(),
            threshold,
            features: o.features,
            insecure_seeded_rng: o.rng.insecure_seeded_rng,
        })
    }

    pub fn seeds(&self) -> Result<SeedMaterial> {
        seed_material(self.params.seed, self.insecure_seeded_rng)
    }
}
