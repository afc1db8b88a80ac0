//! Paillier cryptosystem with the generator fixed to `g = n + 1`.
//!
//! Encryption is `c = g^m r^n = (1 + m n) r^n mod n^2`. Decryption raises to
//! `λ = lcm(p - 1, q - 1)`, which kills the encryption factor because
//! `r^(nλ) ≡ 1 (mod n^2)`, then applies `L(u) = (u - 1) / n` and multiplies by
//! `μ = λ^-1 mod n`.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hexint;
use crate::modmath::{self, MathError, MILLER_RABIN_ROUNDS};
use crate::rng::RandomSource;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PaillierError {
    #[error(transparent)]
    Math(#[from] MathError),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("plaintext is not below the modulus n")]
    PlaintextRange,
    #[error("malformed ciphertext: {0}")]
    MalformedCiphertext(String),
    #[error("invalid key: {0}")]
    InvalidKey(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PublicKeyWire", into = "PublicKeyWire")]
pub struct PublicKey {
    n: BigUint,
    g: BigUint,
    n_squared: BigUint,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PublicKeyWire {
    #[serde(with = "hexint::single")]
    n: BigUint,
    #[serde(with = "hexint::single")]
    g: BigUint,
}

impl TryFrom<PublicKeyWire> for PublicKey {
    type Error = PaillierError;

    fn try_from(wire: PublicKeyWire) -> Result<Self, Self::Error> {
        let pk = PublicKey::from_modulus(wire.n)?;
        if wire.g != pk.g {
            return Err(PaillierError::InvalidKey("generator must be n + 1".into()));
        }
        Ok(pk)
    }
}

impl From<PublicKey> for PublicKeyWire {
    fn from(pk: PublicKey) -> Self {
        PublicKeyWire { n: pk.n, g: pk.g }
    }
}

impl PublicKey {
    pub fn from_modulus(n: BigUint) -> Result<Self, PaillierError> {
        if n < BigUint::from(6u32) {
            return Err(PaillierError::InvalidKey(format!("modulus {n} is too small")));
        }
        let g = &n + 1u32;
        let n_squared = &n * &n;
        Ok(PublicKey { n, g, n_squared })
    }

    pub fn n(&self) -> &BigUint {
        &self.n
    }

    pub fn g(&self) -> &BigUint {
        &self.g
    }

    pub fn n_squared(&self) -> &BigUint {
        &self.n_squared
    }

    pub fn bits(&self) -> u64 {
        self.n.bits()
    }

    /// `g^e mod n^2`, evaluated as `1 + (e mod n) n` since `g = n + 1` has order `n`.
    pub fn g_pow(&self, e: &BigUint) -> BigUint {
        (BigUint::one() + (e % &self.n) * &self.n) % &self.n_squared
    }

    /// True iff `value` lies in `[1, n^2)` and is coprime to `n`.
    pub fn is_ciphertext_unit(&self, value: &BigUint) -> bool {
        !value.is_zero() && *value < self.n_squared && modmath::gcd(value, &self.n).is_one()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PrivateKeyWire", into = "PrivateKeyWire")]
pub struct PrivateKey {
    lambda: BigUint,
    mu: BigUint,
    n: BigUint,
    n_squared: BigUint,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PrivateKeyWire {
    #[serde(with = "hexint::single")]
    lambda: BigUint,
    #[serde(with = "hexint::single")]
    mu: BigUint,
    #[serde(with = "hexint::single")]
    n: BigUint,
}

impl TryFrom<PrivateKeyWire> for PrivateKey {
    type Error = PaillierError;

    fn try_from(wire: PrivateKeyWire) -> Result<Self, Self::Error> {
        PrivateKey::new(wire.lambda, wire.mu, wire.n)
    }
}

impl From<PrivateKey> for PrivateKeyWire {
    fn from(sk: PrivateKey) -> Self {
        PrivateKeyWire {
            lambda: sk.lambda,
            mu: sk.mu,
            n: sk.n,
        }
    }
}

impl PrivateKey {
    fn new(lambda: BigUint, mu: BigUint, n: BigUint) -> Result<Self, PaillierError> {
        if n < BigUint::from(6u32) || lambda.is_zero() || mu >= n {
            return Err(PaillierError::InvalidKey("private key out of range".into()));
        }
        if !((&mu * &lambda) % &n).is_one() {
            return Err(PaillierError::InvalidKey(
                "mu is not the inverse of lambda mod n".into(),
            ));
        }
        let n_squared = &n * &n;
        let sk = PrivateKey {
            lambda,
            mu,
            n,
            n_squared,
        };
        // g^λ ≡ 1 + λ n (mod n^2) holds for g = n + 1 by the binomial expansion;
        // checking it against a real exponentiation guards against corrupt files.
        let g = &sk.n + 1u32;
        let expected = (BigUint::one() + &sk.lambda * &sk.n) % &sk.n_squared;
        if g.modpow(&sk.lambda, &sk.n_squared) != expected {
            return Err(PaillierError::InvalidKey("generator order check failed".into()));
        }
        Ok(sk)
    }

    pub fn lambda(&self) -> &BigUint {
        &self.lambda
    }

    pub fn mu(&self) -> &BigUint {
        &self.mu
    }

    pub fn n(&self) -> &BigUint {
        &self.n
    }

    pub fn n_squared(&self) -> &BigUint {
        &self.n_squared
    }

    /// `n λ`, a multiple of the exponent of `Z*_{n^2}`. Exponents may be
    /// inverted modulo this value.
    pub fn n_lambda(&self) -> BigUint {
        &self.n * &self.lambda
    }

    pub fn public_key(&self) -> PublicKey {
        PublicKey::from_modulus(self.n.clone()).expect("validated at construction")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Plaintext(pub BigUint);

impl Plaintext {
    pub fn value(&self) -> &BigUint {
        &self.0
    }
}

impl From<u64> for Plaintext {
    fn from(v: u64) -> Self {
        Plaintext(BigUint::from(v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ciphertext(#[serde(with = "hexint::single")] BigUint);

impl Ciphertext {
    pub fn new(pk: &PublicKey, value: BigUint) -> Result<Self, PaillierError> {
        if !pk.is_ciphertext_unit(&value) {
            return Err(PaillierError::MalformedCiphertext(
                "value must lie in [1, n^2) and be coprime to n".into(),
            ));
        }
        Ok(Ciphertext(value))
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn into_value(self) -> BigUint {
        self.0
    }
}

/// Key pair with `n` of exactly `bits` bits, each prime `bits / 2` bits.
pub fn keygen<R: RandomSource + ?Sized>(bits: u64, rng: &mut R) -> Result<(PublicKey, PrivateKey), PaillierError> {
    if bits < 16 || !bits.is_multiple_of(2) {
        return Err(PaillierError::Parameter(format!(
            "key size must be even and at least 16 bits, got {bits}"
        )));
    }
    let half = bits / 2;
    loop {
        let p = modmath::gen_prime_with_top_bits(half, 2, rng)?;
        let q = modmath::gen_prime_with_top_bits(half, 2, rng)?;
        if p == q {
            continue;
        }
        match keygen_from_primes(&p, &q) {
            Ok(keys) => {
                debug_assert_eq!(keys.0.bits(), bits);
                return Ok(keys);
            }
            // gcd(λ, n) ≠ 1 cannot happen for equal-size primes, but retry anyway.
            Err(PaillierError::InvalidKey(_)) => continue,
            Err(e) => return Err(e),
        }
    }
}

/// Key pair from caller-chosen primes. Intended for hand-checkable toy keys
/// such as `p = 3, q = 5`.
pub fn keygen_from_primes(p: &BigUint, q: &BigUint) -> Result<(PublicKey, PrivateKey), PaillierError> {
    if p == q {
        return Err(PaillierError::Parameter("primes must be distinct".into()));
    }
    // Primality of toy inputs does not need to be randomized.
    let mut rng = crate::rng::InsecureSeededRng::new_insecure(0);
    for prime in [p, q] {
        if !modmath::is_probable_prime(prime, MILLER_RABIN_ROUNDS, &mut rng) {
            return Err(PaillierError::Parameter(format!("{prime} is not prime")));
        }
    }
    let n = p * q;
    let lambda = modmath::lcm(&(p - 1u32), &(q - 1u32))?;
    let mu = modmath::mod_inv(&lambda, &n).map_err(|_| PaillierError::InvalidKey("gcd(lambda, n) != 1".into()))?;
    let sk = PrivateKey::new(lambda, mu, n.clone())?;
    let pk = PublicKey::from_modulus(n)?;
    Ok((pk, sk))
}

pub fn encrypt<R: RandomSource + ?Sized>(
    pk: &PublicKey,
    m: &Plaintext,
    rng: &mut R,
) -> Result<Ciphertext, PaillierError> {
    let r = modmath::sample_unit(pk.n(), rng)?;
    encrypt_with_r(pk, m, &r)
}

/// `(1 + m n) r^n mod n^2` with a caller-supplied unit `r`.
pub fn encrypt_with_r(pk: &PublicKey, m: &Plaintext, r: &BigUint) -> Result<Ciphertext, PaillierError> {
    if m.0 >= pk.n {
        return Err(PaillierError::PlaintextRange);
    }
    if r.is_zero() || !modmath::gcd(r, &pk.n).is_one() {
        return Err(PaillierError::Parameter(
            "encryption factor base must be a unit mod n".into(),
        ));
    }
    let factor = modmath::mod_pow(r, &pk.n, &pk.n_squared)?;
    let c = (pk.g_pow(&m.0) * factor) % &pk.n_squared;
    Ok(Ciphertext(c))
}

pub fn decrypt(sk: &PrivateKey, c: &Ciphertext) -> Result<Plaintext, PaillierError> {
    decrypt_value(sk, c.value()).map(Plaintext)
}

/// Decryption of a raw residue mod `n^2`, for values taken straight off the wire.
pub fn decrypt_value(sk: &PrivateKey, c: &BigUint) -> Result<BigUint, PaillierError> {
    if c.is_zero() || *c >= sk.n_squared {
        return Err(PaillierError::MalformedCiphertext("value not in [1, n^2)".into()));
    }
    let common = modmath::gcd(c, &sk.n);
    if !common.is_one() {
        return Err(PaillierError::MalformedCiphertext(format!(
            "value shares factor {common} with n"
        )));
    }
    let u = modmath::mod_pow(c, &sk.lambda, &sk.n_squared)?;
    let l = l_function(&u, &sk.n)?;
    Ok((l * &sk.mu) % &sk.n)
}

/// `L(u) = (u - 1) / n`, defined only when `n` divides `u - 1`.
pub fn l_function(u: &BigUint, n: &BigUint) -> Result<BigUint, PaillierError> {
    if u.is_zero() {
        return Err(PaillierError::MalformedCiphertext("L(0) is undefined".into()));
    }
    let shifted = u - 1u32;
    if !(&shifted % n).is_zero() {
        return Err(PaillierError::MalformedCiphertext("u - 1 is not divisible by n".into()));
    }
    Ok(shifted / n)
}

/// Ciphertext of `m1 + m2`.
pub fn hom_add(pk: &PublicKey, c1: &Ciphertext, c2: &Ciphertext) -> Ciphertext {
    Ciphertext((c1.value() * c2.value()) % pk.n_squared())
}

/// Ciphertext of `m1 - m2`.
pub fn hom_sub(pk: &PublicKey, c1: &Ciphertext, c2: &Ciphertext) -> Result<Ciphertext, PaillierError> {
    let inv = modmath::mod_inv(c2.value(), pk.n_squared())
        .map_err(|e| PaillierError::MalformedCiphertext(format!("subtrahend not invertible: {e}")))?;
    Ok(Ciphertext((c1.value() * inv) % pk.n_squared()))
}

/// Ciphertext of `k m`.
pub fn hom_scale(pk: &PublicKey, c: &Ciphertext, k: &BigUint) -> Ciphertext {
    Ciphertext(c.value().modpow(k, pk.n_squared()))
}
