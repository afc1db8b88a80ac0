//! Modular arithmetic and probable-prime generation.
//!
//! All results are canonical residues in `[0, modulus)`.

use num_bigint::{BigInt, BigUint, RandBigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::rng::RandomSource;

/// Miller-Rabin rounds used by [`gen_probable_prime`].
pub const MILLER_RABIN_ROUNDS: usize = 40;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MathError {
    #[error("modulus must be at least 2, got {0}")]
    InvalidModulus(BigUint),
    #[error("value is not invertible: gcd with modulus is {gcd}")]
    NotInvertible { gcd: BigUint },
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

fn check_modulus(modulus: &BigUint) -> Result<(), MathError> {
    if *modulus < BigUint::from(2u32) {
        return Err(MathError::InvalidModulus(modulus.clone()));
    }
    Ok(())
}

/// `base^exp mod modulus`.
pub fn mod_pow(base: &BigUint, exp: &BigUint, modulus: &BigUint) -> Result<BigUint, MathError> {
    check_modulus(modulus)?;
    Ok(base.modpow(exp, modulus))
}

/// Inverse of `a` modulo `modulus` by the extended Euclidean algorithm.
pub fn mod_inv(a: &BigUint, modulus: &BigUint) -> Result<BigUint, MathError> {
    check_modulus(modulus)?;
    let m = BigInt::from_biguint(Sign::Plus, modulus.clone());
    let mut old_r = BigInt::from_biguint(Sign::Plus, a % modulus);
    let mut r = m.clone();
    let mut old_s = BigInt::one();
    let mut s = BigInt::zero();
    while !r.is_zero() {
        let q = &old_r / &r;
        let next_r = &old_r - &q * &r;
        old_r = std::mem::replace(&mut r, next_r);
        let next_s = &old_s - &q * &s;
        old_s = std::mem::replace(&mut s, next_s);
    }
    // old_r = gcd(a, m); old_r is non-negative because both inputs are.
    if !old_r.is_one() {
        return Err(MathError::NotInvertible {
            gcd: old_r.magnitude().clone(),
        });
    }
    let inv = old_s.mod_floor(&m);
    Ok(inv.magnitude().clone())
}

pub fn gcd(a: &BigUint, b: &BigUint) -> BigUint {
    a.gcd(b)
}

pub fn lcm(a: &BigUint, b: &BigUint) -> Result<BigUint, MathError> {
    if a.is_zero() || b.is_zero() {
        return Err(MathError::Parameter("lcm of zero is undefined here".into()));
    }
    Ok(a.lcm(b))
}

/// Uniform element of `[1, modulus)` coprime to `modulus`, by rejection.
pub fn sample_unit<R: RandomSource + ?Sized>(modulus: &BigUint, rng: &mut R) -> Result<BigUint, MathError> {
    check_modulus(modulus)?;
    let one = BigUint::one();
    loop {
        let candidate = rng.gen_biguint_range(&one, modulus);
        if candidate.gcd(modulus).is_one() {
            return Ok(candidate);
        }
    }
}

/// Primes below 1000, used for trial division before Miller-Rabin.
pub(crate) fn small_primes() -> &'static [u32] {
    static PRIMES: std::sync::OnceLock<Vec<u32>> = std::sync::OnceLock::new();
    PRIMES.get_or_init(|| {
        let mut sieve = vec![true; 1000];
        sieve[0] = false;
        sieve[1] = false;
        let mut i = 2;
        while i * i < 1000 {
            if sieve[i] {
                let mut j = i * i;
                while j < 1000 {
                    sieve[j] = false;
                    j += i;
                }
            }
            i += 1;
        }
        sieve
            .iter()
            .enumerate()
            .filter_map(|(p, &is_p)| is_p.then_some(p as u32))
            .collect()
    })
}

/// Miller-Rabin with `rounds` random bases.
pub fn is_probable_prime<R: RandomSource + ?Sized>(n: &BigUint, rounds: usize, rng: &mut R) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for &p in small_primes() {
        let p = BigUint::from(p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }

    let n_minus_one = n - 1u32;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;

    'witness: for _ in 0..rounds {
        let a = rng.gen_biguint_range(&two, &n_minus_one);
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Odd probable prime of exactly `bits` bits.
pub fn gen_probable_prime<R: RandomSource + ?Sized>(bits: u64, rng: &mut R) -> Result<BigUint, MathError> {
    gen_prime_with_top_bits(bits, 1, rng)
}

/// Like [`gen_probable_prime`] but with the `top` most significant bits
/// forced to one. With `top = 2` the product of two such primes has exactly
/// twice as many bits.
pub(crate) fn gen_prime_with_top_bits<R: RandomSource + ?Sized>(
    bits: u64,
    top: u64,
    rng: &mut R,
) -> Result<BigUint, MathError> {
    if bits < 8 {
        return Err(MathError::Parameter(format!(
            "prime size must be at least 8 bits, got {bits}"
        )));
    }
    loop {
        let mut candidate = rng.gen_biguint(bits);
        for i in 0..top {
            candidate.set_bit(bits - 1 - i, true);
        }
        candidate.set_bit(0, true);
        if is_probable_prime(&candidate, MILLER_RABIN_ROUNDS, rng) {
            return Ok(candidate);
        }
    }
}
