//! Active on-path adversary.
//!
//! Inputs are limited to the public key and wire messages. The attack:
//!
//! 1. Replace the AS's round-2 vector `c'` with `c''_j = 1 + n r''_j`, keeping `c'`.
//! 2. The victim answers `d_j = c''_j^(b_j) = 1 + n r''_j b_j (mod n^2)`.
//! 3. Read `b_j = ((d_j - 1) / n) · r''_j^-1 mod n`.
//! 4. Forward `c'_j^(b_j)` to the AS, which is exactly the honest reply.
//!
//! The template `a` and the key `x` stay hidden; recovering them would require
//! removing the encryption factors inside `c'`, which needs `λ`.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use super::{check_len, AttackError, AttackKind, AttackReport};
use crate::modmath;
use crate::paillier::PublicKey;
use crate::protocol::{FeatureVector, Round2Message, Round3Message};
use crate::rng::RandomSource;

#[derive(Debug, Clone)]
pub struct MitmState {
    pk: PublicKey,
    r_double_prime: Vec<BigUint>,
    intercepted_c_prime: Option<Round2Message>,
    recovered_b: Option<FeatureVector>,
}

impl MitmState {
    pub fn r_double_prime(&self) -> &[BigUint] {
        &self.r_double_prime
    }

    pub fn intercepted_c_prime(&self) -> Option<&Round2Message> {
        self.intercepted_c_prime.as_ref()
    }

    /// Keep the legitimate round-2 message for the cover-up step.
    pub fn intercept(&mut self, c_prime: Round2Message) -> Result<(), AttackError> {
        check_len(self.r_double_prime.len(), c_prime.c_prime.len())?;
        self.intercepted_c_prime = Some(c_prime);
        Ok(())
    }

    pub fn recovered_b(&self) -> Option<&FeatureVector> {
        self.recovered_b.as_ref()
    }

    /// Replace the recovered `b`. Fault-injection hook for negative controls.
    pub fn overwrite_recovered_b(&mut self, b: FeatureVector) {
        self.recovered_b = Some(b);
    }

    /// Report with `b` only. There are no `x` or `a` fields to fill.
    pub fn report(&self) -> AttackReport {
        let recovered_b = match &self.recovered_b {
            Some(b) => b.elements().iter().map(|&v| Some(BigUint::from(v))).collect(),
            None => vec![None; self.r_double_prime.len()],
        };
        AttackReport {
            attack: AttackKind::ActiveMitm,
            recovered_b,
            recovered_x_mod_n: None,
            recovered_a: None,
            verified: false,
            flags: Vec::new(),
        }
    }
}

/// Forged round-2 vector with `r''` drawn as units mod `n`.
pub fn mitm_forge_round2<R: RandomSource + ?Sized>(
    pk: &PublicKey,
    t: usize,
    rng: &mut R,
) -> Result<(Round2Message, MitmState), AttackError> {
    let r = (0..t)
        .map(|_| modmath::sample_unit(pk.n(), rng))
        .collect::<Result<Vec<_>, _>>()
        .map_err(crate::paillier::PaillierError::from)?;
    mitm_forge_round2_with(pk, r)
}

pub fn mitm_forge_round2_with(
    pk: &PublicKey,
    r_double_prime: Vec<BigUint>,
) -> Result<(Round2Message, MitmState), AttackError> {
    if r_double_prime.is_empty() {
        return Err(AttackError::State("forgery needs t >= 1".into()));
    }
    if r_double_prime
        .iter()
        .any(|r| r.is_zero() || r >= pk.n() || !modmath::gcd(r, pk.n()).is_one())
    {
        return Err(AttackError::State("r'' must be units in [1, n)".into()));
    }
    let c_prime = r_double_prime
        .iter()
        .map(|r| (BigUint::from(1u32) + pk.n() * r) % pk.n_squared())
        .collect();
    let state = MitmState {
        pk: pk.clone(),
        r_double_prime,
        intercepted_c_prime: None,
        recovered_b: None,
    };
    Ok((Round2Message { c_prime }, state))
}

/// Read `b` off the victim's answer to the forged vector.
pub fn mitm_recover_b(state: &mut MitmState, d: &Round3Message) -> Result<FeatureVector, AttackError> {
    check_len(state.r_double_prime.len(), d.d.len())?;
    let n = state.pk.n();
    let mut b = Vec::with_capacity(d.d.len());
    for (index, (d_j, r)) in d.d.iter().zip(&state.r_double_prime).enumerate() {
        if d_j.is_zero() || !((d_j - 1u32) % n).is_zero() {
            return Err(AttackError::ForgeryMismatch { index });
        }
        let shifted = d_j - 1u32;
        let r_inv = modmath::mod_inv(r, n).map_err(crate::paillier::PaillierError::from)?;
        let value = ((shifted / n) * r_inv) % n;
        let value = value
            .to_u64()
            .ok_or_else(|| AttackError::State(format!("recovered b[{index}] exceeds 64 bits")))?;
        b.push(value);
    }
    let b = FeatureVector::new(b, u64::MAX)?;
    state.recovered_b = Some(b.clone());
    Ok(b)
}

/// The round-3 message the honest victim would have sent for `c'`.
pub fn mitm_cover_forward(
    state: &MitmState,
    intercepted_c_prime: &Round2Message,
) -> Result<Round3Message, AttackError> {
    let b = state
        .recovered_b
        .as_ref()
        .ok_or_else(|| AttackError::State("b has not been recovered yet".into()))?;
    check_len(b.len(), intercepted_c_prime.c_prime.len())?;
    let d = intercepted_c_prime
        .c_prime
        .iter()
        .zip(b.elements())
        .map(|(c, &b_j)| c.modpow(&BigUint::from(b_j), state.pk.n_squared()))
        .collect();
    Ok(Round3Message { d })
}
