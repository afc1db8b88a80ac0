//! Enrollment and three-round authentication between a user device and the
//! authentication server (AS).
//!
//! ```text
//! enroll   user:   c_j  = g^(a_j + x_j) r_j^n                 -> AS stores c
//! round 1  user:   c*_j = (g^(b_j) r*_j^n)^(x_j)              -> AS
//! round 2  AS:     c'_j = c_j^(r'_j)                          -> user
//! round 3  user:   d_j  = c'_j^(b_j)                          -> AS
//! decide   AS:     t_j  = d_j^(r'_j^-1 mod nλ) / c*_j,  T = Π t_j,  T' = Dec(T)
//! ```
//!
//! For honest parties `T' = Σ a_j b_j`, and the user is accepted iff `T' ≥ T_S`.
//! All arithmetic is mod `n^2` unless stated otherwise.

mod wire;

pub use wire::{MessageKind, ProtocolMessage, WireError};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hexint;
use crate::modmath::{self, MathError};
use crate::paillier::{self, Ciphertext, PaillierError, PrivateKey, PublicKey};
use crate::rng::RandomSource;
use crate::transcript::{Direction, Transcript};

/// Exclusive upper bound on a single feature value.
pub const DEFAULT_FEATURE_BOUND: u64 = 1 << 16;
/// Default feature vector length `t`.
pub const DEFAULT_VECTOR_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("range error: {0}")]
    Range(String),
    #[error("length mismatch: expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("malformed message: {0}")]
    MalformedMessage(String),
    #[error("session state error: {0}")]
    State(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Paillier(#[from] PaillierError),
    #[error(transparent)]
    Math(#[from] MathError),
    #[error(transparent)]
    Wire(#[from] WireError),
}

fn check_len(expected: usize, got: usize) -> Result<(), ProtocolError> {
    if expected != got {
        return Err(ProtocolError::LengthMismatch { expected, got });
    }
    Ok(())
}

fn check_units(pk: &PublicKey, what: &str, values: &[BigUint]) -> Result<(), ProtocolError> {
    for (j, v) in values.iter().enumerate() {
        if !pk.is_ciphertext_unit(v) {
            return Err(ProtocolError::MalformedMessage(format!(
                "{what}[{j}] is not a unit in [1, n^2)"
            )));
        }
    }
    Ok(())
}

/// Quantized behavior features (`a` at enrollment, `b` at authentication).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(Vec<u64>);

impl FeatureVector {
    /// Non-empty vector with every element below `bound`.
    pub fn new(elements: Vec<u64>, bound: u64) -> Result<Self, ProtocolError> {
        if elements.is_empty() {
            return Err(ProtocolError::Range("feature vector must have t >= 1".into()));
        }
        if let Some((j, v)) = elements.iter().enumerate().find(|(_, &v)| v >= bound) {
            return Err(ProtocolError::Range(format!(
                "feature {j} = {v} is not below the bound {bound}"
            )));
        }
        Ok(FeatureVector(elements))
    }

    /// Uniform features in `[low, bound)`.
    pub fn random<R: RandomSource + ?Sized>(
        t: usize,
        low: u64,
        bound: u64,
        rng: &mut R,
    ) -> Result<Self, ProtocolError> {
        if low >= bound {
            return Err(ProtocolError::Range(format!("empty feature range [{low}, {bound})")));
        }
        let elements = (0..t).map(|_| rand::Rng::gen_range(rng, low..bound)).collect();
        FeatureVector::new(elements, bound)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn elements(&self) -> &[u64] {
        &self.0
    }

    pub fn inner_product(&self, other: &FeatureVector) -> BigUint {
        self.0.iter().zip(&other.0).map(|(&a, &b)| BigUint::from(a) * b).sum()
    }

    fn element(&self, j: usize) -> BigUint {
        BigUint::from(self.0[j])
    }

    fn check_below(&self, n: &BigUint) -> Result<(), ProtocolError> {
        if self.0.iter().any(|&v| BigUint::from(v) >= *n) {
            return Err(ProtocolError::Range("feature is not below n".into()));
        }
        Ok(())
    }
}

/// `t · bound² < n`, so an inner product of in-bound vectors never wraps mod `n`.
pub fn check_no_wrap(pk: &PublicKey, t: usize, bound: u64) -> Result<(), ProtocolError> {
    let worst = BigUint::from(t) * BigUint::from(bound) * BigUint::from(bound);
    if worst >= *pk.n() {
        return Err(ProtocolError::Range(format!(
            "t * bound^2 = {worst} does not fit below n ({} bits)",
            pk.bits()
        )));
    }
    Ok(())
}

/// Long-term user key vectors `x` and `r`, each element a unit mod `n^2`.
///
/// Only `x mod n` ever influences a plaintext, since `g` has order `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserSecrets {
    #[serde(with = "hexint::vec")]
    pub x: Vec<BigUint>,
    #[serde(with = "hexint::vec")]
    pub r: Vec<BigUint>,
}

impl UserSecrets {
    pub fn new(pk: &PublicKey, x: Vec<BigUint>, r: Vec<BigUint>) -> Result<Self, ProtocolError> {
        check_len(x.len(), r.len())?;
        if x.is_empty() {
            return Err(ProtocolError::Range("secret vectors must have t >= 1".into()));
        }
        for v in x.iter().chain(&r) {
            if v.is_zero() || *v >= *pk.n_squared() || !modmath::gcd(v, pk.n()).is_one() {
                return Err(ProtocolError::Range("secret element is not a unit mod n^2".into()));
            }
        }
        Ok(UserSecrets { x, r })
    }

    pub fn sample<R: RandomSource + ?Sized>(pk: &PublicKey, t: usize, rng: &mut R) -> Result<Self, ProtocolError> {
        let mut draw = || {
            (0..t)
                .map(|_| modmath::sample_unit(pk.n_squared(), rng))
                .collect::<Result<Vec<_>, _>>()
        };
        let x = draw()?;
        let r = draw()?;
        UserSecrets::new(pk, x, r)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Encrypted template stored by the AS.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnrollmentRecord {
    pub user_id: String,
    pub c: Vec<Ciphertext>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Round1Message {
    pub c_star: Vec<BigUint>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Round2Message {
    pub c_prime: Vec<BigUint>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Round3Message {
    pub d: Vec<BigUint>,
}

/// User-side state carried from round 1 to round 3.
#[derive(Debug, Clone)]
pub struct Round1State {
    pk: PublicKey,
    b: FeatureVector,
}

impl Round1State {
    pub fn sampled(&self) -> &FeatureVector {
        &self.b
    }
}

/// AS-side state for one authentication attempt. Single use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerSession {
    pub user_id: String,
    r_prime: Vec<BigUint>,
    c_star: Vec<BigUint>,
    d: Option<Vec<BigUint>>,
}

impl ServerSession {
    /// Rebuild a session from recorded values, for replay.
    pub fn restore(
        sk: &PrivateKey,
        user_id: String,
        r_prime: Vec<BigUint>,
        round1: &Round1Message,
    ) -> Result<Self, ProtocolError> {
        check_len(r_prime.len(), round1.c_star.len())?;
        check_units(&sk.public_key(), "c*", &round1.c_star)?;
        let order = sk.n_lambda();
        if r_prime.iter().any(|r| !modmath::gcd(r, &order).is_one()) {
            return Err(ProtocolError::Range("r' element is not a unit mod n*lambda".into()));
        }
        Ok(ServerSession {
            user_id,
            r_prime,
            c_star: round1.c_star.clone(),
            d: None,
        })
    }

    pub fn r_prime(&self) -> &[BigUint] {
        &self.r_prime
    }

    pub fn c_star(&self) -> &[BigUint] {
        &self.c_star
    }

    pub fn received_d(&self) -> Option<&[BigUint]> {
        self.d.as_deref()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    /// `T'`
    #[serde(with = "hexint::single")]
    pub inner_product: BigUint,
    /// `T_S`
    #[serde(with = "hexint::single")]
    pub threshold: BigUint,
    pub accepted: bool,
}

pub fn enroll<R: RandomSource + ?Sized>(
    pk: &PublicKey,
    user_id: &str,
    a: &FeatureVector,
    rng: &mut R,
) -> Result<(UserSecrets, EnrollmentRecord), ProtocolError> {
    a.check_below(pk.n())?;
    let secrets = UserSecrets::sample(pk, a.len(), rng)?;
    let record = enroll_with_secrets(pk, user_id, a, &secrets)?;
    Ok((secrets, record))
}

/// Enrollment with caller-chosen `x` and `r`.
pub fn enroll_with_secrets(
    pk: &PublicKey,
    user_id: &str,
    a: &FeatureVector,
    secrets: &UserSecrets,
) -> Result<EnrollmentRecord, ProtocolError> {
    check_len(a.len(), secrets.len())?;
    a.check_below(pk.n())?;
    let n2 = pk.n_squared();
    let c = (0..a.len())
        .map(|j| {
            let exponent = a.element(j) + &secrets.x[j];
            let factor = secrets.r[j].modpow(pk.n(), n2);
            Ciphertext::new(pk, (pk.g_pow(&exponent) * factor) % n2)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EnrollmentRecord {
        user_id: user_id.to_owned(),
        c,
    })
}

pub fn user_round1<R: RandomSource + ?Sized>(
    pk: &PublicKey,
    secrets: &UserSecrets,
    b: &FeatureVector,
    rng: &mut R,
) -> Result<(Round1Message, Round1State), ProtocolError> {
    check_len(secrets.len(), b.len())?;
    let r_star = (0..b.len())
        .map(|_| modmath::sample_unit(pk.n_squared(), rng))
        .collect::<Result<Vec<_>, _>>()?;
    user_round1_with(pk, secrets, b, &r_star)
}

/// Round 1 with a caller-chosen ephemeral vector `r*`.
pub fn user_round1_with(
    pk: &PublicKey,
    secrets: &UserSecrets,
    b: &FeatureVector,
    r_star: &[BigUint],
) -> Result<(Round1Message, Round1State), ProtocolError> {
    check_len(secrets.len(), b.len())?;
    check_len(b.len(), r_star.len())?;
    b.check_below(pk.n())?;
    let n2 = pk.n_squared();
    let c_star = (0..b.len())
        .map(|j| {
            let inner = (pk.g_pow(&b.element(j)) * r_star[j].modpow(pk.n(), n2)) % n2;
            inner.modpow(&secrets.x[j], n2)
        })
        .collect();
    Ok((
        Round1Message { c_star },
        Round1State {
            pk: pk.clone(),
            b: b.clone(),
        },
    ))
}

pub fn server_round2<R: RandomSource + ?Sized>(
    pk: &PublicKey,
    sk: &PrivateKey,
    record: &EnrollmentRecord,
    msg: &Round1Message,
    rng: &mut R,
) -> Result<(Round2Message, ServerSession), ProtocolError> {
    let order = sk.n_lambda();
    let r_prime = (0..record.c.len())
        .map(|_| modmath::sample_unit(&order, rng))
        .collect::<Result<Vec<_>, _>>()?;
    server_round2_with(pk, sk, record, msg, r_prime)
}

/// Round 2 with a caller-chosen blinding vector `r'` (units mod `nλ`).
pub fn server_round2_with(
    pk: &PublicKey,
    sk: &PrivateKey,
    record: &EnrollmentRecord,
    msg: &Round1Message,
    r_prime: Vec<BigUint>,
) -> Result<(Round2Message, ServerSession), ProtocolError> {
    check_len(record.c.len(), msg.c_star.len())?;
    check_len(record.c.len(), r_prime.len())?;
    let session = ServerSession::restore(sk, record.user_id.clone(), r_prime, msg)?;
    let c_prime = record
        .c
        .iter()
        .zip(&session.r_prime)
        .map(|(c, r)| c.value().modpow(r, pk.n_squared()))
        .collect();
    Ok((Round2Message { c_prime }, session))
}

pub fn user_round3(state: &Round1State, msg: &Round2Message) -> Result<Round3Message, ProtocolError> {
    check_len(state.b.len(), msg.c_prime.len())?;
    check_units(&state.pk, "c'", &msg.c_prime)?;
    let d = msg
        .c_prime
        .iter()
        .enumerate()
        .map(|(j, c)| c.modpow(&state.b.element(j), state.pk.n_squared()))
        .collect();
    Ok(Round3Message { d })
}

pub fn server_decide(
    sk: &PrivateKey,
    session: &mut ServerSession,
    msg: &Round3Message,
    threshold: &BigUint,
) -> Result<Decision, ProtocolError> {
    if session.d.is_some() {
        return Err(ProtocolError::State("session already decided".into()));
    }
    check_len(session.r_prime.len(), msg.d.len())?;
    let pk = sk.public_key();
    check_units(&pk, "d", &msg.d)?;
    let n2 = sk.n_squared();
    let order = sk.n_lambda();

    let mut aggregate = BigUint::one();
    for ((d, r), c_star) in msg.d.iter().zip(&session.r_prime).zip(&session.c_star) {
        let unblind = modmath::mod_inv(r, &order)
            .map_err(|e| ProtocolError::Internal(format!("r' not invertible mod n*lambda: {e}")))?;
        let c_star_inv = modmath::mod_inv(c_star, n2)?;
        let t_j = (d.modpow(&unblind, n2) * c_star_inv) % n2;
        aggregate = (aggregate * t_j) % n2;
    }
    let inner_product = paillier::decrypt_value(sk, &aggregate)?;
    session.d = Some(msg.d.clone());
    Ok(Decision {
        accepted: inner_product >= *threshold,
        inner_product,
        threshold: threshold.clone(),
    })
}

/// All four steps in sequence, with every wire message recorded.
#[allow(clippy::too_many_arguments)]
pub fn run_honest_session<R: RandomSource + ?Sized>(
    pk: &PublicKey,
    sk: &PrivateKey,
    record: &EnrollmentRecord,
    secrets: &UserSecrets,
    b: &FeatureVector,
    threshold: &BigUint,
    rng: &mut R,
) -> Result<(Decision, Transcript), ProtocolError> {
    let user_id = record.user_id.as_str();
    let mut transcript = Transcript::new(format!("{user_id}/honest"));
    transcript.record(Direction::UserToServer, &ProtocolMessage::enroll(record.clone()));

    let (m1, state) = user_round1(pk, secrets, b, rng)?;
    transcript.record(Direction::UserToServer, &ProtocolMessage::round1(user_id, m1.clone()));

    let (m2, mut session) = server_round2(pk, sk, record, &m1, rng)?;
    transcript.record(Direction::ServerToUser, &ProtocolMessage::round2(user_id, m2.clone()));

    let m3 = user_round3(&state, &m2)?;
    transcript.record(Direction::UserToServer, &ProtocolMessage::round3(user_id, m3.clone()));

    let decision = server_decide(sk, &mut session, &m3, threshold)?;
    transcript.set_server_ephemerals(session.r_prime().to_vec());
    transcript.set_outcome(decision.clone());
    Ok((decision, transcript))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paillier::keygen_from_primes;
    use crate::rng::InsecureSeededRng;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    fn toy() -> (PublicKey, PrivateKey) {
        keygen_from_primes(&big(3), &big(5)).unwrap()
    }

    fn pow_oracle(base: u64, exp: u64, m: u64) -> u64 {
        (0..exp).fold(1 % m, |acc, _| acc * base % m)
    }

    fn toy_secrets(pk: &PublicKey, x: u64, r: u64) -> UserSecrets {
        UserSecrets::new(pk, vec![big(x)], vec![big(r)]).unwrap()
    }

    #[test]
    fn enroll_toy_example() {
        let (pk, _) = toy();
        let a = FeatureVector::new(vec![3], 16).unwrap();
        let record = enroll_with_secrets(&pk, "u", &a, &toy_secrets(&pk, 8, 2)).unwrap();
        let expected = pow_oracle(16, 11, 225) * pow_oracle(2, 15, 225) % 225;
        assert_eq!(expected, 113);
        assert_eq!(record.c[0].value(), &big(expected));
    }

    #[test]
    fn enroll_zero_template_reveals_x_mod_n() {
        let mut rng = InsecureSeededRng::new_insecure(1);
        let (pk, sk) = paillier::keygen(64, &mut rng).unwrap();
        let a = FeatureVector::new(vec![0; 4], DEFAULT_FEATURE_BOUND).unwrap();
        let (secrets, record) = enroll(&pk, "u", &a, &mut rng).unwrap();
        for (c, x) in record.c.iter().zip(&secrets.x) {
            assert_eq!(paillier::decrypt(&sk, c).unwrap().0, x % pk.n());
        }
    }

    #[test]
    fn feature_vector_validation() {
        assert!(matches!(FeatureVector::new(vec![], 16), Err(ProtocolError::Range(_))));
        assert!(matches!(
            FeatureVector::new(vec![70000], DEFAULT_FEATURE_BOUND),
            Err(ProtocolError::Range(_))
        ));
        assert!(FeatureVector::new(vec![65535], DEFAULT_FEATURE_BOUND).is_ok());
    }

    #[test]
    fn feature_above_n_rejected() {
        let (pk, _) = toy();
        let a = FeatureVector::new(vec![15], 16).unwrap();
        assert!(matches!(
            enroll_with_secrets(&pk, "u", &a, &toy_secrets(&pk, 8, 2)),
            Err(ProtocolError::Range(_))
        ));
    }

    #[test]
    fn no_wrap_check() {
        let mut rng = InsecureSeededRng::new_insecure(2);
        let (pk, _) = paillier::keygen(64, &mut rng).unwrap();
        assert!(check_no_wrap(&pk, 8, DEFAULT_FEATURE_BOUND).is_ok());
        let (small, _) = paillier::keygen(32, &mut rng).unwrap();
        assert!(check_no_wrap(&small, 8, DEFAULT_FEATURE_BOUND).is_err());
    }

    #[test]
    fn round1_toy_example_and_zero_feature() {
        let (pk, sk) = toy();
        let secrets = toy_secrets(&pk, 8, 2);
        let b = FeatureVector::new(vec![2], 16).unwrap();
        let (m1, _) = user_round1_with(&pk, &secrets, &b, &[big(2)]).unwrap();
        let inner = pow_oracle(16, 2, 225) * pow_oracle(2, 15, 225) % 225;
        assert_eq!(m1.c_star[0], big(pow_oracle(inner, 8, 225)));

        let zero = FeatureVector::new(vec![0], 16).unwrap();
        let (m1, _) = user_round1_with(&pk, &secrets, &zero, &[big(2)]).unwrap();
        assert_eq!(m1.c_star[0], big(pow_oracle(2, 15 * 8, 225)));
        assert_eq!(paillier::decrypt_value(&sk, &m1.c_star[0]).unwrap(), big(0));
    }

    #[test]
    fn round1_length_mismatch() {
        let (pk, _) = toy();
        let secrets = toy_secrets(&pk, 8, 2);
        let b = FeatureVector::new(vec![1, 2], 16).unwrap();
        let mut rng = InsecureSeededRng::new_insecure(3);
        assert_eq!(
            user_round1(&pk, &secrets, &b, &mut rng).unwrap_err(),
            ProtocolError::LengthMismatch { expected: 1, got: 2 }
        );
    }

    #[test]
    fn round2_toy_examples() {
        let (pk, sk) = toy();
        let secrets = toy_secrets(&pk, 8, 2);
        let a = FeatureVector::new(vec![3], 16).unwrap();
        let b = FeatureVector::new(vec![2], 16).unwrap();
        let record = enroll_with_secrets(&pk, "u", &a, &secrets).unwrap();
        let (m1, _) = user_round1_with(&pk, &secrets, &b, &[big(2)]).unwrap();

        let (m2, _) = server_round2_with(&pk, &sk, &record, &m1, vec![big(1)]).unwrap();
        assert_eq!(&m2.c_prime[0], record.c[0].value());

        let (m2, session) = server_round2_with(&pk, &sk, &record, &m1, vec![big(7)]).unwrap();
        assert_eq!(m2.c_prime[0], big(pow_oracle(113, 7, 225)));
        assert_eq!(session.r_prime(), &[big(7)]);
        assert_eq!(session.c_star(), m1.c_star.as_slice());

        let bad = Round1Message { c_star: vec![big(3)] };
        assert!(matches!(
            server_round2_with(&pk, &sk, &record, &bad, vec![big(7)]),
            Err(ProtocolError::MalformedMessage(_))
        ));
        let short = Round1Message { c_star: vec![] };
        assert!(matches!(
            server_round2_with(&pk, &sk, &record, &short, vec![]),
            Err(ProtocolError::LengthMismatch { .. })
        ));
        // 6 shares a factor with nλ = 60.
        assert!(matches!(
            server_round2_with(&pk, &sk, &record, &m1, vec![big(6)]),
            Err(ProtocolError::Range(_))
        ));
    }

    #[test]
    fn round3_examples() {
        let (pk, _) = toy();
        let secrets = UserSecrets::new(&pk, vec![big(8); 3], vec![big(2); 3]).unwrap();
        let b = FeatureVector::new(vec![1, 0, 2], 16).unwrap();
        let (_, state) = user_round1_with(&pk, &secrets, &b, &[big(2), big(2), big(2)]).unwrap();
        let c = big(pow_oracle(113, 7, 225));
        let m2 = Round2Message {
            c_prime: vec![c.clone(), c.clone(), c.clone()],
        };
        let m3 = user_round3(&state, &m2).unwrap();
        assert_eq!(m3.d[0], c);
        assert_eq!(m3.d[1], big(1));
        assert_eq!(m3.d[2], big(pow_oracle(pow_oracle(113, 7, 225), 2, 225)));

        let short = Round2Message { c_prime: vec![c] };
        assert!(matches!(
            user_round3(&state, &short),
            Err(ProtocolError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn toy_end_to_end_inner_product() {
        let (pk, sk) = toy();
        let secrets = toy_secrets(&pk, 8, 2);
        let a = FeatureVector::new(vec![3], 16).unwrap();
        let b = FeatureVector::new(vec![2], 16).unwrap();
        let record = enroll_with_secrets(&pk, "u", &a, &secrets).unwrap();
        let (m1, state) = user_round1_with(&pk, &secrets, &b, &[big(2)]).unwrap();
        let (m2, mut session) = server_round2_with(&pk, &sk, &record, &m1, vec![big(7)]).unwrap();
        let m3 = user_round3(&state, &m2).unwrap();
        let decision = server_decide(&sk, &mut session, &m3, &big(6)).unwrap();
        assert_eq!(decision.inner_product, big(6));
        assert!(decision.accepted);
        assert_eq!(session.received_d(), Some(m3.d.as_slice()));
        assert!(matches!(
            server_decide(&sk, &mut session, &m3, &big(6)),
            Err(ProtocolError::State(_))
        ));
    }

    #[test]
    fn decide_examples() {
        let mut rng = InsecureSeededRng::new_insecure(4);
        let (pk, sk) = paillier::keygen(64, &mut rng).unwrap();
        let run = |a: Vec<u64>, b: Vec<u64>, ts: u64, rng: &mut InsecureSeededRng| {
            let a = FeatureVector::new(a, DEFAULT_FEATURE_BOUND).unwrap();
            let b = FeatureVector::new(b, DEFAULT_FEATURE_BOUND).unwrap();
            let (secrets, record) = enroll(&pk, "u", &a, rng).unwrap();
            run_honest_session(&pk, &sk, &record, &secrets, &b, &big(ts), rng)
                .unwrap()
                .0
        };
        let d = run(vec![1, 2, 3], vec![4, 5, 6], 32, &mut rng);
        assert_eq!(d.inner_product, big(32));
        assert!(d.accepted);
        let d = run(vec![1, 2, 3], vec![4, 5, 6], 33, &mut rng);
        assert!(!d.accepted);

        let d = run(vec![9, 9], vec![0, 0], 0, &mut rng);
        assert_eq!(d.inner_product, big(0));
        assert!(d.accepted);
        let d = run(vec![9, 9], vec![0, 0], 1, &mut rng);
        assert!(!d.accepted);

        let d = run(vec![3], vec![2], 0, &mut rng);
        assert_eq!(d.inner_product, big(6));
    }

    #[test]
    fn decide_rejects_non_unit_d() {
        let (pk, sk) = toy();
        let secrets = toy_secrets(&pk, 8, 2);
        let b = FeatureVector::new(vec![2], 16).unwrap();
        let a = FeatureVector::new(vec![3], 16).unwrap();
        let record = enroll_with_secrets(&pk, "u", &a, &secrets).unwrap();
        let (m1, _) = user_round1_with(&pk, &secrets, &b, &[big(2)]).unwrap();
        let (_, mut session) = server_round2_with(&pk, &sk, &record, &m1, vec![big(7)]).unwrap();
        let bad = Round3Message { d: vec![big(5)] };
        assert!(matches!(
            server_decide(&sk, &mut session, &bad, &big(0)),
            Err(ProtocolError::MalformedMessage(_))
        ));
    }

    #[test]
    fn blinding_does_not_change_the_result() {
        let mut rng = InsecureSeededRng::new_insecure(5);
        let (pk, sk) = paillier::keygen(128, &mut rng).unwrap();
        let a = FeatureVector::random(8, 0, DEFAULT_FEATURE_BOUND, &mut rng).unwrap();
        let b = FeatureVector::random(8, 0, DEFAULT_FEATURE_BOUND, &mut rng).unwrap();
        let (secrets, record) = enroll(&pk, "u", &a, &mut rng).unwrap();
        let mut outcomes = Vec::new();
        let mut wires = Vec::new();
        for seed in 10..13 {
            let mut session_rng = InsecureSeededRng::new_insecure(seed);
            let (d, t) = run_honest_session(&pk, &sk, &record, &secrets, &b, &big(0), &mut session_rng).unwrap();
            outcomes.push(d.inner_product);
            wires.push(t.entries()[1].raw.clone());
        }
        assert!(outcomes.iter().all(|v| *v == a.inner_product(&b)));
        assert_ne!(wires[0], wires[1]);
        assert_ne!(wires[1], wires[2]);
    }

    #[test]
    fn every_wire_message_is_a_unit() {
        let mut rng = InsecureSeededRng::new_insecure(6);
        let (pk, sk) = paillier::keygen(64, &mut rng).unwrap();
        for _ in 0..20 {
            let a = FeatureVector::random(8, 0, DEFAULT_FEATURE_BOUND, &mut rng).unwrap();
            let b = FeatureVector::random(8, 0, DEFAULT_FEATURE_BOUND, &mut rng).unwrap();
            let (secrets, record) = enroll(&pk, "u", &a, &mut rng).unwrap();
            let (m1, state) = user_round1(&pk, &secrets, &b, &mut rng).unwrap();
            let (m2, mut session) = server_round2(&pk, &sk, &record, &m1, &mut rng).unwrap();
            let m3 = user_round3(&state, &m2).unwrap();
            for values in [&m1.c_star, &m2.c_prime, &m3.d] {
                assert_eq!(values.len(), 8);
                assert!(values.iter().all(|v| pk.is_ciphertext_unit(v)));
            }
            let order = sk.n_lambda();
            assert!(session.r_prime().iter().all(|r| modmath::gcd(r, &order).is_one()));
            let d = server_decide(&sk, &mut session, &m3, &big(0)).unwrap();
            assert_eq!(d.inner_product, a.inner_product(&b));
        }
    }
}
