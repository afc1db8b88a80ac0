//! Honest-but-curious authentication server.
//!
//! Everything here runs on data the AS legitimately holds after one honest
//! session: its private key, the enrollment record, the round-1 and round-3
//! messages, and its own blinding vector `r'`. No user secret is ever an input.
//!
//! ```text
//! s_j  = Dec(c_j)                          = a_j + x_j        (mod n)
//! D_j  = Dec(d_j^(r'_j^-1 mod nλ))         = s_j b_j          (mod n)
//! b_j  = D_j · s_j^-1
//! bx_j = Dec(c*_j)                         = b_j x_j          (mod n)
//! x_j  = bx_j · b_j^-1,   a_j = s_j - x_j
//! ```
//!
//! `x` is recovered mod `n`. That is its whole effective value: `x` only ever
//! appears as an exponent of `g`, which has order `n`, so any `x'` with the
//! same residue produces identical ciphertext plaintexts.

use num_bigint::BigUint;
use num_traits::Zero;

use super::{check_len, AttackError, AttackKind, AttackReport, Quantity, Recovered, RecoveryFlag};
use crate::modmath;
use crate::paillier::{self, PrivateKey};
use crate::protocol::{EnrollmentRecord, Round1Message, Round3Message, ServerSession};

/// Exactly what a protocol-abiding AS holds after one session.
#[derive(Debug, Clone)]
pub struct CuriousServerView {
    pub sk: PrivateKey,
    pub record: EnrollmentRecord,
    pub round1: Round1Message,
    pub round3: Round3Message,
    pub r_prime: Vec<BigUint>,
}

impl CuriousServerView {
    pub fn from_session(
        sk: &PrivateKey,
        record: &EnrollmentRecord,
        session: &ServerSession,
        round3: &Round3Message,
    ) -> Self {
        CuriousServerView {
            sk: sk.clone(),
            record: record.clone(),
            round1: Round1Message {
                c_star: session.c_star().to_vec(),
            },
            round3: round3.clone(),
            r_prime: session.r_prime().to_vec(),
        }
    }

    fn t(&self) -> usize {
        self.record.c.len()
    }

    fn check_shape(&self) -> Result<(), AttackError> {
        let t = self.t();
        check_len(t, self.round1.c_star.len())?;
        check_len(t, self.round3.d.len())?;
        check_len(t, self.r_prime.len())
    }
}

/// `s_j = (a_j + x_j) mod n`, by decrypting the enrollment record.
pub fn curious_recover_sums(sk: &PrivateKey, record: &EnrollmentRecord) -> Result<Vec<BigUint>, AttackError> {
    record
        .c
        .iter()
        .map(|c| paillier::decrypt(sk, c).map(|m| m.0).map_err(AttackError::from))
        .collect()
}

/// Sampled features `b`, using the sums `s` from [`curious_recover_sums`].
pub fn curious_recover_b(
    view: &CuriousServerView,
    sums: &[BigUint],
    flags: &mut Vec<RecoveryFlag>,
) -> Result<Recovered, AttackError> {
    view.check_shape()?;
    check_len(view.t(), sums.len())?;
    let sk = &view.sk;
    let n = sk.n();
    let order = sk.n_lambda();

    let mut out = Vec::with_capacity(view.t());
    for (j, ((d, r), s)) in view.round3.d.iter().zip(&view.r_prime).zip(sums).enumerate() {
        let unblind = modmath::mod_inv(r, &order)
            .map_err(|e| AttackError::State(format!("r'[{j}] is not invertible mod n*lambda: {e}")))?;
        let product = paillier::decrypt_value(sk, &d.modpow(&unblind, sk.n_squared()))?;
        match modmath::mod_inv(s, n) {
            Ok(s_inv) => out.push(Some((product * s_inv) % n)),
            Err(e) => {
                flags.push(RecoveryFlag {
                    quantity: Quantity::B,
                    index: j,
                    reason: format!("a + x is not a unit mod n: {e}"),
                });
                out.push(None);
            }
        }
    }
    Ok(out)
}

/// `x mod n` and `a` from round 1, given the sums and the recovered `b`.
pub fn curious_recover_x_and_a(
    view: &CuriousServerView,
    sums: &[BigUint],
    b: &[Option<BigUint>],
    flags: &mut Vec<RecoveryFlag>,
) -> Result<(Recovered, Recovered), AttackError> {
    view.check_shape()?;
    check_len(view.t(), sums.len())?;
    check_len(view.t(), b.len())?;
    let sk = &view.sk;
    let n = sk.n();

    let mut xs = Vec::with_capacity(view.t());
    let mut as_ = Vec::with_capacity(view.t());
    for (j, ((c_star, s), b_j)) in view.round1.c_star.iter().zip(sums).zip(b).enumerate() {
        let bx = paillier::decrypt_value(sk, c_star)?;
        let b_inv = match b_j {
            None => Err("b is unrecoverable".to_owned()),
            Some(b) if b.is_zero() => Err("b = 0 carries no information on x".to_owned()),
            Some(b) => modmath::mod_inv(b, n).map_err(|e| format!("b is not a unit mod n: {e}")),
        };
        match b_inv {
            Ok(b_inv) => {
                let x = (bx * b_inv) % n;
                let a = ((s + n) - &x) % n;
                xs.push(Some(x));
                as_.push(Some(a));
            }
            Err(reason) => {
                for quantity in [Quantity::X, Quantity::A] {
                    flags.push(RecoveryFlag {
                        quantity,
                        index: j,
                        reason: reason.clone(),
                    });
                }
                xs.push(None);
                as_.push(None);
            }
        }
    }
    Ok((xs, as_))
}

/// Full recovery chain.
pub fn curious_server_attack(view: &CuriousServerView) -> Result<AttackReport, AttackError> {
    let mut flags = Vec::new();
    let sums = curious_recover_sums(&view.sk, &view.record)?;
    let b = curious_recover_b(view, &sums, &mut flags)?;
    let (x, a) = curious_recover_x_and_a(view, &sums, &b, &mut flags)?;
    Ok(AttackReport {
        attack: AttackKind::CuriousServer,
        recovered_b: b,
        recovered_x_mod_n: Some(x),
        recovered_a: Some(a),
        verified: false,
        flags,
    })
}
