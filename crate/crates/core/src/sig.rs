//! ECDSA-style signatures that add up across signers.
//!
//! All signers in an epoch share one ephemeral nonce `k` (with
//! `R = k·T` and `r_x = R.x mod order`), distributed by a trusted epoch
//! authority. Each node signs its raw reading `m` as
//! `s = k⁻¹·(m + z·r_x) mod order`. Because `k` and `r_x` are common,
//! signature scalars and public keys aggregate by plain addition:
//! `Σsᵢ = k⁻¹·(Σmᵢ + (Σzᵢ)·r_x)`, so the verifier runs one standard
//! ECDSA-shaped check against the summed key and the summed plaintext.
//!
//! Two deliberate deviations from textbook ECDSA, kept for fidelity to the
//! aggregation scheme, and both security-relevant:
//!
//! * the message is the raw reading, not a hash of it;
//! * `k` is shared across signers, so any node that sees another's `s`
//!   can recover that node's long-term key. The epoch authority model
//!   accepts this; do not reuse this construction where signers distrust
//!   each other.
//!
//! Degenerate draws (`r_x = 0`, `s = 0`, key sums hitting infinity) abort
//! the epoch; callers restart with a fresh nonce.

use crate::curve::{CurveError, CurveParams, Point};
use crate::numeric::{self, Rng};
use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SigError {
    #[error("signature scalar collapsed to zero; restart the epoch")]
    DegenerateSignature,
    #[error("aggregate signature collapsed to zero; restart the epoch")]
    DegenerateAggregate,
    #[error("verification-key sum is the point at infinity; restart the epoch")]
    DegenerateKeySum,
    #[error("epoch nonce has r_x = 0")]
    DegenerateNonce,
    #[error("sequence is empty")]
    EmptySequence,
    #[error("scalar out of range [1, order)")]
    ScalarOutOfRange,
    #[error("message scalar out of range [0, order)")]
    MessageOutOfRange,
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Long-term secret scalar `z` in `[1, order)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigningKey {
    z: BigUint,
}

/// Public key `Z = z·T`. Never the point at infinity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyKey {
    point: Point,
}

/// Per-epoch shared nonce: secret `k`, commitment `R = k·T`, and
/// `r_x = R.x mod order` (guaranteed nonzero by construction).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochNonce {
    epoch_id: u64,
    k: BigUint,
    r_point: Point,
    r_x: BigUint,
}

/// Sum of component signature scalars plus how many went in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggSignature {
    s: BigUint,
    count: usize,
}

impl SigningKey {
    pub fn scalar(&self) -> &BigUint {
        &self.z
    }

    /// Deterministic construction from a known scalar (fixtures, key files).
    pub fn from_scalar(curve: &CurveParams, z: BigUint) -> Result<(SigningKey, VerifyKey), SigError> {
        if z.is_zero() || &z >= curve.order() {
            return Err(SigError::ScalarOutOfRange);
        }
        let point = curve.scalar_mul(&z, curve.base())?;
        Ok((SigningKey { z }, VerifyKey { point }))
    }
}

impl VerifyKey {
    pub fn point(&self) -> &Point {
        &self.point
    }

    pub fn from_point(curve: &CurveParams, point: Point) -> Result<Self, SigError> {
        if point.is_infinity() {
            return Err(SigError::DegenerateKeySum);
        }
        curve.validate_point(&point)?;
        Ok(VerifyKey { point })
    }
}

impl EpochNonce {
    pub fn epoch_id(&self) -> u64 {
        self.epoch_id
    }

    pub fn k(&self) -> &BigUint {
        &self.k
    }

    pub fn r_point(&self) -> &Point {
        &self.r_point
    }

    pub fn r_x(&self) -> &BigUint {
        &self.r_x
    }

    /// Fixture path: build the nonce from a known `k`.
    pub fn from_k(curve: &CurveParams, epoch_id: u64, k: BigUint) -> Result<Self, SigError> {
        if k.is_zero() || &k >= curve.order() {
            return Err(SigError::ScalarOutOfRange);
        }
        let r_point = curve.scalar_mul(&k, curve.base())?;
        let r_x = curve.x_mod_order(&r_point).map_err(SigError::Curve)?;
        if r_x.is_zero() {
            return Err(SigError::DegenerateNonce);
        }
        Ok(EpochNonce {
            epoch_id,
            k,
            r_point,
            r_x,
        })
    }
}

/// Fresh signing keypair with `z` uniform in `[1, order)`.
pub fn keygen(curve: &CurveParams, rng: &mut Rng) -> (SigningKey, VerifyKey) {
    let z = numeric::rand_range(rng, &BigUint::one(), curve.order())
        .expect("order is above 1");
    SigningKey::from_scalar(curve, z).expect("scalar drawn in range")
}

/// Draws the shared epoch nonce, resampling until `r_x != 0`.
pub fn epoch_setup(curve: &CurveParams, epoch_id: u64, rng: &mut Rng) -> EpochNonce {
    loop {
        let k = numeric::rand_range(rng, &BigUint::one(), curve.order())
            .expect("order is above 1");
        match EpochNonce::from_k(curve, epoch_id, k) {
            Ok(nonce) => return nonce,
            Err(SigError::DegenerateNonce) => continue,
            Err(e) => unreachable!("nonce construction failed: {e}"),
        }
    }
}

/// `s = k⁻¹·(m + z·r_x) mod order`.
pub fn sign(
    curve: &CurveParams,
    sk: &SigningKey,
    m: &BigUint,
    nonce: &EpochNonce,
) -> Result<BigUint, SigError> {
    let order = curve.order();
    if m >= order {
        return Err(SigError::MessageOutOfRange);
    }
    let k_inv = numeric::mod_inv(&nonce.k, order).expect("k in [1, order), order prime");
    let s = k_inv * ((m + &sk.z * &nonce.r_x) % order) % order;
    if s.is_zero() {
        return Err(SigError::DegenerateSignature);
    }
    Ok(s)
}

/// Sums component signature scalars mod the order.
pub fn combine_sigs(curve: &CurveParams, sigs: &[BigUint]) -> Result<AggSignature, SigError> {
    if sigs.is_empty() {
        return Err(SigError::EmptySequence);
    }
    let order = curve.order();
    let mut sum = BigUint::zero();
    for s in sigs {
        if s.is_zero() || s >= order {
            return Err(SigError::ScalarOutOfRange);
        }
        sum = (sum + s) % order;
    }
    if sum.is_zero() {
        return Err(SigError::DegenerateAggregate);
    }
    Ok(AggSignature {
        s: sum,
        count: sigs.len(),
    })
}

/// Point-sum of verification keys.
pub fn combine_keys(curve: &CurveParams, keys: &[VerifyKey]) -> Result<VerifyKey, SigError> {
    if keys.is_empty() {
        return Err(SigError::EmptySequence);
    }
    let mut sum = Point::Infinity;
    for key in keys {
        sum = curve.point_add(&sum, &key.point)?;
    }
    if sum.is_infinity() {
        return Err(SigError::DegenerateKeySum);
    }
    Ok(VerifyKey { point: sum })
}

impl AggSignature {
    pub fn scalar(&self) -> &BigUint {
        &self.s
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Wraps an already-summed scalar (wire decoding).
    pub fn from_parts(curve: &CurveParams, s: BigUint, count: usize) -> Result<Self, SigError> {
        if s.is_zero() || &s >= curve.order() {
            return Err(SigError::ScalarOutOfRange);
        }
        if count == 0 {
            return Err(SigError::EmptySequence);
        }
        Ok(AggSignature { s, count })
    }

    /// Merges partial aggregates: scalar sums add, counts add.
    pub fn combine(curve: &CurveParams, parts: &[AggSignature]) -> Result<AggSignature, SigError> {
        if parts.is_empty() {
            return Err(SigError::EmptySequence);
        }
        let order = curve.order();
        let mut sum = BigUint::zero();
        let mut count = 0usize;
        for part in parts {
            sum = (sum + &part.s) % order;
            count += part.count;
        }
        if sum.is_zero() {
            return Err(SigError::DegenerateAggregate);
        }
        Ok(AggSignature { s: sum, count })
    }
}

/// The base-station check: `w = s⁻¹`, `u₁ = m·w`, `u₂ = r_x·w`,
/// `X = u₁·T + u₂·Z`, accept iff `X ≠ ∞` and `X.x mod order = r_x`.
/// Malformed inputs reject rather than raise.
pub fn verify(
    curve: &CurveParams,
    m: &BigUint,
    sig: &AggSignature,
    key: &VerifyKey,
    r_x: &BigUint,
) -> bool {
    let order = curve.order();
    if m >= order || r_x.is_zero() || r_x >= order {
        return false;
    }
    if sig.s.is_zero() || &sig.s >= order {
        return false;
    }
    let w = match numeric::mod_inv(&sig.s, order) {
        Ok(w) => w,
        Err(_) => return false,
    };
    let u1 = m * &w % order;
    let u2 = r_x * &w % order;
    let lhs = match curve.scalar_mul(&u1, curve.base()) {
        Ok(p) => p,
        Err(_) => return false,
    };
    let rhs = match curve.scalar_mul(&u2, &key.point) {
        Ok(p) => p,
        Err(_) => return false,
    };
    let x_point = match curve.point_add(&lhs, &rhs) {
        Ok(p) => p,
        Err(_) => return false,
    };
    match curve.x_mod_order(&x_point) {
        Ok(x) => &x == r_x,
        Err(_) => false, // X = ∞
    }
}

/// Fixed-width big-endian scalar encoding of length
/// `ceil(bits(order)/8)`.
pub fn scalar_to_bytes(curve: &CurveParams, s: &BigUint) -> Vec<u8> {
    let width = curve.scalar_byte_len();
    let raw = s.to_bytes_be();
    let mut out = vec![0u8; width];
    out[width - raw.len()..].copy_from_slice(&raw);
    out
}

pub fn scalar_from_bytes(curve: &CurveParams, bytes: &[u8]) -> Result<BigUint, SigError> {
    if bytes.len() != curve.scalar_byte_len() {
        return Err(SigError::ScalarOutOfRange);
    }
    Ok(BigUint::from_bytes_be(bytes))
}
