//! Byte-exact message codec for the upward tree links.
//!
//! Layout, all integers big-endian:
//!
//! ```text
//! version        1 byte   (always 0x01)
//! epoch_id       8 bytes
//! count          2 bytes  number of contributor ids
//! contributors   2 bytes each, strictly ascending
//! ct_len         2 bytes
//! ct             ct_len bytes, minimal (no leading zero byte)
//! s              ceil(bits(order)/8) bytes, fixed width
//! key            0x04 ‖ X ‖ Y, each coordinate ceil(bits(q)/8) bytes
//! ```
//!
//! Ascending contributor order and minimal ciphertext bytes make the
//! encoding canonical: `encode` is injective on valid messages and
//! `decode(encode(m)) = m` bit-for-bit.

use crate::curve::Point;
use crate::protocol::{AggMessage, Deployment, WIRE_VERSION};
use crate::sig::{self, AggSignature, VerifyKey};
use crate::ou::OuCiphertext;
use num_bigint::BigUint;
use num_traits::Zero;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("buffer ends before the message does")]
    Truncated,
    #[error("unconsumed bytes after the message")]
    TrailingBytes,
    #[error("unsupported wire version {0}")]
    UnsupportedVersion(u8),
    #[error("contributor set is empty")]
    EmptyContributors,
    #[error("contributor ids are not strictly ascending")]
    NonCanonicalContributors,
    #[error("ciphertext has a non-minimal encoding")]
    NonCanonicalCiphertext,
    #[error("ciphertext is not a unit in [1, n)")]
    InvalidCiphertext,
    #[error("signature scalar out of range [1, order)")]
    InvalidScalar,
    #[error("verification key is not an uncompressed point encoding")]
    InvalidPointEncoding,
    #[error("verification key is off the curve")]
    PointOffCurve,
}

impl AggMessage {
    /// Serializes into the canonical byte layout.
    pub fn encode(&self, dep: &Deployment) -> Vec<u8> {
        let curve = dep.curve();
        let field_len = curve.field_byte_len();
        let ct_bytes = self.ct.residue().to_bytes_be();
        let mut out = Vec::with_capacity(
            1 + 8 + 2 + 2 * self.contributors.len() + 2 + ct_bytes.len() + curve.scalar_byte_len() + 1 + 2 * field_len,
        );
        out.push(self.version);
        out.extend_from_slice(&self.epoch_id.to_be_bytes());
        out.extend_from_slice(&(self.contributors.len() as u16).to_be_bytes());
        for id in &self.contributors {
            out.extend_from_slice(&id.to_be_bytes());
        }
        out.extend_from_slice(&(ct_bytes.len() as u16).to_be_bytes());
        out.extend_from_slice(&ct_bytes);
        out.extend_from_slice(&sig::scalar_to_bytes(curve, self.sig.scalar()));
        match self.key.point() {
            Point::Affine { x, y } => {
                out.push(0x04);
                out.extend_from_slice(&fixed_width(x, field_len));
                out.extend_from_slice(&fixed_width(y, field_len));
            }
            Point::Infinity => unreachable!("verification keys are never infinity"),
        }
        out
    }

    /// Parses and validates a message against the deployment's curve and
    /// encryption modulus. Requires exact framing: trailing bytes fail.
    pub fn decode(bytes: &[u8], dep: &Deployment) -> Result<AggMessage, WireError> {
        let curve = dep.curve();
        let mut cur = Cursor { bytes, pos: 0 };

        let version = cur.take(1)?[0];
        if version != WIRE_VERSION {
            return Err(WireError::UnsupportedVersion(version));
        }
        let epoch_id = u64::from_be_bytes(cur.take(8)?.try_into().expect("8 bytes"));
        let count = u16::from_be_bytes(cur.take(2)?.try_into().expect("2 bytes"));
        if count == 0 {
            return Err(WireError::EmptyContributors);
        }
        let mut contributors = BTreeSet::new();
        let mut prev: Option<u16> = None;
        for _ in 0..count {
            let id = u16::from_be_bytes(cur.take(2)?.try_into().expect("2 bytes"));
            if let Some(p) = prev {
                if id <= p {
                    return Err(WireError::NonCanonicalContributors);
                }
            }
            prev = Some(id);
            contributors.insert(id);
        }

        let ct_len = u16::from_be_bytes(cur.take(2)?.try_into().expect("2 bytes")) as usize;
        let ct_bytes = cur.take(ct_len)?;
        if ct_len == 0 || ct_bytes[0] == 0 {
            return Err(WireError::NonCanonicalCiphertext);
        }
        let ct_value = BigUint::from_bytes_be(ct_bytes);
        let ct = OuCiphertext::from_residue(dep.ou_public(), ct_value)
            .map_err(|_| WireError::InvalidCiphertext)?;

        let s_bytes = cur.take(curve.scalar_byte_len())?;
        let s = BigUint::from_bytes_be(s_bytes);
        let sig = AggSignature::from_parts(curve, s, count as usize)
            .map_err(|_| WireError::InvalidScalar)?;

        let prefix = cur.take(1)?[0];
        if prefix != 0x04 {
            return Err(WireError::InvalidPointEncoding);
        }
        let field_len = curve.field_byte_len();
        let x = BigUint::from_bytes_be(cur.take(field_len)?);
        let y = BigUint::from_bytes_be(cur.take(field_len)?);
        if x >= *curve.q() || y >= *curve.q() {
            return Err(WireError::PointOffCurve);
        }
        let point = Point::affine(x, y);
        let key =
            VerifyKey::from_point(curve, point).map_err(|_| WireError::PointOffCurve)?;

        if cur.pos != bytes.len() {
            return Err(WireError::TrailingBytes);
        }
        Ok(AggMessage {
            version,
            epoch_id,
            contributors,
            ct,
            sig,
            key,
        })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.pos + n > self.bytes.len() {
            return Err(WireError::Truncated);
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }
}

fn fixed_width(value: &BigUint, width: usize) -> Vec<u8> {
    if value.is_zero() {
        return vec![0u8; width];
    }
    let raw = value.to_bytes_be();
    let mut out = vec![0u8; width];
    out[width - raw.len()..].copy_from_slice(&raw);
    out
}
