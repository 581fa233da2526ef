//! The three node roles of the aggregation tree.
//!
//! Leaves encrypt and sign their reading and hand the message to their
//! parent. Aggregating parents fold children's ciphertexts, signature
//! scalars, and verification keys together (optionally mixing in their own
//! reading) without ever touching a plaintext. The base station decrypts
//! the single incoming aggregate and verifies one summed signature.
//!
//! Verification runs in one of two modes. *Permissive* trusts the combined
//! verification key carried in the message — exactly the over-the-wire
//! scheme, and forgeable by a compromised aggregator that rewrites key,
//! signature, and ciphertext together. *Strict* recomputes the key sum
//! from the deployment registry over the declared contributor set, closing
//! that hole at the cost of shipping contributor ids.

use crate::curve::{CurveError, CurveParams};
use crate::numeric::Rng;
use crate::ou::{self, OuCiphertext, OuError, OuPrivateKey, OuPublicKey};
use crate::sig::{self, AggSignature, EpochNonce, SigError, SigningKey, VerifyKey};
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Wire format version emitted and accepted by this crate.
pub const WIRE_VERSION: u8 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("reading {reading} exceeds the deployment maximum {max}")]
    ReadingOutOfRange { reading: u64, max: u64 },
    #[error("operation not available to this node role")]
    RoleMismatch,
    #[error("aggregation requires at least one child message")]
    NoChildren,
    #[error("epoch mismatch: expected {expected}, got {got}")]
    EpochMismatch { expected: u64, got: u64 },
    #[error("node {0} appears in more than one contributor set")]
    DuplicateContributor(u16),
    #[error("contributor count times max reading reaches the plaintext capacity")]
    CapacityExceeded,
    #[error("contributor {0} is not in the deployment registry")]
    UnknownContributor(u16),
    #[error("malformed message: {0}")]
    MalformedMessage(String),
    #[error("invalid deployment: {0}")]
    DeploymentInvalid(String),
    #[error("epoch aborted: {0}")]
    EpochAbort(SigError),
    #[error(transparent)]
    Ou(#[from] OuError),
    #[error(transparent)]
    Sig(SigError),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Degenerate signature outcomes invalidate the shared nonce for everyone,
/// so they surface as epoch aborts; anything else is a plain error.
fn map_sig(e: SigError) -> ProtocolError {
    match e {
        SigError::DegenerateSignature
        | SigError::DegenerateAggregate
        | SigError::DegenerateKeySum
        | SigError::DegenerateNonce => ProtocolError::EpochAbort(e),
        other => ProtocolError::Sig(other),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Leaf,
    Aggregator,
    Base,
}

/// A node's identity and key material.
#[derive(Debug, Clone)]
pub struct NodeIdentity {
    pub id: u16,
    pub signing: SigningKey,
    pub verify: VerifyKey,
    pub role: Role,
}

/// The unit a node sends its parent: epoch id, the ids whose readings are
/// folded in, the combined ciphertext, the summed signature, and the
/// summed verification key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggMessage {
    pub version: u8,
    pub epoch_id: u64,
    pub contributors: BTreeSet<u16>,
    pub ct: OuCiphertext,
    pub sig: AggSignature,
    pub key: VerifyKey,
}

/// Static deployment context shared by every node: curve, the base
/// station's encryption key, the verification-key registry, and the
/// per-reading bound.
#[derive(Debug, Clone)]
pub struct Deployment {
    curve: CurveParams,
    ou_pk: OuPublicKey,
    registry: BTreeMap<u16, VerifyKey>,
    max_reading: u64,
    strict: bool,
}

/// What the base station reports for one epoch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochResult {
    pub sum: BigUint,
    pub verified: bool,
    pub contributors: BTreeSet<u16>,
}

impl Deployment {
    /// Validates the capacity budget: every possible aggregate
    /// (`registry size × max_reading`) must stay below both the OU
    /// plaintext capacity and the curve order, so sums decrypt exactly
    /// and signatures bind them without wraparound.
    pub fn new(
        curve: CurveParams,
        ou_pk: OuPublicKey,
        registry: BTreeMap<u16, VerifyKey>,
        max_reading: u64,
        strict: bool,
    ) -> Result<Self, ProtocolError> {
        if registry.is_empty() {
            return Err(ProtocolError::DeploymentInvalid(
                "registry must cover the non-base nodes".into(),
            ));
        }
        let worst_sum = BigUint::from(registry.len() as u64) * BigUint::from(max_reading);
        if &worst_sum >= ou_pk.capacity() {
            return Err(ProtocolError::DeploymentInvalid(format!(
                "node count times max_reading ({worst_sum}) reaches the OU capacity"
            )));
        }
        if &worst_sum >= curve.order() {
            return Err(ProtocolError::DeploymentInvalid(format!(
                "node count times max_reading ({worst_sum}) reaches the curve order"
            )));
        }
        for (id, key) in &registry {
            curve
                .validate_point(key.point())
                .map_err(|_| ProtocolError::DeploymentInvalid(format!("key for node {id} is off-curve")))?;
        }
        Ok(Deployment {
            curve,
            ou_pk,
            registry,
            max_reading,
            strict,
        })
    }

    pub fn curve(&self) -> &CurveParams {
        &self.curve
    }

    pub fn ou_public(&self) -> &OuPublicKey {
        &self.ou_pk
    }

    pub fn registry(&self) -> &BTreeMap<u16, VerifyKey> {
        &self.registry
    }

    pub fn max_reading(&self) -> u64 {
        self.max_reading
    }

    pub fn strict(&self) -> bool {
        self.strict
    }
}

/// Encrypt-and-sign for a single reading (Algorithm-1 steps on one node).
fn emit_own(
    node: &NodeIdentity,
    reading: u64,
    nonce: &EpochNonce,
    dep: &Deployment,
    rng: &mut Rng,
) -> Result<(OuCiphertext, BigUint), ProtocolError> {
    if reading > dep.max_reading {
        return Err(ProtocolError::ReadingOutOfRange {
            reading,
            max: dep.max_reading,
        });
    }
    let m = BigUint::from(reading);
    let ct = ou::ou_encrypt(&dep.ou_pk, &m, rng)?;
    let s = sig::sign(&dep.curve, &node.signing, &m, nonce).map_err(map_sig)?;
    Ok((ct, s))
}

/// A sensor node's outgoing message for its own reading alone.
pub fn leaf_emit(
    node: &NodeIdentity,
    reading: u64,
    nonce: &EpochNonce,
    dep: &Deployment,
    rng: &mut Rng,
) -> Result<AggMessage, ProtocolError> {
    if node.role == Role::Base {
        return Err(ProtocolError::RoleMismatch);
    }
    let (ct, s) = emit_own(node, reading, nonce, dep, rng)?;
    let sig = sig::combine_sigs(&dep.curve, &[s]).map_err(map_sig)?;
    Ok(AggMessage {
        version: WIRE_VERSION,
        epoch_id: nonce.epoch_id(),
        contributors: BTreeSet::from([node.id]),
        ct,
        sig,
        key: node.verify.clone(),
    })
}

/// An aggregating parent's combination step: fold the children's
/// ciphertexts, signatures, and keys, plus optionally its own reading.
pub fn aggregate(
    node: &NodeIdentity,
    own_reading: Option<u64>,
    children: &[AggMessage],
    nonce: &EpochNonce,
    dep: &Deployment,
    rng: &mut Rng,
) -> Result<AggMessage, ProtocolError> {
    if node.role != Role::Aggregator {
        return Err(ProtocolError::RoleMismatch);
    }
    if children.is_empty() {
        return Err(ProtocolError::NoChildren);
    }
    let mut contributors: BTreeSet<u16> = BTreeSet::new();
    for child in children {
        if child.epoch_id != nonce.epoch_id() {
            return Err(ProtocolError::EpochMismatch {
                expected: nonce.epoch_id(),
                got: child.epoch_id,
            });
        }
        if child.sig.count() != child.contributors.len() {
            return Err(ProtocolError::MalformedMessage(
                "signature count disagrees with contributor set".into(),
            ));
        }
        for &id in &child.contributors {
            if !contributors.insert(id) {
                return Err(ProtocolError::DuplicateContributor(id));
            }
        }
    }
    if own_reading.is_some() && !contributors.insert(node.id) {
        return Err(ProtocolError::DuplicateContributor(node.id));
    }

    let budget = BigUint::from(contributors.len() as u64) * BigUint::from(dep.max_reading);
    if &budget >= dep.ou_pk.capacity() {
        return Err(ProtocolError::CapacityExceeded);
    }

    let mut cts: Vec<OuCiphertext> = children.iter().map(|c| c.ct.clone()).collect();
    let mut sigs: Vec<AggSignature> = children.iter().map(|c| c.sig.clone()).collect();
    let mut keys: Vec<VerifyKey> = children.iter().map(|c| c.key.clone()).collect();
    if let Some(reading) = own_reading {
        let (ct, s) = emit_own(node, reading, nonce, dep, rng)?;
        cts.push(ct);
        sigs.push(sig::combine_sigs(&dep.curve, &[s]).map_err(map_sig)?);
        keys.push(node.verify.clone());
    }

    let ct = ou::ou_add_many(&dep.ou_pk, &cts)?;
    let sig = AggSignature::combine(&dep.curve, &sigs).map_err(map_sig)?;
    let key = sig::combine_keys(&dep.curve, &keys).map_err(map_sig)?;
    Ok(AggMessage {
        version: WIRE_VERSION,
        epoch_id: nonce.epoch_id(),
        contributors,
        ct,
        sig,
        key,
    })
}

/// The base station's epoch ending: decrypt the aggregate and verify the
/// summed signature against either the carried key (permissive) or the
/// registry-derived key over the declared contributors (strict).
pub fn base_receive(
    dep: &Deployment,
    sk: &OuPrivateKey,
    nonce: &EpochNonce,
    msg: &AggMessage,
) -> Result<EpochResult, ProtocolError> {
    if msg.epoch_id != nonce.epoch_id() {
        return Err(ProtocolError::EpochMismatch {
            expected: nonce.epoch_id(),
            got: msg.epoch_id,
        });
    }
    if msg.contributors.is_empty() {
        return Err(ProtocolError::MalformedMessage("empty contributor set".into()));
    }
    if msg.sig.count() != msg.contributors.len() {
        return Err(ProtocolError::MalformedMessage(
            "signature count disagrees with contributor set".into(),
        ));
    }
    let sum = ou::ou_decrypt(sk, &msg.ct)?;
    let effective_key = if dep.strict {
        let mut keys = Vec::with_capacity(msg.contributors.len());
        for id in &msg.contributors {
            let key = dep
                .registry
                .get(id)
                .ok_or(ProtocolError::UnknownContributor(*id))?;
            keys.push(key.clone());
        }
        sig::combine_keys(&dep.curve, &keys).map_err(map_sig)?
    } else {
        msg.key.clone()
    };
    let reduced = &sum % dep.curve.order();
    let verified = sig::verify(&dep.curve, &reduced, &msg.sig, &effective_key, nonce.r_x());
    Ok(EpochResult {
        sum,
        verified,
        contributors: msg.contributors.clone(),
    })
}
