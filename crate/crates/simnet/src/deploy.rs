//! Materializes a scenario into key material and a protocol deployment,
//! and reads/writes the deployment and key files emitted by `keygen`.
//!
//! Key derivation order from the seed is fixed: encryption keypair first,
//! then per-node signing keys in ascending id order. Reading draws and
//! epoch nonces consume the same stream afterwards, so a scenario pins
//! the entire run.

use crate::scenario::{ParamSet, Scenario};
use crate::topology::Topology;
use num_bigint::BigUint;
use num_traits::Num;
use secagg_core::curve::{CurveParams, Point};
use secagg_core::numeric::Rng;
use secagg_core::ou::{OuKeyPair, OuPrivateRecord, OuPublicRecord};
use secagg_core::protocol::{Deployment, NodeIdentity, ProtocolError, Role};
use secagg_core::sig::{self, SigningKey, VerifyKey};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Per-prime bit length of the standard encryption keys: a 1536-bit
/// modulus n = p²q.
pub const STANDARD_OU_BITS: u64 = 512;

#[derive(Debug, Error)]
pub enum DeployError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("deployment record: {0}")]
    Record(String),
    #[error(transparent)]
    Ou(#[from] secagg_core::OuError),
}

/// Everything the simulator needs to run epochs.
pub struct Materials {
    pub deployment: Deployment,
    pub ou: OuKeyPair,
    pub nodes: BTreeMap<u16, NodeIdentity>,
}

pub fn curve_for(params: ParamSet) -> CurveParams {
    match params {
        ParamSet::Toy => CurveParams::toy(),
        ParamSet::Standard => CurveParams::secp256r1(),
    }
}

pub fn ou_for(params: ParamSet, rng: &mut Rng) -> OuKeyPair {
    match params {
        ParamSet::Toy => OuKeyPair::toy(),
        ParamSet::Standard => {
            OuKeyPair::generate(STANDARD_OU_BITS, rng).expect("standard keygen parameters valid")
        }
    }
}

/// Derives the full deployment for a scenario.
pub fn build_materials(
    scenario: &Scenario,
    topology: &Topology,
    rng: &mut Rng,
) -> Result<Materials, DeployError> {
    let curve = curve_for(scenario.params);
    let ou = ou_for(scenario.params, rng);
    let mut registry = BTreeMap::new();
    let mut nodes = BTreeMap::new();
    for id in 1..topology.node_count() as u16 {
        let (signing, verify) = sig::keygen(&curve, rng);
        registry.insert(id, verify.clone());
        nodes.insert(
            id,
            NodeIdentity {
                id,
                signing,
                verify,
                role: topology.role(id),
            },
        );
    }
    let deployment = Deployment::new(
        curve,
        ou.public.clone(),
        registry,
        scenario.max_reading(),
        scenario.strict,
    )?;
    Ok(Materials {
        deployment,
        ou,
        nodes,
    })
}

/// One node's row in the deployment file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: u16,
    pub role: Role,
    pub parent: Option<u16>,
    /// Uncompressed point, hex: `04 ‖ X ‖ Y`.
    pub verify_key: String,
}

/// The on-disk deployment: node ids, roles, parent links, verification
/// keys, and the shared protocol bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeploymentFile {
    pub max_reading: u64,
    pub strict: bool,
    pub nodes: Vec<NodeRecord>,
}

/// Signing keys exported by `keygen`, id → hex scalar.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SigningKeyFile {
    pub keys: BTreeMap<u16, String>,
}

pub fn point_to_hex(curve: &CurveParams, point: &Point) -> String {
    match point {
        Point::Infinity => "00".to_string(),
        Point::Affine { x, y } => {
            let width = curve.field_byte_len() * 2;
            format!(
                "04{:0>width$}{:0>width$}",
                x.to_str_radix(16),
                y.to_str_radix(16),
                width = width
            )
        }
    }
}

pub fn point_from_hex(curve: &CurveParams, text: &str) -> Result<Point, DeployError> {
    let width = curve.field_byte_len() * 2;
    if text.len() != 2 + 2 * width || !text.starts_with("04") {
        return Err(DeployError::Record(format!(
            "expected uncompressed point of {} hex chars",
            2 + 2 * width
        )));
    }
    let x = BigUint::from_str_radix(&text[2..2 + width], 16)
        .map_err(|e| DeployError::Record(e.to_string()))?;
    let y = BigUint::from_str_radix(&text[2 + width..], 16)
        .map_err(|e| DeployError::Record(e.to_string()))?;
    Ok(Point::affine(x, y))
}

impl Materials {
    pub fn deployment_file(&self, topology: &Topology) -> DeploymentFile {
        let curve = self.deployment.curve();
        let nodes = self
            .nodes
            .values()
            .map(|n| NodeRecord {
                id: n.id,
                role: n.role,
                parent: topology.parent(n.id),
                verify_key: point_to_hex(curve, n.verify.point()),
            })
            .collect();
        DeploymentFile {
            max_reading: self.deployment.max_reading(),
            strict: self.deployment.strict(),
            nodes,
        }
    }

    pub fn signing_key_file(&self) -> SigningKeyFile {
        SigningKeyFile {
            keys: self
                .nodes
                .values()
                .map(|n| (n.id, n.signing.scalar().to_str_radix(16)))
                .collect(),
        }
    }

    pub fn ou_public_record(&self) -> OuPublicRecord {
        self.ou.public.to_record()
    }

    pub fn ou_private_record(&self) -> OuPrivateRecord {
        self.ou.to_private_record()
    }
}

/// Rebuilds a protocol deployment from the exported records.
pub fn deployment_from_files(
    curve: CurveParams,
    file: &DeploymentFile,
    ou_public: &OuPublicRecord,
) -> Result<Deployment, DeployError> {
    let ou_pk = secagg_core::OuPublicKey::from_record(ou_public)?;
    let mut registry = BTreeMap::new();
    for node in &file.nodes {
        let point = point_from_hex(&curve, &node.verify_key)?;
        let key = VerifyKey::from_point(&curve, point)
            .map_err(|e| DeployError::Record(format!("node {}: {e}", node.id)))?;
        registry.insert(node.id, key);
    }
    Ok(Deployment::new(
        curve,
        ou_pk,
        registry,
        file.max_reading,
        file.strict,
    )?)
}

/// Rebuilds the node identities from the exported signing keys.
pub fn nodes_from_files(
    curve: &CurveParams,
    file: &DeploymentFile,
    keys: &SigningKeyFile,
) -> Result<BTreeMap<u16, NodeIdentity>, DeployError> {
    let mut nodes = BTreeMap::new();
    for record in &file.nodes {
        let hex = keys
            .keys
            .get(&record.id)
            .ok_or_else(|| DeployError::Record(format!("missing signing key for node {}", record.id)))?;
        let z = BigUint::from_str_radix(hex, 16)
            .map_err(|e| DeployError::Record(e.to_string()))?;
        let (signing, verify) = SigningKey::from_scalar(curve, z)
            .map_err(|e| DeployError::Record(format!("node {}: {e}", record.id)))?;
        if point_to_hex(curve, verify.point()) != record.verify_key {
            return Err(DeployError::Record(format!(
                "signing key for node {} does not match its verification key",
                record.id
            )));
        }
        nodes.insert(
            record.id,
            NodeIdentity {
                id: record.id,
                signing,
                verify,
                role: record.role,
            },
        );
    }
    Ok(nodes)
}
