//! Wire-format laws: bit-exact roundtrips on arbitrary valid messages and
//! a distinct error for each way a buffer can go wrong.

use num_bigint::BigUint;
use proptest::prelude::*;
use secagg_core::curve::CurveParams;
use secagg_core::numeric::Rng;
use secagg_core::ou::{ou_encrypt, OuKeyPair};
use secagg_core::protocol::{AggMessage, Deployment, WIRE_VERSION};
use secagg_core::sig::{self, AggSignature};
use secagg_core::wire::WireError;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

struct Env {
    dep: Deployment,
}

static ENV: LazyLock<Env> = LazyLock::new(|| {
    let curve = CurveParams::secp256r1();
    let mut rng = Rng::from_seed(90210);
    let ou = OuKeyPair::generate(64, &mut rng).unwrap();
    let (_, verify) = sig::keygen(&curve, &mut rng);
    let registry = BTreeMap::from([(1u16, verify)]);
    let dep = Deployment::new(curve, ou.public.clone(), registry, 1000, false).unwrap();
    Env { dep }
});

/// Builds a structurally valid message from arbitrary inputs. The fields
/// need not be mutually consistent (the codec doesn't verify signatures),
/// only individually well-formed.
fn build_message(ids: &BTreeSet<u16>, epoch_id: u64, m: u64, s_seed: u64, z_seed: u64) -> AggMessage {
    let dep = &ENV.dep;
    let curve = dep.curve();
    let mut rng = Rng::from_seed(s_seed);
    let ct = ou_encrypt(dep.ou_public(), &BigUint::from(m), &mut rng).unwrap();
    let s = secagg_core::numeric::rand_range(&mut rng, &BigUint::from(1u32), curve.order())
        .unwrap();
    let sig = AggSignature::from_parts(curve, s, ids.len()).unwrap();
    let (_, key) = sig::keygen(curve, &mut Rng::from_seed(z_seed));
    AggMessage {
        version: WIRE_VERSION,
        epoch_id,
        contributors: ids.clone(),
        ct,
        sig,
        key,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn roundtrip_is_identity(
        raw_ids in proptest::collection::btree_set(0u16..2000, 1..12),
        epoch_id in any::<u64>(),
        m in 0u64..1000,
        s_seed in any::<u64>(),
        z_seed in any::<u64>(),
    ) {
        let msg = build_message(&raw_ids, epoch_id, m, s_seed, z_seed);
        let bytes = msg.encode(&ENV.dep);
        let decoded = AggMessage::decode(&bytes, &ENV.dep).unwrap();
        prop_assert_eq!(&decoded, &msg);
        // canonical: re-encoding reproduces the bytes
        prop_assert_eq!(decoded.encode(&ENV.dep), bytes);
    }

    #[test]
    fn every_truncation_fails(
        raw_ids in proptest::collection::btree_set(0u16..2000, 1..6),
        epoch_id in any::<u64>(),
    ) {
        let msg = build_message(&raw_ids, epoch_id, 5, 1, 2);
        let bytes = msg.encode(&ENV.dep);
        for len in 0..bytes.len() {
            let verdict = AggMessage::decode(&bytes[..len], &ENV.dep);
            prop_assert!(verdict.is_err(), "prefix of length {} decoded", len);
        }
    }
}

fn sample_bytes() -> Vec<u8> {
    let ids = BTreeSet::from([3u16, 9, 17]);
    build_message(&ids, 42, 7, 11, 12).encode(&ENV.dep)
}

#[test]
fn unknown_version_is_rejected() {
    let mut bytes = sample_bytes();
    bytes[0] = 2;
    assert_eq!(
        AggMessage::decode(&bytes, &ENV.dep).unwrap_err(),
        WireError::UnsupportedVersion(2)
    );
}

#[test]
fn trailing_bytes_are_rejected() {
    let mut bytes = sample_bytes();
    bytes.push(0);
    assert_eq!(
        AggMessage::decode(&bytes, &ENV.dep).unwrap_err(),
        WireError::TrailingBytes
    );
}

#[test]
fn zero_contributor_count_is_rejected() {
    let mut bytes = sample_bytes();
    // count lives at offset 9..11; clearing it orphans the id bytes, but
    // the count check fires first
    bytes[9] = 0;
    bytes[10] = 0;
    assert_eq!(
        AggMessage::decode(&bytes, &ENV.dep).unwrap_err(),
        WireError::EmptyContributors
    );
}

#[test]
fn unsorted_contributors_are_rejected() {
    let mut bytes = sample_bytes();
    // ids 3, 9, 17 start at offset 11; swap the first two
    bytes.swap(11, 13);
    bytes.swap(12, 14);
    assert_eq!(
        AggMessage::decode(&bytes, &ENV.dep).unwrap_err(),
        WireError::NonCanonicalContributors
    );
}

#[test]
fn duplicate_contributors_are_rejected() {
    let mut bytes = sample_bytes();
    // overwrite the second id (9) with the first (3)
    bytes[13] = bytes[11];
    bytes[14] = bytes[12];
    assert_eq!(
        AggMessage::decode(&bytes, &ENV.dep).unwrap_err(),
        WireError::NonCanonicalContributors
    );
}

#[test]
fn padded_ciphertext_encoding_is_rejected() {
    let dep = &ENV.dep;
    let ids = BTreeSet::from([3u16, 9, 17]);
    let msg = build_message(&ids, 42, 7, 11, 12);
    // re-encode by hand with a leading zero byte on the ciphertext
    let mut bytes = Vec::new();
    bytes.push(msg.version);
    bytes.extend_from_slice(&msg.epoch_id.to_be_bytes());
    bytes.extend_from_slice(&(msg.contributors.len() as u16).to_be_bytes());
    for id in &msg.contributors {
        bytes.extend_from_slice(&id.to_be_bytes());
    }
    let mut ct = vec![0u8];
    ct.extend_from_slice(&msg.ct.residue().to_bytes_be());
    bytes.extend_from_slice(&(ct.len() as u16).to_be_bytes());
    bytes.extend_from_slice(&ct);
    bytes.extend_from_slice(&sig::scalar_to_bytes(dep.curve(), msg.sig.scalar()));
    let tail = msg.encode(dep);
    bytes.extend_from_slice(&tail[tail.len() - 65..]); // key encoding
    assert_eq!(
        AggMessage::decode(&bytes, dep).unwrap_err(),
        WireError::NonCanonicalCiphertext
    );
}

#[test]
fn off_curve_key_is_rejected() {
    let mut bytes = sample_bytes();
    let len = bytes.len();
    // flip a bit deep inside the key's y-coordinate
    bytes[len - 5] ^= 0x10;
    assert_eq!(
        AggMessage::decode(&bytes, &ENV.dep).unwrap_err(),
        WireError::PointOffCurve
    );
}

#[test]
fn compressed_key_prefix_is_rejected() {
    let mut bytes = sample_bytes();
    let len = bytes.len();
    bytes[len - 65] = 0x02;
    assert_eq!(
        AggMessage::decode(&bytes, &ENV.dep).unwrap_err(),
        WireError::InvalidPointEncoding
    );
}

#[test]
fn zero_signature_scalar_is_rejected() {
    let dep = &ENV.dep;
    let bytes = sample_bytes();
    // signature scalar occupies the 32 bytes before the 65-byte key
    let s_start = bytes.len() - 65 - 32;
    let mut bad = bytes.clone();
    for b in &mut bad[s_start..s_start + 32] {
        *b = 0;
    }
    assert_eq!(
        AggMessage::decode(&bad, dep).unwrap_err(),
        WireError::InvalidScalar
    );
}

#[test]
fn non_unit_ciphertext_is_rejected() {
    let dep = &ENV.dep;
    let ids = BTreeSet::from([3u16]);
    let msg = build_message(&ids, 42, 7, 11, 12);
    let mut bytes = Vec::new();
    bytes.push(msg.version);
    bytes.extend_from_slice(&msg.epoch_id.to_be_bytes());
    bytes.extend_from_slice(&1u16.to_be_bytes());
    bytes.extend_from_slice(&3u16.to_be_bytes());
    // ciphertext equal to the modulus: not in [1, n)
    let n_bytes = dep.ou_public().modulus().to_bytes_be();
    bytes.extend_from_slice(&(n_bytes.len() as u16).to_be_bytes());
    bytes.extend_from_slice(&n_bytes);
    bytes.extend_from_slice(&sig::scalar_to_bytes(dep.curve(), msg.sig.scalar()));
    let tail = msg.encode(dep);
    bytes.extend_from_slice(&tail[tail.len() - 65..]);
    assert_eq!(
        AggMessage::decode(&bytes, dep).unwrap_err(),
        WireError::InvalidCiphertext
    );
}
