//! Cryptographic building blocks for secure in-network data aggregation.
//!
//! The crate combines two primitives behind a small protocol layer:
//!
//! * [`ou`] — the Okamoto–Uchiyama public-key cryptosystem over `n = p²q`,
//!   whose ciphertexts add under modular multiplication. Intermediate nodes
//!   can fold readings together without ever seeing a plaintext.
//! * [`sig`] — an ECDSA-style signature over a shared per-epoch nonce, where
//!   signature scalars and verification keys sum componentwise. The sink
//!   verifies one signature for the whole aggregate.
//!
//! [`protocol`] wires the two together into the three node roles (leaf,
//! aggregating parent, base station) and [`wire`] fixes the byte-exact
//! message format exchanged on each tree link. [`numeric`] and [`curve`]
//! supply the arbitrary-precision and elliptic-curve arithmetic underneath.
//!
//! Everything here is desk-scale reference code: affine coordinates,
//! variable-time arithmetic, and a seeded deterministic generator. None of
//! it is hardened against side channels.

pub mod curve;
pub mod numeric;
pub mod ou;
pub mod protocol;
pub mod sig;
pub mod wire;

pub use curve::{CurveConfig, CurveError, CurveParams, Point};
pub use numeric::{NumericError, Rng};
pub use ou::{OuCiphertext, OuError, OuKeyPair, OuPrivateKey, OuPublicKey};
pub use protocol::{
    AggMessage, Deployment, EpochResult, NodeIdentity, ProtocolError, Role,
};
pub use sig::{AggSignature, EpochNonce, SigError, SigningKey, VerifyKey};
pub use wire::WireError;
