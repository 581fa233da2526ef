//! Adversarial message transformations injected by the simulator.

use crate::scenario::Attack;
use num_traits::One;
use secagg_core::numeric::{rand_range, Rng};
use secagg_core::ou::{ou_add_many, ou_encrypt, OuCiphertext};
use secagg_core::protocol::{AggMessage, Deployment};
use secagg_core::sig::{self, AggSignature, EpochNonce};
use num_bigint::BigUint;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AttackError {
    #[error("attack {0:?} cannot run here: {1}")]
    NotApplicable(Attack, String),
}

/// What the adversary legitimately holds: the public deployment context,
/// the broadcast epoch nonce (including the shared k), and, for replay,
/// a message captured in an earlier epoch.
pub struct AttackContext<'a> {
    pub dep: &'a Deployment,
    pub nonce: &'a EpochNonce,
    pub max_reading: u64,
    pub prior_message: Option<&'a AggMessage>,
}

/// Applies the transformation to an in-flight message.
///
/// * `tamper-ct` multiplies the ciphertext by `g`, shifting the hidden
///   sum by exactly one.
/// * `tamper-sig` adds one to the signature scalar (two if that would
///   collapse it to zero, which the codec refuses to carry).
/// * `forge-subtree` rebuilds the message from attacker-fresh keys over
///   the same contributor ids, with fabricated readings signed under the
///   shared epoch nonce.
/// * `replay-epoch` substitutes the captured prior-epoch message.
pub fn inject_attack(
    kind: Attack,
    msg: &AggMessage,
    ctx: &AttackContext,
    rng: &mut Rng,
) -> Result<AggMessage, AttackError> {
    let curve = ctx.dep.curve();
    match kind {
        Attack::None => Ok(msg.clone()),
        Attack::TamperCt => {
            let pk = ctx.dep.ou_public();
            let shifted = msg.ct.residue() * pk.generator() % pk.modulus();
            let ct = OuCiphertext::from_residue(pk, shifted)
                .expect("product of units is a unit");
            Ok(AggMessage { ct, ..msg.clone() })
        }
        Attack::TamperSig => {
            let order = curve.order();
            let mut s = (msg.sig.scalar() + BigUint::one()) % order;
            if s == BigUint::ZERO {
                s = BigUint::from(2u32) % order;
            }
            let sig = AggSignature::from_parts(curve, s, msg.sig.count())
                .expect("nonzero scalar below the order");
            Ok(AggMessage { sig, ..msg.clone() })
        }
        Attack::ForgeSubtree => {
            let pk = ctx.dep.ou_public();
            let mut cts = Vec::new();
            let mut scalars = Vec::new();
            let mut keys = Vec::new();
            for _ in &msg.contributors {
                let (signing, verify) = sig::keygen(curve, rng);
                let fake = rand_range(rng, &BigUint::ZERO, &BigUint::from(ctx.max_reading + 1))
                    .expect("nonempty range");
                let s = sig::sign(curve, &signing, &fake, ctx.nonce)
                    .expect("degenerate draws vanish at production size");
                cts.push(ou_encrypt(pk, &fake, rng).expect("fake reading below capacity"));
                scalars.push(s);
                keys.push(verify);
            }
            let ct = ou_add_many(pk, &cts).expect("contributor set is nonempty");
            let sig = sig::combine_sigs(curve, &scalars)
                .expect("nonempty, collision-free at production size");
            let key = sig::combine_keys(curve, &keys).expect("nonempty");
            Ok(AggMessage {
                ct,
                sig,
                key,
                ..msg.clone()
            })
        }
        Attack::ReplayEpoch => ctx
            .prior_message
            .cloned()
            .ok_or_else(|| {
                AttackError::NotApplicable(kind, "no prior epoch captured".to_string())
            }),
    }
}
