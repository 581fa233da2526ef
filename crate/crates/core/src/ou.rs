//! Okamoto–Uchiyama public-key encryption over `n = p²q`.
//!
//! Ciphertexts are `c = gᵐ · hʳ mod n` with `h = gⁿ mod n`; multiplying two
//! ciphertexts adds the underlying plaintexts, which is the only operation
//! intermediate aggregators ever perform. Decryption recovers `m mod p`
//! through the logarithm map `L(x) = (x − 1)/p` on the p-subgroup of
//! `Z*_{p²}`, so exact recovery needs `m < p`. The public key therefore
//! carries an explicit `capacity` bound that callers must stay below; the
//! protocol layer budgets `contributor count × max reading` against it
//! before aggregating.

use crate::numeric::{self, NumericError, Rng};
use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{Num, One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OuError {
    #[error("per-prime bit length must be at least 8, got {0}")]
    BitLengthTooSmall(u64),
    #[error("plaintext is at or above the key's capacity bound")]
    PlaintextOutOfRange,
    #[error("ciphertext is not a unit modulo n")]
    MalformedCiphertext,
    #[error("ciphertext sequence is empty")]
    EmptySequence,
    #[error("invalid key material: {0}")]
    InvalidKey(String),
    #[error("key record: {0}")]
    KeyParse(String),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

/// Public half: modulus `n = p²q`, generator `g`, masking element
/// `h = gⁿ mod n`, and the plaintext bound `capacity < p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OuPublicKey {
    n: BigUint,
    g: BigUint,
    h: BigUint,
    capacity: BigUint,
}

/// Private half: the factorization plus the precomputed decryption pieces
/// `g_p = g^{p−1} mod p²` and `l_inv = L(g_p)⁻¹ mod p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OuPrivateKey {
    p: BigUint,
    q: BigUint,
    g_p: BigUint,
    l_inv: BigUint,
    p_squared: BigUint,
    n: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OuKeyPair {
    pub public: OuPublicKey,
    pub private: OuPrivateKey,
}

/// A ciphertext residue in `[1, n)`, coprime to `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OuCiphertext {
    c: BigUint,
}

/// Hex text record for the public key.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OuPublicRecord {
    pub n: String,
    pub g: String,
    pub h: String,
    pub capacity: String,
}

/// Hex text record for the private key. `(p, q, g)` determine the whole
/// pair; capacity rides along so a reloaded key enforces the same bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OuPrivateRecord {
    pub p: String,
    pub q: String,
    pub g: String,
    pub capacity: String,
}

impl OuCiphertext {
    pub fn residue(&self) -> &BigUint {
        &self.c
    }

    /// Wraps a raw residue, enforcing `1 <= c < n` and `gcd(c, n) = 1`.
    pub fn from_residue(pk: &OuPublicKey, c: BigUint) -> Result<Self, OuError> {
        if c.is_zero() || c >= pk.n || !c.gcd(&pk.n).is_one() {
            return Err(OuError::MalformedCiphertext);
        }
        Ok(OuCiphertext { c })
    }
}

impl OuPublicKey {
    pub fn modulus(&self) -> &BigUint {
        &self.n
    }

    pub fn generator(&self) -> &BigUint {
        &self.g
    }

    pub fn masking_element(&self) -> &BigUint {
        &self.h
    }

    /// Plaintext bound: encryption accepts `m` with `0 <= m < capacity`.
    pub fn capacity(&self) -> &BigUint {
        &self.capacity
    }

    pub fn to_record(&self) -> OuPublicRecord {
        OuPublicRecord {
            n: self.n.to_str_radix(16),
            g: self.g.to_str_radix(16),
            h: self.h.to_str_radix(16),
            capacity: self.capacity.to_str_radix(16),
        }
    }

    pub fn from_record(record: &OuPublicRecord) -> Result<Self, OuError> {
        let n = parse_hex("n", &record.n)?;
        let g = parse_hex("g", &record.g)?;
        let h = parse_hex("h", &record.h)?;
        let capacity = parse_hex("capacity", &record.capacity)?;
        if n < BigUint::from(2u32) || g <= BigUint::one() || g >= n || !g.gcd(&n).is_one() {
            return Err(OuError::InvalidKey("n or g out of range".into()));
        }
        if h.is_zero() || h >= n {
            return Err(OuError::InvalidKey("h out of range".into()));
        }
        if capacity.is_zero() {
            return Err(OuError::InvalidKey("capacity must be positive".into()));
        }
        Ok(OuPublicKey { n, g, h, capacity })
    }
}

impl OuPrivateKey {
    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }
}

fn parse_hex(field: &str, value: &str) -> Result<BigUint, OuError> {
    BigUint::from_str_radix(value, 16)
        .map_err(|e| OuError::KeyParse(format!("field {field}: {e}")))
}

/// `L(x) = (x − 1)/p`, defined on residues `x ≡ 1 (mod p)`.
fn log_map(x: &BigUint, p: &BigUint) -> BigUint {
    (x - BigUint::one()) / p
}

impl OuKeyPair {
    /// Generates fresh primes of `bits` bits each and a suitable generator.
    /// Capacity is pinned at `2^(bits−2)`, strictly below `p`.
    pub fn generate(bits: u64, rng: &mut Rng) -> Result<Self, OuError> {
        if bits < 8 {
            return Err(OuError::BitLengthTooSmall(bits));
        }
        let p = numeric::gen_prime(bits, rng)?;
        let q = loop {
            let q = numeric::gen_prime(bits, rng)?;
            if q != p {
                break q;
            }
        };
        let n = &p * &p * &q;
        let capacity = BigUint::one() << (bits - 2);
        let two = BigUint::from(2u32);
        let g = loop {
            let g = numeric::rand_range(rng, &two, &n)?;
            if !g.gcd(&n).is_one() {
                continue;
            }
            if generator_has_full_order(&g, &p) {
                break g;
            }
        };
        Self::assemble(p, q, g, capacity)
    }

    /// Builds the pair from known primes; capacity defaults to the largest
    /// power of two not exceeding `p`.
    pub fn from_primes(p: BigUint, q: BigUint, g: BigUint) -> Result<Self, OuError> {
        let capacity = BigUint::one() << (p.bits() - 1);
        Self::from_primes_with_capacity(p, q, g, capacity)
    }

    pub fn from_primes_with_capacity(
        p: BigUint,
        q: BigUint,
        g: BigUint,
        capacity: BigUint,
    ) -> Result<Self, OuError> {
        let mut witness_rng = Rng::from_seed(0x0ca2_b1d5);
        if !numeric::is_probable_prime(&p, 40, &mut witness_rng) {
            return Err(OuError::InvalidKey("p is not prime".into()));
        }
        if !numeric::is_probable_prime(&q, 40, &mut witness_rng) {
            return Err(OuError::InvalidKey("q is not prime".into()));
        }
        if p == q {
            return Err(OuError::InvalidKey("p and q must differ".into()));
        }
        let n = &p * &p * &q;
        if g <= BigUint::one() || g >= n || !g.gcd(&n).is_one() {
            return Err(OuError::InvalidKey("g is not a unit in [2, n)".into()));
        }
        if !generator_has_full_order(&g, &p) {
            return Err(OuError::InvalidKey(
                "g^(p-1) has order below p modulo p^2".into(),
            ));
        }
        if capacity.is_zero() || capacity >= p {
            return Err(OuError::InvalidKey("capacity must be in [1, p)".into()));
        }
        Self::assemble(p, q, g, capacity)
    }

    /// The `p = 11, q = 7, g = 2` instance (n = 847) used by the worked
    /// examples and exhaustive suites. Capacity is 8.
    pub fn toy() -> Self {
        Self::from_primes(BigUint::from(11u32), BigUint::from(7u32), BigUint::from(2u32))
            .expect("toy parameters are valid")
    }

    fn assemble(p: BigUint, q: BigUint, g: BigUint, capacity: BigUint) -> Result<Self, OuError> {
        let p_squared = &p * &p;
        let n = &p_squared * &q;
        let g_p = numeric::mod_exp(&g, &(&p - BigUint::one()), &p_squared)?;
        let l_inv = numeric::mod_inv(&log_map(&g_p, &p), &p)?;
        let h = numeric::mod_exp(&g, &n, &n)?;
        Ok(OuKeyPair {
            public: OuPublicKey {
                n: n.clone(),
                g,
                h,
                capacity,
            },
            private: OuPrivateKey {
                p,
                q,
                g_p,
                l_inv,
                p_squared,
                n,
            },
        })
    }

    pub fn to_private_record(&self) -> OuPrivateRecord {
        OuPrivateRecord {
            p: self.private.p.to_str_radix(16),
            q: self.private.q.to_str_radix(16),
            g: self.public.g.to_str_radix(16),
            capacity: self.public.capacity.to_str_radix(16),
        }
    }

    pub fn from_private_record(record: &OuPrivateRecord) -> Result<Self, OuError> {
        let p = parse_hex("p", &record.p)?;
        let q = parse_hex("q", &record.q)?;
        let g = parse_hex("g", &record.g)?;
        let capacity = parse_hex("capacity", &record.capacity)?;
        Self::from_primes_with_capacity(p, q, g, capacity)
    }
}

/// The order condition on `g`: `g^{p−1} mod p²` must differ from 1, which
/// for prime `p` forces it to have order exactly `p`.
fn generator_has_full_order(g: &BigUint, p: &BigUint) -> bool {
    let p_squared = p * p;
    let g_p = g.modpow(&(p - BigUint::one()), &p_squared);
    !g_p.is_one()
}

/// Encrypts `m` with a fresh random mask `r` drawn from `[1, n)`.
pub fn ou_encrypt(
    pk: &OuPublicKey,
    m: &BigUint,
    rng: &mut Rng,
) -> Result<OuCiphertext, OuError> {
    let r = numeric::rand_range(rng, &BigUint::one(), &pk.n)?;
    ou_encrypt_with_randomness(pk, m, &r)
}

/// Deterministic encryption path for fixtures and tests: the caller
/// supplies the mask exponent (`r = 0` makes `hʳ` a no-op).
pub fn ou_encrypt_with_randomness(
    pk: &OuPublicKey,
    m: &BigUint,
    r: &BigUint,
) -> Result<OuCiphertext, OuError> {
    if m >= &pk.capacity {
        return Err(OuError::PlaintextOutOfRange);
    }
    let gm = numeric::mod_exp(&pk.g, m, &pk.n)?;
    let hr = numeric::mod_exp(&pk.h, r, &pk.n)?;
    Ok(OuCiphertext { c: gm * hr % &pk.n })
}

/// Recovers `m mod p`. Exact when the plaintext stayed below capacity.
pub fn ou_decrypt(sk: &OuPrivateKey, ct: &OuCiphertext) -> Result<BigUint, OuError> {
    if ct.c.is_zero() || !ct.c.gcd(&sk.n).is_one() {
        return Err(OuError::MalformedCiphertext);
    }
    let x = numeric::mod_exp(&ct.c, &(&sk.p - BigUint::one()), &sk.p_squared)?;
    if !(&x % &sk.p).is_one() {
        return Err(OuError::MalformedCiphertext);
    }
    Ok(log_map(&x, &sk.p) * &sk.l_inv % &sk.p)
}

/// Adds the plaintexts: multiplication of residues mod n.
pub fn ou_add(pk: &OuPublicKey, a: &OuCiphertext, b: &OuCiphertext) -> OuCiphertext {
    OuCiphertext {
        c: &a.c * &b.c % &pk.n,
    }
}

/// Left fold of [`ou_add`] over a nonempty sequence.
pub fn ou_add_many(pk: &OuPublicKey, cts: &[OuCiphertext]) -> Result<OuCiphertext, OuError> {
    let (first, rest) = cts.split_first().ok_or(OuError::EmptySequence)?;
    Ok(rest.iter().fold(first.clone(), |acc, ct| ou_add(pk, &acc, ct)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn toy_fixture_matches_hand_computation() {
        let kp = OuKeyPair::toy();
        assert_eq!(kp.public.modulus(), &big(847));
        assert_eq!(kp.private.g_p, big(56)); // 2^10 mod 121
        // order of 56 in Z*_121 is exactly 11: brute force
        let mut acc = 1u64;
        let mut order = 0u64;
        for i in 1..=121 {
            acc = acc * 56 % 121;
            if acc == 1 {
                order = i;
                break;
            }
        }
        assert_eq!(order, 11);
        assert_eq!(log_map(&big(56), &big(11)), big(5));
        assert_eq!(kp.private.l_inv, big(9)); // 5^-1 mod 11
        assert_eq!(kp.public.capacity(), &big(8));
    }

    #[test]
    fn keygen_is_deterministic() {
        let a = OuKeyPair::generate(16, &mut Rng::from_seed(77)).unwrap();
        let b = OuKeyPair::generate(16, &mut Rng::from_seed(77)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn keygen_rejects_tiny_primes() {
        let mut rng = Rng::from_seed(1);
        assert_eq!(
            OuKeyPair::generate(4, &mut rng),
            Err(OuError::BitLengthTooSmall(4))
        );
    }

    #[test]
    fn keygen_capacity_sits_below_p() {
        let kp = OuKeyPair::generate(16, &mut Rng::from_seed(3)).unwrap();
        assert_eq!(kp.public.capacity(), &(BigUint::one() << 14));
        assert!(kp.public.capacity() < kp.private.p());
    }

    #[test]
    fn zero_with_noop_mask_decrypts_to_zero() {
        let kp = OuKeyPair::toy();
        let ct = ou_encrypt_with_randomness(&kp.public, &big(0), &big(0)).unwrap();
        assert_eq!(ct.residue(), &big(1));
        assert_eq!(ou_decrypt(&kp.private, &ct).unwrap(), big(0));
    }

    #[test]
    fn toy_roundtrip_all_plaintexts() {
        let kp = OuKeyPair::toy();
        let mut rng = Rng::from_seed(5);
        for m in 0u64..8 {
            let ct = ou_encrypt(&kp.public, &big(m), &mut rng).unwrap();
            assert_eq!(ou_decrypt(&kp.private, &ct).unwrap(), big(m), "m = {m}");
        }
    }

    #[test]
    fn capacity_is_enforced() {
        let kp = OuKeyPair::toy();
        let mut rng = Rng::from_seed(5);
        assert_eq!(
            ou_encrypt(&kp.public, &big(8), &mut rng),
            Err(OuError::PlaintextOutOfRange)
        );
    }

    /// Independent u64 arithmetic for the toy instance: encrypt, add and
    /// decrypt entirely outside the library code paths.
    mod oracle {
        pub const P: u64 = 11;
        pub const N: u64 = 847;
        pub const G: u64 = 2;

        pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
            let mut acc = 1u64;
            b %= m;
            while e > 0 {
                if e & 1 == 1 {
                    acc = acc * b % m;
                }
                b = b * b % m;
                e >>= 1;
            }
            acc
        }

        pub fn encrypt(m: u64, r: u64) -> u64 {
            let h = pow_mod(G, N, N);
            pow_mod(G, m, N) * pow_mod(h, r, N) % N
        }

        pub fn decrypt(c: u64) -> u64 {
            let x = pow_mod(c, P - 1, P * P);
            let l = (x - 1) / P;
            // L(g_p) = 5, 5^-1 mod 11 = 9
            l * 9 % P
        }
    }

    #[test]
    fn toy_addition_matches_independent_oracle() {
        let kp = OuKeyPair::toy();
        let mut rng = Rng::from_seed(11);
        let e3 = ou_encrypt(&kp.public, &big(3), &mut rng).unwrap();
        let e4 = ou_encrypt(&kp.public, &big(4), &mut rng).unwrap();
        let sum_ct = ou_add(&kp.public, &e3, &e4);
        assert_eq!(ou_decrypt(&kp.private, &sum_ct).unwrap(), big(7));

        // Same computation with the oracle's own ciphertexts.
        let o3 = oracle::encrypt(3, 17);
        let o4 = oracle::encrypt(4, 23);
        assert_eq!(oracle::decrypt(o3 * o4 % oracle::N), 7);

        // The library decrypts oracle-built ciphertexts identically.
        let foreign = OuCiphertext::from_residue(&kp.public, big(o3 * o4 % oracle::N)).unwrap();
        assert_eq!(ou_decrypt(&kp.private, &foreign).unwrap(), big(7));
    }

    #[test]
    fn add_identity_and_fold() {
        let kp = OuKeyPair::toy();
        let mut rng = Rng::from_seed(21);
        let m = big(5);
        let e = ou_encrypt(&kp.public, &m, &mut rng).unwrap();
        let zero = ou_encrypt(&kp.public, &big(0), &mut rng).unwrap();
        assert_eq!(
            ou_decrypt(&kp.private, &ou_add(&kp.public, &e, &zero)).unwrap(),
            m
        );

        let ones: Vec<_> = (0..5)
            .map(|_| ou_encrypt(&kp.public, &big(1), &mut rng).unwrap())
            .collect();
        let folded = ou_add_many(&kp.public, &ones).unwrap();
        assert_eq!(ou_decrypt(&kp.private, &folded).unwrap(), big(5));
    }

    #[test]
    fn add_many_rejects_empty_and_keeps_singletons() {
        let kp = OuKeyPair::toy();
        let mut rng = Rng::from_seed(31);
        assert_eq!(ou_add_many(&kp.public, &[]), Err(OuError::EmptySequence));
        let e = ou_encrypt(&kp.public, &big(2), &mut rng).unwrap();
        assert_eq!(ou_add_many(&kp.public, &[e.clone()]).unwrap(), e);
    }

    #[test]
    fn add_many_is_order_insensitive() {
        let kp = OuKeyPair::toy();
        let mut rng = Rng::from_seed(41);
        let cts: Vec<_> = [1u64, 2, 3]
            .iter()
            .map(|&m| ou_encrypt(&kp.public, &big(m), &mut rng).unwrap())
            .collect();
        let forward = ou_add_many(&kp.public, &cts).unwrap();
        let reversed: Vec<_> = cts.iter().rev().cloned().collect();
        let backward = ou_add_many(&kp.public, &reversed).unwrap();
        assert_eq!(forward, backward);
    }

    #[test]
    fn non_unit_residues_are_rejected() {
        let kp = OuKeyPair::toy();
        assert_eq!(
            OuCiphertext::from_residue(&kp.public, big(0)),
            Err(OuError::MalformedCiphertext)
        );
        // 7 divides 847
        assert_eq!(
            OuCiphertext::from_residue(&kp.public, big(7)),
            Err(OuError::MalformedCiphertext)
        );
        let bogus = OuCiphertext { c: big(121) }; // 11² shares a factor
        assert_eq!(
            ou_decrypt(&kp.private, &bogus),
            Err(OuError::MalformedCiphertext)
        );
    }

    #[test]
    fn decryption_wraps_modulo_p_above_capacity() {
        // Force-inject m >= capacity through the oracle path: recovery is
        // only guaranteed modulo p.
        let kp = OuKeyPair::toy();
        for m in [8u64, 12, 15, 21] {
            let c = oracle::encrypt(m, 29);
            let ct = OuCiphertext::from_residue(&kp.public, big(c)).unwrap();
            assert_eq!(ou_decrypt(&kp.private, &ct).unwrap(), big(m % 11), "m = {m}");
        }
    }

    #[test]
    fn key_records_roundtrip() {
        let kp = OuKeyPair::generate(16, &mut Rng::from_seed(9)).unwrap();
        let public = OuPublicKey::from_record(&kp.public.to_record()).unwrap();
        assert_eq!(public, kp.public);
        let reloaded = OuKeyPair::from_private_record(&kp.to_private_record()).unwrap();
        assert_eq!(reloaded, kp);
    }

    #[test]
    fn private_record_rejects_tampered_primes() {
        let kp = OuKeyPair::toy();
        let mut record = kp.to_private_record();
        record.p = "c".to_string(); // 12, composite
        assert!(matches!(
            OuKeyPair::from_private_record(&record),
            Err(OuError::InvalidKey(_))
        ));
    }
}
