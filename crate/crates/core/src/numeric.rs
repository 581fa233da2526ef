//! Arbitrary-precision modular arithmetic and prime generation.
//!
//! Everything in this module works on [`BigUint`] values of unbounded size.
//! [`mod_exp`] is backed by `num-bigint`'s square-and-multiply `modpow`;
//! [`mod_inv`] runs the extended Euclidean algorithm; [`gen_prime`] combines
//! trial division with a 40-round Miller–Rabin test.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use std::sync::LazyLock;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NumericError {
    #[error("modulus must be at least 2")]
    ModulusTooSmall,
    #[error("value has no inverse modulo m (gcd != 1)")]
    NonInvertible,
    #[error("prime bit length must be at least 4, got {0}")]
    BitLengthTooSmall(u64),
    #[error("sampling range is empty (lo >= hi)")]
    EmptyRange,
}

/// Deterministic seeded generator used everywhere randomness is needed.
///
/// This is a keyed counter-mode construction (ChaCha20 keyed by the seed),
/// chosen so that the same seed reproduces the same stream bit-exactly on
/// every run and platform. **It is not a vetted entropy source**: the whole
/// point is reproducible simulation, not key secrecy. Do not use this to
/// generate keys you intend to protect anything with.
#[derive(Debug, Clone)]
pub struct Rng {
    inner: ChaCha20Rng,
}

impl Rng {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            inner: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn fill_bytes(&mut self, buf: &mut [u8]) {
        self.inner.fill_bytes(buf);
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}

/// base^exp mod modulus, square-and-multiply.
pub fn mod_exp(
    base: &BigUint,
    exp: &BigUint,
    modulus: &BigUint,
) -> Result<BigUint, NumericError> {
    if modulus < &BigUint::from(2u32) {
        return Err(NumericError::ModulusTooSmall);
    }
    Ok(base.modpow(exp, modulus))
}

/// Multiplicative inverse of `a` modulo `m`, in `[1, m)`.
pub fn mod_inv(a: &BigUint, m: &BigUint) -> Result<BigUint, NumericError> {
    if m < &BigUint::from(2u32) {
        return Err(NumericError::ModulusTooSmall);
    }
    let a_int = BigInt::from_biguint(Sign::Plus, a % m);
    let m_int = BigInt::from_biguint(Sign::Plus, m.clone());
    let ext = a_int.extended_gcd(&m_int);
    if !ext.gcd.is_one() {
        return Err(NumericError::NonInvertible);
    }
    let mut x = ext.x % &m_int;
    if x.sign() == Sign::Minus {
        x += &m_int;
    }
    Ok(x.to_biguint().expect("normalized to [0, m)"))
}

static SMALL_PRIMES: LazyLock<Vec<u32>> = LazyLock::new(|| {
    let mut sieve = vec![true; 1000];
    sieve[0] = false;
    sieve[1] = false;
    for i in 2..1000usize {
        if sieve[i] {
            for j in (i * i..1000).step_by(i) {
                sieve[j] = false;
            }
        }
    }
    (2..1000).filter(|&i| sieve[i]).map(|i| i as u32).collect()
});

/// Trial division against all primes below 1000. `None` means undecided.
fn trial_division(n: &BigUint) -> Option<bool> {
    for &p in SMALL_PRIMES.iter() {
        let p_big = BigUint::from(p);
        if n == &p_big {
            return Some(true);
        }
        if (n % &p_big).is_zero() {
            return Some(false);
        }
    }
    None
}

/// Miller–Rabin with `rounds` random witnesses drawn from `rng`.
pub fn is_probable_prime(n: &BigUint, rounds: u32, rng: &mut Rng) -> bool {
    let one = BigUint::one();
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    match trial_division(n) {
        Some(verdict) => return verdict,
        None => {}
    }
    // n - 1 = 2^s * d with d odd
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().expect("n > 2 is odd here");
    let d = &n_minus_1 >> s;

    'witness: for _ in 0..rounds {
        let a = rand_range(rng, &two, &n_minus_1).expect("n - 1 > 2");
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Random prime of exactly `bits` bits (top bit set), Miller–Rabin 40 rounds.
pub fn gen_prime(bits: u64, rng: &mut Rng) -> Result<BigUint, NumericError> {
    if bits < 4 {
        return Err(NumericError::BitLengthTooSmall(bits));
    }
    let one = BigUint::one();
    loop {
        let mut candidate = rand_bits(rng, bits);
        candidate |= &one << (bits - 1); // exact bit length
        candidate |= &one; // odd
        match trial_division(&candidate) {
            Some(true) => return Ok(candidate),
            Some(false) => continue,
            None => {}
        }
        if is_probable_prime(&candidate, 40, rng) {
            return Ok(candidate);
        }
    }
}

/// Uniform value in `[0, 2^bits)`.
fn rand_bits(rng: &mut Rng, bits: u64) -> BigUint {
    let n_bytes = bits.div_ceil(8) as usize;
    let mut buf = vec![0u8; n_bytes];
    rng.fill_bytes(&mut buf);
    let excess = (n_bytes as u64) * 8 - bits;
    if excess > 0 {
        buf[0] &= 0xff >> excess;
    }
    BigUint::from_bytes_be(&buf)
}

/// Uniform value in `[lo, hi)` by rejection sampling on the bit width of
/// the range, so the draw count depends only on the rng stream.
pub fn rand_range(
    rng: &mut Rng,
    lo: &BigUint,
    hi: &BigUint,
) -> Result<BigUint, NumericError> {
    if lo >= hi {
        return Err(NumericError::EmptyRange);
    }
    let width = hi - lo;
    if width.is_one() {
        return Ok(lo.clone());
    }
    let bits = width.bits();
    loop {
        let draw = rand_bits(rng, bits);
        if draw < width {
            return Ok(lo + draw);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    /// Naive O(exp) repeated-multiplication oracle, small inputs only.
    fn mod_exp_naive(base: u64, exp: u64, modulus: u64) -> u64 {
        let mut acc: u128 = 1;
        for _ in 0..exp {
            acc = acc * base as u128 % modulus as u128;
        }
        acc as u64
    }

    #[test]
    fn mod_exp_small_values() {
        assert_eq!(mod_exp(&big(2), &big(10), &big(1000)).unwrap(), big(24));
        assert_eq!(mod_exp(&big(7), &big(0), &big(13)).unwrap(), big(1));
        assert_eq!(mod_exp(&big(0), &big(0), &big(2)).unwrap(), big(1));
    }

    #[test]
    fn mod_exp_matches_naive_oracle() {
        assert_eq!(
            mod_exp(&big(2), &big(847), &big(847)).unwrap(),
            big(mod_exp_naive(2, 847, 847))
        );
        for (b, e, m) in [(3u64, 200, 101), (5, 999, 77), (123, 456, 789)] {
            assert_eq!(
                mod_exp(&big(b), &big(e), &big(m)).unwrap(),
                big(mod_exp_naive(b, e, m)),
                "base {b} exp {e} mod {m}"
            );
        }
    }

    #[test]
    fn mod_exp_rejects_tiny_modulus() {
        assert_eq!(
            mod_exp(&big(2), &big(2), &big(1)),
            Err(NumericError::ModulusTooSmall)
        );
        assert_eq!(
            mod_exp(&big(2), &big(2), &big(0)),
            Err(NumericError::ModulusTooSmall)
        );
    }

    #[test]
    fn mod_exp_is_additive_in_exponent() {
        let m = big(1_000_003);
        let b = big(91);
        for (e1, e2) in [(3u64, 9), (0, 17), (100, 231)] {
            let lhs = mod_exp(&b, &big(e1 + e2), &m).unwrap();
            let rhs = mod_exp(&b, &big(e1), &m).unwrap() * mod_exp(&b, &big(e2), &m).unwrap() % &m;
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn mod_inv_basics() {
        assert_eq!(mod_inv(&big(1), &big(97)).unwrap(), big(1));
        assert_eq!(mod_inv(&big(5), &big(11)).unwrap(), big(9));
        assert_eq!(mod_inv(&big(4), &big(8)), Err(NumericError::NonInvertible));
    }

    #[test]
    fn mod_inv_law_holds_for_all_units() {
        let m = big(97);
        for a in 1u64..97 {
            let inv = mod_inv(&big(a), &m).unwrap();
            assert_eq!(big(a) * inv % &m, big(1));
        }
    }

    #[test]
    fn mod_inv_reduces_input_first() {
        // 102 ≡ 5 (mod 97)
        assert_eq!(
            mod_inv(&big(102), &big(97)).unwrap(),
            mod_inv(&big(5), &big(97)).unwrap()
        );
    }

    #[test]
    fn gen_prime_eight_bits() {
        let mut rng = Rng::from_seed(7);
        let p = gen_prime(8, &mut rng).unwrap();
        assert_eq!(p.bits(), 8);
        let v: u64 = p.to_string().parse().unwrap();
        assert!((128..=255).contains(&v));
        for d in 2..16u64 {
            assert_ne!(v % d, 0, "{v} divisible by {d}");
        }
    }

    #[test]
    fn gen_prime_is_deterministic() {
        let a = gen_prime(32, &mut Rng::from_seed(42)).unwrap();
        let b = gen_prime(32, &mut Rng::from_seed(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gen_prime_rejects_tiny_bit_length() {
        let mut rng = Rng::from_seed(1);
        assert_eq!(
            gen_prime(3, &mut rng),
            Err(NumericError::BitLengthTooSmall(3))
        );
    }

    /// Full trial-division primality check, independent of Miller–Rabin.
    fn is_prime_by_division(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        let mut d = 2;
        while d * d <= n {
            if n % d == 0 {
                return false;
            }
            d += 1;
        }
        true
    }

    #[test]
    fn gen_prime_outputs_survive_division_oracle() {
        let mut rng = Rng::from_seed(99);
        for _ in 0..1000 {
            let p = gen_prime(12, &mut rng).unwrap();
            let v: u64 = p.to_string().parse().unwrap();
            assert!(v % 2 == 1);
            assert!(is_prime_by_division(v), "{v} is composite");
        }
    }

    #[test]
    fn rand_range_singletons_and_errors() {
        let mut rng = Rng::from_seed(3);
        assert_eq!(rand_range(&mut rng, &big(0), &big(1)).unwrap(), big(0));
        assert_eq!(rand_range(&mut rng, &big(5), &big(6)).unwrap(), big(5));
        assert_eq!(
            rand_range(&mut rng, &big(6), &big(6)),
            Err(NumericError::EmptyRange)
        );
        assert_eq!(
            rand_range(&mut rng, &big(7), &big(6)),
            Err(NumericError::EmptyRange)
        );
    }

    #[test]
    fn rand_range_stays_in_bounds() {
        let mut rng = Rng::from_seed(11);
        let lo = big(1000);
        let hi = big(1013);
        for _ in 0..500 {
            let x = rand_range(&mut rng, &lo, &hi).unwrap();
            assert!(x >= lo && x < hi);
        }
    }

    #[test]
    fn rand_range_buckets_are_balanced() {
        // 10^4 draws over [0, 4): each bucket within 3σ ≈ 130 of 2500.
        let mut rng = Rng::from_seed(2024);
        let mut buckets = [0u32; 4];
        for _ in 0..10_000 {
            let x = rand_range(&mut rng, &big(0), &big(4)).unwrap();
            let i: usize = x.to_string().parse().unwrap();
            buckets[i] += 1;
        }
        for (i, &count) in buckets.iter().enumerate() {
            let dev = (count as i64 - 2500).abs();
            assert!(dev <= 130, "bucket {i} count {count} deviates by {dev}");
        }
    }

    #[test]
    fn rng_streams_are_reproducible() {
        let mut a = Rng::from_seed(5);
        let mut b = Rng::from_seed(5);
        let mut buf_a = [0u8; 64];
        let mut buf_b = [0u8; 64];
        a.fill_bytes(&mut buf_a);
        b.fill_bytes(&mut buf_b);
        assert_eq!(buf_a, buf_b);
        assert_eq!(a.next_u64(), b.next_u64());
    }
}
