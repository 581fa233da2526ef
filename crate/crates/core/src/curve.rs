//! Short-Weierstrass elliptic-curve groups over prime fields.
//!
//! A curve is described by the domain record `(q, fr, a, b, T, order,
//! cofactor)`: the field prime, the field-representation tag (only
//! `"prime-field"` is supported), the coefficients of
//! `y² = x³ + ax + b`, a base point `T`, the prime order of `T`, and the
//! cofactor. Arithmetic is plain affine chord-and-tangent with one modular
//! inversion per addition — slow and variable-time, which is fine at the
//! scales this crate targets.

use crate::numeric::{self, Rng};
use num_bigint::BigUint;
use num_traits::{Num, One, Zero};
use serde::{Deserialize, Serialize};
use std::sync::{Arc, OnceLock};
use thiserror::Error;

const TOY_CURVE_JSON: &str = include_str!("../curves/toy.json");
const SECP256R1_JSON: &str = include_str!("../curves/secp256r1.json");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CurveError {
    #[error("curve config: {0}")]
    ConfigParse(String),
    #[error("unsupported field representation {0:?} (expected \"prime-field\")")]
    UnsupportedFieldRep(String),
    #[error("field modulus q is not an odd prime >= 5")]
    FieldNotPrime,
    #[error("curve coefficient out of range [0, q)")]
    CoefficientOutOfRange,
    #[error("curve is singular: 4a^3 + 27b^2 = 0 (mod q)")]
    SingularCurve,
    #[error("base point does not satisfy the curve equation")]
    BasePointOffCurve,
    #[error("declared base-point order is composite")]
    OrderComposite,
    #[error("order * T is not the point at infinity")]
    OrderMismatch,
    #[error("cofactor must be positive")]
    CofactorZero,
    #[error("point does not lie on the curve")]
    PointOffCurve,
    #[error("point is outside the base-point subgroup")]
    PointOutsideSubgroup,
    #[error("the point at infinity has no x-coordinate")]
    InfinityHasNoX,
}

/// Affine point, or the group identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Point {
    Infinity,
    Affine { x: BigUint, y: BigUint },
}

impl Point {
    pub fn affine(x: BigUint, y: BigUint) -> Self {
        Point::Affine { x, y }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, Point::Infinity)
    }
}

/// On-disk curve record. All numeric fields are hexadecimal strings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveConfig {
    pub q: String,
    pub a: String,
    pub b: String,
    #[serde(rename = "Tx")]
    pub tx: String,
    #[serde(rename = "Ty")]
    pub ty: String,
    pub order: String,
    pub cofactor: String,
    #[serde(default = "default_field_rep")]
    pub fr: String,
}

fn default_field_rep() -> String {
    "prime-field".to_string()
}

/// Validated curve domain parameters.
#[derive(Debug, Clone)]
pub struct CurveParams {
    q: BigUint,
    a: BigUint,
    b: BigUint,
    base: Point,
    order: BigUint,
    cofactor: BigUint,
    q_minus_2: BigUint,
    // 2^i · T, built on first base-point multiplication and shared
    // between clones
    base_doubles: Arc<OnceLock<Vec<Point>>>,
}

impl PartialEq for CurveParams {
    fn eq(&self, other: &Self) -> bool {
        self.q == other.q
            && self.a == other.a
            && self.b == other.b
            && self.base == other.base
            && self.order == other.order
            && self.cofactor == other.cofactor
    }
}

impl Eq for CurveParams {}

fn parse_hex(field: &str, value: &str) -> Result<BigUint, CurveError> {
    BigUint::from_str_radix(value, 16)
        .map_err(|e| CurveError::ConfigParse(format!("field {field}: {e}")))
}

impl CurveParams {
    /// Validates a config record and builds the curve.
    pub fn load(config: &CurveConfig) -> Result<Self, CurveError> {
        if config.fr != "prime-field" {
            return Err(CurveError::UnsupportedFieldRep(config.fr.clone()));
        }
        let q = parse_hex("q", &config.q)?;
        let a = parse_hex("a", &config.a)?;
        let b = parse_hex("b", &config.b)?;
        let tx = parse_hex("Tx", &config.tx)?;
        let ty = parse_hex("Ty", &config.ty)?;
        let order = parse_hex("order", &config.order)?;
        let cofactor = parse_hex("cofactor", &config.cofactor)?;

        // Primality checks use fixed witnesses so that validation is
        // deterministic.
        let mut witness_rng = Rng::from_seed(0x5ec5_ec5e);
        if q < BigUint::from(5u32) || !numeric::is_probable_prime(&q, 40, &mut witness_rng) {
            return Err(CurveError::FieldNotPrime);
        }
        if a >= q || b >= q {
            return Err(CurveError::CoefficientOutOfRange);
        }
        // 4a^3 + 27b^2 != 0 (mod q)
        let disc = (BigUint::from(4u32) * &a * &a * &a + BigUint::from(27u32) * &b * &b) % &q;
        if disc.is_zero() {
            return Err(CurveError::SingularCurve);
        }
        if tx >= q || ty >= q {
            return Err(CurveError::BasePointOffCurve);
        }
        let base = Point::affine(tx, ty);
        let q_minus_2 = &q - BigUint::from(2u32);
        let curve = CurveParams {
            q,
            a,
            b,
            base: base.clone(),
            order: order.clone(),
            cofactor,
            q_minus_2,
            base_doubles: Arc::new(OnceLock::new()),
        };
        if !curve.is_on_curve(&base) {
            return Err(CurveError::BasePointOffCurve);
        }
        if !numeric::is_probable_prime(&order, 40, &mut witness_rng) {
            return Err(CurveError::OrderComposite);
        }
        if !curve.scalar_mul_raw(&order, &base)?.is_infinity() {
            return Err(CurveError::OrderMismatch);
        }
        if curve.cofactor.is_zero() {
            return Err(CurveError::CofactorZero);
        }
        Ok(curve)
    }

    pub fn from_json(text: &str) -> Result<Self, CurveError> {
        let config: CurveConfig =
            serde_json::from_str(text).map_err(|e| CurveError::ConfigParse(e.to_string()))?;
        Self::load(&config)
    }

    /// The 19-point curve over F₁₇ used by the exhaustive test suites.
    pub fn toy() -> Self {
        Self::from_json(TOY_CURVE_JSON).expect("bundled toy curve is valid")
    }

    /// NIST P-256 constants, loaded from the bundled config record.
    pub fn secp256r1() -> Self {
        Self::from_json(SECP256R1_JSON).expect("bundled secp256r1 curve is valid")
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    pub fn a(&self) -> &BigUint {
        &self.a
    }

    pub fn b(&self) -> &BigUint {
        &self.b
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    /// Prime order of the base point (the signature scalar modulus).
    pub fn order(&self) -> &BigUint {
        &self.order
    }

    pub fn cofactor(&self) -> &BigUint {
        &self.cofactor
    }

    /// Byte width of one field element in the uncompressed wire encoding.
    pub fn field_byte_len(&self) -> usize {
        self.q.bits().div_ceil(8) as usize
    }

    /// Byte width of a scalar mod `order` in the wire encoding.
    pub fn scalar_byte_len(&self) -> usize {
        self.order.bits().div_ceil(8) as usize
    }

    fn fadd(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a + b) % &self.q
    }

    fn fsub(&self, a: &BigUint, b: &BigUint) -> BigUint {
        ((a + &self.q) - b) % &self.q
    }

    fn fmul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a * b) % &self.q
    }

    // Fermat inversion: q is prime (validated at load) and the group-law
    // case analysis keeps denominators nonzero, so a^(q−2) is safe and
    // considerably faster than an extended-gcd walk.
    fn finv(&self, a: &BigUint) -> Result<BigUint, CurveError> {
        if a.is_zero() {
            return Err(CurveError::PointOffCurve);
        }
        Ok(a.modpow(&self.q_minus_2, &self.q))
    }

    pub fn is_on_curve(&self, p: &Point) -> bool {
        match p {
            Point::Infinity => true,
            Point::Affine { x, y } => {
                if x >= &self.q || y >= &self.q {
                    return false;
                }
                let lhs = self.fmul(y, y);
                let rhs = self.fadd(
                    &self.fadd(&self.fmul(&self.fmul(x, x), x), &self.fmul(&self.a, x)),
                    &self.b,
                );
                lhs == rhs
            }
        }
    }

    pub fn validate_point(&self, p: &Point) -> Result<(), CurveError> {
        if self.is_on_curve(p) {
            Ok(())
        } else {
            Err(CurveError::PointOffCurve)
        }
    }

    /// On-curve check plus the (expensive) subgroup check `order * P = ∞`.
    pub fn validate_point_strict(&self, p: &Point) -> Result<(), CurveError> {
        self.validate_point(p)?;
        if self.scalar_mul_raw(&self.order, p)?.is_infinity() {
            Ok(())
        } else {
            Err(CurveError::PointOutsideSubgroup)
        }
    }

    /// Group law. Handles identity, doubling, and inverse pairs.
    pub fn point_add(&self, p: &Point, q: &Point) -> Result<Point, CurveError> {
        self.validate_point(p)?;
        self.validate_point(q)?;
        self.add_unchecked(p, q)
    }

    /// The group law without input validation, for internal chains of
    /// additions whose operands are already known to be on the curve.
    fn add_unchecked(&self, p: &Point, q: &Point) -> Result<Point, CurveError> {
        let (x1, y1) = match p {
            Point::Infinity => return Ok(q.clone()),
            Point::Affine { x, y } => (x, y),
        };
        let (x2, y2) = match q {
            Point::Infinity => return Ok(p.clone()),
            Point::Affine { x, y } => (x, y),
        };
        let lambda = if x1 == x2 {
            if self.fadd(y1, y2).is_zero() {
                // q = -p, including the y = 0 self-inverse case
                return Ok(Point::Infinity);
            }
            // tangent: (3x² + a) / 2y
            let num = self.fadd(
                &self.fmul(&BigUint::from(3u32), &self.fmul(x1, x1)),
                &self.a,
            );
            let den = self.fmul(&BigUint::from(2u32), y1);
            self.fmul(&num, &self.finv(&den)?)
        } else {
            // chord: (y2 - y1) / (x2 - x1)
            let num = self.fsub(y2, y1);
            let den = self.fsub(x2, x1);
            self.fmul(&num, &self.finv(&den)?)
        };
        let x3 = self.fsub(&self.fsub(&self.fmul(&lambda, &lambda), x1), x2);
        let y3 = self.fsub(&self.fmul(&lambda, &self.fsub(x1, &x3)), y1);
        Ok(Point::Affine { x: x3, y: y3 })
    }

    /// Double-and-add without reducing `k` first. Needed by validation,
    /// where reducing mod `order` would make the subgroup check vacuous.
    fn scalar_mul_raw(&self, k: &BigUint, p: &Point) -> Result<Point, CurveError> {
        let mut acc = Point::Infinity;
        if k.is_zero() || p.is_infinity() {
            return Ok(acc);
        }
        let bits = k.bits();
        for i in (0..bits).rev() {
            acc = self.add_unchecked(&acc, &acc)?;
            if k.bit(i) {
                acc = self.add_unchecked(&acc, p)?;
            }
        }
        Ok(acc)
    }

    /// `k * P`. With cofactor 1 every curve point lies in the prime-order
    /// subgroup, so `k` is reduced mod `order` first. Multiplications of
    /// the base point go through a precomputed table of doublings.
    pub fn scalar_mul(&self, k: &BigUint, p: &Point) -> Result<Point, CurveError> {
        self.validate_point(p)?;
        let reduced;
        let k = if self.cofactor.is_one() {
            reduced = k % &self.order;
            &reduced
        } else {
            k
        };
        if p == &self.base && k.bits() <= self.order.bits() {
            return self.base_mul(k);
        }
        self.scalar_mul_raw(k, p)
    }

    fn base_mul(&self, k: &BigUint) -> Result<Point, CurveError> {
        let doubles = self.base_doubles.get_or_init(|| {
            let mut table = Vec::with_capacity(self.order.bits() as usize + 1);
            table.push(self.base.clone());
            for i in 1..=self.order.bits() as usize {
                let prev = &table[i - 1];
                let doubled = self
                    .add_unchecked(prev, prev)
                    .expect("doubling stays on the curve");
                table.push(doubled);
            }
            table
        });
        let mut acc = Point::Infinity;
        for i in 0..k.bits() {
            if k.bit(i) {
                acc = self.add_unchecked(&acc, &doubles[i as usize])?;
            }
        }
        Ok(acc)
    }

    /// x-coordinate reduced mod the base-point order (the `r` of a
    /// signature). Rejects the point at infinity.
    pub fn x_mod_order(&self, p: &Point) -> Result<BigUint, CurveError> {
        match p {
            Point::Infinity => Err(CurveError::InfinityHasNoX),
            Point::Affine { x, .. } => Ok(x % &self.order),
        }
    }

    pub fn negate(&self, p: &Point) -> Result<Point, CurveError> {
        self.validate_point(p)?;
        match p {
            Point::Infinity => Ok(Point::Infinity),
            Point::Affine { x, y } => {
                let ny = if y.is_zero() {
                    BigUint::zero()
                } else {
                    &self.q - y
                };
                Ok(Point::Affine { x: x.clone(), y: ny })
            }
        }
    }
}
