//! Exact scalar fields: prime fields GF(p) with p < 2^31, and the rationals.

use std::fmt;
use std::fmt::Debug;
use std::hash::Hash;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};

/// Runtime description of a field, as written in files (`gf:<p>` or `q`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FieldSpec {
    Prime(u32),
    Rationals,
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Prime(p) => write!(f, "gf:{p}"),
            FieldSpec::Rationals => write!(f, "q"),
        }
    }
}

impl FromStr for FieldSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "q" || s == "Q" {
            return Ok(FieldSpec::Rationals);
        }
        let digits = s
            .strip_prefix("gf:")
            .or_else(|| s.strip_prefix("GF:"))
            .ok_or_else(|| Error::parse(0, format!("unknown field tag {s:?}")))?;
        let p: u64 = digits
            .parse()
            .map_err(|_| Error::parse(0, format!("bad modulus in {s:?}")))?;
        Fp::new(p).map(|f| FieldSpec::Prime(f.p))
    }
}

/// Number of elements of a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldSize {
    Finite(u64),
    Infinite,
}

impl FieldSize {
    /// True when the field has more than `n` elements.
    pub fn exceeds(self, n: u64) -> bool {
        match self {
            FieldSize::Finite(q) => q > n,
            FieldSize::Infinite => true,
        }
    }
}

/// Exact field arithmetic on an associated element type.
///
/// A field value is a small handle (the modulus, or nothing for the
/// rationals); elements carry no back-pointer, so containers store the
/// handle once and compare handles to catch mixed-field operations.
pub trait Field: Clone + Debug + PartialEq + Eq + Send + Sync + 'static {
    type Elem: Clone + Debug + PartialEq + Eq + Hash + Send + Sync;

    fn spec(&self) -> FieldSpec;
    fn size(&self) -> FieldSize;
    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn from_i64(&self, v: i64) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn inv(&self, a: &Self::Elem) -> Result<Self::Elem>;
    fn is_zero(&self, a: &Self::Elem) -> bool;

    /// Uniform element for finite fields; an integer in `[0, height)` for the rationals.
    fn random<R: Rng + ?Sized>(&self, rng: &mut R, height: u64) -> Self::Elem;

    /// Size of the sample set `random` draws from.
    fn sample_size(&self, height: u64) -> u64 {
        match self.size() {
            FieldSize::Finite(q) => q,
            FieldSize::Infinite => height.max(1),
        }
    }

    /// The `idx`-th element in the canonical enumeration `0, 1, ..., q-1`.
    fn element(&self, idx: u64) -> Result<Self::Elem>;

    fn parse_elem(&self, s: &str) -> Result<Self::Elem>;
    fn format_elem(&self, a: &Self::Elem) -> String;

    fn is_one(&self, a: &Self::Elem) -> bool {
        *a == self.one()
    }

    fn div(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem> {
        Ok(self.mul(a, &self.inv(b)?))
    }

    fn pow(&self, a: &Self::Elem, mut e: u64) -> Self::Elem {
        let mut base = a.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// `acc += a * b`.
    fn mul_add_assign(&self, acc: &mut Self::Elem, a: &Self::Elem, b: &Self::Elem) {
        *acc = self.add(acc, &self.mul(a, b));
    }

    /// All elements, in canonical order.
    fn elements(&self) -> Result<Vec<Self::Elem>> {
        match self.size() {
            FieldSize::Finite(q) => (0..q).map(|i| self.element(i)).collect(),
            FieldSize::Infinite => Err(Error::InfiniteField),
        }
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::MixedFields(self.spec().to_string(), other.spec().to_string()))
        }
    }
}

/// Deterministic primality test by trial division; fine for moduli below 2^31.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n % 2 == 0 {
        return false;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// The prime field GF(p).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fp {
    p: u32,
}

impl Fp {
    pub fn new(p: u64) -> Result<Self> {
        if p >= 1 << 31 {
            return Err(Error::ModulusOutOfRange(p));
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(Fp { p: p as u32 })
    }

    pub fn modulus(&self) -> u32 {
        self.p
    }

    #[inline]
    fn reduce(&self, v: u64) -> u32 {
        (v % self.p as u64) as u32
    }
}

impl Field for Fp {
    type Elem = u32;

    fn spec(&self) -> FieldSpec {
        FieldSpec::Prime(self.p)
    }

    fn size(&self) -> FieldSize {
        FieldSize::Finite(self.p as u64)
    }

    fn zero(&self) -> u32 {
        0
    }

    fn one(&self) -> u32 {
        1 % self.p
    }

    fn from_i64(&self, v: i64) -> u32 {
        v.rem_euclid(self.p as i64) as u32
    }

    #[inline]
    fn add(&self, a: &u32, b: &u32) -> u32 {
        self.reduce(*a as u64 + *b as u64)
    }

    #[inline]
    fn sub(&self, a: &u32, b: &u32) -> u32 {
        self.reduce(*a as u64 + self.p as u64 - *b as u64)
    }

    #[inline]
    fn mul(&self, a: &u32, b: &u32) -> u32 {
        self.reduce(*a as u64 * *b as u64)
    }

    #[inline]
    fn neg(&self, a: &u32) -> u32 {
        if *a == 0 {
            0
        } else {
            self.p - *a
        }
    }

    fn inv(&self, a: &u32) -> Result<u32> {
        if *a == 0 {
            return Err(Error::DivisionByZero);
        }
        Ok(self.pow(a, self.p as u64 - 2))
    }

    #[inline]
    fn is_zero(&self, a: &u32) -> bool {
        *a == 0
    }

    fn random<R: Rng + ?Sized>(&self, rng: &mut R, _height: u64) -> u32 {
        rng.gen_range(0..self.p)
    }

    fn element(&self, idx: u64) -> Result<u32> {
        if idx >= self.p as u64 {
            return Err(Error::IndexOutOfRange(format!("element {idx} of GF({})", self.p)));
        }
        Ok(idx as u32)
    }

    fn parse_elem(&self, s: &str) -> Result<u32> {
        let v: BigInt = s
            .trim()
            .parse()
            .map_err(|_| Error::parse(0, format!("bad GF({}) element {s:?}", self.p)))?;
        let r = ((v % BigInt::from(self.p)) + BigInt::from(self.p)) % BigInt::from(self.p);
        Ok(r.to_u32().expect("reduced value fits"))
    }

    fn format_elem(&self, a: &u32) -> String {
        a.to_string()
    }

    #[inline]
    fn mul_add_assign(&self, acc: &mut u32, a: &u32, b: &u32) {
        *acc = self.reduce(*acc as u64 + *a as u64 * *b as u64);
    }
}

/// The rational numbers, with arbitrary-precision numerators and denominators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Rationals;

impl Field for Rationals {
    type Elem = BigRational;

    fn spec(&self) -> FieldSpec {
        FieldSpec::Rationals
    }

    fn size(&self) -> FieldSize {
        FieldSize::Infinite
    }

    fn zero(&self) -> BigRational {
        BigRational::zero()
    }

    fn one(&self) -> BigRational {
        BigRational::one()
    }

    fn from_i64(&self, v: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(v))
    }

    fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a + b
    }

    fn sub(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a - b
    }

    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }

    fn neg(&self, a: &BigRational) -> BigRational {
        -a
    }

    fn inv(&self, a: &BigRational) -> Result<BigRational> {
        if a.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(a.recip())
    }

    fn is_zero(&self, a: &BigRational) -> bool {
        a.is_zero()
    }

    fn random<R: Rng + ?Sized>(&self, rng: &mut R, height: u64) -> BigRational {
        let v = rng.gen_range(0..height.max(1));
        BigRational::from_integer(BigInt::from(v))
    }

    fn element(&self, _idx: u64) -> Result<BigRational> {
        Err(Error::InfiniteField)
    }

    fn parse_elem(&self, s: &str) -> Result<BigRational> {
        let s = s.trim();
        let bad = || Error::parse(0, format!("bad rational {s:?}"));
        match s.split_once('/') {
            Some((n, d)) => {
                let n: BigInt = n.parse().map_err(|_| bad())?;
                let d: BigInt = d.parse().map_err(|_| bad())?;
                if d.is_zero() {
                    return Err(Error::DivisionByZero);
                }
                Ok(BigRational::new(n, d))
            }
            None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
        }
    }

    fn format_elem(&self, a: &BigRational) -> String {
        if a.denom().is_one() {
            a.numer().to_string()
        } else {
            format!("{}/{}", a.numer(), a.denom())
        }
    }
}

/// A field element bundled with its field, for checked arithmetic at API
/// boundaries (mixed fields and division by zero become errors).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldElem<F: Field> {
    pub field: F,
    pub value: F::Elem,
}

impl<F: Field> FieldElem<F> {
    pub fn new(field: F, value: F::Elem) -> Self {
        FieldElem { field, value }
    }

    fn binop(&self, other: &Self, op: impl Fn(&F, &F::Elem, &F::Elem) -> F::Elem) -> Result<Self> {
        self.field.check_same(&other.field)?;
        Ok(FieldElem::new(self.field.clone(), op(&self.field, &self.value, &other.value)))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.binop(other, F::add)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.binop(other, F::sub)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.binop(other, F::mul)
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        self.field.check_same(&other.field)?;
        let v = self.field.div(&self.value, &other.value)?;
        Ok(FieldElem::new(self.field.clone(), v))
    }

    pub fn inv(&self) -> Result<Self> {
        Ok(FieldElem::new(self.field.clone(), self.field.inv(&self.value)?))
    }

    pub fn neg(&self) -> Self {
        FieldElem::new(self.field.clone(), self.field.neg(&self.value))
    }
}

impl<F: Field> fmt::Display for FieldElem<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.field.format_elem(&self.value))
    }
}

/// Every element of a finite field, or `InfiniteField`.
pub fn enumerate_field<F: Field>(field: &F) -> Result<Vec<F::Elem>> {
    field.elements()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_modulus_checks() {
        assert!(Fp::new(2).is_ok());
        assert!(Fp::new(2_147_483_647).is_ok());
        assert_eq!(Fp::new(1), Err(Error::NotPrime(1)));
        assert_eq!(Fp::new(15), Err(Error::NotPrime(15)));
        assert!(matches!(Fp::new(1 << 31), Err(Error::ModulusOutOfRange(_))));
    }

    #[test]
    fn gf7_arithmetic() {
        let f = Fp::new(7).unwrap();
        assert_eq!(f.inv(&3).unwrap(), 5);
        assert_eq!(f.sub(&2, &5), 4);
        assert_eq!(f.from_i64(-1), 6);
        assert_eq!(f.inv(&0), Err(Error::DivisionByZero));
        assert_eq!(f.elements().unwrap().len(), 7);
    }

    #[test]
    fn large_prime_products_do_not_overflow() {
        let f = Fp::new(2_147_483_629).unwrap();
        let a = f.from_i64(-1);
        assert_eq!(f.mul(&a, &a), 1);
    }

    #[test]
    fn rationals_parse_and_print() {
        let q = Rationals;
        let x = q.parse_elem("-6/4").unwrap();
        assert_eq!(q.format_elem(&x), "-3/2");
        assert_eq!(q.format_elem(&q.from_i64(5)), "5");
        assert_eq!(q.parse_elem("1/0"), Err(Error::DivisionByZero));
        assert_eq!(q.elements(), Err(Error::InfiniteField));
    }

    #[test]
    fn mixed_fields_are_rejected() {
        let a = FieldElem::new(Fp::new(5).unwrap(), 2);
        let b = FieldElem::new(Fp::new(7).unwrap(), 2);
        assert!(matches!(a.add(&b), Err(Error::MixedFields(_, _))));
        let z = FieldElem::new(Fp::new(5).unwrap(), 0);
        assert_eq!(a.div(&z), Err(Error::DivisionByZero));
    }

    #[test]
    fn field_tags_round_trip() {
        for tag in ["gf:2", "gf:41", "q"] {
            let spec: FieldSpec = tag.parse().unwrap();
            assert_eq!(spec.to_string(), tag);
        }
        assert!("gf:9".parse::<FieldSpec>().is_err());
    }
}
