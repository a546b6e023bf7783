//! Scalar arithmetic backends.
//!
//! Every kernel in this crate is written against [`Arithmetic`], so the same
//! code runs as an exact-rational oracle, in binary64, or as a bit-accurate
//! model of a fixed-point datapath. [`Counting`] wraps any backend and tallies
//! the operations a kernel performs.

mod fixed;
mod literal;
mod scalar;

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::Serialize;

pub use fixed::{FixedFormat, FixedPoint, OverflowPolicy, Rounding};
pub use literal::{format_rational, parse_literal};
pub use scalar::{Backend, BackendKind, Converted, ScalarValue};

/// Arbitrary-precision rational number used by the exact backend.
pub type Rational = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ArithError {
    #[error("backend mismatch: {left} vs {right}")]
    BackendMismatch { left: String, right: String },
    #[error("overflow in {format}")]
    Overflow { format: FixedFormat },
    #[error("invalid fixed-point format: {0}")]
    InvalidFormat(String),
    #[error("non-finite value {0}")]
    NonFinite(String),
    #[error("invalid numeric literal `{0}`")]
    InvalidLiteral(String),
}

/// Sign applied to one input port of an algebraic adder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn from_coeff(c: i8) -> Option<Sign> {
        match c {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// A scalar number system the kernels can run on.
///
/// `signed_sum` models an algebraic adder of any arity: the inputs are
/// combined at full precision and rounded/overflow-checked once.
#[allow(clippy::wrong_self_convention)]
pub trait Arithmetic {
    type Value: Clone + fmt::Debug + PartialEq + Send + Sync;

    fn zero(&self) -> Self::Value;

    /// Encodes an exact value in this backend, rounding if necessary.
    fn from_rational(&self, value: &Rational) -> Result<Self::Value, ArithError>;

    fn to_rational(&self, value: &Self::Value) -> Result<Rational, ArithError>;

    fn signed_sum(&self, terms: &[(Sign, &Self::Value)]) -> Result<Self::Value, ArithError>;

    fn mul(&self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value, ArithError>;

    /// Division by two; the only division the minimal filtering method needs.
    fn halve(&self, a: &Self::Value) -> Result<Self::Value, ArithError>;

    fn add(&self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value, ArithError> {
        self.signed_sum(&[(Sign::Plus, a), (Sign::Plus, b)])
    }

    fn sub(&self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value, ArithError> {
        self.signed_sum(&[(Sign::Plus, a), (Sign::Minus, b)])
    }

    fn from_int(&self, value: i64) -> Result<Self::Value, ArithError> {
        self.from_rational(&Rational::from_integer(BigInt::from(value)))
    }
}

impl<A: Arithmetic + ?Sized> Arithmetic for &A {
    type Value = A::Value;

    fn zero(&self) -> Self::Value {
        (**self).zero()
    }
    fn from_rational(&self, value: &Rational) -> Result<Self::Value, ArithError> {
        (**self).from_rational(value)
    }
    fn to_rational(&self, value: &Self::Value) -> Result<Rational, ArithError> {
        (**self).to_rational(value)
    }
    fn signed_sum(&self, terms: &[(Sign, &Self::Value)]) -> Result<Self::Value, ArithError> {
        (**self).signed_sum(terms)
    }
    fn mul(&self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value, ArithError> {
        (**self).mul(a, b)
    }
    fn halve(&self, a: &Self::Value) -> Result<Self::Value, ArithError> {
        (**self).halve(a)
    }
}

/// Exact rational arithmetic; the verification oracle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Exact;

impl Arithmetic for Exact {
    type Value = Rational;

    fn zero(&self) -> Rational {
        Rational::from_integer(BigInt::from(0))
    }

    fn from_rational(&self, value: &Rational) -> Result<Rational, ArithError> {
        Ok(value.clone())
    }

    fn to_rational(&self, value: &Rational) -> Result<Rational, ArithError> {
        Ok(value.clone())
    }

    fn signed_sum(&self, terms: &[(Sign, &Rational)]) -> Result<Rational, ArithError> {
        let mut acc = self.zero();
        for (sign, v) in terms {
            match sign {
                Sign::Plus => acc += *v,
                Sign::Minus => acc -= *v,
            }
        }
        Ok(acc)
    }

    fn mul(&self, a: &Rational, b: &Rational) -> Result<Rational, ArithError> {
        Ok(a * b)
    }

    fn halve(&self, a: &Rational) -> Result<Rational, ArithError> {
        Ok(a / Rational::from_integer(BigInt::from(2)))
    }
}

/// IEEE 754 binary64.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Float64;

impl Arithmetic for Float64 {
    type Value = f64;

    fn zero(&self) -> f64 {
        0.0
    }

    fn from_rational(&self, value: &Rational) -> Result<f64, ArithError> {
        value
            .to_f64()
            .filter(|v| v.is_finite())
            .ok_or_else(|| ArithError::NonFinite(format_rational(value)))
    }

    fn to_rational(&self, value: &f64) -> Result<Rational, ArithError> {
        Rational::from_float(*value).ok_or_else(|| ArithError::NonFinite(value.to_string()))
    }

    fn signed_sum(&self, terms: &[(Sign, &f64)]) -> Result<f64, ArithError> {
        Ok(terms.iter().fold(0.0, |acc, (sign, v)| match sign {
            Sign::Plus => acc + **v,
            Sign::Minus => acc - **v,
        }))
    }

    fn mul(&self, a: &f64, b: &f64) -> Result<f64, ArithError> {
        Ok(a * b)
    }

    fn halve(&self, a: &f64) -> Result<f64, ArithError> {
        Ok(a * 0.5)
    }
}

/// Operation tallies recorded by [`Counting`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OpCounts {
    pub multiplications: u64,
    pub additions_2in: u64,
    pub additions_3in: u64,
    pub negations: u64,
    pub halvings: u64,
}

impl OpCounts {
    /// Adders expressed as two-input equivalents (a 3-input adder counts twice).
    pub fn additions_2in_equiv(&self) -> u64 {
        self.additions_2in + 2 * self.additions_3in
    }
}

/// Instrumenting wrapper: forwards to `inner` and counts every operation.
///
/// Counters are atomic so a single instance can be shared by parallel tile
/// workers.
#[derive(Debug, Default)]
pub struct Counting<A> {
    inner: A,
    multiplications: AtomicU64,
    additions_2in: AtomicU64,
    additions_3in: AtomicU64,
    negations: AtomicU64,
    halvings: AtomicU64,
}

impl<A> Counting<A> {
    pub fn new(inner: A) -> Self {
        Counting {
            inner,
            multiplications: AtomicU64::new(0),
            additions_2in: AtomicU64::new(0),
            additions_3in: AtomicU64::new(0),
            negations: AtomicU64::new(0),
            halvings: AtomicU64::new(0),
        }
    }

    pub fn inner(&self) -> &A {
        &self.inner
    }

    pub fn counts(&self) -> OpCounts {
        OpCounts {
            multiplications: self.multiplications.load(Ordering::Relaxed),
            additions_2in: self.additions_2in.load(Ordering::Relaxed),
            additions_3in: self.additions_3in.load(Ordering::Relaxed),
            negations: self.negations.load(Ordering::Relaxed),
            halvings: self.halvings.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        for c in [
            &self.multiplications,
            &self.additions_2in,
            &self.additions_3in,
            &self.negations,
            &self.halvings,
        ] {
            c.store(0, Ordering::Relaxed);
        }
    }
}

impl<A: Arithmetic> Arithmetic for Counting<A> {
    type Value = A::Value;

    fn zero(&self) -> Self::Value {
        self.inner.zero()
    }

    fn from_rational(&self, value: &Rational) -> Result<Self::Value, ArithError> {
        self.inner.from_rational(value)
    }

    fn to_rational(&self, value: &Self::Value) -> Result<Rational, ArithError> {
        self.inner.to_rational(value)
    }

    fn signed_sum(&self, terms: &[(Sign, &Self::Value)]) -> Result<Self::Value, ArithError> {
        match terms.len() {
            0 => {}
            1 => {
                if terms[0].0 == Sign::Minus {
                    self.negations.fetch_add(1, Ordering::Relaxed);
                }
            }
            2 => {
                self.additions_2in.fetch_add(1, Ordering::Relaxed);
            }
            3 => {
                self.additions_3in.fetch_add(1, Ordering::Relaxed);
            }
            n => {
                self.additions_2in.fetch_add(n as u64 - 1, Ordering::Relaxed);
            }
        }
        self.inner.signed_sum(terms)
    }

    fn mul(&self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value, ArithError> {
        self.multiplications.fetch_add(1, Ordering::Relaxed);
        self.inner.mul(a, b)
    }

    fn halve(&self, a: &Self::Value) -> Result<Self::Value, ArithError> {
        self.halvings.fetch_add(1, Ordering::Relaxed);
        self.inner.halve(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_basics() {
        let half = Rational::new(1.into(), 2.into());
        assert_eq!(Exact.add(&half, &half).unwrap(), Rational::from_integer(1.into()));
        let three_halves = Rational::new(3.into(), 2.into());
        let two = Exact.from_int(2).unwrap();
        assert_eq!(Exact.mul(&three_halves, &two).unwrap(), Exact.from_int(3).unwrap());
        assert_eq!(Exact.halve(&Exact.from_int(3).unwrap()).unwrap(), three_halves);
    }

    #[test]
    fn float_rejects_non_finite_rationals() {
        let huge = Rational::from_integer(BigInt::from(10).pow(400));
        assert!(Float64.from_rational(&huge).is_err());
        assert!(Float64.to_rational(&f64::NAN).is_err());
        assert_eq!(
            Float64.to_rational(&0.5).unwrap(),
            Rational::new(1.into(), 2.into())
        );
    }

    #[test]
    fn counting_classifies_by_arity() {
        let c = Counting::new(Exact);
        let one = c.from_int(1).unwrap();
        c.add(&one, &one).unwrap();
        c.signed_sum(&[(Sign::Plus, &one), (Sign::Minus, &one), (Sign::Plus, &one)])
            .unwrap();
        c.signed_sum(&[(Sign::Minus, &one)]).unwrap();
        c.signed_sum(&[(Sign::Plus, &one); 5]).unwrap();
        c.mul(&one, &one).unwrap();
        c.halve(&one).unwrap();
        let n = c.counts();
        assert_eq!(n.additions_2in, 1 + 4);
        assert_eq!(n.additions_3in, 1);
        assert_eq!(n.negations, 1);
        assert_eq!(n.multiplications, 1);
        assert_eq!(n.halvings, 1);
        assert_eq!(n.additions_2in_equiv(), 7);
        c.reset();
        assert_eq!(c.counts(), OpCounts::default());
    }
}
