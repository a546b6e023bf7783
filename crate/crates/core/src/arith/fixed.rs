//! Two's-complement fixed point with a configurable word and fraction length.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use super::{ArithError, Arithmetic, Rational, Sign};

/// What happens when a result leaves the representable range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverflowPolicy {
    Saturate,
    Wrap,
    Error,
}

/// How bits below the last fraction bit are discarded.
///
/// `Truncate` drops them, which in two's complement rounds toward negative
/// infinity (an arithmetic right shift).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    NearestEven,
    Truncate,
}

impl fmt::Display for OverflowPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OverflowPolicy::Saturate => "saturate",
            OverflowPolicy::Wrap => "wrap",
            OverflowPolicy::Error => "error",
        })
    }
}

impl fmt::Display for Rounding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rounding::NearestEven => "nearest_even",
            Rounding::Truncate => "truncate",
        })
    }
}

impl FromStr for OverflowPolicy {
    type Err = ArithError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "saturate" => Ok(OverflowPolicy::Saturate),
            "wrap" => Ok(OverflowPolicy::Wrap),
            "error" => Ok(OverflowPolicy::Error),
            other => Err(ArithError::InvalidFormat(format!(
                "unknown overflow policy `{other}` (expected saturate, wrap or error)"
            ))),
        }
    }
}

impl FromStr for Rounding {
    type Err = ArithError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "nearest_even" => Ok(Rounding::NearestEven),
            "truncate" => Ok(Rounding::Truncate),
            other => Err(ArithError::InvalidFormat(format!(
                "unknown rounding `{other}` (expected nearest_even or truncate)"
            ))),
        }
    }
}

/// Word layout and policies of a fixed-point datapath.
///
/// A raw value `r` represents `r / 2^frac_bits`. The representable range is
/// `[-2^(total_bits-1-frac_bits), 2^(total_bits-1-frac_bits) - 2^-frac_bits]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "FormatFields", into = "FormatFields")]
pub struct FixedFormat {
    total_bits: u32,
    frac_bits: u32,
    overflow: OverflowPolicy,
    rounding: Rounding,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FormatFields {
    total_bits: u32,
    frac_bits: u32,
    overflow: OverflowPolicy,
    rounding: Rounding,
}

impl TryFrom<FormatFields> for FixedFormat {
    type Error = ArithError;

    fn try_from(f: FormatFields) -> Result<Self, Self::Error> {
        FixedFormat::new(f.total_bits, f.frac_bits, f.overflow, f.rounding)
    }
}

impl From<FixedFormat> for FormatFields {
    fn from(f: FixedFormat) -> Self {
        FormatFields {
            total_bits: f.total_bits,
            frac_bits: f.frac_bits,
            overflow: f.overflow,
            rounding: f.rounding,
        }
    }
}

impl Default for FixedFormat {
    /// Q7.8 in a 16-bit word, saturating, round-half-even.
    fn default() -> Self {
        FixedFormat {
            total_bits: 16,
            frac_bits: 8,
            overflow: OverflowPolicy::Saturate,
            rounding: Rounding::NearestEven,
        }
    }
}

impl FixedFormat {
    pub const MAX_BITS: u32 = 64;

    pub fn new(
        total_bits: u32,
        frac_bits: u32,
        overflow: OverflowPolicy,
        rounding: Rounding,
    ) -> Result<Self, ArithError> {
        if !(2..=Self::MAX_BITS).contains(&total_bits) {
            return Err(ArithError::InvalidFormat(format!(
                "total_bits must be in 2..=64, got {total_bits}"
            )));
        }
        if frac_bits >= total_bits {
            return Err(ArithError::InvalidFormat(format!(
                "frac_bits ({frac_bits}) must be smaller than total_bits ({total_bits})"
            )));
        }
        Ok(FixedFormat {
            total_bits,
            frac_bits,
            overflow,
            rounding,
        })
    }

    pub fn total_bits(&self) -> u32 {
        self.total_bits
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn overflow(&self) -> OverflowPolicy {
        self.overflow
    }

    pub fn rounding(&self) -> Rounding {
        self.rounding
    }

    /// Same word, one more fraction bit. Used to give halving a guard bit.
    pub fn with_guard_bit(&self) -> Result<Self, ArithError> {
        Self::new(
            self.total_bits,
            self.frac_bits + 1,
            self.overflow,
            self.rounding,
        )
    }

    pub fn with_overflow(mut self, overflow: OverflowPolicy) -> Self {
        self.overflow = overflow;
        self
    }

    pub fn with_rounding(mut self, rounding: Rounding) -> Self {
        self.rounding = rounding;
        self
    }

    pub fn min_raw(&self) -> i64 {
        (-(1i128 << (self.total_bits - 1))) as i64
    }

    pub fn max_raw(&self) -> i64 {
        ((1i128 << (self.total_bits - 1)) - 1) as i64
    }

    /// Smallest representable value.
    pub fn min_value(&self) -> Rational {
        self.raw_to_rational(self.min_raw())
    }

    /// Largest representable value.
    pub fn max_value(&self) -> Rational {
        self.raw_to_rational(self.max_raw())
    }

    pub fn contains_raw(&self, raw: i128) -> bool {
        raw >= self.min_raw() as i128 && raw <= self.max_raw() as i128
    }

    /// Brings a wide intermediate back into the word according to the
    /// overflow policy. Returns the raw value and whether it was altered.
    pub fn fit(&self, wide: i128) -> Result<(i64, bool), ArithError> {
        if self.contains_raw(wide) {
            return Ok((wide as i64, false));
        }
        match self.overflow {
            OverflowPolicy::Saturate => {
                let raw = if wide < 0 {
                    self.min_raw()
                } else {
                    self.max_raw()
                };
                Ok((raw, true))
            }
            OverflowPolicy::Wrap => {
                let shift = 128 - self.total_bits;
                Ok((((wide << shift) >> shift) as i64, true))
            }
            OverflowPolicy::Error => Err(ArithError::Overflow { format: *self }),
        }
    }

    /// Arithmetic right shift by `shift` bits under this format's rounding.
    pub fn shift_right(&self, value: i128, shift: u32) -> i128 {
        if shift == 0 {
            return value;
        }
        let floor = value >> shift;
        match self.rounding {
            Rounding::Truncate => floor,
            Rounding::NearestEven => {
                let rem = value - (floor << shift);
                let half = 1i128 << (shift - 1);
                if rem > half || (rem == half && floor & 1 == 1) {
                    floor + 1
                } else {
                    floor
                }
            }
        }
    }

    pub fn raw_to_rational(&self, raw: i64) -> Rational {
        Rational::new(BigInt::from(raw), BigInt::one() << self.frac_bits)
    }

    /// Encodes an exact value, rounding and applying the overflow policy.
    /// The flag is true when the encoding represents `value` exactly.
    pub fn encode(&self, value: &Rational) -> Result<(i64, bool), ArithError> {
        let scaled = value * Rational::from_integer(BigInt::one() << self.frac_bits);
        let exact = scaled.is_integer();
        let rounded = if exact {
            scaled.to_integer()
        } else {
            let floor = scaled.floor().to_integer();
            match self.rounding {
                Rounding::Truncate => floor,
                Rounding::NearestEven => {
                    let frac = &scaled - Rational::from_integer(floor.clone());
                    let half = Rational::new(BigInt::one(), BigInt::from(2));
                    if frac > half || (frac == half && floor.is_odd()) {
                        floor + 1
                    } else {
                        floor
                    }
                }
            }
        };
        let (raw, altered) = match rounded.to_i128() {
            Some(wide) => self.fit(wide)?,
            None => match self.overflow {
                OverflowPolicy::Saturate if rounded.is_negative() => (self.min_raw(), true),
                OverflowPolicy::Saturate => (self.max_raw(), true),
                OverflowPolicy::Wrap => {
                    let modulus = BigInt::one() << self.total_bits;
                    let low = rounded.mod_floor(&modulus).to_i128().unwrap_or_default();
                    (self.fit(low)?.0, true)
                }
                OverflowPolicy::Error => return Err(ArithError::Overflow { format: *self }),
            },
        };
        Ok((raw, exact && !altered))
    }

    /// Writes the value of a raw word as an exact decimal.
    pub fn format_raw(&self, raw: i64) -> String {
        let value = self.raw_to_rational(raw);
        if value.is_integer() {
            return value.to_integer().to_string();
        }
        // raw / 2^f == raw * 5^f / 10^f, which always terminates.
        let digits = (BigInt::from(raw).abs() * BigInt::from(5).pow(self.frac_bits)).to_string();
        let f = self.frac_bits as usize;
        let padded = format!("{digits:0>width$}", width = f + 1);
        let (int_part, frac_part) = padded.split_at(padded.len() - f);
        let frac_part = frac_part.trim_end_matches('0');
        let sign = if raw < 0 { "-" } else { "" };
        format!("{sign}{int_part}.{frac_part}")
    }
}

impl fmt::Display for FixedFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "fixed({},{},{},{})",
            self.total_bits, self.frac_bits, self.overflow, self.rounding
        )
    }
}

impl FromStr for FixedFormat {
    type Err = ArithError;

    /// Accepts `w,f,policy,rounding` or the display form `fixed(w,f,policy,rounding)`.
    /// Policy and rounding may be omitted and default to saturate / nearest_even.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let body = s.trim();
        let body = body
            .strip_prefix("fixed(")
            .and_then(|b| b.strip_suffix(')'))
            .unwrap_or(body);
        let parts: Vec<&str> = body.split(',').map(str::trim).collect();
        if parts.len() < 2 || parts.len() > 4 {
            return Err(ArithError::InvalidFormat(format!(
                "expected `total_bits,frac_bits[,policy[,rounding]]`, got `{s}`"
            )));
        }
        let bits = |p: &str| {
            p.parse::<u32>()
                .map_err(|_| ArithError::InvalidFormat(format!("`{p}` is not a bit count")))
        };
        let overflow = match parts.get(2) {
            Some(p) => p.parse()?,
            None => OverflowPolicy::Saturate,
        };
        let rounding = match parts.get(3) {
            Some(p) => p.parse()?,
            None => Rounding::NearestEven,
        };
        FixedFormat::new(bits(parts[0])?, bits(parts[1])?, overflow, rounding)
    }
}

/// Fixed-point backend. Values are raw register words.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedPoint {
    pub format: FixedFormat,
}

impl FixedPoint {
    pub fn new(format: FixedFormat) -> Self {
        FixedPoint { format }
    }
}

impl Arithmetic for FixedPoint {
    type Value = i64;

    fn zero(&self) -> i64 {
        0
    }

    fn from_rational(&self, value: &Rational) -> Result<i64, ArithError> {
        self.format.encode(value).map(|(raw, _)| raw)
    }

    fn to_rational(&self, value: &i64) -> Result<Rational, ArithError> {
        Ok(self.format.raw_to_rational(*value))
    }

    fn signed_sum(&self, terms: &[(Sign, &i64)]) -> Result<i64, ArithError> {
        let wide: i128 = terms
            .iter()
            .map(|(sign, v)| match sign {
                Sign::Plus => **v as i128,
                Sign::Minus => -(**v as i128),
            })
            .sum();
        self.format.fit(wide).map(|(raw, _)| raw)
    }

    fn mul(&self, a: &i64, b: &i64) -> Result<i64, ArithError> {
        let full = *a as i128 * *b as i128;
        let scaled = self.format.shift_right(full, self.format.frac_bits);
        self.format.fit(scaled).map(|(raw, _)| raw)
    }

    fn halve(&self, a: &i64) -> Result<i64, ArithError> {
        let shifted = self.format.shift_right(*a as i128, 1);
        self.format.fit(shifted).map(|(raw, _)| raw)
    }
}
