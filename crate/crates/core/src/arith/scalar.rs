//! Runtime-selected backend and its self-describing scalar.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    format_rational, ArithError, Arithmetic, Exact, FixedFormat, FixedPoint, Float64, Rational,
    Sign,
};

/// Backend family without the fixed-point parameters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Exact,
    Float64,
    Fixed,
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(BackendKind::Exact),
            "float64" => Ok(BackendKind::Float64),
            "fixed" => Ok(BackendKind::Fixed),
            other => Err(format!("unknown backend `{other}`")),
        }
    }
}

/// A fully specified arithmetic backend.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum Backend {
    #[default]
    Exact,
    Float64,
    Fixed(FixedFormat),
}

impl Backend {
    pub fn kind(&self) -> BackendKind {
        match self {
            Backend::Exact => BackendKind::Exact,
            Backend::Float64 => BackendKind::Float64,
            Backend::Fixed(_) => BackendKind::Fixed,
        }
    }

    pub fn fixed_format(&self) -> Option<FixedFormat> {
        match self {
            Backend::Fixed(f) => Some(*f),
            _ => None,
        }
    }

    fn check(&self, value: &ScalarValue) -> Result<(), ArithError> {
        if value.backend() == *self {
            Ok(())
        } else {
            Err(ArithError::BackendMismatch {
                left: self.to_string(),
                right: value.backend().to_string(),
            })
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backend::Exact => f.write_str("exact"),
            Backend::Float64 => f.write_str("float64"),
            Backend::Fixed(format) => format.fmt(f),
        }
    }
}

/// A scalar tagged with the backend it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarValue {
    Exact(Rational),
    Float(f64),
    /// Raw two's-complement register units.
    Fixed { raw: i64, format: FixedFormat },
}

/// Result of re-encoding a value in another backend.
#[derive(Debug, Clone, PartialEq)]
pub struct Converted {
    pub value: ScalarValue,
    pub lossless: bool,
}

impl ScalarValue {
    pub fn backend(&self) -> Backend {
        match self {
            ScalarValue::Exact(_) => Backend::Exact,
            ScalarValue::Float(_) => Backend::Float64,
            ScalarValue::Fixed { format, .. } => Backend::Fixed(*format),
        }
    }

    pub fn to_rational(&self) -> Result<Rational, ArithError> {
        match self {
            ScalarValue::Exact(r) => Ok(r.clone()),
            ScalarValue::Float(v) => Float64.to_rational(v),
            ScalarValue::Fixed { raw, format } => Ok(format.raw_to_rational(*raw)),
        }
    }

    pub fn add(&self, other: &ScalarValue) -> Result<ScalarValue, ArithError> {
        self.backend().add(self, other)
    }

    pub fn sub(&self, other: &ScalarValue) -> Result<ScalarValue, ArithError> {
        self.backend().sub(self, other)
    }

    pub fn mul(&self, other: &ScalarValue) -> Result<ScalarValue, ArithError> {
        self.backend().mul(self, other)
    }

    pub fn halve(&self) -> Result<ScalarValue, ArithError> {
        self.backend().halve(self)
    }

    /// Re-encodes the value for `target`, reporting whether it survived intact.
    pub fn convert(&self, target: Backend) -> Result<Converted, ArithError> {
        if self.backend() == target {
            return Ok(Converted {
                value: self.clone(),
                lossless: true,
            });
        }
        let exact = self.to_rational()?;
        match target {
            Backend::Exact => Ok(Converted {
                value: ScalarValue::Exact(exact),
                lossless: true,
            }),
            Backend::Float64 => {
                let v = Float64.from_rational(&exact)?;
                let lossless = Float64.to_rational(&v)? == exact;
                Ok(Converted {
                    value: ScalarValue::Float(v),
                    lossless,
                })
            }
            Backend::Fixed(format) => {
                let (raw, lossless) = format.encode(&exact)?;
                Ok(Converted {
                    value: ScalarValue::Fixed { raw, format },
                    lossless,
                })
            }
        }
    }
}

impl fmt::Display for ScalarValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarValue::Exact(r) => f.write_str(&format_rational(r)),
            ScalarValue::Float(v) => write!(f, "{v}"),
            ScalarValue::Fixed { raw, format } => f.write_str(&format.format_raw(*raw)),
        }
    }
}

impl Arithmetic for Backend {
    type Value = ScalarValue;

    fn zero(&self) -> ScalarValue {
        match self {
            Backend::Exact => ScalarValue::Exact(Exact.zero()),
            Backend::Float64 => ScalarValue::Float(0.0),
            Backend::Fixed(format) => ScalarValue::Fixed {
                raw: 0,
                format: *format,
            },
        }
    }

    fn from_rational(&self, value: &Rational) -> Result<ScalarValue, ArithError> {
        Ok(match self {
            Backend::Exact => ScalarValue::Exact(value.clone()),
            Backend::Float64 => ScalarValue::Float(Float64.from_rational(value)?),
            Backend::Fixed(format) => ScalarValue::Fixed {
                raw: FixedPoint::new(*format).from_rational(value)?,
                format: *format,
            },
        })
    }

    fn to_rational(&self, value: &ScalarValue) -> Result<Rational, ArithError> {
        self.check(value)?;
        value.to_rational()
    }

    fn signed_sum(&self, terms: &[(Sign, &ScalarValue)]) -> Result<ScalarValue, ArithError> {
        for (_, v) in terms {
            self.check(v)?;
        }
        match self {
            Backend::Exact => {
                let parts: Vec<(Sign, &Rational)> = terms
                    .iter()
                    .map(|(s, v)| match v {
                        ScalarValue::Exact(r) => (*s, r),
                        _ => unreachable!("checked above"),
                    })
                    .collect();
                Exact.signed_sum(&parts).map(ScalarValue::Exact)
            }
            Backend::Float64 => {
                let parts: Vec<(Sign, &f64)> = terms
                    .iter()
                    .map(|(s, v)| match v {
                        ScalarValue::Float(x) => (*s, x),
                        _ => unreachable!("checked above"),
                    })
                    .collect();
                Float64.signed_sum(&parts).map(ScalarValue::Float)
            }
            Backend::Fixed(format) => {
                let parts: Vec<(Sign, &i64)> = terms
                    .iter()
                    .map(|(s, v)| match v {
                        ScalarValue::Fixed { raw, .. } => (*s, raw),
                        _ => unreachable!("checked above"),
                    })
                    .collect();
                let raw = FixedPoint::new(*format).signed_sum(&parts)?;
                Ok(ScalarValue::Fixed {
                    raw,
                    format: *format,
                })
            }
        }
    }

    fn mul(&self, a: &ScalarValue, b: &ScalarValue) -> Result<ScalarValue, ArithError> {
        self.check(a)?;
        self.check(b)?;
        match (a, b) {
            (ScalarValue::Exact(x), ScalarValue::Exact(y)) => Ok(ScalarValue::Exact(x * y)),
            (ScalarValue::Float(x), ScalarValue::Float(y)) => Ok(ScalarValue::Float(x * y)),
            (ScalarValue::Fixed { raw: x, format }, ScalarValue::Fixed { raw: y, .. }) => {
                Ok(ScalarValue::Fixed {
                    raw: FixedPoint::new(*format).mul(x, y)?,
                    format: *format,
                })
            }
            _ => unreachable!("checked above"),
        }
    }

    fn halve(&self, a: &ScalarValue) -> Result<ScalarValue, ArithError> {
        self.check(a)?;
        match a {
            ScalarValue::Exact(x) => Exact.halve(x).map(ScalarValue::Exact),
            ScalarValue::Float(x) => Float64.halve(x).map(ScalarValue::Float),
            ScalarValue::Fixed { raw, format } => Ok(ScalarValue::Fixed {
                raw: FixedPoint::new(*format).halve(raw)?,
                format: *format,
            }),
        }
    }
}
