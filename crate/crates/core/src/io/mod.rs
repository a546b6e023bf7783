//! Signal and result files, plus run configuration.
//!
//! Four on-disk encodings are supported:
//!
//! * `csv`: one value per line. Exact values are integers or `p/q`, float64
//!   values use the shortest round-trip decimal. Fixed-point files start with a
//!   `#fixed(w,f,policy,rounding)` header and hold raw register units.
//! * `json`: a flat array. Exact non-integers are strings (`"3/2"`). Fixed-point
//!   files are `{"fixed": {...}, "raw": [...]}`.
//! * `raw_f64le`: packed little-endian binary64.
//! * `raw_i32le`: packed little-endian 32-bit integers. For the fixed-point
//!   backend these are raw register units in the configured format.
//!
//! Files without a fixed-point header can be loaded into any backend; values
//! are rounded into the fixed-point format under its own policy.

mod config;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_traits::{FromPrimitive, ToPrimitive};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::arith::{format_rational, parse_literal, ArithError, Arithmetic, Backend, FixedFormat, Rational, ScalarValue};
use crate::streaming::{ConvolutionResult, Signal, StreamError};

pub use config::{config_to_string, load_config, parse_config, save_config, ConfigError, OutputPaths, RunConfig, SignalSource, CONFIG_ENV_VAR};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalFormat {
    #[default]
    Csv,
    Json,
    RawF64le,
    RawI32le,
}

impl SignalFormat {
    pub const ALL: [SignalFormat; 4] = [
        SignalFormat::Csv,
        SignalFormat::Json,
        SignalFormat::RawF64le,
        SignalFormat::RawI32le,
    ];
}

impl fmt::Display for SignalFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignalFormat::Csv => "csv",
            SignalFormat::Json => "json",
            SignalFormat::RawF64le => "raw_f64le",
            SignalFormat::RawI32le => "raw_i32le",
        })
    }
}

impl FromStr for SignalFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        SignalFormat::ALL
            .into_iter()
            .find(|f| f.to_string() == s)
            .ok_or_else(|| format!("unknown signal format `{s}` (expected csv, json, raw_f64le or raw_i32le)"))
    }
}

/// Where in a file a problem was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Line(usize),
    LineColumn(usize, usize),
    Element(usize),
    Offset(usize),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(l) => write!(f, "line {l}"),
            Location::LineColumn(l, c) => write!(f, "line {l}, column {c}"),
            Location::Element(i) => write!(f, "element {i}"),
            Location::Offset(o) => write!(f, "byte offset {o}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{at}: {message}")]
    Parse { at: Location, message: String },
    #[error("{at}: non-finite value")]
    NonFinite { at: Location },
    #[error("signal has {len} samples; at least 3 are required")]
    TooShort { len: usize },
    #[error("file holds {file} values but the backend is {backend}")]
    FormatMismatch { file: FixedFormat, backend: Backend },
    #[error("value {index} ({value}) cannot be stored exactly as {format}")]
    NotRepresentable {
        index: usize,
        value: String,
        format: SignalFormat,
    },
    #[error("value {index} belongs to backend {found}, expected {expected}")]
    MixedBackends {
        index: usize,
        found: Backend,
        expected: Backend,
    },
    #[error(transparent)]
    Arith(#[from] ArithError),
}

fn read_file(path: &Path) -> Result<Vec<u8>, IoError> {
    fs::read(path).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    fs::write(path, bytes).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads a signal of at least three samples.
pub fn load_signal(path: &Path, format: SignalFormat, backend: Backend) -> Result<Signal<ScalarValue>, IoError> {
    parse_signal(&read_file(path)?, format, backend)
}

pub fn parse_signal(bytes: &[u8], format: SignalFormat, backend: Backend) -> Result<Signal<ScalarValue>, IoError> {
    let values = decode_values(bytes, format, backend)?;
    Signal::new(values).map_err(|e| match e {
        StreamError::TooShort { len } => IoError::TooShort { len },
        other => unreachable!("Signal::new only reports length: {other}"),
    })
}

/// Loads any number of values, e.g. a previously written result.
pub fn load_values(path: &Path, format: SignalFormat, backend: Backend) -> Result<Vec<ScalarValue>, IoError> {
    decode_values(&read_file(path)?, format, backend)
}

pub fn write_values(path: &Path, values: &[ScalarValue], format: SignalFormat) -> Result<(), IoError> {
    write_file(path, &encode_values(values, format)?)
}

pub fn write_result(result: &ConvolutionResult<ScalarValue>, path: &Path, format: SignalFormat) -> Result<(), IoError> {
    write_values(path, &result.outputs, format)
}

/// Parses `h0,h1,h2`; each tap may be an integer, decimal or `p/q`.
pub fn parse_taps(text: &str) -> Result<[Rational; 3], ArithError> {
    let parts: Vec<Rational> = text.split(',').map(parse_literal).collect::<Result<_, _>>()?;
    parts
        .try_into()
        .map_err(|v: Vec<Rational>| ArithError::InvalidLiteral(format!("expected 3 taps, got {} in `{text}`", v.len())))
}

pub fn format_taps(taps: &[Rational; 3]) -> String {
    taps.iter().map(format_rational).collect::<Vec<_>>().join(",")
}

fn from_f64(value: f64, at: Location, backend: Backend) -> Result<ScalarValue, IoError> {
    if !value.is_finite() {
        return Err(IoError::NonFinite { at });
    }
    if backend == Backend::Float64 {
        return Ok(ScalarValue::Float(value));
    }
    let exact = Rational::from_f64(value).ok_or(IoError::NonFinite { at })?;
    Ok(backend.from_rational(&exact)?)
}

fn from_literal(text: &str, at: Location, backend: Backend) -> Result<ScalarValue, IoError> {
    if backend == Backend::Float64 {
        let v: f64 = text.trim().parse().map_err(|_| IoError::Parse {
            at,
            message: format!("`{}` is not a number", text.trim()),
        })?;
        return from_f64(v, at, backend);
    }
    let exact = parse_literal(text).map_err(|_| {
        let t = text.trim().to_ascii_lowercase();
        if ["inf", "+inf", "-inf", "infinity", "-infinity", "nan"].contains(&t.as_str()) {
            IoError::NonFinite { at }
        } else {
            IoError::Parse {
                at,
                message: format!("`{}` is not a number", text.trim()),
            }
        }
    })?;
    Ok(backend.from_rational(&exact)?)
}

/// Interprets a raw register word stored in `file` for the target backend.
fn from_raw(raw: i64, file: FixedFormat, at: Location, backend: Backend) -> Result<ScalarValue, IoError> {
    if !file.contains_raw(raw as i128) {
        return Err(IoError::Parse {
            at,
            message: format!("raw word {raw} is outside {file}"),
        });
    }
    match backend {
        Backend::Fixed(f) if f == file => Ok(ScalarValue::Fixed { raw, format: f }),
        Backend::Fixed(f) => Err(IoError::FormatMismatch { file, backend: Backend::Fixed(f) }),
        other => Ok(other.from_rational(&file.raw_to_rational(raw))?),
    }
}

pub fn decode_values(bytes: &[u8], format: SignalFormat, backend: Backend) -> Result<Vec<ScalarValue>, IoError> {
    match format {
        SignalFormat::Csv => decode_csv(utf8(bytes)?, backend),
        SignalFormat::Json => decode_json(utf8(bytes)?, backend),
        SignalFormat::RawF64le => chunks::<8>(bytes)?
            .enumerate()
            .map(|(i, c)| from_f64(f64::from_le_bytes(c), Location::Offset(i * 8), backend))
            .collect(),
        SignalFormat::RawI32le => chunks::<4>(bytes)?
            .enumerate()
            .map(|(i, c)| {
                let v = i32::from_le_bytes(c) as i64;
                let at = Location::Offset(i * 4);
                match backend {
                    Backend::Fixed(f) => from_raw(v, f, at, backend),
                    other => Ok(other.from_rational(&Rational::from_integer(v.into()))?),
                }
            })
            .collect(),
    }
}

fn utf8(bytes: &[u8]) -> Result<&str, IoError> {
    std::str::from_utf8(bytes).map_err(|e| IoError::Parse {
        at: Location::Offset(e.valid_up_to()),
        message: "invalid UTF-8".to_string(),
    })
}

fn chunks<const W: usize>(bytes: &[u8]) -> Result<impl Iterator<Item = [u8; W]> + '_, IoError> {
    #[allow(clippy::manual_is_multiple_of)]
    if bytes.len() % W != 0 {
        return Err(IoError::Parse {
            at: Location::Offset(bytes.len() - bytes.len() % W),
            message: format!("trailing {} bytes do not form a {W}-byte value", bytes.len() % W),
        });
    }
    Ok(bytes.chunks_exact(W).map(|c| c.try_into().expect("exact chunk")))
}

fn decode_csv(text: &str, backend: Backend) -> Result<Vec<ScalarValue>, IoError> {
    let mut header: Option<FixedFormat> = None;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let at = Location::Line(i + 1);
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(h) = line.strip_prefix('#') {
            if i != 0 {
                return Err(IoError::Parse {
                    at,
                    message: "a header is only allowed on the first line".to_string(),
                });
            }
            header = Some(h.trim().parse().map_err(|e: ArithError| IoError::Parse { at, message: e.to_string() })?);
            continue;
        }
        let value = match header {
            Some(file) => {
                let raw: i64 = line.parse().map_err(|_| IoError::Parse {
                    at,
                    message: format!("`{line}` is not a raw integer word"),
                })?;
                from_raw(raw, file, at, backend)?
            }
            None => from_literal(line, at, backend)?,
        };
        out.push(value);
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FixedJson {
    fixed: FixedFormat,
    raw: Vec<i64>,
}

fn json_error(e: serde_json::Error) -> IoError {
    IoError::Parse {
        at: Location::LineColumn(e.line(), e.column()),
        message: e.to_string(),
    }
}

fn decode_json(text: &str, backend: Backend) -> Result<Vec<ScalarValue>, IoError> {
    if text.trim_start().starts_with('{') {
        let doc: FixedJson = serde_json::from_str(text).map_err(json_error)?;
        return doc
            .raw
            .into_iter()
            .enumerate()
            .map(|(i, raw)| from_raw(raw, doc.fixed, Location::Element(i), backend))
            .collect();
    }
    let items: Vec<Box<RawValue>> = serde_json::from_str(text).map_err(json_error)?;
    items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let at = Location::Element(i);
            let raw = item.get();
            if raw.starts_with('"') {
                let s: String = serde_json::from_str(raw).map_err(json_error)?;
                from_literal(&s, at, backend)
            } else if raw.starts_with(['-', '0', '1', '2', '3', '4', '5', '6', '7', '8', '9']) {
                from_literal(raw, at, backend)
            } else {
                Err(IoError::Parse {
                    at,
                    message: format!("expected a number or string, found `{raw}`"),
                })
            }
        })
        .collect()
}

/// Serializes values of a single backend. Output is deterministic.
pub fn encode_values(values: &[ScalarValue], format: SignalFormat) -> Result<Vec<u8>, IoError> {
    let backend = match values.first() {
        Some(v) => v.backend(),
        None => Backend::Exact,
    };
    if let Some((index, v)) = values.iter().enumerate().find(|(_, v)| v.backend() != backend) {
        return Err(IoError::MixedBackends {
            index,
            found: v.backend(),
            expected: backend,
        });
    }
    let unrepresentable = |index: usize, v: &ScalarValue| IoError::NotRepresentable {
        index,
        value: v.to_string(),
        format,
    };
    match format {
        SignalFormat::Csv => {
            let mut out = String::new();
            if let Backend::Fixed(f) = backend {
                out.push_str(&format!("#{f}\n"));
            }
            for v in values {
                match v {
                    ScalarValue::Fixed { raw, .. } => out.push_str(&raw.to_string()),
                    other => out.push_str(&other.to_string()),
                }
                out.push('\n');
            }
            Ok(out.into_bytes())
        }
        SignalFormat::Json => {
            let items: Vec<String> = values
                .iter()
                .map(|v| match v {
                    ScalarValue::Exact(r) if r.is_integer() => r.to_integer().to_string(),
                    ScalarValue::Exact(r) => format!("\"{}\"", format_rational(r)),
                    ScalarValue::Float(x) => serde_json::to_string(x).expect("finite float serializes"),
                    ScalarValue::Fixed { raw, .. } => raw.to_string(),
                })
                .collect();
            let body = format!("[{}]", items.join(","));
            let text = match backend {
                Backend::Fixed(f) => {
                    let fmt = serde_json::to_string(&f).expect("format serializes");
                    format!("{{\"fixed\":{fmt},\"raw\":{body}}}\n")
                }
                _ => format!("{body}\n"),
            };
            Ok(text.into_bytes())
        }
        SignalFormat::RawF64le => {
            let mut out = Vec::with_capacity(values.len() * 8);
            for (i, v) in values.iter().enumerate() {
                let x = match v {
                    ScalarValue::Float(x) => *x,
                    other => {
                        let c = other.convert(Backend::Float64)?;
                        match c.value {
                            ScalarValue::Float(x) if c.lossless => x,
                            _ => return Err(unrepresentable(i, v)),
                        }
                    }
                };
                out.extend_from_slice(&x.to_le_bytes());
            }
            Ok(out)
        }
        SignalFormat::RawI32le => {
            let mut out = Vec::with_capacity(values.len() * 4);
            for (i, v) in values.iter().enumerate() {
                let word = match v {
                    ScalarValue::Fixed { raw, .. } => i32::try_from(*raw).ok(),
                    other => {
                        let r = other.to_rational()?;
                        if r.is_integer() {
                            r.to_integer().to_i32()
                        } else {
                            None
                        }
                    }
                };
                let word = word.ok_or_else(|| unrepresentable(i, v))?;
                out.extend_from_slice(&word.to_le_bytes());
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{OverflowPolicy, Rounding};

    fn exact(v: &[i64]) -> Vec<ScalarValue> {
        v.iter().map(|x| ScalarValue::Exact(Rational::from_integer((*x).into()))).collect()
    }

    fn q(n: i64, d: i64) -> ScalarValue {
        ScalarValue::Exact(Rational::new(n.into(), d.into()))
    }

    #[test]
    fn csv_signal() {
        let s = parse_signal(b"1\n2\n3\n4\n", SignalFormat::Csv, Backend::Exact).unwrap();
        assert_eq!(s.samples(), exact(&[1, 2, 3, 4]).as_slice());
        let s = parse_signal(b" 1.5 \n\n-3/4\n2e2", SignalFormat::Csv, Backend::Exact).unwrap();
        assert_eq!(s.samples(), &[q(3, 2), q(-3, 4), q(200, 1)]);
    }

    #[test]
    fn raw_i32_signal() {
        let bytes = [1u8, 0, 0, 0, 2, 0, 0, 0, 3, 0, 0, 0, 4, 0, 0, 0];
        let s = parse_signal(&bytes, SignalFormat::RawI32le, Backend::Exact).unwrap();
        assert_eq!(s.samples(), exact(&[1, 2, 3, 4]).as_slice());
    }

    #[test]
    fn short_json_signal() {
        let e = parse_signal(b"[1,2]", SignalFormat::Json, Backend::Exact).unwrap_err();
        assert!(matches!(e, IoError::TooShort { len: 2 }));
    }

    #[test]
    fn parse_errors_carry_locations() {
        let e = parse_signal(b"1\n2\nx\n4\n", SignalFormat::Csv, Backend::Exact).unwrap_err();
        assert!(matches!(e, IoError::Parse { at: Location::Line(3), .. }), "{e}");
        let e = parse_signal(b"1\n2\nNaN\n", SignalFormat::Csv, Backend::Float64).unwrap_err();
        assert!(matches!(e, IoError::NonFinite { at: Location::Line(3) }), "{e}");
        let e = parse_signal(b"1\ninf\n3\n", SignalFormat::Csv, Backend::Exact).unwrap_err();
        assert!(matches!(e, IoError::NonFinite { at: Location::Line(2) }), "{e}");
        let e = parse_signal(b"[1, 2,\n 3,", SignalFormat::Json, Backend::Exact).unwrap_err();
        assert!(matches!(e, IoError::Parse { at: Location::LineColumn(2, _), .. }), "{e}");
        let e = parse_signal(b"[1, true, 3]", SignalFormat::Json, Backend::Exact).unwrap_err();
        assert!(matches!(e, IoError::Parse { at: Location::Element(1), .. }), "{e}");
        let mut bytes: Vec<u8> = [1.0f64, 2.0, f64::INFINITY].iter().flat_map(|x| x.to_le_bytes()).collect();
        let e = parse_signal(&bytes, SignalFormat::RawF64le, Backend::Float64).unwrap_err();
        assert!(matches!(e, IoError::NonFinite { at: Location::Offset(16) }), "{e}");
        bytes.truncate(13);
        let e = parse_signal(&bytes, SignalFormat::RawF64le, Backend::Float64).unwrap_err();
        assert!(matches!(e, IoError::Parse { at: Location::Offset(8), .. }), "{e}");
    }

    #[test]
    fn result_csv() {
        assert_eq!(encode_values(&exact(&[6, 9, 12]), SignalFormat::Csv).unwrap(), b"6\n9\n12\n");
    }

    #[test]
    fn fixed_persists_raw_units() {
        let f = FixedFormat::new(16, 8, OverflowPolicy::Saturate, Rounding::NearestEven).unwrap();
        let vals: Vec<ScalarValue> = [384i64, -1, 32767]
            .iter()
            .map(|&raw| ScalarValue::Fixed { raw, format: f })
            .collect();
        let csv = encode_values(&vals, SignalFormat::Csv).unwrap();
        assert_eq!(csv, b"#fixed(16,8,saturate,nearest_even)\n384\n-1\n32767\n");
        let raw = encode_values(&vals, SignalFormat::RawI32le).unwrap();
        assert_eq!(&raw[..4], &384i32.to_le_bytes());
        for fmt in SignalFormat::ALL {
            let bytes = encode_values(&vals, fmt).unwrap();
            assert_eq!(decode_values(&bytes, fmt, Backend::Fixed(f)).unwrap(), vals, "{fmt}");
        }
        let other = Backend::Fixed(f.with_rounding(Rounding::Truncate));
        assert!(matches!(
            decode_values(&csv, SignalFormat::Csv, other),
            Err(IoError::FormatMismatch { .. })
        ));
        // Headered files can still be read into another backend.
        assert_eq!(decode_values(&csv, SignalFormat::Csv, Backend::Exact).unwrap()[0], q(3, 2));
    }

    #[test]
    fn decimal_input_rounds_into_fixed() {
        let f = FixedFormat::new(8, 1, OverflowPolicy::Saturate, Rounding::NearestEven).unwrap();
        let v = decode_values(b"0.25\n0.75\n1000\n", SignalFormat::Csv, Backend::Fixed(f)).unwrap();
        let raws: Vec<i64> = v
            .iter()
            .map(|x| match x {
                ScalarValue::Fixed { raw, .. } => *raw,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(raws, vec![0, 2, 127]);
    }

    #[test]
    fn unrepresentable_values_are_rejected() {
        let third = [q(1, 3), q(1, 1), q(2, 1)];
        assert!(matches!(
            encode_values(&third, SignalFormat::RawF64le),
            Err(IoError::NotRepresentable { index: 0, .. })
        ));
        assert!(matches!(
            encode_values(&third, SignalFormat::RawI32le),
            Err(IoError::NotRepresentable { index: 0, .. })
        ));
        let mixed = [q(1, 1), ScalarValue::Float(1.0)];
        assert!(matches!(
            encode_values(&mixed, SignalFormat::Csv),
            Err(IoError::MixedBackends { index: 1, .. })
        ));
    }

    #[test]
    fn exact_json_uses_strings_for_fractions() {
        let vals = [q(3, 2), q(-7, 1), q(0, 1)];
        let text = encode_values(&vals, SignalFormat::Json).unwrap();
        assert_eq!(text, b"[\"3/2\",-7,0]\n");
        assert_eq!(decode_values(&text, SignalFormat::Json, Backend::Exact).unwrap(), vals);
    }

    #[test]
    fn float_round_trips_bit_identically() {
        let vals: Vec<ScalarValue> = [0.1, -0.0, 1e300, 5e-324, -123.456, 2.0f64.powi(60)]
            .into_iter()
            .map(ScalarValue::Float)
            .collect();
        for fmt in [SignalFormat::Csv, SignalFormat::Json, SignalFormat::RawF64le] {
            let bytes = encode_values(&vals, fmt).unwrap();
            let back = decode_values(&bytes, fmt, Backend::Float64).unwrap();
            for (a, b) in vals.iter().zip(&back) {
                match (a, b) {
                    (ScalarValue::Float(a), ScalarValue::Float(b)) => assert_eq!(a.to_bits(), b.to_bits(), "{fmt}"),
                    _ => panic!("backend changed"),
                }
            }
        }
    }

    #[test]
    fn taps_parse() {
        let t = parse_taps("1, 3/2,-0.5").unwrap();
        assert_eq!(format_taps(&t), "1,3/2,-1/2");
        assert!(parse_taps("1,2").is_err());
        assert!(parse_taps("1,2,x").is_err());
    }

    #[test]
    fn format_names() {
        for f in SignalFormat::ALL {
            assert_eq!(f.to_string().parse::<SignalFormat>().unwrap(), f);
        }
        assert!("xml".parse::<SignalFormat>().is_err());
    }
}
