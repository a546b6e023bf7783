//! Run configuration files.
//!
//! Parsing is strict: unknown keys are errors, and every missing required
//! field is reported at once. [`save_config`] writes the canonical form with
//! all defaults spelled out, so loading and saving it again is byte-identical.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::arith::{Backend, BackendKind, FixedFormat, OverflowPolicy, Rational, Rounding};
use crate::hw::{AreaModel, DspBlockSpec};
use crate::streaming::Mode;

use super::{format_taps, parse_taps, SignalFormat};

/// Environment variable naming the default configuration file.
pub const CONFIG_ENV_VAR: &str = "MINFILT_CONFIG";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing required fields: {}", .0.join(", "))]
    MissingFields(Vec<String>),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalSource {
    pub path: PathBuf,
    pub format: SignalFormat,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OutputPaths {
    pub result: Option<PathBuf>,
    pub result_format: SignalFormat,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub backend: Backend,
    pub taps: Option<[Rational; 3]>,
    pub signal: Option<SignalSource>,
    pub outputs: OutputPaths,
    pub dsp_spec: DspBlockSpec,
    pub area_model: AreaModel,
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Winograd,
            backend: Backend::Exact,
            taps: None,
            signal: None,
            outputs: OutputPaths::default(),
            dsp_spec: DspBlockSpec::STRATIX_II,
            area_model: AreaModel::unit(),
            threads: 1,
        }
    }
}

#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    backend: Option<BackendKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fixed_format: Option<FixedDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    taps: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    signal: Option<SignalDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    outputs: Option<OutputsDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dsp_spec: Option<DspDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    area_model: Option<AreaDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    threads: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FixedDoc {
    total_bits: Option<u32>,
    frac_bits: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    overflow: Option<OverflowPolicy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rounding: Option<Rounding>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SignalDoc {
    path: Option<PathBuf>,
    format: Option<SignalFormat>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputsDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    result_format: Option<SignalFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DspDoc {
    multipliers: Option<u32>,
    input_adders: Option<u32>,
    output_adders: Option<u32>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AreaDoc {
    mul_coeff: Option<f64>,
    add_coeff: Option<f64>,
}

fn required<T: Copy>(value: Option<T>, name: &str, missing: &mut Vec<String>) -> Option<T> {
    if value.is_none() {
        missing.push(name.to_string());
    }
    value
}

fn nonempty(path: &Path, name: &str) -> Result<(), ConfigError> {
    if path.as_os_str().is_empty() {
        return Err(ConfigError::Invalid(format!("`{name}` must not be empty")));
    }
    Ok(())
}

impl ConfigDoc {
    fn resolve(self) -> Result<RunConfig, ConfigError> {
        let mut missing = Vec::new();
        let kind = self.backend.unwrap_or_default();

        let fixed = match (&self.fixed_format, kind) {
            (None, BackendKind::Fixed) => {
                missing.push("fixed_format".to_string());
                None
            }
            (Some(_), k) if k != BackendKind::Fixed => {
                return Err(ConfigError::Invalid(
                    "`fixed_format` is only allowed when backend is `fixed`".to_string(),
                ))
            }
            (Some(f), _) => {
                let w = required(f.total_bits, "fixed_format.total_bits", &mut missing);
                let fr = required(f.frac_bits, "fixed_format.frac_bits", &mut missing);
                Some((w, fr, f.overflow.unwrap_or(FixedFormat::default().overflow()), f.rounding.unwrap_or(FixedFormat::default().rounding())))
            }
            (None, _) => None,
        };
        let signal = self.signal.as_ref().map(|s| {
            let path = s.path.clone();
            if path.is_none() {
                missing.push("signal.path".to_string());
            }
            let format = required(s.format, "signal.format", &mut missing);
            (path, format)
        });
        let dsp = self.dsp_spec.as_ref().map(|d| {
            (
                required(d.multipliers, "dsp_spec.multipliers", &mut missing),
                required(d.input_adders, "dsp_spec.input_adders", &mut missing),
                required(d.output_adders, "dsp_spec.output_adders", &mut missing),
            )
        });
        let area = self.area_model.as_ref().map(|a| {
            (
                required(a.mul_coeff, "area_model.mul_coeff", &mut missing),
                required(a.add_coeff, "area_model.add_coeff", &mut missing),
            )
        });
        if !missing.is_empty() {
            return Err(ConfigError::MissingFields(missing));
        }

        let backend = match fixed {
            Some((Some(w), Some(f), overflow, rounding)) => Backend::Fixed(
                FixedFormat::new(w, f, overflow, rounding).map_err(|e| ConfigError::Invalid(e.to_string()))?,
            ),
            _ => match kind {
                BackendKind::Exact => Backend::Exact,
                BackendKind::Float64 => Backend::Float64,
                BackendKind::Fixed => unreachable!("fixed_format checked above"),
            },
        };
        let taps = self
            .taps
            .as_deref()
            .map(parse_taps)
            .transpose()
            .map_err(|e| ConfigError::Invalid(format!("taps: {e}")))?;
        let signal = match signal {
            Some((Some(path), Some(format))) => {
                nonempty(&path, "signal.path")?;
                Some(SignalSource { path, format })
            }
            _ => None,
        };
        let outputs = match self.outputs {
            Some(o) => {
                for (p, name) in [(&o.result, "outputs.result"), (&o.report, "outputs.report")] {
                    if let Some(p) = p {
                        nonempty(p, name)?;
                    }
                }
                OutputPaths {
                    result: o.result,
                    result_format: o.result_format.unwrap_or_default(),
                    report: o.report,
                }
            }
            None => OutputPaths::default(),
        };
        let dsp_spec = match dsp {
            Some((Some(m), Some(i), Some(o))) => DspBlockSpec {
                multipliers: m,
                input_adders: i,
                output_adders: o,
            },
            _ => DspBlockSpec::STRATIX_II,
        };
        let area_model = match area {
            Some((Some(m), Some(a))) => AreaModel::new(m, a).map_err(|e| ConfigError::Invalid(e.to_string()))?,
            _ => AreaModel::unit(),
        };
        let threads = self.threads.unwrap_or(1);
        if threads == 0 {
            return Err(ConfigError::Invalid("`threads` must be at least 1".to_string()));
        }
        Ok(RunConfig {
            mode: self.mode.unwrap_or_default(),
            backend,
            taps,
            signal,
            outputs,
            dsp_spec,
            area_model,
            threads,
        })
    }

    fn canonical(cfg: &RunConfig) -> ConfigDoc {
        ConfigDoc {
            mode: Some(cfg.mode),
            backend: Some(cfg.backend.kind()),
            fixed_format: cfg.backend.fixed_format().map(|f| FixedDoc {
                total_bits: Some(f.total_bits()),
                frac_bits: Some(f.frac_bits()),
                overflow: Some(f.overflow()),
                rounding: Some(f.rounding()),
            }),
            taps: cfg.taps.as_ref().map(format_taps),
            signal: cfg.signal.as_ref().map(|s| SignalDoc {
                path: Some(s.path.clone()),
                format: Some(s.format),
            }),
            outputs: Some(OutputsDoc {
                result: cfg.outputs.result.clone(),
                result_format: Some(cfg.outputs.result_format),
                report: cfg.outputs.report.clone(),
            }),
            dsp_spec: Some(DspDoc {
                multipliers: Some(cfg.dsp_spec.multipliers),
                input_adders: Some(cfg.dsp_spec.input_adders),
                output_adders: Some(cfg.dsp_spec.output_adders),
            }),
            area_model: Some(AreaDoc {
                mul_coeff: Some(cfg.area_model.mul_coeff()),
                add_coeff: Some(cfg.area_model.add_coeff()),
            }),
            threads: Some(cfg.threads),
        }
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let doc: ConfigDoc = serde_json::from_str(text)?;
    doc.resolve()
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// Canonical pretty JSON with every field spelled out.
pub fn config_to_string(cfg: &RunConfig) -> String {
    let mut s = serde_json::to_string_pretty(&ConfigDoc::canonical(cfg)).expect("config serializes");
    s.push('\n');
    s
}

pub fn save_config(cfg: &RunConfig, path: &Path) -> Result<(), ConfigError> {
    std::fs::write(path, config_to_string(cfg)).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}
