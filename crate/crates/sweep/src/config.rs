//! Sweep configuration: a flat `key = value` text format.
//!
//! ```text
//! # comment
//! N      = 4
//! axis   = spacing_d
//! from   = 0.05
//! to     = 1.0
//! steps  = 96
//! alpha_tx = 0
//! alpha_rx = pi
//! methods  = decoupled_diag, bd
//! ```
//!
//! Numeric values accept plain numbers, `pi`, and a single product or
//! quotient of two such terms (`pi/2`, `0.75*pi`, `1/32`).
//! See [`KEYS`] for the full schema.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use ris_core::Method;
use thiserror::Error;

/// Every accepted key with a short description, in documentation order.
pub const KEYS: &[(&str, &str)] = &[
    ("N", "number of RIS elements (integer >= 1); alias `elements`"),
    ("axis", "swept parameter: spacing_d | angle_rx | loss_gamma | elements_N"),
    ("from", "first axis value"),
    ("to", "last axis value (>= from)"),
    ("steps", "number of evenly spaced axis values (>= 1)"),
    ("values", "explicit comma-separated axis values, instead of from/to/steps"),
    ("d", "element spacing in wavelengths (> 0); alias `spacing`"),
    ("alpha_tx", "transmitter angle in radians, [0, pi]"),
    ("alpha_rx", "receiver angle in radians, [0, pi]"),
    ("gamma", "ohmic loss ratio R_d / R (>= 0)"),
    ("R", "reference resistance in Ohm (> 0)"),
    ("gamma_dr", "RIS-to-receiver pathloss (> 0)"),
    ("gamma_rs", "transmitter-to-RIS pathloss (> 0)"),
    ("z_ds_re", "real part of the direct channel, Ohm"),
    ("z_ds_im", "imaginary part of the direct channel, Ohm"),
    ("methods", "comma-separated subset of decoupled_diag, bd, uncoupled, ignore_mc, gradient"),
    ("output", "CSV output path (stdout when absent)"),
    ("seed", "integer seed recorded with the output"),
    ("max_iters", "iteration cap of the gradient baseline"),
    ("tol", "relative stopping tolerance of the gradient baseline"),
];

const ALIASES: &[(&str, &str)] = &[("elements", "N"), ("spacing", "d")];

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{key}: {reason}")]
    Key { key: String, reason: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("methods: unknown method `{name}` (valid: {valid})")]
    UnknownMethod { name: String, valid: String },
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
}

fn key_error(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Key {
        key: key.to_owned(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    SpacingD,
    AngleRx,
    LossGamma,
    ElementsN,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::SpacingD, Axis::AngleRx, Axis::LossGamma, Axis::ElementsN];

    pub fn name(self) -> &'static str {
        match self {
            Axis::SpacingD => "spacing_d",
            Axis::AngleRx => "angle_rx",
            Axis::LossGamma => "loss_gamma",
            Axis::ElementsN => "elements_N",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Axis::SpacingD => "wavelengths",
            Axis::AngleRx => "rad",
            Axis::LossGamma => "dimensionless",
            Axis::ElementsN => "elements",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Fully defaulted and validated sweep description.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
    pub elements: usize,
    pub spacing: f64,
    pub angle_tx: f64,
    pub angle_rx: f64,
    pub loss_ratio: f64,
    pub ref_resistance: f64,
    pub pathloss_dr: f64,
    pub pathloss_rs: f64,
    pub z_ds: (f64, f64),
    pub methods: Vec<Method>,
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub max_iters: usize,
    pub tol: f64,
}

/// Canonical key to raw value; a later assignment of the same key wins.
pub type RawConfig = BTreeMap<String, String>;

/// Splits a config file into canonical keys and raw values.
pub fn parse_pairs(text: &str) -> Result<RawConfig, ConfigError> {
    let mut out = RawConfig::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=').or_else(|| line.split_once(':')) else {
            return Err(ConfigError::Syntax {
                line: idx + 1,
                message: format!("expected `key = value`, got `{line}`"),
            });
        };
        let key = canonical_key(key.trim())?;
        out.insert(key, value.trim().to_owned());
    }
    Ok(out)
}

/// Maps aliases to their canonical key and rejects unknown keys.
pub fn canonical_key(key: &str) -> Result<String, ConfigError> {
    if let Some((_, to)) = ALIASES.iter().find(|(from, _)| *from == key) {
        return Ok((*to).to_owned());
    }
    if KEYS.iter().any(|(k, _)| *k == key) {
        Ok(key.to_owned())
    } else {
        Err(ConfigError::UnknownKey(key.to_owned()))
    }
}

/// Reads, parses and validates a config file.
pub fn validate_and_load(path: &Path) -> Result<SweepSpec, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.to_owned(),
        message: e.to_string(),
    })?;
    SweepSpec::from_pairs(&parse_pairs(&text)?)
}

/// Parses `x`, `pi`, `a*b` or `a/b` where `a`, `b` are numbers or `pi`.
pub fn parse_number(text: &str) -> Option<f64> {
    let atom = |s: &str| -> Option<f64> {
        let s = s.trim();
        match s {
            "pi" | "PI" | "π" => Some(std::f64::consts::PI),
            "-pi" | "-PI" | "-π" => Some(-std::f64::consts::PI),
            _ => s.parse::<f64>().ok(),
        }
    };
    let value = if let Some((a, b)) = text.split_once('*') {
        atom(a)? * atom(b)?
    } else if let Some((a, b)) = text.split_once('/') {
        atom(a)? / atom(b)?
    } else {
        atom(text)?
    };
    value.is_finite().then_some(value)
}

struct Reader<'a> {
    raw: &'a RawConfig,
}

impl Reader<'_> {
    fn get(&self, key: &str) -> Option<&str> {
        self.raw.get(key).map(String::as_str)
    }

    fn number(&self, key: &str, default: Option<f64>) -> Result<f64, ConfigError> {
        match self.get(key) {
            Some(text) => parse_number(text).ok_or_else(|| key_error(key, format!("`{text}` is not a number"))),
            None => default.ok_or_else(|| key_error(key, "is required")),
        }
    }

    fn count(&self, key: &str, default: Option<usize>) -> Result<usize, ConfigError> {
        match self.get(key) {
            Some(text) => text
                .parse::<usize>()
                .map_err(|_| key_error(key, format!("`{text}` is not a nonnegative integer"))),
            None => default.ok_or_else(|| key_error(key, "is required")),
        }
    }
}

fn positive(key: &str, value: f64) -> Result<f64, ConfigError> {
    if value > 0.0 {
        Ok(value)
    } else {
        Err(key_error(key, format!("must be positive, got {value}")))
    }
}

fn nonnegative(key: &str, value: f64) -> Result<f64, ConfigError> {
    if value >= 0.0 {
        Ok(value)
    } else {
        Err(key_error(key, format!("must be nonnegative, got {value}")))
    }
}

fn angle(key: &str, value: f64) -> Result<f64, ConfigError> {
    // admit the rounding of `pi` written as a decimal
    if (0.0..=std::f64::consts::PI + 1e-12).contains(&value) {
        Ok(value.min(std::f64::consts::PI))
    } else {
        Err(key_error(key, format!("must lie in [0, pi], got {value}")))
    }
}

fn parse_methods(text: &str) -> Result<Vec<Method>, ConfigError> {
    let mut methods = Vec::new();
    for name in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let method = Method::from_name(name).ok_or_else(|| ConfigError::UnknownMethod {
            name: name.to_owned(),
            valid: Method::ALL.map(Method::name).join(", "),
        })?;
        if !methods.contains(&method) {
            methods.push(method);
        }
    }
    if methods.is_empty() {
        return Err(key_error("methods", "must name at least one method"));
    }
    // fixed emission order regardless of how the list was written
    methods.sort();
    Ok(methods)
}

/// `steps` evenly spaced values from `from` to `to`, both included.
pub fn linspace(from: f64, to: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![from];
    }
    let last = steps - 1;
    (0..steps)
        .map(|i| if i == last { to } else { from + (to - from) * i as f64 / last as f64 })
        .collect()
}

impl SweepSpec {
    pub const DEFAULT_METHODS: [Method; 2] = [Method::DecoupledDiagonal, Method::Bd];

    pub fn from_pairs(raw: &RawConfig) -> Result<Self, ConfigError> {
        for key in raw.keys() {
            canonical_key(key)?;
        }
        let r = Reader { raw };
        let axis_text = r.get("axis").ok_or_else(|| key_error("axis", "is required"))?;
        let axis = Axis::ALL
            .into_iter()
            .find(|a| a.name() == axis_text)
            .ok_or_else(|| {
                let valid: Vec<_> = Axis::ALL.iter().map(|a| a.name()).collect();
                key_error("axis", format!("unknown axis `{axis_text}` (valid: {})", valid.join(", ")))
            })?;

        let values = match r.get("values") {
            Some(list) => {
                if ["from", "to", "steps"].iter().any(|k| raw.contains_key(*k)) {
                    return Err(key_error("values", "cannot be combined with from/to/steps"));
                }
                let parsed = list
                    .split(',')
                    .map(|v| parse_number(v.trim()).ok_or_else(|| key_error("values", format!("`{}` is not a number", v.trim()))))
                    .collect::<Result<Vec<_>, _>>()?;
                if parsed.is_empty() {
                    return Err(key_error("values", "must not be empty"));
                }
                parsed
            }
            None => {
                let from = r.number("from", None)?;
                let to = r.number("to", None)?;
                let steps = r.count("steps", None)?;
                if steps == 0 {
                    return Err(key_error("steps", "must be at least 1"));
                }
                if from > to {
                    return Err(key_error("from", format!("must not exceed to ({from} > {to})")));
                }
                if steps == 1 && from != to {
                    return Err(key_error("steps", "must exceed 1 when from < to"));
                }
                linspace(from, to, steps)
            }
        };
        let values = values
            .into_iter()
            .map(|v| match axis {
                Axis::SpacingD => positive(axis_key(axis), v),
                Axis::AngleRx => angle(axis_key(axis), v),
                Axis::LossGamma => nonnegative(axis_key(axis), v),
                Axis::ElementsN => {
                    if v >= 1.0 && v.fract() == 0.0 {
                        Ok(v)
                    } else {
                        Err(key_error(axis_key(axis), format!("element counts must be integers >= 1, got {v}")))
                    }
                }
            })
            .collect::<Result<Vec<_>, _>>()?;

        let elements = match (axis, r.get("N")) {
            (Axis::ElementsN, None) => 1,
            _ => r.count("N", None)?,
        };
        if elements == 0 {
            return Err(key_error("N", "must be at least 1"));
        }
        let methods = match r.get("methods") {
            Some(text) => parse_methods(text)?,
            None => Self::DEFAULT_METHODS.to_vec(),
        };
        let tol = r.number("tol", Some(1e-9))?;
        if !(tol > 0.0) {
            return Err(key_error("tol", "must be positive"));
        }
        let seed = match r.get("seed") {
            Some(text) => text
                .parse::<u64>()
                .map_err(|_| key_error("seed", format!("`{text}` is not a nonnegative integer")))?,
            None => 0,
        };

        Ok(SweepSpec {
            axis,
            values,
            elements,
            spacing: positive("d", r.number("d", Some(0.5))?)?,
            angle_tx: angle("alpha_tx", r.number("alpha_tx", Some(0.0))?)?,
            angle_rx: angle("alpha_rx", r.number("alpha_rx", Some(std::f64::consts::PI))?)?,
            loss_ratio: nonnegative("gamma", r.number("gamma", Some(0.0))?)?,
            ref_resistance: positive("R", r.number("R", Some(1.0))?)?,
            pathloss_dr: positive("gamma_dr", r.number("gamma_dr", Some(1.0))?)?,
            pathloss_rs: positive("gamma_rs", r.number("gamma_rs", Some(1.0))?)?,
            z_ds: (r.number("z_ds_re", Some(0.0))?, r.number("z_ds_im", Some(0.0))?),
            methods,
            output: r.get("output").filter(|s| !s.is_empty()).map(PathBuf::from),
            seed,
            max_iters: r.count("max_iters", Some(10_000))?,
            tol,
        })
    }
}

/// Config key a value on this axis overrides.
pub fn axis_key(axis: Axis) -> &'static str {
    match axis {
        Axis::SpacingD => "d",
        Axis::AngleRx => "alpha_rx",
        Axis::LossGamma => "gamma",
        Axis::ElementsN => "N",
    }
}
