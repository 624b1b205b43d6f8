//! Flat key-value run configuration with compiled-in reproduction presets.
//!
//! The document format is one `key = value` pair per line with `#` comments.
//! Unknown keys are hard errors; every value is validated with the key name
//! in the error. [`RunConfig::to_document`] emits a document that parses
//! back to an equal configuration.

use crate::epidemics::{Bilinear, Incidence, ModelParams, Saturated};
use crate::fracops::FractionalOrder;
use crate::solver::{GridSpec, InitialCondition};
use std::fmt;

/// Errors from reading or validating a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigError {
    /// Malformed line (no `=`, bad number, ...).
    Parse { line: usize, reason: String },
    /// Key not recognized.
    UnknownKey { line: usize, key: String },
    /// Value out of range; names the offending key.
    Validation { key: String, reason: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Parse { line, reason } => {
                write!(f, "config parse error on line {line}: {reason}")
            }
            Self::UnknownKey { line, key } => {
                write!(f, "config parse error on line {line}: unknown key `{key}`")
            }
            Self::Validation { key, reason } => {
                write!(f, "config validation error for `{key}`: {reason}")
            }
        }
    }
}

impl std::error::Error for ConfigError {}

/// Incidence selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IncidenceSpec {
    Bilinear,
    Saturated { w: f64 },
}

/// Initial-condition selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IcSpec {
    /// `S = 0.5`, `I = R = exp(-n dx)`.
    Decaying,
    Constant {
        s: f64,
        i: f64,
        r: f64,
    },
}

/// A complete, validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub alpha: f64,
    pub dt: f64,
    pub a: f64,
    pub b: f64,
    pub m: usize,
    pub steps: usize,
    pub lambda: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub mu: f64,
    pub r: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub incidence: IncidenceSpec,
    pub ic: IcSpec,
    /// Early-termination window (steps); 0 disables.
    pub window: usize,
    /// Early-termination tolerance.
    pub tol: f64,
    /// Round-off slack for the Lyapunov decay and inequality checks.
    pub decay_slack: f64,
    /// Residual tolerance for the endemic root.
    pub root_tol: f64,
    /// Seed for randomized diagnostics.
    pub seed: u64,
}

impl Default for RunConfig {
    /// The below-threshold reproduction setup (`beta = 0.2144`); equal to
    /// the `paper-dfe` preset.
    fn default() -> Self {
        Self {
            alpha: 0.8,
            dt: 0.1,
            a: 0.0,
            b: 5.0,
            m: 50,
            steps: 2000,
            lambda: 0.2,
            beta: 0.2144,
            gamma: 0.2,
            delta: 0.2,
            mu: 0.2,
            r: 0.25,
            d1: 1.0,
            d2: 1.0,
            d3: 1.0,
            incidence: IncidenceSpec::Bilinear,
            ic: IcSpec::Decaying,
            window: 50,
            tol: 1e-10,
            decay_slack: 1e-10,
            root_tol: 1e-12,
            seed: 0,
        }
    }
}

/// Names accepted by `--preset`.
pub const PRESETS: [&str; 2] = ["paper-dfe", "paper-ee"];

impl RunConfig {
    /// Compiled-in reproduction presets: `paper-dfe` (beta = 0.2144, decays
    /// to the disease-free state) and `paper-ee` (beta = 0.6217, settles at
    /// the endemic state).
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "paper-dfe" => Some(Self::default()),
            "paper-ee" => Some(Self {
                beta: 0.6217,
                ..Self::default()
            }),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |key: &str, reason: &str| {
            Err(ConfigError::Validation {
                key: key.to_string(),
                reason: reason.to_string(),
            })
        };
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return err("alpha", "must lie in (0, 1]");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return err("dt", "must be positive");
        }
        if !(self.b > self.a) || !self.a.is_finite() || !self.b.is_finite() {
            return err("b", "domain must satisfy b > a");
        }
        if self.m < 2 {
            return err("m", "need at least two subintervals");
        }
        if self.steps < 1 {
            return err("steps", "need at least one step");
        }
        for (v, key) in [
            (self.lambda, "lambda"),
            (self.beta, "beta"),
            (self.gamma, "gamma"),
            (self.delta, "delta"),
            (self.mu, "mu"),
            (self.r, "r"),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return err(key, "must be positive");
            }
        }
        for (v, key) in [(self.d1, "d1"), (self.d2, "d2"), (self.d3, "d3")] {
            if !(v >= 0.0 && v.is_finite()) {
                return err(key, "must be nonnegative");
            }
        }
        if let IncidenceSpec::Saturated { w } = self.incidence {
            if !(w > 0.0 && w.is_finite()) {
                return err("saturation_w", "must be positive");
            }
        }
        if let IcSpec::Constant { s, i, r } = self.ic {
            if !(s > 0.0 && s.is_finite()) {
                return err("ic_s", "must be positive");
            }
            if !(i >= 0.0 && i.is_finite()) || !(r >= 0.0 && r.is_finite()) {
                return err("ic_i", "ic_i and ic_r must be nonnegative");
            }
        }
        if !(self.tol > 0.0) {
            return err("tol", "must be positive");
        }
        if !(self.decay_slack >= 0.0) {
            return err("decay_slack", "must be nonnegative");
        }
        if !(self.root_tol > 0.0) {
            return err("root_tol", "must be positive");
        }
        Ok(())
    }

    pub fn params(&self) -> ModelParams<f64> {
        ModelParams::new(
            self.lambda,
            self.beta,
            self.gamma,
            self.delta,
            self.mu,
            self.r,
            self.d1,
            self.d2,
            self.d3,
        )
        .expect("validated configuration")
    }

    pub fn grid(&self) -> GridSpec<f64> {
        GridSpec::new(self.a, self.b, self.m, self.dt, self.steps).expect("validated configuration")
    }

    pub fn order(&self) -> FractionalOrder<f64> {
        FractionalOrder::new(self.alpha).expect("validated configuration")
    }

    pub fn incidence_model(&self) -> Box<dyn Incidence<f64>> {
        match self.incidence {
            IncidenceSpec::Bilinear => Box::new(Bilinear),
            IncidenceSpec::Saturated { w } => {
                Box::new(Saturated::new(w).expect("validated configuration"))
            }
        }
    }

    pub fn initial_condition(&self) -> InitialCondition<f64> {
        match self.ic {
            IcSpec::Decaying => InitialCondition::Decaying,
            IcSpec::Constant { s, i, r } => InitialCondition::Constant { s, i, r },
        }
    }

    /// Serialize as a parseable document; full round-trip float precision.
    pub fn to_document(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        kv("alpha", self.alpha.to_string());
        kv("dt", self.dt.to_string());
        kv("a", self.a.to_string());
        kv("b", self.b.to_string());
        kv("m", self.m.to_string());
        kv("steps", self.steps.to_string());
        kv("lambda", self.lambda.to_string());
        kv("beta", self.beta.to_string());
        kv("gamma", self.gamma.to_string());
        kv("delta", self.delta.to_string());
        kv("mu", self.mu.to_string());
        kv("r", self.r.to_string());
        kv("d1", self.d1.to_string());
        kv("d2", self.d2.to_string());
        kv("d3", self.d3.to_string());
        match self.incidence {
            IncidenceSpec::Bilinear => kv("incidence", "bilinear".to_string()),
            IncidenceSpec::Saturated { w } => {
                kv("incidence", "saturated".to_string());
                kv("saturation_w", w.to_string());
            }
        }
        match self.ic {
            IcSpec::Decaying => kv("ic", "decaying".to_string()),
            IcSpec::Constant { s, i, r } => {
                kv("ic", "constant".to_string());
                kv("ic_s", s.to_string());
                kv("ic_i", i.to_string());
                kv("ic_r", r.to_string());
            }
        }
        kv("window", self.window.to_string());
        kv("tol", self.tol.to_string());
        kv("decay_slack", self.decay_slack.to_string());
        kv("root_tol", self.root_tol.to_string());
        kv("seed", self.seed.to_string());
        out
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| ConfigError::Parse {
        line,
        reason: format!("cannot parse value `{v}` for key `{key}`"),
    })
}

/// Parse a key-value document into a validated [`RunConfig`]; unspecified
/// keys take the defaults (domain `[0, 5]`, `m = 50`, `steps = 2000`,
/// `tol = 1e-10`, ...).
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    // ic_*/saturation_w may precede or follow their selector; collect
    // first, assemble after.
    let mut ic_kind: Option<&str> = None;
    let mut ic_vals = (0.5_f64, 0.0_f64, 0.0_f64);
    let mut ic_vals_seen = false;
    let mut saturation_w: Option<f64> = None;
    let mut incidence_kind: Option<&str> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            reason: "expected `key = value`".to_string(),
        })?;
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            return Err(ConfigError::Parse {
                line,
                reason: format!("empty value for key `{key}`"),
            });
        }
        match key {
            "alpha" => cfg.alpha = parse_num(line, key, value)?,
            "dt" => cfg.dt = parse_num(line, key, value)?,
            "a" => cfg.a = parse_num(line, key, value)?,
            "b" => cfg.b = parse_num(line, key, value)?,
            "m" => cfg.m = parse_num(line, key, value)?,
            "steps" => cfg.steps = parse_num(line, key, value)?,
            "lambda" => cfg.lambda = parse_num(line, key, value)?,
            "beta" => cfg.beta = parse_num(line, key, value)?,
            "gamma" => cfg.gamma = parse_num(line, key, value)?,
            "delta" => cfg.delta = parse_num(line, key, value)?,
            "mu" => cfg.mu = parse_num(line, key, value)?,
            "r" => cfg.r = parse_num(line, key, value)?,
            "d1" => cfg.d1 = parse_num(line, key, value)?,
            "d2" => cfg.d2 = parse_num(line, key, value)?,
            "d3" => cfg.d3 = parse_num(line, key, value)?,
            "incidence" => match value {
                "bilinear" => incidence_kind = Some("bilinear"),
                "saturated" => incidence_kind = Some("saturated"),
                other => {
                    return Err(ConfigError::Validation {
                        key: "incidence".to_string(),
                        reason: format!("unrecognized incidence `{other}`"),
                    })
                }
            },
            "saturation_w" => saturation_w = Some(parse_num(line, key, value)?),
            "ic" => match value {
                "decaying" => ic_kind = Some("decaying"),
                "constant" => ic_kind = Some("constant"),
                other => {
                    return Err(ConfigError::Validation {
                        key: "ic".to_string(),
                        reason: format!("unrecognized initial condition `{other}`"),
                    })
                }
            },
            "ic_s" => {
                ic_vals.0 = parse_num(line, key, value)?;
                ic_vals_seen = true;
            }
            "ic_i" => {
                ic_vals.1 = parse_num(line, key, value)?;
                ic_vals_seen = true;
            }
            "ic_r" => {
                ic_vals.2 = parse_num(line, key, value)?;
                ic_vals_seen = true;
            }
            "window" => cfg.window = parse_num(line, key, value)?,
            "tol" => cfg.tol = parse_num(line, key, value)?,
            "decay_slack" => cfg.decay_slack = parse_num(line, key, value)?,
            "root_tol" => cfg.root_tol = parse_num(line, key, value)?,
            "seed" => cfg.seed = parse_num(line, key, value)?,
            other => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: other.to_string(),
                })
            }
        }
    }

    cfg.incidence = match incidence_kind {
        Some("saturated") => IncidenceSpec::Saturated {
            w: saturation_w.unwrap_or(1.0),
        },
        Some(_) | None => {
            if saturation_w.is_some() && incidence_kind != Some("saturated") {
                return Err(ConfigError::Validation {
                    key: "saturation_w".to_string(),
                    reason: "only meaningful with incidence = saturated".to_string(),
                });
            }
            IncidenceSpec::Bilinear
        }
    };
    cfg.ic = match ic_kind {
        Some("constant") => IcSpec::Constant {
            s: ic_vals.0,
            i: ic_vals.1,
            r: ic_vals.2,
        },
        Some(_) => IcSpec::Decaying,
        None => {
            if ic_vals_seen {
                return Err(ConfigError::Validation {
                    key: "ic_s".to_string(),
                    reason: "ic_s/ic_i/ic_r require ic = constant".to_string(),
                });
            }
            IcSpec::Decaying
        }
    };

    cfg.validate()?;
    Ok(cfg)
}
