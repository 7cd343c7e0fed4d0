//! Run configuration: defaults, `key=value` / JSON files and flag overrides.
//!
//! Every source is reduced to `(key, value)` string pairs applied in order
//! (file first, then flags), so all sources share one parser and one set of
//! error messages.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use qcmap_core::models::ModelKind;
use qcmap_core::Method;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Predict,
    Simulate,
    SweepEps,
    SweepAlpha,
    Histogram,
    Table1,
    Mre,
    Potentials,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// A method column, or the exact quantum–classical benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Exact,
    Method(Method),
}

impl Target {
    pub fn method(self) -> Option<Method> {
        match self {
            Target::Exact => None,
            Target::Method(m) => Some(m),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Target::Exact => "exact",
            Target::Method(m) => m.name(),
        }
    }
}

/// `start:stop:count` inclusive grid; a bare number is a one-point grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn point(v: f64) -> Self {
        Grid {
            start: v,
            stop: v,
            count: 1,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|k| self.start + k as f64 * step).collect()
    }

    pub fn single(&self) -> Option<f64> {
        (self.count == 1).then_some(self.start)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.single() {
            Some(v) => write!(f, "{v}"),
            None => write!(f, "{}:{}:{}", self.start, self.stop, self.count),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub model: ModelKind,
    pub beta: f64,
    pub delta: f64,
    pub eps: Grid,
    pub alpha: Grid,
    pub omega: f64,
    pub xbar: f64,
    /// Friction; `None` means 2Ω.
    pub eta: Option<f64>,
    pub methods: Vec<Target>,
    pub ntraj: usize,
    pub dt: f64,
    pub tmax: f64,
    pub seed: u64,
    pub threads: Option<usize>,
    /// Spacing of the recorded time series.
    pub interval: f64,
    pub bins: usize,
    /// Histogram time; `None` means `tmax`.
    pub t: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    /// Defaults of the biased spin–boson benchmark, with per-command grids.
    pub fn defaults(command: Command) -> Self {
        let mut cfg = RunConfig {
            command,
            model: ModelKind::SpinBoson,
            beta: 0.3,
            delta: 1.0,
            eps: Grid::point(0.0),
            alpha: Grid::point(1.0),
            omega: 1.0,
            xbar: 5.0,
            eta: None,
            methods: vec![Target::Exact, Target::Method(Method::Mash)],
            ntraj: 1000,
            dt: 0.01,
            tmax: 400.0,
            seed: 1,
            threads: None,
            interval: 1.0,
            bins: 20,
            t: None,
            out: None,
            format: Format::Csv,
        };
        match command {
            Command::SweepEps => {
                cfg.eps = Grid { start: 0.0, stop: 20.0, count: 21 };
                cfg.methods = [Target::Exact]
                    .into_iter()
                    .chain([Method::Ehrenfest, Method::SpinMapping, Method::SingleWigner, Method::Sqc, Method::Mash].map(Target::Method))
                    .collect();
            }
            Command::SweepAlpha => {
                cfg.model = ModelKind::Anharmonic;
                cfg.alpha = Grid { start: 0.0, stop: 1.0, count: 11 };
                cfg.methods = [Target::Exact]
                    .into_iter()
                    .chain([Method::Ehrenfest, Method::SpinMapping, Method::Sqc, Method::Mash].map(Target::Method))
                    .collect();
            }
            Command::Simulate => cfg.methods = vec![Target::Method(Method::Mash)],
            Command::Histogram | Command::Mre => {
                cfg.methods = vec![Target::Method(Method::Mash)];
                if command == Command::Histogram {
                    cfg.tmax = 500.0;
                }
            }
            Command::Potentials => {
                cfg.alpha = Grid::point(1.0);
            }
            Command::Predict | Command::Table1 => {}
        }
        cfg
    }

    pub fn eta(&self) -> f64 {
        self.eta.unwrap_or(2.0 * self.omega)
    }

    pub fn apply_all<'a>(&mut self, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<(), CliError> {
        for (k, v) in pairs {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let bad = |reason: String| CliError::Config {
            key: key.to_string(),
            reason,
        };
        let value = value.trim();
        fn num<T: FromStr>(v: &str) -> Result<T, String>
        where
            T::Err: fmt::Display,
        {
            v.parse::<T>().map_err(|e| format!("`{v}`: {e}"))
        }
        match key.trim().replace('_', "-").as_str() {
            "model" => {
                self.model = match value.to_ascii_lowercase().replace('_', "-").as_str() {
                    "spin-boson" => ModelKind::SpinBoson,
                    "anharmonic" => ModelKind::Anharmonic,
                    _ => return Err(bad(format!("`{value}`: expected spin-boson or anharmonic"))),
                }
            }
            "beta" => self.beta = num(value).map_err(bad)?,
            "delta" => self.delta = num(value).map_err(bad)?,
            "eps" => self.eps = parse_grid(value).map_err(bad)?,
            "alpha" => self.alpha = parse_grid(value).map_err(bad)?,
            "omega" => self.omega = num(value).map_err(bad)?,
            "xbar" => self.xbar = num(value).map_err(bad)?,
            "eta" => {
                self.eta = if value == "auto" {
                    None
                } else {
                    Some(num(value).map_err(bad)?)
                }
            }
            "method" | "methods" => self.methods = parse_targets(value).map_err(bad)?,
            "ntraj" => self.ntraj = num(value).map_err(bad)?,
            "dt" => self.dt = num(value).map_err(bad)?,
            "tmax" => self.tmax = num(value).map_err(bad)?,
            "seed" => self.seed = num(value).map_err(bad)?,
            "threads" => {
                self.threads = if value == "auto" {
                    None
                } else {
                    Some(num(value).map_err(bad)?)
                }
            }
            "interval" => self.interval = num(value).map_err(bad)?,
            "bins" => self.bins = num(value).map_err(bad)?,
            "t" => {
                self.t = if value == "auto" {
                    None
                } else {
                    Some(num(value).map_err(bad)?)
                }
            }
            "out" => self.out = if value.is_empty() { None } else { Some(PathBuf::from(value)) },
            "format" => {
                self.format = match value.to_ascii_lowercase().as_str() {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    _ => return Err(bad(format!("`{value}`: expected csv or json"))),
                }
            }
            _ => {
                return Err(CliError::Config {
                    key: key.to_string(),
                    reason: "unknown key".into(),
                })
            }
        }
        Ok(())
    }

    /// Checks that need the whole configuration.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, reason: &str| {
            Err(CliError::Config {
                key: key.into(),
                reason: reason.into(),
            })
        };
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.beta) {
            return bad("beta", "must be > 0");
        }
        if !positive(self.omega) {
            return bad("omega", "must be > 0");
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return bad("delta", "must be >= 0");
        }
        if !(self.eta().is_finite() && self.eta() >= 0.0) {
            return bad("eta", "must be >= 0");
        }
        if !positive(self.dt) {
            return bad("dt", "must be > 0");
        }
        if !(self.tmax.is_finite() && self.tmax >= 0.0) {
            return bad("tmax", "must be >= 0");
        }
        if !positive(self.interval) {
            return bad("interval", "must be > 0");
        }
        if self.ntraj == 0 {
            return bad("ntraj", "must be >= 1");
        }
        if self.threads == Some(0) {
            return bad("threads", "must be >= 1");
        }
        if self.bins < 2 || !self.bins.is_multiple_of(2) {
            return bad("bins", "must be even and >= 2");
        }
        if self.methods.is_empty() {
            return bad("methods", "must not be empty");
        }
        for (key, grid) in [("eps", &self.eps), ("alpha", &self.alpha)] {
            if grid.values().iter().any(|v| !v.is_finite()) {
                return bad(key, "must be finite");
            }
        }
        let methods_only = matches!(self.command, Command::Simulate | Command::Histogram | Command::Mre);
        if methods_only && self.methods.contains(&Target::Exact) {
            return bad("methods", "`exact` has no trajectories");
        }
        if matches!(self.command, Command::Histogram | Command::Mre) && self.methods != [Target::Method(Method::Mash)] {
            return bad("methods", "only mash is supported");
        }
        if methods_only && (self.eps.count != 1 || self.alpha.count != 1) {
            return bad("eps", "trajectory commands take a single eps and alpha");
        }
        Ok(())
    }

    /// `key=value` lines that [`RunConfig::set`] parses back to `self`.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "auto".into());
        let model = match self.model {
            ModelKind::SpinBoson => "spin-boson",
            ModelKind::Anharmonic => "anharmonic",
        };
        let methods: Vec<&str> = self.methods.iter().map(|t| t.name()).collect();
        vec![
            ("model".into(), model.into()),
            ("beta".into(), self.beta.to_string()),
            ("delta".into(), self.delta.to_string()),
            ("eps".into(), self.eps.to_string()),
            ("alpha".into(), self.alpha.to_string()),
            ("omega".into(), self.omega.to_string()),
            ("xbar".into(), self.xbar.to_string()),
            ("eta".into(), opt(self.eta.map(|v| v.to_string()))),
            ("methods".into(), methods.join(",")),
            ("ntraj".into(), self.ntraj.to_string()),
            ("dt".into(), self.dt.to_string()),
            ("tmax".into(), self.tmax.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("threads".into(), opt(self.threads.map(|v| v.to_string()))),
            ("interval".into(), self.interval.to_string()),
            ("bins".into(), self.bins.to_string()),
            ("t".into(), opt(self.t.map(|v| v.to_string()))),
            (
                "out".into(),
                self.out.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            ),
            (
                "format".into(),
                match self.format {
                    Format::Csv => "csv".into(),
                    Format::Json => "json".into(),
                },
            ),
        ]
    }

    pub fn to_text(&self) -> String {
        self.to_pairs().iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

fn parse_grid(v: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = v.split(':').collect();
    let f = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("`{s}`: {e}"));
    match parts.as_slice() {
        [x] => Ok(Grid::point(f(x)?)),
        [a, b, n] => {
            let count: usize = n.trim().parse().map_err(|e| format!("`{n}`: {e}"))?;
            if count == 0 {
                return Err("grid count must be >= 1".into());
            }
            Ok(Grid {
                start: f(a)?,
                stop: f(b)?,
                count,
            })
        }
        _ => Err(format!("`{v}`: expected a number or start:stop:count")),
    }
}

fn parse_targets(v: &str) -> Result<Vec<Target>, String> {
    if v.trim().eq_ignore_ascii_case("all") {
        return Ok(std::iter::once(Target::Exact)
            .chain(Method::ALL.into_iter().map(Target::Method))
            .collect());
    }
    let mut targets = Vec::new();
    for s in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let t = if s.eq_ignore_ascii_case("exact") {
            Target::Exact
        } else {
            Target::Method(s.parse::<Method>().map_err(|e| e.to_string())?)
        };
        if !targets.contains(&t) {
            targets.push(t);
        }
    }
    Ok(targets)
}

/// Reads `key=value` lines (`#` comments allowed) or a flat JSON object.
pub fn parse_file_text(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        let value: serde_json::Value = serde_json::from_str(trimmed).map_err(|e| CliError::Config {
            key: "<config>".into(),
            reason: format!("invalid JSON: {e}"),
        })?;
        let obj = value.as_object().ok_or_else(|| CliError::Config {
            key: "<config>".into(),
            reason: "expected a JSON object".into(),
        })?;
        return obj
            .iter()
            .map(|(k, v)| {
                let text = match v {
                    serde_json::Value::String(s) => s.clone(),
                    serde_json::Value::Number(n) => n.to_string(),
                    serde_json::Value::Null => "auto".into(),
                    serde_json::Value::Array(items) => items
                        .iter()
                        .map(|i| i.as_str().map(str::to_string).unwrap_or_else(|| i.to_string()))
                        .collect::<Vec<_>>()
                        .join(","),
                    other => {
                        return Err(CliError::Config {
                            key: k.clone(),
                            reason: format!("unsupported value {other}"),
                        })
                    }
                };
                Ok((k.clone(), text))
            })
            .collect();
    }
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CliError::Config {
            key: format!("<line {}>", n + 1),
            reason: format!("expected key=value, got `{line}`"),
        })?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}
