//! Flat `key = value` run configuration with `[sections]`.
//!
//! ```text
//! name = fig3d
//! command = trace
//!
//! [model]
//! w = 1
//! v = 5
//! J = 0
//!
//! [schedule]
//! T = 200
//! steps = 40000
//! variant = half
//!
//! [grid]
//! axis = w:0.5:5:21
//! axis = v:0.5:5:21
//! ```
//!
//! Command-line flags override file values.

use std::f64::consts::TAU;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;

use crate::labframe::CavityConfig;

use super::{CliError, Flags};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleKind {
    Half,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisName {
    W,
    V,
    J,
    T,
}

impl AxisName {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "w" => Some(Self::W),
            "v" | "v_over_w" => Some(Self::V),
            "J" | "J_over_w" => Some(Self::J),
            "T" => Some(Self::T),
            _ => None,
        }
    }

    pub fn column(self) -> &'static str {
        match self {
            Self::W => "w",
            Self::V => "v",
            Self::J => "J",
            Self::T => "T",
        }
    }
}

impl fmt::Display for AxisName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

/// One sweep axis: `name:min:max:n` (inclusive, evenly spaced) or `name:a,b,c`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub name: AxisName,
    pub values: Vec<f64>,
    /// `(min, max, n)` when given in range form.
    pub range: Option<(f64, f64, usize)>,
}

impl GridAxis {
    pub fn parse(spec: &str) -> Result<Self, CliError> {
        let bad = |why: &str| CliError::Config(format!("grid axis '{spec}': {why}"));
        let (name, rest) = spec.split_once(':').ok_or_else(|| bad("expected axis:min:max:n or axis:v1,v2,..."))?;
        let name = AxisName::parse(name.trim()).ok_or_else(|| bad("axis must be one of w, v, J, T"))?;
        let number = |s: &str| -> Result<f64, CliError> {
            let x: f64 = s.trim().parse().map_err(|_| bad(&format!("'{s}' is not a number")))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(bad("values must be finite"))
            }
        };
        let parts: Vec<&str> = rest.split(':').collect();
        match parts.as_slice() {
            [min, max, n] => {
                let (min, max) = (number(min)?, number(max)?);
                let n: usize = n.trim().parse().map_err(|_| bad("point count must be a non-negative integer"))?;
                if n == 0 {
                    return Err(bad("empty axis"));
                }
                if max < min {
                    return Err(bad("max below min"));
                }
                if n == 1 && max != min {
                    return Err(bad("a single point needs min = max"));
                }
                let values = (0..n)
                    .map(|i| if n == 1 { min } else { min + (max - min) * i as f64 / (n - 1) as f64 })
                    .collect();
                Ok(Self { name, values, range: Some((min, max, n)) })
            }
            [list] => {
                if list.trim().is_empty() {
                    return Err(bad("empty axis"));
                }
                let values = list.split(',').map(number).collect::<Result<Vec<_>, _>>()?;
                Ok(Self { name, values, range: None })
            }
            _ => Err(bad("expected axis:min:max:n or axis:v1,v2,...")),
        }
    }
}

/// Everything a run needs, after merging file and flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub name: Option<String>,
    pub command: Option<String>,
    pub w: f64,
    pub v: f64,
    pub j: f64,
    /// Dimensionless `g0 T` of the rotating-frame runs.
    pub total_time: f64,
    pub steps: usize,
    pub schedule: ScheduleKind,
    /// Brillouin-zone samples for winding and Wilson loops.
    pub bz_samples: usize,
    pub grid: Vec<GridAxis>,
    pub cavity: CavityConfig,
    pub export_raw: bool,
    pub out: PathBuf,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            name: None,
            command: None,
            w: 1.0,
            v: 5.0,
            j: 0.0,
            total_time: 200.0,
            steps: 40_000,
            schedule: ScheduleKind::Half,
            bz_samples: 4096,
            grid: Vec::new(),
            cavity: CavityConfig::default(),
            export_raw: false,
            out: PathBuf::from("out"),
            format: Format::Csv,
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, CliError> {
    let x: f64 = value.parse().map_err(|_| CliError::Config(format!("{key}: '{value}' is not a number")))?;
    if !x.is_finite() {
        return Err(CliError::Config(format!("{key}: value must be finite")));
    }
    Ok(x)
}

fn parse_usize(key: &str, value: &str) -> Result<usize, CliError> {
    value.parse().map_err(|_| CliError::Config(format!("{key}: '{value}' is not a non-negative integer")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::Config(format!("{key}: '{value}' is not a boolean"))),
    }
}

fn parse_enum<E: ValueEnum>(key: &str, value: &str) -> Result<E, CliError> {
    E::from_str(value, false).map_err(|_| CliError::Config(format!("{key}: unknown value '{value}'")))
}

impl RunConfig {
    /// Parses config-file text. Unknown sections, keys and duplicates are errors.
    pub fn from_str_with_base(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        let mut section = String::new();
        let mut seen = std::collections::HashSet::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| CliError::Config(format!("line {}: {msg}", lineno + 1));
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| at(format!("malformed section header '{line}'")))?.trim();
                if !matches!(name, "model" | "schedule" | "grid" | "lab" | "output") {
                    return Err(at(format!("unknown section [{name}]")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| at(format!("expected key = value, got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let qualified = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
            if !(section == "grid" && key == "axis") && !seen.insert(qualified.clone()) {
                return Err(at(format!("duplicate key '{qualified}'")));
            }
            let wrap = |e: CliError| match e {
                CliError::Config(m) => at(m),
                other => other,
            };
            cfg.apply(&qualified, value, base).map_err(wrap)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_str_with_base(&text, base)
            .map_err(|e| match e {
                CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
                other => other,
            })
    }

    fn apply(&mut self, key: &str, value: &str, base: &Path) -> Result<(), CliError> {
        match key {
            "name" => self.name = Some(value.to_string()),
            "command" => self.command = Some(value.to_string()),
            "model.w" => self.w = parse_f64(key, value)?,
            "model.v" => self.v = parse_f64(key, value)?,
            "model.J" => self.j = parse_f64(key, value)?,
            "schedule.T" => self.total_time = parse_f64(key, value)?,
            "schedule.steps" => self.steps = parse_usize(key, value)?,
            "schedule.variant" => self.schedule = parse_enum(key, value)?,
            "schedule.bz_samples" => self.bz_samples = parse_usize(key, value)?,
            "grid.axis" => self.grid.push(GridAxis::parse(value)?),
            "lab.f0_hz" => self.cavity.f0 = parse_f64(key, value)?,
            "lab.g0_hz" => self.cavity.g0 = TAU * parse_f64(key, value)?,
            "lab.gamma" => self.cavity.gamma = parse_f64(key, value)?,
            "lab.sample_rate" => self.cavity.sample_rate = parse_f64(key, value)?,
            "lab.T" => self.cavity.total_time = parse_f64(key, value)?,
            "lab.demod_cycles" => self.cavity.demod_cycles = parse_usize(key, value)?,
            "lab.substeps" => self.cavity.substeps = parse_usize(key, value)?,
            "lab.export_raw" => self.export_raw = parse_bool(key, value)?,
            "output.dir" => {
                let p = PathBuf::from(value);
                self.out = if p.is_absolute() { p } else { base.join(p) };
            }
            "output.format" => self.format = parse_enum(key, value)?,
            _ => return Err(CliError::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Overlays command-line flags. `--T` sets the lab duration (seconds) for
    /// `labframe` and `g0 T` otherwise.
    pub fn overlay(&mut self, flags: &Flags, lab: bool) -> Result<(), CliError> {
        let finite = |name: &str, x: f64| {
            if x.is_finite() {
                Ok(x)
            } else {
                Err(CliError::Config(format!("--{name} must be finite")))
            }
        };
        if let Some(x) = flags.w {
            self.w = finite("w", x)?;
        }
        if let Some(x) = flags.v {
            self.v = finite("v", x)?;
        }
        if let Some(x) = flags.j {
            self.j = finite("J", x)?;
        }
        if let Some(x) = flags.t {
            let x = finite("T", x)?;
            if lab {
                self.cavity.total_time = x;
            } else {
                self.total_time = x;
            }
        }
        if let Some(n) = flags.steps {
            self.steps = n;
        }
        if let Some(s) = flags.schedule {
            self.schedule = s;
        }
        if let Some(n) = flags.bz_samples {
            self.bz_samples = n;
        }
        if let Some(x) = flags.g0_hz {
            self.cavity.g0 = TAU * finite("g0-hz", x)?;
        }
        if let Some(x) = flags.f0_hz {
            self.cavity.f0 = finite("f0-hz", x)?;
        }
        if let Some(x) = flags.gamma {
            self.cavity.gamma = finite("gamma", x)?;
        }
        if let Some(x) = flags.sample_rate {
            self.cavity.sample_rate = finite("sample-rate", x)?;
        }
        if !flags.grid.is_empty() {
            self.grid = flags.grid.iter().map(|g| GridAxis::parse(g)).collect::<Result<_, _>>()?;
        }
        if flags.export_raw {
            self.export_raw = true;
        }
        if let Some(dir) = &flags.out {
            self.out = dir.clone();
        }
        if let Some(f) = flags.format {
            self.format = f;
        }
        Ok(())
    }
}
