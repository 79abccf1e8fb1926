//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::hamiltonian::{AtomParams, EFFECTIVE_LABELS};
use crate::quantum::BasisLabel;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig2,
    Physical,
}

impl Preset {
    pub fn params(self) -> AtomParams {
        match self {
            Preset::Fig2 => AtomParams::fig2(),
            Preset::Physical => AtomParams::physical(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Physical => "physical",
        }
    }

    pub fn units(self) -> &'static str {
        match self {
            Preset::Fig2 => "frequency in units of omega_b; time in units of 1/omega_b",
            Preset::Physical => "frequency in MHz; time in us",
        }
    }
}

impl FromStr for Preset {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "fig2" => Ok(Preset::Fig2),
            "physical" => Ok(Preset::Physical),
            _ => err(format!("unknown preset `{s}` (expected fig2 or physical)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    /// Decay rate in units of `omega_b`.
    Gamma,
    /// `(omega_a − omega_b) / omega_b`
    DeltaOmega,
    /// Time in units of the optimal gate time.
    DeltaT,
    /// Absolute time.
    Time,
}

impl AxisKind {
    pub fn name(self) -> &'static str {
        match self {
            AxisKind::Gamma => "gamma",
            AxisKind::DeltaOmega => "delta_omega",
            AxisKind::DeltaT => "delta_t",
            AxisKind::Time => "time",
        }
    }

    /// Time-like axes are integrated along in a single run.
    pub fn is_trace(self) -> bool {
        matches!(self, AxisKind::DeltaT | AxisKind::Time)
    }
}

impl FromStr for AxisKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "gamma" => Ok(AxisKind::Gamma),
            "delta_omega" => Ok(AxisKind::DeltaOmega),
            "delta_t" => Ok(AxisKind::DeltaT),
            "time" => Ok(AxisKind::Time),
            _ => err(format!(
                "unknown axis `{s}` (expected gamma, delta_omega, delta_t or time)"
            )),
        }
    }
}

/// Bound of a time axis; `t0` suffixes scale by the optimal time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Value(f64),
    TimesT0(f64),
}

impl Bound {
    pub fn resolve(self, t0: f64) -> f64 {
        match self {
            Bound::Value(v) => v,
            Bound::TimesT0(k) => k * t0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub kind: AxisKind,
    pub min: Bound,
    pub max: Bound,
    pub points: usize,
}

impl Axis {
    /// `points` evenly spaced values; the last is exactly `max`.
    pub fn values(&self, t0: f64) -> Vec<f64> {
        let (lo, hi) = (self.min.resolve(t0), self.max.resolve(t0));
        let n = self.points;
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }

    fn parse(spec: &str) -> Result<Axis, ConfigError> {
        let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
        if parts.len() != 4 {
            return err(format!("axis `{spec}` must be name:min:max:points"));
        }
        let kind: AxisKind = parts[0].parse()?;
        let bound = |s: &str| -> Result<Bound, ConfigError> {
            if let Some(k) = s.strip_suffix("t0") {
                if kind != AxisKind::Time {
                    return err("the t0 suffix is only valid on the time axis");
                }
                let k = if k.is_empty() { 1.0 } else { parse_f64("axis bound", k)? };
                return Ok(Bound::TimesT0(k));
            }
            Ok(Bound::Value(parse_f64("axis bound", s)?))
        };
        let points: usize = parts[3]
            .parse()
            .map_err(|_| ConfigError(format!("axis point count `{}` is not an integer", parts[3])))?;
        let axis = Axis {
            kind,
            min: bound(parts[1])?,
            max: bound(parts[2])?,
            points,
        };
        axis.check()?;
        Ok(axis)
    }

    fn check(&self) -> Result<(), ConfigError> {
        if self.points < 2 {
            return err(format!("axis {} needs at least 2 points", self.kind.name()));
        }
        // Compare in a common scale; mixing plain and t0 bounds is checked
        // again once t0 is known.
        let (lo, hi) = match (self.min, self.max) {
            (Bound::Value(a), Bound::Value(b)) | (Bound::TimesT0(a), Bound::TimesT0(b)) => (a, b),
            _ => return Ok(()),
        };
        self.check_range(lo, hi)
    }

    fn check_range(&self, lo: f64, hi: f64) -> Result<(), ConfigError> {
        if !(lo.is_finite() && hi.is_finite()) {
            return err(format!("axis {} range is not finite", self.kind.name()));
        }
        if lo >= hi {
            return err(format!(
                "axis {} range is empty: min {lo} must be below max {hi}",
                self.kind.name()
            ));
        }
        if self.kind != AxisKind::DeltaOmega && lo < 0.0 {
            return err(format!("axis {} must be non-negative", self.kind.name()));
        }
        Ok(())
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = |b: Bound| match b {
            Bound::Value(v) => format!("{v}"),
            Bound::TimesT0(k) => format!("{k}t0"),
        };
        write!(f, "{}:{}:{}:{}", self.kind.name(), b(self.min), b(self.max), self.points)
    }
}

/// What the evolved state is scored against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    /// Ideal gate image of the initial state.
    Gate,
    Label(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub preset: Preset,
    pub params: AtomParams,
    pub axes: Vec<Axis>,
    pub initial: String,
    pub target: Target,
    pub steps: Option<usize>,
    pub out: Option<String>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            preset: Preset::Fig2,
            params: AtomParams::fig2(),
            axes: Vec::new(),
            initial: "00".into(),
            target: Target::Gate,
            steps: None,
            out: None,
        }
    }
}

const KEYS: [&str; 12] = [
    "preset", "omega_a", "omega_b", "delta_a", "delta_b", "delta_rr", "gamma", "initial",
    "target", "axis", "steps", "out",
];

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    v.parse::<f64>()
        .map_err(|_| ConfigError(format!("{key}: `{v}` is not a number")))
}

impl SweepConfig {
    /// Parse config text, then apply `key=value` overrides in order.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut entries: Vec<(String, String)> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return err(format!("line {}: expected key = value", n + 1));
            };
            let key = k.trim().to_ascii_lowercase();
            if key != "axis" && entries.iter().any(|(e, _)| *e == key) {
                return err(format!("line {}: duplicate key `{key}`", n + 1));
            }
            entries.push((key, v.trim().to_string()));
        }
        let mut overridden_axes = false;
        for o in overrides {
            let Some((k, v)) = o.split_once('=') else {
                return err(format!("override `{o}` must be key=value"));
            };
            let key = k.trim().to_ascii_lowercase();
            if key == "axis" {
                // the first axis override replaces the file's axes
                if !overridden_axes {
                    entries.retain(|(e, _)| e != "axis");
                    overridden_axes = true;
                }
            } else {
                entries.retain(|(e, _)| *e != key);
            }
            entries.push((key, v.trim().to_string()));
        }
        Self::from_entries(&entries)
    }

    fn from_entries(entries: &[(String, String)]) -> Result<Self, ConfigError> {
        for (k, _) in entries {
            if !KEYS.contains(&k.as_str()) {
                return err(format!("unknown key `{k}`"));
            }
        }
        let mut cfg = SweepConfig::default();
        let single: BTreeMap<&str, &str> = entries
            .iter()
            .filter(|(k, _)| k != "axis")
            .map(|(k, v)| (k.as_str(), v.as_str()))
            .collect();
        if let Some(p) = single.get("preset") {
            cfg.preset = p.parse()?;
            cfg.params = cfg.preset.params();
        }
        let p = &mut cfg.params;
        for (key, field) in [
            ("omega_a", &mut p.omega_a),
            ("omega_b", &mut p.omega_b),
            ("delta_a", &mut p.delta_a),
            ("delta_b", &mut p.delta_b),
            ("delta_rr", &mut p.delta_rr),
            ("gamma", &mut p.gamma),
        ] {
            if let Some(v) = single.get(key) {
                *field = parse_f64(key, v)?;
            }
        }
        if let Some(v) = single.get("initial") {
            let label: BasisLabel = v
                .parse()
                .map_err(|_| ConfigError(format!("initial: invalid label `{v}`")))?;
            if label.len() != 2 || !label.is_computational() {
                return err(format!("initial: `{v}` is not one of 00, 01, 10, 11"));
            }
            cfg.initial = v.to_string();
        }
        if let Some(v) = single.get("target") {
            cfg.target = if *v == "gate" {
                Target::Gate
            } else if EFFECTIVE_LABELS.contains(v) {
                Target::Label(v.to_string())
            } else {
                return err(format!(
                    "target: expected gate or one of {}",
                    EFFECTIVE_LABELS.join(", ")
                ));
            };
        }
        if let Some(v) = single.get("steps") {
            let n: usize = v
                .parse()
                .map_err(|_| ConfigError(format!("steps: `{v}` is not a positive integer")))?;
            if n == 0 {
                return err("steps must be at least 1");
            }
            cfg.steps = Some(n);
        }
        cfg.out = single.get("out").map(|s| s.to_string());
        for (k, v) in entries {
            if k == "axis" {
                cfg.axes.push(Axis::parse(v)?);
            }
        }
        if cfg.axes.len() > 2 {
            return err("at most two axes are supported");
        }
        if cfg.axes.len() == 2 && cfg.axes[0].kind == cfg.axes[1].kind {
            return err(format!("axis {} given twice", cfg.axes[0].kind.name()));
        }
        let t0 = cfg.params.optimal_time();
        for a in &cfg.axes {
            if t0.is_finite() {
                a.check_range(a.min.resolve(t0), a.max.resolve(t0))?;
            }
        }
        Ok(cfg)
    }

    /// Settings for the grid behind one of the sweep figures.
    pub fn figure(name: &str) -> Result<Self, ConfigError> {
        let text = match name {
            "fig3" => "axis = gamma:0:0.002:41\naxis = time:0.75t0:1.25t0:41\nsteps = 60000\n",
            "fig4" => "axis = gamma:0:0.002:41\naxis = delta_omega:-0.1:0.1:41\nsteps = 40000\n",
            "fig5" => "gamma = 0\naxis = delta_t:0.8:1.2:41\naxis = delta_omega:-0.1:0.1:41\nsteps = 48000\n",
            _ => return err(format!("unknown figure `{name}` (expected fig3, fig4 or fig5)")),
        };
        SweepConfig::parse(text, &[])
    }

    /// Render back to config text.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut s = format!(
            "preset = {}\nomega_a = {}\nomega_b = {}\ndelta_a = {}\ndelta_b = {}\ndelta_rr = {}\ngamma = {}\ninitial = {}\ntarget = {}\n",
            self.preset.name(),
            p.omega_a,
            p.omega_b,
            p.delta_a,
            p.delta_b,
            p.delta_rr,
            p.gamma,
            self.initial,
            match &self.target {
                Target::Gate => "gate",
                Target::Label(l) => l,
            }
        );
        for a in &self.axes {
            s.push_str(&format!("axis = {a}\n"));
        }
        if let Some(n) = self.steps {
            s.push_str(&format!("steps = {n}\n"));
        }
        if let Some(o) = &self.out {
            s.push_str(&format!("out = {o}\n"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg = SweepConfig::parse(
            "# comment\npreset = physical\ngamma = 0   # no decay\naxis = time:0:1t0:11\n",
            &["omega_a=55".into()],
        )
        .unwrap();
        assert_eq!(cfg.preset, Preset::Physical);
        assert_eq!(cfg.params.gamma, 0.0);
        assert_eq!(cfg.params.omega_a, 55.0);
        assert_eq!(cfg.params.delta_rr, 2000.0);
        assert_eq!(cfg.axes.len(), 1);
        let t0 = cfg.params.optimal_time();
        let v = cfg.axes[0].values(t0);
        assert_eq!(v.len(), 11);
        assert_eq!(v[10], t0);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "axis = time:0:0:2",
            "axis = time:0:1:1",
            "axis = time:1:0:5",
            "axis = spin:0:1:5",
            "axis = gamma:0:1t0:5",
            "omega_a = fast",
            "colour = blue",
            "gamma = 1\ngamma = 2",
            "initial = 0r",
            "target = 01r",
            "preset = lab",
            "steps = 0",
            "axis = gamma:0:1:3\naxis = gamma:0:2:3",
            "axis = gamma:0:1:3\naxis = time:0:1:3\naxis = delta_t:0:1:3",
            "just words",
        ] {
            assert!(SweepConfig::parse(text, &[]).is_err(), "{text}");
        }
    }

    #[test]
    fn round_trip() {
        for fig in ["fig3", "fig4", "fig5"] {
            let cfg = SweepConfig::figure(fig).unwrap();
            assert_eq!(SweepConfig::parse(&cfg.to_text(), &[]).unwrap(), cfg);
        }
    }
}
