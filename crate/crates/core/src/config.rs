//! Line-based run configuration.
//!
//! ```text
//! # comments start with '#'
//! [generator]
//! f0 = 50
//! fs = 10000
//!
//! [scenario]
//! fault = BC, t_fault = 0.2
//! ```
//!
//! Section headers are optional because every key name is unique; when a
//! header is present, the keys below it must belong to that section. Several
//! `key = value` pairs may share a line, separated by commas. Unknown keys
//! are errors. Anything not given keeps its default.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::detector::Thresholds;
use crate::error::{Error, Result};
use crate::sogi::MonitorParams;
use crate::waveform::{FaultClass, FaultScenario, GeneratorConfig};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outputs {
    pub trace: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub generator: GeneratorConfig,
    pub scenario: FaultScenario,
    pub thresholds: Thresholds,
    pub sogi: MonitorParams,
    pub outputs: Outputs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Section {
    Generator,
    Scenario,
    Thresholds,
    Sogi,
    Output,
}

impl Section {
    fn parse(name: &str) -> Option<Section> {
        Some(match name {
            "generator" => Section::Generator,
            "scenario" => Section::Scenario,
            "thresholds" => Section::Thresholds,
            "sogi" => Section::Sogi,
            "output" | "outputs" => Section::Output,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Section::Generator => "generator",
            Section::Scenario => "scenario",
            Section::Thresholds => "thresholds",
            Section::Sogi => "sogi",
            Section::Output => "output",
        }
    }
}

/// Every recognised key and the section it lives in.
pub const KEYS: &[(&str, Section)] = &[
    ("f0", Section::Generator),
    ("fs", Section::Generator),
    ("amplitude", Section::Generator),
    ("duration", Section::Generator),
    ("onset_angle", Section::Generator),
    ("fault", Section::Scenario),
    ("t_fault", Section::Scenario),
    ("rho", Section::Scenario),
    ("alpha", Section::Thresholds),
    ("delta_v", Section::Thresholds),
    ("eps_v0", Section::Thresholds),
    ("pp_amp_ceiling", Section::Thresholds),
    ("debounce", Section::Thresholds),
    ("settling_cycles", Section::Thresholds),
    ("set_hold", Section::Thresholds),
    ("confirm", Section::Thresholds),
    ("k", Section::Sogi),
    ("lpf_cutoff", Section::Sogi),
    ("amp_floor", Section::Sogi),
    ("trace", Section::Output),
    ("report", Section::Output),
];

fn section_of(key: &str) -> Option<Section> {
    KEYS.iter().find(|(k, _)| *k == key).map(|(_, s)| *s)
}

impl RunConfig {
    /// Checks every embedded invariant. Output paths are checked when opened.
    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        self.scenario.validate(&self.generator)?;
        self.thresholds.validate()?;
        self.sogi.validate()?;
        crate::sogi::SogiParams::new(self.sogi.k, self.generator.f0, self.generator.fs)?;
        if self.sogi.lpf_cutoff >= self.generator.fs / 2.0 {
            return Err(Error::invariant("LowPassState", "fc < fs / 2"));
        }
        Ok(())
    }

    /// Assigns one key. Values are not range-checked here; see [`validate`].
    ///
    /// [`validate`]: RunConfig::validate
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let value = value.trim();
        let num = || {
            value
                .parse::<f64>()
                .map_err(|_| format!("`{key}` expects a number, got `{value}`"))
        };
        let int = || {
            value
                .parse::<u32>()
                .map_err(|_| format!("`{key}` expects a non-negative integer, got `{value}`"))
        };
        let path = || (!value.is_empty()).then(|| PathBuf::from(value));
        match key {
            "f0" => self.generator.f0 = num()?,
            "fs" => self.generator.fs = num()?,
            "amplitude" => self.generator.amplitude = num()?,
            "duration" => self.generator.duration = num()?,
            "onset_angle" => self.generator.onset_angle = num()?,
            "fault" => self.scenario.fault = value.parse::<FaultClass>().map_err(|e| e.to_string())?,
            "t_fault" => self.scenario.t_fault = num()?,
            "rho" => self.scenario.rho = num()?,
            "alpha" => self.thresholds.alpha = num()?,
            "delta_v" => self.thresholds.delta_v = num()?,
            "eps_v0" => self.thresholds.eps_v0 = num()?,
            "pp_amp_ceiling" => self.thresholds.pp_amp_ceiling = num()?,
            "debounce" => self.thresholds.debounce = int()?,
            "settling_cycles" => self.thresholds.settling_cycles = num()?,
            "set_hold" => self.thresholds.set_hold = int()?,
            "confirm" => self.thresholds.confirm = int()?,
            "k" => self.sogi.k = num()?,
            "lpf_cutoff" => self.sogi.lpf_cutoff = num()?,
            "amp_floor" => self.sogi.amp_floor = num()?,
            "trace" => self.outputs.trace = path(),
            "report" => self.outputs.report = path(),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Parses and validates configuration text.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies configuration text on top of `self` without validating.
    pub fn apply(&mut self, text: &str) -> Result<()> {
        let mut section: Option<Section> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |msg: String| Error::Parse { line: line_no, msg };
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(format!("unterminated section header `{line}`")))?
                    .trim();
                section = Some(
                    Section::parse(name).ok_or_else(|| err(format!("unknown section `[{name}]`")))?,
                );
                continue;
            }
            for pair in split_pairs(line) {
                let (key, value) = pair
                    .split_once('=')
                    .ok_or_else(|| err(format!("expected `key = value`, got `{pair}`")))?;
                let key = key.trim();
                let home = section_of(key).ok_or_else(|| err(format!("unknown key `{key}`")))?;
                if let Some(current) = section {
                    if current != home {
                        return Err(err(format!(
                            "key `{key}` belongs in [{}], not [{}]",
                            home.name(),
                            current.name()
                        )));
                    }
                }
                self.set(key, value).map_err(err)?;
            }
        }
        Ok(())
    }

    /// Renders the configuration so that [`RunConfig::parse`] gives it back.
    pub fn to_config_text(&self) -> String {
        let g = &self.generator;
        let s = &self.scenario;
        let t = &self.thresholds;
        let m = &self.sogi;
        let mut out = String::new();
        let _ = writeln!(out, "[generator]");
        let _ = writeln!(out, "f0 = {}", g.f0);
        let _ = writeln!(out, "fs = {}", g.fs);
        let _ = writeln!(out, "amplitude = {}", g.amplitude);
        let _ = writeln!(out, "duration = {}", g.duration);
        let _ = writeln!(out, "onset_angle = {}", g.onset_angle);
        let _ = writeln!(out, "\n[scenario]");
        let _ = writeln!(out, "fault = {}", s.fault);
        let _ = writeln!(out, "t_fault = {}", s.t_fault);
        let _ = writeln!(out, "rho = {}", s.rho);
        let _ = writeln!(out, "\n[thresholds]");
        let _ = writeln!(out, "alpha = {}", t.alpha);
        let _ = writeln!(out, "delta_v = {}", t.delta_v);
        let _ = writeln!(out, "eps_v0 = {}", t.eps_v0);
        let _ = writeln!(out, "pp_amp_ceiling = {}", t.pp_amp_ceiling);
        let _ = writeln!(out, "debounce = {}", t.debounce);
        let _ = writeln!(out, "settling_cycles = {}", t.settling_cycles);
        let _ = writeln!(out, "set_hold = {}", t.set_hold);
        let _ = writeln!(out, "confirm = {}", t.confirm);
        let _ = writeln!(out, "\n[sogi]");
        let _ = writeln!(out, "k = {}", m.k);
        let _ = writeln!(out, "lpf_cutoff = {}", m.lpf_cutoff);
        let _ = writeln!(out, "amp_floor = {}", m.amp_floor);
        let has_outputs = self.outputs.trace.is_some() || self.outputs.report.is_some();
        if has_outputs {
            let _ = writeln!(out, "\n[output]");
            if let Some(p) = &self.outputs.trace {
                let _ = writeln!(out, "trace = {}", p.display());
            }
            if let Some(p) = &self.outputs.report {
                let _ = writeln!(out, "report = {}", p.display());
            }
        }
        out
    }
}

/// Splits `a = 1, b = 2` into pairs, but leaves a comma that is not followed
/// by another `key =` inside the current value.
fn split_pairs(line: &str) -> Vec<&str> {
    let mut pairs = Vec::new();
    let mut start = 0;
    for (i, _) in line.match_indices(',') {
        let rest = &line[i + 1..];
        let next_is_pair = rest
            .split_once('=')
            .map(|(k, _)| section_of(k.trim()).is_some())
            .unwrap_or(false);
        if next_is_pair {
            pairs.push(line[start..i].trim());
            start = i + 1;
        }
    }
    pairs.push(line[start..].trim());
    pairs
}
