//! Scenario runs, sweeps and their file formats.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::detector::DetectionReport;
use crate::error::{Error, Result};
use crate::pipeline::{simulate, Step};
use crate::waveform::FaultClass;

// ---------------------------------------------------------------------------
// Trace
// ---------------------------------------------------------------------------

pub const TRACE_COLUMNS: [&str; 13] = [
    "t", "va", "vb", "vc", "amp_a", "amp_b", "amp_c", "thd_a", "thd_b", "thd_c", "v0_inst", "v0_mag",
    "code",
];

/// One CSV row per sample. Floats use Rust's shortest round-trip formatting.
pub struct TraceWriter<W: Write> {
    out: W,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        writeln!(out, "{}", TRACE_COLUMNS.join(","))?;
        Ok(Self { out })
    }

    pub fn write(&mut self, step: &Step) -> io::Result<()> {
        let s = &step.sample;
        let [a, b, c] = &step.frame.phases;
        writeln!(
            self.out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            s.t,
            s.va,
            s.vb,
            s.vc,
            a.amp,
            b.amp,
            c.amp,
            a.thd,
            b.thd,
            c.thd,
            step.frame.v0_inst,
            step.frame.v0_mag,
            step.code.code()
        )
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_else(|| "none".to_string())
}

/// Flat `key = value` rendering of a report, ending with a `summary` line.
pub fn format_report(report: &DetectionReport, cfg: &RunConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "fault = {}", report.expected);
    let _ = writeln!(out, "t_fault = {}", cfg.scenario.t_fault);
    let _ = writeln!(out, "rho = {}", cfg.scenario.rho);
    let _ = writeln!(out, "onset_angle = {}", cfg.generator.onset_angle);
    let _ = writeln!(out, "code = {}", report.code.code());
    let _ = writeln!(out, "class = {}", report.code);
    let _ = writeln!(out, "t_detect = {}", opt(report.t_detect));
    let _ = writeln!(out, "t_identify = {}", opt(report.t_identify));
    let _ = writeln!(out, "detect_latency = {}", opt(report.detect_latency));
    let _ = writeln!(out, "latency = {}", opt(report.latency));
    for (i, name) in ["a", "b", "c"].iter().enumerate() {
        let _ = writeln!(out, "t_detect_{name} = {}", opt(report.t_detect_phase[i]));
    }
    for (i, name) in ["a", "b", "c"].iter().enumerate() {
        let _ = writeln!(out, "peak_thd_{name} = {}", report.peak_thd[i]);
    }
    for (i, name) in ["a", "b", "c"].iter().enumerate() {
        let _ = writeln!(out, "min_amp_{name} = {}", report.min_amp[i]);
    }
    for (i, name) in ["a", "b", "c"].iter().enumerate() {
        let _ = writeln!(out, "final_amp_{name} = {}", report.final_amp[i]);
    }
    let _ = writeln!(out, "peak_v0_mag = {}", report.peak_v0_mag);
    let _ = writeln!(out, "final_v0_mag = {}", report.final_v0_mag);
    let _ = writeln!(out, "thd_only_alarm = {}", report.thd_only_alarm);
    let _ = writeln!(out, "amp_floor_hit = {}", report.amp_floor_hit);
    let _ = writeln!(out, "input_fault = {}", report.input_fault);
    let _ = writeln!(out, "summary = {}", summary_line(report));
    out
}

/// Single-line `key=value;...` digest used for aggregation.
pub fn summary_line(report: &DetectionReport) -> String {
    format!(
        "expected={};code={};correct={};latency_ms={};max_peak_thd={};min_amp={};peak_v0_mag={}",
        report.expected.code(),
        report.code.code(),
        report.is_correct(),
        report
            .latency
            .map(|l| format!("{:.3}", l * 1e3))
            .unwrap_or_else(|| "none".into()),
        report.peak_thd.iter().cloned().fold(0.0, f64::max),
        report.min_amp.iter().cloned().fold(f64::INFINITY, f64::min),
        report.peak_v0_mag,
    )
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Single runs
// ---------------------------------------------------------------------------

/// Runs one scenario, writing the trace and report files named in
/// `cfg.outputs` (when set).
pub fn run_scenario(cfg: &RunConfig) -> Result<DetectionReport> {
    cfg.validate()?;
    let report = match &cfg.outputs.trace {
        Some(path) => {
            let mut trace = TraceWriter::new(create(path)?).map_err(|e| Error::io(path, e))?;
            let report = simulate(&cfg.generator, &cfg.scenario, &cfg.sogi, &cfg.thresholds, |s| {
                trace.write(s).map_err(|e| Error::io(path, e))
            })?;
            trace.finish().map_err(|e| Error::io(path, e))?;
            report
        }
        None => simulate(&cfg.generator, &cfg.scenario, &cfg.sogi, &cfg.thresholds, |_| Ok(()))?,
    };
    if let Some(path) = &cfg.outputs.report {
        let mut out = create(path)?;
        out.write_all(format_report(&report, cfg).as_bytes())
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))?;
    }
    Ok(report)
}

/// Runs one scenario and returns the trace as an in-memory CSV string.
pub fn run_to_string(cfg: &RunConfig) -> Result<(DetectionReport, String)> {
    cfg.validate()?;
    let mut trace = TraceWriter::new(Vec::new()).map_err(|e| Error::io("<memory>", e))?;
    let report = simulate(&cfg.generator, &cfg.scenario, &cfg.sogi, &cfg.thresholds, |s| {
        trace.write(s).map_err(|e| Error::io("<memory>", e))
    })?;
    let bytes = trace.finish().map_err(|e| Error::io("<memory>", e))?;
    Ok((report, String::from_utf8(bytes).expect("trace is ASCII")))
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub classes: Vec<FaultClass>,
    pub angles_deg: Vec<f64>,
    pub rhos: Vec<f64>,
    pub base: RunConfig,
}

impl SweepSpec {
    /// Every fault class, 0°..350° in 10° steps, bolted faults.
    pub fn default_sweep(base: RunConfig) -> Self {
        Self {
            classes: FaultClass::FAULTS.to_vec(),
            angles_deg: (0..36).map(|i| i as f64 * 10.0).collect(),
            rhos: vec![0.0],
            base,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::invariant("SweepSpec", "non-empty class list"));
        }
        if self.angles_deg.is_empty() {
            return Err(Error::invariant("SweepSpec", "non-empty angle list"));
        }
        if self.rhos.is_empty() {
            return Err(Error::invariant("SweepSpec", "non-empty rho list"));
        }
        let mut base = self.base.clone();
        base.outputs = Default::default();
        base.validate()
    }

    /// The run configuration of one sweep point, without output files.
    pub fn point(&self, class: FaultClass, angle_deg: f64, rho: f64) -> RunConfig {
        let mut cfg = self.base.clone();
        cfg.outputs = Default::default();
        cfg.scenario.fault = class;
        cfg.scenario.rho = rho;
        cfg.generator.onset_angle = angle_deg.to_radians();
        cfg
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub class: FaultClass,
    pub angle_deg: f64,
    pub rho: f64,
    pub outcome: std::result::Result<DetectionReport, String>,
}

impl SweepRow {
    pub fn is_misclassified(&self) -> bool {
        matches!(&self.outcome, Ok(r) if !r.is_correct())
    }
}

#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
}

impl SweepSummary {
    pub fn misclassified(&self) -> usize {
        self.rows.iter().filter(|r| r.is_misclassified()).count()
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_err()).count()
    }

    pub fn worst_latency(&self) -> Option<f64> {
        self.reports()
            .filter_map(|r| r.latency)
            .fold(None, |acc: Option<f64>, l| Some(acc.map_or(l, |a| a.max(l))))
    }

    pub fn reports(&self) -> impl Iterator<Item = &DetectionReport> {
        self.rows.iter().filter_map(|r| r.outcome.as_ref().ok())
    }

    /// Expected-vs-observed counts, indexed `[expected][observed]`.
    pub fn confusion(&self) -> [[usize; 11]; 11] {
        let mut m = [[0; 11]; 11];
        for r in self.reports() {
            m[r.expected.code() as usize][r.code.code() as usize] += 1;
        }
        m
    }

    pub const CSV_HEADER: &'static str = "class,angle_deg,rho,expected,code,correct,latency_ms,\
        detect_latency_ms,peak_thd_a,peak_thd_b,peak_thd_c,min_amp_a,min_amp_b,min_amp_c,\
        final_amp_a,final_amp_b,final_amp_c,final_v0_mag,error";

    pub fn to_csv(&self) -> String {
        let ms = |v: Option<f64>| v.map(|v| (v * 1e3).to_string()).unwrap_or_default();
        let mut out = String::new();
        let _ = writeln!(out, "{}", Self::CSV_HEADER);
        for row in &self.rows {
            let _ = write!(out, "{},{},{},", row.class, row.angle_deg, row.rho);
            match &row.outcome {
                Ok(r) => {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},",
                        r.expected.code(),
                        r.code.code(),
                        r.is_correct(),
                        ms(r.latency),
                        ms(r.detect_latency),
                        r.peak_thd[0],
                        r.peak_thd[1],
                        r.peak_thd[2],
                        r.min_amp[0],
                        r.min_amp[1],
                        r.min_amp[2],
                        r.final_amp[0],
                        r.final_amp[1],
                        r.final_amp[2],
                        r.final_v0_mag,
                    );
                }
                Err(e) => {
                    let _ = writeln!(
                        out,
                        "{},,,,,,,,,,,,,,,\"{}\"",
                        row.class.code(),
                        e.replace('"', "'")
                    );
                }
            }
        }
        out
    }

    pub fn summary_text(&self) -> String {
        let worst = self
            .worst_latency()
            .map(|l| format!("{:.3} ms", l * 1e3))
            .unwrap_or_else(|| "none".into());
        format!(
            "runs = {}\nmisclassified = {}\nfailed = {}\nworst_latency = {}\n",
            self.rows.len(),
            self.misclassified(),
            self.failures(),
            worst
        )
    }
}

/// Runs every (class, angle, rho) point in parallel. Individual failures are
/// recorded in their row; the sweep itself only fails on an invalid spec.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepSummary> {
    spec.validate()?;
    let mut points = Vec::new();
    for &class in &spec.classes {
        for &angle in &spec.angles_deg {
            for &rho in &spec.rhos {
                points.push((class, angle, rho));
            }
        }
    }
    let rows = points
        .into_par_iter()
        .map(|(class, angle_deg, rho)| {
            let cfg = spec.point(class, angle_deg, rho);
            let outcome = run_scenario(&cfg).map_err(|e| e.to_string());
            SweepRow {
                class,
                angle_deg,
                rho,
                outcome,
            }
        })
        .collect();
    Ok(SweepSummary { rows })
}
