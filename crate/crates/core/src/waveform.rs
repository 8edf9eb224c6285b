//! Per-unit three-phase voltage synthesis with ideal fault templates.
//!
//! Before onset the generator emits a balanced a-b-c set (b lags a by 120°).
//! From `t_fault` on, the faulted phases follow a fixed template:
//!
//! | fault kind | faulted phase(s) become             |
//! |------------|-------------------------------------|
//! | 1PH-G      | `rho * v0`                          |
//! | 2PH        | `m + rho * (v0 - m)`, `m` = midpoint |
//! | 2PH-G      | `rho * v0` on both phases           |
//! | 3PH(-G)    | `rho * v0` on all three phases      |
//!
//! where `v0` is the pre-fault instantaneous value of that phase.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const PHASE_SHIFT: f64 = 2.0 * PI / 3.0;

// ---------------------------------------------------------------------------
// Phases and fault classes
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    A,
    B,
    C,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::A, Phase::B, Phase::C];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Cyclic relabeling a -> b -> c -> a.
    pub fn rotate(self) -> Phase {
        match self {
            Phase::A => Phase::B,
            Phase::B => Phase::C,
            Phase::C => Phase::A,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::A => "a",
            Phase::B => "b",
            Phase::C => "c",
        })
    }
}

/// Broad fault family, independent of which phases are involved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultKind {
    None,
    SinglePhaseGround,
    PhaseToPhase,
    TwoPhaseGround,
    ThreePhase,
}

/// The digital output of the relay. Discriminants are the wire codes 0-10.
///
/// Code 10 covers both the ungrounded and the grounded three-phase fault.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum FaultClass {
    NoFault = 0,
    AG = 1,
    BG = 2,
    CG = 3,
    AB = 4,
    BC = 5,
    CA = 6,
    ABG = 7,
    BCG = 8,
    CAG = 9,
    ThreePhase = 10,
}

impl FaultClass {
    pub const ALL: [FaultClass; 11] = [
        FaultClass::NoFault,
        FaultClass::AG,
        FaultClass::BG,
        FaultClass::CG,
        FaultClass::AB,
        FaultClass::BC,
        FaultClass::CA,
        FaultClass::ABG,
        FaultClass::BCG,
        FaultClass::CAG,
        FaultClass::ThreePhase,
    ];

    /// Every class except `NoFault`.
    pub const FAULTS: [FaultClass; 10] = [
        FaultClass::AG,
        FaultClass::BG,
        FaultClass::CG,
        FaultClass::AB,
        FaultClass::BC,
        FaultClass::CA,
        FaultClass::ABG,
        FaultClass::BCG,
        FaultClass::CAG,
        FaultClass::ThreePhase,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<FaultClass> {
        FaultClass::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            FaultClass::NoFault => "NoFault",
            FaultClass::AG => "AG",
            FaultClass::BG => "BG",
            FaultClass::CG => "CG",
            FaultClass::AB => "AB",
            FaultClass::BC => "BC",
            FaultClass::CA => "CA",
            FaultClass::ABG => "ABG",
            FaultClass::BCG => "BCG",
            FaultClass::CAG => "CAG",
            FaultClass::ThreePhase => "ABC",
        }
    }

    pub fn kind(self) -> FaultKind {
        match self {
            FaultClass::NoFault => FaultKind::None,
            FaultClass::AG | FaultClass::BG | FaultClass::CG => FaultKind::SinglePhaseGround,
            FaultClass::AB | FaultClass::BC | FaultClass::CA => FaultKind::PhaseToPhase,
            FaultClass::ABG | FaultClass::BCG | FaultClass::CAG => FaultKind::TwoPhaseGround,
            FaultClass::ThreePhase => FaultKind::ThreePhase,
        }
    }

    /// Phases whose voltage the fault template alters.
    pub fn phases(self) -> &'static [Phase] {
        use Phase::*;
        match self {
            FaultClass::NoFault => &[],
            FaultClass::AG => &[A],
            FaultClass::BG => &[B],
            FaultClass::CG => &[C],
            FaultClass::AB | FaultClass::ABG => &[A, B],
            FaultClass::BC | FaultClass::BCG => &[B, C],
            FaultClass::CA | FaultClass::CAG => &[C, A],
            FaultClass::ThreePhase => &[A, B, C],
        }
    }

    /// The class obtained by relabeling phases a -> b -> c -> a.
    pub fn rotate(self) -> FaultClass {
        use FaultClass::*;
        match self {
            NoFault => NoFault,
            AG => BG,
            BG => CG,
            CG => AG,
            AB => BC,
            BC => CA,
            CA => AB,
            ABG => BCG,
            BCG => CAG,
            CAG => ABG,
            ThreePhase => ThreePhase,
        }
    }
}

impl fmt::Display for FaultClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FaultClass {
    type Err = Error;

    /// Accepts the symbolic names (case-insensitive), a few aliases for the
    /// three-phase row, and the bare numeric code.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(code) = s.parse::<u8>() {
            return FaultClass::from_code(code).ok_or_else(|| Error::UnknownFault(s.to_string()));
        }
        let class = match s.to_ascii_uppercase().as_str() {
            "NOFAULT" | "NONE" => FaultClass::NoFault,
            "AG" => FaultClass::AG,
            "BG" => FaultClass::BG,
            "CG" => FaultClass::CG,
            "AB" | "BA" => FaultClass::AB,
            "BC" | "CB" => FaultClass::BC,
            "CA" | "AC" => FaultClass::CA,
            "ABG" | "BAG" => FaultClass::ABG,
            "BCG" | "CBG" => FaultClass::BCG,
            "CAG" | "ACG" => FaultClass::CAG,
            "ABC" | "ABCG" | "3PH" | "3PH-G" | "THREEPHASE" => FaultClass::ThreePhase,
            _ => return Err(Error::UnknownFault(s.to_string())),
        };
        Ok(class)
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorConfig {
    /// Nominal grid frequency, Hz.
    pub f0: f64,
    /// Sampling rate, Hz.
    pub fs: f64,
    /// Pre-fault phase amplitude, pu.
    pub amplitude: f64,
    /// Run length, s.
    pub duration: f64,
    /// Phase-a angle at t = 0, rad.
    pub onset_angle: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            f0: 50.0,
            fs: 10_000.0,
            amplitude: 1.0,
            duration: 0.4,
            onset_angle: 0.0,
        }
    }
}

impl GeneratorConfig {
    pub fn new(f0: f64, fs: f64, amplitude: f64, duration: f64, onset_angle: f64) -> Result<Self> {
        let cfg = Self {
            f0,
            fs,
            amplitude,
            duration,
            onset_angle,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::invariant("GeneratorConfig", msg));
        if !(self.f0.is_finite() && self.f0 > 0.0) {
            return fail("f0 > 0");
        }
        if !(self.fs.is_finite() && self.fs >= 20.0 * self.f0) {
            return fail("fs >= 20 * f0");
        }
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return fail("amplitude > 0");
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return fail("duration > 0");
        }
        if !self.onset_angle.is_finite() {
            return fail("onset_angle finite");
        }
        Ok(())
    }

    /// Number of samples in a run: `floor(duration * fs) + 1`.
    pub fn sample_count(&self) -> usize {
        // The product is nudged so that e.g. 0.4 * 10000 = 3999.9999... still
        // floors to 4000.
        (self.duration * self.fs * (1.0 + 1e-12)).floor() as usize + 1
    }

    pub fn samples_per_cycle(&self) -> f64 {
        self.fs / self.f0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultScenario {
    pub fault: FaultClass,
    /// Onset time, s.
    pub t_fault: f64,
    /// Residual voltage factor of the faulted phases, in [0, 1).
    pub rho: f64,
}

impl Default for FaultScenario {
    fn default() -> Self {
        Self {
            fault: FaultClass::NoFault,
            t_fault: 0.2,
            rho: 0.0,
        }
    }
}

impl FaultScenario {
    pub fn new(fault: FaultClass, t_fault: f64) -> Self {
        Self {
            fault,
            t_fault,
            rho: 0.0,
        }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn validate(&self, cfg: &GeneratorConfig) -> Result<()> {
        let fail = |msg: &str| Err(Error::invariant("FaultScenario", msg));
        if !(self.t_fault.is_finite() && self.t_fault >= 0.0 && self.t_fault < cfg.duration) {
            return fail("0 <= t_fault < duration");
        }
        if !(self.rho.is_finite() && (0.0..1.0).contains(&self.rho)) {
            return fail("0 <= rho < 1");
        }
        Ok(())
    }

    /// Same scenario with phases relabeled a -> b -> c -> a.
    pub fn rotate(self) -> Self {
        Self {
            fault: self.fault.rotate(),
            ..self
        }
    }
}

// ---------------------------------------------------------------------------
// Samples
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreePhaseSample {
    pub t: f64,
    pub va: f64,
    pub vb: f64,
    pub vc: f64,
}

impl ThreePhaseSample {
    pub fn phase(&self, p: Phase) -> f64 {
        match p {
            Phase::A => self.va,
            Phase::B => self.vb,
            Phase::C => self.vc,
        }
    }

    pub fn phases(&self) -> [f64; 3] {
        [self.va, self.vb, self.vc]
    }

    fn set(&mut self, p: Phase, v: f64) {
        match p {
            Phase::A => self.va = v,
            Phase::B => self.vb = v,
            Phase::C => self.vc = v,
        }
    }
}

/// Balanced pre-fault set at time `t`.
pub fn prefault_sample(cfg: &GeneratorConfig, t: f64) -> ThreePhaseSample {
    let theta = TAU * cfg.f0 * t + cfg.onset_angle;
    let a = cfg.amplitude;
    ThreePhaseSample {
        t,
        va: a * theta.sin(),
        vb: a * (theta - PHASE_SHIFT).sin(),
        vc: a * (theta + PHASE_SHIFT).sin(),
    }
}

/// Post-onset sample with the scenario's fault template applied.
pub fn faulted_sample(cfg: &GeneratorConfig, scn: &FaultScenario, t: f64) -> Result<ThreePhaseSample> {
    if scn.fault == FaultClass::NoFault {
        return Err(Error::NoFaultTemplate);
    }
    if t < scn.t_fault {
        return Err(Error::BeforeOnset {
            t,
            t_fault: scn.t_fault,
        });
    }
    Ok(apply_template(prefault_sample(cfg, t), scn))
}

fn apply_template(mut s: ThreePhaseSample, scn: &FaultScenario) -> ThreePhaseSample {
    let rho = scn.rho;
    match scn.fault.kind() {
        FaultKind::None => {}
        FaultKind::PhaseToPhase => {
            let [p, q] = [scn.fault.phases()[0], scn.fault.phases()[1]];
            let (vp, vq) = (s.phase(p), s.phase(q));
            let mid = 0.5 * (vp + vq);
            s.set(p, mid + rho * (vp - mid));
            s.set(q, mid + rho * (vq - mid));
        }
        FaultKind::SinglePhaseGround | FaultKind::TwoPhaseGround | FaultKind::ThreePhase => {
            for &p in scn.fault.phases() {
                s.set(p, rho * s.phase(p));
            }
        }
    }
    s
}

/// Deterministic sample stream at `t = k / fs`, `k = 0 ..= floor(duration * fs)`.
#[derive(Debug, Clone)]
pub struct Samples {
    cfg: GeneratorConfig,
    scn: FaultScenario,
    next: usize,
    len: usize,
}

impl Iterator for Samples {
    type Item = ThreePhaseSample;

    fn next(&mut self) -> Option<ThreePhaseSample> {
        if self.next >= self.len {
            return None;
        }
        let t = self.next as f64 / self.cfg.fs;
        self.next += 1;
        let s = prefault_sample(&self.cfg, t);
        if self.scn.fault != FaultClass::NoFault && t >= self.scn.t_fault {
            Some(apply_template(s, &self.scn))
        } else {
            Some(s)
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.len - self.next;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Samples {}

/// Validates both configurations up front, then returns the sample stream.
pub fn generate(cfg: &GeneratorConfig, scn: &FaultScenario) -> Result<Samples> {
    cfg.validate()?;
    scn.validate(cfg)?;
    Ok(Samples {
        cfg: *cfg,
        scn: *scn,
        next: 0,
        len: cfg.sample_count(),
    })
}
