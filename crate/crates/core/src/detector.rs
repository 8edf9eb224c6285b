//! Detection and decision stages.
//!
//! Each phase carries two debounce counters, one for `THD > alpha` and one
//! for `amp < delta_v`. A counter that reaches `debounce` flags its phase;
//! any sample failing the test resets it. The first THD flag latches
//! `t_detect`. Identification additionally needs:
//!
//! * a non-empty set of amplitude-flagged phases, unchanged for `debounce`
//!   samples, every member of which is also THD-flagged;
//! * no THD-flagged phase still missing its amplitude flag, unless the set
//!   has already been stable for `set_hold` samples (healthy phases may show
//!   THD without ever sagging);
//! * the resulting candidate code unchanged for `confirm` samples. THD flags
//!   of all faulted phases appear within about a millisecond of onset while
//!   their sags can lag each other by several; the window also lets a slowly
//!   rising zero-sequence magnitude turn a phase-to-phase reading into a
//!   grounded one.
//!
//! The resulting code latches and holds for the rest of the run.

use std::fmt;

use crate::error::{Error, Result};
use crate::sogi::Frame;
use crate::waveform::{FaultClass, FaultScenario, Phase};

// ---------------------------------------------------------------------------
// Phase sets
// ---------------------------------------------------------------------------

/// A subset of {a, b, c}.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct PhaseSet(u8);

impl PhaseSet {
    pub const EMPTY: PhaseSet = PhaseSet(0);
    pub const ALL: PhaseSet = PhaseSet(0b111);

    pub fn insert(&mut self, p: Phase) {
        self.0 |= 1 << p.index();
    }

    pub fn contains(self, p: Phase) -> bool {
        self.0 & (1 << p.index()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: PhaseSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Phase> {
        Phase::ALL.into_iter().filter(move |p| self.contains(*p))
    }
}

impl FromIterator<Phase> for PhaseSet {
    fn from_iter<I: IntoIterator<Item = Phase>>(iter: I) -> Self {
        let mut set = PhaseSet::EMPTY;
        for p in iter {
            set.insert(p);
        }
        set
    }
}

impl fmt::Display for PhaseSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, p) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str("}")
    }
}

// ---------------------------------------------------------------------------
// Thresholds
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// THD detection threshold, percent.
    pub alpha: f64,
    /// Amplitude threshold, pu (1 - 7.5 %).
    pub delta_v: f64,
    /// Zero-sequence magnitude above which a two-phase fault is grounded, pu.
    pub eps_v0: f64,
    /// Expected ceiling of the faulted-phase amplitude in a phase-to-phase
    /// fault, pu. Reported, never used to classify.
    pub pp_amp_ceiling: f64,
    /// Consecutive qualifying samples before a flag latches.
    pub debounce: u32,
    /// Length of the start-up mask, fundamental cycles.
    pub settling_cycles: f64,
    /// Samples a two-phase set must wait for missing amplitude flags of
    /// THD-flagged phases before it is classified on its own.
    pub set_hold: u32,
    /// Samples a candidate code must persist before it latches.
    pub confirm: u32,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            alpha: 5.0,
            delta_v: 0.925,
            eps_v0: 0.05,
            pp_amp_ceiling: 0.75,
            debounce: 5,
            settling_cycles: 4.0,
            set_hold: 60,
            confirm: 25,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::invariant("Thresholds", msg));
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return fail("alpha > 0");
        }
        if !(self.delta_v > 0.0 && self.delta_v < 1.0) {
            return fail("0 < delta_v < 1");
        }
        if !(self.eps_v0.is_finite() && self.eps_v0 > 0.0) {
            return fail("eps_v0 > 0");
        }
        if !(self.pp_amp_ceiling > 0.0 && self.pp_amp_ceiling < 1.0) {
            return fail("0 < pp_amp_ceiling < 1");
        }
        if self.debounce < 1 {
            return fail("debounce >= 1");
        }
        if !(self.settling_cycles.is_finite() && self.settling_cycles >= 0.0) {
            return fail("settling_cycles >= 0");
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Decision
// ---------------------------------------------------------------------------

/// Maps the set of sagging phases and the zero-sequence magnitude to a code.
pub fn classify(flagged: PhaseSet, v0_mag: f64, th: &Thresholds) -> Result<FaultClass> {
    use Phase::*;
    let has = |p| flagged.contains(p);
    let class = match flagged.len() {
        0 => return Err(Error::EmptyPhaseSet),
        3 => FaultClass::ThreePhase,
        1 if has(A) => FaultClass::AG,
        1 if has(B) => FaultClass::BG,
        1 => FaultClass::CG,
        _ => {
            let grounded = v0_mag > th.eps_v0;
            match (has(A), has(B), grounded) {
                (true, true, false) => FaultClass::AB,
                (true, true, true) => FaultClass::ABG,
                (false, true, false) => FaultClass::BC,
                (false, true, true) => FaultClass::BCG,
                (true, false, false) => FaultClass::CA,
                (true, false, true) => FaultClass::CAG,
                (false, false, _) => unreachable!("two-phase set without a or b"),
            }
        }
    };
    Ok(class)
}

/// Per-run aggregate, suitable for writing out as a report.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub code: FaultClass,
    pub expected: FaultClass,
    /// First latched THD flag, s.
    pub t_detect: Option<f64>,
    /// Classification instant, s.
    pub t_identify: Option<f64>,
    /// `t_identify - t_fault`, s.
    pub latency: Option<f64>,
    /// `t_detect - t_fault`, s.
    pub detect_latency: Option<f64>,
    /// Per-phase THD flag instants, s.
    pub t_detect_phase: [Option<f64>; 3],
    /// Extrema over the post-settling window.
    pub peak_thd: [f64; 3],
    pub min_amp: [f64; 3],
    pub peak_v0_mag: f64,
    /// Values at the last sample of the run.
    pub final_amp: [f64; 3],
    pub final_v0_mag: f64,
    /// A THD flag fired without the amplitude condition ever completing.
    pub thd_only_alarm: bool,
    /// Some sample hit the THD denominator floor.
    pub amp_floor_hit: bool,
    /// A SOGI saw non-finite input.
    pub input_fault: bool,
}

impl DetectionReport {
    pub fn is_correct(&self) -> bool {
        self.code == self.expected
    }

    /// For phase-to-phase codes: every faulted phase settled at or below the
    /// ceiling and every healthy phase above `delta_v`.
    pub fn phase_to_phase_signature(&self, th: &Thresholds) -> Option<bool> {
        use crate::waveform::FaultKind;
        if self.code.kind() != FaultKind::PhaseToPhase {
            return None;
        }
        let faulted: PhaseSet = self.code.phases().iter().copied().collect();
        Some(Phase::ALL.iter().all(|&p| {
            let amp = self.final_amp[p.index()];
            if faulted.contains(p) {
                amp <= th.pp_amp_ceiling
            } else {
                amp >= th.delta_v
            }
        }))
    }
}

// ---------------------------------------------------------------------------
// State machine
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Detector {
    th: Thresholds,
    mask_deadline: f64,
    prev_t: Option<f64>,

    thd_count: [u32; 3],
    amp_count: [u32; 3],
    amp_set: PhaseSet,
    set_age: u32,
    candidate: FaultClass,
    candidate_age: u32,

    t_detect_phase: [Option<f64>; 3],
    t_detect: Option<f64>,
    t_identify: Option<f64>,
    code: FaultClass,

    peak_thd: [f64; 3],
    min_amp: [f64; 3],
    peak_v0_mag: f64,
    last: Frame,
    floor_hit: bool,
    input_fault: bool,
}

impl Detector {
    pub fn new(th: Thresholds, f0: f64) -> Result<Self> {
        th.validate()?;
        Ok(Self {
            th,
            mask_deadline: th.settling_cycles / f0,
            prev_t: None,
            thd_count: [0; 3],
            amp_count: [0; 3],
            amp_set: PhaseSet::EMPTY,
            set_age: 0,
            candidate: FaultClass::NoFault,
            candidate_age: 0,
            t_detect_phase: [None; 3],
            t_detect: None,
            t_identify: None,
            code: FaultClass::NoFault,
            peak_thd: [0.0; 3],
            min_amp: [f64::INFINITY; 3],
            peak_v0_mag: 0.0,
            last: Frame::default(),
            floor_hit: false,
            input_fault: false,
        })
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.th
    }

    pub fn code(&self) -> FaultClass {
        self.code
    }

    pub fn mask_deadline(&self) -> f64 {
        self.mask_deadline
    }

    pub fn is_masked(&self, t: f64) -> bool {
        t < self.mask_deadline
    }

    pub fn t_detect(&self) -> Option<f64> {
        self.t_detect
    }

    pub fn t_identify(&self) -> Option<f64> {
        self.t_identify
    }

    pub fn thd_flags(&self) -> PhaseSet {
        self.flagged(&self.thd_count)
    }

    pub fn amp_flags(&self) -> PhaseSet {
        self.flagged(&self.amp_count)
    }

    fn flagged(&self, counts: &[u32; 3]) -> PhaseSet {
        Phase::ALL
            .into_iter()
            .filter(|p| counts[p.index()] >= self.th.debounce)
            .collect()
    }

    /// Feeds one sample's metrics and returns the current output code.
    pub fn update(&mut self, frame: &Frame) -> Result<FaultClass> {
        let t = frame.t;
        if let Some(prev) = self.prev_t {
            if !(t > prev) {
                return Err(Error::OutOfOrder { t, prev });
            }
        }
        self.prev_t = Some(t);
        self.last = *frame;
        if frame.phases.iter().any(|m| m.fault) {
            self.input_fault = true;
        }
        if self.is_masked(t) {
            return Ok(self.code);
        }

        for p in Phase::ALL {
            let i = p.index();
            let m = &frame.phases[i];
            self.peak_thd[i] = self.peak_thd[i].max(m.thd);
            self.min_amp[i] = self.min_amp[i].min(m.amp);
            self.floor_hit |= m.floored;
            bump(&mut self.thd_count[i], m.thd > self.th.alpha, self.th.debounce);
            bump(&mut self.amp_count[i], m.amp < self.th.delta_v, self.th.debounce);
            if self.thd_count[i] >= self.th.debounce && self.t_detect_phase[i].is_none() {
                self.t_detect_phase[i] = Some(t);
            }
        }
        self.peak_v0_mag = self.peak_v0_mag.max(frame.v0_mag);

        let thd_set = self.thd_flags();
        if !thd_set.is_empty() && self.t_detect.is_none() {
            self.t_detect = Some(t);
        }

        if self.t_identify.is_none() {
            self.decide(t, thd_set, frame.v0_mag);
        }
        Ok(self.code)
    }

    fn decide(&mut self, t: f64, thd_set: PhaseSet, v0_mag: f64) {
        let amp_set = self.amp_flags();
        if amp_set == self.amp_set {
            self.set_age = self.set_age.saturating_add(1);
        } else {
            self.amp_set = amp_set;
            self.set_age = 1;
        }

        let ready = !amp_set.is_empty()
            && amp_set.is_subset(thd_set)
            && self.set_age >= self.th.debounce
            && (thd_set.is_subset(amp_set) || self.set_age >= self.th.set_hold);
        let candidate = if ready {
            classify(amp_set, v0_mag, &self.th).unwrap_or(FaultClass::NoFault)
        } else {
            FaultClass::NoFault
        };
        if candidate != self.candidate {
            self.candidate = candidate;
            self.candidate_age = 0;
        }
        if candidate == FaultClass::NoFault {
            return;
        }
        self.candidate_age += 1;
        if self.candidate_age >= self.th.confirm {
            self.code = candidate;
            self.t_identify = Some(t);
        }
    }

    pub fn finalize(&self, scn: &FaultScenario) -> DetectionReport {
        let identified = self.code != FaultClass::NoFault;
        let since_onset = |t: Option<f64>| {
            if scn.fault == FaultClass::NoFault {
                None
            } else {
                t.map(|t| t - scn.t_fault)
            }
        };
        let t_detect = if identified { self.t_detect } else { None };
        let t_identify = if identified { self.t_identify } else { None };
        DetectionReport {
            code: self.code,
            expected: scn.fault,
            t_detect,
            t_identify,
            latency: since_onset(t_identify),
            detect_latency: since_onset(t_detect),
            t_detect_phase: if identified { self.t_detect_phase } else { [None; 3] },
            peak_thd: self.peak_thd,
            min_amp: self.min_amp.map(|a| if a.is_finite() { a } else { 0.0 }),
            peak_v0_mag: self.peak_v0_mag,
            final_amp: self.last.phases.map(|m| m.amp),
            final_v0_mag: self.last.v0_mag,
            thd_only_alarm: !identified && self.t_detect.is_some(),
            amp_floor_hit: self.floor_hit,
            input_fault: self.input_fault,
        }
    }
}

fn bump(count: &mut u32, qualifies: bool, cap: u32) {
    *count = if qualifies { (*count + 1).min(cap) } else { 0 };
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sogi::PhaseMetrics;

    fn set(phases: &[Phase]) -> PhaseSet {
        phases.iter().copied().collect()
    }

    fn frame(t: f64, thd: [f64; 3], amp: [f64; 3], v0_mag: f64) -> Frame {
        let mut f = Frame {
            t,
            v0_mag,
            ..Default::default()
        };
        for i in 0..3 {
            f.phases[i] = PhaseMetrics {
                amp: amp[i],
                thd: thd[i],
                ..Default::default()
            };
        }
        f
    }

    fn unmasked() -> Thresholds {
        Thresholds {
            settling_cycles: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn classify_table() {
        use Phase::*;
        let th = Thresholds::default();
        assert_eq!(classify(set(&[B, C]), 0.0, &th).unwrap(), FaultClass::BC);
        assert_eq!(classify(set(&[B, C]), 0.33, &th).unwrap(), FaultClass::BCG);
        assert_eq!(classify(set(&[A]), 0.0, &th).unwrap(), FaultClass::AG);
        assert_eq!(classify(set(&[B]), 0.3, &th).unwrap(), FaultClass::BG);
        assert_eq!(classify(set(&[C]), 0.3, &th).unwrap(), FaultClass::CG);
        assert_eq!(classify(set(&[A, B]), 0.0, &th).unwrap(), FaultClass::AB);
        assert_eq!(classify(set(&[C, A]), 0.2, &th).unwrap(), FaultClass::CAG);
        for v0 in [0.0, 0.33, 1.0] {
            assert_eq!(classify(PhaseSet::ALL, v0, &th).unwrap(), FaultClass::ThreePhase);
        }
        assert!(matches!(classify(PhaseSet::EMPTY, 0.0, &th), Err(Error::EmptyPhaseSet)));
    }

    #[test]
    fn quiet_run_stays_at_zero() {
        let mut d = Detector::new(unmasked(), 50.0).unwrap();
        for n in 0..1000 {
            let code = d.update(&frame(n as f64 * 1e-4, [4.9; 3], [1.0; 3], 0.0)).unwrap();
            assert_eq!(code, FaultClass::NoFault);
        }
        let r = d.finalize(&FaultScenario::default());
        assert_eq!(r.code, FaultClass::NoFault);
        assert!(r.t_detect.is_none() && r.t_identify.is_none() && r.latency.is_none());
        assert!(!r.thd_only_alarm);
    }

    #[test]
    fn single_sample_excursion_is_debounced() {
        let mut d = Detector::new(unmasked(), 50.0).unwrap();
        for n in 0..100 {
            let thd = if n == 50 { 6.0 } else { 1.0 };
            d.update(&frame(n as f64 * 1e-4, [thd, 1.0, 1.0], [1.0; 3], 0.0)).unwrap();
        }
        assert!(d.t_detect().is_none());
    }

    #[test]
    fn out_of_order_rejected() {
        let mut d = Detector::new(unmasked(), 50.0).unwrap();
        d.update(&frame(0.01, [0.0; 3], [1.0; 3], 0.0)).unwrap();
        assert!(matches!(
            d.update(&frame(0.01, [0.0; 3], [1.0; 3], 0.0)),
            Err(Error::OutOfOrder { .. })
        ));
    }

    #[test]
    fn mask_suppresses_triggers() {
        let mut d = Detector::new(Thresholds::default(), 50.0).unwrap();
        assert!((d.mask_deadline() - 0.08).abs() < 1e-12);
        for n in 0..700 {
            d.update(&frame(n as f64 * 1e-4, [100.0; 3], [0.0; 3], 1.0)).unwrap();
        }
        assert!(d.t_detect().is_none());
        assert_eq!(d.code(), FaultClass::NoFault);
    }

    #[test]
    fn thd_only_alarm_holds_zero() {
        let mut d = Detector::new(unmasked(), 50.0).unwrap();
        for n in 0..200 {
            d.update(&frame(n as f64 * 1e-4, [8.0, 1.0, 1.0], [1.0; 3], 0.0)).unwrap();
        }
        let r = d.finalize(&FaultScenario::new(FaultClass::AG, 0.0));
        assert_eq!(r.code, FaultClass::NoFault);
        assert!(r.thd_only_alarm && r.t_detect.is_none());
    }

    #[test]
    fn identification_waits_for_both_conditions() {
        let mut d = Detector::new(unmasked(), 50.0).unwrap();
        let dt = 1e-4;
        let mut n = 0;
        let mut step = |d: &mut Detector, thd: [f64; 3], amp: [f64; 3]| {
            let code = d.update(&frame(n as f64 * dt, thd, amp, 0.3)).unwrap();
            n += 1;
            code
        };
        // THD first, amplitude healthy: detected, not identified.
        for _ in 0..20 {
            assert_eq!(step(&mut d, [20.0, 1.0, 1.0], [0.95, 1.0, 1.0]), FaultClass::NoFault);
        }
        assert!(d.t_detect().is_some());
        let th = *d.thresholds();
        let needed = 2 * th.debounce + th.confirm - 2;
        for _ in 1..needed {
            assert_eq!(step(&mut d, [20.0, 1.0, 1.0], [0.5, 1.0, 1.0]), FaultClass::NoFault);
        }
        assert_eq!(step(&mut d, [20.0, 1.0, 1.0], [0.5, 1.0, 1.0]), FaultClass::AG);
        assert!(d.t_detect().unwrap() <= d.t_identify().unwrap());
        // Latched.
        for _ in 0..50 {
            assert_eq!(step(&mut d, [0.0; 3], [1.0; 3]), FaultClass::AG);
        }
    }

    #[test]
    fn lagging_phase_is_waited_for() {
        // b sags immediately, c only after 2 ms, both show THD at once.
        let mut d = Detector::new(unmasked(), 50.0).unwrap();
        for n in 0..200 {
            let c_amp = if n >= 20 { 0.2 } else { 0.99 };
            d.update(&frame(n as f64 * 1e-4, [1.0, 30.0, 30.0], [1.0, 0.2, c_amp], 0.3))
                .unwrap();
        }
        assert_eq!(d.code(), FaultClass::BCG);
    }

    #[test]
    fn phase_to_phase_needs_quiet_zero_sequence() {
        let th = unmasked();
        let mut d = Detector::new(th, 50.0).unwrap();
        // V0 rises after 1.5 ms: must end up grounded.
        for n in 0..200 {
            let v0 = if n >= 15 { 0.3 } else { 0.0 };
            d.update(&frame(n as f64 * 1e-4, [1.0, 30.0, 30.0], [1.0, 0.2, 0.2], v0))
                .unwrap();
        }
        assert_eq!(d.code(), FaultClass::BCG);

        let mut d = Detector::new(th, 50.0).unwrap();
        for n in 0..200 {
            d.update(&frame(n as f64 * 1e-4, [1.0, 30.0, 30.0], [1.0, 0.5, 0.5], 0.0))
                .unwrap();
        }
        assert_eq!(d.code(), FaultClass::BC);
        let t_id = d.t_identify().unwrap();
        // Amplitude debounce, set stability, then the quiet window.
        let expected = (2 * th.debounce + th.confirm - 3) as f64 * 1e-4;
        assert!((t_id - expected).abs() < 1e-9, "t_identify = {t_id}");
    }

    #[test]
    fn phase_set_ops() {
        use Phase::*;
        let s = set(&[C, A]);
        assert_eq!(s.len(), 2);
        assert!(s.is_subset(PhaseSet::ALL));
        assert!(!PhaseSet::ALL.is_subset(s));
        assert_eq!(s.to_string(), "{a,c}");
    }

    #[test]
    fn thresholds_invariants() {
        let bad = [
            Thresholds { alpha: -1.0, ..Default::default() },
            Thresholds { delta_v: 1.0, ..Default::default() },
            Thresholds { eps_v0: 0.0, ..Default::default() },
            Thresholds { debounce: 0, ..Default::default() },
        ];
        for th in bad {
            assert!(th.validate().is_err());
        }
    }
}
