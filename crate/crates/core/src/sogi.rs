//! Per-phase SOGI monitoring: fundamental amplitude, harmonic residual and a
//! streaming THD estimate, plus the zero-sequence channel.
//!
//! The SOGI is the two-state system
//!
//! ```text
//! dv'/dt  = k*w0*(v - v') - w0*qv'
//! dqv'/dt = w0*v'
//! ```
//!
//! whose in-phase output `v'` is a band-pass copy of the input fundamental and
//! whose quadrature output `qv'` lags it by 90°. The fundamental amplitude is
//! `sqrt(v'^2 + qv'^2)` and the residual `e = v - v'` carries the harmonics.
//!
//! THD is then `100 * sqrt(2 * LPF[e^2]) / amp`: the low-pass of `e^2` is a
//! mean-square, and the factor 2 turns it into a squared peak so the ratio
//! compares amplitudes with amplitudes.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::waveform::ThreePhaseSample;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SogiParams {
    /// Damping gain.
    pub k: f64,
    /// Nominal angular frequency, rad/s.
    pub omega0: f64,
    /// Sampling rate, Hz.
    pub fs: f64,
}

impl SogiParams {
    pub fn new(k: f64, f0: f64, fs: f64) -> Result<Self> {
        let p = Self {
            k,
            omega0: TAU * f0,
            fs,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::invariant("SogiParams", msg));
        if !(self.k.is_finite() && self.k > 0.0) {
            return fail("k > 0");
        }
        if !(self.omega0.is_finite() && self.omega0 > 0.0) {
            return fail("omega0 > 0");
        }
        if !(self.fs.is_finite() && self.fs > self.omega0 / std::f64::consts::PI) {
            return fail("fs > omega0 / pi");
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// SOGI
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SogiState {
    pub v_prime: f64,
    pub qv_prime: f64,
}

impl SogiState {
    pub fn amplitude(&self) -> f64 {
        self.v_prime.hypot(self.qv_prime)
    }
}

/// Output of one SOGI step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SogiOutput {
    /// Fundamental amplitude estimate, pu.
    pub amp: f64,
    /// Residual `v - v'`, pu.
    pub e: f64,
    /// Set once a non-finite input has been seen; outputs are zero from then on.
    pub fault: bool,
}

/// Trapezoidal (bilinear) discretization of the SOGI.
///
/// The analog resonance is pre-warped so that the discrete filter has exactly
/// unity gain and exactly 90° quadrature at `omega0`.
#[derive(Debug, Clone)]
pub struct Sogi {
    params: SogiParams,
    // x[n+1] = p * x[n] + q * (u[n] + u[n+1])
    p: [[f64; 2]; 2],
    q: [f64; 2],
    state: SogiState,
    prev_input: f64,
    poisoned: bool,
}

impl Sogi {
    pub fn new(params: SogiParams) -> Result<Self> {
        params.validate()?;
        let h = 1.0 / params.fs;
        let w = 2.0 / h * (params.omega0 * h / 2.0).tan();
        let k = params.k;

        // A = [[-k w, -w], [w, 0]], B = [k w, 0]
        let a = [[-k * w, -w], [w, 0.0]];
        let half = h / 2.0;
        let m = [
            [1.0 - half * a[0][0], -half * a[0][1]],
            [-half * a[1][0], 1.0 - half * a[1][1]],
        ];
        let n = [
            [1.0 + half * a[0][0], half * a[0][1]],
            [half * a[1][0], 1.0 + half * a[1][1]],
        ];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let inv = [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]];
        let mut p = [[0.0; 2]; 2];
        for (i, row) in p.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = inv[i][0] * n[0][j] + inv[i][1] * n[1][j];
            }
        }
        let b = [k * w * half, 0.0];
        let q = [
            inv[0][0] * b[0] + inv[0][1] * b[1],
            inv[1][0] * b[0] + inv[1][1] * b[1],
        ];

        Ok(Self {
            params,
            p,
            q,
            state: SogiState::default(),
            prev_input: 0.0,
            poisoned: false,
        })
    }

    pub fn params(&self) -> &SogiParams {
        &self.params
    }

    pub fn state(&self) -> SogiState {
        self.state
    }

    pub fn is_poisoned(&self) -> bool {
        self.poisoned
    }

    pub fn reset(&mut self) {
        self.state = SogiState::default();
        self.prev_input = 0.0;
        self.poisoned = false;
    }

    pub fn step(&mut self, v: f64) -> SogiOutput {
        if self.poisoned || !v.is_finite() {
            self.poisoned = true;
            return SogiOutput {
                amp: 0.0,
                e: 0.0,
                fault: true,
            };
        }
        let u = self.prev_input + v;
        let SogiState { v_prime, qv_prime } = self.state;
        self.state = SogiState {
            v_prime: self.p[0][0] * v_prime + self.p[0][1] * qv_prime + self.q[0] * u,
            qv_prime: self.p[1][0] * v_prime + self.p[1][1] * qv_prime + self.q[1] * u,
        };
        self.prev_input = v;
        SogiOutput {
            amp: self.state.amplitude(),
            e: v - self.state.v_prime,
            fault: false,
        }
    }
}

// ---------------------------------------------------------------------------
// First-order low-pass
// ---------------------------------------------------------------------------

/// `y <- y + (1 - exp(-2*pi*fc/fs)) * (x - y)`, unity DC gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowPass {
    y: f64,
    fc: f64,
    gain: f64,
}

impl LowPass {
    pub fn new(fc: f64, fs: f64) -> Result<Self> {
        if !(fc.is_finite() && fc > 0.0 && fc < fs / 2.0) {
            return Err(Error::invariant("LowPassState", "0 < fc < fs / 2"));
        }
        Ok(Self {
            y: 0.0,
            fc,
            gain: 1.0 - (-TAU * fc / fs).exp(),
        })
    }

    pub fn step(&mut self, x: f64) -> f64 {
        self.y += self.gain * (x - self.y);
        self.y
    }

    pub fn value(&self) -> f64 {
        self.y
    }

    pub fn cutoff(&self) -> f64 {
        self.fc
    }

    pub fn reset(&mut self) {
        self.y = 0.0;
    }
}

// ---------------------------------------------------------------------------
// Per-phase metrics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorParams {
    /// SOGI damping gain.
    pub k: f64,
    /// Cutoff of the mean-square low-pass filters, Hz.
    pub lpf_cutoff: f64,
    /// Floor applied to the amplitude in the THD denominator, pu.
    pub amp_floor: f64,
}

impl Default for MonitorParams {
    fn default() -> Self {
        Self {
            k: 1.0,
            lpf_cutoff: 25.0,
            amp_floor: 0.05,
        }
    }
}

impl MonitorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(Error::invariant("SogiParams", "k > 0"));
        }
        if !(self.lpf_cutoff.is_finite() && self.lpf_cutoff > 0.0) {
            return Err(Error::invariant("LowPassState", "fc > 0"));
        }
        if !(self.amp_floor.is_finite() && self.amp_floor > 0.0) {
            return Err(Error::invariant("MonitorParams", "amp_floor > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseMetrics {
    /// Fundamental amplitude estimate, pu.
    pub amp: f64,
    /// THD estimate, percent.
    pub thd: f64,
    /// Instantaneous residual `v - v'`, pu.
    pub e: f64,
    /// The THD denominator was clamped to the amplitude floor.
    pub floored: bool,
    /// The SOGI saw a non-finite input.
    pub fault: bool,
}

/// Turns a SOGI output into a full [`PhaseMetrics`] by filtering `e^2`.
pub fn thd_step(lpf: &mut LowPass, out: SogiOutput, amp_floor: f64) -> PhaseMetrics {
    let mean_square = lpf.step(out.e * out.e).max(0.0);
    let floored = out.amp < amp_floor;
    let denom = out.amp.max(amp_floor);
    PhaseMetrics {
        amp: out.amp,
        thd: 100.0 * (2.0 * mean_square).sqrt() / denom,
        e: out.e,
        floored,
        fault: out.fault,
    }
}

/// SOGI plus the `e^2` low-pass for one phase.
#[derive(Debug, Clone)]
pub struct PhaseMonitor {
    sogi: Sogi,
    residual_lpf: LowPass,
    amp_floor: f64,
}

impl PhaseMonitor {
    pub fn new(params: &MonitorParams, f0: f64, fs: f64) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            sogi: Sogi::new(SogiParams::new(params.k, f0, fs)?)?,
            residual_lpf: LowPass::new(params.lpf_cutoff, fs)?,
            amp_floor: params.amp_floor,
        })
    }

    pub fn step(&mut self, v: f64) -> PhaseMetrics {
        let out = self.sogi.step(v);
        thd_step(&mut self.residual_lpf, out, self.amp_floor)
    }

    pub fn sogi(&self) -> &Sogi {
        &self.sogi
    }
}

// ---------------------------------------------------------------------------
// Zero sequence
// ---------------------------------------------------------------------------

/// `(va + vb + vc) / 3`.
pub fn zero_sequence(s: &ThreePhaseSample) -> f64 {
    (s.va + s.vb + s.vc) / 3.0
}

/// Peak-equivalent magnitude `sqrt(2 * LPF[v0^2])` of the zero-sequence voltage.
pub fn v0_magnitude(lpf: &mut LowPass, v0: f64) -> f64 {
    (2.0 * lpf.step(v0 * v0).max(0.0)).sqrt()
}

/// Everything the detector needs for one sample instant.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub phases: [PhaseMetrics; 3],
    pub v0_inst: f64,
    pub v0_mag: f64,
}

/// Three independent phase monitors and the zero-sequence channel.
#[derive(Debug, Clone)]
pub struct ThreePhaseMonitor {
    phases: [PhaseMonitor; 3],
    v0_lpf: LowPass,
}

impl ThreePhaseMonitor {
    pub fn new(params: &MonitorParams, f0: f64, fs: f64) -> Result<Self> {
        let phase = PhaseMonitor::new(params, f0, fs)?;
        Ok(Self {
            phases: [phase.clone(), phase.clone(), phase],
            v0_lpf: LowPass::new(params.lpf_cutoff, fs)?,
        })
    }

    pub fn step(&mut self, s: &ThreePhaseSample) -> Frame {
        let v = s.phases();
        let phases = [
            self.phases[0].step(v[0]),
            self.phases[1].step(v[1]),
            self.phases[2].step(v[2]),
        ];
        let v0_inst = zero_sequence(s);
        Frame {
            t: s.t,
            phases,
            v0_inst,
            v0_mag: v0_magnitude(&mut self.v0_lpf, v0_inst),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const F0: f64 = 50.0;
    const FS: f64 = 10_000.0;

    fn sogi(k: f64) -> Sogi {
        Sogi::new(SogiParams::new(k, F0, FS).unwrap()).unwrap()
    }

    #[test]
    fn zero_input_stays_at_rest() {
        let mut s = sogi(1.0);
        for _ in 0..1000 {
            let out = s.step(0.0);
            assert_eq!((out.amp, out.e), (0.0, 0.0));
        }
    }

    #[test]
    fn unity_gain_at_nominal_frequency() {
        let mut s = sogi(2f64.sqrt());
        let w = TAU * F0;
        let mut out = SogiOutput::default();
        for n in 0..1000 {
            out = s.step((w * n as f64 / FS).sin());
        }
        assert!((out.amp - 1.0).abs() < 0.01, "amp = {}", out.amp);
    }

    #[test]
    fn non_finite_input_poisons() {
        let mut s = sogi(1.0);
        s.step(0.5);
        let out = s.step(f64::NAN);
        assert!(out.fault);
        let out = s.step(0.5);
        assert!(out.fault && out.amp == 0.0 && out.e == 0.0);
        s.reset();
        assert!(!s.step(0.5).fault);
    }

    #[test]
    fn params_invariants() {
        assert!(SogiParams::new(0.0, F0, FS).is_err());
        assert!(SogiParams::new(1.0, F0, 90.0).is_err());
        assert!(LowPass::new(0.0, FS).is_err());
        assert!(LowPass::new(6000.0, FS).is_err());
    }

    #[test]
    fn lpf_decays_from_unit_state() {
        let mut lpf = LowPass::new(25.0, FS).unwrap();
        for _ in 0..100_000 {
            lpf.step(1.0);
        }
        assert!((lpf.value() - 1.0).abs() < 1e-12);
        // One time constant is 1 / (2 pi fc) s.
        let tau_samples = (FS / (TAU * 25.0)).round() as usize;
        for _ in 0..tau_samples {
            lpf.step(0.0);
        }
        assert!((lpf.value() - (-1f64).exp()).abs() < 0.01);
    }

    #[test]
    fn zero_sequence_examples() {
        let s = |va, vb, vc| ThreePhaseSample { t: 0.0, va, vb, vc };
        assert_eq!(zero_sequence(&s(1.0, -0.5, -0.5)), 0.0);
        assert_eq!(zero_sequence(&s(0.9, 0.0, 0.0)), 0.3);
        assert_eq!(zero_sequence(&s(0.0, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn floor_flag() {
        let mut lpf = LowPass::new(25.0, FS).unwrap();
        let m = thd_step(&mut lpf, SogiOutput { amp: 0.01, e: 0.1, fault: false }, 0.05);
        assert!(m.floored && m.thd.is_finite());
    }
}
