#![allow(dead_code)]

use std::f64::consts::TAU;

use rustfft::{num_complex::Complex, FftPlanner};

pub const F0: f64 = 50.0;
pub const FS: f64 = 10_000.0;

/// Fundamental plus harmonics `(order, amplitude, phase)`.
pub fn harmonic_signal(t: f64, harmonics: &[(u32, f64, f64)]) -> f64 {
    let w = TAU * F0 * t;
    w.sin()
        + harmonics
            .iter()
            .map(|&(h, a, ph)| a * (h as f64 * w + ph).sin())
            .sum::<f64>()
}

/// THD in percent of `samples`, which must span a whole number of
/// fundamental cycles, from the rectangular-window DFT: the root-sum-square
/// of every harmonic bin above the fundamental over the fundamental bin.
pub fn fft_thd(samples: &[f64], cycles: usize) -> f64 {
    let n = samples.len();
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let amp = |bin: usize| 2.0 * buf[bin].norm() / n as f64;
    let fundamental = amp(cycles);
    let harmonics: f64 = (2..)
        .map(|h| h * cycles)
        .take_while(|&bin| bin < n / 2)
        .map(|bin| amp(bin).powi(2))
        .sum();
    100.0 * harmonics.sqrt() / fundamental
}

/// Eq. 1 evaluated directly from the harmonic amplitudes.
pub fn closed_form_thd(harmonics: &[(u32, f64, f64)]) -> f64 {
    100.0 * harmonics.iter().map(|h| h.1 * h.1).sum::<f64>().sqrt()
}

/// Runs a phase monitor over `seconds` of `signal` and returns the THD
/// averaged over the last `cycles` whole cycles, together with the input
/// samples of that window.
pub fn settled_thd(
    params: &mgfault::MonitorParams,
    fs: f64,
    seconds: f64,
    cycles: usize,
    signal: impl Fn(f64) -> f64,
) -> (f64, Vec<f64>) {
    let mut monitor = mgfault::PhaseMonitor::new(params, F0, fs).unwrap();
    let n = (seconds * fs).round() as usize;
    let window = (cycles as f64 * fs / F0).round() as usize;
    let mut acc = 0.0;
    let mut samples = Vec::with_capacity(window);
    for i in 0..n {
        let v = signal(i as f64 / fs);
        let m = monitor.step(v);
        if i >= n - window {
            acc += m.thd;
            samples.push(v);
        }
    }
    (acc / window as f64, samples)
}
