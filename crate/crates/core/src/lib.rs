//! Streaming THD-based fault detection for three-phase microgrid voltages.
//!
//! The crate is a pipeline of three stages, each usable on its own:
//!
//! * [`waveform`] synthesizes per-unit three-phase voltages and injects any of
//!   the ten fault classes as an ideal template.
//! * [`sogi`] estimates, per phase, the fundamental amplitude and a streaming
//!   THD from a SOGI quadrature filter, and the zero-sequence magnitude.
//! * [`detector`] turns those metrics into a latched digital output code 0-10.
//!
//! [`pipeline`] wires them together and [`harness`] adds CSV traces, reports
//! and parameter sweeps.
//!
//! ```
//! use mgfault::{detect, FaultClass, FaultScenario, GeneratorConfig, MonitorParams, Thresholds};
//!
//! let gen = GeneratorConfig::default();
//! let scn = FaultScenario::new(FaultClass::BC, 0.2);
//! let report = detect(&gen, &scn, &MonitorParams::default(), &Thresholds::default()).unwrap();
//! assert_eq!(report.code, FaultClass::BC);
//! assert!(report.latency.unwrap() < 0.010);
//! ```

pub mod config;
pub mod detector;
pub mod error;
pub mod harness;
pub mod pipeline;
pub mod sogi;
pub mod waveform;

pub use config::RunConfig;
pub use detector::{classify, DetectionReport, Detector, PhaseSet, Thresholds};
pub use error::{Error, Result};
pub use harness::{run_scenario, run_sweep, SweepSpec, SweepSummary};
pub use pipeline::{detect, simulate, Pipeline, Step};
pub use sogi::{
    zero_sequence, Frame, LowPass, MonitorParams, PhaseMetrics, PhaseMonitor, Sogi, SogiParams,
    ThreePhaseMonitor,
};
pub use waveform::{
    faulted_sample, generate, prefault_sample, FaultClass, FaultKind, FaultScenario,
    GeneratorConfig, Phase, ThreePhaseSample,
};

/// Configuration text of the bundled reproduction presets.
pub mod presets {
    /// Three-phase fault at 0.2 s.
    pub const FIG4: &str = include_str!("../presets/fig4.conf");
    /// b-c phase-to-phase fault at 0.2 s.
    pub const FIG6: &str = include_str!("../presets/fig6.conf");
    /// One second without a fault.
    pub const NOFAULT: &str = include_str!("../presets/nofault.conf");

    pub const NAMES: [&str; 3] = ["fig4", "fig6", "nofault"];

    pub fn get(name: &str) -> Option<&'static str> {
        match name {
            "fig4" => Some(FIG4),
            "fig6" => Some(FIG6),
            "nofault" => Some(NOFAULT),
            _ => None,
        }
    }
}
