//! Generator -> monitor -> detector, one sample at a time.

use crate::detector::{DetectionReport, Detector, Thresholds};
use crate::error::Result;
use crate::sogi::{Frame, MonitorParams, ThreePhaseMonitor};
use crate::waveform::{generate, FaultClass, FaultScenario, GeneratorConfig, ThreePhaseSample};

/// One fully processed sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub sample: ThreePhaseSample,
    pub frame: Frame,
    pub code: FaultClass,
    /// Inside the start-up mask.
    pub masked: bool,
}

/// Streaming front end for externally supplied samples.
#[derive(Debug, Clone)]
pub struct Pipeline {
    monitor: ThreePhaseMonitor,
    detector: Detector,
}

impl Pipeline {
    pub fn new(f0: f64, fs: f64, params: &MonitorParams, th: Thresholds) -> Result<Self> {
        Ok(Self {
            monitor: ThreePhaseMonitor::new(params, f0, fs)?,
            detector: Detector::new(th, f0)?,
        })
    }

    pub fn push(&mut self, sample: &ThreePhaseSample) -> Result<Step> {
        let frame = self.monitor.step(sample);
        let code = self.detector.update(&frame)?;
        Ok(Step {
            sample: *sample,
            frame,
            code,
            masked: self.detector.is_masked(sample.t),
        })
    }

    pub fn detector(&self) -> &Detector {
        &self.detector
    }

    pub fn finalize(&self, scn: &FaultScenario) -> DetectionReport {
        self.detector.finalize(scn)
    }
}

/// Runs a synthetic scenario end to end, handing every step to `sink`.
pub fn simulate<F>(
    gen: &GeneratorConfig,
    scn: &FaultScenario,
    params: &MonitorParams,
    th: &Thresholds,
    mut sink: F,
) -> Result<DetectionReport>
where
    F: FnMut(&Step) -> Result<()>,
{
    let samples = generate(gen, scn)?;
    let mut pipeline = Pipeline::new(gen.f0, gen.fs, params, *th)?;
    for s in samples {
        let step = pipeline.push(&s)?;
        sink(&step)?;
    }
    Ok(pipeline.finalize(scn))
}

/// [`simulate`] without a sink.
pub fn detect(
    gen: &GeneratorConfig,
    scn: &FaultScenario,
    params: &MonitorParams,
    th: &Thresholds,
) -> Result<DetectionReport> {
    simulate(gen, scn, params, th, |_| Ok(()))
}
