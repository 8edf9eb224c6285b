use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mgfault::harness::{format_report, run_scenario, run_sweep, SweepSpec};
use mgfault::{presets, FaultClass, RunConfig};

#[derive(Parser)]
#[command(name = "mgfault", version, about = "THD-based microgrid fault detection harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single scenario.
    Run {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a batch over fault classes, onset angles and residual factors.
    Sweep {
        #[command(flatten)]
        overrides: Overrides,
        /// Comma-separated fault classes (default: all ten fault classes).
        #[arg(long, value_delimiter = ',')]
        classes: Vec<String>,
        /// Onset angles in degrees: a comma list or `start:stop:step` (inclusive).
        #[arg(long, default_value = "0:350:10")]
        angles: String,
        /// Comma-separated residual factors.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        rhos: Vec<f64>,
        /// Write the per-run table as CSV.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Run a bundled reproduction preset (fig4, fig6, nofault).
    Preset {
        name: String,
        #[command(flatten)]
        overrides: Overrides,
        /// Print the preset configuration and exit.
        #[arg(long)]
        print_config: bool,
    },
}

/// Flags that map one-for-one onto configuration keys.
#[derive(Args, Default)]
struct Overrides {
    /// Configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Fault class (`fault`).
    #[arg(long)]
    fault: Option<String>,
    /// Fault onset time, s (`t_fault`).
    #[arg(long)]
    t_fault: Option<String>,
    /// Residual voltage factor (`rho`).
    #[arg(long)]
    rho: Option<String>,
    /// Sampling rate, Hz (`fs`).
    #[arg(long)]
    fs: Option<String>,
    /// Grid frequency, Hz (`f0`).
    #[arg(long)]
    f0: Option<String>,
    /// Run length, s (`duration`).
    #[arg(long)]
    duration: Option<String>,
    /// Phase-a angle at t = 0, rad (`onset_angle`).
    #[arg(long)]
    onset_angle: Option<String>,
    /// CSV trace output path (`trace`).
    #[arg(long)]
    trace: Option<String>,
    /// Report output path (`report`).
    #[arg(long)]
    report: Option<String>,
    /// Any other key, as `key=value`. May be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Overrides {
    fn apply(&self, base: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        cfg.apply(base).context("preset")?;
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            cfg.apply(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
        }
        let named = [
            ("fault", &self.fault),
            ("t_fault", &self.t_fault),
            ("rho", &self.rho),
            ("fs", &self.fs),
            ("f0", &self.f0),
            ("duration", &self.duration),
            ("onset_angle", &self.onset_angle),
            ("trace", &self.trace),
            ("report", &self.report),
        ];
        for (key, value) in named {
            if let Some(value) = value {
                cfg.set(key, value).map_err(anyhow::Error::msg)?;
            }
        }
        for kv in &self.set {
            let Some((key, value)) = kv.split_once('=') else {
                bail!("--set expects KEY=VALUE, got `{kv}`");
            };
            cfg.set(key.trim(), value).map_err(anyhow::Error::msg)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_angles(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    if let Some((start, rest)) = spec.split_once(':') {
        let (stop, step) = rest.split_once(':').unwrap_or((rest, "10"));
        let (start, stop, step): (f64, f64, f64) =
            (start.trim().parse()?, stop.trim().parse()?, step.trim().parse()?);
        if !(step > 0.0) {
            bail!("angle step must be positive");
        }
        let n = ((stop - start) / step + 1e-9).floor();
        if n < 0.0 {
            return Ok(Vec::new());
        }
        return Ok((0..=n as usize).map(|i| start + i as f64 * step).collect());
    }
    spec.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(Into::into))
        .collect()
}

fn run_single(cfg: &RunConfig) -> Result<()> {
    let report = run_scenario(cfg)?;
    if cfg.outputs.report.is_none() {
        print!("{}", format_report(&report, cfg));
    } else {
        println!("{}", mgfault::harness::summary_line(&report));
    }
    Ok(())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { overrides } => run_single(&overrides.apply("")?),
        Command::Preset {
            name,
            overrides,
            print_config,
        } => {
            let Some(text) = presets::get(&name) else {
                bail!("unknown preset `{name}` (known: {})", presets::NAMES.join(", "));
            };
            let cfg = overrides.apply(text)?;
            if print_config {
                print!("{}", cfg.to_config_text());
                return Ok(());
            }
            run_single(&cfg)
        }
        Command::Sweep {
            overrides,
            classes,
            angles,
            rhos,
            summary,
        } => {
            let base = overrides.apply("")?;
            let mut spec = SweepSpec::default_sweep(base);
            if !classes.is_empty() {
                spec.classes = classes
                    .iter()
                    .map(|c| c.parse::<FaultClass>())
                    .collect::<Result<_, _>>()?;
            }
            spec.angles_deg = parse_angles(&angles)?;
            spec.rhos = rhos;
            let result = run_sweep(&spec)?;
            if let Some(path) = &summary {
                fs::write(path, result.to_csv())
                    .with_context(|| format!("writing {}", path.display()))?;
            } else {
                print!("{}", result.to_csv());
            }
            eprint!("{}", result.summary_text());
            Ok(())
        }
    }
}
