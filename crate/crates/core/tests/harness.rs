use std::fs;
use std::path::PathBuf;
use std::process::Command;

use mgfault::harness::{run_to_string, TRACE_COLUMNS};
use mgfault::{presets, run_scenario, FaultClass, RunConfig};
use proptest::prelude::*;

fn exe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mgfault"))
}

fn report_value<'a>(report: &'a str, key: &str) -> &'a str {
    report
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(" = ")))
        .unwrap_or_else(|| panic!("report has no `{key}`"))
}

#[test]
fn report_extrema_match_trace_columns() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::parse(presets::FIG6).unwrap();
    cfg.outputs.trace = Some(dir.path().join("trace.csv"));
    cfg.outputs.report = Some(dir.path().join("report.txt"));
    let report = run_scenario(&cfg).unwrap();
    assert_eq!(report.code, FaultClass::BC);

    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let text = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    let mask = cfg.thresholds.settling_cycles / cfg.generator.f0;

    let mut lines = trace.lines();
    assert_eq!(lines.next().unwrap(), TRACE_COLUMNS.join(","));
    let mut peak = [0.0f64; 3];
    let mut min = [f64::INFINITY; 3];
    let mut rows = 0;
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols.len(), 13);
        rows += 1;
        if cols[0] < mask {
            continue;
        }
        for i in 0..3 {
            min[i] = min[i].min(cols[4 + i]);
            peak[i] = peak[i].max(cols[7 + i]);
        }
    }
    assert_eq!(rows, 4001);
    for (i, name) in ["a", "b", "c"].iter().enumerate() {
        let reported: f64 = report_value(&text, &format!("peak_thd_{name}")).parse().unwrap();
        assert_eq!(reported, peak[i]);
        let reported: f64 = report_value(&text, &format!("min_amp_{name}")).parse().unwrap();
        assert_eq!(reported, min[i]);
    }
    assert_eq!(report_value(&text, "code"), "5");
}

#[test]
fn identical_configs_give_identical_bytes() {
    let cfg = RunConfig::parse(presets::FIG4).unwrap();
    let (r1, t1) = run_to_string(&cfg).unwrap();
    let (r2, t2) = run_to_string(&cfg).unwrap();
    assert_eq!(t1, t2);
    assert_eq!(
        mgfault::harness::format_report(&r1, &cfg),
        mgfault::harness::format_report(&r2, &cfg)
    );
}

#[test]
fn presets_parse_and_classify() {
    for (name, expected) in [
        ("fig4", FaultClass::ThreePhase),
        ("fig6", FaultClass::BC),
        ("nofault", FaultClass::NoFault),
    ] {
        let cfg = RunConfig::parse(presets::get(name).unwrap()).unwrap();
        assert_eq!(cfg.scenario.fault, expected);
        assert_eq!(run_scenario(&cfg).unwrap().code, expected, "{name}");
    }
}

#[test]
fn cli_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let report = dir.path().join("r.txt");
    let status = exe()
        .args(["run", "--fault", "CAG", "--t-fault", "0.15", "--duration", "0.3"])
        .arg("--trace")
        .arg(&trace)
        .arg("--report")
        .arg(&report)
        .output()
        .unwrap();
    assert!(status.status.success());
    let text = fs::read_to_string(&report).unwrap();
    assert_eq!(report_value(&text, "code"), "9");
    assert_eq!(fs::read_to_string(&trace).unwrap().lines().count(), 3002);
}

#[test]
fn cli_config_and_set_override() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "[scenario]\nfault = AB\nt_fault = 0.2\n").unwrap();
    let out = exe()
        .args(["run", "--config"])
        .arg(&conf)
        .args(["--set", "fault=ABG"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(report_value(&stdout, "code"), "7");
}

#[test]
fn cli_rejects_bad_config_with_nonzero_exit() {
    let out = exe().args(["run", "--set", "alpha=-1"]).output().unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("Thresholds"), "{stderr}");

    let out = exe().args(["run", "--set", "alhpa=5"]).output().unwrap();
    assert!(!out.status.success());

    let out = exe().args(["preset", "fig9"]).output().unwrap();
    assert!(!out.status.success());

    let out = exe().args(["sweep", "--angles", ""]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn cli_io_failure_is_nonzero_and_names_path() {
    let out = exe()
        .args(["preset", "fig4", "--trace", "/nonexistent-dir/q/trace.csv"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("/nonexistent-dir/q/trace.csv"));
}

#[test]
fn cli_preset_and_sweep() {
    let out = exe().args(["preset", "fig4"]).output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(report_value(&stdout, "code"), "10");
    assert_ne!(report_value(&stdout, "latency"), "none");

    let out = exe().args(["preset", "fig6", "--print-config"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(RunConfig::parse(&text).unwrap().scenario.fault, FaultClass::BC);

    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("sweep.csv");
    let out = exe()
        .args(["sweep", "--classes", "BC,AG", "--angles", "0,90", "--summary"])
        .arg(&summary)
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = fs::read_to_string(&summary).unwrap();
    assert_eq!(csv.lines().count(), 5);
    let header_cols = csv.lines().next().unwrap().split(',').count();
    for row in csv.lines().skip(1) {
        assert_eq!(row.split(',').count(), header_cols);
        assert!(row.contains(",true,"), "{row}");
    }
    assert!(String::from_utf8(out.stderr).unwrap().contains("misclassified = 0"));
}

fn arb_config() -> impl Strategy<Value = RunConfig> {
    (
        (40.0f64..70.0, 20.0f64..400.0, 0.1f64..3.0, 0.05f64..2.0, -7.0f64..7.0),
        (0u8..=10, 0.0f64..1.0, 0.0f64..0.999),
        (0.1f64..50.0, 0.01f64..0.99, 0.001f64..1.0, 0.01f64..0.99),
        (1u32..100, 0.0f64..10.0, 0u32..500, 0u32..500),
        (0.05f64..5.0, 0.5f64..100.0, 0.001f64..0.5),
        (proptest::option::of("[a-z]{1,8}\\.csv"), proptest::option::of("[a-z]{1,8}\\.txt")),
    )
        .prop_map(|(g, s, t, t2, m, o)| {
            let mut cfg = RunConfig::default();
            cfg.generator.f0 = g.0;
            cfg.generator.fs = g.0 * g.1;
            cfg.generator.amplitude = g.2;
            cfg.generator.duration = g.3;
            cfg.generator.onset_angle = g.4;
            cfg.scenario.fault = FaultClass::from_code(s.0).unwrap();
            cfg.scenario.t_fault = s.1 * g.3 * 0.999;
            cfg.scenario.rho = s.2;
            cfg.thresholds.alpha = t.0;
            cfg.thresholds.delta_v = t.1;
            cfg.thresholds.eps_v0 = t.2;
            cfg.thresholds.pp_amp_ceiling = t.3;
            cfg.thresholds.debounce = t2.0;
            cfg.thresholds.settling_cycles = t2.1;
            cfg.thresholds.set_hold = t2.2;
            cfg.thresholds.confirm = t2.3;
            cfg.sogi.k = m.0;
            cfg.sogi.lpf_cutoff = m.1;
            cfg.sogi.amp_floor = m.2;
            cfg.outputs.trace = o.0.map(PathBuf::from);
            cfg.outputs.report = o.1.map(PathBuf::from);
            cfg
        })
        .prop_filter("valid", |c| c.validate().is_ok())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn config_text_round_trips(cfg in arb_config()) {
        let text = cfg.to_config_text();
        prop_assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
    }
}
