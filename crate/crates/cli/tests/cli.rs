//! End-to-end runs of the `rotordiag` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rotordiag"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn rotordiag")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_json(p: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn simulate_constant_speed_counts_revolutions() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        d.path(),
        &[
            "simulate",
            "--disc-mass",
            "10",
            "--shaft-stiffness",
            "1e6",
            "--speed-rpm",
            "1200",
            "--duration",
            "5",
            "--output-dir",
            "sim",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = read_json(d.path().join("sim/summary.json"));
    let revs = s["revolutions"].as_u64().unwrap();
    assert!((99..=101).contains(&revs), "{revs}");
    let csv = fs::read_to_string(d.path().join("sim/record.csv")).unwrap();
    let tacho_col = csv.lines().find(|l| l.starts_with("# channels")).unwrap();
    assert!(tacho_col.contains("tacho"));
    assert!(!tacho_col.contains("force"));
}

#[test]
fn rundown_reports_speed_at_peak_response() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        d.path(),
        &[
            "simulate",
            "--start-rpm",
            "0",
            "--end-rpm",
            "3000",
            "--duration",
            "10",
            "--output-dir",
            "run",
        ],
    );
    assert_eq!(code(&o), 0);
    let s = read_json(d.path().join("run/summary.json"));
    let w = s["peak_y_speed_rad_s"].as_f64().unwrap();
    // 3000 rpm stops just short of the 316 rad/s critical speed, so the
    // largest response sits at the top of the ramp.
    assert!(w > 290.0 && w <= 314.2, "{w}");
    assert!(s["peak_y_speed_rpm"].as_f64().is_some());
}

#[test]
fn zero_duration_is_rejected_without_outputs() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        d.path(),
        &["simulate", "--duration", "0", "--output-dir", "out"],
    );
    assert_eq!(code(&o), 2);
    assert!(!d.path().join("out").exists());
}

#[test]
fn orbit_order_one_whirls_forward() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&run(
            d.path(),
            &["simulate", "--duration", "2", "--output-dir", "sim"]
        )),
        0
    );
    let o = run(
        d.path(),
        &[
            "orbit",
            "--input",
            "sim/record.csv",
            "--order",
            "1",
            "--start-time",
            "1",
            "--output-dir",
            "orb",
            "--plot",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(d.path().join("orb/orbit_report.json"));
    assert_eq!(r["whirl"], "forward");
    assert!(d.path().join("orb/orbit.svg").exists());
}

#[test]
fn diagnose_detects_unbalance_on_corpus_case() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        d.path(),
        &[
            "simulate",
            "--corpus-fault",
            "unbalance",
            "--corpus-index",
            "0",
            "--output-dir",
            "case",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(
        d.path(),
        &[
            "diagnose",
            "--input",
            "case/record.csv",
            "--modal",
            "case/modal.json",
            "--output-dir",
            "dx",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(d.path().join("dx/diagnosis.json"));
    assert_eq!(r["detected"], serde_json::json!(["unbalance"]));
    assert!(stdout(&o).contains("detected: unbalance"));
}

#[test]
fn frf_synthesis_reports_small_deviation() {
    let d = tempfile::tempdir().unwrap();
    for extra in [&[][..], &["--gyroscopic", "--spin", "300"][..]] {
        let mut args = vec!["frf", "--n-dof", "4", "--seed", "3", "--output-dir", "f"];
        args.extend_from_slice(extra);
        let o = run(d.path(), &args);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let line = stdout(&o)
            .lines()
            .find(|l| l.starts_with("max relative deviation"))
            .unwrap()
            .to_string();
        let dev: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
        assert!(dev < 1e-8, "{line}");
    }
}

#[test]
fn frf_h1_estimate_finds_the_resonance() {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let d = tempfile::tempdir().unwrap();
    let (fs_hz, wn, zeta) = (2000.0, 2.0 * std::f64::consts::PI * 50.0, 0.02);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let mut csv =
        String::from("# sample_rate_hz=2000\n# channels=F:dimensionless:force,y:m:vibration\n");
    let (mut x, mut v) = (0.0f64, 0.0f64);
    let h = 1.0 / fs_hz / 10.0;
    for _ in 0..40_000 {
        let f: f64 = StandardNormal.sample(&mut rng);
        csv.push_str(&format!("{f},{x}\n"));
        for _ in 0..10 {
            v += (f - 2.0 * zeta * wn * v - wn * wn * x) * h;
            x += v * h;
        }
    }
    fs::write(d.path().join("h1.csv"), csv).unwrap();
    let o = run(
        d.path(),
        &[
            "frf",
            "--input",
            "h1.csv",
            "--force-channel",
            "F",
            "--response-channel",
            "y",
            "--n-averages",
            "16",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let peaks = read_json(d.path().join("peaks.json"));
    let w = peaks[0]["omega"].as_f64().unwrap();
    assert!((w - wn).abs() / wn < 0.01, "{w}");
}

#[test]
fn shock_events_pass_generous_limits() {
    let d = tempfile::tempdir().unwrap();
    let mut csv = String::from("# sample_rate_hz=10000\n# channels=acc:m_per_s2:vibration\n");
    for i in 0..3000 {
        let t = i as f64 / 1e4;
        let u = t - 0.05;
        let v = if (0.0..=0.011).contains(&u) {
            50.0 * (std::f64::consts::PI * u / 0.011).sin()
        } else {
            0.0
        };
        csv.push_str(&format!("{v}\n"));
    }
    fs::write(d.path().join("shock.csv"), csv).unwrap();
    let limits = serde_json::json!({"breakpoints": [
        {"t_offset_s": -0.01, "upper": 60, "lower": -10},
        {"t_offset_s": 0.05, "upper": 60, "lower": -10}
    ]});
    fs::write(d.path().join("limits.json"), limits.to_string()).unwrap();
    let o = run(
        d.path(),
        &[
            "shock",
            "--input",
            "shock.csv",
            "--trigger-level",
            "5",
            "--limits",
            "limits.json",
            "--output-dir",
            "s",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let ev = read_json(d.path().join("s/shocks.json"));
    assert_eq!(ev.as_array().unwrap().len(), 1);
    assert!((ev[0]["peak"].as_f64().unwrap() - 50.0).abs() < 0.5);
    let dv = 2.0 * 50.0 * 0.011 / std::f64::consts::PI;
    assert!((ev[0]["delta_v"].as_f64().unwrap() - dv).abs() / dv < 0.01);
    assert_eq!(ev[0]["verdict"]["pass"], true);
}

#[test]
fn trend_appends_and_rejects_out_of_order() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&run(
            d.path(),
            &["simulate", "--duration", "2", "--output-dir", "a"]
        )),
        0
    );
    let ok = |ts: &str, out: &str| {
        run(
            d.path(),
            &[
                "trend",
                "--store",
                "store",
                "--point-id",
                "P1",
                "--input",
                "a/record.csv",
                "--ts",
                ts,
                "--output-dir",
                out,
            ],
        )
    };
    assert_eq!(code(&ok("100", "t1")), 0);
    assert_eq!(code(&ok("200", "t2")), 0);
    let st = read_json(d.path().join("t2/trend_status.json"));
    assert_eq!(st["entries"], 2);
    assert_eq!(st["status"], "ok");
    let bad = ok("150", "t3");
    assert_eq!(code(&bad), 4);
    assert!(!d.path().join("t3").exists());
}

#[test]
fn config_file_is_merged_and_validated() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("bad.json"), r#"{"duration": 1, "bogus": 2}"#).unwrap();
    let o = run(
        d.path(),
        &["simulate", "--config", "bad.json", "--output-dir", "x"],
    );
    assert_eq!(code(&o), 2);
    assert!(!d.path().join("x").exists());

    fs::write(
        d.path().join("cfg.json"),
        r#"{"duration": 1, "speed_rpm": 600}"#,
    )
    .unwrap();
    let o = run(
        d.path(),
        &[
            "simulate",
            "--config",
            "cfg.json",
            "--speed-rpm",
            "1200",
            "--output-dir",
            "y",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = read_json(d.path().join("y/summary.json"));
    // 1 s from the file, 1200 rpm from the flag.
    assert_eq!(s["revolutions"], 20);

    fs::write(d.path().join("wrong.json"), r#"{"command": "orbit"}"#).unwrap();
    assert_eq!(
        code(&run(d.path(), &["simulate", "--config", "wrong.json"])),
        2
    );
}

#[test]
fn input_errors_exit_three_and_leave_nothing() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&run(
            d.path(),
            &["orbit", "--input", "missing.csv", "--output-dir", "o"]
        )),
        3
    );
    fs::write(
        d.path().join("broken.csv"),
        "# sample_rate_hz=100\n# channels=y:m:vibration\n1\nx\n",
    )
    .unwrap();
    assert_eq!(
        code(&run(
            d.path(),
            &["orbit", "--input", "broken.csv", "--output-dir", "o"]
        )),
        3
    );
    assert!(!d.path().join("o").exists());
    assert_eq!(code(&run(d.path(), &["no-such-command"])), 2);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let d = tempfile::tempdir().unwrap();
    for out in ["r1", "r2"] {
        let o = run(
            d.path(),
            &[
                "simulate",
                "--duration",
                "1",
                "--noise-snr-db",
                "30",
                "--seed",
                "9",
                "--plot",
                "--output-dir",
                out,
            ],
        );
        assert_eq!(code(&o), 0);
    }
    for f in ["record.csv", "summary.json", "response.svg", "modal.json"] {
        let a = fs::read(d.path().join("r1").join(f)).unwrap();
        let b = fs::read(d.path().join("r2").join(f)).unwrap();
        assert!(a == b, "{f} differs between runs");
    }
}

#[test]
fn selftest_fails_with_zeroed_misalignment_threshold() {
    let d = tempfile::tempdir().unwrap();
    fs::write(
        d.path().join("rules.json"),
        r#"{"misalignment_2x_ratio_min": 0}"#,
    )
    .unwrap();
    let o = run(d.path(), &["selftest", "--rules", "rules.json"]);
    assert_eq!(code(&o), 5);
    assert!(stdout(&o).contains("FAIL diagnosis_corpus"));
}

#[test]
fn diagnose_calibrates_volts_and_writes_spectrum() {
    let d = tempfile::tempdir().unwrap();
    // 20 Hz tacho, 0.0965 V (1 g at 96.5 mV/g) at 1X.
    let fs = 2000.0;
    let mut csv =
        String::from("# sample_rate_hz=2000\n# channels=acc:volt:vibration,key:volt:tacho\n");
    for i in 0..8000 {
        let t = i as f64 / fs;
        let a = 0.0965 * (2.0 * std::f64::consts::PI * 20.0 * t).sin();
        let key = if (t * 20.0).fract() < 0.05 { 5.0 } else { 0.0 };
        csv.push_str(&format!("{a},{key}\n"));
    }
    fs::write(d.path().join("acc.csv"), csv).unwrap();
    let base = ["diagnose", "--input", "acc.csv", "--channel", "acc"];
    // Uncalibrated volts cannot be turned into overall levels.
    let o = run(d.path(), &[&base[..], &["--output-dir", "v"]].concat());
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(
        d.path(),
        &[
            &base[..],
            &[
                "--sensitivity-mv-per-g",
                "96.5",
                "--window",
                "hann",
                "--output-dir",
                "g",
            ],
        ]
        .concat(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(d.path().join("g/diagnosis.json"));
    let a_rms = r["overall_levels"]["a_rms_g"].as_f64().unwrap();
    assert!(
        (a_rms - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.02,
        "{a_rms}"
    );
    let spec = fs::read_to_string(d.path().join("g/spectrum.csv")).unwrap();
    assert!(spec.starts_with("frequency_hz,magnitude,phase_rad\n"));
    let peak = spec
        .lines()
        .skip(1)
        .map(|l| {
            l.split(',')
                .map(|v| v.parse::<f64>().unwrap())
                .collect::<Vec<_>>()
        })
        .max_by(|a, b| a[1].total_cmp(&b[1]))
        .unwrap();
    assert!(
        (peak[0] - 20.0).abs() < 0.5 && (peak[1] - 1.0).abs() < 0.05,
        "{peak:?}"
    );
}

#[test]
fn orbit_writes_speed_profile() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&run(
            d.path(),
            &["simulate", "--duration", "1", "--output-dir", "sim"]
        )),
        0
    );
    let o = run(
        d.path(),
        &["orbit", "--input", "sim/record.csv", "--output-dir", "orb"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let sp = fs::read_to_string(d.path().join("orb/speed.csv")).unwrap();
    let speeds: Vec<f64> = sp
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(speeds.len() >= 18);
    assert!(
        speeds
            .iter()
            .all(|w| (w - 40.0 * std::f64::consts::PI).abs() < 0.5),
        "{speeds:?}"
    );
}

#[test]
fn selftest_picks_up_rules_json_in_working_directory() {
    let d = tempfile::tempdir().unwrap();
    fs::write(
        d.path().join("rules.json"),
        r#"{"misalignment_2x_ratio_min": 0}"#,
    )
    .unwrap();
    let o = run(d.path(), &["selftest", "--output-dir", "st"]);
    assert_eq!(code(&o), 5);
    let text = fs::read_to_string(d.path().join("st/selftest.txt"));
    // A failing selftest still reports, but leaves no summary file behind.
    assert!(text.is_err());
}
