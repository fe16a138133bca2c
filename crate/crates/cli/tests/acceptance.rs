//! Acceptance suite: one PASS/FAIL line per criterion, then a single assert
//! so every line is printed even when an early criterion fails.

use std::io::Write as _;
use std::process::Command;
use std::time::{Duration, Instant};

use rotordiag::checks::{self, Check, SuiteSize};
use rotordiag::diagnosis::RuleConfig;

const SEED: u64 = 20240601;

fn line(n: usize, c: &Check) -> String {
    format!(
        "criterion {n} {} {}: {}",
        if c.pass { "PASS" } else { "FAIL" },
        c.name,
        c.detail
    )
}

fn or_fail(name: &str, r: rotordiag::Result<Check>) -> Check {
    r.unwrap_or_else(|e| Check {
        name: name.into(),
        pass: false,
        detail: format!("error: {e}"),
    })
}

fn timed(name: &str, limit: Duration, f: impl FnOnce() -> rotordiag::Result<Check>) -> Check {
    let t = Instant::now();
    let mut c = or_fail(name, f());
    let el = t.elapsed();
    c.detail.push_str(&format!(
        "; {:.2} s (limit {} s)",
        el.as_secs_f64(),
        limit.as_secs()
    ));
    c.pass &= el < limit;
    c
}

fn selftest_twice() -> Check {
    let bin = env!("CARGO_BIN_EXE_rotordiag");
    let limit = Duration::from_secs(60);
    let mut outs = Vec::new();
    let mut slowest = Duration::ZERO;
    for _ in 0..2 {
        let t = Instant::now();
        let o = Command::new(bin)
            .args(["selftest", "--full"])
            .output()
            .expect("spawn rotordiag");
        slowest = slowest.max(t.elapsed());
        outs.push(o);
    }
    let ok = outs.iter().all(|o| o.status.success());
    let same = outs[0].stdout == outs[1].stdout;
    Check {
        name: "selftest_determinism".into(),
        pass: ok && same && slowest < limit,
        detail: format!(
            "exit codes {:?}, summaries {}, slowest run {:.2} s (limit 60 s)",
            outs.iter().map(|o| o.status.code()).collect::<Vec<_>>(),
            if same { "byte-identical" } else { "differ" },
            slowest.as_secs_f64()
        ),
    }
}

#[test]
fn acceptance() {
    let full = SuiteSize::FULL;
    let cfg = RuleConfig::default();
    let results = [
        timed("frf_oracle_equivalence", Duration::from_secs(30), || {
            checks::frf_oracle(SEED, full.oracle_systems, full.oracle_freqs)
        }),
        or_fail(
            "reduction_law",
            checks::reduction_law(SEED ^ 1, full.oracle_systems, full.oracle_freqs),
        ),
        or_fail("gyroscopic_splitting", checks::gyroscopic_splitting(10)),
        or_fail("integrator_fidelity", checks::integrator_fidelity()),
        or_fail("orbit_pipeline", checks::orbit_pipeline(SEED ^ 2)),
        or_fail("rundown_resonance", checks::rundown_resonance()),
        or_fail("shock_module", checks::shock_module()),
        or_fail(
            "diagnosis_corpus",
            checks::diagnosis_corpus(SEED, full.corpus_per_fault, full.scalings, &cfg),
        ),
        selftest_twice(),
    ];
    // Written to the stderr handle directly so the lines survive output capture.
    let mut err = std::io::stderr().lock();
    for (i, c) in results.iter().enumerate() {
        let _ = writeln!(err, "{}", line(i + 1, c));
    }
    let failed: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.pass)
        .map(|(i, _)| i + 1)
        .collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
