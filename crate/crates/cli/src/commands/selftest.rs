use std::path::PathBuf;

use clap::Args;
use rotordiag::checks::{run_all, Check, SuiteSize};
use serde::{Deserialize, Serialize};

use super::diagnose::load_rules;
use super::report_written;
use crate::error::{CliError, CliResult};
use crate::output::Outputs;

pub const DEFAULT_SEED: u64 = 20240601;

/// Run the oracle and corpus checks at reduced size.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelftestArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Rule thresholds to test [rules.json if present, else built-in defaults].
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Run at acceptance size instead of the reduced size.
    #[arg(long)]
    pub full: bool,
    /// Also write selftest.txt here.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

/// One line per check plus a closing count. Contains no timings.
pub fn summary(checks: &[Check]) -> String {
    let mut s = String::new();
    for c in checks {
        s.push_str(&format!(
            "{} {}: {}\n",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        ));
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    s.push_str(&format!(
        "selftest: {passed}/{} checks passed\n",
        checks.len()
    ));
    s
}

pub fn run(a: SelftestArgs) -> CliResult<()> {
    let cfg = load_rules(a.rules.as_deref())?;
    let dir = match &a.output_dir {
        Some(d) => Some(crate::config::output_dir(&Some(d.clone()))?),
        None => None,
    };
    let size = if a.full {
        SuiteSize::FULL
    } else {
        SuiteSize::REDUCED
    };
    let checks = run_all(a.seed.unwrap_or(DEFAULT_SEED), size, &cfg);
    let text = summary(&checks);
    {
        use std::io::Write as _;
        let _ = std::io::stdout().write_all(text.as_bytes());
    }
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.name.as_str())
        .collect();
    if !failed.is_empty() {
        return Err(CliError::Selftest(format!(
            "failing checks: {}",
            failed.join(", ")
        )));
    }
    // Written only on success: a failed run leaves no files.
    if let Some(dir) = dir {
        let mut out = Outputs::new(dir);
        out.add("selftest.txt", text);
        report_written(&out.commit()?);
    }
    Ok(())
}
