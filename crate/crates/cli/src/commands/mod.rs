pub mod diagnose;
pub mod frf;
pub mod orbit;
pub mod selftest;
pub mod shock;
pub mod simulate;
pub mod trend;

use std::path::Path;

use rotordiag::orbit::{detect_tacho, TachoTrain};
use rotordiag::signal::{ingest_csv, ChannelRecord, MultiChannelRecord};

use crate::error::{CliError, CliResult};

pub fn load_record(path: &Path) -> CliResult<MultiChannelRecord> {
    ingest_csv(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn channel<'a>(rec: &'a MultiChannelRecord, name: &str) -> CliResult<&'a ChannelRecord> {
    Ok(rec.require_channel(name)?)
}

/// Detects key-phasor pulses. The threshold defaults to the middle of the
/// channel's range and the hysteresis to a tenth of the range.
pub fn tacho_train(
    rec: &MultiChannelRecord,
    name: Option<&str>,
    threshold: Option<f64>,
    hysteresis: Option<f64>,
    start_time: Option<f64>,
) -> CliResult<TachoTrain> {
    let ch = match name {
        Some(n) => channel(rec, n)?,
        None => rec.tacho().ok_or_else(|| {
            CliError::Input("record has no tacho channel; pass --tacho-channel".into())
        })?,
    };
    let (lo, hi) = ch
        .samples()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
            (l.min(*v), h.max(*v))
        });
    let threshold = threshold.unwrap_or(0.5 * (lo + hi));
    let hysteresis = hysteresis.unwrap_or(0.1 * (hi - lo));
    let train = detect_tacho(ch, threshold, hysteresis)?;
    match start_time {
        Some(t0) => Ok(TachoTrain::from_pulse_times(
            train
                .pulse_times()
                .iter()
                .copied()
                .filter(|p| *p >= t0)
                .collect(),
            train.threshold_used(),
        )?),
        None => Ok(train),
    }
}

pub fn json<T: serde::Serialize>(v: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Compute(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Prints the written files.
pub fn report_written(paths: &[std::path::PathBuf]) {
    for p in paths {
        say!("wrote {}", p.display());
    }
}
