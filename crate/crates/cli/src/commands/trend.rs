use std::path::PathBuf;

use clap::Args;
use rotordiag::diagnosis::{alarm_status, order_spectrum, AlarmStatus, TrendEntry, TrendStore};
use serde::{Deserialize, Serialize};

use super::diagnose::{levels, load_rules, tail};
use super::{channel, json, load_record, report_written, tacho_train};
use crate::config::{input_path, output_dir};
use crate::error::{usage, CliResult};
use crate::output::Outputs;
use crate::svg::{render, Panel, Series};

/// Append an overall-level measurement to the trend store and evaluate
/// alarms against the point's baseline.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrendArgs {
    /// Trend store directory.
    #[arg(long)]
    pub store: Option<PathBuf>,
    #[arg(long)]
    pub point_id: Option<String>,
    /// Record to measure and append; without it the store is only evaluated.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Also write trend.svg.
    #[arg(long)]
    pub plot: bool,
    /// Measurement time, s since the Unix epoch; required with --input.
    #[arg(long)]
    pub ts: Option<f64>,
    /// Vibration channel [y].
    #[arg(long)]
    pub channel: Option<String>,
    /// Measure from this time on, s.
    #[arg(long)]
    pub start_time: Option<f64>,
    #[arg(long)]
    pub band_low_hz: Option<f64>,
    #[arg(long)]
    pub band_high_hz: Option<f64>,
    #[arg(long)]
    pub rules: Option<PathBuf>,
}

#[derive(Serialize)]
struct Status<'a> {
    point_id: &'a str,
    status: AlarmStatus,
    latest: &'a TrendEntry,
    baseline: Option<&'a TrendEntry>,
    entries: usize,
}

pub fn run(a: TrendArgs) -> CliResult<()> {
    let store_dir = a
        .store
        .clone()
        .ok_or_else(|| usage("--store is required"))?;
    let point = a
        .point_id
        .clone()
        .ok_or_else(|| usage("--point-id is required"))?;
    let cfg = load_rules(a.rules.as_deref())?;
    let mut out = Outputs::new(output_dir(&a.output_dir)?);
    let mut entry = None;
    if a.input.is_some() {
        let input = input_path(&a.input, "input")?;
        let ts = a.ts.ok_or_else(|| usage("--ts is required with --input"))?;
        let rec = load_record(&input)?;
        let ch = channel(&rec, a.channel.as_deref().unwrap_or("y"))?;
        let lv = levels(
            &tail(ch, a.start_time.unwrap_or(0.0) - rec.start_time())?,
            a.band_low_hz,
            a.band_high_hz,
        )?;
        // speed and 1X amplitude make the entry usable as a resonance reference
        let (speed, a1) = if rec.tacho().is_some() {
            let train = tacho_train(&rec, None, None, None, a.start_time)?;
            let os = order_spectrum(ch, &train, 8.0)?;
            (Some(os.mean_speed), Some(os.amplitude(1.0)))
        } else {
            (None, None)
        };
        entry = Some(TrendEntry {
            ts,
            point_id: point.clone(),
            v_rms_mm_s: lv.v_rms_mm_s,
            a_rms_g: lv.a_rms_g,
            d_rms_um: lv.d_rms_um,
            speed_rad_s: speed,
            order1_amplitude: a1,
        });
    }
    // everything that can fail on the input is done before the store is touched
    let store = TrendStore::open(&store_dir)?;
    if let Some(e) = &entry {
        store.append(e)?;
    }
    let history = store.entries_for(&point)?;
    let Some(latest) = history.last() else {
        return Err(
            rotordiag::Error::Index(format!("no trend entries for point '{point}'")).into(),
        );
    };
    let baselines = store.baselines()?;
    let baseline = baselines.get(&point);
    let status = alarm_status(latest.v_rms_mm_s, baseline.map(|b| b.v_rms_mm_s), &cfg);

    let mut csv = String::from("ts,v_rms_mm_s,a_rms_g,d_rms_um\n");
    for e in &history {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            e.ts, e.v_rms_mm_s, e.a_rms_g, e.d_rms_um
        ));
    }
    let safe: String = point
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    out.add(format!("trend_{safe}.csv"), csv);
    out.add(
        "trend_status.json",
        json(&Status {
            point_id: &point,
            status,
            latest,
            baseline,
            entries: history.len(),
        })?,
    );
    if a.plot {
        let ts: Vec<f64> = history.iter().map(|e| e.ts).collect();
        let v: Vec<f64> = history.iter().map(|e| e.v_rms_mm_s).collect();
        let base = baseline.map_or(0.0, |b| b.v_rms_mm_s);
        let alert = vec![base * cfg.trend_alert_factor; ts.len()];
        let danger =
            vec![(base * cfg.trend_danger_factor).min(cfg.trend_danger_absolute_mm_s); ts.len()];
        out.add(
            "trend.svg",
            render(&[Panel::line(
                format!("overall velocity at {point}: {status:?}"),
                "ts [s]",
                "v rms [mm/s]",
                vec![
                    Series {
                        label: "v rms",
                        x: &ts,
                        y: &v,
                    },
                    Series {
                        label: "alert",
                        x: &ts,
                        y: &alert,
                    },
                    Series {
                        label: "danger",
                        x: &ts,
                        y: &danger,
                    },
                ],
            )]),
        );
    }
    let written = out.commit()?;
    if let Some(e) = &entry {
        say!(
            "appended {} at ts {}: {:.4} mm/s rms",
            point,
            e.ts,
            e.v_rms_mm_s
        );
    }
    say!(
        "{point}: {} entries, latest {:.4} mm/s, status {:?}",
        history.len(),
        latest.v_rms_mm_s,
        status
    );
    report_written(&written);
    Ok(())
}
