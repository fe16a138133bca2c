use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rotordiag::shock::{
    apply_decay_window, capture_shocks, shock_report, validate_limits, DecayWindow, LimitOverlay,
};
use rotordiag::signal::{fmt_sig9, to_csv_string, Role};
use serde::{Deserialize, Serialize};

use super::{channel, json, load_record, report_written};
use crate::config::{input_path, output_dir};
use crate::error::{usage, CliError, CliResult};
use crate::output::Outputs;
use crate::svg::{render, Panel, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayKind {
    Exponential,
    HalfHann,
}

/// Capture triggered transients, measure them and check limit overlays.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShockArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Also write one shock_<n>.svg per event.
    #[arg(long)]
    pub plot: bool,
    /// Defaults to the first vibration channel.
    #[arg(long)]
    pub channel: Option<String>,
    /// Absolute level that arms a capture, in channel units.
    #[arg(long)]
    pub trigger_level: Option<f64>,
    /// Pre-trigger window, s [0.01].
    #[arg(long)]
    pub pre: Option<f64>,
    /// Post-trigger window, s [0.05].
    #[arg(long)]
    pub post: Option<f64>,
    /// Minimum spacing between triggers, s [pre + post].
    #[arg(long)]
    pub holdoff: Option<f64>,
    /// Limit overlay JSON `{"breakpoints":[{t_offset_s, upper, lower}, ...]}`.
    #[arg(long)]
    pub limits: Option<PathBuf>,
    /// Shift the overlay to the best fit within ±10% of the pulse duration.
    #[arg(long)]
    pub fit: bool,
    /// Window the vibration channels before capture.
    #[arg(long, value_enum)]
    pub decay: Option<DecayKind>,
    /// Exponential time constant, s.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Half-Hann ramp length, s.
    #[arg(long)]
    pub ramp: Option<f64>,
    /// Window region start, s [record start].
    #[arg(long)]
    pub decay_start: Option<f64>,
    /// Window region end, s [record end].
    #[arg(long)]
    pub decay_end: Option<f64>,
}

pub fn run(a: ShockArgs) -> CliResult<()> {
    let input = input_path(&a.input, "input")?;
    let level = a
        .trigger_level
        .ok_or_else(|| usage("--trigger-level is required"))?;
    let overlay = match &a.limits {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
            Some(
                LimitOverlay::from_json(&text)
                    .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
            )
        }
        None => None,
    };
    let mut out = Outputs::new(output_dir(&a.output_dir)?);
    let mut rec = load_record(&input)?;

    if let Some(kind) = a.decay {
        let window = match kind {
            DecayKind::Exponential => DecayWindow::Exponential {
                tau: a
                    .tau
                    .ok_or_else(|| usage("--decay exponential needs --tau"))?,
            },
            DecayKind::HalfHann => DecayWindow::HalfHann {
                ramp: a
                    .ramp
                    .ok_or_else(|| usage("--decay half-hann needs --ramp"))?,
            },
        };
        let t0 = rec.start_time();
        let t1 = t0 + (rec.len().saturating_sub(1)) as f64 / rec.sample_rate();
        rec = apply_decay_window(
            &rec,
            window,
            a.decay_start.unwrap_or(t0),
            a.decay_end.unwrap_or(t1),
        )?;
        out.add("windowed.csv", to_csv_string(&rec));
    }

    let ch = match &a.channel {
        Some(n) => channel(&rec, n)?,
        None => rec
            .channels()
            .iter()
            .find(|c| c.role() == Role::Vibration)
            .ok_or_else(|| CliError::Input("record has no vibration channel".into()))?,
    };
    let events = capture_shocks(
        ch,
        level,
        a.pre.unwrap_or(0.01),
        a.post.unwrap_or(0.05),
        a.holdoff,
    )?;
    let mut reports = Vec::with_capacity(events.len());
    for (n, e) in events.iter().enumerate() {
        let verdict = overlay
            .as_ref()
            .map(|o| validate_limits(e, o, a.fit))
            .transpose()?;
        let dt = 1.0 / e.sample_rate;
        let times: Vec<f64> = (0..e.samples.len())
            .map(|i| e.window_start + i as f64 * dt)
            .collect();
        let mut csv = String::from("time_s,value\n");
        for (t, v) in times.iter().zip(&e.samples) {
            csv.push_str(&format!("{},{}\n", fmt_sig9(*t), fmt_sig9(*v)));
        }
        out.add(format!("shock_{n}.csv"), csv);
        if a.plot {
            let shift = verdict.as_ref().map_or(0.0, |v| v.shift_s);
            let (up, lo): (Vec<f64>, Vec<f64>) = match &overlay {
                Some(o) => times
                    .iter()
                    .map(|t| o.bounds_at(t - e.trigger_time - shift))
                    .map(|(l, u)| (u, l))
                    .unzip(),
                None => (Vec::new(), Vec::new()),
            };
            let mut series = vec![Series {
                label: "signal",
                x: &times,
                y: &e.samples,
            }];
            if overlay.is_some() {
                series.push(Series {
                    label: "upper",
                    x: &times,
                    y: &up,
                });
                series.push(Series {
                    label: "lower",
                    x: &times,
                    y: &lo,
                });
            }
            let title = format!("shock {n} on {} at {:.6} s", e.channel, e.trigger_time);
            out.add(
                format!("shock_{n}.svg"),
                render(&[Panel::line(title, "time [s]", e.unit.as_str(), series)]),
            );
        }
        reports.push(shock_report(e, verdict));
    }
    out.add("shocks.json", json(&reports)?);
    let written = out.commit()?;
    say!("{} event(s) on {}", reports.len(), ch.name());
    for (n, r) in reports.iter().enumerate() {
        let dv = r
            .delta_v
            .map_or("n/a".to_string(), |v| format!("{v:.6e} m/s"));
        let verdict = r.verdict.as_ref().map_or("", |v| {
            if v.pass {
                ", limits PASS"
            } else {
                ", limits FAIL"
            }
        });
        say!(
            "event {n}: trigger {:.6} s, peak {:.6e}, duration(10%) {:.6e} s, delta-v {dv}{verdict}",
            r.trigger_time_s, r.peak, r.duration_10pct_s
        );
    }
    report_written(&written);
    Ok(())
}
