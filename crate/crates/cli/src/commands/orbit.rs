use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rotordiag::orbit::{
    average_orbit, order_filter_orbit, slice_revolutions, speed_profile, whirl_direction,
    RotationSense, DEFAULT_SAMPLES_PER_REV,
};
use rotordiag::signal::{fmt_sig9, highpass_filter};
use serde::{Deserialize, Serialize};

use super::{channel, json, load_record, report_written, tacho_train};
use crate::config::{input_path, output_dir};
use crate::error::{usage, CliResult};
use crate::output::Outputs;
use crate::svg::{render, Panel, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rotation {
    /// Shaft turns from y towards z.
    Ccw,
    Cw,
}

/// Average TDC-anchored revolutions into a shaft orbit.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrbitArgs {
    /// Record CSV with two lateral channels and a key-phasor.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Also write orbit.svg.
    #[arg(long)]
    pub plot: bool,
    /// [y]
    #[arg(long)]
    pub y_channel: Option<String>,
    /// [z]
    #[arg(long)]
    pub z_channel: Option<String>,
    /// Defaults to the record's tacho channel.
    #[arg(long)]
    pub tacho_channel: Option<String>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub hysteresis: Option<f64>,
    /// Ignore pulses before this time, s.
    #[arg(long)]
    pub start_time: Option<f64>,
    /// Phase-domain samples per revolution [128].
    #[arg(long)]
    pub samples_per_rev: Option<usize>,
    /// Revolutions to average [all].
    #[arg(long)]
    pub n_revs: Option<usize>,
    /// Keep only this order of the averaged orbit.
    #[arg(long)]
    pub order: Option<usize>,
    /// High-pass both channels before slicing, Hz.
    #[arg(long)]
    pub highpass_hz: Option<f64>,
    #[arg(long, value_enum)]
    pub rotation: Option<Rotation>,
}

#[derive(Serialize)]
struct Report {
    whirl: String,
    rms_radius: f64,
    revolutions_available: usize,
    revolutions_dropped: usize,
    #[serde(flatten)]
    sidecar: serde_json::Value,
}

pub fn run(a: OrbitArgs) -> CliResult<()> {
    let input = input_path(&a.input, "input")?;
    let mut out = Outputs::new(output_dir(&a.output_dir)?);
    let p = a.samples_per_rev.unwrap_or(DEFAULT_SAMPLES_PER_REV);
    if a.n_revs == Some(0) {
        return Err(usage("--n-revs must be >= 1"));
    }
    let rec = load_record(&input)?;
    let mut y = channel(&rec, a.y_channel.as_deref().unwrap_or("y"))?.clone();
    let mut z = channel(&rec, a.z_channel.as_deref().unwrap_or("z"))?.clone();
    if let Some(fc) = a.highpass_hz {
        y = highpass_filter(&y, fc)?;
        z = highpass_filter(&z, fc)?;
    }
    let train = tacho_train(
        &rec,
        a.tacho_channel.as_deref(),
        a.threshold,
        a.hysteresis,
        a.start_time,
    )?;
    let mut slices = slice_revolutions(&y, &z, &train, p)?;
    if a.highpass_hz.is_some() {
        slices = slices.highpassed();
    }
    let avg = average_orbit(&slices, a.n_revs.unwrap_or(slices.len()).min(slices.len()))?;
    let orbit = match a.order {
        Some(h) => order_filter_orbit(&avg, h)?,
        None => avg,
    };
    let sense = match a.rotation.unwrap_or(Rotation::Ccw) {
        Rotation::Ccw => RotationSense::Ccw,
        Rotation::Cw => RotationSense::Cw,
    };
    let whirl = whirl_direction(&orbit, sense)?;

    let sidecar: serde_json::Value =
        serde_json::from_str(&orbit.sidecar_json()).map_err(|e| usage(e.to_string()))?;
    out.add("orbit.csv", orbit.to_csv_string());
    out.add("orbit.json", orbit.sidecar_json());
    let sp = speed_profile(&train);
    let mut speed_csv = String::from("time_s,speed_rad_s\n");
    for (t, w) in sp.times.iter().zip(&sp.speeds) {
        speed_csv.push_str(&format!("{},{}\n", fmt_sig9(*t), fmt_sig9(*w)));
    }
    out.add("speed.csv", speed_csv);
    out.add(
        "orbit_report.json",
        json(&Report {
            whirl: whirl.to_string(),
            rms_radius: orbit.rms_radius(),
            revolutions_available: slices.len(),
            revolutions_dropped: slices.dropped,
            sidecar,
        })?,
    );
    if a.plot {
        let mut ys = orbit.y.clone();
        let mut zs = orbit.z.clone();
        ys.push(orbit.y[0]);
        zs.push(orbit.z[0]);
        let tdc = ([orbit.y[0]], [orbit.z[0]]);
        out.add(
            "orbit.svg",
            render(&[Panel::line(
                format!(
                    "orbit ({}, {} revs)",
                    orbit.filter_mode, orbit.n_revs_averaged
                ),
                "y",
                "z",
                vec![
                    Series {
                        label: "orbit",
                        x: &ys,
                        y: &zs,
                    },
                    Series {
                        label: "TDC",
                        x: &tdc.0,
                        y: &tdc.1,
                    },
                ],
            )
            .equal_aspect()]),
        );
    }
    let written = out.commit()?;
    say!(
        "orbit: {} revolutions averaged, filter {}, mean speed {:.4} rad/s",
        orbit.n_revs_averaged,
        orbit.filter_mode,
        orbit.mean_speed
    );
    say!("rms radius: {:.6e}", orbit.rms_radius());
    say!("whirl: {whirl}");
    report_written(&written);
    Ok(())
}
