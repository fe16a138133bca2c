use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rotordiag::diagnosis::{
    diagnose, order_spectrum, overall_levels, OverallLevels, ResonanceReference, RuleConfig,
    TrendStore,
};
use rotordiag::modal_io::modal_from_json;
use rotordiag::signal::{calibrate, fft_spectrum, ChannelRecord, Window};
use serde::{Deserialize, Serialize};

use super::{channel, json, load_record, report_written, tacho_train};
use crate::config::{input_path, output_dir};
use crate::error::{usage, CliError, CliResult};
use crate::output::Outputs;
use crate::svg::{render, Panel, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowArg {
    Rectangular,
    Hann,
}

/// Order spectrum, overall levels and rule-based fault classification.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Also write order_spectrum.svg.
    #[arg(long)]
    pub plot: bool,
    /// Vibration channel [y].
    #[arg(long)]
    pub channel: Option<String>,
    #[arg(long)]
    pub tacho_channel: Option<String>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub hysteresis: Option<f64>,
    /// Analyse from this time on, s.
    #[arg(long)]
    pub start_time: Option<f64>,
    /// Highest order of the spectrum, >= 8 [8].
    #[arg(long)]
    pub max_order: Option<f64>,
    /// Rule thresholds JSON [rules.json if present, else built-in defaults].
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Versioned modal model JSON; enables the resonance rule.
    #[arg(long)]
    pub modal: Option<PathBuf>,
    /// Order-1 reference JSON `{speed, order1_amplitude}`.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Trend store to take the reference from (with --point-id).
    #[arg(long)]
    pub trend_store: Option<PathBuf>,
    #[arg(long)]
    pub point_id: Option<String>,
    /// Accelerometer sensitivity, mV/g: converts a volt channel to g first.
    #[arg(long)]
    pub sensitivity_mv_per_g: Option<f64>,
    /// Window of the frequency spectrum written to spectrum.csv [hann].
    #[arg(long, value_enum)]
    pub window: Option<WindowArg>,
    /// Overall-level band, Hz [1].
    #[arg(long)]
    pub band_low_hz: Option<f64>,
    /// Overall-level band, Hz [min(1000, Nyquist)].
    #[arg(long)]
    pub band_high_hz: Option<f64>,
}

pub fn load_rules(path: Option<&Path>) -> CliResult<RuleConfig> {
    let res = match path {
        Some(p) => {
            if !p.is_file() {
                return Err(CliError::Input(format!(
                    "rules file {} does not exist",
                    p.display()
                )));
            }
            RuleConfig::load(p)
        }
        None => RuleConfig::load("rules.json"),
    };
    res.map_err(|e| CliError::Input(format!("rules: {e}")))
}

/// Channel from `start_time` on.
pub fn tail(ch: &ChannelRecord, start_offset: f64) -> CliResult<ChannelRecord> {
    let i0 = ((start_offset * ch.sample_rate()).ceil().max(0.0) as usize).min(ch.len());
    Ok(ch.with_samples(ch.samples()[i0..].to_vec())?)
}

pub fn levels(ch: &ChannelRecord, lo: Option<f64>, hi: Option<f64>) -> CliResult<OverallLevels> {
    let nyq = 0.5 * ch.sample_rate();
    Ok(overall_levels(
        ch,
        (lo.unwrap_or(1.0), hi.unwrap_or(nyq.min(1000.0))),
    )?)
}

#[derive(Serialize)]
struct Report<'a> {
    channel: &'a str,
    mean_speed_rad_s: f64,
    revolutions: usize,
    detected: Vec<String>,
    reference: Option<ResonanceReference>,
    #[serde(flatten)]
    report: &'a rotordiag::diagnosis::FaultReport,
}

pub fn run(a: DiagnoseArgs) -> CliResult<()> {
    let input = input_path(&a.input, "input")?;
    let cfg = load_rules(a.rules.as_deref())?;
    let modal = match &a.modal {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
            Some(
                modal_from_json(&text)
                    .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
            )
        }
        None => None,
    };
    let mut reference: Option<ResonanceReference> = match &a.reference {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
            Some(
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
            )
        }
        None => None,
    };
    if a.trend_store.is_some() != a.point_id.is_some() {
        return Err(usage("--trend-store and --point-id go together"));
    }
    let mut out = Outputs::new(output_dir(&a.output_dir)?);
    let rec = load_record(&input)?;
    let name = a.channel.as_deref().unwrap_or("y");
    let raw = channel(&rec, name)?;
    let ch = &match a.sensitivity_mv_per_g {
        Some(s) => calibrate(raw, s, false)?,
        None => raw.clone(),
    };
    let train = tacho_train(
        &rec,
        a.tacho_channel.as_deref(),
        a.threshold,
        a.hysteresis,
        a.start_time,
    )?;
    let os = order_spectrum(ch, &train, a.max_order.unwrap_or(8.0))?;
    if let (Some(dir), Some(point), None) = (&a.trend_store, &a.point_id, &reference) {
        reference = TrendStore::open(dir)?.resonance_reference(point, os.mean_speed, &cfg)?;
    }
    let analysed = tail(ch, a.start_time.unwrap_or(0.0) - rec.start_time())?;
    let lv = levels(&analysed, a.band_low_hz, a.band_high_hz)?;
    let window = match a.window.unwrap_or(WindowArg::Hann) {
        WindowArg::Rectangular => Window::Rectangular,
        WindowArg::Hann => Window::Hann,
    };
    let spectrum = fft_spectrum(&analysed, window)?;
    let overall = BTreeMap::from([
        ("v_rms_mm_s".to_string(), lv.v_rms_mm_s),
        ("a_rms_g".to_string(), lv.a_rms_g),
        ("d_rms_um".to_string(), lv.d_rms_um),
    ]);
    let report = diagnose(&os, modal.as_ref(), reference.as_ref(), overall, &cfg);
    let detected: Vec<String> = report.detected().iter().map(|f| f.to_string()).collect();

    out.add("order_spectrum.csv", os.to_csv_string());
    out.add("spectrum.csv", spectrum.to_csv_string());
    out.add(
        "diagnosis.json",
        json(&Report {
            channel: name,
            mean_speed_rad_s: os.mean_speed,
            revolutions: train.len() - 1,
            detected: detected.clone(),
            reference,
            report: &report,
        })?,
    );
    if a.plot {
        out.add(
            "order_spectrum.svg",
            render(&[Panel::line(
                format!("order spectrum of {name} at {:.2} rad/s", os.mean_speed),
                "order",
                ch.unit().as_str(),
                vec![Series {
                    label: name,
                    x: &os.orders,
                    y: &os.amplitudes,
                }],
            )
            .bars()]),
        );
    }
    let written = out.commit()?;
    say!(
        "mean speed {:.4} rad/s, 1X amplitude {:.6e}",
        os.mean_speed,
        os.amplitude(1.0)
    );
    say!(
        "overall: {:.4} mm/s rms, {:.4e} g rms, {:.4} um rms",
        lv.v_rms_mm_s,
        lv.a_rms_g,
        lv.d_rms_um
    );
    for (f, v) in &report.verdicts {
        let state = if !v.evaluable {
            "not evaluable"
        } else if v.detected {
            "DETECTED"
        } else {
            "not detected"
        };
        say!(
            "{f}: {state} (confidence {:.3}) {}",
            v.confidence,
            v.evidence
        );
    }
    say!(
        "detected: {}",
        if detected.is_empty() {
            "none".to_string()
        } else {
            detected.join(", ")
        }
    );
    report_written(&written);
    Ok(())
}
