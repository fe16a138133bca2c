use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rand_distr::{Distribution, Normal};
use rotordiag::corpus;
use rotordiag::diagnosis::Fault;
use rotordiag::modal_io::modal_to_json;
use rotordiag::rotor::{
    build_jeffcott, eigen_general, eigen_symmetric, simulate_rundown, JeffcottParams, SpeedSchedule,
};
use rotordiag::signal::{to_csv_string, MultiChannelRecord, Role};
use serde::{Deserialize, Serialize};

use super::{json, report_written};
use crate::config::output_dir;
use crate::error::{usage, CliError, CliResult};
use crate::output::Outputs;
use crate::svg::{decimate, render, Panel, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultArg {
    Unbalance,
    Misalignment,
    Looseness,
    Resonance,
}

impl From<FaultArg> for Fault {
    fn from(f: FaultArg) -> Self {
        match f {
            FaultArg::Unbalance => Fault::Unbalance,
            FaultArg::Misalignment => Fault::Misalignment,
            FaultArg::Looseness => Fault::Looseness,
            FaultArg::Resonance => Fault::Resonance,
        }
    }
}

/// Simulate a Jeffcott rotor at constant speed or along a linear speed ramp.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateArgs {
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Also write response.svg.
    #[arg(long)]
    pub plot: bool,
    /// Seed for measurement noise.
    #[arg(long)]
    pub seed: Option<u64>,
    /// kg [10]
    #[arg(long)]
    pub disc_mass: Option<f64>,
    /// N/m [1e6]
    #[arg(long)]
    pub shaft_stiffness: Option<f64>,
    /// [0.02]
    #[arg(long)]
    pub damping_ratio: Option<f64>,
    /// kg·m² [0]
    #[arg(long)]
    pub polar_inertia: Option<f64>,
    /// kg·m² [0]
    #[arg(long)]
    pub diametral_inertia: Option<f64>,
    /// N·m/rad [0]
    #[arg(long)]
    pub tilt_stiffness: Option<f64>,
    /// kg·m [1e-4]
    #[arg(long)]
    pub unbalance_mass_ecc: Option<f64>,
    /// Constant speed [1200]; ignored when a ramp is given.
    #[arg(long)]
    pub speed_rpm: Option<f64>,
    #[arg(long, requires = "end_rpm")]
    pub start_rpm: Option<f64>,
    #[arg(long, requires = "start_rpm")]
    pub end_rpm: Option<f64>,
    /// s [5]
    #[arg(long)]
    pub duration: Option<f64>,
    /// Time step, s; by default half the stability bound and at least 200
    /// steps per revolution.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Adds white noise to the vibration channels at this SNR.
    #[arg(long)]
    pub noise_snr_db: Option<f64>,
    /// Keep the applied force channels.
    #[arg(long)]
    pub with_forces: bool,
    /// Write a diagnosis corpus case instead of a free simulation.
    #[arg(long, value_enum)]
    pub corpus_fault: Option<FaultArg>,
    #[arg(long)]
    pub corpus_index: Option<usize>,
}

const RPM: f64 = 2.0 * PI / 60.0;

#[derive(Serialize)]
struct Summary {
    natural_frequencies_rad_s: Vec<f64>,
    damped_frequencies_rad_s: Vec<f64>,
    revolutions: usize,
    samples: usize,
    dt_s: f64,
    peak_y_time_s: f64,
    peak_y_speed_rad_s: f64,
    peak_y_speed_rpm: f64,
}

fn params(a: &SimulateArgs) -> JeffcottParams {
    JeffcottParams {
        disc_mass: a.disc_mass.unwrap_or(10.0),
        shaft_stiffness: a.shaft_stiffness.unwrap_or(1e6),
        damping_ratio: a.damping_ratio.unwrap_or(0.02),
        polar_inertia: a.polar_inertia.unwrap_or(0.0),
        diametral_inertia: a.diametral_inertia.unwrap_or(0.0),
        tilt_stiffness: a.tilt_stiffness.unwrap_or(0.0),
        unbalance_mass_ecc: a.unbalance_mass_ecc.unwrap_or(1e-4),
    }
}

pub fn run(a: SimulateArgs) -> CliResult<()> {
    let mut out = Outputs::new(output_dir(&a.output_dir)?);
    if let Some(fault) = a.corpus_fault {
        return corpus_case(
            a.seed.unwrap_or(0),
            fault.into(),
            a.corpus_index.unwrap_or(0),
            out,
        );
    }
    let duration = a.duration.unwrap_or(5.0);
    if !(duration.is_finite() && duration > 0.0) {
        return Err(usage(format!("--duration must be > 0, got {duration}")));
    }
    let p = params(&a);
    let sys = build_jeffcott(&p)?;
    let sched = match (a.start_rpm, a.end_rpm) {
        (Some(s), Some(e)) => SpeedSchedule::linear(s * RPM, e * RPM, duration)?,
        _ => SpeedSchedule::constant(a.speed_rpm.unwrap_or(1200.0) * RPM, duration)?,
    };
    let f_max = [sched.min_speed(), sched.max_speed()]
        .iter()
        .map(|&w| Ok(eigen_general(&sys.with_spin(w)?)?.max_natural_frequency()))
        .collect::<CliResult<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max)
        / (2.0 * PI);
    let dt = a.dt.unwrap_or_else(|| {
        let rev_hz = sched.max_speed() / (2.0 * PI);
        let mut dt = 0.5 / (20.0 * f_max.max(1e-9));
        if rev_hz > 0.0 {
            dt = dt.min(1.0 / (200.0 * rev_hz));
        }
        dt
    });
    let run = simulate_rundown(&sys, &p, &sched, dt, duration)?;
    let (peak_t, peak_w) = run.peak_response("y")?;
    let modal = eigen_symmetric(&sys)?;

    let mut channels: Vec<_> = run
        .record
        .channels()
        .iter()
        .filter(|c| a.with_forces || c.role() != Role::Force)
        .cloned()
        .collect();
    if let Some(snr) = a.noise_snr_db {
        let mut rng = corpus::rng(a.seed.unwrap_or(0));
        for ch in channels.iter_mut().filter(|c| c.role() == Role::Vibration) {
            let sigma = rotordiag::signal::rms(ch.samples()) / 10f64.powf(snr / 20.0);
            let noise =
                Normal::new(0.0, sigma).map_err(|e| usage(format!("--noise-snr-db: {e}")))?;
            *ch = ch.with_samples(
                ch.samples()
                    .iter()
                    .map(|v| v + noise.sample(&mut rng))
                    .collect(),
            )?;
        }
    }
    let record = MultiChannelRecord::new(channels, 0.0)?;

    let summary = Summary {
        natural_frequencies_rad_s: modal.omega.clone(),
        damped_frequencies_rad_s: modal.damped_frequencies(),
        revolutions: run.revolutions,
        samples: record.len(),
        dt_s: dt,
        peak_y_time_s: peak_t,
        peak_y_speed_rad_s: peak_w,
        peak_y_speed_rpm: peak_w / RPM,
    };
    out.add("record.csv", to_csv_string(&record));
    out.add("modal.json", modal_to_json(&modal)?);
    out.add("summary.json", json(&summary)?);
    if a.plot {
        let y = record.require_channel("y")?;
        let t: Vec<f64> = (0..y.len()).map(|i| i as f64 * dt).collect();
        let (tx, yy) = decimate(&t, y.samples(), 4000);
        out.add(
            "response.svg",
            render(&[Panel::line(
                "y response",
                "time [s]",
                "y [m]",
                vec![Series {
                    label: "y",
                    x: &tx,
                    y: &yy,
                }],
            )]),
        );
    }
    let written = out.commit()?;
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|w| format!("{w:.4}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    say!(
        "natural frequencies [rad/s]: {}",
        fmt(&summary.natural_frequencies_rad_s)
    );
    say!("revolutions: {}", summary.revolutions);
    say!(
        "max |y| at t = {:.4} s, speed {:.4} rad/s ({:.2} rpm)",
        peak_t,
        peak_w,
        summary.peak_y_speed_rpm
    );
    report_written(&written);
    Ok(())
}

#[derive(Serialize)]
struct CaseInfo<'a> {
    id: &'a str,
    label: Fault,
    speed_ratio: f64,
    settle_time_s: f64,
}

fn corpus_case(seed: u64, fault: Fault, index: usize, mut out: Outputs) -> CliResult<()> {
    let case = corpus::fault_case(seed, fault, index)?;
    let modal = corpus::corpus_modal()?;
    out.add("record.csv", to_csv_string(&case.record));
    out.add("modal.json", modal_to_json(&modal)?);
    out.add(
        "case.json",
        json(&CaseInfo {
            id: &case.id,
            label: case.label,
            speed_ratio: case.speed_ratio,
            settle_time_s: corpus::SETTLE_TIME,
        })?,
    );
    if let Some(r) = &case.reference {
        out.add("reference.json", json(r)?);
    }
    let written = out.commit().map_err(|e| CliError::Compute(e.to_string()))?;
    say!(
        "corpus case {} (speed ratio {:.4})",
        case.id,
        case.speed_ratio
    );
    say!("analyse from t = {} s", corpus::SETTLE_TIME);
    report_written(&written);
    Ok(())
}
