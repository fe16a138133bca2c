use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rotordiag::corpus;
use rotordiag::frf::{
    direct_curve, estimate_frf_h1, general_curve, max_relative_deviation, peak_pick_modal,
    receptance_direct, receptance_general_matrix, receptance_symmetric_matrix, symmetric_curve,
    FrfCurve, ModalPeak,
};
use rotordiag::modal_io::{complex_modal_to_json, modal_to_json};
use rotordiag::rotor::{build_jeffcott, eigen_general, eigen_symmetric, JeffcottParams};
use serde::{Deserialize, Serialize};

use super::{channel, json, load_record, report_written};
use crate::config::output_dir;
use crate::error::{usage, CliResult};
use crate::output::Outputs;
use crate::svg::{render, Panel, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    /// Seeded random system (proportional damping, or gyroscopic with --gyroscopic).
    Random,
    /// Jeffcott rotor with a gyroscopic disc.
    Jeffcott,
}

/// Receptance by modal superposition checked against direct inversion, or
/// H1 estimation from a force/response record with --input.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrfArgs {
    /// Record CSV with force and response channels; switches to H1 estimation.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Also write frf.svg.
    #[arg(long)]
    pub plot: bool,
    /// Seed of the random system [0].
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub system: Option<SystemKind>,
    /// Degrees of freedom of the random system, 2..=6 [4].
    #[arg(long)]
    pub n_dof: Option<usize>,
    /// Random system with non-proportional damping and gyroscopic coupling.
    #[arg(long)]
    pub gyroscopic: bool,
    /// Jeffcott spin speed, rad/s [0].
    #[arg(long)]
    pub spin: Option<f64>,
    /// Response coordinate [0].
    #[arg(long)]
    pub j: Option<usize>,
    /// Excitation coordinate [0].
    #[arg(long)]
    pub k: Option<usize>,
    /// Upper end of the frequency grid, rad/s [2 x highest natural frequency].
    #[arg(long)]
    pub omega_max: Option<f64>,
    /// Grid points [400].
    #[arg(long)]
    pub n_freq: Option<usize>,
    /// H1: force channel [f_y].
    #[arg(long)]
    pub force_channel: Option<String>,
    /// H1: response channel [y].
    #[arg(long)]
    pub response_channel: Option<String>,
    /// H1: Welch averages [8].
    #[arg(long)]
    pub n_averages: Option<usize>,
    /// H1: segment overlap fraction [0.5].
    #[arg(long)]
    pub overlap: Option<f64>,
}

fn frf_plot(curves: &[&FrfCurve], extra: Option<(&[f64], &[f64])>) -> String {
    let mags: Vec<Vec<f64>> = curves.iter().map(|c| c.magnitudes()).collect();
    let phases: Vec<Vec<f64>> = curves
        .iter()
        .map(|c| c.values.iter().map(|v| v.arg()).collect())
        .collect();
    let labels: Vec<String> = curves.iter().map(|c| format!("{:?}", c.method)).collect();
    fn series<'a>(
        curves: &[&'a FrfCurve],
        data: &'a [Vec<f64>],
        labels: &'a [String],
    ) -> Vec<Series<'a>> {
        curves
            .iter()
            .zip(data)
            .zip(labels)
            .map(|((c, d), l)| Series {
                label: l,
                x: &c.frequencies,
                y: d,
            })
            .collect()
    }
    let j = curves[0].j;
    let k = curves[0].k;
    let mut panels = vec![
        Panel::line(
            format!("receptance a{j}{k} magnitude"),
            "omega [rad/s]",
            "|a|",
            series(curves, &mags, &labels),
        )
        .log_y(),
        Panel::line(
            format!("receptance a{j}{k} phase"),
            "omega [rad/s]",
            "phase [rad]",
            series(curves, &phases, &labels),
        ),
    ];
    if let Some((x, y)) = extra {
        panels.push(Panel::line(
            "coherence",
            "omega [rad/s]",
            "gamma^2",
            vec![Series {
                label: "coherence",
                x,
                y,
            }],
        ));
    }
    render(&panels)
}

pub fn run(a: FrfArgs) -> CliResult<()> {
    let out = Outputs::new(output_dir(&a.output_dir)?);
    if a.input.is_some() {
        return estimate(a, out);
    }
    synthesize(a, out)
}

#[derive(Serialize)]
struct Comparison {
    modal_method: String,
    n_dof: usize,
    n_frequencies: usize,
    max_relative_deviation: f64,
}

fn synthesize(a: FrfArgs, mut out: Outputs) -> CliResult<()> {
    let sys = match a.system.unwrap_or(SystemKind::Random) {
        SystemKind::Random => {
            let n = a.n_dof.unwrap_or(4);
            if !(2..=6).contains(&n) {
                return Err(usage(format!("--n-dof must be in 2..=6, got {n}")));
            }
            let mut rng = corpus::rng(a.seed.unwrap_or(0));
            if a.gyroscopic {
                corpus::random_gyroscopic_system(&mut rng, n)
            } else {
                corpus::random_symmetric_system(&mut rng, n)
            }
        }
        SystemKind::Jeffcott => {
            let p = JeffcottParams {
                disc_mass: 10.0,
                shaft_stiffness: 1e6,
                damping_ratio: 0.02,
                polar_inertia: 0.1,
                diametral_inertia: 0.05,
                tilt_stiffness: 4e4,
                unbalance_mass_ecc: 0.0,
            };
            build_jeffcott(&p)?.with_spin(a.spin.unwrap_or(0.0))?
        }
    };
    let (j, k) = (a.j.unwrap_or(0), a.k.unwrap_or(0));
    let n_freq = a.n_freq.unwrap_or(400);
    if n_freq < 2 {
        return Err(usage("--n-freq must be >= 2"));
    }
    // the general path is needed whenever the system is not symmetric
    let symmetric = !a.gyroscopic && sys.omega_spin() == 0.0 && eigen_symmetric(&sys).is_ok();
    let cm = eigen_general(&sys)?;
    let top = a.omega_max.unwrap_or(2.0 * cm.max_natural_frequency());
    if !(top.is_finite() && top > 0.0) {
        return Err(usage(format!("--omega-max must be > 0, got {top}")));
    }
    let freqs: Vec<f64> = (0..n_freq)
        .map(|i| top * i as f64 / (n_freq - 1) as f64)
        .collect();

    let mut worst = 0.0f64;
    let modal_curve = if symmetric {
        let m = eigen_symmetric(&sys)?;
        for &w in &freqs {
            worst = worst.max(max_relative_deviation(
                &receptance_symmetric_matrix(&m, w)?,
                &receptance_direct(&sys, w)?,
            ));
        }
        out.add("modal.json", modal_to_json(&m)?);
        symmetric_curve(&m, &freqs, j, k)?
    } else {
        for &w in &freqs {
            worst = worst.max(max_relative_deviation(
                &receptance_general_matrix(&cm, w)?,
                &receptance_direct(&sys, w)?,
            ));
        }
        out.add("complex_modal.json", complex_modal_to_json(&cm)?);
        general_curve(&cm, &freqs, j, k)?
    };
    let direct = direct_curve(&sys, &freqs, j, k)?;
    let peaks = peak_pick_modal(&direct);

    let cmp = Comparison {
        modal_method: format!("{:?}", modal_curve.method),
        n_dof: sys.n(),
        n_frequencies: n_freq,
        max_relative_deviation: worst,
    };
    out.add("frf_modal.csv", modal_curve.to_csv_string());
    out.add("frf_modal.json", modal_curve.sidecar_json());
    out.add("frf_direct.csv", direct.to_csv_string());
    out.add("frf_direct.json", direct.sidecar_json());
    out.add("peaks.json", json(&peaks)?);
    out.add("comparison.json", json(&cmp)?);
    if a.plot {
        out.add("frf.svg", frf_plot(&[&modal_curve, &direct], None));
    }
    let written = out.commit()?;
    say!(
        "{} DOF, {} frequencies up to {:.4} rad/s",
        sys.n(),
        n_freq,
        top
    );
    say!(
        "max relative deviation ({} vs direct): {:.3e}",
        cmp.modal_method,
        worst
    );
    print_peaks(&peaks);
    report_written(&written);
    Ok(())
}

fn estimate(a: FrfArgs, mut out: Outputs) -> CliResult<()> {
    let input = crate::config::input_path(&a.input, "input")?;
    let rec = load_record(&input)?;
    let force = channel(&rec, a.force_channel.as_deref().unwrap_or("f_y"))?;
    let resp = channel(&rec, a.response_channel.as_deref().unwrap_or("y"))?;
    let h1 = estimate_frf_h1(
        force,
        resp,
        a.n_averages.unwrap_or(8),
        a.overlap.unwrap_or(0.5),
        (a.j.unwrap_or(0), a.k.unwrap_or(0)),
    )?;
    let peaks = peak_pick_modal(&h1.curve);
    let mut coh = String::from("frequency_rad_s,coherence\n");
    for (w, c) in h1.curve.frequencies.iter().zip(&h1.coherence) {
        coh.push_str(&format!("{w},{}\n", rotordiag::signal::fmt_sig9(*c)));
    }
    out.add("frf_h1.csv", h1.curve.to_csv_string());
    out.add("frf_h1.json", h1.curve.sidecar_json());
    out.add("coherence.csv", coh);
    out.add("peaks.json", json(&peaks)?);
    if a.plot {
        out.add(
            "frf.svg",
            frf_plot(&[&h1.curve], Some((&h1.curve.frequencies, &h1.coherence))),
        );
    }
    let written = out.commit()?;
    say!(
        "H1 estimate: segment length {} samples, {} lines",
        h1.segment_len,
        h1.curve.len()
    );
    print_peaks(&peaks);
    report_written(&written);
    Ok(())
}

fn print_peaks(peaks: &[ModalPeak]) {
    for p in peaks {
        match p.zeta {
            Some(z) => say!("peak at {:.4} rad/s, zeta {:.5}", p.omega, z),
            None => say!(
                "peak at {:.4} rad/s, zeta not resolved (overlapping modes)",
                p.omega
            ),
        }
    }
}
