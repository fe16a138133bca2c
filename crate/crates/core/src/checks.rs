//! End-to-end verification checks shared by the self-test command and the
//! acceptance suite. Each check is deterministic for a given seed and size,
//! and its detail string carries no timing so summaries can be compared
//! byte for byte.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::corpus::{self, rng};
use crate::diagnosis::{Fault, RuleConfig};
use crate::error::Result;
use crate::frf::{
    max_relative_deviation, receptance_direct, receptance_general_matrix,
    receptance_symmetric_matrix,
};
use crate::orbit::{
    average_orbit, detect_tacho, order_amplitudes, order_filter, slice_revolutions, TachoTrain,
};
use crate::rotor::{
    build_jeffcott, eigen_general, eigen_symmetric, simulate_response, simulate_rundown,
    JeffcottParams, SpeedSchedule, SystemMatrices, WhirlSense,
};
use crate::shock::{apply_decay_window, capture_shocks, pulse_parameters, DecayWindow};
use crate::signal::{rms, ChannelRecord, MultiChannelRecord, Role, Unit};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            pass,
            detail,
        }
    }
}

fn random_freqs(rng: &mut impl Rng, top: f64, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.0..top)).collect()
}

/// Modal superposition (real and complex modes) against direct inversion.
pub fn frf_oracle(seed: u64, n_systems: usize, n_freqs: usize) -> Result<Check> {
    let mut r = rng(seed);
    let mut worst_sym = 0.0f64;
    let mut worst_gen = 0.0f64;
    for _ in 0..n_systems {
        let n = r.random_range(2..=6);
        let sys = corpus::random_symmetric_system(&mut r, n);
        let m = eigen_symmetric(&sys)?;
        let top = 2.0 * m.omega.iter().cloned().fold(0.0, f64::max);
        for w in random_freqs(&mut r, top, n_freqs) {
            worst_sym = worst_sym.max(max_relative_deviation(
                &receptance_symmetric_matrix(&m, w)?,
                &receptance_direct(&sys, w)?,
            ));
        }
        let n = r.random_range(2..=6);
        let sys = corpus::random_gyroscopic_system(&mut r, n);
        let cm = eigen_general(&sys)?;
        let top = 2.0 * cm.max_natural_frequency();
        for w in random_freqs(&mut r, top, n_freqs) {
            worst_gen = worst_gen.max(max_relative_deviation(
                &receptance_general_matrix(&cm, w)?,
                &receptance_direct(&sys, w)?,
            ));
        }
    }
    Ok(Check::new(
        "frf_oracle_equivalence",
        worst_sym < 1e-8 && worst_gen < 1e-8,
        format!(
            "{n_systems}+{n_systems} systems x {n_freqs} freqs: max rel dev symmetric {worst_sym:.3e}, gyroscopic {worst_gen:.3e} (limit 1e-8)"
        ),
    ))
}

fn sorted_eigs(mut v: Vec<Complex64>) -> Vec<Complex64> {
    v.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    v
}

/// At zero spin the general path reproduces the symmetric path.
pub fn reduction_law(seed: u64, n_systems: usize, n_freqs: usize) -> Result<Check> {
    let mut r = rng(seed);
    let mut worst_eig = 0.0f64;
    let mut worst_rec = 0.0f64;
    for _ in 0..n_systems {
        let n = r.random_range(2..=6);
        let sys = corpus::random_symmetric_system(&mut r, n);
        let m = eigen_symmetric(&sys)?;
        let cm = eigen_general(&sys)?;
        let sym = sorted_eigs(
            m.omega
                .iter()
                .zip(&m.zeta)
                .flat_map(|(w, z)| {
                    let wd = w * (1.0 - z * z).sqrt();
                    [Complex64::new(-z * w, wd), Complex64::new(-z * w, -wd)]
                })
                .collect(),
        );
        let gen = sorted_eigs(cm.modes.iter().map(|md| md.eigenvalue).collect());
        for (a, b) in sym.iter().zip(&gen) {
            worst_eig = worst_eig.max((a - b).norm() / b.norm());
        }
        let top = 2.0 * m.omega.iter().cloned().fold(0.0, f64::max);
        for w in random_freqs(&mut r, top, n_freqs) {
            worst_rec = worst_rec.max(max_relative_deviation(
                &receptance_general_matrix(&cm, w)?,
                &receptance_symmetric_matrix(&m, w)?,
            ));
        }
    }
    Ok(Check::new(
        "reduction_law",
        worst_eig < 1e-8 && worst_rec < 1e-8,
        format!("{n_systems} systems at zero spin: eigenvalue rel dev {worst_eig:.3e}, receptance rel dev {worst_rec:.3e} (limit 1e-8)"),
    ))
}

pub fn gyro_rotor() -> JeffcottParams {
    JeffcottParams {
        disc_mass: 10.0,
        shaft_stiffness: 1e6,
        damping_ratio: 0.02,
        polar_inertia: 0.1,
        diametral_inertia: 0.05,
        tilt_stiffness: 4e4,
        unbalance_mass_ecc: 1e-4,
    }
}

/// Forward and backward tilt frequencies at `spin`.
pub fn tilt_frequencies(sys: &SystemMatrices, spin: f64) -> Result<(Option<f64>, Option<f64>)> {
    let cm = eigen_general(&sys.with_spin(spin)?)?;
    let (mut fw, mut bw) = (None, None);
    for m in cm.oscillatory() {
        if m.shape[2].norm() + m.shape[3].norm() > 0.5 {
            match m.whirl {
                WhirlSense::Forward => fw = Some(m.damped_frequency()),
                WhirlSense::Backward => bw = Some(m.damped_frequency()),
                WhirlSense::Planar => {}
            }
        }
    }
    Ok((fw, bw))
}

/// Tilt whirl frequencies split monotonically with spin.
pub fn gyroscopic_splitting(n_speeds: usize) -> Result<Check> {
    let sys = build_jeffcott(&gyro_rotor())?;
    let speeds: Vec<f64> = (1..=n_speeds).map(|i| 100.0 * i as f64).collect();
    let mut fw = Vec::new();
    let mut bw = Vec::new();
    for &s in &speeds {
        let (f, b) = tilt_frequencies(&sys, s)?;
        fw.push(f.unwrap_or(f64::NAN));
        bw.push(b.unwrap_or(f64::NAN));
    }
    let pass = fw.windows(2).all(|w| w[1] > w[0]) && bw.windows(2).all(|w| w[1] < w[0]);
    Ok(Check::new(
        "gyroscopic_splitting",
        pass,
        format!(
            "{n_speeds} spins {}..{} rad/s: forward {:.3}->{:.3}, backward {:.3}->{:.3} rad/s",
            speeds[0],
            speeds[n_speeds - 1],
            fw[0],
            fw[n_speeds - 1],
            bw[0],
            bw[n_speeds - 1]
        ),
    ))
}

/// Steady amplitude of a resonantly forced SDOF, fitted over whole periods
/// at the end of the run.
fn sdof_resonant_amplitude(dt: f64) -> Result<f64> {
    let (m, k, zeta) = (1.0, (2.0 * PI * 10.0f64).powi(2), 0.02);
    let wn = (k / m).sqrt();
    let c = 2.0 * zeta * (k * m).sqrt();
    let one = |v: f64| DMatrix::from_element(1, 1, v);
    let sys = SystemMatrices::new(one(m), one(c), one(k), one(0.0))?;
    let duration = 16.0;
    let rec = simulate_response(&sys, |t, f| f[0] = (wn * t).cos(), dt, duration)?;
    let x = rec.channels()[0].samples();
    let per = (2.0 * PI / wn / dt).round() as usize;
    let n = 10 * per;
    let tail = &x[x.len() - n..];
    let t0 = (x.len() - n) as f64 * dt;
    let (mut a, mut b) = (0.0, 0.0);
    for (i, v) in tail.iter().enumerate() {
        let ph = wn * (t0 + i as f64 * dt);
        a += v * ph.cos();
        b += v * ph.sin();
    }
    Ok(2.0 / n as f64 * a.hypot(b))
}

/// Resonant SDOF amplitude against |F|/(2ζk) and second-order convergence.
pub fn integrator_fidelity() -> Result<Check> {
    let k = (2.0 * PI * 10.0f64).powi(2);
    let exact = 1.0 / (2.0 * 0.02 * k);
    let period = 0.1;
    let e1 = (sdof_resonant_amplitude(period / 40.0)? - exact).abs() / exact;
    let e2 = (sdof_resonant_amplitude(period / 80.0)? - exact).abs() / exact;
    let ratio = e1 / e2;
    Ok(Check::new(
        "integrator_fidelity",
        e1 < 0.01 && e2 < 0.01 && ratio >= 3.5,
        format!("resonant SDOF amplitude error {e1:.3e} at T/40, {e2:.3e} at T/80, ratio {ratio:.2} (need < 1e-2 and >= 3.5)"),
    ))
}

const ORBIT_FS: f64 = 12_800.0;
const ORBIT_SPEED: f64 = 2.0 * PI * 10.0;

/// Key-phasor channel of a constant-speed rotor with 1280 samples per
/// revolution, so phase-domain samples land on record samples.
fn orbit_key(revs: usize) -> Result<(ChannelRecord, TachoTrain)> {
    let p = JeffcottParams {
        unbalance_mass_ecc: 0.0,
        ..corpus::corpus_rotor()
    };
    let duration = (revs as f64 + 1.5) / 10.0;
    let run = simulate_rundown(
        &build_jeffcott(&p)?,
        &p,
        &SpeedSchedule::constant(ORBIT_SPEED, duration)?,
        1.0 / ORBIT_FS,
        duration,
    )?;
    let key = run
        .record
        .tacho()
        .cloned()
        .expect("simulated record has a key channel");
    let train = detect_tacho(&key, 2.5, 1.0)?;
    Ok((key, train))
}

fn synth(name: &str, len: usize, f: impl Fn(f64) -> f64) -> Result<ChannelRecord> {
    ChannelRecord::new(
        name,
        (0..len).map(|i| f(i as f64 / ORBIT_FS)).collect(),
        ORBIT_FS,
        Unit::M,
        Role::Vibration,
    )
}

/// TDC anchoring, noise suppression by averaging and order extraction.
pub fn orbit_pipeline(seed: u64) -> Result<Check> {
    let (key, train) = orbit_key(66)?;
    let len = key.len();
    let phase = |t: f64| ORBIT_SPEED * t;

    let radius = 1e-4;
    let y = synth("y", len, |t| radius * phase(t).cos())?;
    let z = synth("z", len, |t| radius * phase(t).sin())?;
    let slices = slice_revolutions(&y, &z, &train, 128)?;
    let circ = average_orbit(&slices, slices.len())?;
    let tdc_err = (circ.y[0] - radius).abs() / radius;

    let sigma = 0.2 * radius;
    let noise = Normal::new(0.0, sigma).expect("positive sigma");
    let mut r = rng(seed);
    let yn = y.with_samples(
        y.samples()
            .iter()
            .map(|v| v + noise.sample(&mut r))
            .collect(),
    )?;
    let zn = z.with_samples(
        z.samples()
            .iter()
            .map(|v| v + noise.sample(&mut r))
            .collect(),
    )?;
    let noisy = slice_revolutions(&yn, &zn, &train, 128)?;
    let mut suppression = Vec::new();
    for n in [4usize, 16, 64] {
        let o = average_orbit(&noisy, n)?;
        let resid: Vec<f64> =
            o.y.iter()
                .zip(&circ.y)
                .chain(o.z.iter().zip(&circ.z))
                .map(|(a, b)| a - b)
                .collect();
        suppression.push((n, sigma / rms(&resid)));
    }
    let avg_ok = suppression
        .iter()
        .all(|(n, s)| *s >= (*n as f64).sqrt() / 1.2);

    let y2 = synth("y", len, |t| {
        3.0 * phase(t).cos() + (2.0 * phase(t) + 0.4).cos()
    })?;
    let z2 = synth("z", len, |t| {
        3.0 * phase(t).sin() + (2.0 * phase(t) + 0.4).sin()
    })?;
    let s2 = slice_revolutions(&y2, &z2, &train, 128)?;
    let a1 = order_amplitudes(&order_filter(&s2, 1)?, 1)?;
    let a2 = order_amplitudes(&order_filter(&s2, 2)?, 2)?;
    let harm_err = [a1.0 - 3.0, a1.1 - 3.0, a2.0 - 1.0, a2.1 - 1.0]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));

    let supp = suppression
        .iter()
        .map(|(n, s)| format!("N={n}: {s:.2} (min {:.2})", (*n as f64).sqrt() / 1.2))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Check::new(
        "orbit_pipeline",
        tdc_err <= 1e-3 && avg_ok && harm_err <= 1e-6,
        format!("TDC y[0] error {tdc_err:.3e} (limit 1e-3); noise suppression {supp}; 3:1 harmonic amplitude error {harm_err:.3e} (limit 1e-6)"),
    ))
}

/// Speed at the largest rundown response against the damped natural
/// frequency.
pub fn rundown_resonance() -> Result<Check> {
    let p = JeffcottParams {
        damping_ratio: 0.02,
        unbalance_mass_ecc: 1e-3,
        ..corpus::corpus_rotor()
    };
    let sys = build_jeffcott(&p)?;
    let wn = (p.shaft_stiffness / p.disc_mass).sqrt();
    let wd = wn * (1.0 - p.damping_ratio.powi(2)).sqrt();
    // slow enough that the sweep lag stays well inside the tolerance
    let duration = 20.0;
    let run = simulate_rundown(
        &sys,
        &p,
        &SpeedSchedule::linear(1.25 * wn, 0.75 * wn, duration)?,
        2e-4,
        duration,
    )?;
    let (_, speed) = run.peak_response("y")?;
    let err = (speed - wd).abs() / wd;
    Ok(Check::new(
        "rundown_resonance",
        err <= 0.02,
        format!("envelope peak at {speed:.2} rad/s vs damped natural frequency {wd:.2} rad/s: {:.3}% (limit 2%)", 100.0 * err),
    ))
}

/// Half-sine pulse parameters and exponential decay windowing.
pub fn shock_module() -> Result<Check> {
    let (fs, a, d, t0) = (10_000.0, 50.0, 0.011, 0.05);
    let x: Vec<f64> = (0..2000)
        .map(|i| {
            let t = i as f64 / fs - t0;
            if (0.0..=d).contains(&t) {
                a * (PI * t / d).sin()
            } else {
                0.0
            }
        })
        .collect();
    let ch = ChannelRecord::new("acc", x, fs, Unit::MPerS2, Role::Vibration)?;
    let events = capture_shocks(&ch, 5.0, 0.01, 0.03, None)?;
    let (peak_err, dur_err, dv_err) = match events.first() {
        Some(e) => {
            let p = pulse_parameters(e);
            let dur = d * (1.0 - 2.0 * 0.1f64.asin() / PI);
            let dv = 2.0 * a * d / PI;
            (
                (p.peak - a).abs() / a,
                ((p.duration_10pct_s - dur).abs() - 1.0 / fs).max(0.0) / dur,
                p.delta_v.map_or(f64::INFINITY, |v| (v - dv).abs() / dv),
            )
        }
        None => (f64::INFINITY, f64::INFINITY, f64::INFINITY),
    };

    // startup transient: decaying 40 Hz ring from t = 0
    let n = 4000;
    let fs2 = 2000.0;
    let ring: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / fs2;
            5.0 * (-t / 0.3).exp() * (2.0 * PI * 40.0 * t).sin() + 0.2 * (2.0 * PI * 7.0 * t).sin()
        })
        .collect();
    let rec = MultiChannelRecord::new(
        vec![ChannelRecord::new(
            "y",
            ring.clone(),
            fs2,
            Unit::M,
            Role::Vibration,
        )?],
        0.0,
    )?;
    let (tau, start, end) = (0.1, 0.05, 1.2);
    let out = apply_decay_window(&rec, DecayWindow::Exponential { tau }, start, end)?;
    let scale = ring.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut win_err = 0.0f64;
    for (i, (w, x)) in out.channels()[0].samples().iter().zip(&ring).enumerate() {
        let t = i as f64 / fs2;
        let expect = if (start..=end).contains(&t) {
            x * (-(t - start) / tau).exp()
        } else {
            *x
        };
        win_err = win_err.max((w - expect).abs() / scale);
    }
    Ok(Check::new(
        "shock_module",
        events.len() == 1 && peak_err <= 0.01 && dur_err <= 0.01 && dv_err <= 0.01 && win_err <= 1e-3,
        format!(
            "{} event(s); half-sine peak error {peak_err:.3e}, duration error beyond one sample {dur_err:.3e}, delta-v error {dv_err:.3e} (limit 1e-2); decay window error {win_err:.3e} (limit 1e-3)",
            events.len()
        ),
    ))
}

/// Corpus recall, false positives and scale equivariance.
pub fn diagnosis_corpus(
    seed: u64,
    per_fault: usize,
    scalings: usize,
    cfg: &RuleConfig,
) -> Result<Check> {
    let cases = corpus::generate_corpus(seed, per_fault)?;
    let modal = corpus::corpus_modal()?;
    let reports = cases
        .iter()
        .map(|c| corpus::evaluate_case(c, &modal, cfg))
        .collect::<Result<Vec<_>>>()?;
    let summary = corpus::summarize(&cases, &reports);
    let mut r = rng(seed ^ 0x5CA1E);
    let mut broken = 0usize;
    for (case, base) in cases.iter().zip(&reports) {
        for _ in 0..scalings {
            let c = 10f64.powf(r.random_range(-3.0..3.0));
            if corpus::evaluate_case(&case.scaled(c)?, &modal, cfg)?.detected() != base.detected() {
                broken += 1;
            }
        }
    }
    let recall = Fault::ALL
        .iter()
        .map(|f| format!("{f} {:.2}", summary.recall[f]))
        .collect::<Vec<_>>()
        .join(", ");
    let fp = Fault::ALL
        .iter()
        .map(|f| format!("{f} {:.3}", summary.false_positive_rate[f]))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Check::new(
        "diagnosis_corpus",
        summary.passes(0.04) && broken == 0,
        format!(
            "{} cases; recall [{recall}]; false-positive rate [{fp}] (limit 0.04); {broken} of {} scalings changed the verdict",
            summary.cases,
            cases.len() * scalings
        ),
    ))
}

/// Sizes for [`run_all`].
#[derive(Debug, Clone, Copy)]
pub struct SuiteSize {
    pub oracle_systems: usize,
    pub oracle_freqs: usize,
    pub corpus_per_fault: usize,
    pub scalings: usize,
}

impl SuiteSize {
    pub const FULL: SuiteSize = SuiteSize {
        oracle_systems: 50,
        oracle_freqs: 200,
        corpus_per_fault: 25,
        scalings: 10,
    };
    pub const REDUCED: SuiteSize = SuiteSize {
        oracle_systems: 10,
        oracle_freqs: 50,
        corpus_per_fault: 8,
        scalings: 2,
    };
}

/// Every check, in a fixed order. A check that errors is reported as failed
/// with the error text.
pub fn run_all(seed: u64, size: SuiteSize, cfg: &RuleConfig) -> Vec<Check> {
    type Job<'a> = Box<dyn Fn() -> Result<Check> + 'a>;
    let jobs: Vec<(&str, Job)> = vec![
        (
            "frf_oracle_equivalence",
            Box::new(|| frf_oracle(seed, size.oracle_systems, size.oracle_freqs)),
        ),
        (
            "reduction_law",
            Box::new(|| reduction_law(seed ^ 1, size.oracle_systems, size.oracle_freqs)),
        ),
        (
            "gyroscopic_splitting",
            Box::new(|| gyroscopic_splitting(10)),
        ),
        ("integrator_fidelity", Box::new(integrator_fidelity)),
        ("orbit_pipeline", Box::new(|| orbit_pipeline(seed ^ 2))),
        ("rundown_resonance", Box::new(rundown_resonance)),
        ("shock_module", Box::new(shock_module)),
        (
            "diagnosis_corpus",
            Box::new(|| diagnosis_corpus(seed, size.corpus_per_fault, size.scalings, cfg)),
        ),
    ];
    jobs.into_iter()
        .map(|(name, job)| job().unwrap_or_else(|e| Check::new(name, false, format!("error: {e}"))))
        .collect()
}
