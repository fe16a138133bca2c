//! Seeded synthetic systems and fault records used by the oracle checks,
//! the self-test and the diagnosis corpus.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::diagnosis::{
    diagnose, order_spectrum, overall_levels, Fault, FaultReport, ResonanceReference, RuleConfig,
};
use crate::error::{Error, Result};
use crate::orbit::{detect_tacho, TachoTrain};
use crate::rotor::{
    build_jeffcott, eigen_symmetric, simulate_rotating, JeffcottParams, ModalModel, SpeedSchedule,
    SystemMatrices,
};
use crate::signal::{rms, MultiChannelRecord};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_matrix(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
}

/// `(AᵀA + shift·I)·s` with `s` drawn from `scale`.
fn random_spd(
    rng: &mut impl Rng,
    n: usize,
    scale: std::ops::Range<f64>,
    shift: f64,
) -> DMatrix<f64> {
    let scale = rng.random_range(scale);
    let a = random_matrix(rng, n);
    (a.transpose() * a + DMatrix::identity(n, n) * shift) * scale
}

/// Symmetric system with Rayleigh damping `C = aM + bK`.
///
/// Natural frequencies land roughly in 5..200 rad/s and every damping ratio
/// stays well below critical.
pub fn random_symmetric_system(rng: &mut impl Rng, n: usize) -> SystemMatrices {
    let m = random_spd(rng, n, 0.5..5.0, 0.5);
    let k = random_spd(rng, n, 1e2..1e4, 0.2);
    let a = rng.random_range(0.0..0.5);
    let b = rng.random_range(1e-5..1e-4);
    let c = &m * a + &k * b;
    SystemMatrices::new(m, c, k, DMatrix::zeros(n, n)).expect("constructed SPD mass")
}

/// Spinning system with non-proportional damping and a dense skew gyroscopic
/// matrix.
pub fn random_gyroscopic_system(rng: &mut impl Rng, n: usize) -> SystemMatrices {
    let m = random_spd(rng, n, 0.5..5.0, 0.5);
    let k = random_spd(rng, n, 1e2..1e4, 0.2);
    let c = random_spd(rng, n, 0.05..2.0, 0.1);
    let a = random_matrix(rng, n) * rng.random_range(0.05..1.0);
    let g = &a - a.transpose();
    let spin = rng.random_range(10.0..300.0);
    SystemMatrices::new(m, c, k, g)
        .and_then(|s| s.with_spin(spin))
        .expect("constructed SPD mass and skew G")
}

/// Rotor used by every fault case.
pub fn corpus_rotor() -> JeffcottParams {
    JeffcottParams {
        disc_mass: 10.0,
        shaft_stiffness: 1e6,
        damping_ratio: 0.05,
        polar_inertia: 0.0,
        diametral_inertia: 0.0,
        tilt_stiffness: 0.0,
        unbalance_mass_ecc: 1e-4,
    }
}

/// Time allowed for the start-up transient to decay before analysis, s.
pub const SETTLE_TIME: f64 = 0.8;
pub const ANALYSIS_REVS: usize = 16;
pub const SNR_DB: f64 = 20.0;
pub const REFERENCE_SPEED_RATIO: f64 = 0.5;

/// One synthetic measurement with its intended label.
#[derive(Debug, Clone)]
pub struct FaultCase {
    pub id: String,
    pub label: Fault,
    /// Ω / ω_n
    pub speed_ratio: f64,
    pub record: MultiChannelRecord,
    pub reference: Option<ResonanceReference>,
}

/// Forward-whirling harmonic: order `h`, displacement amplitude relative to
/// the unbalance response, phase offset.
#[derive(Debug, Clone, Copy)]
struct Harmonic {
    order: f64,
    ratio: f64,
    phase: f64,
}

/// Simulates the corpus rotor at constant `ratio·ω_n` with extra harmonic
/// forcing sized through the receptance so each harmonic reaches its target
/// displacement, then adds white noise at [`SNR_DB`].
fn synthesize(
    rng: &mut ChaCha8Rng,
    ratio: f64,
    harmonics: &[Harmonic],
) -> Result<MultiChannelRecord> {
    let p = corpus_rotor();
    let sys = build_jeffcott(&p)?;
    let (m, k) = (p.disc_mass, p.shaft_stiffness);
    let wn = (k / m).sqrt();
    let c = 2.0 * p.damping_ratio * (k * m).sqrt();
    let omega = ratio * wn;
    let alpha = |w: f64| Complex64::new(1.0, 0.0) / Complex64::new(k - m * w * w, c * w);
    let d1 = alpha(omega).norm() * p.unbalance_mass_ecc * omega * omega;
    // force phasor that yields the target displacement phasor
    let forcing: Vec<(f64, Complex64)> = harmonics
        .iter()
        .map(|h| {
            let target = Complex64::from_polar(h.ratio * d1, h.phase);
            (h.order, target / alpha(h.order * omega))
        })
        .collect();

    let period = 2.0 * PI / omega;
    let duration = SETTLE_TIME + (ANALYSIS_REVS as f64 + 1.5) * period;
    let dt = (period / 100.0).min(5e-4);
    let sched = SpeedSchedule::constant(omega, duration)?;
    let run = simulate_rotating(&sys, &p, &sched, dt, duration, |_, phi, _, f| {
        for (order, fz) in &forcing {
            let e = *fz * Complex64::from_polar(1.0, order * phi);
            f[0] += e.re;
            f[1] += e.im;
        }
    })?;

    let fs = run.record.sample_rate();
    let channels = run
        .record
        .into_channels()
        .into_iter()
        .filter(|ch| !ch.name().starts_with("f_"))
        .map(|ch| {
            if ch.role() != crate::signal::Role::Vibration {
                return Ok(ch);
            }
            let sigma = rms(ch.samples()) / 10f64.powf(SNR_DB / 20.0);
            let noise = Normal::new(0.0, sigma).map_err(|e| Error::Domain(e.to_string()))?;
            let x = ch.samples().iter().map(|v| v + noise.sample(rng)).collect();
            ch.with_samples(x)
        })
        .collect::<Result<Vec<_>>>()?;
    debug_assert!(channels.iter().all(|c| c.sample_rate() == fs));
    MultiChannelRecord::new(channels, 0.0)
}

/// Pulses after the settling time.
pub fn analysis_train(rec: &MultiChannelRecord) -> Result<TachoTrain> {
    let tacho = rec
        .tacho()
        .ok_or_else(|| Error::Role("record has no tacho channel".into()))?;
    let t = detect_tacho(tacho, 2.5, 1.0)?;
    TachoTrain::from_pulse_times(
        t.pulse_times()
            .iter()
            .cloned()
            .filter(|p| *p >= SETTLE_TIME)
            .collect(),
        t.threshold_used(),
    )
}

fn order1_reference(rec: &MultiChannelRecord) -> Result<ResonanceReference> {
    let os = order_spectrum(rec.require_channel("y")?, &analysis_train(rec)?, 8.0)?;
    Ok(ResonanceReference {
        speed: os.mean_speed,
        order1_amplitude: os.amplitude(1.0),
    })
}

fn case_seed(seed: u64, label: Fault, index: usize) -> u64 {
    let l = Fault::ALL.iter().position(|f| *f == label).unwrap_or(0) as u64;
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (l << 32 | index as u64)
}

/// The `index`-th case of `label`.
pub fn fault_case(seed: u64, label: Fault, index: usize) -> Result<FaultCase> {
    let mut rng = rng(case_seed(seed, label, index));
    let h = |order: f64, ratio: f64, rng: &mut ChaCha8Rng| Harmonic {
        order,
        ratio,
        phase: rng.random_range(-PI..PI),
    };
    let (ratio, harmonics) = match label {
        Fault::Unbalance => {
            let r = if rng.random_bool(0.5) {
                rng.random_range(0.3..0.6)
            } else {
                rng.random_range(1.6..2.5)
            };
            (r, vec![])
        }
        Fault::Misalignment => {
            let r = rng.random_range(0.2..0.35);
            let a2 = rng.random_range(0.6..1.2);
            let a3 = rng.random_range(0.0..0.05);
            let v = vec![h(2.0, a2, &mut rng), h(3.0, a3, &mut rng)];
            (r, v)
        }
        Fault::Looseness => {
            let r = rng.random_range(0.08..0.12);
            let mut v: Vec<Harmonic> = (2..=6)
                .map(|o| {
                    let a = rng.random_range(0.8..1.0) * (0.45 - 0.05 * (o - 2) as f64);
                    h(o as f64, a, &mut rng)
                })
                .collect();
            let sub = rng.random_range(0.3..0.5);
            v.push(h(0.5, sub, &mut rng));
            (r, v)
        }
        Fault::Resonance => (rng.random_range(0.95..1.05), vec![]),
    };
    let record = synthesize(&mut rng, ratio, &harmonics)?;
    let reference = if label == Fault::Resonance {
        Some(order1_reference(&synthesize(
            &mut rng,
            REFERENCE_SPEED_RATIO,
            &[],
        )?)?)
    } else {
        None
    };
    Ok(FaultCase {
        id: format!("{label}-{index:02}"),
        label,
        speed_ratio: ratio,
        record,
        reference,
    })
}

impl FaultCase {
    /// Same case with every vibration channel and the reference amplitude
    /// multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let channels = self
            .record
            .channels()
            .iter()
            .map(|ch| {
                if ch.role() == crate::signal::Role::Vibration {
                    ch.with_samples(ch.samples().iter().map(|v| v * c).collect())
                } else {
                    Ok(ch.clone())
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            record: MultiChannelRecord::new(channels, self.record.start_time())?,
            reference: self.reference.map(|r| ResonanceReference {
                order1_amplitude: r.order1_amplitude * c,
                ..r
            }),
            ..self.clone()
        })
    }
}

/// Modal model of the corpus rotor.
pub fn corpus_modal() -> Result<ModalModel> {
    eigen_symmetric(&build_jeffcott(&corpus_rotor())?)
}

/// Runs the tacho → order spectrum → rules pipeline on one case.
pub fn evaluate_case(
    case: &FaultCase,
    modal: &ModalModel,
    cfg: &RuleConfig,
) -> Result<FaultReport> {
    let y = case.record.require_channel("y")?;
    let os = order_spectrum(y, &analysis_train(&case.record)?, 8.0)?;
    let nyquist = 0.5 * y.sample_rate();
    let levels = overall_levels(y, (1.0, nyquist.min(1000.0)))?;
    let overall = BTreeMap::from([
        ("v_rms_mm_s".to_string(), levels.v_rms_mm_s),
        ("a_rms_g".to_string(), levels.a_rms_g),
        ("d_rms_um".to_string(), levels.d_rms_um),
    ]);
    Ok(diagnose(
        &os,
        Some(modal),
        case.reference.as_ref(),
        overall,
        cfg,
    ))
}

/// Recall per intended label and false-positive rate per fault.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusSummary {
    pub cases: usize,
    pub recall: BTreeMap<Fault, f64>,
    pub false_positive_rate: BTreeMap<Fault, f64>,
    /// Case ids whose intended label was missed.
    pub missed: Vec<String>,
    /// (case id, spurious fault)
    pub false_positives: Vec<(String, Fault)>,
}

impl CorpusSummary {
    pub fn passes(&self, max_fp_rate: f64) -> bool {
        self.recall.values().all(|r| *r == 1.0)
            && self.false_positive_rate.values().all(|r| *r <= max_fp_rate)
    }
}

pub fn generate_corpus(seed: u64, per_fault: usize) -> Result<Vec<FaultCase>> {
    Fault::ALL
        .iter()
        .flat_map(|f| (0..per_fault).map(move |i| fault_case(seed, *f, i)))
        .collect()
}

pub fn summarize(cases: &[FaultCase], reports: &[FaultReport]) -> CorpusSummary {
    let mut recall = BTreeMap::new();
    let mut fp_rate = BTreeMap::new();
    let mut missed = Vec::new();
    let mut false_positives = Vec::new();
    for (c, r) in cases.iter().zip(reports) {
        if !r.verdicts[&c.label].detected {
            missed.push(c.id.clone());
        }
        for f in r.detected() {
            if f != c.label {
                false_positives.push((c.id.clone(), f));
            }
        }
    }
    for f in Fault::ALL {
        let own = cases.iter().filter(|c| c.label == f).count();
        let hits = cases
            .iter()
            .zip(reports)
            .filter(|(c, r)| c.label == f && r.verdicts[&f].detected)
            .count();
        recall.insert(
            f,
            if own == 0 {
                1.0
            } else {
                hits as f64 / own as f64
            },
        );
        let others = cases.len() - own;
        let fps = false_positives.iter().filter(|(_, g)| *g == f).count();
        fp_rate.insert(
            f,
            if others == 0 {
                0.0
            } else {
                fps as f64 / others as f64
            },
        );
    }
    CorpusSummary {
        cases: cases.len(),
        recall,
        false_positive_rate: fp_rate,
        missed,
        false_positives,
    }
}

/// Generates, evaluates and scores the corpus.
pub fn run_corpus(seed: u64, per_fault: usize, cfg: &RuleConfig) -> Result<CorpusSummary> {
    let cases = generate_corpus(seed, per_fault)?;
    let modal = corpus_modal()?;
    let reports = cases
        .iter()
        .map(|c| evaluate_case(c, &modal, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(&cases, &reports))
}
