//! Receptance frequency response functions.
//!
//! Three routes to `α_jk(ω)`:
//!
//! - real-mode superposition for symmetric, proportionally damped systems
//!   ([`receptance_symmetric`]),
//! - complex-mode residue superposition for general rotating systems
//!   ([`receptance_general`]),
//! - direct inversion of the dynamic stiffness `K − ω²M + iω(C + ΩG)`
//!   ([`receptance_direct`]), which is the reference both modal routes are
//!   checked against.
//!
//! Curves can also be estimated from excitation/response records with the H1
//! estimator and reduced to modal parameters by peak picking.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rotor::{ComplexModalModel, ModalModel, SystemMatrices};
use crate::signal::{fmt_sig9, real_fft, ChannelRecord, Window};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrfMethod {
    ModalSymmetric,
    ModalGeneral,
    Direct,
    EstimatedH1,
}

/// Receptance `α_jk` sampled on a caller-supplied grid (rad/s).
#[derive(Debug, Clone, PartialEq)]
pub struct FrfCurve {
    pub frequencies: Vec<f64>,
    pub values: Vec<Complex64>,
    pub j: usize,
    pub k: usize,
    pub method: FrfMethod,
}

#[derive(Serialize)]
struct Sidecar {
    j: usize,
    k: usize,
    method: FrfMethod,
}

impl FrfCurve {
    pub fn new(
        frequencies: Vec<f64>,
        values: Vec<Complex64>,
        j: usize,
        k: usize,
        method: FrfMethod,
    ) -> Result<Self> {
        if frequencies.len() != values.len() {
            return Err(Error::Length(format!(
                "{} frequencies but {} values",
                frequencies.len(),
                values.len()
            )));
        }
        if frequencies.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain(
                "frequency grid must be strictly ascending".into(),
            ));
        }
        if values
            .iter()
            .any(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(Error::Data {
                row: values
                    .iter()
                    .position(|v| !(v.re.is_finite() && v.im.is_finite()))
                    .unwrap_or(0),
                msg: "non-finite receptance".into(),
            });
        }
        Ok(Self {
            frequencies,
            values,
            j,
            k,
            method,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// `frequency_rad_s,real,imag,magnitude,phase_rad`
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("frequency_rad_s,real,imag,magnitude,phase_rad\n");
        for (w, v) in self.frequencies.iter().zip(&self.values) {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                fmt_sig9(*w),
                fmt_sig9(v.re),
                fmt_sig9(v.im),
                fmt_sig9(v.norm()),
                fmt_sig9(v.arg())
            );
        }
        out
    }

    pub fn sidecar_json(&self) -> String {
        serde_json::to_string_pretty(&Sidecar {
            j: self.j,
            k: self.k,
            method: self.method,
        })
        .expect("sidecar serializes")
    }
}

fn check_index(n: usize, j: usize, k: usize) -> Result<()> {
    if j >= n || k >= n {
        return Err(Error::Index(format!(
            "coordinates ({j}, {k}) out of range for {n} DOFs"
        )));
    }
    Ok(())
}

fn check_omega(omega: f64) -> Result<()> {
    if !(omega.is_finite() && omega >= 0.0) {
        return Err(Error::Domain(format!("omega must be >= 0, got {omega}")));
    }
    Ok(())
}

/// `Σ_r φ_jr φ_kr / (M_r [ω_r² − ω² + 2iωζ_rω_r])`
pub fn receptance_symmetric(m: &ModalModel, omega: f64, j: usize, k: usize) -> Result<Complex64> {
    check_index(m.n_dof(), j, k)?;
    check_omega(omega)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..m.n_modes() {
        let wr = m.omega[r];
        let den =
            Complex64::new(wr * wr - omega * omega, 2.0 * omega * m.zeta[r] * wr) * m.modal_mass[r];
        acc += m.phi[(j, r)] * m.phi[(k, r)] / den;
    }
    Ok(acc)
}

/// `Σ_r G_jk^(r) / (iω − λ_r)` over all `2n` complex modes. Summed per
/// conjugate pair this is `G/(iω − λ) + conj(G)/(iω − conj λ)`, whose common
/// denominator is `ω_r² − ω² + 2iωω_rζ_r`.
pub fn receptance_general(
    cm: &ComplexModalModel,
    omega: f64,
    j: usize,
    k: usize,
) -> Result<Complex64> {
    check_index(cm.n_dof, j, k)?;
    check_omega(omega)?;
    let s = I * omega;
    Ok(cm
        .modes
        .iter()
        .map(|m| m.residue[(j, k)] / (s - m.eigenvalue))
        .sum())
}

/// Full receptance matrix of a general complex-mode model.
pub fn receptance_general_matrix(cm: &ComplexModalModel, omega: f64) -> Result<DMatrix<Complex64>> {
    check_omega(omega)?;
    let s = I * omega;
    let mut out = DMatrix::zeros(cm.n_dof, cm.n_dof);
    for m in &cm.modes {
        out += &m.residue / (s - m.eigenvalue);
    }
    Ok(out)
}

/// Full receptance matrix of a real-mode model.
pub fn receptance_symmetric_matrix(m: &ModalModel, omega: f64) -> Result<DMatrix<Complex64>> {
    check_omega(omega)?;
    let n = m.n_dof();
    let mut out = DMatrix::zeros(n, n);
    for r in 0..m.n_modes() {
        let wr = m.omega[r];
        let den =
            Complex64::new(wr * wr - omega * omega, 2.0 * omega * m.zeta[r] * wr) * m.modal_mass[r];
        for j in 0..n {
            for k in 0..n {
                out[(j, k)] += m.phi[(j, r)] * m.phi[(k, r)] / den;
            }
        }
    }
    Ok(out)
}

/// `[K − ω²M + iω(C + ΩG)]⁻¹` by LU solve.
pub fn receptance_direct(sys: &SystemMatrices, omega: f64) -> Result<DMatrix<Complex64>> {
    check_omega(omega)?;
    let k = sys.effective_stiffness();
    let d = sys.effective_coupling();
    let z = DMatrix::from_fn(sys.n(), sys.n(), |r, c| {
        Complex64::new(
            k[(r, c)] - omega * omega * sys.mass()[(r, c)],
            omega * d[(r, c)],
        )
    });
    let scale = z.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let lu = z.lu();
    let u = lu.u();
    let min_pivot = (0..sys.n())
        .map(|i| u[(i, i)].norm())
        .fold(f64::INFINITY, f64::min);
    if scale == 0.0 || min_pivot <= 1e-13 * scale {
        return Err(Error::Singular {
            omega,
            omega_r: nearest_undamped_frequency(sys, omega),
        });
    }
    lu.try_inverse().ok_or(Error::Singular {
        omega,
        omega_r: nearest_undamped_frequency(sys, omega),
    })
}

fn nearest_undamped_frequency(sys: &SystemMatrices, omega: f64) -> f64 {
    let Some(m_inv) = sys.mass().clone().try_inverse() else {
        return f64::NAN;
    };
    (m_inv * sys.effective_stiffness())
        .complex_eigenvalues()
        .iter()
        .map(|l| l.sqrt().re)
        .min_by(|a, b| (a - omega).abs().total_cmp(&(b - omega).abs()))
        .unwrap_or(f64::NAN)
}

/// Largest entrywise deviation relative to the largest reference entry.
pub fn max_relative_deviation(value: &DMatrix<Complex64>, reference: &DMatrix<Complex64>) -> f64 {
    let scale = reference.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let dev = value
        .iter()
        .zip(reference.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        dev
    } else {
        dev / scale
    }
}

fn sweep(
    frequencies: &[f64],
    j: usize,
    k: usize,
    method: FrfMethod,
    f: impl Fn(f64) -> Result<Complex64>,
) -> Result<FrfCurve> {
    let values = frequencies
        .iter()
        .map(|&w| f(w))
        .collect::<Result<Vec<_>>>()?;
    FrfCurve::new(frequencies.to_vec(), values, j, k, method)
}

pub fn symmetric_curve(
    m: &ModalModel,
    frequencies: &[f64],
    j: usize,
    k: usize,
) -> Result<FrfCurve> {
    sweep(frequencies, j, k, FrfMethod::ModalSymmetric, |w| {
        receptance_symmetric(m, w, j, k)
    })
}

pub fn general_curve(
    cm: &ComplexModalModel,
    frequencies: &[f64],
    j: usize,
    k: usize,
) -> Result<FrfCurve> {
    sweep(frequencies, j, k, FrfMethod::ModalGeneral, |w| {
        receptance_general(cm, w, j, k)
    })
}

pub fn direct_curve(
    sys: &SystemMatrices,
    frequencies: &[f64],
    j: usize,
    k: usize,
) -> Result<FrfCurve> {
    check_index(sys.n(), j, k)?;
    sweep(frequencies, j, k, FrfMethod::Direct, |w| {
        Ok(receptance_direct(sys, w)?[(j, k)])
    })
}

/// H1 estimate with its coherence.
#[derive(Debug, Clone, PartialEq)]
pub struct H1Estimate {
    pub curve: FrfCurve,
    pub coherence: Vec<f64>,
    pub segment_len: usize,
}

/// Welch-averaged H1 = `G_fx / G_ff` with Hann-windowed segments.
///
/// The segment length is the largest that fits `n_averages` segments with the
/// requested fractional overlap. `indices` labels the resulting curve.
pub fn estimate_frf_h1(
    force: &ChannelRecord,
    response: &ChannelRecord,
    n_averages: usize,
    overlap_fraction: f64,
    indices: (usize, usize),
) -> Result<H1Estimate> {
    force.require_calibrated()?;
    response.require_calibrated()?;
    if force.len() != response.len() || force.sample_rate() != response.sample_rate() {
        return Err(Error::Length(
            "force and response must share length and sample rate".into(),
        ));
    }
    if n_averages < 2 {
        return Err(Error::Domain("H1 needs at least 2 averages".into()));
    }
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(Error::Domain(format!(
            "overlap must lie in [0, 1), got {overlap_fraction}"
        )));
    }
    let n = force.len();
    let span = 1.0 + (n_averages - 1) as f64 * (1.0 - overlap_fraction);
    let mut seg = (n as f64 / span).floor() as usize;
    let step = |seg: usize| ((seg as f64 * (1.0 - overlap_fraction)).round() as usize).max(1);
    while seg > 0 && (n_averages - 1) * step(seg) + seg > n {
        seg -= 1;
    }
    if seg < 8 {
        return Err(Error::Length(format!(
            "{n} samples cannot hold {n_averages} segments of at least 8 samples"
        )));
    }
    let hop = step(seg);
    let w = Window::Hann.coefficients(seg);
    let bins = seg / 2 + 1;
    let mut gff = vec![0.0; bins];
    let mut gxx = vec![0.0; bins];
    let mut gfx = vec![Complex64::new(0.0, 0.0); bins];
    for a in 0..n_averages {
        let start = a * hop;
        let windowed = |x: &[f64]| -> Vec<f64> {
            x[start..start + seg]
                .iter()
                .zip(&w)
                .map(|(v, w)| v * w)
                .collect()
        };
        let fspec = real_fft(&windowed(force.samples()));
        let xspec = real_fft(&windowed(response.samples()));
        for b in 0..bins {
            gff[b] += fspec[b].norm_sqr();
            gxx[b] += xspec[b].norm_sqr();
            gfx[b] += fspec[b].conj() * xspec[b];
        }
    }
    let gff_max = gff.iter().cloned().fold(0.0, f64::max);
    let mut values = Vec::with_capacity(bins);
    let mut coherence = Vec::with_capacity(bins);
    for b in 0..bins {
        if gff[b] <= 1e-14 * gff_max || gff[b] == 0.0 {
            values.push(Complex64::new(0.0, 0.0));
            coherence.push(0.0);
        } else {
            values.push(gfx[b] / gff[b]);
            let c = if gxx[b] > 0.0 {
                gfx[b].norm_sqr() / (gff[b] * gxx[b])
            } else {
                0.0
            };
            coherence.push(c.clamp(0.0, 1.0));
        }
    }
    let frequencies = (0..bins)
        .map(|b| 2.0 * PI * b as f64 * force.sample_rate() / seg as f64)
        .collect();
    Ok(H1Estimate {
        curve: FrfCurve::new(
            frequencies,
            values,
            indices.0,
            indices.1,
            FrfMethod::EstimatedH1,
        )?,
        coherence,
        segment_len: seg,
    })
}

/// A resonance picked from an FRF magnitude curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalPeak {
    /// rad/s
    pub omega: f64,
    /// Half-power estimate; `None` when the −3 dB band runs into a
    /// neighbouring peak.
    pub zeta: Option<f64>,
    pub amplitude: f64,
    pub overlapped: bool,
}

/// Minimum ratio of a peak to its higher flanking valley.
pub const PEAK_PROMINENCE: f64 = 1.02;

/// Local maxima of `|α|` with half-power damping estimates
/// `ζ = Δω / (2 ω_peak)`.
pub fn peak_pick_modal(curve: &FrfCurve) -> Vec<ModalPeak> {
    let mag = curve.magnitudes();
    let w = &curve.frequencies;
    let n = mag.len();
    if n < 3 {
        return Vec::new();
    }
    let global = mag.iter().cloned().fold(0.0, f64::max);
    let mut peaks = Vec::new();
    for i in 1..n - 1 {
        if !(mag[i] > mag[i - 1] && mag[i] >= mag[i + 1]) || mag[i] < 1e-3 * global {
            continue;
        }
        // valleys bounding this peak
        let mut lv = i;
        while lv > 0 && mag[lv - 1] <= mag[lv] {
            lv -= 1;
        }
        let mut rv = i;
        while rv + 1 < n && mag[rv + 1] <= mag[rv] {
            rv += 1;
        }
        let left_floor = if lv == 0 { 0.0 } else { mag[lv] };
        let right_floor = if rv == n - 1 { 0.0 } else { mag[rv] };
        let floor = left_floor.max(right_floor);
        if floor > 0.0 && mag[i] / floor < PEAK_PROMINENCE {
            continue;
        }

        let (omega, amplitude) = {
            let (a, b, c) = (mag[i - 1], mag[i], mag[i + 1]);
            let den = a - 2.0 * b + c;
            let h = w[i + 1] - w[i];
            if den < 0.0 && (w[i] - w[i - 1] - h).abs() <= 1e-9 * h {
                let d = 0.5 * (a - c) / den;
                (w[i] + d * h, b - 0.25 * (a - c) * d)
            } else {
                (w[i], b)
            }
        };
        let half = amplitude / 2f64.sqrt();
        let crossing = |from: usize, to: usize, step: isize| -> Option<f64> {
            let mut idx = from as isize;
            while idx != to as isize {
                let next = idx + step;
                let (m0, m1) = (mag[idx as usize], mag[next as usize]);
                if m1 <= half {
                    let f = (m0 - half) / (m0 - m1);
                    return Some(w[idx as usize] + f * (w[next as usize] - w[idx as usize]));
                }
                idx = next;
            }
            None
        };
        let lo = if lv < i { crossing(i, lv, -1) } else { None };
        let hi = if rv > i { crossing(i, rv, 1) } else { None };
        let (zeta, overlapped) = match (lo, hi) {
            (Some(lo), Some(hi)) => (Some((hi - lo) / (2.0 * omega)), false),
            _ => (None, true),
        };
        peaks.push(ModalPeak {
            omega,
            zeta,
            amplitude,
            overlapped,
        });
    }
    peaks
}
