//! Key-phasor processing and shaft orbits.
//!
//! A once-per-rev tacho gives pulse times; the y/z channels are resampled at
//! equal phase increments between pulses so each revolution becomes a
//! fixed-length slice with TDC at index 0. Slices are then averaged or
//! reduced to a single order.

use std::f64::consts::PI;
use std::fmt::{self, Write as _};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rotor::WhirlSense;
use crate::signal::{fmt_sig9, resample_linear, ChannelRecord, Role};

pub const MIN_SAMPLES_PER_REV: usize = 32;
pub const DEFAULT_SAMPLES_PER_REV: usize = 128;
/// Relative period change between adjacent revolutions treated as a dropout.
pub const DROPOUT_JUMP: f64 = 0.5;

/// Rising-edge pulse instants, seconds from the first sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TachoTrain {
    pulse_times: Vec<f64>,
    threshold_used: f64,
    dropouts: Vec<usize>,
}

impl TachoTrain {
    /// Builds a train from known pulse instants.
    pub fn from_pulse_times(pulse_times: Vec<f64>, threshold_used: f64) -> Result<Self> {
        if pulse_times.len() < 2 {
            return Err(Error::InsufficientPulses {
                found: pulse_times.len(),
                needed: 2,
            });
        }
        if pulse_times.iter().any(|t| !t.is_finite())
            || pulse_times.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::Domain(
                "pulse times must be finite and strictly ascending".into(),
            ));
        }
        let periods: Vec<f64> = pulse_times.windows(2).map(|w| w[1] - w[0]).collect();
        let dropouts = (1..periods.len())
            .filter(|&i| (periods[i] - periods[i - 1]).abs() > DROPOUT_JUMP * periods[i - 1])
            .collect();
        Ok(Self {
            pulse_times,
            threshold_used,
            dropouts,
        })
    }

    pub fn pulse_times(&self) -> &[f64] {
        &self.pulse_times
    }

    pub fn threshold_used(&self) -> f64 {
        self.threshold_used
    }

    pub fn len(&self) -> usize {
        self.pulse_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulse_times.is_empty()
    }

    pub fn rev_periods(&self) -> Vec<f64> {
        self.pulse_times.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Indices into `rev_periods` whose period jumped by more than 50%.
    pub fn dropouts(&self) -> &[usize] {
        &self.dropouts
    }

    /// 2π over the mean period, rad/s.
    pub fn mean_speed(&self) -> f64 {
        let n = self.pulse_times.len() - 1;
        2.0 * PI * n as f64 / (self.pulse_times[n] - self.pulse_times[0])
    }

    /// Same train shifted later by `dt`.
    pub fn delayed(&self, dt: f64) -> Result<Self> {
        Self::from_pulse_times(
            self.pulse_times.iter().map(|t| t + dt).collect(),
            self.threshold_used,
        )
    }

    /// Time at fractional revolution `phi` (revolutions since the first
    /// pulse) by cubic Hermite interpolation of the pulse times.
    fn time_at(&self, phi: f64) -> f64 {
        let t = &self.pulse_times;
        let last = t.len() - 1;
        let i = (phi.floor() as usize).min(last - 1);
        let u = phi - i as f64;
        // second-order differences, one-sided at the ends
        let slope = |j: usize| -> f64 {
            if last == 1 {
                t[1] - t[0]
            } else if j == 0 {
                0.5 * (-3.0 * t[0] + 4.0 * t[1] - t[2])
            } else if j == last {
                0.5 * (3.0 * t[last] - 4.0 * t[last - 1] + t[last - 2])
            } else {
                0.5 * (t[j + 1] - t[j - 1])
            }
        };
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u),
            u * (1.0 - u) * (1.0 - u),
            u * u * (3.0 - 2.0 * u),
            u * u * (u - 1.0),
        );
        h00 * t[i] + h10 * slope(i) + h01 * t[i + 1] + h11 * slope(i + 1)
    }
}

/// Rising crossings of `threshold`, re-armed once the signal falls below
/// `threshold − hysteresis`. Edge times are linearly interpolated.
pub fn detect_tacho(ch: &ChannelRecord, threshold: f64, hysteresis: f64) -> Result<TachoTrain> {
    if ch.role() != Role::Tacho {
        return Err(Error::Role(format!(
            "channel '{}' is {}, expected tacho",
            ch.name(),
            ch.role()
        )));
    }
    if !(hysteresis.is_finite() && hysteresis >= 0.0) || !threshold.is_finite() {
        return Err(Error::Domain(
            "hysteresis must be >= 0 and threshold finite".into(),
        ));
    }
    let x = ch.samples();
    let dt = ch.dt();
    let rearm = threshold - hysteresis;
    // a record that starts inside a pulse is not armed until it drops
    let mut armed = x.first().is_some_and(|v| *v < rearm);
    let mut pulses = Vec::new();
    for i in 1..x.len() {
        if armed && x[i - 1] < threshold && x[i] >= threshold {
            let frac = (threshold - x[i - 1]) / (x[i] - x[i - 1]);
            pulses.push((i as f64 - 1.0 + frac) * dt);
            armed = false;
        } else if !armed && x[i] < rearm {
            armed = true;
        }
    }
    if pulses.len() < 3 {
        return Err(Error::InsufficientPulses {
            found: pulses.len(),
            needed: 3,
        });
    }
    TachoTrain::from_pulse_times(pulses, threshold)
}

/// Per-revolution speed at interval midpoints, linear in between.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedProfile {
    pub times: Vec<f64>,
    pub speeds: Vec<f64>,
}

impl SpeedProfile {
    /// Ω(t) in rad/s, held constant beyond the first and last midpoints.
    pub fn at(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.speeds[0];
        }
        if t >= self.times[n - 1] {
            return self.speeds[n - 1];
        }
        let i = self.times.partition_point(|&x| x <= t) - 1;
        let f = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        self.speeds[i] + f * (self.speeds[i + 1] - self.speeds[i])
    }
}

pub fn speed_profile(t: &TachoTrain) -> SpeedProfile {
    let p = t.pulse_times();
    SpeedProfile {
        times: p.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect(),
        speeds: p.windows(2).map(|w| 2.0 * PI / (w[1] - w[0])).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    Raw,
    Highpass,
    OrderFiltered(usize),
}

impl fmt::Display for FilterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterMode::Raw => f.write_str("raw"),
            FilterMode::Highpass => f.write_str("highpass"),
            FilterMode::OrderFiltered(h) => write!(f, "order_filtered({h})"),
        }
    }
}

impl Serialize for FilterMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Revolutions resampled at equal phase increments.
#[derive(Debug, Clone, PartialEq)]
pub struct Slices {
    pub y: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    /// Duration of each kept revolution, s.
    pub periods: Vec<f64>,
    /// Start time (TDC) of each kept revolution, s.
    pub starts: Vec<f64>,
    /// Revolutions discarded because they ran past the record.
    pub dropped: usize,
    pub filter_mode: FilterMode,
}

impl Slices {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn samples_per_rev(&self) -> usize {
        self.y.first().map_or(0, Vec::len)
    }

    /// Marks the slices as cut from high-passed channels.
    pub fn highpassed(mut self) -> Self {
        self.filter_mode = FilterMode::Highpass;
        self
    }

    fn mean_speed(&self, n: usize) -> f64 {
        2.0 * PI * n as f64 / self.periods[..n].iter().sum::<f64>()
    }
}

/// Cuts `y` and `z` into revolutions of `p` samples each, index 0 at TDC.
pub fn slice_revolutions(
    y: &ChannelRecord,
    z: &ChannelRecord,
    t: &TachoTrain,
    p: usize,
) -> Result<Slices> {
    if p < MIN_SAMPLES_PER_REV {
        return Err(Error::Domain(format!(
            "samples per revolution must be >= {MIN_SAMPLES_PER_REV}, got {p}"
        )));
    }
    if y.len() != z.len() || y.sample_rate() != z.sample_rate() {
        return Err(Error::Length(
            "y and z must share length and sample rate".into(),
        ));
    }
    if let Some(&i) = t.dropouts().first() {
        let periods = t.rev_periods();
        return Err(Error::Dropout {
            index: i,
            period: periods[i],
            previous: periods[i - 1],
        });
    }
    let span = y.span();
    let tol = 1e-9 / y.sample_rate();
    let pulses = t.pulse_times();
    let mut out = Slices {
        y: Vec::new(),
        z: Vec::new(),
        periods: Vec::new(),
        starts: Vec::new(),
        dropped: 0,
        filter_mode: FilterMode::Raw,
    };
    for r in 0..pulses.len() - 1 {
        if pulses[r] < -tol || pulses[r + 1] > span + tol {
            out.dropped += 1;
            continue;
        }
        let times: Vec<f64> = (0..p)
            .map(|k| t.time_at(r as f64 + k as f64 / p as f64).clamp(0.0, span))
            .collect();
        out.y.push(resample_linear(y, &times)?);
        out.z.push(resample_linear(z, &times)?);
        out.periods.push(pulses[r + 1] - pulses[r]);
        out.starts.push(pulses[r]);
    }
    if out.is_empty() {
        return Err(Error::Range(
            "no complete revolution lies inside the record".into(),
        ));
    }
    Ok(out)
}

/// Phase-referenced shaft orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub n_revs_averaged: usize,
    pub filter_mode: FilterMode,
    /// rad/s
    pub mean_speed: f64,
}

#[derive(Serialize)]
struct OrbitSidecar {
    n_revs_averaged: usize,
    filter_mode: FilterMode,
    mean_speed_rad_s: f64,
    samples_per_rev: usize,
}

impl Orbit {
    pub fn samples_per_rev(&self) -> usize {
        self.y.len()
    }

    /// RMS distance from the origin.
    pub fn rms_radius(&self) -> f64 {
        let n = self.y.len() as f64;
        (self
            .y
            .iter()
            .zip(&self.z)
            .map(|(a, b)| a * a + b * b)
            .sum::<f64>()
            / n)
            .sqrt()
    }

    /// Orbit rotated by `angle` radians in the y-z plane.
    pub fn rotated(&self, angle: f64) -> Orbit {
        let (s, c) = angle.sin_cos();
        Orbit {
            y: self
                .y
                .iter()
                .zip(&self.z)
                .map(|(y, z)| c * y - s * z)
                .collect(),
            z: self
                .y
                .iter()
                .zip(&self.z)
                .map(|(y, z)| s * y + c * z)
                .collect(),
            ..self.clone()
        }
    }

    /// `phase_index,y,z`
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("phase_index,y,z\n");
        for (i, (y, z)) in self.y.iter().zip(&self.z).enumerate() {
            let _ = writeln!(out, "{i},{},{}", fmt_sig9(*y), fmt_sig9(*z));
        }
        out
    }

    pub fn sidecar_json(&self) -> String {
        serde_json::to_string_pretty(&OrbitSidecar {
            n_revs_averaged: self.n_revs_averaged,
            filter_mode: self.filter_mode,
            mean_speed_rad_s: self.mean_speed,
            samples_per_rev: self.samples_per_rev(),
        })
        .expect("sidecar serializes")
    }
}

/// Pointwise mean of the first `n_revs` slices.
pub fn average_orbit(slices: &Slices, n_revs: usize) -> Result<Orbit> {
    if n_revs == 0 {
        return Err(Error::Domain("n_revs must be >= 1".into()));
    }
    if n_revs > slices.len() {
        return Err(Error::Domain(format!(
            "n_revs = {n_revs} exceeds the {} available revolutions",
            slices.len()
        )));
    }
    // running mean: exact when every slice carries the same value
    let mean = |rows: &[Vec<f64>]| -> Vec<f64> {
        let mut m = rows[0].clone();
        for (i, r) in rows[1..n_revs].iter().enumerate() {
            for (a, b) in m.iter_mut().zip(r) {
                *a += (b - *a) / (i + 2) as f64;
            }
        }
        m
    };
    Ok(Orbit {
        y: mean(&slices.y),
        z: mean(&slices.z),
        n_revs_averaged: n_revs,
        filter_mode: slices.filter_mode,
        mean_speed: slices.mean_speed(n_revs),
    })
}

fn harmonic(x: &[f64], h: usize) -> Complex64 {
    let p = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(k, v)| *v * Complex64::from_polar(1.0, -2.0 * PI * (h * k) as f64 / p))
        .sum::<Complex64>()
        * (2.0 / p)
}

fn synthesize(c: Complex64, h: usize, p: usize) -> Vec<f64> {
    (0..p)
        .map(|k| (c * Complex64::from_polar(1.0, 2.0 * PI * (h * k) as f64 / p as f64)).re)
        .collect()
}

fn check_order(h: usize, p: usize) -> Result<()> {
    if h == 0 {
        return Err(Error::Domain("order must be >= 1".into()));
    }
    if 2 * h >= p {
        return Err(Error::Aliasing {
            order: h,
            samples_per_rev: p,
        });
    }
    Ok(())
}

/// Order-`h` content averaged over all slices, rebuilt as a pure ellipse.
pub fn order_filter(slices: &Slices, h: usize) -> Result<Orbit> {
    if slices.len() < 2 {
        return Err(Error::Length(format!(
            "order filtering needs >= 2 slices, got {}",
            slices.len()
        )));
    }
    let p = slices.samples_per_rev();
    check_order(h, p)?;
    let n = slices.len() as f64;
    let cy = slices.y.iter().map(|s| harmonic(s, h)).sum::<Complex64>() / n;
    let cz = slices.z.iter().map(|s| harmonic(s, h)).sum::<Complex64>() / n;
    Ok(Orbit {
        y: synthesize(cy, h, p),
        z: synthesize(cz, h, p),
        n_revs_averaged: slices.len(),
        filter_mode: FilterMode::OrderFiltered(h),
        mean_speed: slices.mean_speed(slices.len()),
    })
}

/// Order-`h` content of a single orbit.
pub fn order_filter_orbit(o: &Orbit, h: usize) -> Result<Orbit> {
    let p = o.samples_per_rev();
    check_order(h, p)?;
    Ok(Orbit {
        y: synthesize(harmonic(&o.y, h), h, p),
        z: synthesize(harmonic(&o.z, h), h, p),
        filter_mode: FilterMode::OrderFiltered(h),
        ..o.clone()
    })
}

/// Amplitude of order `h` in each direction, (|Y_h|, |Z_h|).
pub fn order_amplitudes(o: &Orbit, h: usize) -> Result<(f64, f64)> {
    check_order(h, o.samples_per_rev())?;
    Ok((harmonic(&o.y, h).norm(), harmonic(&o.z, h).norm()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationSense {
    /// y towards z.
    Ccw,
    Cw,
}

/// Whirl relative to shaft rotation from the orbit's signed area.
pub fn whirl_direction(o: &Orbit, rotation: RotationSense) -> Result<WhirlSense> {
    let r = o.rms_radius();
    if r.is_nan() || r <= 0.0 {
        return Err(Error::DegenerateOrbit("orbit has zero RMS radius".into()));
    }
    let n = o.y.len();
    let area: f64 = (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            o.y[i] * o.z[j] - o.y[j] * o.z[i]
        })
        .sum();
    if area.abs() < 1e-6 * r * r {
        return Ok(WhirlSense::Planar);
    }
    let ccw = area > 0.0;
    Ok(if ccw == (rotation == RotationSense::Ccw) {
        WhirlSense::Forward
    } else {
        WhirlSense::Backward
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Unit;

    fn tacho_from(pulses: &[f64], fs: f64, duration: f64) -> ChannelRecord {
        let n = (duration * fs) as usize + 1;
        let width = 0.002;
        let x = (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                if pulses.iter().any(|p| t >= *p && t < p + width) {
                    5.0
                } else {
                    0.0
                }
            })
            .collect();
        ChannelRecord::new("key", x, fs, Unit::Dimensionless, Role::Tacho).unwrap()
    }

    fn vib(name: &str, f: impl Fn(f64) -> f64, fs: f64, n: usize) -> ChannelRecord {
        ChannelRecord::new(
            name,
            (0..n).map(|i| f(i as f64 / fs)).collect(),
            fs,
            Unit::M,
            Role::Vibration,
        )
        .unwrap()
    }

    #[test]
    fn detects_synthetic_pulses() {
        let t = detect_tacho(
            &tacho_from(&[0.0005, 0.0505, 0.1005], 10_000.0, 0.12),
            2.5,
            0.5,
        )
        .unwrap();
        let periods = t.rev_periods();
        assert_eq!(periods.len(), 2);
        for p in periods {
            assert!((p - 0.05).abs() < 1e-12);
        }
        assert!((t.mean_speed() / (2.0 * PI) - 20.0).abs() < 1e-9);
        assert!((t.mean_speed() * 60.0 / (2.0 * PI) - 1200.0).abs() < 1e-6);
    }

    #[test]
    fn constant_channel_has_no_pulses() {
        let ch = ChannelRecord::new(
            "key",
            vec![0.0; 1000],
            1000.0,
            Unit::Dimensionless,
            Role::Tacho,
        )
        .unwrap();
        assert!(matches!(
            detect_tacho(&ch, 2.5, 0.5),
            Err(Error::InsufficientPulses { found: 0, .. })
        ));
    }

    #[test]
    fn role_is_checked() {
        let ch = vib("y", |t| t, 100.0, 100);
        assert!(matches!(detect_tacho(&ch, 0.5, 0.1), Err(Error::Role(_))));
    }

    #[test]
    fn hysteresis_suppresses_chatter() {
        // noise around the threshold after each edge must not retrigger
        let fs = 1000.0;
        let x: Vec<f64> = (0..1000)
            .map(|i| {
                let k = i % 100;
                match k {
                    0..=9 => 5.0,
                    10..=14 => {
                        if k % 2 == 0 {
                            2.4
                        } else {
                            2.6
                        }
                    }
                    _ => 0.0,
                }
            })
            .collect();
        let ch = ChannelRecord::new("key", x, fs, Unit::Dimensionless, Role::Tacho).unwrap();
        let t = detect_tacho(&ch, 2.5, 1.0).unwrap();
        assert_eq!(t.len(), 9, "{:?}", t.pulse_times());
    }

    #[test]
    fn dropout_is_flagged_and_aborts_slicing() {
        let t = TachoTrain::from_pulse_times(vec![0.0, 0.1, 0.2, 0.4, 0.5], 2.5).unwrap();
        assert_eq!(t.dropouts(), &[2, 3]);
        let y = vib("y", |t| t, 1000.0, 600);
        assert!(matches!(
            slice_revolutions(&y, &y, &t, 64),
            Err(Error::Dropout { index: 2, .. })
        ));
    }

    #[test]
    fn uniform_speed_profile() {
        let t =
            TachoTrain::from_pulse_times((0..10).map(|i| 0.04 * i as f64).collect(), 2.5).unwrap();
        let sp = speed_profile(&t);
        for time in [-1.0, 0.0, 0.13, 0.36, 5.0] {
            assert!((sp.at(time) - 157.07963267948966).abs() < 1e-9);
        }
        let two = speed_profile(&TachoTrain::from_pulse_times(vec![0.0, 0.5], 2.5).unwrap());
        assert!((two.at(-3.0) - 4.0 * PI).abs() < 1e-12 && (two.at(7.0) - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn tdc_anchored_slices() {
        let fs = 5000.0;
        let w = 2.0 * PI * 25.0;
        let y = vib("y", |t| (w * t).cos(), fs, 5001);
        let z = vib("z", |t| (w * t).sin(), fs, 5001);
        let t =
            TachoTrain::from_pulse_times((0..26).map(|i| i as f64 / 25.0).collect(), 2.5).unwrap();
        let s = slice_revolutions(&y, &z, &t, 128).unwrap();
        assert_eq!(s.len(), 25);
        for (yr, zr) in s.y.iter().zip(&s.z) {
            assert!((yr[0] - 1.0).abs() < 1e-3 && zr[0].abs() < 1e-3);
        }
        assert!(matches!(
            slice_revolutions(&y, &z, &t, 16),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn revolutions_past_the_record_are_dropped() {
        let fs = 1000.0;
        let y = vib("y", |t| t, fs, 1001);
        let t = TachoTrain::from_pulse_times(vec![0.1, 0.4, 0.7, 1.0, 1.3], 2.5).unwrap();
        let s = slice_revolutions(&y, &y, &t, 32).unwrap();
        assert_eq!((s.len(), s.dropped), (3, 1));
    }

    fn slices_of(
        f: impl Fn(f64) -> f64 + Copy,
        g: impl Fn(f64) -> f64 + Copy,
        revs: usize,
        p: usize,
    ) -> Slices {
        let mk = |h: &dyn Fn(f64) -> f64| -> Vec<Vec<f64>> {
            (0..revs)
                .map(|_| (0..p).map(|k| h(2.0 * PI * k as f64 / p as f64)).collect())
                .collect()
        };
        Slices {
            y: mk(&f),
            z: mk(&g),
            periods: vec![0.05; revs],
            starts: (0..revs).map(|r| 0.05 * r as f64).collect(),
            dropped: 0,
            filter_mode: FilterMode::Raw,
        }
    }

    #[test]
    fn averaging_identical_slices() {
        let s = slices_of(|p| p.cos() + 0.3, |p| (2.0 * p).sin(), 5, 64);
        let o = average_orbit(&s, 5).unwrap();
        assert_eq!(o.y, s.y[0]);
        assert_eq!(o.z, s.z[0]);
        assert_eq!(average_orbit(&s, 1).unwrap().y, s.y[0]);
        assert!(matches!(average_orbit(&s, 0), Err(Error::Domain(_))));
        assert!((o.mean_speed - 40.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn order_filter_extracts_harmonics() {
        let s = slices_of(
            |p| 3.0 * p.cos() + p.mul_add(0.0, (2.0 * p).cos()),
            |p| p.sin(),
            4,
            128,
        );
        let o1 = order_filter(&s, 1).unwrap();
        let o2 = order_filter(&s, 2).unwrap();
        assert!((order_amplitudes(&o1, 1).unwrap().0 - 3.0).abs() < 1e-6);
        assert!((o1.y.iter().cloned().fold(0.0, f64::max) - 3.0).abs() < 1e-6);
        assert!((order_amplitudes(&o2, 2).unwrap().0 - 1.0).abs() < 1e-6);
        assert_eq!(o1.filter_mode, FilterMode::OrderFiltered(1));
        assert!(matches!(
            order_filter(&s, 64),
            Err(Error::Aliasing { order: 64, .. })
        ));
    }

    #[test]
    fn whirl_examples() {
        let mk = |z: fn(f64) -> f64| {
            let s = slices_of(f64::cos, z, 2, 64);
            average_orbit(&s, 2).unwrap()
        };
        assert_eq!(
            whirl_direction(&mk(f64::sin), RotationSense::Ccw).unwrap(),
            WhirlSense::Forward
        );
        assert_eq!(
            whirl_direction(&mk(|p| -p.sin()), RotationSense::Ccw).unwrap(),
            WhirlSense::Backward
        );
        assert_eq!(
            whirl_direction(&mk(f64::sin), RotationSense::Cw).unwrap(),
            WhirlSense::Backward
        );
        assert_eq!(
            whirl_direction(&mk(f64::cos), RotationSense::Ccw).unwrap(),
            WhirlSense::Planar
        );
        assert!(matches!(
            whirl_direction(&mk(|_| 0.0).rotated(0.0).scaled_zero(), RotationSense::Ccw),
            Err(Error::DegenerateOrbit(_))
        ));
    }

    impl Orbit {
        fn scaled_zero(mut self) -> Self {
            self.y
                .iter_mut()
                .chain(self.z.iter_mut())
                .for_each(|v| *v = 0.0);
            self
        }
    }

    #[test]
    fn export_formats() {
        let o = average_orbit(&slices_of(f64::cos, f64::sin, 2, 32), 2).unwrap();
        let csv = o.to_csv_string();
        assert!(csv.starts_with("phase_index,y,z\n0,"));
        assert_eq!(csv.lines().count(), 33);
        let v: serde_json::Value = serde_json::from_str(&o.sidecar_json()).unwrap();
        assert_eq!(v["filter_mode"], "raw");
        assert_eq!(v["samples_per_rev"], 32);
    }
}
