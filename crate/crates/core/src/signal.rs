//! Uniformly sampled multi-channel vibration records.
//!
//! Everything downstream consumes [`ChannelRecord`]s: calibrated samples with
//! a unit and a role (vibration, tacho or force). This module owns the CSV
//! time-data format, accelerometer calibration, single-sided amplitude
//! spectra, the zero-phase high-pass filter and linear resampling.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard gravity, m/s² per g.
pub const STANDARD_GRAVITY: f64 = 9.80665;

/// Minimum record length accepted by [`fft_spectrum`].
pub const MIN_FFT_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Volt,
    G,
    MPerS2,
    MPerS,
    M,
    Dimensionless,
}

impl Unit {
    pub fn as_str(self) -> &'static str {
        match self {
            Unit::Volt => "volt",
            Unit::G => "g",
            Unit::MPerS2 => "m_per_s2",
            Unit::MPerS => "m_per_s",
            Unit::M => "m",
            Unit::Dimensionless => "dimensionless",
        }
    }

    pub fn is_acceleration(self) -> bool {
        matches!(self, Unit::G | Unit::MPerS2)
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "volt" => Unit::Volt,
            "g" => Unit::G,
            "m_per_s2" => Unit::MPerS2,
            "m_per_s" => Unit::MPerS,
            "m" => Unit::M,
            "dimensionless" => Unit::Dimensionless,
            other => return Err(Error::Format(format!("unknown unit '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Vibration,
    Tacho,
    Force,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Vibration => "vibration",
            Role::Tacho => "tacho",
            Role::Force => "force",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "vibration" => Role::Vibration,
            "tacho" => Role::Tacho,
            "force" => Role::Force,
            other => return Err(Error::Format(format!("unknown role '{other}'"))),
        })
    }
}

/// One uniformly sampled channel in engineering units.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRecord {
    name: String,
    samples: Vec<f64>,
    sample_rate: f64,
    unit: Unit,
    role: Role,
}

impl ChannelRecord {
    pub fn new(
        name: impl Into<String>,
        samples: Vec<f64>,
        sample_rate: f64,
        unit: Unit,
        role: Role,
    ) -> Result<Self> {
        let name = name.into();
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::Domain(format!(
                "channel '{name}': sample_rate must be > 0, got {sample_rate}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::Length(format!("channel '{name}' has no samples")));
        }
        if let Some(row) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::Data {
                row,
                msg: format!("non-finite sample in channel '{name}'"),
            });
        }
        Ok(Self {
            name,
            samples,
            sample_rate,
            unit,
            role,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    /// Time of the last sample relative to the first.
    pub fn span(&self) -> f64 {
        (self.samples.len() - 1) as f64 / self.sample_rate
    }

    /// Same metadata, new samples (validated).
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(
            self.name.clone(),
            samples,
            self.sample_rate,
            self.unit,
            self.role,
        )
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Rejects channels still in volts when physical units are required.
    pub fn require_calibrated(&self) -> Result<()> {
        if self.unit == Unit::Volt && self.role == Role::Vibration {
            return Err(Error::Unit(format!(
                "vibration channel '{}' is uncalibrated (volt)",
                self.name
            )));
        }
        Ok(())
    }
}

/// Channels sharing one time base.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiChannelRecord {
    channels: Vec<ChannelRecord>,
    sample_rate: f64,
    start_time: f64,
}

impl MultiChannelRecord {
    pub fn new(channels: Vec<ChannelRecord>, start_time: f64) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| Error::Length("record has no channels".into()))?;
        let (len, rate) = (first.len(), first.sample_rate());
        for ch in &channels {
            if ch.len() != len {
                return Err(Error::Length(format!(
                    "channel '{}' has {} samples, expected {len}",
                    ch.name(),
                    ch.len()
                )));
            }
            if ch.sample_rate() != rate {
                return Err(Error::Format(format!(
                    "channel '{}' sample rate {} differs from {rate}",
                    ch.name(),
                    ch.sample_rate()
                )));
            }
        }
        if channels.iter().filter(|c| c.role() == Role::Tacho).count() > 1 {
            return Err(Error::Format("more than one tacho channel".into()));
        }
        for (i, a) in channels.iter().enumerate() {
            if channels[..i].iter().any(|b| b.name() == a.name()) {
                return Err(Error::Format(format!(
                    "duplicate channel name '{}'",
                    a.name()
                )));
            }
        }
        Ok(Self {
            channels,
            sample_rate: rate,
            start_time,
        })
    }

    pub fn channels(&self) -> &[ChannelRecord] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<ChannelRecord> {
        self.channels
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn channel(&self, name: &str) -> Option<&ChannelRecord> {
        self.channels.iter().find(|c| c.name() == name)
    }

    pub fn require_channel(&self, name: &str) -> Result<&ChannelRecord> {
        self.channel(name)
            .ok_or_else(|| Error::Format(format!("no channel named '{name}'")))
    }

    pub fn tacho(&self) -> Option<&ChannelRecord> {
        self.channels.iter().find(|c| c.role() == Role::Tacho)
    }

    pub fn with_start_time(mut self, start_time: f64) -> Self {
        self.start_time = start_time;
        self
    }
}

/// Parses the CSV time-data format.
///
/// ```text
/// # sample_rate_hz=2048
/// # channels=y:m:vibration,z:m:vibration,key:dimensionless:tacho
/// 0.1,0.2,0
/// ...
/// ```
pub fn parse_csv(text: &str) -> Result<MultiChannelRecord> {
    let mut lines = text.lines();
    let rate_line = lines
        .next()
        .ok_or_else(|| Error::Format("empty file".into()))?;
    let rate_str = rate_line
        .trim_end()
        .strip_prefix("# sample_rate_hz=")
        .ok_or_else(|| Error::Format("line 1 must be '# sample_rate_hz=<float>'".into()))?;
    let sample_rate: f64 = rate_str
        .trim()
        .parse()
        .map_err(|_| Error::Format(format!("invalid sample rate '{rate_str}'")))?;
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(Error::Format(format!(
            "sample rate must be > 0, got {sample_rate}"
        )));
    }

    let chan_line = lines
        .next()
        .ok_or_else(|| Error::Format("missing channel header".into()))?;
    let spec = chan_line
        .trim_end()
        .strip_prefix("# channels=")
        .ok_or_else(|| Error::Format("line 2 must be '# channels=<name:unit:role>,...'".into()))?;
    let mut headers = Vec::new();
    for field in spec.split(',') {
        let parts: Vec<&str> = field.trim().split(':').collect();
        if parts.len() != 3 || parts[0].is_empty() {
            return Err(Error::Format(format!(
                "malformed channel descriptor '{field}'"
            )));
        }
        let unit: Unit = parts[1].parse()?;
        let role: Role = parts[2].parse()?;
        headers.push((parts[0].to_string(), unit, role));
    }
    if headers.iter().filter(|h| h.2 == Role::Tacho).count() > 1 {
        return Err(Error::Format("at most one tacho channel is allowed".into()));
    }

    let width = headers.len();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); width];
    for (row, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width {
            return Err(Error::Length(format!(
                "row {row} has {} values, expected {width}",
                fields.len()
            )));
        }
        for (col, field) in columns.iter_mut().zip(&fields) {
            let value: f64 = field.trim().parse().map_err(|_| Error::Data {
                row,
                msg: format!("unparsable value '{field}'"),
            })?;
            if !value.is_finite() {
                return Err(Error::Data {
                    row,
                    msg: format!("non-finite value '{field}'"),
                });
            }
            col.push(value);
        }
    }
    if columns[0].is_empty() {
        return Err(Error::Length("file contains no sample rows".into()));
    }

    let channels = headers
        .into_iter()
        .zip(columns)
        .map(|((name, unit, role), samples)| {
            ChannelRecord::new(name, samples, sample_rate, unit, role)
        })
        .collect::<Result<Vec<_>>>()?;
    MultiChannelRecord::new(channels, 0.0)
}

pub fn ingest_csv(path: impl AsRef<Path>) -> Result<MultiChannelRecord> {
    let text = std::fs::read_to_string(path)?;
    parse_csv(&text)
}

/// Formats with nine significant digits.
pub fn fmt_sig9(v: f64) -> String {
    format!("{v:.8e}")
}

pub fn to_csv_string(rec: &MultiChannelRecord) -> String {
    let mut out = String::with_capacity(rec.len() * rec.channels().len() * 16 + 128);
    let _ = writeln!(out, "# sample_rate_hz={}", rec.sample_rate());
    let descr: Vec<String> = rec
        .channels()
        .iter()
        .map(|c| format!("{}:{}:{}", c.name(), c.unit(), c.role()))
        .collect();
    let _ = writeln!(out, "# channels={}", descr.join(","));
    for i in 0..rec.len() {
        for (c, ch) in rec.channels().iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&fmt_sig9(ch.samples()[i]));
        }
        out.push('\n');
    }
    out
}

pub fn write_csv(rec: &MultiChannelRecord, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_csv_string(rec))?;
    Ok(())
}

/// Converts a voltage channel to g (or m/s² with `to_si`).
///
/// `sensitivity_mv_per_g` is the accelerometer sensitivity, e.g. 96.5 mV/g.
pub fn calibrate(
    ch: &ChannelRecord,
    sensitivity_mv_per_g: f64,
    to_si: bool,
) -> Result<ChannelRecord> {
    if ch.unit() != Unit::Volt {
        return Err(Error::Unit(format!(
            "calibrate expects a volt channel, '{}' is {}",
            ch.name(),
            ch.unit()
        )));
    }
    if !(sensitivity_mv_per_g.is_finite() && sensitivity_mv_per_g > 0.0) {
        return Err(Error::Domain(format!(
            "sensitivity must be > 0 mV/g, got {sensitivity_mv_per_g}"
        )));
    }
    let volts_per_g = sensitivity_mv_per_g / 1000.0;
    let (scale, unit) = if to_si {
        (STANDARD_GRAVITY, Unit::MPerS2)
    } else {
        (1.0, Unit::G)
    };
    let samples = ch
        .samples()
        .iter()
        .map(|v| v / volts_per_g * scale)
        .collect();
    ChannelRecord::new(ch.name(), samples, ch.sample_rate(), unit, ch.role())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Rectangular,
    Hann,
}

impl Window {
    /// Periodic (DFT-even) window coefficients.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
                .collect(),
        }
    }

    /// Peak-reading amplitude correction (inverse coherent gain).
    pub fn amplitude_correction(self) -> f64 {
        match self {
            Window::Rectangular => 1.0,
            Window::Hann => 2.0,
        }
    }
}

/// Single-sided amplitude spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub frequencies: Vec<f64>,
    pub magnitudes: Vec<f64>,
    pub phases: Vec<f64>,
    pub resolution: f64,
}

impl SpectrumRecord {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Index of the bin nearest to `freq_hz`.
    pub fn bin_of(&self, freq_hz: f64) -> usize {
        ((freq_hz / self.resolution).round().max(0.0) as usize).min(self.len() - 1)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("frequency_hz,magnitude,phase_rad\n");
        for i in 0..self.len() {
            let _ = writeln!(
                out,
                "{},{},{}",
                fmt_sig9(self.frequencies[i]),
                fmt_sig9(self.magnitudes[i]),
                fmt_sig9(self.phases[i])
            );
        }
        out
    }
}

/// Forward FFT of a real sequence.
pub(crate) fn real_fft(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Wraps an angle into (−π, π].
pub fn wrap_phase(p: f64) -> f64 {
    use std::f64::consts::PI;
    let mut p = p % (2.0 * PI);
    if p <= -PI {
        p += 2.0 * PI;
    } else if p > PI {
        p -= 2.0 * PI;
    }
    p
}

/// Single-sided amplitude spectrum with window amplitude correction.
///
/// Bin `k` sits at `k * sample_rate / N`. Interior bins carry the factor 2 of
/// the one-sided fold; DC and (for even `N`) Nyquist do not.
pub fn fft_spectrum(ch: &ChannelRecord, window: Window) -> Result<SpectrumRecord> {
    let n = ch.len();
    if n < MIN_FFT_LEN {
        return Err(Error::Length(format!(
            "fft_spectrum needs at least {MIN_FFT_LEN} samples, got {n}"
        )));
    }
    let w = window.coefficients(n);
    let xw: Vec<f64> = ch.samples().iter().zip(&w).map(|(x, w)| x * w).collect();
    let spec = real_fft(&xw);
    let corr = window.amplitude_correction();
    let n_bins = n / 2 + 1;
    let resolution = ch.sample_rate() / n as f64;
    let mut frequencies = Vec::with_capacity(n_bins);
    let mut magnitudes = Vec::with_capacity(n_bins);
    let mut phases = Vec::with_capacity(n_bins);
    for (k, x) in spec.iter().take(n_bins).enumerate() {
        let fold = if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
            1.0
        } else {
            2.0
        };
        frequencies.push(k as f64 * resolution);
        magnitudes.push(fold * x.norm() / n as f64 * corr);
        phases.push(wrap_phase(x.arg()));
    }
    Ok(SpectrumRecord {
        frequencies,
        magnitudes,
        phases,
        resolution,
    })
}

/// Second-order section in transposed direct form II.
#[derive(Debug, Clone, Copy)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    fn highpass(cutoff: f64, sample_rate: f64, q: f64) -> Self {
        let w0 = 2.0 * std::f64::consts::PI * cutoff / sample_rate;
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / (2.0 * q);
        let a0 = 1.0 + alpha;
        let b0 = (1.0 + cos) / 2.0 / a0;
        Biquad {
            b: [b0, -2.0 * b0, b0],
            a: [-2.0 * cos / a0, (1.0 - alpha) / a0],
        }
    }

    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    /// Filters `x` in place starting from the steady state for a constant
    /// input equal to `x[0]`.
    fn run(&self, x: &mut [f64]) {
        let Some(&x0) = x.first() else { return };
        let g = self.dc_gain();
        let mut s2 = (self.b[2] - self.a[1] * g) * x0;
        let mut s1 = (g - self.b[0]) * x0;
        for v in x.iter_mut() {
            let input = *v;
            let y = self.b[0] * input + s1;
            s1 = self.b[1] * input - self.a[0] * y + s2;
            s2 = self.b[2] * input - self.a[1] * y;
            *v = y;
        }
    }
}

/// 4th-order Butterworth sections (Q of each pole pair).
fn butterworth4_highpass(cutoff: f64, sample_rate: f64) -> [Biquad; 2] {
    use std::f64::consts::PI;
    let q1 = 1.0 / (2.0 * (PI / 8.0).cos());
    let q2 = 1.0 / (2.0 * (3.0 * PI / 8.0).cos());
    [
        Biquad::highpass(cutoff, sample_rate, q1),
        Biquad::highpass(cutoff, sample_rate, q2),
    ]
}

/// Zero-phase 4th-order Butterworth high-pass (forward-backward).
///
/// The record is extended at both ends by odd reflection and each pass starts
/// in the steady state of its first input sample, so a DC offset produces no
/// start-up transient.
pub fn highpass_filter(ch: &ChannelRecord, cutoff: f64) -> Result<ChannelRecord> {
    let nyquist = ch.sample_rate() / 2.0;
    if !(cutoff > 0.0 && cutoff < nyquist) {
        return Err(Error::Domain(format!(
            "high-pass cutoff must lie in (0, {nyquist}) Hz, got {cutoff}"
        )));
    }
    let x = ch.samples();
    let n = x.len();
    if n < 2 {
        return ch.with_samples(x.to_vec());
    }
    let settle = (4.0 * ch.sample_rate() / cutoff).ceil() as usize;
    let pad = settle.clamp(1, n - 1);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

    let sections = butterworth4_highpass(cutoff, ch.sample_rate());
    for s in &sections {
        s.run(&mut ext);
    }
    ext.reverse();
    for s in &sections {
        s.run(&mut ext);
    }
    ext.reverse();
    ch.with_samples(ext[pad..pad + n].to_vec())
}

/// Linear interpolation of `ch` at `times` (seconds from the first sample).
pub fn resample_linear(ch: &ChannelRecord, times: &[f64]) -> Result<Vec<f64>> {
    let x = ch.samples();
    let fs = ch.sample_rate();
    let span = ch.span();
    let tol = 1e-9 / fs;
    let mut prev = f64::NEG_INFINITY;
    times
        .iter()
        .map(|&t| {
            if !(t >= -tol && t <= span + tol) {
                return Err(Error::Range(format!(
                    "time {t} s outside record span [0, {span}] s"
                )));
            }
            if t < prev {
                return Err(Error::Range(format!("times not ascending at {t} s")));
            }
            prev = t;
            let pos = (t * fs).clamp(0.0, (x.len() - 1) as f64);
            let i = pos.floor() as usize;
            if i + 1 >= x.len() {
                return Ok(x[x.len() - 1]);
            }
            let frac = pos - i as f64;
            Ok(if frac == 0.0 {
                x[i]
            } else {
                x[i] + (x[i + 1] - x[i]) * frac
            })
        })
        .collect()
}

/// Root mean square of a slice.
pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ch(samples: Vec<f64>, fs: f64) -> ChannelRecord {
        ChannelRecord::new("x", samples, fs, Unit::M, Role::Vibration).unwrap()
    }

    fn volt(samples: Vec<f64>) -> ChannelRecord {
        ChannelRecord::new("acc", samples, 1000.0, Unit::Volt, Role::Vibration).unwrap()
    }

    /// O(N²) DFT used as an independent reference.
    fn direct_dft_amplitude(x: &[f64], w: &[f64], k: usize) -> f64 {
        let n = x.len();
        let (mut re, mut im) = (0.0, 0.0);
        for i in 0..n {
            let arg = -2.0 * PI * (k * i) as f64 / n as f64;
            re += x[i] * w[i] * arg.cos();
            im += x[i] * w[i] * arg.sin();
        }
        (re * re + im * im).sqrt()
    }

    #[test]
    fn parses_three_channel_file() {
        let mut text = String::from("# sample_rate_hz=2048\n# channels=y:m:vibration,z:m:vibration,key:dimensionless:tacho\n");
        for i in 0..4096 {
            text.push_str(&format!(
                "{},{},{}\n",
                i as f64 * 1e-6,
                -(i as f64) * 1e-6,
                (i % 2) as f64
            ));
        }
        let rec = parse_csv(&text).unwrap();
        assert_eq!(rec.channels().len(), 3);
        assert!(rec.channels().iter().all(|c| c.len() == 4096));
        assert_eq!(rec.sample_rate(), 2048.0);
        assert_eq!(rec.tacho().unwrap().name(), "key");
    }

    #[test]
    fn ragged_rows_are_a_length_error() {
        let text = "# sample_rate_hz=100\n# channels=a:m:vibration,b:m:vibration\n1,2\n3\n";
        assert!(matches!(parse_csv(text), Err(Error::Length(_))));
    }

    #[test]
    fn second_tacho_is_a_format_error() {
        let text = "# sample_rate_hz=100\n# channels=k1:volt:tacho,k2:volt:tacho\n1,2\n";
        assert!(matches!(parse_csv(text), Err(Error::Format(_))));
    }

    #[test]
    fn non_finite_value_reports_row() {
        let text = "# sample_rate_hz=100\n# channels=a:m:vibration\n1\n2\nNaN\n";
        match parse_csv(text) {
            Err(Error::Data { row, .. }) => assert_eq!(row, 2),
            other => panic!("expected data error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_header_is_a_format_error() {
        assert!(matches!(
            parse_csv("sample_rate=1\n"),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            parse_csv("# sample_rate_hz=100\n# channels=a:furlong:vibration\n1\n"),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn calibration_examples() {
        let g = calibrate(&volt(vec![0.0965, 0.0]), 96.5, false).unwrap();
        assert!((g.samples()[0] - 1.0).abs() < 1e-12);
        assert_eq!(g.samples()[1], 0.0);
        assert_eq!(g.unit(), Unit::G);
        let g2 = calibrate(&volt(vec![0.1992]), 99.6, false).unwrap();
        assert!((g2.samples()[0] - 2.0).abs() < 1e-12);
        let si = calibrate(&volt(vec![0.0965]), 96.5, true).unwrap();
        assert!((si.samples()[0] - STANDARD_GRAVITY).abs() < 1e-9);
        assert_eq!(si.unit(), Unit::MPerS2);
    }

    #[test]
    fn calibration_errors() {
        let c = ch(vec![1.0], 10.0);
        assert!(matches!(calibrate(&c, 96.5, false), Err(Error::Unit(_))));
        assert!(matches!(
            calibrate(&volt(vec![1.0]), 0.0, false),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn sine_on_bin_rectangular() {
        let (n, fs) = (1024, 1024.0);
        let x: Vec<f64> = (0..n)
            .map(|i| 2.0 * (2.0 * PI * 50.0 * i as f64 / fs).sin())
            .collect();
        let s = fft_spectrum(&ch(x, fs), Window::Rectangular).unwrap();
        assert_eq!(s.resolution, 1.0);
        assert!((s.magnitudes[50] - 2.0).abs() < 1e-9);
        for (k, m) in s.magnitudes.iter().enumerate() {
            if k != 50 {
                assert!(*m < 1e-9, "bin {k} = {m}");
            }
        }
    }

    #[test]
    fn dc_bin() {
        let s = fft_spectrum(&ch(vec![3.0; 64], 64.0), Window::Rectangular).unwrap();
        assert!((s.magnitudes[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn hann_between_bins_within_scalloping_bound() {
        let (n, fs) = (512usize, 512.0);
        for offset in [0.1, 0.25, 0.4, 0.45] {
            let f = 40.0 + offset;
            let x: Vec<f64> = (0..n)
                .map(|i| 1.5 * (2.0 * PI * f * i as f64 / fs).cos())
                .collect();
            let s = fft_spectrum(&ch(x.clone(), fs), Window::Hann).unwrap();
            let w = Window::Hann.coefficients(n);
            let (kmax, peak) = s
                .magnitudes
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(k, m)| (k, *m))
                .unwrap();
            let oracle = 2.0 * direct_dft_amplitude(&x, &w, kmax) / n as f64 * 2.0;
            assert!((peak - oracle).abs() < 1e-9 * oracle);
            assert!((peak - 1.5).abs() <= 0.15 * 1.5, "offset {offset}: {peak}");
        }
    }

    #[test]
    fn short_record_rejected() {
        assert!(matches!(
            fft_spectrum(&ch(vec![1.0; 7], 10.0), Window::Hann),
            Err(Error::Length(_))
        ));
    }

    #[test]
    fn phases_in_half_open_interval() {
        let x: Vec<f64> = (0..64).map(|i| -((i % 5) as f64)).collect();
        let s = fft_spectrum(&ch(x, 64.0), Window::Rectangular).unwrap();
        assert!(s.phases.iter().all(|p| *p > -PI && *p <= PI));
    }

    #[test]
    fn highpass_removes_offset_keeps_passband() {
        let fs = 2048.0;
        let x: Vec<f64> = (0..4096)
            .map(|i| 5.0 + (2.0 * PI * 50.0 * i as f64 / fs).sin())
            .collect();
        let y = highpass_filter(&ch(x, fs), 10.0).unwrap();
        let mean = y.samples().iter().sum::<f64>() / y.len() as f64;
        assert!(mean.abs() < 0.05, "mean {mean}");
        let s = fft_spectrum(&y, Window::Rectangular).unwrap();
        let amp_db = 20.0 * s.magnitudes[s.bin_of(50.0)].log10();
        assert!(amp_db.abs() < 1.0, "{amp_db} dB");
    }

    #[test]
    fn highpass_attenuation_at_half_cutoff() {
        let fs = 1024.0;
        let n = 16384;
        let x: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * 5.0 * i as f64 / fs).sin())
            .collect();
        let y = highpass_filter(&ch(x, fs), 10.0).unwrap();
        let s = fft_spectrum(&y, Window::Rectangular).unwrap();
        let db = 20.0 * s.magnitudes[s.bin_of(5.0)].log10();
        assert!(db <= -20.0, "{db} dB");
    }

    #[test]
    fn highpass_zero_and_domain() {
        let z = highpass_filter(&ch(vec![0.0; 100], 100.0), 5.0).unwrap();
        assert!(z.samples().iter().all(|v| *v == 0.0));
        assert!(matches!(
            highpass_filter(&ch(vec![0.0; 100], 100.0), 50.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            highpass_filter(&ch(vec![0.0; 100], 100.0), 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn resample_examples() {
        let c = ch(vec![0.0, 1.0], 1.0);
        assert_eq!(resample_linear(&c, &[0.5]).unwrap(), vec![0.5]);
        let d = ch(vec![3.0, -1.0, 7.0], 2.0);
        assert_eq!(resample_linear(&d, &[0.5]).unwrap(), vec![-1.0]);
        assert!(matches!(resample_linear(&c, &[1.5]), Err(Error::Range(_))));
    }

    #[test]
    fn resample_ramp_is_exact() {
        let fs = 100.0;
        let x: Vec<f64> = (0..1000).map(|i| i as f64 / fs).collect();
        let c = ch(x, fs);
        let mut times: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.7371) % c.span()).collect();
        times.sort_by(f64::total_cmp);
        let y = resample_linear(&c, &times).unwrap();
        let max_err = y
            .iter()
            .zip(&times)
            .map(|(v, t)| (v - t).abs())
            .fold(0.0, f64::max);
        assert!(max_err < 1e-12, "{max_err}");
    }
}
