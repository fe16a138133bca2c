//! Order spectra, overall levels, rule-based fault classification and the
//! overall-level trend store.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write as _};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbit::{slice_revolutions, TachoTrain, DEFAULT_SAMPLES_PER_REV};
use crate::rotor::ModalModel;
use crate::signal::{real_fft, ChannelRecord, Unit, Window, STANDARD_GRAVITY};

/// Revolutions per analysis block; sets the 0.25-order resolution.
pub const REVS_PER_BLOCK: usize = 4;
pub const MIN_REVOLUTIONS: usize = 8;
pub const MIN_MAX_ORDER: f64 = 8.0;

/// Amplitude per order, in the channel's unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderSpectrum {
    pub orders: Vec<f64>,
    pub amplitudes: Vec<f64>,
    /// rad/s
    pub mean_speed: f64,
    pub channel_name: String,
}

impl OrderSpectrum {
    /// Amplitude at `order`, 0 if the order is not on the grid.
    pub fn amplitude(&self, order: f64) -> f64 {
        let step = 1.0 / REVS_PER_BLOCK as f64;
        let k = (order / step).round();
        if (k * step - order).abs() > 1e-9 || k < 0.0 {
            return 0.0;
        }
        self.amplitudes.get(k as usize).copied().unwrap_or(0.0)
    }

    pub fn max_order(&self) -> f64 {
        self.orders.last().copied().unwrap_or(0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            amplitudes: self.amplitudes.iter().map(|a| a * c).collect(),
            ..self.clone()
        }
    }

    /// `order,amplitude`
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("order,amplitude\n");
        for (o, a) in self.orders.iter().zip(&self.amplitudes) {
            out.push_str(&format!("{o},{}\n", crate::signal::fmt_sig9(*a)));
        }
        out
    }
}

/// Order magnitudes from phase-domain resampled revolutions.
///
/// Consecutive groups of four revolutions form one block whose DFT bins fall
/// on quarter orders; block magnitudes are averaged.
pub fn order_spectrum(y: &ChannelRecord, t: &TachoTrain, max_order: f64) -> Result<OrderSpectrum> {
    y.require_calibrated()?;
    if !(max_order.is_finite() && max_order >= MIN_MAX_ORDER) {
        return Err(Error::Domain(format!(
            "max_order must be >= {MIN_MAX_ORDER}, got {max_order}"
        )));
    }
    let p = DEFAULT_SAMPLES_PER_REV.max(4 * max_order.ceil() as usize);
    let slices = slice_revolutions(y, y, t, p)?;
    if slices.len() < MIN_REVOLUTIONS {
        return Err(Error::Length(format!(
            "order spectrum needs >= {MIN_REVOLUTIONS} complete revolutions, got {}",
            slices.len()
        )));
    }
    let blocks = slices.len() / REVS_PER_BLOCK;
    let len = REVS_PER_BLOCK * p;
    let bins = (max_order * REVS_PER_BLOCK as f64).round() as usize + 1;
    let mut amplitudes = vec![0.0; bins];
    for b in 0..blocks {
        let block: Vec<f64> = slices.y[b * REVS_PER_BLOCK..(b + 1) * REVS_PER_BLOCK].concat();
        let spec = real_fft(&block);
        for (k, a) in amplitudes.iter_mut().enumerate() {
            let scale = if k == 0 { 1.0 } else { 2.0 } / len as f64;
            *a += spec[k].norm() * scale / blocks as f64;
        }
    }
    let used = blocks * REVS_PER_BLOCK;
    Ok(OrderSpectrum {
        orders: (0..bins)
            .map(|k| k as f64 / REVS_PER_BLOCK as f64)
            .collect(),
        amplitudes,
        mean_speed: 2.0 * PI * used as f64 / slices.periods[..used].iter().sum::<f64>(),
        channel_name: y.name().to_string(),
    })
}

/// Physical quantity for an overall level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// Band RMS of the channel as recorded.
    AsRecorded,
    Displacement,
    Velocity,
    Acceleration,
}

fn derivative_order(unit: Unit) -> Option<i32> {
    match unit {
        Unit::M => Some(0),
        Unit::MPerS => Some(1),
        Unit::MPerS2 | Unit::G => Some(2),
        _ => None,
    }
}

/// Band-limited RMS by Hann-windowed spectral summation, SI units.
///
/// For `Displacement`/`Velocity`/`Acceleration` the spectrum is integrated
/// or differentiated by powers of `2πf`; channels in g are converted to
/// m/s² first.
pub fn overall_level(ch: &ChannelRecord, band: (f64, f64), quantity: Quantity) -> Result<f64> {
    ch.require_calibrated()?;
    let (lo, hi) = band;
    let nyquist = 0.5 * ch.sample_rate();
    if !(lo > 0.0 && lo < hi && hi <= nyquist) {
        return Err(Error::Domain(format!(
            "band [{lo}, {hi}] Hz must lie within (0, {nyquist}] Hz"
        )));
    }
    let (scale, power) = match quantity {
        Quantity::AsRecorded => (1.0, 0),
        q => {
            let from = derivative_order(ch.unit()).ok_or_else(|| {
                Error::Unit(format!("unit {} has no kinematic quantity", ch.unit()))
            })?;
            let to = match q {
                Quantity::Displacement => 0,
                Quantity::Velocity => 1,
                _ => 2,
            };
            let g = if ch.unit() == Unit::G {
                STANDARD_GRAVITY
            } else {
                1.0
            };
            (g, to - from)
        }
    };
    let n = ch.len();
    let w = Window::Hann.coefficients(n);
    let energy: f64 = w.iter().map(|v| v * v).sum();
    let xw: Vec<f64> = ch
        .samples()
        .iter()
        .zip(&w)
        .map(|(x, w)| x * w * scale)
        .collect();
    let spec: Vec<Complex64> = real_fft(&xw);
    let df = ch.sample_rate() / n as f64;
    let mut sum = 0.0;
    for (k, x) in spec.iter().enumerate() {
        let f = k as f64 * df;
        if f < lo || f > hi {
            continue;
        }
        let gain = (2.0 * PI * f).powi(power);
        let edge = k == 0 || 2 * k == n;
        sum += x.norm_sqr() * gain * gain * if edge { 1.0 } else { 2.0 };
    }
    Ok((sum / (n as f64 * energy)).sqrt())
}

/// Overall velocity (mm/s), acceleration (g) and displacement (µm) RMS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverallLevels {
    pub v_rms_mm_s: f64,
    pub a_rms_g: f64,
    pub d_rms_um: f64,
}

pub fn overall_levels(ch: &ChannelRecord, band: (f64, f64)) -> Result<OverallLevels> {
    Ok(OverallLevels {
        v_rms_mm_s: overall_level(ch, band, Quantity::Velocity)? * 1e3,
        a_rms_g: overall_level(ch, band, Quantity::Acceleration)? / STANDARD_GRAVITY,
        d_rms_um: overall_level(ch, band, Quantity::Displacement)? * 1e6,
    })
}

/// Every threshold used by the rules and the trend alarms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RuleConfig {
    pub unbalance_1x_fraction_min: f64,
    pub unbalance_2x_ratio_max: f64,
    pub harmonic_sum_max_order: usize,
    pub misalignment_2x_ratio_min: f64,
    pub misalignment_noise_floor_factor: f64,
    pub looseness_harmonic_count_min: usize,
    pub looseness_harmonic_fraction: f64,
    pub looseness_subharmonic_ratio_min: f64,
    pub resonance_speed_band: f64,
    pub resonance_amplification_min: f64,
    pub resonance_reference_separation: f64,
    pub resonance_no_reference_confidence_cap: f64,
    pub trend_alert_factor: f64,
    pub trend_danger_factor: f64,
    pub trend_danger_absolute_mm_s: f64,
}

impl Default for RuleConfig {
    fn default() -> Self {
        Self {
            unbalance_1x_fraction_min: 0.7,
            unbalance_2x_ratio_max: 0.3,
            harmonic_sum_max_order: 8,
            misalignment_2x_ratio_min: 0.5,
            misalignment_noise_floor_factor: 5.0,
            looseness_harmonic_count_min: 4,
            looseness_harmonic_fraction: 0.1,
            looseness_subharmonic_ratio_min: 0.2,
            resonance_speed_band: 0.10,
            resonance_amplification_min: 3.0,
            resonance_reference_separation: 0.25,
            resonance_no_reference_confidence_cap: 0.5,
            trend_alert_factor: 2.0,
            trend_danger_factor: 4.0,
            trend_danger_absolute_mm_s: 11.2,
        }
    }
}

impl RuleConfig {
    /// Loads `rules.json`; a missing file yields the defaults.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        match fs::read_to_string(path.as_ref()) {
            Ok(text) => Ok(serde_json::from_str(&text)?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(e.into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    Unbalance,
    Misalignment,
    Looseness,
    Resonance,
}

impl Fault {
    pub const ALL: [Fault; 4] = [
        Fault::Unbalance,
        Fault::Misalignment,
        Fault::Looseness,
        Fault::Resonance,
    ];
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fault::Unbalance => "unbalance",
            Fault::Misalignment => "misalignment",
            Fault::Looseness => "looseness",
            Fault::Resonance => "resonance",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultVerdict {
    pub detected: bool,
    pub confidence: f64,
    pub evidence: String,
    /// False when the rule lacked the inputs it needs.
    pub evaluable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultReport {
    pub verdicts: BTreeMap<Fault, FaultVerdict>,
    pub overall_levels: BTreeMap<String, f64>,
}

impl FaultReport {
    pub fn detected(&self) -> Vec<Fault> {
        self.verdicts
            .iter()
            .filter(|(_, v)| v.detected)
            .map(|(f, _)| *f)
            .collect()
    }
}

/// Order-1 amplitude measured at another speed, for the resonance rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceReference {
    /// rad/s
    pub speed: f64,
    pub order1_amplitude: f64,
}

/// Margin above a `≥` threshold, relative to the threshold.
fn above(value: f64, threshold: f64) -> f64 {
    if threshold == 0.0 {
        if value >= 0.0 {
            1.0
        } else {
            -1.0
        }
    } else {
        (value - threshold) / threshold.abs()
    }
}

/// Margin below a `<` threshold.
fn below(value: f64, threshold: f64) -> f64 {
    if threshold == 0.0 {
        -1.0
    } else {
        (threshold - value) / threshold.abs()
    }
}

fn verdict(margin: f64, detected: bool, evidence: String) -> FaultVerdict {
    FaultVerdict {
        detected,
        confidence: (0.5 + margin).clamp(0.0, 1.0),
        evidence,
        evaluable: true,
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Applies the rule set to an order spectrum.
///
/// Resonance, when detected, takes precedence over unbalance: both look at
/// a dominant 1X, and amplification near a natural frequency explains it.
pub fn diagnose(
    os: &OrderSpectrum,
    modal: Option<&ModalModel>,
    reference: Option<&ResonanceReference>,
    overall: BTreeMap<String, f64>,
    cfg: &RuleConfig,
) -> FaultReport {
    let mut verdicts = BTreeMap::new();
    let a1 = os.amplitude(1.0);
    if a1.is_nan() || a1 <= 0.0 || os.amplitudes.iter().all(|a| *a == 0.0) {
        for f in Fault::ALL {
            verdicts.insert(
                f,
                FaultVerdict {
                    detected: false,
                    confidence: 0.0,
                    evidence: "no 1X content".into(),
                    evaluable: f != Fault::Resonance || modal.is_some(),
                },
            );
        }
        return FaultReport {
            verdicts,
            overall_levels: overall,
        };
    }
    let a2 = os.amplitude(2.0);
    let r21 = a2 / a1;

    let family: f64 = (1..=cfg.harmonic_sum_max_order)
        .map(|h| os.amplitude(h as f64))
        .sum();
    let fraction = a1 / family;
    let m_u =
        above(fraction, cfg.unbalance_1x_fraction_min).min(below(r21, cfg.unbalance_2x_ratio_max));
    let mut unbalance = verdict(
        m_u,
        m_u >= 0.0 && fraction >= cfg.unbalance_1x_fraction_min && r21 < cfg.unbalance_2x_ratio_max,
        format!(
            "A(1X)/sum A(1..{}X) = {fraction:.4} (min {}), A(2X)/A(1X) = {r21:.4} (max {})",
            cfg.harmonic_sum_max_order, cfg.unbalance_1x_fraction_min, cfg.unbalance_2x_ratio_max
        ),
    );

    let off: Vec<f64> = os
        .orders
        .iter()
        .zip(&os.amplitudes)
        .filter(|(o, _)| o.fract() != 0.0 && (**o - 0.5).abs() > 1e-9)
        .map(|(_, a)| *a)
        .collect();
    let floor = median(off);
    let floor_ratio = if floor > 0.0 {
        a1 / floor
    } else {
        f64::INFINITY
    };
    let m_m = above(r21, cfg.misalignment_2x_ratio_min)
        .min(above(floor_ratio, cfg.misalignment_noise_floor_factor).min(1.0));
    let misalignment = verdict(
        m_m,
        r21 >= cfg.misalignment_2x_ratio_min && floor_ratio >= cfg.misalignment_noise_floor_factor,
        format!(
            "A(2X)/A(1X) = {r21:.4} (min {}), A(1X)/median off-order = {floor_ratio:.4} (min {})",
            cfg.misalignment_2x_ratio_min, cfg.misalignment_noise_floor_factor
        ),
    );

    let strong = (1..=os.max_order().floor() as usize)
        .filter(|h| os.amplitude(*h as f64) >= cfg.looseness_harmonic_fraction * a1)
        .count();
    let sub = os.amplitude(0.5) / a1;
    let m_l = above(strong as f64, cfg.looseness_harmonic_count_min as f64)
        .max(above(sub, cfg.looseness_subharmonic_ratio_min));
    let looseness = verdict(
        m_l,
        strong >= cfg.looseness_harmonic_count_min || sub >= cfg.looseness_subharmonic_ratio_min,
        format!(
            "{strong} integer orders >= {} A(1X) (min {}), A(0.5X)/A(1X) = {sub:.4} (min {})",
            cfg.looseness_harmonic_fraction,
            cfg.looseness_harmonic_count_min,
            cfg.looseness_subharmonic_ratio_min
        ),
    );

    let resonance = match modal {
        None => FaultVerdict {
            detected: false,
            confidence: 0.0,
            evidence: "not evaluable: no modal model supplied".into(),
            evaluable: false,
        },
        Some(m) => {
            let (wr, dist) = m
                .omega
                .iter()
                .filter(|w| **w > 0.0)
                .map(|w| (*w, (os.mean_speed - w).abs() / w))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap_or((f64::NAN, f64::INFINITY));
            let m_speed = below(dist, cfg.resonance_speed_band);
            let near = dist <= cfg.resonance_speed_band;
            let usable = reference.filter(|r| {
                (r.speed - os.mean_speed).abs()
                    >= cfg.resonance_reference_separation * os.mean_speed
                    && r.order1_amplitude > 0.0
            });
            match usable {
                Some(r) => {
                    let amp = a1 / r.order1_amplitude;
                    let m_r = m_speed.min(above(amp, cfg.resonance_amplification_min));
                    verdict(
                        m_r,
                        near && amp >= cfg.resonance_amplification_min,
                        format!(
                            "speed {:.3} rad/s is {:.2}% from omega_r = {wr:.3} rad/s (max {}%), A(1X) = {amp:.4} x reference at {:.3} rad/s (min {})",
                            os.mean_speed,
                            100.0 * dist,
                            100.0 * cfg.resonance_speed_band,
                            r.speed,
                            cfg.resonance_amplification_min
                        ),
                    )
                }
                None => {
                    let mut v = verdict(
                        m_speed,
                        near,
                        format!(
                            "speed {:.3} rad/s is {:.2}% from omega_r = {wr:.3} rad/s (max {}%); no reference at >= {}% speed separation, amplification unverified",
                            os.mean_speed,
                            100.0 * dist,
                            100.0 * cfg.resonance_speed_band,
                            100.0 * cfg.resonance_reference_separation
                        ),
                    );
                    v.confidence = v.confidence.min(cfg.resonance_no_reference_confidence_cap);
                    v
                }
            }
        }
    };

    if resonance.detected && unbalance.detected {
        unbalance.detected = false;
        unbalance.confidence = unbalance.confidence.min(0.5);
        unbalance.evidence.push_str("; 1X attributed to resonance");
    }
    verdicts.insert(Fault::Unbalance, unbalance);
    verdicts.insert(Fault::Misalignment, misalignment);
    verdicts.insert(Fault::Looseness, looseness);
    verdicts.insert(Fault::Resonance, resonance);
    FaultReport {
        verdicts,
        overall_levels: overall,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlarmStatus {
    Ok,
    Alert,
    Danger,
}

/// One line of the trend store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrendEntry {
    /// s since the Unix epoch.
    pub ts: f64,
    pub point_id: String,
    pub v_rms_mm_s: f64,
    pub a_rms_g: f64,
    pub d_rms_um: f64,
    /// rad/s
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_rad_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order1_amplitude: Option<f64>,
}

/// Append-only JSON-lines trend history plus per-point baselines.
#[derive(Debug, Clone)]
pub struct TrendStore {
    dir: PathBuf,
}

pub const TREND_FILE: &str = "trend.jsonl";
pub const BASELINE_FILE: &str = "baselines.json";

impl TrendStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn entries_path(&self) -> PathBuf {
        self.dir.join(TREND_FILE)
    }

    pub fn baselines_path(&self) -> PathBuf {
        self.dir.join(BASELINE_FILE)
    }

    pub fn entries(&self) -> Result<Vec<TrendEntry>> {
        let file = match File::open(self.entries_path()) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        BufReader::new(file)
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
            .map(|(i, l)| {
                serde_json::from_str(&l?).map_err(|e| Error::Data {
                    row: i + 1,
                    msg: e.to_string(),
                })
            })
            .collect()
    }

    pub fn entries_for(&self, point_id: &str) -> Result<Vec<TrendEntry>> {
        Ok(self
            .entries()?
            .into_iter()
            .filter(|e| e.point_id == point_id)
            .collect())
    }

    pub fn baselines(&self) -> Result<BTreeMap<String, TrendEntry>> {
        match fs::read_to_string(self.baselines_path()) {
            Ok(t) => Ok(serde_json::from_str(&t)?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(BTreeMap::new()),
            Err(e) => Err(e.into()),
        }
    }

    /// Appends under an exclusive lock; the first entry of a point becomes
    /// its baseline.
    pub fn append(&self, entry: &TrendEntry) -> Result<()> {
        if !entry.ts.is_finite() || entry.point_id.is_empty() {
            return Err(Error::Domain(
                "entry needs a finite ts and a point_id".into(),
            ));
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .read(true)
            .open(self.entries_path())?;
        file.lock()?;
        let last = self.entries_for(&entry.point_id)?.last().map(|e| e.ts);
        if let Some(prev) = last {
            if entry.ts < prev {
                return Err(Error::Ordering(format!(
                    "timestamp {} precedes the last entry {prev} for point '{}'",
                    entry.ts, entry.point_id
                )));
            }
        }
        let mut line = serde_json::to_string(entry)?;
        line.push('\n');
        file.write_all(line.as_bytes())?;
        file.sync_data()?;
        let mut baselines = self.baselines()?;
        if !baselines.contains_key(&entry.point_id) {
            baselines.insert(entry.point_id.clone(), entry.clone());
            let tmp = self.dir.join(format!("{BASELINE_FILE}.tmp"));
            fs::write(&tmp, serde_json::to_string_pretty(&baselines)?)?;
            fs::rename(tmp, self.baselines_path())?;
        }
        Ok(())
    }

    /// Alarm state of the latest entry against the baseline.
    pub fn evaluate(&self, point_id: &str, cfg: &RuleConfig) -> Result<AlarmStatus> {
        let latest = self
            .entries_for(point_id)?
            .pop()
            .ok_or_else(|| Error::Index(format!("no trend entries for point '{point_id}'")))?;
        let base = self.baselines()?.get(point_id).map(|b| b.v_rms_mm_s);
        Ok(alarm_status(latest.v_rms_mm_s, base, cfg))
    }

    /// Most recent entry of `point_id` usable as a resonance reference at
    /// `speed`.
    pub fn resonance_reference(
        &self,
        point_id: &str,
        speed: f64,
        cfg: &RuleConfig,
    ) -> Result<Option<ResonanceReference>> {
        Ok(self.entries_for(point_id)?.iter().rev().find_map(|e| {
            let (s, a) = (e.speed_rad_s?, e.order1_amplitude?);
            ((s - speed).abs() >= cfg.resonance_reference_separation * speed).then_some(
                ResonanceReference {
                    speed: s,
                    order1_amplitude: a,
                },
            )
        }))
    }
}

pub fn alarm_status(latest_mm_s: f64, baseline_mm_s: Option<f64>, cfg: &RuleConfig) -> AlarmStatus {
    let ratio = baseline_mm_s.filter(|b| *b > 0.0).map(|b| latest_mm_s / b);
    if latest_mm_s >= cfg.trend_danger_absolute_mm_s
        || ratio.is_some_and(|r| r >= cfg.trend_danger_factor)
    {
        AlarmStatus::Danger
    } else if ratio.is_some_and(|r| r >= cfg.trend_alert_factor) {
        AlarmStatus::Alert
    } else {
        AlarmStatus::Ok
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Role;

    fn spectrum(pairs: &[(f64, f64)]) -> OrderSpectrum {
        let orders: Vec<f64> = (0..=40).map(|k| k as f64 * 0.25).collect();
        let amplitudes = orders
            .iter()
            .map(|o| {
                pairs
                    .iter()
                    .find(|(p, _)| (p - o).abs() < 1e-9)
                    .map_or(0.0, |(_, a)| *a)
            })
            .collect();
        OrderSpectrum {
            orders,
            amplitudes,
            mean_speed: 100.0,
            channel_name: "y".into(),
        }
    }

    fn run(os: &OrderSpectrum) -> FaultReport {
        diagnose(os, None, None, BTreeMap::new(), &RuleConfig::default())
    }

    #[test]
    fn unbalance_example() {
        let r = run(&spectrum(&[
            (1.0, 10.0),
            (2.0, 1.0),
            (3.0, 0.4),
            (1.5, 0.2),
        ]));
        assert!(r.verdicts[&Fault::Unbalance].detected);
        assert!(!r.verdicts[&Fault::Misalignment].detected);
        assert!(r.verdicts[&Fault::Unbalance].evidence.contains("0.1000"));
    }

    #[test]
    fn misalignment_example() {
        let r = run(&spectrum(&[(1.0, 5.0), (2.0, 4.0)]));
        assert!(r.verdicts[&Fault::Misalignment].detected);
        assert!(!r.verdicts[&Fault::Unbalance].detected);
    }

    #[test]
    fn looseness_example() {
        let mut p: Vec<(f64, f64)> = (1..=6).map(|h| (h as f64, 2.0)).collect();
        p.push((0.5, 1.0));
        assert!(run(&spectrum(&p)).verdicts[&Fault::Looseness].detected);
    }

    #[test]
    fn zero_spectrum_is_all_clear() {
        let r = run(&spectrum(&[]));
        assert_eq!(r.verdicts.len(), 4);
        assert!(r
            .verdicts
            .values()
            .all(|v| !v.detected && v.confidence == 0.0));
    }

    #[test]
    fn resonance_needs_modal_input() {
        let os = spectrum(&[(1.0, 10.0)]);
        let r = run(&os);
        assert!(!r.verdicts[&Fault::Resonance].evaluable);
        assert!(r.verdicts[&Fault::Resonance]
            .evidence
            .contains("not evaluable"));

        let modal = ModalModel {
            omega: vec![104.0],
            zeta: vec![0.05],
            phi: nalgebra::DMatrix::from_element(1, 1, 1.0),
            modal_mass: vec![1.0],
            nonproportionality: 0.0,
            nonproportional: false,
        };
        let cfg = RuleConfig::default();
        let no_ref = diagnose(&os, Some(&modal), None, BTreeMap::new(), &cfg);
        let v = &no_ref.verdicts[&Fault::Resonance];
        assert!(v.detected && v.confidence <= 0.5);
        let reference = ResonanceReference {
            speed: 50.0,
            order1_amplitude: 1.0,
        };
        let with_ref = diagnose(&os, Some(&modal), Some(&reference), BTreeMap::new(), &cfg);
        assert!(with_ref.verdicts[&Fault::Resonance].detected);
        assert!(!with_ref.verdicts[&Fault::Unbalance].detected);
        let weak = ResonanceReference {
            speed: 50.0,
            order1_amplitude: 5.0,
        };
        assert!(
            !diagnose(&os, Some(&modal), Some(&weak), BTreeMap::new(), &cfg).verdicts
                [&Fault::Resonance]
                .detected
        );
    }

    #[test]
    fn trend_alarm_examples() {
        let cfg = RuleConfig::default();
        assert_eq!(alarm_status(1.5, Some(1.0), &cfg), AlarmStatus::Ok);
        assert_eq!(alarm_status(2.5, Some(1.0), &cfg), AlarmStatus::Alert);
        assert_eq!(alarm_status(12.0, Some(10.0), &cfg), AlarmStatus::Danger);
        assert_eq!(alarm_status(4.0, Some(1.0), &cfg), AlarmStatus::Danger);
    }

    fn entry(ts: f64, v: f64) -> TrendEntry {
        TrendEntry {
            ts,
            point_id: "P1".into(),
            v_rms_mm_s: v,
            a_rms_g: 0.1,
            d_rms_um: 5.0,
            speed_rad_s: None,
            order1_amplitude: None,
        }
    }

    #[test]
    fn trend_store_roundtrip_and_ordering() {
        let dir = tempfile::tempdir().unwrap();
        let store = TrendStore::open(dir.path()).unwrap();
        store.append(&entry(1.0, 1.0)).unwrap();
        store.append(&entry(2.0, 1.5)).unwrap();
        assert_eq!(
            store.evaluate("P1", &RuleConfig::default()).unwrap(),
            AlarmStatus::Ok
        );
        store.append(&entry(3.0, 2.5)).unwrap();
        assert_eq!(
            store.evaluate("P1", &RuleConfig::default()).unwrap(),
            AlarmStatus::Alert
        );
        assert!(matches!(
            store.append(&entry(2.5, 1.0)),
            Err(Error::Ordering(_))
        ));
        assert_eq!(store.entries().unwrap().len(), 3);
        assert_eq!(store.baselines().unwrap()["P1"].v_rms_mm_s, 1.0);
    }

    #[test]
    fn rules_file_defaults_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(
            RuleConfig::load(dir.path().join("rules.json")).unwrap(),
            RuleConfig::default()
        );
        let p = dir.path().join("rules.json");
        fs::write(&p, r#"{"misalignment_2x_ratio_min": 0.0}"#).unwrap();
        assert_eq!(RuleConfig::load(&p).unwrap().misalignment_2x_ratio_min, 0.0);
        fs::write(&p, r#"{"bogus": 1}"#).unwrap();
        assert!(RuleConfig::load(&p).is_err());
    }

    fn sine(a: f64, f: f64, fs: f64, n: usize, unit: Unit) -> ChannelRecord {
        let x = (0..n)
            .map(|i| a * (2.0 * PI * f * i as f64 / fs).sin())
            .collect();
        ChannelRecord::new("x", x, fs, unit, Role::Vibration).unwrap()
    }

    #[test]
    fn overall_level_examples() {
        let ch = sine(3.0, 50.0, 2000.0, 8192, Unit::MPerS2);
        let rms = overall_level(&ch, (10.0, 200.0), Quantity::AsRecorded).unwrap();
        assert!(
            (rms - 3.0 / 2f64.sqrt()).abs() <= 0.005 * 3.0 / 2f64.sqrt(),
            "{rms}"
        );
        let out = overall_level(&ch, (200.0, 900.0), Quantity::AsRecorded).unwrap();
        assert!(out < 0.01 * 3.0 / 2f64.sqrt(), "{out}");
        let v = overall_level(&ch, (10.0, 200.0), Quantity::Velocity).unwrap();
        let expect = 3.0 / (2.0 * PI * 50.0 * 2f64.sqrt());
        assert!((v - expect).abs() <= 0.01 * expect, "{v} vs {expect}");
        assert!(matches!(
            overall_level(&ch, (0.0, 100.0), Quantity::AsRecorded),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            overall_level(&ch, (10.0, 1500.0), Quantity::AsRecorded),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn g_channels_convert_before_integration() {
        let ch = sine(1.0, 80.0, 4000.0, 16384, Unit::G);
        let l = overall_levels(&ch, (5.0, 1000.0)).unwrap();
        assert!((l.a_rms_g - 1.0 / 2f64.sqrt()).abs() < 0.005);
        let v = STANDARD_GRAVITY / (2.0 * PI * 80.0 * 2f64.sqrt()) * 1e3;
        assert!((l.v_rms_mm_s - v).abs() < 0.01 * v);
    }

    fn tacho(rev: f64, fs: f64, n: usize) -> TachoTrain {
        let t: Vec<f64> = (0..)
            .map(|k| k as f64 * rev)
            .take_while(|t| *t <= (n - 1) as f64 / fs)
            .collect();
        TachoTrain::from_pulse_times(t, 2.5).unwrap()
    }

    #[test]
    fn order_spectrum_of_synchronous_tone() {
        let fs = 4096.0;
        let n = 4096 * 2;
        let f = 12.5;
        let x = (0..n)
            .map(|i| 4.0 * (2.0 * PI * f * i as f64 / fs).cos())
            .collect();
        let y = ChannelRecord::new("y", x, fs, Unit::M, Role::Vibration).unwrap();
        let os = order_spectrum(&y, &tacho(1.0 / f, fs, n), 8.0).unwrap();
        assert!((os.amplitude(1.0) - 4.0).abs() < 1e-3);
        for (o, a) in os.orders.iter().zip(&os.amplitudes) {
            if *o != 1.0 {
                assert!(*a < 1e-3, "order {o}: {a}");
            }
        }
        assert!((os.mean_speed - 2.0 * PI * f).abs() < 1e-6);

        let x = (0..n).map(|i| (PI * f * i as f64 / fs).cos()).collect();
        let y = ChannelRecord::new("y", x, fs, Unit::M, Role::Vibration).unwrap();
        let os = order_spectrum(&y, &tacho(1.0 / f, fs, n), 8.0).unwrap();
        let (imax, _) = os
            .amplitudes
            .iter()
            .enumerate()
            .fold((0, 0.0), |a, (i, v)| if *v > a.1 { (i, *v) } else { a });
        assert_eq!(os.orders[imax], 0.5);
    }

    #[test]
    fn order_spectrum_needs_eight_revolutions() {
        let fs = 1000.0;
        let y = ChannelRecord::new("y", vec![0.0; 700], fs, Unit::M, Role::Vibration).unwrap();
        assert!(matches!(
            order_spectrum(&y, &tacho(0.1, fs, 700), 8.0),
            Err(Error::Length(_))
        ));
    }
}
