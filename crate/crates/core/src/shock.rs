//! Shock capture: triggered events, pulse parameters, limit overlays and
//! decay windows for start-up transients.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{ChannelRecord, MultiChannelRecord, Role, Unit, STANDARD_GRAVITY};

/// A triggered event with its sample window.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockEvent {
    pub channel: String,
    pub unit: Unit,
    pub sample_rate: f64,
    /// s from the first record sample.
    pub trigger_time: f64,
    /// Time of `samples[0]`.
    pub window_start: f64,
    pub samples: Vec<f64>,
    pub pre_window: f64,
    pub post_window: f64,
    /// Largest |x| in the window.
    pub peak_amplitude: f64,
    pub peak_time: f64,
    pub duration_10pct: f64,
    pub rise_time: f64,
    /// Window cut short by the record start or end.
    pub truncated: bool,
    /// ≥ 3 consecutive samples at the record's absolute maximum.
    pub clipped: bool,
}

impl ShockEvent {
    fn time(&self, i: usize) -> f64 {
        self.window_start + i as f64 / self.sample_rate
    }

    pub fn window_end(&self) -> f64 {
        self.time(self.samples.len() - 1)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::Domain(format!("{name} must be > 0, got {v}")));
    }
    Ok(())
}

/// Linear crossing time of `level` between samples `i` and `i + 1` of `a`.
fn cross(a: &[f64], i: usize, level: f64, t0: f64, dt: f64) -> f64 {
    let (x0, x1) = (a[i], a[i + 1]);
    let f = if x1 == x0 {
        0.0
    } else {
        (level - x0) / (x1 - x0)
    };
    t0 + (i as f64 + f.clamp(0.0, 1.0)) * dt
}

/// Events where |x| reaches `trigger_level`.
///
/// After an event the trigger stays disarmed for `holdoff` seconds
/// (default `post_window`); it then fires on the next sample at or above
/// the level, with the time interpolated when the level was crossed from
/// below.
pub fn capture_shocks(
    ch: &ChannelRecord,
    trigger_level: f64,
    pre_window: f64,
    post_window: f64,
    holdoff: Option<f64>,
) -> Result<Vec<ShockEvent>> {
    positive("trigger_level", trigger_level)?;
    positive("pre_window", pre_window)?;
    positive("post_window", post_window)?;
    let holdoff = holdoff.unwrap_or(post_window);
    positive("holdoff", holdoff)?;

    let x = ch.samples();
    let a: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let fs = ch.sample_rate();
    let dt = ch.dt();
    let n = x.len();
    let record_max = a.iter().cloned().fold(0.0, f64::max);

    let mut events = Vec::new();
    let mut next_allowed = 0usize;
    let mut i = 0usize;
    while i < n {
        if i < next_allowed || a[i] < trigger_level {
            i += 1;
            continue;
        }
        let trigger_time = if i > 0 && a[i - 1] < trigger_level {
            cross(&a, i - 1, trigger_level, 0.0, dt)
        } else {
            i as f64 * dt
        };
        let lo_t = trigger_time - pre_window;
        let hi_t = trigger_time + post_window;
        let first = (lo_t * fs - 1e-9).ceil().max(0.0) as usize;
        let last = ((hi_t * fs + 1e-9).floor() as usize).min(n - 1);
        let truncated = lo_t < -1e-9 / fs || hi_t > (n - 1) as f64 * dt + 1e-9 / fs;
        let w = &a[first..=last];
        let (pk, peak_amplitude) =
            w.iter().enumerate().fold(
                (0, -1.0),
                |acc, (k, v)| if *v > acc.1 { (k, *v) } else { acc },
            );
        let t0 = first as f64 * dt;

        let lo = 0.1 * peak_amplitude;
        let first_10 = (0..w.len()).find(|&k| w[k] >= lo).map(|k| {
            if k > 0 {
                cross(w, k - 1, lo, t0, dt)
            } else {
                t0
            }
        });
        let last_10 = (0..w.len()).rev().find(|&k| w[k] >= lo).map(|k| {
            if k + 1 < w.len() {
                cross(w, k, lo, t0, dt)
            } else {
                t0 + k as f64 * dt
            }
        });
        let duration_10pct = match (first_10, last_10) {
            (Some(a), Some(b)) => (b - a).max(dt),
            _ => dt,
        };
        // last 90% then 10% upward crossings before the peak
        let hi = 0.9 * peak_amplitude;
        let up = |level: f64, before: usize| -> f64 {
            (0..before)
                .rev()
                .find(|&k| w[k] < level && w[k + 1] >= level)
                .map_or(t0, |k| cross(w, k, level, t0, dt))
        };
        let t90 = up(hi, pk);
        let k90 = ((t90 - t0) / dt).floor().max(0.0) as usize;
        let t10 = up(lo, k90.min(pk));
        let rise_time = (t90 - t10).max(0.0);

        let mut run = 0;
        let clipped = w.iter().any(|v| {
            run = if *v == record_max { run + 1 } else { 0 };
            run >= 3
        });

        events.push(ShockEvent {
            channel: ch.name().to_string(),
            unit: ch.unit(),
            sample_rate: fs,
            trigger_time,
            window_start: t0,
            samples: x[first..=last].to_vec(),
            pre_window,
            post_window,
            peak_amplitude,
            peak_time: t0 + pk as f64 * dt,
            duration_10pct,
            rise_time,
            truncated,
            clipped,
        });
        next_allowed = i + (holdoff * fs - 1e-9).ceil().max(1.0) as usize;
        i += 1;
    }
    Ok(events)
}

/// Key pulse parameters of an event.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PulseParameters {
    pub peak: f64,
    pub peak_time_s: f64,
    pub duration_10pct_s: f64,
    pub rise_time_s: f64,
    /// m/s, from the trapezoid integral of the window.
    pub delta_v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub fn pulse_parameters(e: &ShockEvent) -> PulseParameters {
    let to_si = match e.unit {
        Unit::MPerS2 => Some(1.0),
        Unit::G => Some(STANDARD_GRAVITY),
        _ => None,
    };
    let dt = 1.0 / e.sample_rate;
    let integral = |s: &[f64]| s.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dt).sum::<f64>();
    PulseParameters {
        peak: e.peak_amplitude,
        peak_time_s: e.peak_time,
        duration_10pct_s: e.duration_10pct,
        rise_time_s: e.rise_time,
        delta_v: to_si.map(|k| k * integral(&e.samples)),
        note: to_si.is_none().then(|| {
            format!(
                "velocity change omitted: unit {} is not an acceleration",
                e.unit
            )
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Breakpoint {
    /// s relative to the trigger.
    pub t_offset_s: f64,
    pub upper: f64,
    pub lower: f64,
}

/// Piecewise-linear pass band around a triggered pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitOverlay {
    pub breakpoints: Vec<Breakpoint>,
}

impl LimitOverlay {
    pub fn new(breakpoints: Vec<Breakpoint>) -> Result<Self> {
        let o = Self { breakpoints };
        o.validate()?;
        Ok(o)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let o: Self = serde_json::from_str(text)?;
        o.validate()?;
        Ok(o)
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.breakpoints;
        if b.len() < 2 {
            return Err(Error::Domain("overlay needs at least 2 breakpoints".into()));
        }
        if b.windows(2).any(|w| w[1].t_offset_s <= w[0].t_offset_s) {
            return Err(Error::Domain(
                "overlay time offsets must be strictly ascending".into(),
            ));
        }
        if let Some(p) = b
            .iter()
            .find(|p| p.upper.is_nan() || p.lower.is_nan() || p.upper < p.lower)
        {
            return Err(Error::Domain(format!(
                "upper < lower at t_offset {} s",
                p.t_offset_s
            )));
        }
        Ok(())
    }

    fn span(&self) -> (f64, f64) {
        (
            self.breakpoints[0].t_offset_s,
            self.breakpoints[self.breakpoints.len() - 1].t_offset_s,
        )
    }

    /// (lower, upper) at `offset`, held constant beyond the ends.
    pub fn bounds_at(&self, offset: f64) -> (f64, f64) {
        let b = &self.breakpoints;
        if offset <= b[0].t_offset_s {
            return (b[0].lower, b[0].upper);
        }
        let last = b[b.len() - 1];
        if offset >= last.t_offset_s {
            return (last.lower, last.upper);
        }
        let i = b.partition_point(|p| p.t_offset_s <= offset) - 1;
        let f = (offset - b[i].t_offset_s) / (b[i + 1].t_offset_s - b[i].t_offset_s);
        (
            b[i].lower + f * (b[i + 1].lower - b[i].lower),
            b[i].upper + f * (b[i + 1].upper - b[i].upper),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub pass: bool,
    /// Record time of the first bound crossing, s.
    pub first_violation_s: Option<f64>,
    pub violations: usize,
    /// Overlay shift applied by best fit, s.
    pub shift_s: f64,
}

fn check(e: &ShockEvent, o: &LimitOverlay, shift: f64) -> (usize, Option<f64>) {
    let dt = 1.0 / e.sample_rate;
    let excess = |i: usize| -> f64 {
        let (lo, hi) = o.bounds_at(e.time(i) - e.trigger_time - shift);
        let x = e.samples[i];
        (x - hi).max(lo - x)
    };
    let mut count = 0;
    let mut first = None;
    for i in 0..e.samples.len() {
        let ex = excess(i);
        if ex > 0.0 {
            count += 1;
            if first.is_none() {
                first = Some(if i == 0 {
                    e.time(0)
                } else {
                    let prev = excess(i - 1);
                    e.time(i - 1) + dt * (-prev / (ex - prev))
                });
            }
        }
    }
    (count, first)
}

/// Pointwise bound check of the event window, optionally after the best
/// time shift within ±10% of the pulse duration.
pub fn validate_limits(e: &ShockEvent, overlay: &LimitOverlay, fit: bool) -> Result<Verdict> {
    overlay.validate()?;
    let (a, b) = overlay.span();
    let covers = |shift: f64| {
        let tol = 1e-9 / e.sample_rate;
        a + shift <= e.window_start - e.trigger_time + tol
            && b + shift >= e.window_end() - e.trigger_time - tol
    };
    if !covers(0.0) {
        return Err(Error::Coverage(format!(
            "overlay spans [{a}, {b}] s around the trigger but the event window is [{}, {}] s",
            e.window_start - e.trigger_time,
            e.window_end() - e.trigger_time
        )));
    }
    let mut best = (check(e, overlay, 0.0), 0.0);
    if fit && best.0 .0 > 0 {
        let dt = 1.0 / e.sample_rate;
        let steps = (0.1 * e.duration_10pct / dt).floor() as i64;
        // ascending |shift| so ties keep the smallest adjustment
        for k in (1..=steps).flat_map(|k| [-k, k]) {
            let shift = k as f64 * dt;
            if !covers(shift) {
                continue;
            }
            let r = check(e, overlay, shift);
            if r.0 < best.0 .0 {
                best = (r, shift);
            }
        }
    }
    let ((violations, first), shift_s) = best;
    Ok(Verdict {
        pass: violations == 0,
        first_violation_s: first,
        violations,
        shift_s,
    })
}

/// `{trigger_time_s, peak, peak_time_s, duration_10pct_s, rise_time_s,
/// delta_v, verdict, clipped}`
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShockReport {
    pub channel: String,
    pub trigger_time_s: f64,
    pub peak: f64,
    pub peak_time_s: f64,
    pub duration_10pct_s: f64,
    pub rise_time_s: f64,
    pub delta_v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub verdict: Option<Verdict>,
    pub clipped: bool,
    pub truncated: bool,
}

pub fn shock_report(e: &ShockEvent, verdict: Option<Verdict>) -> ShockReport {
    let p = pulse_parameters(e);
    ShockReport {
        channel: e.channel.clone(),
        trigger_time_s: e.trigger_time,
        peak: p.peak,
        peak_time_s: p.peak_time_s,
        duration_10pct_s: p.duration_10pct_s,
        rise_time_s: p.rise_time_s,
        delta_v: p.delta_v,
        note: p.note,
        verdict,
        clipped: e.clipped,
        truncated: e.truncated,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DecayWindow {
    /// `exp(−(t − start)/tau)` across the region.
    Exponential { tau: f64 },
    /// Hann fade-in from 0 to 1 over `ramp` seconds, then unity.
    HalfHann { ramp: f64 },
}

impl DecayWindow {
    fn gain(self, since_start: f64) -> f64 {
        match self {
            DecayWindow::Exponential { tau } => (-since_start / tau).exp(),
            DecayWindow::HalfHann { ramp } => {
                if since_start >= ramp {
                    1.0
                } else {
                    0.5 * (1.0 - (PI * since_start / ramp).cos())
                }
            }
        }
    }
}

/// Multiplies vibration channels by `window` over `[start, end]` (record
/// time, including the record's start offset); other channels pass through.
pub fn apply_decay_window(
    rec: &MultiChannelRecord,
    window: DecayWindow,
    start: f64,
    end: f64,
) -> Result<MultiChannelRecord> {
    match window {
        DecayWindow::Exponential { tau } => positive("tau", tau)?,
        DecayWindow::HalfHann { ramp } => positive("ramp", ramp)?,
    }
    let fs = rec.sample_rate();
    let t0 = rec.start_time();
    let t1 = t0 + (rec.len().saturating_sub(1)) as f64 / fs;
    let tol = 1e-9 / fs;
    if !(start >= t0 - tol && end <= t1 + tol && start < end) {
        return Err(Error::Range(format!(
            "window region [{start}, {end}] s must lie within the record [{t0}, {t1}] s"
        )));
    }
    let channels = rec
        .channels()
        .iter()
        .map(|ch| {
            if ch.role() != Role::Vibration {
                return Ok(ch.clone());
            }
            let out = ch
                .samples()
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let t = t0 + i as f64 / fs;
                    if t >= start && t <= end {
                        v * window.gain(t - start)
                    } else {
                        *v
                    }
                })
                .collect();
            ch.with_samples(out)
        })
        .collect::<Result<Vec<_>>>()?;
    MultiChannelRecord::new(channels, t0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FS: f64 = 10_000.0;

    fn channel(x: Vec<f64>, unit: Unit) -> ChannelRecord {
        ChannelRecord::new("acc", x, FS, unit, Role::Vibration).unwrap()
    }

    /// Half-sine of amplitude `a`, `d` seconds long, starting at `t0`.
    fn half_sine(a: f64, d: f64, t0: f64, len: usize) -> Vec<f64> {
        (0..len)
            .map(|i| {
                let t = i as f64 / FS - t0;
                if (0.0..=d).contains(&t) {
                    a * (PI * t / d).sin()
                } else {
                    0.0
                }
            })
            .collect()
    }

    #[test]
    fn half_sine_capture() {
        let d = 0.011;
        let ch = channel(half_sine(5.0, d, 0.05, 2000), Unit::MPerS2);
        let ev = capture_shocks(&ch, 1.0, 0.01, 0.03, None).unwrap();
        assert_eq!(ev.len(), 1);
        let e = &ev[0];
        assert!((e.peak_amplitude - 5.0).abs() < 1e-6);
        let expect = d * (1.0 - 2.0 * 0.1f64.asin() / PI);
        assert!(
            (e.duration_10pct - expect).abs() <= 1.0 / FS,
            "{} vs {expect}",
            e.duration_10pct
        );
        let trig = 0.05 + d / PI * 0.2f64.asin();
        assert!((e.trigger_time - trig).abs() <= 1.0 / FS);
        assert!(!e.truncated && !e.clipped);

        let p = pulse_parameters(e);
        let dv = 2.0 * 5.0 * d / PI;
        assert!((p.delta_v.unwrap() - dv).abs() <= 0.01 * dv);
    }

    #[test]
    fn delta_v_in_g_and_omitted_for_displacement() {
        let d = 0.011;
        let e = &capture_shocks(
            &channel(half_sine(5.0, d, 0.05, 2000), Unit::G),
            1.0,
            0.01,
            0.03,
            None,
        )
        .unwrap()[0];
        let dv = 2.0 * 5.0 * d / PI * STANDARD_GRAVITY;
        assert!((pulse_parameters(e).delta_v.unwrap() - dv).abs() <= 0.01 * dv);
        let e = &capture_shocks(
            &channel(half_sine(5.0, d, 0.05, 2000), Unit::M),
            1.0,
            0.01,
            0.03,
            None,
        )
        .unwrap()[0];
        let p = pulse_parameters(e);
        assert!(p.delta_v.is_none() && p.note.unwrap().contains("not an acceleration"));
    }

    #[test]
    fn holdoff_merges_close_pulses() {
        let mut x = half_sine(5.0, 0.005, 0.02, 3000);
        for (a, b) in x.iter_mut().zip(half_sine(4.0, 0.005, 0.035, 3000)) {
            *a += b;
        }
        let ch = channel(x, Unit::MPerS2);
        assert_eq!(
            capture_shocks(&ch, 1.0, 0.005, 0.05, None).unwrap().len(),
            1
        );
        assert_eq!(
            capture_shocks(&ch, 1.0, 0.005, 0.005, None).unwrap().len(),
            2
        );
    }

    #[test]
    fn quiet_record_and_bad_level() {
        let ch = channel(vec![0.01; 500], Unit::MPerS2);
        assert!(capture_shocks(&ch, 1.0, 0.01, 0.01, None)
            .unwrap()
            .is_empty());
        assert!(matches!(
            capture_shocks(&ch, 0.0, 0.01, 0.01, None),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn triangular_rise_time() {
        let hw = 0.004;
        let x: Vec<f64> = (0..1000)
            .map(|i| {
                let t = i as f64 / FS - 0.03;
                (2.0 * (1.0 - (t - hw).abs() / hw)).max(0.0)
            })
            .collect();
        let e = &capture_shocks(&channel(x, Unit::MPerS2), 0.5, 0.01, 0.02, None).unwrap()[0];
        assert!(
            (e.rise_time - 0.8 * hw).abs() <= 1.0 / FS,
            "{}",
            e.rise_time
        );
    }

    #[test]
    fn rectangular_duration_and_clip_flag() {
        let x: Vec<f64> = (0..1000)
            .map(|i| if (300..350).contains(&i) { 3.0 } else { 0.0 })
            .collect();
        let e = &capture_shocks(&channel(x, Unit::MPerS2), 1.0, 0.01, 0.02, None).unwrap()[0];
        assert!(
            (e.duration_10pct - 0.005).abs() <= 1.0 / FS,
            "{}",
            e.duration_10pct
        );
        assert!(e.clipped);
    }

    #[test]
    fn truncated_at_record_edge() {
        let ch = channel(half_sine(5.0, 0.011, 0.002, 400), Unit::MPerS2);
        assert!(capture_shocks(&ch, 1.0, 0.01, 0.01, None).unwrap()[0].truncated);
    }

    fn overlay(upper: f64, lower: f64) -> LimitOverlay {
        LimitOverlay::new(vec![
            Breakpoint {
                t_offset_s: -0.05,
                upper,
                lower,
            },
            Breakpoint {
                t_offset_s: 0.05,
                upper,
                lower,
            },
        ])
        .unwrap()
    }

    #[test]
    fn limit_verdicts() {
        let d = 0.011;
        let e = &capture_shocks(
            &channel(half_sine(5.0, d, 0.05, 2000), Unit::MPerS2),
            1.0,
            0.01,
            0.03,
            None,
        )
        .unwrap()[0];
        assert!(validate_limits(e, &overlay(6.0, -6.0), false).unwrap().pass);
        let v = validate_limits(e, &overlay(4.0, -6.0), false).unwrap();
        assert!(!v.pass);
        let expect = 0.05 + d / PI * 0.8f64.asin();
        assert!(
            (v.first_violation_s.unwrap() - expect).abs() <= 1.0 / FS,
            "{v:?}"
        );
        let narrow = LimitOverlay::new(vec![
            Breakpoint {
                t_offset_s: 0.0,
                upper: 6.0,
                lower: -6.0,
            },
            Breakpoint {
                t_offset_s: 0.01,
                upper: 6.0,
                lower: -6.0,
            },
        ])
        .unwrap();
        assert!(matches!(
            validate_limits(e, &narrow, false),
            Err(Error::Coverage(_))
        ));
    }

    #[test]
    fn best_fit_corrects_misregistration() {
        let d = 0.011;
        let e = &capture_shocks(
            &channel(half_sine(5.0, d, 0.05, 2000), Unit::MPerS2),
            1.0,
            0.01,
            0.03,
            None,
        )
        .unwrap()[0];
        // tight band around the pulse, drawn 5% of the duration late
        let shift = 0.05 * e.duration_10pct;
        let start = 0.05 - e.trigger_time + shift;
        let mut bps = vec![Breakpoint {
            t_offset_s: -0.05,
            upper: 0.3,
            lower: -0.3,
        }];
        for k in 0..=22 {
            let t = d * k as f64 / 22.0;
            let v = 5.0 * (PI * t / d).sin();
            bps.push(Breakpoint {
                t_offset_s: start + t,
                upper: v + 0.3,
                lower: v - 0.3,
            });
        }
        bps.push(Breakpoint {
            t_offset_s: 0.06,
            upper: 0.3,
            lower: -0.3,
        });
        let o = LimitOverlay::new(bps).unwrap();
        assert!(!validate_limits(e, &o, false).unwrap().pass);
        let v = validate_limits(e, &o, true).unwrap();
        assert!(v.pass, "{v:?}");
        assert!((v.shift_s + shift).abs() <= 2.0 / FS, "{v:?}");
    }

    #[test]
    fn overlay_json() {
        let o = LimitOverlay::from_json(r#"{"breakpoints":[{"t_offset_s":0,"upper":1,"lower":-1},{"t_offset_s":1,"upper":2,"lower":0}]}"#).unwrap();
        assert_eq!(o.bounds_at(0.5), (-0.5, 1.5));
        assert!(LimitOverlay::from_json(r#"{"breakpoints":[{"t_offset_s":0,"upper":-1,"lower":1},{"t_offset_s":1,"upper":2,"lower":0}]}"#).is_err());
        assert!(LimitOverlay::from_json(r#"{"breakpoints":[],"extra":1}"#).is_err());
    }

    fn startup_record(with_tacho: bool) -> MultiChannelRecord {
        let fs = 2000.0;
        let n = 2000;
        let t = |i: usize| i as f64 / fs;
        // burst peaking at 10.0 at t = 0.1 s
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let env = 10.0 * (-((t(i) - 0.1) / 0.02).powi(2)).exp();
                env * (2.0 * PI * 50.0 * (t(i) - 0.1)).cos()
            })
            .collect();
        let mut chans = vec![ChannelRecord::new("y", x, fs, Unit::M, Role::Vibration).unwrap()];
        if with_tacho {
            let k = (0..n).map(|i| if i % 40 < 2 { 5.0 } else { 0.0 }).collect();
            chans.push(ChannelRecord::new("key", k, fs, Unit::Dimensionless, Role::Tacho).unwrap());
        }
        MultiChannelRecord::new(chans, 0.0).unwrap()
    }

    #[test]
    fn exponential_window_attenuates_startup() {
        let rec = startup_record(true);
        let out =
            apply_decay_window(&rec, DecayWindow::Exponential { tau: 0.05 }, 0.0, 0.5).unwrap();
        let peak = out.channels()[0]
            .samples()
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(peak <= 10.0 * (-2.0f64).exp() + 1e-3, "{peak}");
        assert_eq!(out.channels()[1], rec.channels()[1]);
    }

    #[test]
    fn huge_tau_is_identity() {
        // deviation is |x|·t/tau, so use a unit-amplitude record
        let src = startup_record(false);
        let unit = src.channels()[0]
            .samples()
            .iter()
            .map(|v| v / 10.0)
            .collect();
        let rec = MultiChannelRecord::new(vec![src.channels()[0].with_samples(unit).unwrap()], 0.0)
            .unwrap();
        let t1 = (rec.len() - 1) as f64 / rec.sample_rate();
        let out = apply_decay_window(&rec, DecayWindow::Exponential { tau: 1e9 }, 0.0, t1).unwrap();
        for (a, b) in out.channels()[0]
            .samples()
            .iter()
            .zip(rec.channels()[0].samples())
        {
            assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn region_errors() {
        let rec = startup_record(false);
        assert!(matches!(
            apply_decay_window(&rec, DecayWindow::HalfHann { ramp: 0.1 }, 0.0, 5.0),
            Err(Error::Range(_))
        ));
        assert!(matches!(
            apply_decay_window(&rec, DecayWindow::HalfHann { ramp: 0.0 }, 0.0, 0.5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn report_json_fields() {
        let e = &capture_shocks(
            &channel(half_sine(5.0, 0.011, 0.05, 2000), Unit::MPerS2),
            1.0,
            0.01,
            0.03,
            None,
        )
        .unwrap()[0];
        let r = shock_report(
            e,
            Some(validate_limits(e, &overlay(6.0, -6.0), false).unwrap()),
        );
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in [
            "trigger_time_s",
            "peak",
            "peak_time_s",
            "duration_10pct_s",
            "rise_time_s",
            "delta_v",
            "verdict",
            "clipped",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
