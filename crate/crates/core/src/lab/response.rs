//! Classifies how the potential responded to one stimulus.
//!
//! The stimulus window `[t_on, t_on + L)`, with `L = min(duration, P)`, is
//! compared with the windows exactly one and two periods earlier, so the
//! comparison sees the same phase of the unperturbed cycle. `P` is measured
//! on the potential before `t_on`. Period and excursion are read from a
//! 0.25 s centred moving average so that measurement noise does not split
//! monotone runs or add spurious extrema.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::trace::ExperimentTrace;
use crate::cycles;
use crate::marble::{LaserStimulus, PotentialSample};

/// Amplitude ratio below which a response counts as inhibition.
pub const INHIBITION_RATIO: f64 = 0.5;
/// Mean shift, as a fraction of the pre-stimulus peak-to-peak, above which a
/// response counts as a level shift.
pub const LEVEL_SHIFT_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResponseError {
    #[error("trace has no raw stream")]
    NoRaw,
    #[error("no oscillation found before the stimulus: {0}")]
    NoBaseline(String),
    #[error("analysis window [{from}, {to}) s extends outside the trace [{start}, {end}] s")]
    OutOfRange { from: f64, to: f64, start: f64, end: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResponseClass {
    Inhibition,
    LevelShift,
    NoEffect,
}

impl fmt::Display for ResponseClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ResponseClass::Inhibition => "inhibition",
            ResponseClass::LevelShift => "level-shift",
            ResponseClass::NoEffect => "no-effect",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseReport {
    pub class: ResponseClass,
    /// Period measured before the stimulus, seconds.
    pub period_before: f64,
    /// Period after the stimulus ends, if the signal oscillates there.
    pub period_after: Option<f64>,
    /// Peak-to-peak over the two periods before `t_on`, volts.
    pub amplitude_before: f64,
    /// Peak-to-peak over the stimulus window.
    pub amplitude_after: f64,
    /// Stimulus-window peak-to-peak over the phase-matched baseline.
    pub amplitude_ratio: f64,
    pub mean_before: f64,
    pub mean_after: f64,
    pub mean_shift: f64,
    /// Largest monotone run of the smoothed potential within one period of
    /// `t_on`, volts, signed.
    pub excursion: f64,
    /// Length of the stimulus window, seconds.
    pub window: f64,
}

fn slice(raw: &[PotentialSample], from: f64, to: f64) -> &[PotentialSample] {
    let a = raw.partition_point(|s| s.t < from);
    let b = raw.partition_point(|s| s.t < to);
    &raw[a..b]
}

fn peak_to_peak(s: &[PotentialSample]) -> f64 {
    let (lo, hi) = s.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        (lo.min(x.volts), hi.max(x.volts))
    });
    if s.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

fn mean(s: &[PotentialSample]) -> f64 {
    s.iter().map(|x| x.volts).sum::<f64>() / s.len().max(1) as f64
}

/// Largest-magnitude change over a run of samples that never reverses
/// direction, signed by that direction.
pub fn monotone_excursion(s: &[PotentialSample]) -> f64 {
    let mut best = 0.0f64;
    let mut up_start = 0;
    let mut down_start = 0;
    for i in 1..s.len() {
        if s[i].volts < s[i - 1].volts {
            up_start = i;
        }
        if s[i].volts > s[i - 1].volts {
            down_start = i;
        }
        let rise = s[i].volts - s[up_start].volts;
        let fall = s[i].volts - s[down_start].volts;
        for d in [rise, fall] {
            if d.abs() > best.abs() {
                best = d;
            }
        }
    }
    best
}

/// Half-width of the smoothing window, samples.
const SMOOTH_HALF: usize = 12;

fn smooth(s: &[PotentialSample]) -> Vec<PotentialSample> {
    let mut prefix = Vec::with_capacity(s.len() + 1);
    prefix.push(0.0);
    for x in s {
        prefix.push(prefix.last().copied().unwrap_or(0.0) + x.volts);
    }
    (0..s.len())
        .map(|i| {
            let a = i.saturating_sub(SMOOTH_HALF);
            let b = (i + SMOOTH_HALF + 1).min(s.len());
            PotentialSample {
                volts: (prefix[b] - prefix[a]) / (b - a) as f64,
                ..s[i]
            }
        })
        .collect()
}

fn period_of(s: &[PotentialSample]) -> Option<f64> {
    let s = smooth(s);
    let t: Vec<f64> = s.iter().map(|x| x.t).collect();
    let v: Vec<f64> = s.iter().map(|x| x.volts).collect();
    let c = cycles::analyze(&t, &v, cycles::DEFAULT_BAND_FRACTION, 0.0);
    c.period
}

pub fn characterize_response(
    trace: &ExperimentTrace,
    stimulus: &LaserStimulus,
) -> Result<ResponseReport, ResponseError> {
    let raw = trace.raw.as_deref().ok_or(ResponseError::NoRaw)?;
    characterize_samples(raw, stimulus)
}

/// [`characterize_response`] on a bare 10 ms stream.
pub fn characterize_samples(
    raw: &[PotentialSample],
    stimulus: &LaserStimulus,
) -> Result<ResponseReport, ResponseError> {
    let (start, end) = match (raw.first(), raw.last()) {
        (Some(a), Some(b)) => (a.t, b.t),
        _ => return Err(ResponseError::NoBaseline("empty stream".into())),
    };
    let t_on = stimulus.t_on;
    let before = slice(raw, start, t_on);
    let period = period_of(before).ok_or_else(|| ResponseError::NoBaseline("fewer than two peaks".into()))?;
    let window = stimulus.duration.min(period);

    let from = t_on - 2.0 * period;
    let to = t_on + window.max(period);
    if from < start || to > end {
        return Err(ResponseError::OutOfRange { from, to, start, end });
    }

    let baseline = slice(raw, from, t_on);
    let matched = [
        slice(raw, t_on - period, t_on - period + window),
        slice(raw, t_on - 2.0 * period, t_on - 2.0 * period + window),
    ];
    let during = slice(raw, t_on, t_on + window);

    let amplitude_before = peak_to_peak(baseline);
    let matched_amp = 0.5 * (peak_to_peak(matched[0]) + peak_to_peak(matched[1]));
    let mean_before = 0.5 * (mean(matched[0]) + mean(matched[1]));
    let amplitude_after = peak_to_peak(during);
    let mean_after = mean(during);
    let amplitude_ratio = if matched_amp > 0.0 {
        amplitude_after / matched_amp
    } else if amplitude_after > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    let mean_shift = mean_after - mean_before;

    let class = if amplitude_ratio < INHIBITION_RATIO {
        ResponseClass::Inhibition
    } else if mean_shift.abs() > LEVEL_SHIFT_FRACTION * amplitude_before {
        ResponseClass::LevelShift
    } else {
        ResponseClass::NoEffect
    };

    Ok(ResponseReport {
        class,
        period_before: period,
        period_after: period_of(slice(raw, stimulus.t_off(), end + 1.0)),
        amplitude_before,
        amplitude_after,
        amplitude_ratio,
        mean_before,
        mean_after,
        mean_shift,
        excursion: monotone_excursion(&smooth(slice(raw, t_on, t_on + period))),
        window,
    })
}
