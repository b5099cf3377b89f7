//! Peak/trough detection with a hysteresis band, and cycle statistics over a
//! uniformly sampled series.

/// A confirmed local extremum, refined by parabolic interpolation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub t: f64,
    pub value: f64,
    /// Index of the raw sample that carried the extremum.
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Seek {
    Unknown,
    Peak,
    Trough,
}

fn refine(t: &[f64], x: &[f64], i: usize) -> Extremum {
    if i == 0 || i + 1 >= x.len() {
        return Extremum {
            t: t[i],
            value: x[i],
            index: i,
        };
    }
    let (a, b, c) = (x[i - 1], x[i], x[i + 1]);
    let denom = a - 2.0 * b + c;
    if denom == 0.0 {
        return Extremum {
            t: t[i],
            value: b,
            index: i,
        };
    }
    let h = 0.5 * (t[i + 1] - t[i - 1]);
    let offset = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
    Extremum {
        t: t[i] + offset * h,
        value: b - 0.25 * (a - c) * offset,
        index: i,
    }
}

/// Alternating peaks and troughs of `x`. An extremum is confirmed once the
/// series has moved away from it by more than `band`; extrema sitting on the
/// first or last sample are discarded.
pub fn extrema(t: &[f64], x: &[f64], band: f64) -> (Vec<Extremum>, Vec<Extremum>) {
    assert_eq!(t.len(), x.len(), "time and value series differ in length");
    let mut peaks = Vec::new();
    let mut troughs = Vec::new();
    if x.len() < 3 {
        return (peaks, troughs);
    }
    let last = x.len() - 1;
    let mut mode = Seek::Unknown;
    let mut hi = 0usize;
    let mut lo = 0usize;
    for i in 1..x.len() {
        if x[i] > x[hi] {
            hi = i;
        }
        if x[i] < x[lo] {
            lo = i;
        }
        match mode {
            Seek::Unknown => {
                if x[i] < x[hi] - band {
                    if hi != 0 {
                        peaks.push(refine(t, x, hi));
                    }
                    mode = Seek::Trough;
                    lo = i;
                } else if x[i] > x[lo] + band {
                    if lo != 0 {
                        troughs.push(refine(t, x, lo));
                    }
                    mode = Seek::Peak;
                    hi = i;
                }
            }
            Seek::Trough => {
                if x[i] > x[lo] + band {
                    if lo != last {
                        troughs.push(refine(t, x, lo));
                    }
                    mode = Seek::Peak;
                    hi = i;
                }
            }
            Seek::Peak => {
                if x[i] < x[hi] - band {
                    if hi != last {
                        peaks.push(refine(t, x, hi));
                    }
                    mode = Seek::Trough;
                    lo = i;
                }
            }
        }
    }
    (peaks, troughs)
}

/// Summary of the oscillation carried by a sampled series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCycles {
    pub peaks: Vec<Extremum>,
    pub troughs: Vec<Extremum>,
    /// Peaks whose drop to the following trough exceeds the minimum swing.
    pub significant_peaks: usize,
    /// Mean interval between consecutive peaks, in the series' time unit.
    pub period: Option<f64>,
    /// Standard deviation of the peak intervals relative to their mean.
    pub period_rel_std: Option<f64>,
    /// Mean peak value minus mean trough value.
    pub amplitude: f64,
    /// Time average over the whole cycles between the first and last peak.
    pub mean: Option<f64>,
}

/// Fraction of the series range used as the hysteresis band.
pub const DEFAULT_BAND_FRACTION: f64 = 0.1;

pub fn analyze(t: &[f64], x: &[f64], band_fraction: f64, min_swing: f64) -> SeriesCycles {
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let range = if x.is_empty() { 0.0 } else { hi - lo };
    let (peaks, troughs) = if range > 0.0 {
        extrema(t, x, band_fraction * range)
    } else {
        (Vec::new(), Vec::new())
    };

    let significant_peaks = peaks
        .iter()
        .filter(|p| {
            troughs
                .iter()
                .find(|tr| tr.t > p.t)
                .is_some_and(|tr| p.value - tr.value > min_swing)
        })
        .count();

    let intervals: Vec<f64> = peaks.windows(2).map(|w| w[1].t - w[0].t).collect();
    let (period, period_rel_std) = if intervals.is_empty() {
        (None, None)
    } else {
        let n = intervals.len() as f64;
        let mean = intervals.iter().sum::<f64>() / n;
        let var = intervals.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
        (Some(mean), Some(var.sqrt() / mean))
    };

    let amplitude = if peaks.is_empty() || troughs.is_empty() {
        0.0
    } else {
        let mp = peaks.iter().map(|p| p.value).sum::<f64>() / peaks.len() as f64;
        let mt = troughs.iter().map(|p| p.value).sum::<f64>() / troughs.len() as f64;
        mp - mt
    };

    let mean = match (peaks.first(), peaks.last()) {
        (Some(a), Some(b)) if b.index > a.index => Some(trapezoid_mean(&t[a.index..=b.index], &x[a.index..=b.index])),
        _ => None,
    };

    SeriesCycles {
        peaks,
        troughs,
        significant_peaks,
        period,
        period_rel_std,
        amplitude,
        mean,
    }
}

pub(crate) fn trapezoid_mean(t: &[f64], x: &[f64]) -> f64 {
    let span = t[t.len() - 1] - t[0];
    if span <= 0.0 {
        return x[0];
    }
    let area: f64 = t
        .windows(2)
        .zip(x.windows(2))
        .map(|(tw, xw)| 0.5 * (tw[1] - tw[0]) * (xw[0] + xw[1]))
        .sum();
    area / span
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn sine(n: usize, dt: f64, period: f64) -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
        let x = t.iter().map(|&s| 0.4 + 0.1 * (TAU * s / period).sin()).collect();
        (t, x)
    }

    #[test]
    fn sine_period_amplitude_mean() {
        let (t, x) = sine(20_001, 0.001, 2.0);
        let c = analyze(&t, &x, DEFAULT_BAND_FRACTION, 1e-3);
        assert_eq!(c.peaks.len(), 10);
        assert!((c.period.unwrap() - 2.0).abs() < 1e-9);
        assert!((c.amplitude - 0.2).abs() < 1e-8);
        assert!((c.mean.unwrap() - 0.4).abs() < 1e-8);
        assert!(c.period_rel_std.unwrap() < 1e-9);
    }

    #[test]
    fn ripple_inside_band_is_ignored() {
        // Slow sine plus a small fast ripple: the ripple's local maxima must
        // not be counted as peaks.
        let t: Vec<f64> = (0..10_001).map(|i| i as f64 * 0.001).collect();
        let x: Vec<f64> = t
            .iter()
            .map(|&s| (TAU * s / 2.5).sin() + 0.02 * (TAU * s * 40.0).sin())
            .collect();
        let c = analyze(&t, &x, DEFAULT_BAND_FRACTION, 1e-3);
        assert_eq!(c.peaks.len(), 4);
    }

    #[test]
    fn flat_and_monotone_series_have_no_cycles() {
        let t: Vec<f64> = (0..100).map(f64::from).collect();
        let flat = vec![1.0; 100];
        assert_eq!(analyze(&t, &flat, 0.1, 1e-3).peaks.len(), 0);
        let ramp: Vec<f64> = t.iter().map(|s| -s).collect();
        let c = analyze(&t, &ramp, 0.1, 1e-3);
        assert!(c.peaks.is_empty() && c.troughs.is_empty());
        assert_eq!(c.amplitude, 0.0);
    }
}
