use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default histogram bin width, volts.
pub const DEFAULT_BIN_WIDTH: f64 = 0.002;
/// Scale of the pooled reference data the fit is compared with, volts.
/// Documentation targets, not expectations for any simulated run.
pub const REFERENCE_MEAN: f64 = 0.006;
pub const REFERENCE_STD: f64 = 0.0159;

const MAX_BINS: i64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("no samples")]
    Empty,
    #[error("need at least 2 samples, got {0}")]
    TooFew(usize),
    #[error("bin width {0} must be finite and > 0")]
    BadWidth(f64),
    #[error("sample {0} is not finite")]
    NonFinite(f64),
    #[error("data span {0} bins, more than allowed")]
    TooManyBins(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    /// Lower edge, an integer multiple of the bin width.
    pub lower: f64,
    pub count: usize,
}

fn bin_index(x: f64, width: f64) -> i64 {
    // The nudge keeps values that sit on an edge, like 0.003 / 0.001, out of
    // the bin below.
    (x / width + 1e-9).floor() as i64
}

/// Contiguous bins from the lowest to the highest occupied one; empty bins
/// in between are kept.
pub fn histogram(samples: &[f64], bin_width: f64) -> Result<Vec<Bin>, StatsError> {
    if !bin_width.is_finite() || bin_width <= 0.0 {
        return Err(StatsError::BadWidth(bin_width));
    }
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    if let Some(&bad) = samples.iter().find(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite(bad));
    }
    let idx: Vec<i64> = samples.iter().map(|&x| bin_index(x, bin_width)).collect();
    let lo = *idx.iter().min().expect("non-empty");
    let hi = *idx.iter().max().expect("non-empty");
    let n_bins = hi - lo + 1;
    if n_bins > MAX_BINS {
        return Err(StatsError::TooManyBins(n_bins));
    }
    let mut counts = vec![0usize; n_bins as usize];
    for i in idx {
        counts[(i - lo) as usize] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| Bin {
            lower: (lo + k as i64) as f64 * bin_width,
            count,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std: f64,
    pub n: usize,
    /// Set when every sample is equal and `std` is zero.
    pub degenerate: bool,
}

impl GaussianFit {
    pub fn pdf(&self, x: f64) -> f64 {
        if self.std == 0.0 {
            return if x == self.mean { f64::INFINITY } else { 0.0 };
        }
        let z = (x - self.mean) / self.std;
        (-0.5 * z * z).exp() / (self.std * (2.0 * std::f64::consts::PI).sqrt())
    }
}

pub fn fit_normal(samples: &[f64]) -> Result<GaussianFit, StatsError> {
    if samples.len() < 2 {
        return Err(StatsError::TooFew(samples.len()));
    }
    if let Some(&bad) = samples.iter().find(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite(bad));
    }
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let ss: f64 = samples.iter().map(|x| (x - mean).powi(2)).sum();
    let std = (ss / (n - 1) as f64).sqrt();
    Ok(GaussianFit {
        mean,
        std,
        n,
        degenerate: samples.iter().all(|&x| x == samples[0]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_histogram() {
        let bins = histogram(&[0.001, 0.001, 0.003], 0.002).unwrap();
        assert_eq!(bins, vec![Bin { lower: 0.0, count: 2 }, Bin { lower: 0.002, count: 1 }]);
    }

    #[test]
    fn constant_input_single_bin() {
        let bins = histogram(&[0.0042; 17], 0.002).unwrap();
        assert_eq!(bins.len(), 1);
        assert_eq!(bins[0].count, 17);
    }

    #[test]
    fn histogram_errors() {
        assert_eq!(histogram(&[], 0.002), Err(StatsError::Empty));
        assert!(histogram(&[0.0], 0.0).is_err());
        assert!(histogram(&[f64::NAN], 0.1).is_err());
    }

    #[test]
    fn fit_hand_example() {
        let f = fit_normal(&[0.0, 0.0, 0.0, 0.004]).unwrap();
        assert!((f.mean - 0.001).abs() < 1e-15);
        assert!((f.std - 0.002).abs() < 1e-15);
        assert!(!f.degenerate);
    }

    #[test]
    fn constant_fit_is_flagged() {
        let f = fit_normal(&[0.3; 5]).unwrap();
        assert_eq!(f.std, 0.0);
        assert!(f.degenerate);
        assert_eq!(fit_normal(&[1.0]), Err(StatsError::TooFew(1)));
    }

    proptest! {
        #[test]
        fn counts_sum_and_edges(
            xs in prop::collection::vec(-0.05..0.05f64, 1..500),
            w in 1e-4..1e-2f64,
        ) {
            let bins = histogram(&xs, w).unwrap();
            prop_assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), xs.len());
            for b in &bins {
                let k = b.lower / w;
                prop_assert!((k - k.round()).abs() < 1e-6);
            }
            for pair in bins.windows(2) {
                prop_assert!((pair[1].lower - pair[0].lower - w).abs() < 1e-9);
            }
        }
    }
}
