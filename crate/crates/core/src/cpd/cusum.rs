//! Weighted CUSUM for changes in the variance of a univariate signal.
//!
//! The statistic compares a sliding window of `W` samples against a
//! reference variance `θ0` with the likelihood ratio averaged over a grid of
//! candidate post-change variances. After a detection at time `t` the scan
//! jumps to `t + W` and the reference is re-estimated on the window ending
//! there.

use serde::{Deserialize, Serialize};

use super::Segmentation;
use crate::error::{Error, Result};
use crate::stats::TimeSeries;

const MIN_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CusumParams {
    pub window: usize,
    /// Threshold `h` on the log of the weighted likelihood ratio.
    pub threshold: f64,
    /// Candidate post-change variances, strictly increasing and positive.
    pub theta_grid: Vec<f64>,
}

impl CusumParams {
    pub fn new(window: usize, threshold: f64, theta_grid: Vec<f64>) -> Result<Self> {
        let p = Self {
            window,
            threshold,
            theta_grid,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if self.window < 2 {
            return Err(Error::InvalidArgument("CUSUM window must be at least 2".into()));
        }
        if self.theta_grid.is_empty() {
            return Err(Error::InvalidArgument("empty variance grid".into()));
        }
        if self.theta_grid.iter().any(|&t| !(t > 0.0) || !t.is_finite())
            || self.theta_grid.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidArgument(
                "variance grid must be positive and strictly increasing".into(),
            ));
        }
        if self.threshold.is_nan() {
            return Err(Error::InvalidArgument("threshold is NaN".into()));
        }
        Ok(())
    }

    /// Grid spacing `b` (1 for a single-point grid).
    fn spacing(&self) -> f64 {
        let g = &self.theta_grid;
        if g.len() < 2 {
            1.0
        } else {
            (g[g.len() - 1] - g[0]) / (g.len() - 1) as f64
        }
    }
}

/// Uniform grid `0.2 v, 0.4 v, ..., 5 v` around a variance scale `v`.
pub fn default_theta_grid(v: f64) -> Vec<f64> {
    (1..=25).map(|i| 0.2 * i as f64 * v).collect()
}

/// Log weighted likelihood ratio as a function of the centered sum of
/// squares `S` of a window, for a fixed reference variance.
struct WindowStatistic {
    /// `-W/2 ln(θ_i/θ0)` per grid point.
    offsets: Vec<f64>,
    /// `(1/θ_i - 1/θ0) / 2` per grid point.
    slopes: Vec<f64>,
    log_spacing: f64,
}

impl WindowStatistic {
    fn new(params: &CusumParams, theta0: f64) -> Self {
        let w = params.window as f64;
        Self {
            offsets: params
                .theta_grid
                .iter()
                .map(|t| -0.5 * w * (t / theta0).ln())
                .collect(),
            slopes: params
                .theta_grid
                .iter()
                .map(|t| 0.5 * (1.0 / t - 1.0 / theta0))
                .collect(),
            log_spacing: params.spacing().ln(),
        }
    }

    fn eval(&self, s: f64) -> f64 {
        let mut max = f64::NEG_INFINITY;
        for (a, c) in self.offsets.iter().zip(&self.slopes) {
            max = max.max(a - c * s);
        }
        let sum: f64 = self
            .offsets
            .iter()
            .zip(&self.slopes)
            .map(|(a, c)| (a - c * s - max).exp())
            .sum();
        max + sum.ln() - self.log_spacing
    }

    /// Derivative of [`Self::eval`] in `S` (nondecreasing: the statistic is
    /// a log-sum-exp of affine functions, hence convex).
    fn slope(&self, s: f64) -> f64 {
        let mut max = f64::NEG_INFINITY;
        for (a, c) in self.offsets.iter().zip(&self.slopes) {
            max = max.max(a - c * s);
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for (a, c) in self.offsets.iter().zip(&self.slopes) {
            let e = (a - c * s - max).exp();
            num += e * c;
            den += e;
        }
        -num / den
    }

    /// Interval of `S >= 0` on which the statistic is below `h`, or `None`
    /// when it never is. Endpoints may be infinite.
    fn quiet_interval(&self, h: f64, scale: f64) -> Option<(f64, f64)> {
        const STEPS: usize = 200;
        if h == f64::INFINITY {
            return Some((f64::NEG_INFINITY, f64::INFINITY));
        }
        let bisect = |mut lo: f64, mut hi: f64, below_at_lo: bool| {
            for _ in 0..STEPS {
                let m = 0.5 * (lo + hi);
                if (self.eval(m) < h) == below_at_lo {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            if below_at_lo {
                hi
            } else {
                lo
            }
        };
        let increasing_eventually = self.slopes.iter().any(|&c| c < 0.0);
        // A point where the statistic is minimal, or a point below `h` when
        // the statistic decreases forever.
        let anchor = if self.slope(0.0) >= 0.0 {
            0.0
        } else if increasing_eventually {
            let mut hi = scale.max(1e-300);
            while self.slope(hi) < 0.0 {
                hi *= 2.0;
            }
            let (mut lo, mut hi) = (0.0, hi);
            for _ in 0..STEPS {
                let m = 0.5 * (lo + hi);
                if self.slope(m) < 0.0 {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            hi
        } else {
            let mut x = scale.max(1e-300);
            while self.eval(x) >= h {
                x *= 2.0;
                if !x.is_finite() {
                    return None;
                }
            }
            x
        };
        if self.eval(anchor) >= h {
            return None;
        }
        let left = if self.eval(0.0) < h {
            f64::NEG_INFINITY
        } else {
            bisect(0.0, anchor, false)
        };
        let right = if increasing_eventually {
            let mut hi = anchor.max(scale).max(1e-300);
            while self.eval(hi) < h {
                hi *= 2.0;
            }
            bisect(anchor, hi, true)
        } else {
            f64::INFINITY
        };
        Some((left, right))
    }
}

fn reference(x: &[f64]) -> Result<(f64, f64)> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if !(var >= MIN_VARIANCE) {
        return Err(Error::DegenerateVariance(var));
    }
    Ok((mean, var))
}

/// Detection times (index of the newest sample in the triggering window)
/// together with the statistic at detection.
pub fn cusum_detection_times(signal: &[f64], params: &CusumParams) -> Result<Vec<(usize, f64)>> {
    params.validate()?;
    let w = params.window;
    let t_len = signal.len();
    if t_len < 2 * w {
        return Err(Error::TooFewSamples(format!(
            "CUSUM needs at least {} samples, got {t_len}",
            2 * w
        )));
    }
    let mut sum = vec![0.0; t_len + 1];
    let mut sum_sq = vec![0.0; t_len + 1];
    for (i, &v) in signal.iter().enumerate() {
        sum[i + 1] = sum[i] + v;
        sum_sq[i + 1] = sum_sq[i] + v * v;
    }
    let h = params.threshold;

    let mut detections = Vec::new();
    let (mut mean, mut theta0) = reference(&signal[..w])?;
    let mut stat = WindowStatistic::new(params, theta0);
    let mut quiet = stat.quiet_interval(h, w as f64 * theta0);
    let mut t = w;
    while t < t_len {
        let start = t + 1 - w;
        let sy = sum[t + 1] - sum[start];
        let syy = sum_sq[t + 1] - sum_sq[start];
        let s = if mean == 0.0 {
            syy
        } else {
            // Centered sum of squares; recomputed directly when the prefix
            // form cancels badly.
            let fast = syy - 2.0 * mean * sy + w as f64 * mean * mean;
            if fast > 1e-8 * syy {
                fast
            } else {
                signal[start..=t].iter().map(|v| (v - mean).powi(2)).sum()
            }
        };
        let inside = quiet.is_some_and(|(a, b)| {
            (a == f64::NEG_INFINITY || s > a + 1e-9 * a.abs())
                && (b == f64::INFINITY || s < b - 1e-9 * b.abs())
        });
        let value = if inside { f64::NEG_INFINITY } else { stat.eval(s) };
        if value >= h {
            detections.push((t, value));
            t += w;
            if t >= t_len {
                break;
            }
            (mean, theta0) = reference(&signal[t + 1 - w..=t])?;
            stat = WindowStatistic::new(params, theta0);
            quiet = stat.quiet_interval(h, w as f64 * theta0);
        } else {
            t += 1;
        }
    }
    Ok(detections)
}

/// Weighted CUSUM on a single-channel series, reported at the granularity
/// of epochs of `epoch_len` samples. A detection at time `t` is attributed
/// to the epoch boundary nearest the centre of its triggering window.
pub fn cusum_weighted(ts: &TimeSeries, params: &CusumParams, epoch_len: usize) -> Result<Segmentation> {
    if ts.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: ts.dim(),
        });
    }
    if epoch_len == 0 {
        return Err(Error::InvalidArgument("epoch length must be positive".into()));
    }
    let signal = ts.channel(0);
    let n_epochs = signal.len() / epoch_len;
    let hits = cusum_detection_times(&signal, params)?;
    let mut best: Vec<Option<f64>> = vec![None; n_epochs];
    for (t, score) in hits {
        let centre = t as f64 + 1.0 - params.window as f64 / 2.0;
        let b = (centre / epoch_len as f64).round() as usize;
        if n_epochs < 2 {
            continue;
        }
        let b = b.clamp(1, n_epochs - 1);
        best[b] = Some(best[b].map_or(score, |s: f64| s.max(score)));
    }
    let (boundaries, scores): (Vec<usize>, Vec<f64>) = best
        .iter()
        .enumerate()
        .filter_map(|(b, s)| s.map(|s| (b, s)))
        .unzip();
    Segmentation::with_scores(boundaries, n_epochs.max(1), Some(scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn signal(seed: u64, t: usize, switch: usize, sd_after: f64) -> Vec<f64> {
        let mut r = rng::stream(seed, 0);
        (0..t)
            .map(|i| {
                let z: f64 = r.sample(StandardNormal);
                if i < switch {
                    z
                } else {
                    z * sd_after
                }
            })
            .collect()
    }

    fn grid() -> Vec<f64> {
        (1..=16).map(|i| 0.5 * i as f64).collect()
    }

    #[test]
    fn large_threshold_is_silent() {
        let x = signal(1, 2000, 2000, 1.0);
        let p = CusumParams::new(50, 50.0, grid()).unwrap();
        assert!(cusum_detection_times(&x, &p).unwrap().is_empty());
    }

    #[test]
    fn variance_step_detected_after_switch() {
        let x = signal(2, 1000, 500, 2.0);
        let p = CusumParams::new(50, 5.0, grid()).unwrap();
        let hits = cusum_detection_times(&x, &p).unwrap();
        let near = hits.iter().filter(|h| (500..=600).contains(&h.0)).count();
        assert_eq!(near, 1, "{hits:?}");
    }

    #[test]
    fn minus_infinity_threshold_fires_immediately() {
        let x = signal(3, 400, 400, 1.0);
        let p = CusumParams::new(50, -1e18, grid()).unwrap();
        let hits = cusum_detection_times(&x, &p).unwrap();
        assert_eq!(hits[0].0, 50);
        // Every jump lands on another detection.
        assert!(hits.windows(2).all(|w| w[1].0 == w[0].0 + 50));
    }

    #[test]
    fn quiet_interval_matches_direct_evaluation() {
        let x = signal(4, 3000, 1500, 1.5);
        for h in [-2.0, 0.0, 1.0, 3.0, 8.0] {
            let p = CusumParams::new(40, h, grid()).unwrap();
            let fast = cusum_detection_times(&x, &p).unwrap();
            // Reference scan evaluating the statistic at every step.
            let mut slow = Vec::new();
            let w = 40;
            let (mut m, mut th) = reference(&x[..w]).unwrap();
            let mut t = w;
            while t < x.len() {
                let s: f64 = x[t + 1 - w..=t].iter().map(|v| (v - m).powi(2)).sum();
                let st = WindowStatistic::new(&p, th);
                let v = st.eval(s);
                if v >= h {
                    slow.push(t);
                    t += w;
                    if t >= x.len() {
                        break;
                    }
                    (m, th) = reference(&x[t + 1 - w..=t]).unwrap();
                } else {
                    t += 1;
                }
            }
            let fast: Vec<usize> = fast.iter().map(|d| d.0).collect();
            assert_eq!(fast, slow, "h = {h}");
        }
    }

    #[test]
    fn degenerate_reference() {
        let x = vec![1.0; 200];
        let p = CusumParams::new(20, 1.0, grid()).unwrap();
        assert!(matches!(cusum_detection_times(&x, &p), Err(Error::DegenerateVariance(_))));
    }

    #[test]
    fn invalid_params() {
        assert!(CusumParams::new(1, 1.0, grid()).is_err());
        assert!(CusumParams::new(10, 1.0, vec![]).is_err());
        assert!(CusumParams::new(10, 1.0, vec![1.0, 0.5]).is_err());
        assert!(CusumParams::new(10, 1.0, vec![0.0, 0.5]).is_err());
    }
}
