//! Field capacity from the post-rain drainage plateau.
//!
//! Candidate windows open `settle_seconds` after each rain event ends and close
//! when the next event starts. Each window is cut into blocks of
//! `max(min_samples / 4, 1)` samples; every run of consecutive blocks holding at
//! least `min_samples` points is a candidate sub-window, accepted when its
//! Theil–Sen slope is below `slope_tol` in magnitude. The estimate is the median
//! VWC over the longest accepted sub-window (earliest on ties).

use serde::{Deserialize, Serialize};

use super::SoilError;

/// Upper bound on points entering one Theil–Sen fit; longer runs are
/// subsampled at an even index stride.
const THEIL_SEN_MAX_POINTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RainEvent {
    pub start: i64,
    pub end: i64,
    pub depth_mm: f64,
}

impl RainEvent {
    pub fn new(start: i64, end: i64, depth_mm: f64) -> Result<Self, SoilError> {
        if start >= end {
            return Err(SoilError::InvalidRainEvent(format!("start {start} not before end {end}")));
        }
        if !(depth_mm >= 0.0) || !depth_mm.is_finite() {
            return Err(SoilError::InvalidRainEvent(format!("depth {depth_mm} mm")));
        }
        Ok(RainEvent { start, end, depth_mm })
    }

    pub fn duration(&self) -> i64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FcConfig {
    /// Seconds after a rain ends before drainage is considered finished.
    pub settle_seconds: i64,
    /// Largest accepted |dθ/dt|, in 1/s.
    pub slope_tol: f64,
    /// Smallest sub-window population.
    pub min_samples: usize,
}

impl Default for FcConfig {
    fn default() -> Self {
        FcConfig { settle_seconds: 172_800, slope_tol: 1e-8, min_samples: 360 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldCapacityEstimate {
    pub theta_fc: f64,
    pub window_start: i64,
    pub window_end: i64,
    pub n_samples: usize,
    /// Population standard deviation of VWC inside the window.
    pub dispersion: f64,
    /// Theil–Sen slope of the window, 1/s.
    pub slope: f64,
}

fn median_in_place(v: &mut [f64]) -> f64 {
    let n = v.len();
    let mid = n / 2;
    let (_, &mut upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    if n % 2 == 1 {
        upper
    } else {
        let lower = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Median of pairwise slopes over `points`, subsampled to at most 256 points.
pub fn theil_sen_slope(points: &[(i64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let stride = points.len().div_ceil(THEIL_SEN_MAX_POINTS);
    let sub: Vec<(i64, f64)> = points.iter().step_by(stride).copied().collect();
    let mut slopes = Vec::with_capacity(sub.len() * (sub.len() - 1) / 2);
    for (i, &(ti, yi)) in sub.iter().enumerate() {
        for &(tj, yj) in &sub[i + 1..] {
            if tj != ti {
                slopes.push((yj - yi) / (tj - ti) as f64);
            }
        }
    }
    if slopes.is_empty() {
        return None;
    }
    Some(median_in_place(&mut slopes))
}

struct Candidate {
    lo: usize,
    hi: usize,
    slope: f64,
}

fn best_run_in_window(series: &[(i64, f64)], lo: usize, hi: usize, cfg: &FcConfig) -> Option<Candidate> {
    let len = hi - lo;
    let min = cfg.min_samples.max(2);
    if len < min {
        return None;
    }
    let block = (cfg.min_samples / 4).max(1);
    let n_blocks = len.div_ceil(block);
    let bound = |b: usize| (lo + b * block).min(hi);
    let mut best: Option<Candidate> = None;
    // longest runs first, then earliest start; stop at the first acceptance
    for n_run in (1..=n_blocks).rev() {
        for first in 0..=(n_blocks - n_run) {
            let (a, b) = (bound(first), bound(first + n_run));
            if b - a < min {
                continue;
            }
            if let Some(slope) = theil_sen_slope(&series[a..b]) {
                if slope.abs() < cfg.slope_tol {
                    best = Some(Candidate { lo: a, hi: b, slope });
                    break;
                }
            }
        }
        if best.is_some() {
            break;
        }
    }
    best
}

/// Estimates field capacity from a (timestamp, VWC) series and the rain record.
pub fn estimate_field_capacity(
    series: &[(i64, f64)],
    rains: &[RainEvent],
    cfg: &FcConfig,
) -> Result<FieldCapacityEstimate, SoilError> {
    if let Some(i) = series.windows(2).position(|w| w[1].0 <= w[0].0) {
        return Err(SoilError::UnsortedSeries(i + 1));
    }
    let mut wet: Vec<RainEvent> = rains.iter().copied().filter(|r| r.depth_mm > 0.0).collect();
    wet.sort_by_key(|r| (r.start, r.end));

    let mut best: Option<Candidate> = None;
    for (i, r) in wet.iter().enumerate() {
        let open = r.end.saturating_add(cfg.settle_seconds);
        let close = wet[i + 1..].iter().map(|n| n.start).find(|&s| s >= r.end).unwrap_or(i64::MAX);
        if open >= close {
            continue;
        }
        let lo = series.partition_point(|p| p.0 < open);
        let hi = series.partition_point(|p| p.0 < close);
        if let Some(c) = best_run_in_window(series, lo, hi, cfg) {
            if best.as_ref().is_none_or(|b| c.hi - c.lo > b.hi - b.lo) {
                best = Some(c);
            }
        }
    }
    let c = best.ok_or(SoilError::NoQuiescentWindow)?;
    let window = &series[c.lo..c.hi];
    let mut values: Vec<f64> = window.iter().map(|p| p.1).collect();
    let n = values.len() as f64;
    // shifted by the first value so a flat window has exactly zero spread
    let shift = values[0];
    let mean = shift + values.iter().map(|v| v - shift).sum::<f64>() / n;
    let dispersion = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    let theta_fc = median_in_place(&mut values).clamp(0.0, 1.0);
    Ok(FieldCapacityEstimate {
        theta_fc,
        window_start: window[0].0,
        window_end: window[window.len() - 1].0,
        n_samples: window.len(),
        dispersion,
        slope: c.slope,
    })
}
