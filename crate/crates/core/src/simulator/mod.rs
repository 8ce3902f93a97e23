//! Synthetic ground truth: a bucket model of VWC at sensor depth driven by a
//! rain schedule, and noisy responses of the low-cost sensors to it.

mod truth;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{format_sig9, Dataset, DatasetError, SensorChannel, SensorRecord};
use crate::rng;
use crate::soilphys::RainEvent;

pub use truth::{parse_rain_record, parse_truth, write_truth, Truth};

/// 2017-06-29 00:00:00 UTC.
pub const DEFAULT_START: i64 = 1_498_694_400;
const DAY: i64 = 86_400;
const HOUR: i64 = 3_600;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("truth file line {line}: {reason}")]
    Truth { line: usize, reason: String },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoilParams {
    pub theta_fc: f64,
    pub theta_sat: f64,
    pub theta_r: f64,
    /// Drainage rate above field capacity, 1/s.
    pub drainage_rate: f64,
    /// Evapotranspiration loss, VWC/s.
    pub et_rate: f64,
    /// Depth of the soil column receiving rain, m.
    pub infiltration_depth: f64,
}

impl Default for SoilParams {
    fn default() -> Self {
        SoilParams {
            theta_fc: 0.055,
            theta_sat: 0.35,
            theta_r: 0.02,
            drainage_rate: 3e-5,
            et_rate: 2e-9,
            infiltration_depth: 0.30,
        }
    }
}

/// `raw = offset + a / (b + theta) + temp_coeff * (T - 20) + N(0, noise_std)`,
/// rounded and clamped to the 10-bit ADC range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoistureCurve {
    pub offset: f64,
    pub a: f64,
    pub b: f64,
    pub temp_coeff: f64,
    pub noise_std: f64,
}

impl MoistureCurve {
    pub fn response(&self, theta: f64, temp_c: f64) -> f64 {
        self.offset + self.a / (self.b + theta) + self.temp_coeff * (temp_c - 20.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorNoiseParams {
    pub yl69: MoistureCurve,
    pub sen13322: MoistureCurve,
    pub temp_mean: f64,
    pub temp_amplitude: f64,
    /// Lag of the soil temperature peak behind midnight, s.
    pub temp_lag_seconds: f64,
    /// Noise shared by both temperature sensors (the soil itself).
    pub temp_noise_std: f64,
    pub ds18s20_noise_std: f64,
    pub sht10_temp_noise_std: f64,
    /// Humidity is `100 (1 - exp(-theta / humidity_scale))` plus noise.
    pub humidity_scale: f64,
    pub humidity_noise_std: f64,
}

impl Default for SensorNoiseParams {
    fn default() -> Self {
        SensorNoiseParams {
            yl69: MoistureCurve { offset: 250.0, a: 40.0, b: 0.06, temp_coeff: 2.0, noise_std: 8.0 },
            sen13322: MoistureCurve { offset: 950.0, a: -25.0, b: 0.03, temp_coeff: -1.5, noise_std: 6.0 },
            temp_mean: 17.0,
            temp_amplitude: 1.5,
            temp_lag_seconds: 8.0 * HOUR as f64,
            temp_noise_std: 0.05,
            ds18s20_noise_std: 0.1,
            sht10_temp_noise_std: 0.1,
            humidity_scale: 0.04,
            humidity_noise_std: 1.5,
        }
    }
}

impl SensorNoiseParams {
    /// All noise levels set to zero.
    pub fn noiseless(mut self) -> Self {
        self.yl69.noise_std = 0.0;
        self.sen13322.noise_std = 0.0;
        self.temp_noise_std = 0.0;
        self.ds18s20_noise_std = 0.0;
        self.sht10_temp_noise_std = 0.0;
        self.humidity_noise_std = 0.0;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub start: i64,
    /// Length of the run, s. The series has `floor(duration / dt)` rows.
    pub duration: f64,
    pub dt: i64,
    pub seed: u64,
    pub theta0: f64,
    pub soil: SoilParams,
    pub noise: SensorNoiseParams,
    pub schedule: Vec<RainEvent>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            start: DEFAULT_START,
            duration: 11.0 * DAY as f64,
            dt: 120,
            seed: 0,
            theta0: 0.055,
            soil: SoilParams::default(),
            noise: SensorNoiseParams::default(),
            schedule: default_paper_like_schedule(DEFAULT_START),
        }
    }
}

impl SimConfig {
    pub fn n_steps(&self) -> usize {
        (self.duration / self.dt as f64).floor() as usize
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |s: &str| Err(SimError::InvalidConfig(s.to_string()));
        let s = &self.soil;
        if self.dt <= 0 {
            return bad("dt must be > 0");
        }
        if !(self.duration >= self.dt as f64) || !self.duration.is_finite() {
            return bad("duration must be at least dt");
        }
        if !(s.theta_r < s.theta_fc && s.theta_fc < s.theta_sat) || s.theta_r < 0.0 || s.theta_sat > 1.0 {
            return bad("need 0 <= theta_r < theta_fc < theta_sat <= 1");
        }
        if !(s.drainage_rate > 0.0) || !(s.et_rate >= 0.0) || !(s.infiltration_depth > 0.0) {
            return bad("need drainage_rate > 0, et_rate >= 0, infiltration_depth > 0");
        }
        if !(s.theta_r..=s.theta_sat).contains(&self.theta0) {
            return bad("theta0 must lie in [theta_r, theta_sat]");
        }
        let n = &self.noise;
        for c in [&n.yl69, &n.sen13322] {
            if !(c.noise_std >= 0.0) || c.a == 0.0 || !(c.b + s.theta_r > 0.0) {
                return bad("moisture curve needs noise_std >= 0, a != 0 and b + theta_r > 0");
            }
        }
        let stds = [n.temp_noise_std, n.ds18s20_noise_std, n.sht10_temp_noise_std, n.humidity_noise_std];
        if stds.iter().any(|v| !(*v >= 0.0)) || !(n.humidity_scale > 0.0) {
            return bad("noise std must be >= 0 and humidity_scale > 0");
        }
        for w in self.schedule.windows(2) {
            if w[1].start < w[0].end {
                return bad("rain events must be ordered and non-overlapping");
            }
        }
        if self.schedule.iter().any(|r| !(r.depth_mm >= 0.0)) {
            return bad("rain depth must be >= 0");
        }
        Ok(())
    }
}

/// Heavy rain on day 0, dry through day 3, two moderate events on days 4-5 and
/// one late event on day 9.
pub fn default_paper_like_schedule(start: i64) -> Vec<RainEvent> {
    let ev = |d: i64, h0: i64, h1: i64, mm: f64| RainEvent { start: start + d * DAY + h0, end: start + d * DAY + h1, depth_mm: mm };
    vec![
        ev(0, 2 * HOUR, 6 * HOUR, 30.0),
        ev(4, 10 * HOUR, 12 * HOUR, 8.0),
        ev(5, 12 * HOUR, 13 * HOUR + HOUR / 2, 6.0),
        ev(9, 12 * HOUR, 14 * HOUR, 10.0),
    ]
}

/// Rain depth in mm falling during `[t0, t1)`, each event spread uniformly.
fn rain_between(schedule: &[RainEvent], t0: i64, t1: i64) -> f64 {
    schedule
        .iter()
        .map(|r| {
            let overlap = (t1.min(r.end) - t0.max(r.start)).max(0);
            if overlap == 0 { 0.0 } else { r.depth_mm * overlap as f64 / r.duration() as f64 }
        })
        .sum()
}

/// Explicit-Euler bucket model, one row per step starting at `cfg.start`.
pub fn simulate_vwc(cfg: &SimConfig) -> Result<Vec<(i64, f64)>, SimError> {
    cfg.validate()?;
    let s = &cfg.soil;
    let dt = cfg.dt as f64;
    let n = cfg.n_steps();
    let mut out = Vec::with_capacity(n);
    let mut theta = cfg.theta0;
    for i in 0..n {
        let t = cfg.start + i as i64 * cfg.dt;
        out.push((t, theta));
        let rain = rain_between(&cfg.schedule, t, t + cfg.dt) / (1000.0 * s.infiltration_depth);
        let drain = s.drainage_rate * (theta - s.theta_fc).max(0.0) * dt;
        let et = if theta > s.theta_r { s.et_rate * dt } else { 0.0 };
        theta = (theta + rain - drain - et).clamp(s.theta_r, s.theta_sat);
    }
    Ok(out)
}

/// Rounds to what the CSV writer emits, so a written dataset parses back unchanged.
fn quantize(v: f64) -> f64 {
    format_sig9(v).parse().expect("format_sig9 output parses")
}

/// Sensor readings for a VWC series. Noise comes from the stream `(seed, SIM_NOISE)`.
pub fn synthesize_sensors(series: &[(i64, f64)], cfg: &SimConfig) -> Result<Dataset, SimError> {
    if series.is_empty() {
        return Err(SimError::InvalidConfig("empty VWC series".into()));
    }
    let p = &cfg.noise;
    let mut r = rng::stream(cfg.seed, &[rng::tag::SIM_NOISE]);
    let mut gauss = |sd: f64| if sd > 0.0 { Normal::new(0.0, sd).expect("finite std").sample(&mut r) } else { 0.0 };
    let t0 = cfg.start as f64;
    let mut records = Vec::with_capacity(series.len());
    for &(t, theta) in series {
        let phase = 2.0 * std::f64::consts::PI * (t as f64 - t0 - p.temp_lag_seconds) / DAY as f64;
        let soil_t = p.temp_mean + p.temp_amplitude * phase.sin() + gauss(p.temp_noise_std);
        let ds = soil_t + gauss(p.ds18s20_noise_std);
        let sht_t = soil_t + gauss(p.sht10_temp_noise_std);
        let hum = (100.0 * (1.0 - (-theta / p.humidity_scale).exp()) + gauss(p.humidity_noise_std)).clamp(0.0, 100.0);
        let yl = (p.yl69.response(theta, soil_t) + gauss(p.yl69.noise_std)).round().clamp(0.0, 1023.0);
        let sen = (p.sen13322.response(theta, soil_t) + gauss(p.sen13322.noise_std)).round().clamp(0.0, 1023.0);
        let mut values = [0.0; 5];
        values[SensorChannel::Ds18s20TempC.index()] = quantize(ds);
        values[SensorChannel::Sht10TempC.index()] = quantize(sht_t);
        values[SensorChannel::Sht10HumidityPct.index()] = quantize(hum);
        values[SensorChannel::Yl69Raw.index()] = yl;
        values[SensorChannel::Sen13322Raw.index()] = sen;
        records.push(SensorRecord { timestamp: t, values, vwc_true: Some(quantize(theta)) });
    }
    Ok(Dataset::new("simulated", records)?)
}

/// Runs both stages and returns the dataset with its truth record.
pub fn simulate(cfg: &SimConfig) -> Result<(Dataset, Truth), SimError> {
    let series = simulate_vwc(cfg)?;
    let ds = synthesize_sensors(&series, cfg)?;
    Ok((ds, Truth::from_config(cfg)))
}
