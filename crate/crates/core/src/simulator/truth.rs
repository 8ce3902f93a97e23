//! Truth sidecar: `key = value` lines written next to a simulated CSV.
//!
//! ```text
//! theta_fc = 0.055
//! theta_sat = 0.35
//! k = 0.00003
//! seed = 7
//! rain = 1498701600,1498716000,30
//! ```
//!
//! `rain` repeats, one line per event (`start,end,depth_mm`). Blank lines and
//! `#` comments are ignored.

use std::fmt::Write as _;

use super::{SimConfig, SimError};
use crate::soilphys::RainEvent;

#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub theta_fc: f64,
    pub theta_sat: f64,
    pub k: f64,
    pub seed: u64,
    pub rains: Vec<RainEvent>,
}

impl Truth {
    pub fn from_config(cfg: &SimConfig) -> Self {
        Truth {
            theta_fc: cfg.soil.theta_fc,
            theta_sat: cfg.soil.theta_sat,
            k: cfg.soil.drainage_rate,
            seed: cfg.seed,
            rains: cfg.schedule.clone(),
        }
    }
}

pub fn write_truth(t: &Truth) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "theta_fc = {}", t.theta_fc);
    let _ = writeln!(s, "theta_sat = {}", t.theta_sat);
    let _ = writeln!(s, "k = {}", t.k);
    let _ = writeln!(s, "seed = {}", t.seed);
    for r in &t.rains {
        let _ = writeln!(s, "rain = {},{},{}", r.start, r.end, r.depth_mm);
    }
    s
}

/// Fields as they appear in a sidecar, before checking that all are present.
struct Partial {
    theta_fc: Option<f64>,
    theta_sat: Option<f64>,
    k: Option<f64>,
    seed: Option<u64>,
    rains: Vec<RainEvent>,
}

fn err(line: usize, reason: String) -> SimError {
    SimError::Truth { line, reason }
}

pub fn parse_truth(text: &str) -> Result<Truth, SimError> {
    let p = parse_partial(text)?;
    let last = text.lines().count();
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| err(last, format!("missing key `{name}`")));
    Ok(Truth {
        theta_fc: need(p.theta_fc, "theta_fc")?,
        theta_sat: need(p.theta_sat, "theta_sat")?,
        k: need(p.k, "k")?,
        seed: p.seed.ok_or_else(|| err(last, "missing key `seed`".into()))?,
        rains: p.rains,
    })
}

/// Only the `rain` lines of a sidecar-format file; other keys are optional.
pub fn parse_rain_record(text: &str) -> Result<Vec<RainEvent>, SimError> {
    Ok(parse_partial(text)?.rains)
}

fn parse_partial(text: &str) -> Result<Partial, SimError> {
    let (mut fc, mut sat, mut k, mut seed) = (None, None, None, None);
    let mut rains = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| err(line, "expected `key = value`".into()))?;
        let (key, value) = (key.trim(), value.trim());
        let real = |v: &str| -> Result<f64, SimError> {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| err(line, format!("`{v}` is not a finite number")))
        };
        let slot = match key {
            "theta_fc" => &mut fc,
            "theta_sat" => &mut sat,
            "k" => &mut k,
            "seed" => {
                if seed.is_some() {
                    return Err(err(line, "duplicate key `seed`".into()));
                }
                seed = Some(value.parse::<u64>().map_err(|_| err(line, format!("bad seed `{value}`")))?);
                continue;
            }
            "rain" => {
                let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                let [s, e, d] = parts[..] else {
                    return Err(err(line, "rain needs `start,end,depth_mm`".into()));
                };
                let ts = |v: &str| v.parse::<i64>().map_err(|_| err(line, format!("bad timestamp `{v}`")));
                let ev = RainEvent::new(ts(s)?, ts(e)?, real(d)?).map_err(|e| err(line, e.to_string()))?;
                rains.push(ev);
                continue;
            }
            other => return Err(err(line, format!("unknown key `{other}`"))),
        };
        if slot.is_some() {
            return Err(err(line, format!("duplicate key `{key}`")));
        }
        *slot = Some(real(value)?);
    }
    Ok(Partial { theta_fc: fc, theta_sat: sat, k, seed, rains })
}
