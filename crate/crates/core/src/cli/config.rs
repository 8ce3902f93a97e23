//! Run configuration: line-oriented `section.key = value` with `#` comments.
//! Command-line `--set section.key=value` overrides are applied after the file.

use std::str::FromStr;

use crate::dataset::FoldMode;
use crate::models::{AdamConfig, ForestConfig, GbrConfig, MlpConfig, SvrConfig};
use crate::simulator::SimConfig;
use crate::soilphys::FcConfig;

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvMode {
    Contiguous,
    Shuffled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub sim: SimConfig,
    /// Days of simulated record; converted to seconds for the simulator.
    pub duration_days: f64,
    pub noise_enabled: bool,
    pub fc: FcConfig,
    pub svr: SvrConfig,
    pub rf: ForestConfig,
    pub gbr: GbrConfig,
    pub mlp: MlpConfig,
    pub cv_folds: usize,
    pub cv_mode: CvMode,
    pub dispersion_max: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            sim: SimConfig::default(),
            duration_days: 11.0,
            noise_enabled: true,
            fc: FcConfig::default(),
            svr: SvrConfig::default(),
            rf: ForestConfig::default(),
            gbr: GbrConfig::default(),
            mlp: MlpConfig::default(),
            cv_folds: 5,
            cv_mode: CvMode::Contiguous,
            dispersion_max: 0.005,
        }
    }
}

/// Every accepted key, in echo order.
pub const KEYS: &[&str] = &[
    "run.seed",
    "sim.duration_days",
    "sim.dt_seconds",
    "sim.start",
    "sim.theta0",
    "soil.theta_fc",
    "soil.theta_sat",
    "soil.theta_r",
    "soil.drainage_rate",
    "soil.et_rate",
    "soil.infiltration_depth",
    "noise.enabled",
    "noise.yl69_offset",
    "noise.yl69_a",
    "noise.yl69_b",
    "noise.yl69_temp_coeff",
    "noise.yl69_std",
    "noise.sen13322_offset",
    "noise.sen13322_a",
    "noise.sen13322_b",
    "noise.sen13322_temp_coeff",
    "noise.sen13322_std",
    "noise.temp_mean",
    "noise.temp_amplitude",
    "noise.temp_lag_seconds",
    "noise.temp_std",
    "noise.ds18s20_std",
    "noise.sht10_temp_std",
    "noise.humidity_scale",
    "noise.humidity_std",
    "fc.settle_seconds",
    "fc.slope_tol",
    "fc.min_samples",
    "svr.c",
    "svr.epsilon",
    "svr.gamma",
    "svr.max_passes",
    "svr.kkt_tol",
    "svr.cache_mb",
    "rf.n_estimators",
    "rf.max_leaf_nodes",
    "rf.max_depth",
    "rf.bootstrap",
    "rf.min_samples_leaf",
    "gbr.n_estimators",
    "gbr.max_leaf_nodes",
    "gbr.max_depth",
    "gbr.random_state",
    "gbr.learning_rate",
    "mlp.hidden_layers",
    "mlp.hidden_width",
    "mlp.elu_alpha",
    "mlp.l2_lambda",
    "mlp.epochs",
    "mlp.batch_size",
    "mlp.learning_rate",
    "mlp.beta1",
    "mlp.beta2",
    "mlp.adam_eps",
    "mlp.bn_eps",
    "mlp.bn_momentum",
    "cv.folds",
    "cv.mode",
    "compare.dispersion_max",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| CliError::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(CliError::Config(format!("bad value `{value}` for `{key}`, expected true or false"))),
    }
}

impl RunConfig {
    /// Sets one key. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        let s = &mut self.sim;
        let n = &mut s.noise;
        macro_rules! p {
            () => {
                parse(key, v)?
            };
        }
        match key {
            "run.seed" => self.seed = p!(),
            "sim.duration_days" => self.duration_days = p!(),
            "sim.dt_seconds" => s.dt = p!(),
            "sim.start" => s.start = p!(),
            "sim.theta0" => s.theta0 = p!(),
            "soil.theta_fc" => s.soil.theta_fc = p!(),
            "soil.theta_sat" => s.soil.theta_sat = p!(),
            "soil.theta_r" => s.soil.theta_r = p!(),
            "soil.drainage_rate" => s.soil.drainage_rate = p!(),
            "soil.et_rate" => s.soil.et_rate = p!(),
            "soil.infiltration_depth" => s.soil.infiltration_depth = p!(),
            "noise.enabled" => self.noise_enabled = parse_bool(key, v)?,
            "noise.yl69_offset" => n.yl69.offset = p!(),
            "noise.yl69_a" => n.yl69.a = p!(),
            "noise.yl69_b" => n.yl69.b = p!(),
            "noise.yl69_temp_coeff" => n.yl69.temp_coeff = p!(),
            "noise.yl69_std" => n.yl69.noise_std = p!(),
            "noise.sen13322_offset" => n.sen13322.offset = p!(),
            "noise.sen13322_a" => n.sen13322.a = p!(),
            "noise.sen13322_b" => n.sen13322.b = p!(),
            "noise.sen13322_temp_coeff" => n.sen13322.temp_coeff = p!(),
            "noise.sen13322_std" => n.sen13322.noise_std = p!(),
            "noise.temp_mean" => n.temp_mean = p!(),
            "noise.temp_amplitude" => n.temp_amplitude = p!(),
            "noise.temp_lag_seconds" => n.temp_lag_seconds = p!(),
            "noise.temp_std" => n.temp_noise_std = p!(),
            "noise.ds18s20_std" => n.ds18s20_noise_std = p!(),
            "noise.sht10_temp_std" => n.sht10_temp_noise_std = p!(),
            "noise.humidity_scale" => n.humidity_scale = p!(),
            "noise.humidity_std" => n.humidity_noise_std = p!(),
            "fc.settle_seconds" => self.fc.settle_seconds = p!(),
            "fc.slope_tol" => self.fc.slope_tol = p!(),
            "fc.min_samples" => self.fc.min_samples = p!(),
            "svr.c" => self.svr.c_penalty = p!(),
            "svr.epsilon" => self.svr.epsilon_tube = p!(),
            "svr.gamma" => self.svr.gamma = p!(),
            "svr.max_passes" => self.svr.max_passes = p!(),
            "svr.kkt_tol" => self.svr.kkt_tol = p!(),
            "svr.cache_mb" => self.svr.cache_mb = p!(),
            "rf.n_estimators" => self.rf.n_estimators = p!(),
            "rf.max_leaf_nodes" => self.rf.max_leaf_nodes = p!(),
            "rf.max_depth" => self.rf.max_depth = p!(),
            "rf.bootstrap" => self.rf.bootstrap = parse_bool(key, v)?,
            "rf.min_samples_leaf" => self.rf.min_samples_leaf = p!(),
            "gbr.n_estimators" => self.gbr.n_estimators = p!(),
            "gbr.max_leaf_nodes" => self.gbr.max_leaf_nodes = p!(),
            "gbr.max_depth" => self.gbr.max_depth = p!(),
            "gbr.random_state" => self.gbr.random_state = p!(),
            "gbr.learning_rate" => self.gbr.learning_rate = p!(),
            "mlp.hidden_layers" => self.mlp.hidden_layers = p!(),
            "mlp.hidden_width" => self.mlp.hidden_width = p!(),
            "mlp.elu_alpha" => self.mlp.elu_alpha = p!(),
            "mlp.l2_lambda" => self.mlp.l2_lambda = p!(),
            "mlp.epochs" => self.mlp.epochs = p!(),
            "mlp.batch_size" => self.mlp.batch_size = p!(),
            "mlp.learning_rate" => self.mlp.adam.lr = p!(),
            "mlp.beta1" => self.mlp.adam.beta1 = p!(),
            "mlp.beta2" => self.mlp.adam.beta2 = p!(),
            "mlp.adam_eps" => self.mlp.adam.eps = p!(),
            "mlp.bn_eps" => self.mlp.bn_eps = p!(),
            "mlp.bn_momentum" => self.mlp.bn_momentum = p!(),
            "cv.folds" => self.cv_folds = p!(),
            "cv.mode" => {
                self.cv_mode = match v {
                    "contiguous" => CvMode::Contiguous,
                    "shuffled" => CvMode::Shuffled,
                    _ => return Err(CliError::Config(format!("bad value `{v}` for `cv.mode`, expected contiguous or shuffled"))),
                }
            }
            "compare.dispersion_max" => self.dispersion_max = p!(),
            _ => return Err(CliError::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Current value of a key, formatted so that `set(key, get(key))` is a no-op.
    pub fn get(&self, key: &str) -> Option<String> {
        let s = &self.sim;
        let n = &s.noise;
        let a: &AdamConfig = &self.mlp.adam;
        let v = match key {
            "run.seed" => self.seed.to_string(),
            "sim.duration_days" => self.duration_days.to_string(),
            "sim.dt_seconds" => s.dt.to_string(),
            "sim.start" => s.start.to_string(),
            "sim.theta0" => s.theta0.to_string(),
            "soil.theta_fc" => s.soil.theta_fc.to_string(),
            "soil.theta_sat" => s.soil.theta_sat.to_string(),
            "soil.theta_r" => s.soil.theta_r.to_string(),
            "soil.drainage_rate" => s.soil.drainage_rate.to_string(),
            "soil.et_rate" => s.soil.et_rate.to_string(),
            "soil.infiltration_depth" => s.soil.infiltration_depth.to_string(),
            "noise.enabled" => self.noise_enabled.to_string(),
            "noise.yl69_offset" => n.yl69.offset.to_string(),
            "noise.yl69_a" => n.yl69.a.to_string(),
            "noise.yl69_b" => n.yl69.b.to_string(),
            "noise.yl69_temp_coeff" => n.yl69.temp_coeff.to_string(),
            "noise.yl69_std" => n.yl69.noise_std.to_string(),
            "noise.sen13322_offset" => n.sen13322.offset.to_string(),
            "noise.sen13322_a" => n.sen13322.a.to_string(),
            "noise.sen13322_b" => n.sen13322.b.to_string(),
            "noise.sen13322_temp_coeff" => n.sen13322.temp_coeff.to_string(),
            "noise.sen13322_std" => n.sen13322.noise_std.to_string(),
            "noise.temp_mean" => n.temp_mean.to_string(),
            "noise.temp_amplitude" => n.temp_amplitude.to_string(),
            "noise.temp_lag_seconds" => n.temp_lag_seconds.to_string(),
            "noise.temp_std" => n.temp_noise_std.to_string(),
            "noise.ds18s20_std" => n.ds18s20_noise_std.to_string(),
            "noise.sht10_temp_std" => n.sht10_temp_noise_std.to_string(),
            "noise.humidity_scale" => n.humidity_scale.to_string(),
            "noise.humidity_std" => n.humidity_noise_std.to_string(),
            "fc.settle_seconds" => self.fc.settle_seconds.to_string(),
            "fc.slope_tol" => self.fc.slope_tol.to_string(),
            "fc.min_samples" => self.fc.min_samples.to_string(),
            "svr.c" => self.svr.c_penalty.to_string(),
            "svr.epsilon" => self.svr.epsilon_tube.to_string(),
            "svr.gamma" => self.svr.gamma.to_string(),
            "svr.max_passes" => self.svr.max_passes.to_string(),
            "svr.kkt_tol" => self.svr.kkt_tol.to_string(),
            "svr.cache_mb" => self.svr.cache_mb.to_string(),
            "rf.n_estimators" => self.rf.n_estimators.to_string(),
            "rf.max_leaf_nodes" => self.rf.max_leaf_nodes.to_string(),
            "rf.max_depth" => self.rf.max_depth.to_string(),
            "rf.bootstrap" => self.rf.bootstrap.to_string(),
            "rf.min_samples_leaf" => self.rf.min_samples_leaf.to_string(),
            "gbr.n_estimators" => self.gbr.n_estimators.to_string(),
            "gbr.max_leaf_nodes" => self.gbr.max_leaf_nodes.to_string(),
            "gbr.max_depth" => self.gbr.max_depth.to_string(),
            "gbr.random_state" => self.gbr.random_state.to_string(),
            "gbr.learning_rate" => self.gbr.learning_rate.to_string(),
            "mlp.hidden_layers" => self.mlp.hidden_layers.to_string(),
            "mlp.hidden_width" => self.mlp.hidden_width.to_string(),
            "mlp.elu_alpha" => self.mlp.elu_alpha.to_string(),
            "mlp.l2_lambda" => self.mlp.l2_lambda.to_string(),
            "mlp.epochs" => self.mlp.epochs.to_string(),
            "mlp.batch_size" => self.mlp.batch_size.to_string(),
            "mlp.learning_rate" => a.lr.to_string(),
            "mlp.beta1" => a.beta1.to_string(),
            "mlp.beta2" => a.beta2.to_string(),
            "mlp.adam_eps" => a.eps.to_string(),
            "mlp.bn_eps" => self.mlp.bn_eps.to_string(),
            "mlp.bn_momentum" => self.mlp.bn_momentum.to_string(),
            "cv.folds" => self.cv_folds.to_string(),
            "cv.mode" => match self.cv_mode {
                CvMode::Contiguous => "contiguous".to_string(),
                CvMode::Shuffled => "shuffled".to_string(),
            },
            "compare.dispersion_max" => self.dispersion_max.to_string(),
            _ => return None,
        };
        Some(v)
    }

    /// `key = value` lines for every key starting with one of `prefixes`.
    pub fn echo(&self, prefixes: &[&str]) -> Vec<(&'static str, String)> {
        KEYS.iter()
            .filter(|k| prefixes.iter().any(|p| k.starts_with(p)))
            .map(|&k| (k, self.get(k).expect("listed keys are known")))
            .collect()
    }

    /// Simulator settings with the duration and noise switch applied.
    pub fn sim_config(&self) -> Result<SimConfig, CliError> {
        if !(self.duration_days.is_finite() && self.duration_days > 0.0) {
            return Err(CliError::Config("sim.duration_days must be > 0".into()));
        }
        let mut c = self.sim.clone();
        c.duration = self.duration_days * 86_400.0;
        c.seed = self.seed;
        if !self.noise_enabled {
            c.noise = c.noise.noiseless();
        }
        Ok(c)
    }

    pub fn fold_mode(&self) -> FoldMode {
        match self.cv_mode {
            CvMode::Contiguous => FoldMode::Contiguous,
            CvMode::Shuffled => FoldMode::Shuffled(self.seed),
        }
    }
}

/// Parses config text into `(line, key, value)` entries.
pub fn parse_config(text: &str) -> Result<Vec<(usize, String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("config line {}: expected `section.key = value`", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !k.contains('.') || v.is_empty() {
            return Err(CliError::Config(format!("config line {}: expected `section.key = value`", i + 1)));
        }
        out.push((i + 1, k.to_string(), v.to_string()));
    }
    Ok(out)
}

/// Defaults, then the file (if any), then the overrides, then `--seed`.
pub fn load_config(file_text: Option<&str>, overrides: &[String], seed: Option<u64>) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(text) = file_text {
        for (line, k, v) in parse_config(text)? {
            cfg.set(&k, &v).map_err(|e| CliError::Config(format!("config line {line}: {e}")))?;
        }
    }
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got `{o}`")))?;
        cfg.set(k.trim(), v)?;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}
