use serde::{Deserialize, Serialize};

use super::tree::{tree_fit, RegressionTree, TreeParams};
use super::ModelError;
use crate::dataset::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbrConfig {
    pub n_estimators: usize,
    pub max_leaf_nodes: usize,
    pub max_depth: usize,
    /// Recorded for provenance. Tree growth here has no random choices; split
    /// ties are broken by feature and threshold order.
    pub random_state: u64,
    pub learning_rate: f64,
}

impl Default for GbrConfig {
    fn default() -> Self {
        GbrConfig { n_estimators: 100, max_leaf_nodes: 25, max_depth: 3, random_state: 0, learning_rate: 0.1 }
    }
}

impl GbrConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n_estimators < 1 || self.max_depth < 1 || self.max_leaf_nodes < 2 {
            return Err(ModelError::InvalidConfig(
                "gbr: need n_estimators >= 1, max_depth >= 1, max_leaf_nodes >= 2".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(ModelError::InvalidConfig("gbr: learning_rate must be in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbrModel {
    pub base: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegressionTree>,
    /// Training MSE after stage 0 (the mean) and after each tree.
    pub train_mse: Vec<f64>,
}

/// Least-squares gradient boosting: each stage fits a tree to the current residuals.
pub fn gbr_fit(x: &Matrix, y: &[f64], cfg: &GbrConfig) -> Result<GbrModel, ModelError> {
    cfg.validate()?;
    let n = x.rows();
    if n == 0 {
        return Err(ModelError::TooFewRows { needed: 1, got: 0 });
    }
    let params = TreeParams { max_depth: cfg.max_depth, max_leaf_nodes: cfg.max_leaf_nodes, min_samples_leaf: 1 };
    let rows: Vec<usize> = (0..n).collect();
    // shifted mean: exact for a constant target
    let base = y[0] + y.iter().map(|v| v - y[0]).sum::<f64>() / n as f64;
    let mut fitted = vec![base; n];
    let mse = |f: &[f64]| f.iter().zip(y).map(|(p, t)| (t - p) * (t - p)).sum::<f64>() / n as f64;
    let mut train_mse = vec![mse(&fitted)];
    let mut trees = Vec::with_capacity(cfg.n_estimators);
    for _ in 0..cfg.n_estimators {
        let residual: Vec<f64> = y.iter().zip(&fitted).map(|(t, p)| t - p).collect();
        let tree = tree_fit(x, &residual, &rows, &params);
        for (i, f) in fitted.iter_mut().enumerate() {
            *f += cfg.learning_rate * tree.predict_row(x.row(i));
        }
        train_mse.push(mse(&fitted));
        trees.push(tree);
    }
    Ok(GbrModel { base, learning_rate: cfg.learning_rate, trees, train_mse })
}

impl GbrModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut f = self.base;
        for t in &self.trees {
            f += self.learning_rate * t.predict_row(x);
        }
        f
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.iter_rows().map(|r| self.predict_row(r)).collect()
    }
}
