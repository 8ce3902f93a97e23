use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{tree_fit, RegressionTree, TreeParams};
use super::ModelError;
use crate::dataset::Matrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_estimators: usize,
    pub max_leaf_nodes: usize,
    pub max_depth: usize,
    pub bootstrap: bool,
    pub min_samples_leaf: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig { n_estimators: 24, max_leaf_nodes: 30, max_depth: 7, bootstrap: true, min_samples_leaf: 1 }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n_estimators < 1 || self.max_depth < 1 || self.max_leaf_nodes < 2 || self.min_samples_leaf < 1 {
            return Err(ModelError::InvalidConfig(
                "rf: need n_estimators >= 1, max_depth >= 1, max_leaf_nodes >= 2, min_samples_leaf >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            max_leaf_nodes: self.max_leaf_nodes,
            min_samples_leaf: self.min_samples_leaf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<RegressionTree>,
}

/// Bagged CART ensemble. Tree `t` resamples from the stream `(seed, t)`, so the
/// fit is identical for any thread count.
pub fn forest_fit(x: &Matrix, y: &[f64], cfg: &ForestConfig, seed: u64) -> Result<Forest, ModelError> {
    cfg.validate()?;
    let n = x.rows();
    if n == 0 {
        return Err(ModelError::TooFewRows { needed: 1, got: 0 });
    }
    let params = cfg.tree_params();
    let trees = (0..cfg.n_estimators)
        .into_par_iter()
        .map(|t| {
            let rows: Vec<usize> = if cfg.bootstrap {
                let mut r = rng::stream(seed, &[rng::tag::FOREST_TREE, t as u64]);
                (0..n).map(|_| r.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            tree_fit(x, y, &rows, &params)
        })
        .collect();
    Ok(Forest { trees })
}

impl Forest {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let s: f64 = self.trees.iter().map(|t| t.predict_row(x)).sum();
        s / self.trees.len() as f64
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.iter_rows().map(|r| self.predict_row(r)).collect()
    }
}
