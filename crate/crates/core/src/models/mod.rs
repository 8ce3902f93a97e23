//! Regressors behind a common fit/predict contract, and the cross-validation driver.
//!
//! Every model sees standardized features. The [`Standardizer`] is fit on the
//! training rows only and travels with the [`FittedModel`].

pub mod adam;
pub mod container;
pub mod cv;
pub mod forest;
pub mod gbr;
pub mod mlp;
pub mod svr;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DatasetError, FeatureSet, Matrix, Standardizer};
use crate::metrics::MetricsError;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use container::{decode_model, encode_model, CONTAINER_FORMAT, CONTAINER_VERSION};
pub use cv::{cross_validate, CvResult};
pub use forest::{forest_fit, Forest, ForestConfig};
pub use gbr::{gbr_fit, GbrConfig, GbrModel};
pub use mlp::{mlp_fit, mlp_init, MlpConfig, MlpModel, Mode, Network};
pub use svr::{rbf_kernel, svr_fit, svr_solve, SvrConfig, SvrModel, SvrSolution};
pub use tree::{tree_fit, RegressionTree, TreeParams};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("batch of {got} rows is too small, need {needed}")]
    BatchTooSmall { needed: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("SVR solver stopped before convergence, max KKT violation {violation:e}")]
    SvrNotConverged { model: Box<SvrModel>, violation: f64 },
    #[error("model family mismatch: expected {expected}, found {found}")]
    FamilyMismatch { expected: Family, found: Family },
    #[error("model container: {0}")]
    Container(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Svr,
    #[serde(rename = "rf")]
    RandomForest,
    #[serde(rename = "gbr")]
    GradientBoosting,
    Mlp,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Svr, Family::RandomForest, Family::GradientBoosting, Family::Mlp];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Svr => "svr",
            Family::RandomForest => "rf",
            Family::GradientBoosting => "gbr",
            Family::Mlp => "mlp",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| ModelError::InvalidConfig(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "config", rename_all = "lowercase")]
pub enum RegressorConfig {
    Svr(SvrConfig),
    #[serde(rename = "rf")]
    RandomForest(ForestConfig),
    #[serde(rename = "gbr")]
    GradientBoosting(GbrConfig),
    Mlp(MlpConfig),
}

impl RegressorConfig {
    pub fn family(&self) -> Family {
        match self {
            RegressorConfig::Svr(_) => Family::Svr,
            RegressorConfig::RandomForest(_) => Family::RandomForest,
            RegressorConfig::GradientBoosting(_) => Family::GradientBoosting,
            RegressorConfig::Mlp(_) => Family::Mlp,
        }
    }

    pub fn default_for(family: Family) -> Self {
        match family {
            Family::Svr => RegressorConfig::Svr(SvrConfig::default()),
            Family::RandomForest => RegressorConfig::RandomForest(ForestConfig::default()),
            Family::GradientBoosting => RegressorConfig::GradientBoosting(GbrConfig::default()),
            Family::Mlp => RegressorConfig::Mlp(MlpConfig::default()),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            RegressorConfig::Svr(c) => c.validate(),
            RegressorConfig::RandomForest(c) => c.validate(),
            RegressorConfig::GradientBoosting(c) => c.validate(),
            RegressorConfig::Mlp(c) => c.validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorSpec {
    pub config: RegressorConfig,
    pub seed: u64,
    /// Accept an SVR whose solver ran out of passes instead of failing.
    #[serde(default)]
    pub allow_partial: bool,
}

impl RegressorSpec {
    pub fn new(config: RegressorConfig, seed: u64) -> Self {
        RegressorSpec { config, seed, allow_partial: false }
    }

    pub fn family(&self) -> Family {
        self.config.family()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "lowercase")]
pub enum ModelParams {
    Svr(SvrModel),
    #[serde(rename = "rf")]
    RandomForest(Forest),
    #[serde(rename = "gbr")]
    GradientBoosting(GbrModel),
    Mlp(MlpModel),
}

impl ModelParams {
    pub fn family(&self) -> Family {
        match self {
            ModelParams::Svr(_) => Family::Svr,
            ModelParams::RandomForest(_) => Family::RandomForest,
            ModelParams::GradientBoosting(_) => Family::GradientBoosting,
            ModelParams::Mlp(_) => Family::Mlp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: RegressorSpec,
    /// Input channels, when the model was trained from a dataset.
    pub features: Option<FeatureSet>,
    pub standardizer: Standardizer,
    pub params: ModelParams,
    /// Set when an unconverged SVR was accepted; holds the final KKT violation.
    pub unconverged_violation: Option<f64>,
}

impl FittedModel {
    pub fn family(&self) -> Family {
        self.params.family()
    }

    pub fn n_features(&self) -> usize {
        self.standardizer.dim()
    }

    /// Predicts from raw (unstandardized) features.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>, ModelError> {
        if x.rows() == 0 {
            return Ok(Vec::new());
        }
        let z = self.standardizer.apply(x)?;
        match &self.params {
            ModelParams::Svr(m) => m.predict(&z),
            ModelParams::RandomForest(m) => Ok(m.predict(&z)),
            ModelParams::GradientBoosting(m) => Ok(m.predict(&z)),
            ModelParams::Mlp(m) => m.predict(&z),
        }
    }

    /// Like [`FittedModel::predict`] but insists on a family.
    pub fn predict_as(&self, family: Family, x: &Matrix) -> Result<Vec<f64>, ModelError> {
        if self.family() != family {
            return Err(ModelError::FamilyMismatch { expected: family, found: self.family() });
        }
        self.predict(x)
    }
}

pub fn svr_predict(m: &FittedModel, x: &Matrix) -> Result<Vec<f64>, ModelError> {
    m.predict_as(Family::Svr, x)
}

/// Fits the standardizer on `x`, then the configured regressor on the
/// standardized rows.
pub fn fit(spec: &RegressorSpec, x: &Matrix, y: &[f64]) -> Result<FittedModel, ModelError> {
    spec.config.validate()?;
    if y.len() != x.rows() {
        return Err(ModelError::DimensionMismatch { expected: x.rows(), got: y.len() });
    }
    let standardizer = Standardizer::fit(x)?;
    let z = standardizer.apply(x)?;
    let mut unconverged_violation = None;
    let params = match &spec.config {
        RegressorConfig::Svr(c) => {
            if z.rows() < 2 {
                return Err(ModelError::TooFewRows { needed: 2, got: z.rows() });
            }
            match svr_fit(&z, y, c) {
                Ok(m) => ModelParams::Svr(m),
                Err(ModelError::SvrNotConverged { model, violation }) if spec.allow_partial => {
                    unconverged_violation = Some(violation);
                    ModelParams::Svr(*model)
                }
                Err(e) => return Err(e),
            }
        }
        RegressorConfig::RandomForest(c) => ModelParams::RandomForest(forest_fit(&z, y, c, spec.seed)?),
        RegressorConfig::GradientBoosting(c) => ModelParams::GradientBoosting(gbr_fit(&z, y, c)?),
        RegressorConfig::Mlp(c) => ModelParams::Mlp(mlp_fit(&z, y, c, spec.seed)?),
    };
    Ok(FittedModel { spec: spec.clone(), features: None, standardizer, params, unconverged_violation })
}
