use rayon::prelude::*;

use super::{fit, ModelError, RegressorSpec};
use crate::dataset::{FoldPlan, Matrix};
use crate::metrics::EvaluationReport;
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub folds: Vec<EvaluationReport>,
    pub pooled: EvaluationReport,
    /// Held-out prediction for every record, in record order.
    pub predictions: Vec<f64>,
    /// Folds whose SVR was accepted without converging.
    pub unconverged_folds: Vec<usize>,
}

/// K-fold cross-validation. Each fold refits the standardizer and model on its
/// complement; fold `f` uses the seed derived from `(spec.seed, f)`.
pub fn cross_validate(spec: &RegressorSpec, x: &Matrix, y: &[f64], plan: &FoldPlan) -> Result<CvResult, ModelError> {
    let n = x.rows();
    if plan.n() != n {
        return Err(ModelError::DimensionMismatch { expected: n, got: plan.n() });
    }
    if y.len() != n {
        return Err(ModelError::DimensionMismatch { expected: n, got: y.len() });
    }
    let outcomes: Vec<Result<(Vec<usize>, Vec<f64>, bool), ModelError>> = (0..plan.k)
        .into_par_iter()
        .map(|f| {
            let train = plan.train_indices(f);
            let test = plan.test_indices(f);
            let fold_spec = RegressorSpec { seed: rng::child_seed(spec.seed, &[rng::tag::CV_FOLD, f as u64]), ..spec.clone() };
            let ytrain: Vec<f64> = train.iter().map(|&i| y[i]).collect();
            let model = fit(&fold_spec, &x.select_rows(&train), &ytrain)?;
            let pred = model.predict(&x.select_rows(&test))?;
            Ok((test, pred, model.unconverged_violation.is_some()))
        })
        .collect();

    let mut predictions = vec![0.0; n];
    let mut folds = Vec::with_capacity(plan.k);
    let mut unconverged_folds = Vec::new();
    for (f, outcome) in outcomes.into_iter().enumerate() {
        let (test, pred, unconverged) = outcome?;
        let actual: Vec<f64> = test.iter().map(|&i| y[i]).collect();
        folds.push(EvaluationReport::compute(&actual, &pred)?);
        for (&i, p) in test.iter().zip(pred) {
            predictions[i] = p;
        }
        if unconverged {
            unconverged_folds.push(f);
        }
    }
    let pooled = EvaluationReport::compute(y, &predictions)?;
    Ok(CvResult { folds, pooled, predictions, unconverged_folds })
}
