use serde::{Deserialize, Serialize};

use super::{DatasetError, Matrix};

/// Per-column affine normalization to mean 0 and population standard deviation 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Fits column statistics. Constant columns get `std = 1`, so they map to 0.
    pub fn fit(x: &Matrix) -> Result<Self, DatasetError> {
        if x.rows() == 0 || x.cols() == 0 {
            return Err(DatasetError::EmptyMatrix);
        }
        let n = x.rows() as f64;
        let mut mean = Vec::with_capacity(x.cols());
        let mut std = Vec::with_capacity(x.cols());
        for j in 0..x.cols() {
            let col = x.column(j);
            if col.iter().all(|&v| v == col[0]) {
                mean.push(col[0]);
                std.push(1.0);
                continue;
            }
            let m = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            let s = var.sqrt();
            mean.push(m);
            std.push(if s > 0.0 { s } else { 1.0 });
        }
        Ok(Standardizer { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn check(&self, x: &Matrix) -> Result<(), DatasetError> {
        if x.cols() != self.dim() {
            return Err(DatasetError::DimensionMismatch { expected: self.dim(), got: x.cols() });
        }
        Ok(())
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix, DatasetError> {
        self.check(x)?;
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.std[j];
            }
        }
        Ok(out)
    }

    /// Standardizes a single row into `out`.
    pub fn apply_row(&self, row: &[f64], out: &mut [f64]) {
        for (j, (o, v)) in out.iter_mut().zip(row).enumerate() {
            *o = (v - self.mean[j]) / self.std[j];
        }
    }

    pub fn invert(&self, z: &Matrix) -> Result<Matrix, DatasetError> {
        self.check(z)?;
        let mut out = z.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = *v * self.std[j] + self.mean[j];
            }
        }
        Ok(out)
    }
}
