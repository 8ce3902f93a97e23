use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FoldMode {
    /// Consecutive index blocks. Keeps time-series neighbours together.
    Contiguous,
    /// Permute indices with the seed, then block.
    Shuffled(u64),
}

/// Assignment of every record index to exactly one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub mode: FoldMode,
    assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    /// Fold index of each record.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Held-out indices of fold `f`, ascending.
    pub fn test_indices(&self, f: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.assignment[i] == f).collect()
    }

    /// Training indices of fold `f` (the complement), ascending.
    pub fn train_indices(&self, f: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.assignment[i] != f).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Splits `n` records into `k` folds whose sizes differ by at most one.
/// The first `n % k` folds receive the extra record.
pub fn kfold_split(n: usize, k: usize, mode: FoldMode) -> Result<FoldPlan, DatasetError> {
    if k < 2 || k > n {
        return Err(DatasetError::BadK(k, n));
    }
    let mut order: Vec<usize> = (0..n).collect();
    if let FoldMode::Shuffled(seed) = mode {
        order.shuffle(&mut rng::stream(seed, &[rng::tag::FOLDS]));
    }
    let base = n / k;
    let extra = n % k;
    let mut assignment = vec![0; n];
    let mut pos = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        for &idx in &order[pos..pos + size] {
            assignment[idx] = f;
        }
        pos += size;
    }
    Ok(FoldPlan { k, mode, assignment })
}
