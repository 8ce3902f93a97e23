//! Sensor datasets: ingestion, validation, feature selection, standardization,
//! cross-validation fold plans and sensor cost accounting.

mod channel;
mod csv;
mod folds;
mod matrix;
mod standardize;

pub use channel::{
    sensor_cost, sensor_cost_cents, FeatureSet, Sensor, SensorChannel, REFERENCE_5TM_PRICE_CENTS,
};
pub use csv::{format_sig9, parse_csv, write_csv, CSV_HEADER};
pub use folds::{kfold_split, FoldMode, FoldPlan};
pub use matrix::Matrix;
pub use standardize::Standardizer;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("malformed row at line {0}")]
    MalformedRow(usize),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("timestamp at line {0} does not increase")]
    NonMonotoneTimestamp(usize),
    #[error("value {1} out of range for column `{0}`")]
    RangeViolation(String, f64),
    #[error("row {0} has no vwc_true target")]
    MissingTarget(usize),
    #[error("matrix is empty")]
    EmptyMatrix,
    #[error("invalid fold count k={0} for n={1}")]
    BadK(usize, usize),
    #[error("feature set is empty")]
    EmptyFeatureSet,
    #[error("feature `{0}` listed twice")]
    DuplicateFeature(String),
    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// One timestamped sample of all channels.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorRecord {
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
    /// Channel values indexed by [`SensorChannel::index`].
    pub values: [f64; 5],
    /// Reference VWC, a fraction in [0, 1].
    pub vwc_true: Option<f64>,
}

impl SensorRecord {
    pub fn value(&self, c: SensorChannel) -> f64 {
        self.values[c.index()]
    }

    /// Checks channel and target ranges. `column` of the first offending field is reported.
    pub fn validate(&self) -> Result<(), DatasetError> {
        for c in SensorChannel::ALL {
            let v = self.value(c);
            let (lo, hi) = c.range();
            if !v.is_finite() || v < lo || v > hi {
                return Err(DatasetError::RangeViolation(c.column().to_string(), v));
            }
        }
        if let Some(v) = self.vwc_true {
            if !(0.0..=1.0).contains(&v) {
                return Err(DatasetError::RangeViolation("vwc_true".to_string(), v));
            }
        }
        Ok(())
    }
}

/// Time-ordered sensor records from one node.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<SensorRecord>,
    pub source: String,
    /// Median spacing between consecutive timestamps, if there are at least two rows.
    pub interval_seconds: Option<i64>,
}

impl Dataset {
    /// Validates ranges and strict timestamp order.
    pub fn new(source: impl Into<String>, records: Vec<SensorRecord>) -> Result<Self, DatasetError> {
        for (i, r) in records.iter().enumerate() {
            r.validate()?;
            if i > 0 && r.timestamp <= records[i - 1].timestamp {
                // header is line 1, record i is on line i + 2
                return Err(DatasetError::NonMonotoneTimestamp(i + 2));
            }
        }
        let interval_seconds = infer_interval(&records);
        Ok(Dataset { records, source: source.into(), interval_seconds })
    }

    pub fn records(&self) -> &[SensorRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn timestamps(&self) -> Vec<i64> {
        self.records.iter().map(|r| r.timestamp).collect()
    }

    /// Ground-truth VWC series; `None` if any row lacks it.
    pub fn vwc_series(&self) -> Option<Vec<(i64, f64)>> {
        self.records.iter().map(|r| r.vwc_true.map(|v| (r.timestamp, v))).collect()
    }

    /// Input matrix for `fs` without requiring targets.
    pub fn feature_matrix(&self, fs: &FeatureSet) -> Matrix {
        let cols = fs.len();
        let mut data = Vec::with_capacity(self.records.len() * cols);
        for r in &self.records {
            data.extend(fs.channels().iter().map(|&c| r.value(c)));
        }
        Matrix::from_vec(self.records.len(), cols, data)
    }
}

fn infer_interval(records: &[SensorRecord]) -> Option<i64> {
    if records.len() < 2 {
        return None;
    }
    let mut d: Vec<i64> = records.windows(2).map(|w| w[1].timestamp - w[0].timestamp).collect();
    d.sort_unstable();
    Some(d[(d.len() - 1) / 2])
}

/// Input matrix (columns in canonical channel order restricted to `fs`) and
/// the `vwc_true` target vector.
pub fn select_features(ds: &Dataset, fs: &FeatureSet) -> Result<(Matrix, Vec<f64>), DatasetError> {
    let y = ds
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| r.vwc_true.ok_or(DatasetError::MissingTarget(i)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((ds.feature_matrix(fs), y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use SensorChannel::*;

    fn rec(t: i64, v: Option<f64>) -> SensorRecord {
        SensorRecord { timestamp: t, values: [17.0, 17.5, 80.0, 600.0 + (t / 120) as f64, 700.0], vwc_true: v }
    }

    fn five_rows() -> Dataset {
        let recs = (0..5).map(|i| rec(i * 120, Some(0.05 + 0.01 * i as f64))).collect();
        Dataset::new("t", recs).unwrap()
    }

    #[test]
    fn select_moisture_pair() {
        let ds = five_rows();
        let fs = FeatureSet::new(&[Sen13322Raw, Yl69Raw]).unwrap();
        let (x, y) = select_features(&ds, &fs).unwrap();
        assert_eq!((x.rows(), x.cols()), (5, 2));
        assert_eq!(x.row(1), &[601.0, 700.0]);
        assert_eq!(y.len(), 5);
    }

    #[test]
    fn select_all_is_canonical() {
        let ds = five_rows();
        let (x, _) = select_features(&ds, &FeatureSet::all()).unwrap();
        assert_eq!((x.rows(), x.cols()), (5, 5));
        assert_eq!(x.row(0), &[17.0, 17.5, 80.0, 600.0, 700.0]);
    }

    #[test]
    fn missing_target_reported_by_row() {
        let mut recs: Vec<_> = (0..5).map(|i| rec(i * 120, Some(0.05))).collect();
        recs[2].vwc_true = None;
        let ds = Dataset::new("t", recs).unwrap();
        assert_eq!(
            select_features(&ds, &FeatureSet::all()).unwrap_err(),
            DatasetError::MissingTarget(2)
        );
        assert!(ds.vwc_series().is_none());
    }

    #[test]
    fn interval_is_median_spacing() {
        assert_eq!(five_rows().interval_seconds, Some(120));
    }
}
