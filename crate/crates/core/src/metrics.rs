//! Evaluation metrics: RMSE, MAE and Pearson's R.
//!
//! Sums are compensated. Pearson's R uses the raw-sums form accumulated in
//! double-double precision and falls back to a mean-centered two-pass form when
//! either variance term cancels by more than six digits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("length mismatch: {0} actual vs {1} predicted")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
}

/// Neumaier-compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Unevaluated sum `hi + lo` with |lo| <= ulp(hi)/2.
#[derive(Debug, Clone, Copy, PartialEq)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    const ZERO: DoubleDouble = DoubleDouble { hi: 0.0, lo: 0.0 };

    fn from_f64(v: f64) -> Self {
        DoubleDouble { hi: v, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        (s, b - (s - a))
    }

    fn two_prod(a: f64, b: f64) -> (f64, f64) {
        let p = a * b;
        (p, a.mul_add(b, -p))
    }

    fn product(a: f64, b: f64) -> Self {
        let (hi, lo) = Self::two_prod(a, b);
        DoubleDouble { hi, lo }
    }

    fn add(self, o: Self) -> Self {
        let (s, e) = Self::two_sum(self.hi, o.hi);
        let (t, f) = Self::two_sum(self.lo, o.lo);
        let (s, e) = Self::quick_two_sum(s, e + t);
        let (hi, lo) = Self::quick_two_sum(s, e + f);
        DoubleDouble { hi, lo }
    }

    fn neg(self) -> Self {
        DoubleDouble { hi: -self.hi, lo: -self.lo }
    }

    fn sub(self, o: Self) -> Self {
        self.add(o.neg())
    }

    fn mul(self, o: Self) -> Self {
        let (p, e) = Self::two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = Self::quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

fn check(actual: &[f64], predicted: &[f64]) -> Result<(), MetricsError> {
    if actual.len() != predicted.len() {
        return Err(MetricsError::LengthMismatch(actual.len(), predicted.len()));
    }
    if actual.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(())
}

/// Root mean square error.
pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64, MetricsError> {
    check(actual, predicted)?;
    let mut s = CompensatedSum::default();
    for (a, p) in actual.iter().zip(predicted) {
        let d = a - p;
        s.add(d * d);
    }
    Ok((s.value() / actual.len() as f64).sqrt())
}

/// Mean absolute error.
pub fn mae(actual: &[f64], predicted: &[f64]) -> Result<f64, MetricsError> {
    check(actual, predicted)?;
    let mut s = CompensatedSum::default();
    for (a, p) in actual.iter().zip(predicted) {
        s.add((a - p).abs());
    }
    Ok(s.value() / actual.len() as f64)
}

/// Pearson's correlation coefficient; `None` when either series has zero
/// variance or fewer than two points.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<Option<f64>, MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 || is_constant(x) || is_constant(y) {
        return Ok(None);
    }
    let n = DoubleDouble::from_f64(x.len() as f64);
    let [mut sx, mut sy, mut sxx, mut syy, mut sxy] = [DoubleDouble::ZERO; 5];
    for (&a, &b) in x.iter().zip(y) {
        sx = sx.add(DoubleDouble::from_f64(a));
        sy = sy.add(DoubleDouble::from_f64(b));
        sxx = sxx.add(DoubleDouble::product(a, a));
        syy = syy.add(DoubleDouble::product(b, b));
        sxy = sxy.add(DoubleDouble::product(a, b));
    }
    let nxx = n.mul(sxx);
    let nyy = n.mul(syy);
    let dx = nxx.sub(sx.mul(sx));
    let dy = nyy.sub(sy.mul(sy));
    let lost = |d: DoubleDouble, scale: DoubleDouble| d.hi <= 1e-6 * scale.hi;
    let (num, dx, dy) = if lost(dx, nxx) || lost(dy, nyy) {
        centered_moments(x, y)
    } else {
        (n.mul(sxy).sub(sx.mul(sy)).to_f64(), dx.to_f64(), dy.to_f64())
    };
    if dx <= 0.0 || dy <= 0.0 {
        return Ok(None);
    }
    let r = num / (dx.sqrt() * dy.sqrt());
    Ok(Some(r.clamp(-1.0, 1.0)))
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&a| a == v[0])
}

/// Co-moment and variance terms from mean-centered data.
fn centered_moments(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mean = |v: &[f64]| {
        let mut s = DoubleDouble::ZERO;
        for &a in v {
            s = s.add(DoubleDouble::from_f64(a));
        }
        s.to_f64() / n
    };
    let (mx, my) = (mean(x), mean(y));
    let (mut cxy, mut cxx, mut cyy) = (DoubleDouble::ZERO, DoubleDouble::ZERO, DoubleDouble::ZERO);
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        cxy = cxy.add(DoubleDouble::product(da, db));
        cxx = cxx.add(DoubleDouble::product(da, da));
        cyy = cyy.add(DoubleDouble::product(db, db));
    }
    (cxy.to_f64(), cxx.to_f64(), cyy.to_f64())
}

/// RMSE, MAE and Pearson's R over `n` paired samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub rmse: f64,
    pub mae: f64,
    pub pearson_r: Option<f64>,
    pub n: usize,
}

impl EvaluationReport {
    pub fn compute(actual: &[f64], predicted: &[f64]) -> Result<Self, MetricsError> {
        Ok(EvaluationReport {
            rmse: rmse(actual, predicted)?,
            mae: mae(actual, predicted)?,
            pearson_r: pearson_r(actual, predicted)?,
            n: actual.len(),
        })
    }

    /// Pearson's R at 8 decimals, or `n/a`.
    pub fn pearson_display(&self) -> String {
        match self.pearson_r {
            Some(r) => format!("{r:.8}"),
            None => "n/a".to_string(),
        }
    }
}
