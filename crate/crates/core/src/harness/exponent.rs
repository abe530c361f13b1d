//! Empirical error exponent: the slope of `-log P̂err(T)` against `T`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::experiment::RunRecord;
use crate::error::{Error, Result};

/// Error counts at one budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentPoint {
    pub budget: usize,
    pub repetitions: usize,
    pub errors: usize,
    /// `errors / repetitions`.
    pub p_err: f64,
    /// `-log max(p_err, 1/(repetitions + 1))`.
    pub neg_log_p: f64,
}

impl ExponentPoint {
    pub fn new(budget: usize, repetitions: usize, errors: usize) -> Self {
        let p_err = errors as f64 / repetitions as f64;
        let floor = 1.0 / (repetitions as f64 + 1.0);
        Self {
            budget,
            repetitions,
            errors,
            p_err,
            neg_log_p: -p_err.max(floor).ln(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination; zero when the responses are constant.
    pub r_squared: f64,
    pub points: Vec<ExponentPoint>,
}

#[derive(Debug, Clone)]
pub struct ExponentOptions {
    pub min_budgets: usize,
    pub min_repetitions: usize,
}

impl Default for ExponentOptions {
    fn default() -> Self {
        Self {
            min_budgets: 4,
            min_repetitions: 100,
        }
    }
}

/// Ordinary least squares of `y` on `x`: `(slope, intercept, r²)`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 0.0 };
    (slope, intercept, r2)
}

/// Fits `-log P̂err(T) ≈ slope·T + intercept` over the given points.
pub fn fit_error_exponent(points: Vec<ExponentPoint>, opts: &ExponentOptions) -> Result<ExponentFit> {
    let mut points = points;
    points.sort_by_key(|p| p.budget);
    if points.len() < opts.min_budgets {
        return Err(Error::Data(format!(
            "need at least {} budgets, got {}",
            opts.min_budgets,
            points.len()
        )));
    }
    if let Some(p) = points.iter().find(|p| p.repetitions < opts.min_repetitions) {
        return Err(Error::Data(format!(
            "budget {} has {} repetitions, need at least {}",
            p.budget, p.repetitions, opts.min_repetitions
        )));
    }
    if points.iter().all(|p| p.errors == 0) {
        return Err(Error::ExponentUnresolved(
            "no errors at any budget; increase repetitions or use smaller budgets".into(),
        ));
    }
    if points[0].errors == 0 {
        return Err(Error::ExponentUnresolved(format!(
            "no errors at the smallest budget {}",
            points[0].budget
        )));
    }
    let x: Vec<f64> = points.iter().map(|p| p.budget as f64).collect();
    let y: Vec<f64> = points.iter().map(|p| p.neg_log_p).collect();
    let (slope, intercept, r_squared) = least_squares(&x, &y);
    Ok(ExponentFit {
        slope,
        intercept,
        r_squared,
        points,
    })
}

/// Groups final-round records by budget and fits the exponent. For each
/// budget `T`, only records with `t == T` are counted, so records from a
/// longer run's intermediate checkpoints are ignored. All records must
/// share one algorithm and one instance, and carry correctness.
pub fn estimate_error_exponent(records: &[RunRecord], budgets: &[usize], opts: &ExponentOptions) -> Result<ExponentFit> {
    if let Some(first) = records.first() {
        if records.iter().any(|r| r.algo != first.algo || r.instance != first.instance) {
            return Err(Error::Data("records mix several algorithms or instances".into()));
        }
    }
    let mut counts: BTreeMap<usize, (usize, usize)> = budgets.iter().map(|&b| (b, (0, 0))).collect();
    for r in records {
        if let Some((reps, errors)) = counts.get_mut(&r.t) {
            let correct = r
                .correct
                .ok_or_else(|| Error::Data("records without correctness cannot be scored".into()))?;
            *reps += 1;
            if !correct {
                *errors += 1;
            }
        }
    }
    let points = counts
        .into_iter()
        .map(|(budget, (reps, errors))| {
            if reps == 0 {
                Err(Error::Data(format!("no final-round records for budget {budget}")))
            } else {
                Ok(ExponentPoint::new(budget, reps, errors))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    fit_error_exponent(points, opts)
}
