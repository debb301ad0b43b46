use rayon::prelude::*;

use super::auc::roc_auc;
use super::bootstrap::{interval_of, two_class_resample};
use super::curves::{Alignment, HourlyPredictions};
use crate::error::{Error, Result};
use crate::numerics::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonPoint {
    pub hour: usize,
    pub auc_a: f64,
    pub auc_b: f64,
    pub difference: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub p_value: f64,
}

/// Two-sided p-value from paired bootstrap differences: twice the share of
/// resamples whose difference does not have the observed sign, capped at 1.
pub fn paired_p_value(observed: f64, resampled: &[f64]) -> f64 {
    if observed == 0.0 || resampled.is_empty() {
        return 1.0;
    }
    let reversed = resampled
        .iter()
        .filter(|&&d| if observed > 0.0 { d <= 0.0 } else { d >= 0.0 })
        .count();
    (2.0 * reversed as f64 / resampled.len() as f64).min(1.0)
}

fn check_paired(a: &HourlyPredictions, b: &HourlyPredictions) -> Result<()> {
    if a.encounter_ids != b.encounter_ids {
        return Err(Error::Mismatch("the two prediction sets cover different encounters".into()));
    }
    if a.labels != b.labels {
        return Err(Error::Mismatch("labels differ between prediction sets".into()));
    }
    Ok(())
}

fn subset(v: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| v[i]).collect()
}

/// Per-point AUC difference `A - B` with a paired bootstrap over encounters.
pub fn compare_models(
    a: &HourlyPredictions,
    b: &HourlyPredictions,
    alignment: Alignment,
    horizon: usize,
    iterations: usize,
    seed: u64,
) -> Result<Vec<ComparisonPoint>> {
    check_paired(a, b)?;
    HourlyPredictions::steps(alignment, horizon)
        .into_par_iter()
        .map(|step| {
            let (sa, sb) = (a.column(step, alignment), b.column(step, alignment));
            let auc_a = roc_auc(&sa, &a.labels)?;
            let auc_b = roc_auc(&sb, &a.labels)?;
            let diff = auc_a - auc_b;
            let step_seed = derive_seed(seed, &[step as u64]);
            let diffs: Vec<f64> = (0..iterations)
                .map(|it| {
                    let idx = two_class_resample(&a.labels, step_seed, it)?;
                    let y: Vec<bool> = idx.iter().map(|&i| a.labels[i]).collect();
                    Ok(roc_auc(&subset(&sa, &idx), &y)? - roc_auc(&subset(&sb, &idx), &y)?)
                })
                .collect::<Result<_>>()?;
            let (ci_lo, ci_hi) = if diffs.is_empty() {
                (diff, diff)
            } else {
                let ci = interval_of(&diffs);
                (ci.lo, ci.hi)
            };
            Ok(ComparisonPoint {
                hour: step,
                auc_a,
                auc_b,
                difference: diff,
                ci_lo,
                ci_hi,
                p_value: paired_p_value(diff, &diffs),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanAucComparison {
    pub mean_auc_a: f64,
    pub mean_auc_b: f64,
    pub difference: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub p_value: f64,
    /// Difference of mean AUCs in each resample, in iteration order.
    pub resampled: Vec<f64>,
}

fn mean_auc_over(cols: &[Vec<f64>], labels: &[bool], idx: Option<&[usize]>) -> Result<f64> {
    let mut total = 0.0;
    for c in cols {
        total += match idx {
            Some(idx) => {
                let y: Vec<bool> = idx.iter().map(|&i| labels[i]).collect();
                roc_auc(&subset(c, idx), &y)?
            }
            None => roc_auc(c, labels)?,
        };
    }
    Ok(total / cols.len() as f64)
}

/// Difference in stay-averaged AUC (mean of the hourly curve) with a paired
/// bootstrap: each resample of encounters is shared by every hour and both
/// models.
pub fn compare_mean_auc(
    a: &HourlyPredictions,
    b: &HourlyPredictions,
    alignment: Alignment,
    horizon: usize,
    iterations: usize,
    seed: u64,
) -> Result<MeanAucComparison> {
    check_paired(a, b)?;
    if horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    let steps = HourlyPredictions::steps(alignment, horizon);
    let cols_a: Vec<Vec<f64>> = steps.iter().map(|&s| a.column(s, alignment)).collect();
    let cols_b: Vec<Vec<f64>> = steps.iter().map(|&s| b.column(s, alignment)).collect();
    let mean_auc_a = mean_auc_over(&cols_a, &a.labels, None)?;
    let mean_auc_b = mean_auc_over(&cols_b, &a.labels, None)?;
    let difference = mean_auc_a - mean_auc_b;
    let resampled: Vec<f64> = (0..iterations)
        .into_par_iter()
        .map(|it| {
            let idx = two_class_resample(&a.labels, seed, it)?;
            Ok(mean_auc_over(&cols_a, &a.labels, Some(&idx))? - mean_auc_over(&cols_b, &a.labels, Some(&idx))?)
        })
        .collect::<Result<_>>()?;
    let (ci_lo, ci_hi) = if resampled.is_empty() {
        (difference, difference)
    } else {
        let ci = interval_of(&resampled);
        (ci.lo, ci.hi)
    };
    Ok(MeanAucComparison {
        mean_auc_a,
        mean_auc_b,
        difference,
        ci_lo,
        ci_hi,
        p_value: paired_p_value(difference, &resampled),
        resampled,
    })
}
