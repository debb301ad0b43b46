use rand::Rng;
use rayon::prelude::*;

use super::auc::roc_auc;
use crate::error::{Error, Result};
use crate::numerics::{rng_for, SeededRng};

pub const DEFAULT_ITERATIONS: usize = 100;
const MAX_REDRAWS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub lo: f64,
    pub hi: f64,
}

/// Indices drawn with replacement.
pub fn resample_indices(rng: &mut SeededRng, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Resample whose labels contain both classes, redrawing from a fresh stream
/// `(seed, iteration, attempt)` until one does.
pub(crate) fn two_class_resample(labels: &[bool], seed: u64, iteration: usize) -> Result<Vec<usize>> {
    for attempt in 0..MAX_REDRAWS {
        let mut rng = rng_for(seed, &[iteration as u64, attempt]);
        let idx = resample_indices(&mut rng, labels.len());
        let pos = idx.iter().filter(|&&i| labels[i]).count();
        if pos > 0 && pos < idx.len() {
            return Ok(idx);
        }
    }
    Err(Error::UndefinedAuc)
}

/// AUC of each bootstrap resample, in iteration order.
pub fn bootstrap_aucs(scores: &[f64], labels: &[bool], iterations: usize, seed: u64) -> Result<Vec<f64>> {
    roc_auc(scores, labels)?;
    (0..iterations)
        .into_par_iter()
        .map(|it| {
            let idx = two_class_resample(labels, seed, it)?;
            let s: Vec<f64> = idx.iter().map(|&i| scores[i]).collect();
            let y: Vec<bool> = idx.iter().map(|&i| labels[i]).collect();
            roc_auc(&s, &y)
        })
        .collect()
}

/// Percentile `q` in `[0, 1]` of sorted data, interpolating linearly between
/// order statistics.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// 2.5th and 97.5th percentiles of a sample.
pub fn interval_of(values: &[f64]) -> ConfidenceInterval {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    ConfidenceInterval {
        lo: percentile(&v, 0.025),
        hi: percentile(&v, 0.975),
    }
}

/// 95% bootstrap interval for the AUC.
pub fn bootstrap_ci(scores: &[f64], labels: &[bool], iterations: usize, seed: u64) -> Result<ConfidenceInterval> {
    if iterations == 0 {
        return Err(Error::Config("bootstrap needs at least one iteration".into()));
    }
    Ok(interval_of(&bootstrap_aucs(scores, labels, iterations, seed)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 0.5), 3.0);
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 1.0), 5.0);
        assert!((percentile(&v, 0.1) - 1.4).abs() < 1e-12);
    }

    #[test]
    fn separated_sample_has_degenerate_interval() {
        let scores: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let labels: Vec<bool> = (0..200).map(|i| i >= 100).collect();
        let ci = bootstrap_ci(&scores, &labels, 100, 3).unwrap();
        assert_eq!((ci.lo, ci.hi), (1.0, 1.0));
    }

    #[test]
    fn seeded_and_brackets_median() {
        let scores: Vec<f64> = (0..80).map(|i| ((i * 37) % 80) as f64 / 80.0).collect();
        let labels: Vec<bool> = (0..80).map(|i| (i * 37) % 80 > 30 && i % 3 != 0).collect();
        let a = bootstrap_ci(&scores, &labels, 100, 9).unwrap();
        assert_eq!(a, bootstrap_ci(&scores, &labels, 100, 9).unwrap());
        let mut aucs = bootstrap_aucs(&scores, &labels, 100, 9).unwrap();
        aucs.sort_by(f64::total_cmp);
        let median = percentile(&aucs, 0.5);
        assert!(a.lo <= median && median <= a.hi);
        assert!(a.lo < a.hi);
    }

    #[test]
    fn tiny_samples_redraw() {
        let aucs = bootstrap_aucs(&[0.2, 0.8], &[false, true], 50, 1).unwrap();
        assert!(aucs.iter().all(|&a| a == 1.0));
    }
}
