//! Expanding-window summary features and the logistic-regression baseline
//! trained on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::EncounterSeries;
use crate::numerics::{adam_step, dot, permutation, rng_for, sigmoid, AdamConfig, AdamState};
use crate::variables::{Variable, N_VARIABLES};

pub const STATS_PER_VARIABLE: usize = 6;
pub const N_FEATURES: usize = N_VARIABLES * STATS_PER_VARIABLE;
pub const STAT_NAMES: [&str; STATS_PER_VARIABLE] = ["min", "max", "mean", "std", "first", "last"];

pub fn feature_names() -> Vec<String> {
    Variable::ALL
        .iter()
        .flat_map(|v| STAT_NAMES.iter().map(move |s| format!("{}_{s}", v.name())))
        .collect()
}

/// Min, max, mean, population standard deviation, first and last value of
/// each variable over hours `[0, hour)`, variable-major.
pub fn aggregate_features(series: &EncounterSeries, hour: usize) -> Result<Vec<f64>> {
    if hour == 0 || hour > series.hours() {
        return Err(Error::HourOutOfRange {
            hour,
            len: series.hours(),
        });
    }
    let mut out = Vec::with_capacity(N_FEATURES);
    for v in Variable::ALL {
        let vals: Vec<f64> = series.column(v).take(hour).collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        out.extend([
            vals.iter().copied().fold(f64::INFINITY, f64::min),
            vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean,
            var.sqrt(),
            vals[0],
            vals[hour - 1],
        ]);
    }
    Ok(out)
}

/// [`aggregate_features`] at every hour `1..=T`, computed incrementally.
pub fn aggregate_trajectory(series: &EncounterSeries) -> Vec<Vec<f64>> {
    let t_len = series.hours();
    let mut rows = vec![Vec::with_capacity(N_FEATURES); t_len];
    for v in Variable::ALL {
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut mean, mut m2) = (0.0, 0.0);
        let mut first = 0.0;
        for (t, x) in series.column(v).enumerate() {
            if t == 0 {
                first = x;
            }
            min = min.min(x);
            max = max.max(x);
            let n = (t + 1) as f64;
            let delta = x - mean;
            mean += delta / n;
            m2 += delta * (x - mean);
            rows[t].extend([min, max, mean, (m2 / n).max(0.0).sqrt(), first, x]);
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            learning_rate: 1e-2,
            epochs: 10,
            batch_size: 256,
            l2: 1e-6,
            seed: 0,
        }
    }
}

/// Logistic regression over standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        sigmoid(dot(&self.weights, &self.standardize(x)) + self.bias)
    }

    /// Probability at every hour of a stay.
    pub fn predict_series(&self, series: &EncounterSeries) -> Vec<f64> {
        aggregate_trajectory(series).iter().map(|x| self.predict(x)).collect()
    }
}

/// Fits on every (encounter, hour) row, each labelled with the encounter's
/// outcome.
pub fn train_logistic(cohort: &[EncounterSeries], config: &LogisticConfig) -> Result<LogisticModel> {
    if cohort.is_empty() {
        return Err(Error::EmptyCohort);
    }
    if config.batch_size == 0 || config.epochs == 0 {
        return Err(Error::Config("logistic baseline needs positive batch_size and epochs".into()));
    }
    let per_encounter: Vec<Vec<Vec<f64>>> = cohort.par_iter().map(aggregate_trajectory).collect();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (s, feats) in cohort.iter().zip(per_encounter) {
        labels.extend(std::iter::repeat_n(s.label, feats.len()));
        rows.extend(feats);
    }
    let n = rows.len();
    let d = N_FEATURES;
    let mut mean = vec![0.0; d];
    for r in &rows {
        for j in 0..d {
            mean[j] += r[j];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut std = vec![0.0; d];
    for r in &rows {
        for j in 0..d {
            std[j] += (r[j] - mean[j]).powi(2);
        }
    }
    let std: Vec<f64> = std
        .into_iter()
        .map(|s| {
            let sd = (s / n as f64).sqrt();
            if sd > 1e-12 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    for r in rows.iter_mut() {
        for j in 0..d {
            r[j] = (r[j] - mean[j]) / std[j];
        }
    }

    let mut params = vec![0.0; d + 1];
    let mut adam = AdamState::new(
        &params,
        AdamConfig {
            learning_rate: config.learning_rate,
            l2: config.l2,
            ..AdamConfig::default()
        },
    );
    let mut grad = vec![0.0; d + 1];
    for epoch in 0..config.epochs {
        let order = permutation(&mut rng_for(config.seed, &[epoch as u64]), n);
        for chunk in order.chunks(config.batch_size) {
            grad.fill(0.0);
            for &i in chunk {
                let p = sigmoid(dot(&params[..d], &rows[i]) + params[d]);
                let e = p - if labels[i] { 1.0 } else { 0.0 };
                for j in 0..d {
                    grad[j] += e * rows[i][j];
                }
                grad[d] += e;
            }
            grad.iter_mut().for_each(|g| *g /= chunk.len() as f64);
            adam_step(&mut params, &grad, &mut adam)?;
        }
    }
    let bias = params.pop().expect("bias");
    Ok(LogisticModel {
        mean,
        std,
        weights: params,
        bias,
    })
}
