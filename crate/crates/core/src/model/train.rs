use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use super::config::ModelConfig;
use super::network::sequence_gradient;
use super::params::{init_params, ModelParams};
use super::predictor::{Model, Normalization};
use crate::error::{Error, Result};
use crate::eval::roc_auc;
use crate::ingest::EncounterSeries;
use crate::numerics::{adam_step, derive_seed, permutation, rng_for, AdamState, Matrix};

const SHUFFLE_STREAM: u64 = 2;
const DROPOUT_STREAM: u64 = 3;
const SPLIT_STREAM: u64 = 4;

/// Mean loss and mean gradient over a batch. Each sequence draws its dropout
/// masks from `(dropout_seed, position in batch)`; no dropout when
/// `dropout_seed` is `None`.
pub fn gradients(
    params: &ModelParams,
    config: &ModelConfig,
    batch: &[(&Matrix, bool)],
    dropout_seed: Option<u64>,
) -> Result<(f64, ModelParams)> {
    if batch.is_empty() {
        return Err(Error::EmptyCohort);
    }
    let per_seq: Vec<(f64, ModelParams)> = batch
        .par_iter()
        .enumerate()
        .map(|(i, (x, y))| match dropout_seed {
            Some(seed) => {
                let mut rng = rng_for(seed, &[i as u64]);
                sequence_gradient(params, config, x, *y, Some(&mut rng))
            }
            None => sequence_gradient(params, config, x, *y, None),
        })
        .collect::<Result<_>>()?;
    let mut iter = per_seq.into_iter();
    let (mut loss, mut grads) = iter.next().expect("nonempty batch");
    for (l, g) in iter {
        loss += l;
        grads.add_assign(&g);
    }
    let n = batch.len() as f64;
    grads.scale(1.0 / n);
    Ok((loss / n, grads))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Stops once the score has failed to beat its best for `patience`
/// consecutive epochs.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: Option<(usize, f64)>,
    since_best: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: None,
            since_best: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, score: f64) -> StopDecision {
        let better = match self.best {
            None => !score.is_nan(),
            Some((_, b)) => score > b,
        };
        if better {
            self.best = Some((epoch, score));
            self.since_best = 0;
            return StopDecision::Improved;
        }
        self.since_best += 1;
        if self.since_best >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }

    pub fn best(&self) -> Option<(usize, f64)> {
        self.best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_auc: f64,
    pub improved: bool,
    pub params_fingerprint: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainingLog {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("epoch,train_loss,val_auc,improved,params_fingerprint\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{},{:016x}\n",
                e.epoch, e.train_loss, e.val_auc, e.improved as u8, e.params_fingerprint
            ));
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Final-hour probability for each encounter.
pub fn final_hour_probs(model: &Model, cohort: &[EncounterSeries]) -> Result<Vec<f64>> {
    cohort
        .par_iter()
        .map(|s| Ok(*model.predict(s)?.probs.last().expect("nonempty series")))
        .collect()
}

pub fn validation_auc(model: &Model, val: &[EncounterSeries]) -> Result<f64> {
    let probs = final_hour_probs(model, val)?;
    let labels: Vec<bool> = val.iter().map(|s| s.label).collect();
    roc_auc(&probs, &labels)
}

/// Trains with early stopping on final-hour validation AUC.
pub fn train(train: &[EncounterSeries], val: &[EncounterSeries], config: &ModelConfig) -> Result<(Model, TrainingLog)> {
    if val.is_empty() {
        return Err(Error::EmptyCohort);
    }
    let train_ids: std::collections::HashSet<&str> = train.iter().map(|s| s.encounter_id.as_str()).collect();
    if let Some(s) = val.iter().find(|s| train_ids.contains(s.encounter_id.as_str())) {
        return Err(Error::Mismatch(format!("encounter {} is in both splits", s.encounter_id)));
    }
    let labels: Vec<bool> = val.iter().map(|s| s.label).collect();
    if labels.iter().all(|&y| y) || labels.iter().all(|&y| !y) {
        return Err(Error::UndefinedAuc);
    }
    train_with_validator(train, config, |model, _| validation_auc(model, val))
}

/// Training loop with a caller-supplied validation score per epoch (1-based).
pub fn train_with_validator<F>(train: &[EncounterSeries], config: &ModelConfig, mut validator: F) -> Result<(Model, TrainingLog)>
where
    F: FnMut(&Model, usize) -> Result<f64>,
{
    config.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyCohort);
    }
    let columns = config.feature_subset.variables();
    let normalization = Normalization::fit(train, &columns)?;
    let inputs: Vec<Matrix> = train.iter().map(|s| normalization.apply(s)).collect::<Result<_>>()?;

    let mut params = init_params(config)?;
    let mut adam = AdamState::new(&params, config.adam());
    let mut stopper = EarlyStopping::new(config.patience_epochs);
    let mut best = params.clone();
    let mut log = TrainingLog::default();

    for epoch in 1..=config.max_epochs {
        let order = permutation(&mut rng_for(config.seed, &[SHUFFLE_STREAM, epoch as u64]), train.len());
        let mut loss_sum = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<(&Matrix, bool)> = chunk.iter().map(|&i| (&inputs[i], train[i].label)).collect();
            let seed = derive_seed(config.seed, &[DROPOUT_STREAM, epoch as u64, b as u64]);
            let (loss, grads) = gradients(&params, config, &batch, Some(seed))?;
            adam_step(&mut params, &grads, &mut adam)?;
            loss_sum += loss * chunk.len() as f64;
        }
        if !params.is_finite() {
            return Err(Error::Shape(format!("non-finite parameters after epoch {epoch}")));
        }
        let model = Model::new(config.clone(), normalization.clone(), params.clone())?;
        let score = validator(&model, epoch)?;
        let decision = stopper.observe(epoch, score);
        if decision == StopDecision::Improved {
            best = params.clone();
        }
        log.epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            val_auc: score,
            improved: decision == StopDecision::Improved,
            params_fingerprint: params.fingerprint(),
        });
        if decision == StopDecision::Stop {
            log.stopped_early = true;
            break;
        }
    }
    log.best_epoch = stopper.best().map(|(e, _)| e).unwrap_or(0);
    Ok((Model::new(config.clone(), normalization, best)?, log))
}

/// Seeded stratified hold-out: `fraction` of each outcome class goes to the
/// validation split, at least one per class when the class has two or more
/// members. Input order is preserved within each split.
pub fn split_validation(cohort: &[EncounterSeries], fraction: f64, seed: u64) -> (Vec<EncounterSeries>, Vec<EncounterSeries>) {
    let mut in_val = vec![false; cohort.len()];
    for (class, label) in [(0u64, false), (1, true)] {
        let members: Vec<usize> = (0..cohort.len()).filter(|&i| cohort[i].label == label).collect();
        let mut n_val = (fraction * members.len() as f64).round() as usize;
        if n_val == 0 && members.len() >= 2 && fraction > 0.0 {
            n_val = 1;
        }
        let order = permutation(&mut rng_for(seed, &[SPLIT_STREAM, class]), members.len());
        for &j in &order[..n_val.min(members.len())] {
            in_val[members[j]] = true;
        }
    }
    let mut train = Vec::new();
    let mut val = Vec::new();
    for (s, v) in cohort.iter().zip(in_val) {
        if v {
            val.push(s.clone());
        } else {
            train.push(s.clone());
        }
    }
    (train, val)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::config::AttentionMode;
    use crate::numerics::ParamSet;
    use crate::variables::{Variable, VariableSpecs};

    fn toy_cohort(n: usize) -> Vec<EncounterSeries> {
        let specs = VariableSpecs::default();
        (0..n)
            .map(|i| {
                let label = i % 3 == 0;
                let hours = 4 + i % 5;
                let mut s = EncounterSeries::normal(&format!("e{i:03}"), hours, &specs);
                s.label = label;
                for t in 0..hours {
                    let drift = if label { -3.0 * t as f64 } else { 0.5 * t as f64 };
                    s.set_value(t, Variable::Map, 80.0 + drift + (i as f64 * 0.7).sin());
                }
                s
            })
            .collect()
    }

    fn small_config() -> ModelConfig {
        ModelConfig {
            hidden_dim: 4,
            max_epochs: 3,
            seed: 17,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn early_stopping_schedule() {
        let mut s = EarlyStopping::new(2);
        assert_eq!(s.observe(1, 0.6), StopDecision::Improved);
        assert_eq!(s.observe(2, 0.6), StopDecision::Continue);
        assert_eq!(s.observe(3, 0.7), StopDecision::Improved);
        assert_eq!(s.observe(4, 0.5), StopDecision::Continue);
        assert_eq!(s.observe(5, 0.7), StopDecision::Stop);
        assert_eq!(s.best(), Some((3, 0.7)));
    }

    #[test]
    fn duplicated_batch_keeps_mean_gradient() {
        let c = ModelConfig {
            dropout_p: 0.0,
            ..small_config()
        };
        let p = init_params(&c).unwrap();
        let cohort = toy_cohort(2);
        let norm = Normalization::fit(&cohort, &Variable::ALL).unwrap();
        let x = norm.apply(&cohort[0]).unwrap();
        let (l1, g1) = gradients(&p, &c, &[(&x, true)], None).unwrap();
        let (l2, g2) = gradients(&p, &c, &[(&x, true), (&x, true)], None).unwrap();
        assert_eq!(l1, l2);
        for (a, b) in g1.flat().iter().zip(g2.flat()) {
            assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
        }
    }

    #[test]
    fn training_is_reproducible() {
        let cohort = toy_cohort(40);
        let (tr, va) = split_validation(&cohort, 0.2, 5);
        assert_eq!(tr.len() + va.len(), 40);
        assert!(va.iter().any(|s| s.label) && va.iter().any(|s| !s.label));
        let (a, la) = train(&tr, &va, &small_config()).unwrap();
        let (b, lb) = train(&tr, &va, &small_config()).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
        assert_eq!(la.epochs.len(), 3);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cohort = toy_cohort(10);
        assert!(matches!(train(&[], &cohort, &small_config()), Err(Error::EmptyCohort)));
        assert!(train(&cohort, &cohort[..3], &small_config()).is_err());
        let c = ModelConfig {
            attention_mode: AttentionMode::GlobalAttention,
            ..small_config()
        };
        let (tr, va) = split_validation(&cohort, 0.3, 1);
        train(&tr, &va, &c).unwrap();
    }
}
