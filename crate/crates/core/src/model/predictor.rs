use std::borrow::Cow;

use super::config::ModelConfig;
use super::network::{check_mode, PredictionTrajectory, Unroll};
use super::params::ModelParams;
use crate::error::{Error, Result};
use crate::ingest::EncounterSeries;
use crate::numerics::Matrix;
use crate::variables::{Variable, N_VARIABLES};

const MIN_STD: f64 = 1e-12;

/// Per-column z-scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub columns: Vec<Variable>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalization {
    /// Mean and population standard deviation over every hour of every
    /// encounter. Constant columns get a unit scale.
    pub fn fit(cohort: &[EncounterSeries], columns: &[Variable]) -> Result<Self> {
        let n: usize = cohort.iter().map(|s| s.hours()).sum();
        if n == 0 {
            return Err(Error::EmptyCohort);
        }
        let mut mean = Vec::with_capacity(columns.len());
        let mut std = Vec::with_capacity(columns.len());
        for &v in columns {
            let m = cohort.iter().flat_map(|s| s.column(v)).sum::<f64>() / n as f64;
            let var = cohort
                .iter()
                .flat_map(|s| s.column(v))
                .map(|x| (x - m) * (x - m))
                .sum::<f64>()
                / n as f64;
            let sd = var.sqrt();
            mean.push(m);
            std.push(if sd > MIN_STD { sd } else { 1.0 });
        }
        Ok(Normalization {
            columns: columns.to_vec(),
            mean,
            std,
        })
    }

    pub fn identity(columns: &[Variable]) -> Self {
        Normalization {
            columns: columns.to_vec(),
            mean: vec![0.0; columns.len()],
            std: vec![1.0; columns.len()],
        }
    }

    /// Selects and scales the model's columns from a full 14-value row.
    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != N_VARIABLES {
            return Err(Error::Shape(format!("row has {} values, expected {N_VARIABLES}", row.len())));
        }
        Ok(self
            .columns
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (row[v.index()] - m) / s)
            .collect())
    }

    pub fn apply(&self, series: &EncounterSeries) -> Result<Matrix> {
        let d = self.columns.len();
        let mut data = Vec::with_capacity(series.hours() * d);
        for t in 0..series.hours() {
            data.extend(self.apply_row(series.row(t))?);
        }
        Matrix::from_vec(series.hours(), d, data)
    }
}

/// A trained network together with its input scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub normalization: Normalization,
    pub params: ModelParams,
}

impl Model {
    pub fn new(config: ModelConfig, normalization: Normalization, params: ModelParams) -> Result<Self> {
        config.validate()?;
        params.check_shapes(&config)?;
        check_mode(&params, config.attention_mode)?;
        if normalization.columns != config.feature_subset.variables() {
            return Err(Error::Shape("normalization columns differ from the feature subset".into()));
        }
        Ok(Model {
            config,
            normalization,
            params,
        })
    }

    pub fn inputs(&self, series: &EncounterSeries) -> Result<Matrix> {
        self.normalization.apply(series)
    }

    /// Whole-sequence evaluation without dropout.
    pub fn predict(&self, series: &EncounterSeries) -> Result<PredictionTrajectory> {
        let x = self.inputs(series)?;
        super::network::forward(&self.params, &self.config, &x, None)
    }

    pub fn stream(&self) -> StreamingPredictor<'_> {
        StreamingPredictor::over(Cow::Borrowed(self))
    }

    /// A predictor that owns the model.
    pub fn into_stream(self) -> StreamingPredictor<'static> {
        StreamingPredictor::over(Cow::Owned(self))
    }
}

impl<'a> StreamingPredictor<'a> {
    fn over(model: Cow<'a, Model>) -> Self {
        let unroll = Unroll::new(
            model.config.attention_mode,
            model.config.logit_scale(),
            model.config.hidden_dim,
            false,
        );
        StreamingPredictor { model, unroll }
    }
}

/// Output for one newly arrived hour.
#[derive(Debug, Clone, PartialEq)]
pub struct HourOutput {
    pub prob: f64,
    /// Weights over hours seen so far, oldest first.
    pub attention: Vec<f64>,
}

/// Incremental evaluation, one hour at a time.
#[derive(Debug, Clone)]
pub struct StreamingPredictor<'a> {
    model: Cow<'a, Model>,
    unroll: Unroll,
}

impl StreamingPredictor<'_> {
    /// Feeds one raw 14-variable row.
    pub fn push(&mut self, row: &[f64]) -> Result<HourOutput> {
        let x = self.model.normalization.apply_row(row)?;
        let prob = self.unroll.push(&self.model.params, &x, None);
        Ok(HourOutput {
            prob,
            attention: self.unroll.alphas.last().cloned().unwrap_or_default(),
        })
    }

    pub fn hours(&self) -> usize {
        self.unroll.len()
    }

    pub fn trajectory(&self) -> PredictionTrajectory {
        self.unroll.trajectory()
    }
}

/// Runs a series through [`StreamingPredictor`] hour by hour.
pub fn predict_stream(model: &Model, series: &EncounterSeries) -> Result<PredictionTrajectory> {
    let mut s = model.stream();
    for t in 0..series.hours() {
        s.push(series.row(t))?;
    }
    Ok(s.trajectory())
}
