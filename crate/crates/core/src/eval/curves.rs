use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::auc::roc_auc;
use super::bootstrap::{bootstrap_aucs, interval_of};
use crate::error::{Error, Result};
use crate::numerics::{derive_seed, rng_for};

pub const DEFAULT_HORIZON: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    /// Hour `h` after admission.
    FromAdmission,
    /// Offset `j` hours before the end of the stay.
    ToDischarge,
}

impl Alignment {
    pub fn name(self) -> &'static str {
        match self {
            Alignment::FromAdmission => "from_admission",
            Alignment::ToDischarge => "to_discharge",
        }
    }
}

impl fmt::Display for Alignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Alignment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "from_admission" => Ok(Alignment::FromAdmission),
            "to_discharge" => Ok(Alignment::ToDischarge),
            _ => Err(Error::Config(format!("unknown alignment '{s}'"))),
        }
    }
}

/// Per-encounter hourly scores with outcome labels. Scores are usually
/// probabilities but any ranking statistic works.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlyPredictions {
    pub encounter_ids: Vec<String>,
    pub scores: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
}

impl HourlyPredictions {
    pub fn new(encounter_ids: Vec<String>, scores: Vec<Vec<f64>>, labels: Vec<bool>) -> Result<Self> {
        if encounter_ids.len() != scores.len() || scores.len() != labels.len() {
            return Err(Error::Shape("ids, score trajectories and labels differ in length".into()));
        }
        if scores.is_empty() {
            return Err(Error::EmptyCohort);
        }
        for (id, s) in encounter_ids.iter().zip(&scores) {
            if s.is_empty() {
                return Err(Error::EmptyEncounter(id.clone()));
            }
            if let Some(i) = s.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteScore(i));
            }
        }
        Ok(HourlyPredictions {
            encounter_ids,
            scores,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Score used at evaluation point `step` (1-based hour for
    /// [`Alignment::FromAdmission`], 0-based offset for
    /// [`Alignment::ToDischarge`]), carrying the final prediction forward.
    pub fn score_at(&self, i: usize, step: usize, alignment: Alignment) -> f64 {
        let s = &self.scores[i];
        let t = s.len();
        let hour = match alignment {
            Alignment::FromAdmission => step.clamp(1, t),
            Alignment::ToDischarge => t.saturating_sub(step).max(1),
        };
        s[hour - 1]
    }

    /// Whether encounter `i` is still in the ICU at evaluation point `step`.
    pub fn is_active(&self, i: usize, step: usize, alignment: Alignment) -> bool {
        let t = self.scores[i].len();
        match alignment {
            Alignment::FromAdmission => t >= step,
            Alignment::ToDischarge => t > step,
        }
    }

    /// Evaluation points for a horizon: hours `1..=horizon` or offsets
    /// `0..horizon`.
    pub fn steps(alignment: Alignment, horizon: usize) -> Vec<usize> {
        match alignment {
            Alignment::FromAdmission => (1..=horizon).collect(),
            Alignment::ToDischarge => (0..horizon).collect(),
        }
    }

    pub fn column(&self, step: usize, alignment: Alignment) -> Vec<f64> {
        (0..self.len()).map(|i| self.score_at(i, step, alignment)).collect()
    }

    /// Final-hour score of every encounter.
    pub fn last(&self) -> Vec<f64> {
        self.scores.iter().map(|s| *s.last().expect("nonempty")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AucPoint {
    pub hour: usize,
    pub auc: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_active: usize,
    /// `NaN` when no encounter is active.
    pub mortality_rate_active: f64,
}

/// AUC with a bootstrap interval at every evaluation point. Every encounter
/// contributes to every point; `n_active` counts only those still in the
/// ICU. The interval is widened to contain the point estimate when the
/// percentile interval misses it.
pub fn hourly_curve(
    preds: &HourlyPredictions,
    alignment: Alignment,
    horizon: usize,
    iterations: usize,
    seed: u64,
) -> Result<Vec<AucPoint>> {
    if preds.is_empty() {
        return Err(Error::EmptyCohort);
    }
    HourlyPredictions::steps(alignment, horizon)
        .into_par_iter()
        .map(|step| {
            let scores = preds.column(step, alignment);
            let auc = roc_auc(&scores, &preds.labels)?;
            let (ci_lo, ci_hi) = if iterations > 0 {
                let ci = interval_of(&bootstrap_aucs(&scores, &preds.labels, iterations, derive_seed(seed, &[step as u64]))?);
                (ci.lo.min(auc), ci.hi.max(auc))
            } else {
                (auc, auc)
            };
            let active: Vec<usize> = (0..preds.len()).filter(|&i| preds.is_active(i, step, alignment)).collect();
            let deaths = active.iter().filter(|&&i| preds.labels[i]).count();
            Ok(AucPoint {
                hour: step,
                auc,
                ci_lo,
                ci_hi,
                n_active: active.len(),
                mortality_rate_active: if active.is_empty() {
                    f64::NAN
                } else {
                    deaths as f64 / active.len() as f64
                },
            })
        })
        .collect()
}

/// Average of the AUC curve over its evaluation points.
pub fn mean_auc(points: &[AucPoint]) -> f64 {
    points.iter().map(|p| p.auc).sum::<f64>() / points.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StratifiedPoint {
    pub hour: usize,
    pub survivors: MeanEstimate,
    pub non_survivors: MeanEstimate,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn mean_with_ci(values: &[f64], iterations: usize, seed: u64) -> MeanEstimate {
    if values.is_empty() {
        return MeanEstimate {
            mean: f64::NAN,
            ci_lo: f64::NAN,
            ci_hi: f64::NAN,
            n: 0,
        };
    }
    let m = mean(values);
    if iterations == 0 {
        return MeanEstimate {
            mean: m,
            ci_lo: m,
            ci_hi: m,
            n: values.len(),
        };
    }
    let boots: Vec<f64> = (0..iterations)
        .map(|it| {
            let mut rng = rng_for(seed, &[it as u64]);
            let s: f64 = (0..values.len()).map(|_| values[rng.random_range(0..values.len())]).sum();
            s / values.len() as f64
        })
        .collect();
    let ci = interval_of(&boots);
    MeanEstimate {
        mean: m,
        ci_lo: ci.lo.min(m),
        ci_hi: ci.hi.max(m),
        n: values.len(),
    }
}

/// Mean score per outcome class over encounters active at each point.
pub fn stratified_mean_prob(
    preds: &HourlyPredictions,
    alignment: Alignment,
    horizon: usize,
    iterations: usize,
    seed: u64,
) -> Result<Vec<StratifiedPoint>> {
    if preds.labels.iter().all(|&y| y) || preds.labels.iter().all(|&y| !y) {
        return Err(Error::UndefinedAuc);
    }
    Ok(HourlyPredictions::steps(alignment, horizon)
        .into_par_iter()
        .map(|step| {
            let mut alive = Vec::new();
            let mut dead = Vec::new();
            for i in 0..preds.len() {
                if preds.is_active(i, step, alignment) {
                    let s = preds.score_at(i, step, alignment);
                    if preds.labels[i] {
                        dead.push(s);
                    } else {
                        alive.push(s);
                    }
                }
            }
            StratifiedPoint {
                hour: step,
                survivors: mean_with_ci(&alive, iterations, derive_seed(seed, &[step as u64, 0])),
                non_survivors: mean_with_ci(&dead, iterations, derive_seed(seed, &[step as u64, 1])),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn preds(scores: Vec<Vec<f64>>, labels: Vec<bool>) -> HourlyPredictions {
        let ids = (0..scores.len()).map(|i| format!("e{i}")).collect();
        HourlyPredictions::new(ids, scores, labels).unwrap()
    }

    #[test]
    fn carry_forward_from_admission() {
        let p = preds(vec![vec![0.1, 0.2], vec![0.5, 0.6, 0.7, 0.8, 0.9]], vec![false, true]);
        for h in 3..=5 {
            assert_eq!(p.score_at(0, h, Alignment::FromAdmission), 0.2);
        }
        assert_eq!(p.score_at(1, 4, Alignment::FromAdmission), 0.8);
        assert!(!p.is_active(0, 3, Alignment::FromAdmission));
        assert!(p.is_active(0, 2, Alignment::FromAdmission));
    }

    #[test]
    fn discharge_offsets() {
        let p = preds(vec![vec![0.1, 0.2], vec![0.5, 0.6, 0.7]], vec![false, true]);
        assert_eq!(p.column(0, Alignment::ToDischarge), vec![0.2, 0.7]);
        assert_eq!(p.column(1, Alignment::ToDischarge), vec![0.1, 0.6]);
        assert_eq!(p.column(4, Alignment::ToDischarge), vec![0.1, 0.5]);
        let curve = hourly_curve(&p, Alignment::ToDischarge, 4, 0, 1).unwrap();
        assert_eq!(curve.len(), 4);
        assert_eq!(curve.iter().map(|c| c.n_active).collect::<Vec<_>>(), vec![2, 2, 1, 0]);
        assert!(curve[3].mortality_rate_active.is_nan());
    }

    #[test]
    fn long_stays_use_own_hours() {
        let scores: Vec<Vec<f64>> = (0..6).map(|i| (0..10).map(|t| ((i * 10 + t) as f64).sin().abs()).collect()).collect();
        let labels = vec![true, false, true, false, false, true];
        let p = preds(scores.clone(), labels.clone());
        let curve = hourly_curve(&p, Alignment::FromAdmission, 10, 20, 4).unwrap();
        for pt in &curve {
            let col: Vec<f64> = scores.iter().map(|s| s[pt.hour - 1]).collect();
            assert_eq!(pt.auc, roc_auc(&col, &labels).unwrap());
            assert_eq!(pt.n_active, 6);
            assert_eq!(pt.mortality_rate_active, 0.5);
            assert!(pt.ci_lo <= pt.auc && pt.auc <= pt.ci_hi);
        }
        assert_eq!(curve, hourly_curve(&p, Alignment::FromAdmission, 10, 20, 4).unwrap());
    }

    #[test]
    fn stratified_means() {
        let p = preds(
            vec![vec![0.1, 0.3], vec![0.2], vec![0.9, 0.7, 0.5], vec![0.6, 0.8], vec![0.4, 0.4, 0.4]],
            vec![false, false, true, true, false],
        );
        let s = stratified_mean_prob(&p, Alignment::FromAdmission, 3, 50, 2).unwrap();
        assert!((s[0].survivors.mean - (0.1 + 0.2 + 0.4) / 3.0).abs() < 1e-15);
        assert!((s[0].non_survivors.mean - 0.75).abs() < 1e-15);
        assert!((s[1].survivors.mean - 0.35).abs() < 1e-15);
        assert_eq!(s[1].survivors.n, 2);
        assert!((s[1].non_survivors.mean - 0.75).abs() < 1e-15);
        assert_eq!(s[2].non_survivors.mean, 0.5);
        assert_eq!(s[2].non_survivors.n, 1);
    }

    #[test]
    fn constant_scores_give_flat_means() {
        let p = preds(vec![vec![0.3; 4], vec![0.3; 2], vec![0.3; 3]], vec![true, false, false]);
        for pt in stratified_mean_prob(&p, Alignment::FromAdmission, 2, 30, 0).unwrap() {
            assert!((pt.survivors.mean - 0.3).abs() < 1e-15);
            assert!((pt.non_survivors.mean - 0.3).abs() < 1e-15);
        }
    }
}
