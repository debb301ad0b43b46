//! Synthetic ICU cohorts with a known mortality mechanism.
//!
//! Each stay has a latent severity `s ~ N(0, 1)` that shifts continuous
//! levels (mostly inside the normal SOFA bands) and, with some probability,
//! a deterioration motif of intensity `u` over its final 24 hours: MAP
//! falls, creatinine rises and GCS drops. The outcome is drawn from
//! `sigmoid(baseline + w_s * s + w_m * u)`. Some stays also carry chronic
//! organ dysfunction that raises SOFA without affecting risk.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::events::{EventValue, EventVariable, Outcome, RawEvent};
use crate::ingest::{preprocess, write_events, write_outcomes, CohortCriteria, PreprocessOutput};
use crate::numerics::{rng_for, sigmoid, SeededRng};
use crate::variables::{Variable, VariableSpecs};

const ENCOUNTER_STREAM: u64 = 10;
const PATIENT_STREAM: u64 = 11;
const MOTIF_HOURS: usize = 24;
const MIN_STAY: f64 = 4.0;
const MAX_STAY: f64 = 720.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_encounters: usize,
    pub stay_median_hours: f64,
    /// Standard deviation of log stay length.
    pub stay_log_sd: f64,
    pub baseline_logit: f64,
    pub severity_weight: f64,
    pub motif_probability: f64,
    pub motif_weight: f64,
    /// Multiplies every physiological fluctuation.
    pub noise_scale: f64,
    /// Chance of each chronic dysfunction (liver, kidney, platelets).
    pub chronic_probability: f64,
    /// Chance that a stay belongs to the previous stay's patient.
    pub repeat_stay_probability: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_encounters: 200,
            stay_median_hours: 40.0,
            stay_log_sd: 0.6,
            baseline_logit: -3.5,
            severity_weight: 1.0,
            motif_probability: 0.3,
            motif_weight: 7.0,
            noise_scale: 1.0,
            chronic_probability: 0.15,
            repeat_stay_probability: 0.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Synth(m.to_string()));
        if self.n_encounters < 2 {
            return bad("n_encounters must be at least 2");
        }
        if !(self.stay_median_hours >= MIN_STAY && self.stay_median_hours <= MAX_STAY) {
            return bad("stay_median_hours must be within [4, 720]");
        }
        for (name, p) in [
            ("motif_probability", self.motif_probability),
            ("chronic_probability", self.chronic_probability),
            ("repeat_stay_probability", self.repeat_stay_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Synth(format!("{name} must be in [0, 1]")));
            }
        }
        let finite = [
            self.stay_log_sd,
            self.baseline_logit,
            self.severity_weight,
            self.motif_weight,
            self.noise_scale,
        ];
        if finite.iter().any(|v| !v.is_finite()) || self.stay_log_sd < 0.0 || self.noise_scale < 0.0 {
            return bad("weights must be finite and scales non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub encounter_id: String,
    pub hours: usize,
    pub severity: f64,
    /// 0 when the stay has no motif.
    pub motif_intensity: f64,
    pub risk: f64,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCohort {
    pub events: Vec<RawEvent>,
    pub outcomes: BTreeMap<String, Outcome>,
    pub truth: Vec<GroundTruth>,
}

impl SynthCohort {
    pub fn preprocess(&self, specs: &VariableSpecs, criteria: &CohortCriteria) -> PreprocessOutput {
        preprocess(self.events.clone(), &self.outcomes, specs, criteria)
    }

    pub fn write(&self, events_path: &Path, outcomes_path: &Path) -> Result<()> {
        write_events(events_path, &self.events)?;
        write_outcomes(outcomes_path, &self.outcomes)
    }

    pub fn write_truth(&self, path: &Path) -> Result<()> {
        let mut out = String::from("encounter_id,hours,severity,motif_intensity,risk,label\n");
        for t in &self.truth {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                t.encounter_id, t.hours, t.severity, t.motif_intensity, t.risk, t.label as u8
            ));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

fn normal(rng: &mut SeededRng) -> f64 {
    rng.sample(StandardNormal)
}

/// Stationary AR(1) path with marginal standard deviation `sd`.
fn ar1(rng: &mut SeededRng, n: usize, rho: f64, sd: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut e = sd * normal(rng);
    let innov = sd * (1.0 - rho * rho).sqrt();
    for _ in 0..n {
        out.push(e);
        e = rho * e + innov * normal(rng);
    }
    out
}

fn round_to(x: f64, decimals: i32) -> f64 {
    let f = 10f64.powi(decimals);
    (x * f).round() / f
}

/// Hours `0..hours` sampled with exponential gaps of mean `mean_gap`,
/// starting within the first `mean_gap` hours.
fn sparse_hours(rng: &mut SeededRng, hours: usize, mean_gap: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let mut t = rng.random::<f64>() * mean_gap.min(hours as f64);
    while (t as usize) < hours {
        out.push(t as usize);
        t += (-mean_gap * (1.0 - rng.random::<f64>()).ln()).max(1.0);
    }
    out
}

struct Emitter<'a> {
    encounter_id: &'a str,
    patient_id: &'a str,
    events: Vec<RawEvent>,
}

impl Emitter<'_> {
    fn push(&mut self, rng: &mut SeededRng, hour: usize, variable: EventVariable, value: EventValue) {
        let minute = rng.random_range(0..60);
        self.events.push(RawEvent {
            encounter_id: self.encounter_id.to_string(),
            patient_id: self.patient_id.to_string(),
            minutes: (hour * 60 + minute) as i64,
            variable,
            value,
        });
    }

    fn num(&mut self, rng: &mut SeededRng, hour: usize, v: Variable, x: f64) {
        self.push(rng, hour, EventVariable::Channel(v), EventValue::Numeric(x));
    }
}

fn generate_one(config: &SynthConfig, index: usize, patient_id: &str) -> (Vec<RawEvent>, f64, GroundTruth) {
    let mut rng = rng_for(config.seed, &[ENCOUNTER_STREAM, index as u64]);
    let encounter_id = format!("S{:06}", index + 1);
    let ns = config.noise_scale;

    let log_t = config.stay_median_hours.ln() + config.stay_log_sd * normal(&mut rng);
    let hours = log_t.exp().round().clamp(MIN_STAY, MAX_STAY) as usize;
    let severity = normal(&mut rng);
    let motif = if rng.random::<f64>() < config.motif_probability {
        rng.random_range(0.3..1.0)
    } else {
        0.0
    };
    let risk = sigmoid(config.baseline_logit + config.severity_weight * severity + config.motif_weight * motif);
    let label = rng.random::<f64>() < risk;
    let age = round_to(rng.random_range(20.0..90.0), 1);

    let chronic_liver = rng.random::<f64>() < config.chronic_probability;
    let chronic_renal = rng.random::<f64>() < config.chronic_probability;
    let chronic_coag = rng.random::<f64>() < config.chronic_probability;
    let ventilated = rng.random::<f64>() < 0.35;
    let mv_end = if ventilated { rng.random_range(hours.min(12)..=hours) } else { 0 };
    let on_pressors = rng.random::<f64>() < 0.18;
    let pressor_start = rng.random_range(0..hours.div_ceil(2));
    let pressor_end = (pressor_start + rng.random_range(6..48)).min(hours);
    let pressor = if rng.random::<f64>() < 0.7 {
        (Variable::Norepinephrine, rng.random_range(0.03..0.3))
    } else {
        (Variable::Dopamine, rng.random_range(2.0..12.0))
    };
    let has_pao2 = rng.random::<f64>() < if ventilated { 0.9 } else { 0.4 };
    let has_bilirubin = rng.random::<f64>() < 0.5 || chronic_liver;
    let on_oxygen = !ventilated && rng.random::<f64>() < 0.45;
    let gcs_gap = rng.random_range(2..=4);

    let motif_start = hours - hours.min(MOTIF_HOURS);
    let phi: Vec<f64> = (0..hours)
        .map(|t| {
            if motif > 0.0 && t >= motif_start {
                (t - motif_start + 1) as f64 / hours.min(MOTIF_HOURS) as f64
            } else {
                0.0
            }
        })
        .collect();
    let m = |t: usize| motif * phi[t];

    let map_noise = ar1(&mut rng, hours, 0.9, 5.0 * ns);
    let spo2_noise = ar1(&mut rng, hours, 0.8, 1.2 * ns);
    let pao2_noise = ar1(&mut rng, hours, 0.8, 10.0 * ns);
    let gcs_noise = ar1(&mut rng, hours, 0.7, 0.7 * ns);
    let urine_noise = ar1(&mut rng, hours, 0.5, 15.0 * ns);
    let plt_noise = ar1(&mut rng, hours, 0.95, 15.0 * ns);
    let bili_noise = ar1(&mut rng, hours, 0.95, 0.1 * ns);
    let creat_noise = ar1(&mut rng, hours, 0.95, 0.08 * ns);

    let plt_base = if chronic_coag { rng.random_range(40.0..110.0) } else { 230.0 };
    let bili_base = if chronic_liver { rng.random_range(2.2..7.0) } else { 0.7 };
    let creat_base = if chronic_renal { rng.random_range(1.4..2.8) } else { 0.9 };

    let mut em = Emitter {
        encounter_id: &encounter_id,
        patient_id,
        events: Vec::new(),
    };

    for t in 0..hours {
        if t == 0 || t + 1 == hours || rng.random::<f64>() > 0.05 {
            let map = 85.0 - 6.0 * severity - 25.0 * m(t) + map_noise[t];
            em.num(&mut rng, t, Variable::Map, round_to(map.clamp(35.0, 160.0), 0));
        }
        if t == 0 || rng.random::<f64>() > 0.1 {
            let spo2 = 97.0 - 1.2 * severity - 3.0 * m(t) + spo2_noise[t];
            em.num(&mut rng, t, Variable::Spo2, round_to(spo2.clamp(80.0, 100.0), 0));
        }
        if rng.random::<f64>() < 0.85 {
            let urine = 75.0 - 10.0 * severity - 35.0 * m(t) + urine_noise[t];
            em.num(&mut rng, t, Variable::Urine, round_to(urine.clamp(0.0, 400.0), 0));
        }
        if ventilated && t < mv_end {
            em.num(&mut rng, t, Variable::Mv, 1.0);
        }
        if on_pressors && (pressor_start..pressor_end).contains(&t) {
            em.num(&mut rng, t, pressor.0, round_to(pressor.1, 3));
        }
        if t % gcs_gap == 0 {
            let sedated = if ventilated && t < mv_end { 3.0 } else { 0.0 };
            let gcs = 15.0 - severity.max(0.0) - sedated - 7.0 * m(t) + gcs_noise[t];
            em.num(&mut rng, t, Variable::Gcs, gcs.round().clamp(3.0, 15.0));
        }
    }

    let device = |name: &str| EventValue::Device(name.to_string());
    if ventilated {
        em.push(&mut rng, 0, EventVariable::O2Device, device("ventilator"));
        for t in (0..mv_end).step_by(4) {
            let fio2 = 35.0 + 8.0 * severity.max(0.0) + 15.0 * m(t);
            em.num(&mut rng, t, Variable::Fio2, round_to(fio2.clamp(21.0, 100.0), 0));
        }
        if mv_end < hours {
            em.push(&mut rng, mv_end, EventVariable::O2Device, device("nasal cannula"));
            em.push(&mut rng, mv_end, EventVariable::O2FlowLpm, EventValue::Numeric(2.0));
        }
    } else if on_oxygen {
        let flow = rng.random_range(1..=6) as f64;
        em.push(&mut rng, 0, EventVariable::O2Device, device("nasal cannula"));
        em.push(&mut rng, 0, EventVariable::O2FlowLpm, EventValue::Numeric(flow));
    } else {
        em.push(&mut rng, 0, EventVariable::O2Device, device("room air"));
    }

    if has_pao2 {
        for t in sparse_hours(&mut rng, hours, 6.0) {
            let vent = if ventilated && t < mv_end { 15.0 } else { 0.0 };
            let pao2 = 95.0 - 10.0 * severity - vent - 20.0 * m(t) + pao2_noise[t];
            em.num(&mut rng, t, Variable::Pao2, round_to(pao2.clamp(45.0, 400.0), 0));
        }
    }
    for t in sparse_hours(&mut rng, hours, 18.0) {
        let plt = plt_base - 20.0 * severity + plt_noise[t];
        em.num(&mut rng, t, Variable::Platelets, round_to(plt.clamp(10.0, 700.0), 0));
    }
    if has_bilirubin {
        for t in sparse_hours(&mut rng, hours, 24.0) {
            let bili = bili_base + 0.15 * severity + bili_noise[t];
            em.num(&mut rng, t, Variable::Bilirubin, round_to(bili.clamp(0.1, 45.0), 1));
        }
    }
    for t in sparse_hours(&mut rng, hours, 14.0) {
        let creat = creat_base + 0.12 * severity + 2.8 * m(t) + creat_noise[t];
        em.num(&mut rng, t, Variable::Creatinine, round_to(creat.clamp(0.2, 25.0), 2));
    }

    let mut events = em.events;
    events.sort_by_key(|e| e.minutes);
    let truth = GroundTruth {
        encounter_id,
        hours,
        severity,
        motif_intensity: motif,
        risk,
        label,
    };
    (events, age, truth)
}

/// Generates a cohort. Fails if every stay has the same outcome.
pub fn generate(config: &SynthConfig) -> Result<SynthCohort> {
    config.validate()?;
    let mut patients = Vec::with_capacity(config.n_encounters);
    let mut patient_no = 0usize;
    let mut stay_index = 1u32;
    for i in 0..config.n_encounters {
        let repeat = i > 0 && rng_for(config.seed, &[PATIENT_STREAM, i as u64]).random::<f64>() < config.repeat_stay_probability;
        if repeat {
            stay_index += 1;
        } else {
            patient_no += 1;
            stay_index = 1;
        }
        patients.push((format!("P{patient_no:06}"), stay_index));
    }

    let generated: Vec<_> = (0..config.n_encounters)
        .into_par_iter()
        .map(|i| generate_one(config, i, &patients[i].0))
        .collect();

    let mut events = Vec::new();
    let mut outcomes = BTreeMap::new();
    let mut truth = Vec::with_capacity(generated.len());
    for ((evs, age, gt), (_, stay_index)) in generated.into_iter().zip(&patients) {
        let hospice = gt.label && gt.encounter_id.ends_with('7');
        outcomes.insert(
            gt.encounter_id.clone(),
            Outcome {
                age_years: age,
                died_in_hospital: gt.label && !hospice,
                hospice_death_within_7d: hospice,
                icu_stay_index: Some(*stay_index),
            },
        );
        events.extend(evs);
        truth.push(gt);
    }
    let deaths = truth.iter().filter(|t| t.label).count();
    if deaths == 0 || deaths == truth.len() {
        return Err(Error::Synth(format!(
            "degenerate cohort: {deaths} deaths among {} stays",
            truth.len()
        )));
    }
    Ok(SynthCohort { events, outcomes, truth })
}
