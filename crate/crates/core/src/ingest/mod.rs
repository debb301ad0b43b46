//! Event ingestion: parsing, outlier removal, FiO₂ imputation, hourly
//! resampling and cohort selection.

pub mod cohort;
pub mod container;
pub mod events;
pub mod fio2;
pub mod series;

use std::collections::BTreeMap;

use rayon::prelude::*;

pub use cohort::{apply_cohort_filters, CohortCriteria, ExclusionReport, MultiStayPolicy};
pub use container::{decode_cohort, encode_cohort, load_cohort, save_cohort};
pub use events::{
    filter_outliers, load_outcomes, parse_events, parse_events_from_reader, parse_outcomes, write_events,
    write_outcomes, write_rejections, EventValue, EventVariable, Outcome, RawEvent, RejectReason, Rejection,
};
pub use fio2::{apply_fio2_imputation, impute_fio2, OxygenDevice};
pub use series::{build_series, EncounterSeries};

use crate::error::Error;
use crate::variables::VariableSpecs;

#[derive(Debug, Default)]
pub struct PreprocessOutput {
    pub cohort: Vec<EncounterSeries>,
    pub rejections: Vec<Rejection>,
    pub exclusions: ExclusionReport,
    /// Encounters with events but no outcome record.
    pub missing_outcome: Vec<String>,
    /// Encounters with an outcome record but no usable in-ICU events.
    pub empty: Vec<String>,
}

/// Runs outlier filtering, FiO₂ imputation, hourly resampling and cohort
/// selection over parsed events. Encounters are processed in parallel;
/// output order is by encounter id.
pub fn preprocess(
    events: Vec<RawEvent>,
    outcomes: &BTreeMap<String, Outcome>,
    specs: &VariableSpecs,
    criteria: &CohortCriteria,
) -> PreprocessOutput {
    let (events, rejections) = filter_outliers(events, specs);
    let events = apply_fio2_imputation(events);

    let mut grouped: BTreeMap<String, (String, Vec<RawEvent>)> = BTreeMap::new();
    for ev in events {
        grouped
            .entry(ev.encounter_id.clone())
            .or_insert_with(|| (ev.patient_id.clone(), Vec::new()))
            .1
            .push(ev);
    }

    let missing_outcome: Vec<String> = grouped.keys().filter(|id| !outcomes.contains_key(*id)).cloned().collect();
    let mut empty: Vec<String> = outcomes.keys().filter(|id| !grouped.contains_key(*id)).cloned().collect();

    let built: Vec<(String, Result<EncounterSeries, Error>)> = grouped
        .par_iter()
        .filter_map(|(id, (patient, evs))| {
            let outcome = outcomes.get(id)?;
            Some((id.clone(), build_series(id, patient, evs, specs, outcome)))
        })
        .collect();

    let mut series = Vec::with_capacity(built.len());
    for (id, result) in built {
        match result {
            Ok(s) => series.push(s),
            Err(_) => empty.push(id),
        }
    }
    empty.sort();

    let (cohort, exclusions) = apply_cohort_filters(series, criteria);
    PreprocessOutput {
        cohort,
        rejections,
        exclusions,
        missing_outcome,
        empty,
    }
}
