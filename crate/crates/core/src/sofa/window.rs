use crate::error::{Error, Result};
use crate::ingest::EncounterSeries;
use crate::variables::Variable;

pub const WINDOW_HOURS: usize = 24;

/// Maps an SpO₂/FiO₂ ratio to an estimated PaO₂/FiO₂ ratio.
pub type SfToPf = fn(f64) -> f64;

/// Linear inversion of `S/F = 64 + 0.84 * P/F` (Rice et al., 2007). This
/// relation is an engineering default, replaceable through [`SofaOptions`].
pub fn rice_linear_sf_to_pf(sf: f64) -> f64 {
    (sf - 64.0) / 0.84
}

#[derive(Debug, Clone, Copy)]
pub struct SofaOptions {
    pub sf_to_pf: SfToPf,
}

impl Default for SofaOptions {
    fn default() -> Self {
        SofaOptions {
            sf_to_pf: rice_linear_sf_to_pf,
        }
    }
}

/// Worst values over the trailing window ending before `hour`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowAggregate {
    pub map_min: f64,
    /// `None` when no hour in the window had a usable oxygenation ratio.
    pub pf_ratio_min: Option<f64>,
    pub mv_any: bool,
    pub gcs_min: f64,
    pub platelets_min: f64,
    pub bilirubin_max: f64,
    pub creatinine_max: f64,
    pub dopamine_max: f64,
    pub dobutamine_max: f64,
    pub epinephrine_max: f64,
    pub norepinephrine_max: f64,
    pub urine_sum_ml: f64,
    pub window_hours: usize,
}

impl WindowAggregate {
    /// An aggregate that scores 0 on every component.
    pub fn normal() -> Self {
        WindowAggregate {
            map_min: 80.0,
            pf_ratio_min: None,
            mv_any: false,
            gcs_min: 15.0,
            platelets_min: 200.0,
            bilirubin_max: 0.6,
            creatinine_max: 0.9,
            dopamine_max: 0.0,
            dobutamine_max: 0.0,
            epinephrine_max: 0.0,
            norepinephrine_max: 0.0,
            urine_sum_ml: 1500.0,
            window_hours: WINDOW_HOURS,
        }
    }
}

/// First hour at which each oxygenation channel carries a real value.
#[derive(Debug, Clone, Copy)]
struct FirstSeen {
    pao2: Option<usize>,
    spo2: Option<usize>,
    fio2: Option<usize>,
}

impl FirstSeen {
    fn of(series: &EncounterSeries) -> Self {
        let first = |v| (0..series.hours()).find(|&h| series.is_observed(h, v));
        FirstSeen {
            pao2: first(Variable::Pao2),
            spo2: first(Variable::Spo2),
            fio2: first(Variable::Fio2),
        }
    }
}

fn seen_by(first: Option<usize>, hour: usize) -> bool {
    first.is_some_and(|f| f <= hour)
}

/// Oxygenation ratio for one grid hour. PaO₂ is used once it has been
/// measured; before that an observed SpO₂ is converted; with neither, or
/// with no FiO₂ yet charted, the hour contributes nothing.
fn hour_pf_ratio(series: &EncounterSeries, h: usize, first: FirstSeen, opts: &SofaOptions) -> Option<f64> {
    if !seen_by(first.fio2, h) {
        return None;
    }
    let fio2 = series.value(h, Variable::Fio2) / 100.0;
    if seen_by(first.pao2, h) {
        Some(series.value(h, Variable::Pao2) / fio2)
    } else if seen_by(first.spo2, h) {
        Some((opts.sf_to_pf)(series.value(h, Variable::Spo2) / fio2))
    } else {
        None
    }
}

pub fn window_aggregate(series: &EncounterSeries, hour: usize) -> Result<WindowAggregate> {
    window_aggregate_with(series, hour, &SofaOptions::default())
}

/// Aggregates grid hours `[max(0, hour-24), hour)`. `hour` is 1-based: the
/// assessment at hour 1 sees only grid row 0.
pub fn window_aggregate_with(series: &EncounterSeries, hour: usize, opts: &SofaOptions) -> Result<WindowAggregate> {
    let t = series.hours();
    if hour == 0 || hour > t {
        return Err(Error::HourOutOfRange { hour, len: t });
    }
    let first = FirstSeen::of(series);
    Ok(aggregate_range(series, hour.saturating_sub(WINDOW_HOURS), hour, first, opts))
}

fn aggregate_range(
    series: &EncounterSeries,
    start: usize,
    end: usize,
    first: FirstSeen,
    opts: &SofaOptions,
) -> WindowAggregate {
    let min_of = |v| (start..end).map(|h| series.value(h, v)).fold(f64::INFINITY, f64::min);
    let max_of = |v| (start..end).map(|h| series.value(h, v)).fold(f64::NEG_INFINITY, f64::max);
    let pf_ratio_min = (start..end)
        .filter_map(|h| hour_pf_ratio(series, h, first, opts))
        .reduce(f64::min);
    WindowAggregate {
        map_min: min_of(Variable::Map),
        pf_ratio_min,
        mv_any: (start..end).any(|h| series.value(h, Variable::Mv) >= 0.5),
        gcs_min: min_of(Variable::Gcs),
        platelets_min: min_of(Variable::Platelets),
        bilirubin_max: max_of(Variable::Bilirubin),
        creatinine_max: max_of(Variable::Creatinine),
        dopamine_max: max_of(Variable::Dopamine),
        dobutamine_max: max_of(Variable::Dobutamine),
        epinephrine_max: max_of(Variable::Epinephrine),
        norepinephrine_max: max_of(Variable::Norepinephrine),
        urine_sum_ml: (start..end).map(|h| series.value(h, Variable::Urine)).sum(),
        window_hours: end - start,
    }
}

/// Aggregates for every hour 1..=T.
pub fn window_trajectory(series: &EncounterSeries, opts: &SofaOptions) -> Vec<WindowAggregate> {
    let first = FirstSeen::of(series);
    (1..=series.hours())
        .map(|hour| aggregate_range(series, hour.saturating_sub(WINDOW_HOURS), hour, first, opts))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variables::VariableSpecs;

    fn normal_series(hours: usize) -> EncounterSeries {
        EncounterSeries::normal("e", hours, &VariableSpecs::default())
    }

    #[test]
    fn worst_map_in_window() {
        let mut s = normal_series(3);
        for (h, x) in [80.0, 60.0, 75.0].into_iter().enumerate() {
            s.set_value(h, Variable::Map, x);
        }
        assert_eq!(window_aggregate(&s, 3).unwrap().map_min, 60.0);
        assert_eq!(window_aggregate(&s, 1).unwrap().map_min, 80.0);
    }

    #[test]
    fn trailing_window_covers_last_24_rows() {
        let mut s = normal_series(30);
        s.set_value(5, Variable::Gcs, 3.0);
        s.set_value(6, Variable::Gcs, 8.0);
        let agg = window_aggregate(&s, 30).unwrap();
        assert_eq!(agg.window_hours, 24);
        assert_eq!(agg.gcs_min, 8.0);
        assert_eq!(window_aggregate(&s, 29).unwrap().gcs_min, 3.0);
    }

    #[test]
    fn urine_sums() {
        let mut s = normal_series(3);
        for h in 0..3 {
            s.set_value(h, Variable::Urine, 50.0);
        }
        let agg = window_aggregate(&s, 3).unwrap();
        assert_eq!(agg.urine_sum_ml, 150.0);
        assert_eq!(agg.window_hours, 3);
    }

    #[test]
    fn hour_out_of_range() {
        let s = normal_series(3);
        assert!(window_aggregate(&s, 0).is_err());
        assert!(window_aggregate(&s, 4).is_err());
    }

    #[test]
    fn oxygenation_sources() {
        let mut s = normal_series(4);
        // no PaO2, no SpO2 observed: no ratio
        for h in 0..4 {
            s.set_value(h, Variable::Fio2, 50.0);
            s.set_observed(h, Variable::Fio2, true);
        }
        assert_eq!(window_aggregate(&s, 4).unwrap().pf_ratio_min, None);

        // SpO2 observed at hour 0, PaO2 first measured at hour 2
        s.set_value(0, Variable::Spo2, 92.0);
        s.set_observed(0, Variable::Spo2, true);
        s.set_value(2, Variable::Pao2, 60.0);
        s.set_value(3, Variable::Pao2, 60.0);
        s.set_observed(2, Variable::Pao2, true);
        let agg = window_aggregate(&s, 2).unwrap();
        let sf = 92.0 / 0.5;
        assert_eq!(agg.pf_ratio_min, Some(rice_linear_sf_to_pf(sf)));
        let agg = window_aggregate(&s, 4).unwrap();
        assert_eq!(agg.pf_ratio_min, Some(120.0));
    }

    #[test]
    fn mv_indicator() {
        let mut s = normal_series(3);
        s.set_value(1, Variable::Mv, 1.0);
        assert!(!window_aggregate(&s, 1).unwrap().mv_any);
        assert!(window_aggregate(&s, 2).unwrap().mv_any);
    }
}
