use super::events::{EventValue, EventVariable, Outcome, RawEvent};
use crate::error::{Error, Result};
use crate::variables::{FillRule, Variable, VariableSpecs, N_VARIABLES};

pub const MINUTES_PER_HOUR: i64 = 60;

/// Hourly grid for one ICU stay. Row `h` covers minutes `[60h, 60(h+1))`
/// from admission; columns follow [`Variable::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct EncounterSeries {
    pub encounter_id: String,
    pub patient_id: String,
    pub age_years: f64,
    pub label: bool,
    pub icu_stay_index: u32,
    hours: usize,
    grid: Vec<f64>,
    observed: Vec<bool>,
}

impl EncounterSeries {
    /// Builds a series from an already filled grid. `grid` and `observed`
    /// are hour-major with 14 columns.
    pub fn from_grid(
        encounter_id: impl Into<String>,
        patient_id: impl Into<String>,
        grid: Vec<f64>,
        observed: Vec<bool>,
        label: bool,
    ) -> Result<Self> {
        if grid.is_empty() || grid.len() % N_VARIABLES != 0 || observed.len() != grid.len() {
            return Err(Error::Shape(format!(
                "grid of {} cells / mask of {} cells is not T x {N_VARIABLES}",
                grid.len(),
                observed.len()
            )));
        }
        if grid.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("non-finite grid cell".into()));
        }
        Ok(EncounterSeries {
            encounter_id: encounter_id.into(),
            patient_id: patient_id.into(),
            age_years: 0.0,
            label,
            icu_stay_index: 0,
            hours: grid.len() / N_VARIABLES,
            grid,
            observed,
        })
    }

    /// A fully observed series where every hour holds the given row.
    pub fn constant(id: &str, hours: usize, row: [f64; N_VARIABLES], label: bool) -> Self {
        let grid = row.iter().copied().cycle().take(hours * N_VARIABLES).collect();
        Self::from_grid(id, id, grid, vec![true; hours * N_VARIABLES], label)
            .expect("constant grid is well formed")
    }

    /// A series holding every variable's normal value with nothing observed.
    pub fn normal(id: &str, hours: usize, specs: &VariableSpecs) -> Self {
        let mut row = [0.0; N_VARIABLES];
        for s in specs.iter() {
            row[s.variable.index()] = s.normal_value;
        }
        let mut e = Self::constant(id, hours, row, false);
        e.observed.fill(false);
        e
    }

    /// Stay length T in hours.
    #[inline]
    pub fn hours(&self) -> usize {
        self.hours
    }

    #[inline]
    pub fn value(&self, hour: usize, v: Variable) -> f64 {
        self.grid[hour * N_VARIABLES + v.index()]
    }

    #[inline]
    pub fn set_value(&mut self, hour: usize, v: Variable, x: f64) {
        self.grid[hour * N_VARIABLES + v.index()] = x;
    }

    #[inline]
    pub fn is_observed(&self, hour: usize, v: Variable) -> bool {
        self.observed[hour * N_VARIABLES + v.index()]
    }

    #[inline]
    pub fn set_observed(&mut self, hour: usize, v: Variable, observed: bool) {
        self.observed[hour * N_VARIABLES + v.index()] = observed;
    }

    pub fn row(&self, hour: usize) -> &[f64] {
        &self.grid[hour * N_VARIABLES..(hour + 1) * N_VARIABLES]
    }

    pub fn column(&self, v: Variable) -> impl Iterator<Item = f64> + '_ {
        (0..self.hours).map(move |h| self.value(h, v))
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn observed_mask(&self) -> &[bool] {
        &self.observed
    }

    pub fn ever_observed(&self, v: Variable) -> bool {
        (0..self.hours).any(|h| self.is_observed(h, v))
    }

    /// First `hours` rows as a new series.
    pub fn truncated(&self, hours: usize) -> EncounterSeries {
        let hours = hours.clamp(1, self.hours);
        let n = hours * N_VARIABLES;
        EncounterSeries {
            hours,
            grid: self.grid[..n].to_vec(),
            observed: self.observed[..n].to_vec(),
            ..self.clone()
        }
    }
}

/// Buckets one encounter's events into hours, averages within a bucket and
/// fills gaps.
///
/// Events must already be outlier-filtered and FiO₂-imputed; device and
/// flow events are ignored. Events before admission are dropped. T is the
/// bucket of the last in-ICU event plus one.
pub fn build_series(
    encounter_id: &str,
    patient_id: &str,
    events: &[RawEvent],
    specs: &VariableSpecs,
    outcome: &Outcome,
) -> Result<EncounterSeries> {
    let channel_events: Vec<(usize, Variable, f64)> = events
        .iter()
        .filter(|e| e.minutes >= 0)
        .filter_map(|e| match (&e.variable, &e.value) {
            (EventVariable::Channel(v), EventValue::Numeric(x)) => {
                Some(((e.minutes / MINUTES_PER_HOUR) as usize, *v, *x))
            }
            _ => None,
        })
        .collect();
    let Some(last_hour) = channel_events.iter().map(|(h, _, _)| *h).max() else {
        return Err(Error::EmptyEncounter(encounter_id.to_string()));
    };
    let hours = last_hour + 1;

    let mut sums = vec![0.0; hours * N_VARIABLES];
    let mut counts = vec![0u32; hours * N_VARIABLES];
    for &(h, v, x) in &channel_events {
        sums[h * N_VARIABLES + v.index()] += x;
        counts[h * N_VARIABLES + v.index()] += 1;
    }

    let mut grid = vec![0.0; hours * N_VARIABLES];
    let observed: Vec<bool> = counts.iter().map(|&c| c > 0).collect();
    for spec in specs.iter() {
        let j = spec.variable.index();
        let mut carry = spec.normal_value;
        for h in 0..hours {
            let cell = h * N_VARIABLES + j;
            grid[cell] = if counts[cell] > 0 {
                let mean = sums[cell] / f64::from(counts[cell]);
                carry = mean;
                mean
            } else {
                match spec.fill_rule {
                    FillRule::ForwardFill => carry,
                    FillRule::ZeroFill => 0.0,
                }
            };
        }
    }

    let mut series = EncounterSeries::from_grid(encounter_id, patient_id, grid, observed, outcome.label())?;
    series.age_years = outcome.age_years;
    series.icu_stay_index = outcome.icu_stay_index.unwrap_or(0);
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome() -> Outcome {
        Outcome {
            age_years: 60.0,
            died_in_hospital: false,
            hospice_death_within_7d: false,
            icu_stay_index: None,
        }
    }

    fn ev(minutes: i64, v: Variable, x: f64) -> RawEvent {
        RawEvent {
            encounter_id: "e1".into(),
            patient_id: "p1".into(),
            minutes,
            variable: EventVariable::Channel(v),
            value: EventValue::Numeric(x),
        }
    }

    fn build(events: &[RawEvent]) -> EncounterSeries {
        build_series("e1", "p1", events, &VariableSpecs::default(), &outcome()).unwrap()
    }

    #[test]
    fn forward_fill_after_normal_prefix() {
        let s = build(&[ev(120, Variable::Creatinine, 1.0), ev(4 * 60 + 59, Variable::Map, 70.0)]);
        assert_eq!(s.hours(), 5);
        let col: Vec<f64> = s.column(Variable::Creatinine).collect();
        assert_eq!(col, vec![0.9, 0.9, 1.0, 1.0, 1.0]);
        assert!(s.is_observed(2, Variable::Creatinine));
        assert!(!s.is_observed(3, Variable::Creatinine));
    }

    #[test]
    fn vasopressor_never_recorded_is_zero() {
        let s = build(&[ev(150, Variable::Map, 75.0)]);
        assert_eq!(s.hours(), 3);
        assert!(s.column(Variable::Norepinephrine).all(|x| x == 0.0));
    }

    #[test]
    fn zero_fill_does_not_carry() {
        let s = build(&[ev(0, Variable::Dopamine, 5.0), ev(120, Variable::Map, 75.0)]);
        assert_eq!(s.column(Variable::Dopamine).collect::<Vec<_>>(), vec![5.0, 0.0, 0.0]);
    }

    #[test]
    fn bucket_mean() {
        let s = build(&[ev(0, Variable::Map, 80.0), ev(59, Variable::Map, 90.0)]);
        assert_eq!(s.value(0, Variable::Map), 85.0);
    }

    #[test]
    fn boundary_minute_goes_to_later_bucket() {
        let s = build(&[ev(59, Variable::Map, 80.0), ev(60, Variable::Map, 90.0)]);
        assert_eq!(s.column(Variable::Map).collect::<Vec<_>>(), vec![80.0, 90.0]);
    }

    #[test]
    fn pre_icu_events_dropped() {
        let s = build(&[ev(-30, Variable::Gcs, 5.0), ev(10, Variable::Map, 80.0)]);
        assert_eq!(s.hours(), 1);
        assert_eq!(s.value(0, Variable::Gcs), 15.0);
        let err = build_series("e1", "p1", &[ev(-30, Variable::Gcs, 5.0)], &VariableSpecs::default(), &outcome());
        assert!(matches!(err, Err(Error::EmptyEncounter(_))));
    }

    #[test]
    fn label_folds_hospice() {
        let mut o = outcome();
        o.hospice_death_within_7d = true;
        let s = build_series("e1", "p1", &[ev(0, Variable::Map, 80.0)], &VariableSpecs::default(), &o).unwrap();
        assert!(s.label);
    }
}
