use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::series::EncounterSeries;
use crate::error::{Error, Result};
use crate::variables::Variable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiStayPolicy {
    #[default]
    All,
    /// Keep each patient's earliest remaining stay.
    FirstOnly,
    /// Drop every patient with more than one remaining stay.
    UniqueOnly,
}

impl FromStr for MultiStayPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(MultiStayPolicy::All),
            "first_only" => Ok(MultiStayPolicy::FirstOnly),
            "unique_only" => Ok(MultiStayPolicy::UniqueOnly),
            _ => Err(Error::Config(format!("unknown multi-stay policy '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CohortCriteria {
    pub min_age_years: f64,
    pub min_stay_hours: usize,
    pub max_stay_days: usize,
    pub require_map: bool,
    pub require_pao2_or_spo2: bool,
    pub multi_stay_policy: MultiStayPolicy,
}

impl Default for CohortCriteria {
    fn default() -> Self {
        CohortCriteria {
            min_age_years: 18.0,
            min_stay_hours: 4,
            max_stay_days: 30,
            require_map: true,
            require_pao2_or_spo2: true,
            multi_stay_policy: MultiStayPolicy::All,
        }
    }
}

impl CohortCriteria {
    pub fn validate(&self) -> Result<()> {
        if self.min_stay_hours >= self.max_stay_days * 24 {
            return Err(Error::Config(format!(
                "min_stay_hours {} must be below max_stay_days*24 = {}",
                self.min_stay_hours,
                self.max_stay_days * 24
            )));
        }
        Ok(())
    }
}

/// Number of encounters removed by each rule, in application order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ExclusionReport {
    pub input: usize,
    pub age: usize,
    pub stay_length: usize,
    pub missing_map: usize,
    pub missing_oxygenation: usize,
    pub multi_stay: usize,
    pub kept: usize,
}

pub fn passes_age(e: &EncounterSeries, c: &CohortCriteria) -> bool {
    e.age_years >= c.min_age_years
}

pub fn passes_stay_length(e: &EncounterSeries, c: &CohortCriteria) -> bool {
    (c.min_stay_hours..=c.max_stay_days * 24).contains(&e.hours())
}

pub fn passes_map(e: &EncounterSeries, c: &CohortCriteria) -> bool {
    !c.require_map || e.ever_observed(Variable::Map)
}

pub fn passes_oxygenation(e: &EncounterSeries, c: &CohortCriteria) -> bool {
    !c.require_pao2_or_spo2 || e.ever_observed(Variable::Pao2) || e.ever_observed(Variable::Spo2)
}

/// Applies age, stay-length, measurement and multi-stay rules in that
/// order. Output is sorted by encounter id.
pub fn apply_cohort_filters(
    encounters: Vec<EncounterSeries>,
    criteria: &CohortCriteria,
) -> (Vec<EncounterSeries>, ExclusionReport) {
    let mut report = ExclusionReport {
        input: encounters.len(),
        ..Default::default()
    };
    let mut keep = encounters;
    let rules: [(fn(&EncounterSeries, &CohortCriteria) -> bool, &mut usize); 4] = [
        (passes_age, &mut report.age),
        (passes_stay_length, &mut report.stay_length),
        (passes_map, &mut report.missing_map),
        (passes_oxygenation, &mut report.missing_oxygenation),
    ];
    for (rule, counter) in rules {
        let before = keep.len();
        keep.retain(|e| rule(e, criteria));
        *counter = before - keep.len();
    }

    let before = keep.len();
    keep = apply_multi_stay_policy(keep, criteria.multi_stay_policy);
    report.multi_stay = before - keep.len();
    keep.sort_by(|a, b| a.encounter_id.cmp(&b.encounter_id));
    report.kept = keep.len();
    (keep, report)
}

pub fn apply_multi_stay_policy(encounters: Vec<EncounterSeries>, policy: MultiStayPolicy) -> Vec<EncounterSeries> {
    if policy == MultiStayPolicy::All {
        return encounters;
    }
    let mut by_patient: BTreeMap<String, Vec<EncounterSeries>> = BTreeMap::new();
    for e in encounters {
        by_patient.entry(e.patient_id.clone()).or_default().push(e);
    }
    let mut out = Vec::new();
    for (_, mut stays) in by_patient {
        match policy {
            MultiStayPolicy::All => unreachable!(),
            MultiStayPolicy::FirstOnly => {
                stays.sort_by(|a, b| {
                    a.icu_stay_index
                        .cmp(&b.icu_stay_index)
                        .then_with(|| a.encounter_id.cmp(&b.encounter_id))
                });
                out.push(stays.swap_remove(0));
            }
            MultiStayPolicy::UniqueOnly => {
                if stays.len() == 1 {
                    out.extend(stays);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variables::N_VARIABLES;

    fn stay(id: &str, patient: &str, index: u32, hours: usize, age: f64) -> EncounterSeries {
        let mut e = EncounterSeries::constant(id, hours, [1.0; N_VARIABLES], false);
        e.patient_id = patient.into();
        e.icu_stay_index = index;
        e.age_years = age;
        e
    }

    fn ids(v: &[EncounterSeries]) -> Vec<&str> {
        v.iter().map(|e| e.encounter_id.as_str()).collect()
    }

    #[test]
    fn short_stay_excluded() {
        let (kept, rep) = apply_cohort_filters(
            vec![stay("a", "p", 0, 3, 50.0), stay("b", "q", 0, 4, 50.0), stay("c", "r", 0, 721, 50.0)],
            &CohortCriteria::default(),
        );
        assert_eq!(ids(&kept), vec!["b"]);
        assert_eq!(rep.stay_length, 2);
    }

    #[test]
    fn minors_excluded() {
        let (kept, rep) = apply_cohort_filters(vec![stay("a", "p", 0, 10, 17.9)], &CohortCriteria::default());
        assert!(kept.is_empty());
        assert_eq!(rep.age, 1);
    }

    #[test]
    fn multi_stay_policies() {
        let cohort = vec![stay("s2", "p", 2, 10, 50.0), stay("s1", "p", 1, 10, 50.0)];
        let first = CohortCriteria {
            multi_stay_policy: MultiStayPolicy::FirstOnly,
            ..Default::default()
        };
        assert_eq!(ids(&apply_cohort_filters(cohort.clone(), &first).0), vec!["s1"]);
        let unique = CohortCriteria {
            multi_stay_policy: MultiStayPolicy::UniqueOnly,
            ..Default::default()
        };
        let (kept, rep) = apply_cohort_filters(cohort, &unique);
        assert!(kept.is_empty());
        assert_eq!(rep.multi_stay, 2);
    }

    #[test]
    fn measurement_requirements() {
        let mut no_map = stay("a", "p", 0, 5, 50.0);
        let mut no_oxy = stay("b", "q", 0, 5, 50.0);
        let mut spo2_only = stay("c", "r", 0, 5, 50.0);
        for h in 0..5 {
            no_map.set_observed(h, Variable::Map, false);
            no_oxy.set_observed(h, Variable::Pao2, false);
            no_oxy.set_observed(h, Variable::Spo2, false);
            spo2_only.set_observed(h, Variable::Pao2, false);
        }
        let (kept, rep) = apply_cohort_filters(vec![no_map, no_oxy, spo2_only], &CohortCriteria::default());
        assert_eq!(ids(&kept), vec!["c"]);
        assert_eq!((rep.missing_map, rep.missing_oxygenation), (1, 1));
    }

    #[test]
    fn invalid_criteria() {
        let c = CohortCriteria {
            min_stay_hours: 24,
            max_stay_days: 1,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
