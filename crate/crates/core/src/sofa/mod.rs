//! Hourly SOFA scoring over a trailing 24-hour worst-value window, and the
//! two SOFA baselines built on it.
//!
//! The traditional baseline ranks encounters by the raw total; the bedside
//! baseline maps the total to a mortality rate through a [`BedsideTable`].

pub mod bedside;
pub mod rules;
pub mod window;

use std::path::Path;

pub use bedside::{bedside_probability, Band, BedsideTable};
pub use rules::{component_scores, SofaAssessment};
pub use window::{
    rice_linear_sf_to_pf, window_aggregate, window_aggregate_with, window_trajectory, SofaOptions,
    WindowAggregate, WINDOW_HOURS,
};

use crate::error::{Error, Result};
use crate::ingest::EncounterSeries;

/// One assessment per hour 1..=T.
pub fn sofa_trajectory(series: &EncounterSeries) -> Vec<SofaAssessment> {
    sofa_trajectory_with(series, &SofaOptions::default())
}

pub fn sofa_trajectory_with(series: &EncounterSeries, opts: &SofaOptions) -> Vec<SofaAssessment> {
    window_trajectory(series, opts)
        .iter()
        .enumerate()
        .map(|(i, agg)| SofaAssessment {
            hour: i + 1,
            ..component_scores(agg)
        })
        .collect()
}

/// Raw totals as per-hour ranking scores.
pub fn traditional_scores(series: &EncounterSeries) -> Vec<f64> {
    sofa_trajectory(series).iter().map(|a| f64::from(a.total)).collect()
}

pub fn bedside_probabilities(series: &EncounterSeries, table: &BedsideTable) -> Vec<f64> {
    sofa_trajectory(series)
        .iter()
        .map(|a| table.probability(i64::from(a.total)).expect("total within 0..=24"))
        .collect()
}

/// Writes `encounter_id,hour,cardio,resp,cns,coag,liver,renal,total,bedside_prob`.
pub fn write_sofa_csv(path: &Path, cohort: &[EncounterSeries], table: &BedsideTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "encounter_id",
        "hour",
        "cardio",
        "resp",
        "cns",
        "coag",
        "liver",
        "renal",
        "total",
        "bedside_prob",
    ])?;
    for e in cohort {
        for a in sofa_trajectory(e) {
            let p = table.probability(i64::from(a.total))?;
            let mut rec = vec![e.encounter_id.clone(), a.hour.to_string()];
            rec.extend(a.components().iter().map(u8::to_string));
            rec.push(a.total.to_string());
            rec.push(p.to_string());
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variables::{Variable, VariableSpecs};

    fn normal_series(hours: usize) -> EncounterSeries {
        EncounterSeries::normal("e", hours, &VariableSpecs::default())
    }

    #[test]
    fn normal_series_scores_zero() {
        let traj = sofa_trajectory(&normal_series(30));
        assert_eq!(traj.len(), 30);
        assert!(traj.iter().all(|a| a.total == 0));
        assert_eq!(traj[0].hour, 1);
    }

    #[test]
    fn single_hour_low_gcs() {
        let mut s = normal_series(1);
        s.set_value(0, Variable::Gcs, 3.0);
        let traj = sofa_trajectory(&s);
        assert_eq!(traj.len(), 1);
        assert_eq!(traj[0].total, 4);
    }

    #[test]
    fn forward_filled_bilirubin_scores_throughout() {
        // A single bilirubin of 13 at the first grid hour is forward filled
        // through the stay, so the liver score never ages out of the window.
        let mut s = normal_series(26);
        for h in 0..26 {
            s.set_value(h, Variable::Bilirubin, 13.0);
        }
        s.set_observed(0, Variable::Bilirubin, true);
        let liver: Vec<u8> = sofa_trajectory(&s).iter().map(|a| a.liver).collect();
        assert_eq!(liver, vec![4; 26]);
    }

    #[test]
    fn bedside_follows_totals() {
        let mut s = normal_series(2);
        s.set_value(1, Variable::Gcs, 3.0);
        let t = BedsideTable::parse("0,3,0.1\n4,24,0.6").unwrap();
        assert_eq!(bedside_probabilities(&s, &t), vec![0.1, 0.6]);
        assert_eq!(traditional_scores(&s), vec![0.0, 4.0]);
    }
}
