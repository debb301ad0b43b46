//! CSV reports. Floats use the shortest representation that round-trips, so
//! identical inputs give byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use super::compare::{ComparisonPoint, MeanAucComparison};
use super::curves::{AucPoint, StratifiedPoint};
use crate::error::{Error, Result};

pub fn auc_curve_csv(points: &[AucPoint]) -> String {
    let mut out = String::from("hour,auc,ci_lo,ci_hi,n_active,mortality_rate\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            p.hour, p.auc, p.ci_lo, p.ci_hi, p.n_active, p.mortality_rate_active
        );
    }
    out
}

pub fn comparison_csv(points: &[ComparisonPoint]) -> String {
    let mut out = String::from("hour,auc_a,auc_b,difference,ci_lo,ci_hi,p_value\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            p.hour, p.auc_a, p.auc_b, p.difference, p.ci_lo, p.ci_hi, p.p_value
        );
    }
    out
}

pub fn mean_comparison_csv(c: &MeanAucComparison) -> String {
    format!(
        "mean_auc_a,mean_auc_b,difference,ci_lo,ci_hi,p_value\n{},{},{},{},{},{}\n",
        c.mean_auc_a, c.mean_auc_b, c.difference, c.ci_lo, c.ci_hi, c.p_value
    )
}

pub fn stratified_csv(points: &[StratifiedPoint]) -> String {
    let mut out = String::from(
        "hour,survivor_mean,survivor_ci_lo,survivor_ci_hi,survivor_n,nonsurvivor_mean,nonsurvivor_ci_lo,nonsurvivor_ci_hi,nonsurvivor_n\n",
    );
    for p in points {
        let (s, d) = (&p.survivors, &p.non_survivors);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            p.hour, s.mean, s.ci_lo, s.ci_hi, s.n, d.mean, d.ci_lo, d.ci_hi, d.n
        );
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
