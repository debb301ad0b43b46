use std::path::Path;

use crate::error::{Error, Result};

pub const MAX_TOTAL: u8 = 24;

/// Bundled fixture; see `config/bedside_sofa.csv`.
pub const DEFAULT_BEDSIDE_TABLE: &str = include_str!("../../config/bedside_sofa.csv");

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lo: u8,
    pub hi: u8,
    pub rate: f64,
}

/// Mortality rate lookup by total SOFA score.
#[derive(Debug, Clone, PartialEq)]
pub struct BedsideTable {
    bands: Vec<Band>,
}

impl BedsideTable {
    pub fn new(mut bands: Vec<Band>) -> Result<Self> {
        bands.sort_by_key(|b| b.lo);
        let mut next = 0u8;
        let mut last_rate = 0.0;
        for b in &bands {
            if b.lo != next || b.hi < b.lo || b.hi > MAX_TOTAL {
                return Err(Error::BedsideTable(format!(
                    "band {}..={} breaks the partition of 0..={MAX_TOTAL}",
                    b.lo, b.hi
                )));
            }
            if !(0.0..=1.0).contains(&b.rate) {
                return Err(Error::BedsideTable(format!("rate {} outside [0, 1]", b.rate)));
            }
            if b.rate < last_rate {
                return Err(Error::BedsideTable(format!("rate decreases at band starting {}", b.lo)));
            }
            last_rate = b.rate;
            next = b.hi + 1;
        }
        if next != MAX_TOTAL + 1 {
            return Err(Error::BedsideTable(format!("bands stop at {}", next as i32 - 1)));
        }
        Ok(BedsideTable { bands })
    }

    /// Parses `lo,hi,rate` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut bands = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = || Error::BedsideTable(format!("line {}: expected lo,hi,rate", i + 1));
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            let [lo, hi, rate] = parts[..] else {
                return Err(bad());
            };
            bands.push(Band {
                lo: lo.parse().map_err(|_| bad())?,
                hi: hi.parse().map_err(|_| bad())?,
                rate: rate.parse().map_err(|_| bad())?,
            });
        }
        Self::new(bands)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// One band per integer score with the given rates.
    pub fn per_score(rates: [f64; 25]) -> Result<Self> {
        Self::new(
            rates
                .iter()
                .enumerate()
                .map(|(s, &rate)| Band {
                    lo: s as u8,
                    hi: s as u8,
                    rate,
                })
                .collect(),
        )
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn probability(&self, total: i64) -> Result<f64> {
        bedside_probability(total, self)
    }
}

impl Default for BedsideTable {
    fn default() -> Self {
        Self::parse(DEFAULT_BEDSIDE_TABLE).expect("bundled bedside table is valid")
    }
}

pub fn bedside_probability(total: i64, table: &BedsideTable) -> Result<f64> {
    if !(0..=i64::from(MAX_TOTAL)).contains(&total) {
        return Err(Error::TotalOutOfRange(total));
    }
    let t = total as u8;
    Ok(table
        .bands
        .iter()
        .find(|b| (b.lo..=b.hi).contains(&t))
        .expect("bands partition 0..=24")
        .rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_band() {
        let t = BedsideTable::parse("0,24,0.1").unwrap();
        assert_eq!(bedside_probability(17, &t).unwrap(), 0.1);
    }

    #[test]
    fn banded_boundary() {
        let t = BedsideTable::parse("0,6,0.05\n7,24,0.5\n").unwrap();
        assert_eq!(t.probability(6).unwrap(), 0.05);
        assert_eq!(t.probability(7).unwrap(), 0.5);
    }

    #[test]
    fn strictly_monotone_table() {
        let mut rates = [0.0; 25];
        for (i, r) in rates.iter_mut().enumerate() {
            *r = (i as f64 + 1.0) / 26.0;
        }
        let t = BedsideTable::per_score(rates).unwrap();
        for s in 0..24 {
            assert!(t.probability(s).unwrap() < t.probability(s + 1).unwrap());
        }
    }

    #[test]
    fn out_of_range_total() {
        let t = BedsideTable::default();
        assert!(matches!(t.probability(25), Err(Error::TotalOutOfRange(25))));
        assert!(t.probability(-1).is_err());
    }

    #[test]
    fn invalid_tables() {
        assert!(BedsideTable::parse("0,10,0.1\n12,24,0.2").is_err());
        assert!(BedsideTable::parse("0,10,0.1\n10,24,0.2").is_err());
        assert!(BedsideTable::parse("0,10,0.3\n11,24,0.2").is_err());
        assert!(BedsideTable::parse("0,23,0.3").is_err());
        assert!(BedsideTable::parse("0,24,1.5").is_err());
        assert!(BedsideTable::parse("0;24;0.1").is_err());
    }

    #[test]
    fn bundled_table_loads() {
        let t = BedsideTable::default();
        assert_eq!(t.probability(0).unwrap(), 0.0);
        assert_eq!(t.probability(24).unwrap(), 0.952);
    }
}
