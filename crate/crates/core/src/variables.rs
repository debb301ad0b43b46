//! The fourteen model channels and their processing rules.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bundled default rules; see `config/variables.toml`.
pub const DEFAULT_VARIABLES_TOML: &str = include_str!("../config/variables.toml");

pub const N_VARIABLES: usize = 14;

/// One model input channel. The discriminant is the column index in an
/// encounter grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    Map = 0,
    Fio2,
    Pao2,
    Spo2,
    Mv,
    Gcs,
    Urine,
    Platelets,
    Bilirubin,
    Creatinine,
    Dopamine,
    Dobutamine,
    Epinephrine,
    Norepinephrine,
}

impl Variable {
    pub const ALL: [Variable; N_VARIABLES] = [
        Variable::Map,
        Variable::Fio2,
        Variable::Pao2,
        Variable::Spo2,
        Variable::Mv,
        Variable::Gcs,
        Variable::Urine,
        Variable::Platelets,
        Variable::Bilirubin,
        Variable::Creatinine,
        Variable::Dopamine,
        Variable::Dobutamine,
        Variable::Epinephrine,
        Variable::Norepinephrine,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Variable::Map => "map",
            Variable::Fio2 => "fio2",
            Variable::Pao2 => "pao2",
            Variable::Spo2 => "spo2",
            Variable::Mv => "mv",
            Variable::Gcs => "gcs",
            Variable::Urine => "urine",
            Variable::Platelets => "platelets",
            Variable::Bilirubin => "bilirubin",
            Variable::Creatinine => "creatinine",
            Variable::Dopamine => "dopamine",
            Variable::Dobutamine => "dobutamine",
            Variable::Epinephrine => "epinephrine",
            Variable::Norepinephrine => "norepinephrine",
        }
    }

    pub fn is_vasopressor(self) -> bool {
        matches!(
            self,
            Variable::Dopamine | Variable::Dobutamine | Variable::Epinephrine | Variable::Norepinephrine
        )
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variable::ALL
            .iter()
            .copied()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown variable '{s}'")))
    }
}

/// SOFA organ systems, used to select organ-subset models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrganSystem {
    Cardiovascular,
    Respiratory,
    Nervous,
    Coagulation,
    Liver,
    Renal,
}

impl OrganSystem {
    pub const ALL: [OrganSystem; 6] = [
        OrganSystem::Cardiovascular,
        OrganSystem::Respiratory,
        OrganSystem::Nervous,
        OrganSystem::Coagulation,
        OrganSystem::Liver,
        OrganSystem::Renal,
    ];

    pub fn variables(self) -> &'static [Variable] {
        use Variable::*;
        match self {
            OrganSystem::Cardiovascular => &[Map, Dopamine, Dobutamine, Epinephrine, Norepinephrine],
            OrganSystem::Respiratory => &[Fio2, Pao2, Spo2, Mv],
            OrganSystem::Nervous => &[Gcs],
            OrganSystem::Coagulation => &[Platelets],
            OrganSystem::Liver => &[Bilirubin],
            OrganSystem::Renal => &[Creatinine, Urine],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OrganSystem::Cardiovascular => "cardiovascular",
            OrganSystem::Respiratory => "respiratory",
            OrganSystem::Nervous => "nervous",
            OrganSystem::Coagulation => "coagulation",
            OrganSystem::Liver => "liver",
            OrganSystem::Renal => "renal",
        }
    }
}

impl FromStr for OrganSystem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OrganSystem::ALL
            .iter()
            .copied()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown organ system '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillRule {
    ForwardFill,
    ZeroFill,
}

/// A real interval with independently open or closed ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub min: f64,
    pub max: f64,
    pub min_open: bool,
    pub max_open: bool,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        let lo = if self.min_open { v > self.min } else { v >= self.min };
        let hi = if self.max_open { v < self.max } else { v <= self.max };
        lo && hi
    }
}

impl FromStr for Interval {
    type Err = Error;

    /// Parses interval notation such as `(0, 300]`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("malformed interval '{s}'"));
        let s = s.trim();
        let min_open = match s.chars().next() {
            Some('(') => true,
            Some('[') => false,
            _ => return Err(bad()),
        };
        let max_open = match s.chars().last() {
            Some(')') => true,
            Some(']') => false,
            _ => return Err(bad()),
        };
        let inner = &s[1..s.len() - 1];
        let (a, b) = inner.split_once(',').ok_or_else(bad)?;
        let min: f64 = a.trim().parse().map_err(|_| bad())?;
        let max: f64 = b.trim().parse().map_err(|_| bad())?;
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(bad());
        }
        Ok(Interval {
            min,
            max,
            min_open,
            max_open,
        })
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.min_open { '(' } else { '[' },
            self.min,
            self.max,
            if self.max_open { ')' } else { ']' }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableSpec {
    pub variable: Variable,
    pub unit: String,
    pub range: Interval,
    pub fill_rule: FillRule,
    pub normal_value: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    unit: String,
    range: String,
    fill: FillRule,
    normal: f64,
}

/// Rules for all fourteen channels, indexed by [`Variable::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct VariableSpecs {
    specs: Vec<VariableSpec>,
}

impl VariableSpecs {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: BTreeMap<String, RawSpec> =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut slots: Vec<Option<VariableSpec>> = vec![None; N_VARIABLES];
        for (name, r) in raw {
            let variable: Variable = name.parse()?;
            let range: Interval = r.range.parse()?;
            slots[variable.index()] = Some(VariableSpec {
                variable,
                unit: r.unit,
                range,
                fill_rule: r.fill,
                normal_value: r.normal,
            });
        }
        let specs = slots
            .into_iter()
            .zip(Variable::ALL)
            .map(|(s, v)| s.ok_or_else(|| Error::Config(format!("missing rules for '{v}'"))))
            .collect::<Result<Vec<_>>>()?;
        let out = VariableSpecs { specs };
        out.validate()?;
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    fn validate(&self) -> Result<()> {
        for s in &self.specs {
            if !s.normal_value.is_finite() || !s.range.contains(s.normal_value) {
                return Err(Error::Config(format!(
                    "normal value {} of '{}' outside {}",
                    s.normal_value, s.variable, s.range
                )));
            }
            let expected = if s.variable.is_vasopressor() || s.variable == Variable::Mv {
                FillRule::ZeroFill
            } else {
                FillRule::ForwardFill
            };
            if s.fill_rule != expected {
                return Err(Error::Config(format!(
                    "'{}' must use {:?}",
                    s.variable, expected
                )));
            }
            if s.fill_rule == FillRule::ZeroFill && s.normal_value != 0.0 {
                return Err(Error::Config(format!("zero-filled '{}' needs normal 0", s.variable)));
            }
        }
        Ok(())
    }

    pub fn get(&self, v: Variable) -> &VariableSpec {
        &self.specs[v.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = &VariableSpec> {
        self.specs.iter()
    }
}

impl Default for VariableSpecs {
    fn default() -> Self {
        Self::from_toml(DEFAULT_VARIABLES_TOML).expect("bundled variable rules are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_defaults_load() {
        let specs = VariableSpecs::default();
        assert_eq!(specs.get(Variable::Map).normal_value, 80.0);
        assert_eq!(specs.get(Variable::Urine).normal_value, 60.0);
        assert_eq!(specs.get(Variable::Norepinephrine).fill_rule, FillRule::ZeroFill);
        assert_eq!(specs.get(Variable::Creatinine).fill_rule, FillRule::ForwardFill);
    }

    #[test]
    fn interval_bounds() {
        let map: Interval = "(0, 300]".parse().unwrap();
        assert!(!map.contains(0.0));
        assert!(map.contains(300.0));
        assert!(!map.contains(300.0001));
        let gcs: Interval = "[3,15]".parse().unwrap();
        assert!(gcs.contains(3.0) && gcs.contains(15.0) && !gcs.contains(2.0));
        assert!("3, 15".parse::<Interval>().is_err());
        assert!("[15, 3]".parse::<Interval>().is_err());
    }

    #[test]
    fn rejects_normal_outside_range() {
        let bad = DEFAULT_VARIABLES_TOML.replace("normal = 15.0", "normal = 16.0");
        assert!(VariableSpecs::from_toml(&bad).is_err());
    }

    #[test]
    fn rejects_wrong_fill_rule() {
        let bad = DEFAULT_VARIABLES_TOML.replacen(
            "range = \"[0, 50]\"\nfill = \"zero_fill\"",
            "range = \"[0, 50]\"\nfill = \"forward_fill\"",
            1,
        );
        assert!(VariableSpecs::from_toml(&bad).is_err());
    }

    #[test]
    fn organ_subsets_partition_channels() {
        let mut seen: Vec<Variable> = OrganSystem::ALL
            .iter()
            .flat_map(|o| o.variables().iter().copied())
            .collect();
        seen.sort();
        assert_eq!(seen, Variable::ALL.to_vec());
    }
}
