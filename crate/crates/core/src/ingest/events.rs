use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::variables::{Variable, VariableSpecs};

pub const EVENT_HEADER: [&str; 5] = ["encounter_id", "patient_id", "minutes", "variable", "value"];
pub const OUTCOME_HEADER: [&str; 4] = [
    "encounter_id",
    "age_years",
    "died_in_hospital",
    "hospice_death_within_7d",
];

pub const O2_DEVICE: &str = "o2_device";
pub const O2_FLOW: &str = "o2_flow_lpm";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventVariable {
    Channel(Variable),
    O2Device,
    O2FlowLpm,
}

impl EventVariable {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            O2_DEVICE => Some(EventVariable::O2Device),
            O2_FLOW => Some(EventVariable::O2FlowLpm),
            other => other.parse().ok().map(EventVariable::Channel),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EventVariable::Channel(v) => v.name(),
            EventVariable::O2Device => O2_DEVICE,
            EventVariable::O2FlowLpm => O2_FLOW,
        }
    }
}

impl fmt::Display for EventVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventValue {
    Numeric(f64),
    Device(String),
}

impl EventValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            EventValue::Numeric(v) => Some(*v),
            EventValue::Device(_) => None,
        }
    }
}

impl fmt::Display for EventValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventValue::Numeric(v) => write!(f, "{v}"),
            EventValue::Device(d) => f.write_str(d),
        }
    }
}

/// One timestamped measurement. `minutes` is the offset from ICU admission.
#[derive(Debug, Clone, PartialEq)]
pub struct RawEvent {
    pub encounter_id: String,
    pub patient_id: String,
    pub minutes: i64,
    pub variable: EventVariable,
    pub value: EventValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    FieldCount,
    BadMinutes,
    UnknownVariable,
    BadValue,
    NonFinite,
    Outlier,
    NegativeFlow,
}

impl RejectReason {
    pub fn code(self) -> &'static str {
        match self {
            RejectReason::FieldCount => "field_count",
            RejectReason::BadMinutes => "bad_minutes",
            RejectReason::UnknownVariable => "unknown_variable",
            RejectReason::BadValue => "bad_value",
            RejectReason::NonFinite => "non_finite",
            RejectReason::Outlier => "outlier",
            RejectReason::NegativeFlow => "negative_flow",
        }
    }
}

/// A dropped row. `line` is the 1-based file line, or 0 for rejections made
/// after parsing where the line is no longer known.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    pub line: u64,
    pub encounter_id: String,
    pub variable: String,
    pub value: String,
    pub reason: RejectReason,
}

#[derive(Debug, Default)]
pub struct ParsedEvents {
    pub events: Vec<RawEvent>,
    pub rejections: Vec<Rejection>,
}

pub fn parse_events(path: &Path) -> Result<ParsedEvents> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_events_from_reader(file)
}

pub fn parse_events_from_reader<R: Read>(reader: R) -> Result<ParsedEvents> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(EVENT_HEADER.iter().copied()) {
        return Err(Error::Schema(format!(
            "event header must be '{}', found '{}'",
            EVENT_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut out = ParsedEvents::default();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("").to_string();
        let reject = |reason| Rejection {
            line,
            encounter_id: field(0),
            variable: field(3),
            value: field(4),
            reason,
        };
        if record.len() != EVENT_HEADER.len() {
            out.rejections.push(reject(RejectReason::FieldCount));
            continue;
        }
        let Ok(minutes) = record[2].parse::<i64>() else {
            out.rejections.push(reject(RejectReason::BadMinutes));
            continue;
        };
        let Some(variable) = EventVariable::parse(&record[3]) else {
            out.rejections.push(reject(RejectReason::UnknownVariable));
            continue;
        };
        let value = match variable {
            EventVariable::O2Device => EventValue::Device(record[4].to_lowercase()),
            _ => match record[4].parse::<f64>() {
                Ok(v) if v.is_finite() => EventValue::Numeric(v),
                Ok(_) => {
                    out.rejections.push(reject(RejectReason::NonFinite));
                    continue;
                }
                Err(_) => {
                    out.rejections.push(reject(RejectReason::BadValue));
                    continue;
                }
            },
        };
        out.events.push(RawEvent {
            encounter_id: record[0].to_string(),
            patient_id: record[1].to_string(),
            minutes,
            variable,
            value,
        });
    }
    Ok(out)
}

/// Drops channel measurements outside their non-outlier interval and
/// negative oxygen flows. Device events pass through.
pub fn filter_outliers(events: Vec<RawEvent>, specs: &VariableSpecs) -> (Vec<RawEvent>, Vec<Rejection>) {
    let mut kept = Vec::with_capacity(events.len());
    let mut rejected = Vec::new();
    for ev in events {
        let reason = match (&ev.variable, &ev.value) {
            (EventVariable::Channel(v), EventValue::Numeric(x)) => {
                (!specs.get(*v).range.contains(*x)).then_some(RejectReason::Outlier)
            }
            (EventVariable::O2FlowLpm, EventValue::Numeric(x)) => {
                (*x < 0.0).then_some(RejectReason::NegativeFlow)
            }
            _ => None,
        };
        match reason {
            Some(reason) => rejected.push(Rejection {
                line: 0,
                encounter_id: ev.encounter_id.clone(),
                variable: ev.variable.to_string(),
                value: ev.value.to_string(),
                reason,
            }),
            None => kept.push(ev),
        }
    }
    (kept, rejected)
}

pub fn write_rejections(path: &Path, rejections: &[Rejection]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["line", "encounter_id", "variable", "value", "reason"])?;
    for r in rejections {
        w.write_record([
            r.line.to_string(),
            r.encounter_id.clone(),
            r.variable.clone(),
            r.value.clone(),
            r.reason.code().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Writes events in the input schema, in the given order.
pub fn write_events(path: &Path, events: &[RawEvent]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "{}", EVENT_HEADER.join(",")).map_err(|e| Error::io(path, e))?;
    for ev in events {
        writeln!(w, "{},{},{},{},{}", ev.encounter_id, ev.patient_id, ev.minutes, ev.variable, ev.value)
            .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Per-encounter outcome and demographics.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub age_years: f64,
    pub died_in_hospital: bool,
    pub hospice_death_within_7d: bool,
    /// Ordinal of this stay within the patient's record, when supplied.
    pub icu_stay_index: Option<u32>,
}

impl Outcome {
    pub fn label(&self) -> bool {
        self.died_in_hospital || self.hospice_death_within_7d
    }
}

fn parse_flag(s: &str) -> Option<bool> {
    match s {
        "1" | "true" => Some(true),
        "0" | "false" => Some(false),
        _ => None,
    }
}

/// Reads the outcome file. An optional fifth column `icu_stay_index`
/// orders a patient's stays for the multi-stay policies.
pub fn parse_outcomes<R: Read>(reader: R) -> Result<BTreeMap<String, Outcome>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let cols: Vec<&str> = header.iter().collect();
    let with_index = cols.len() == 5 && cols[4] == "icu_stay_index";
    if cols[..cols.len().min(4)] != OUTCOME_HEADER[..] || !(cols.len() == 4 || with_index) {
        return Err(Error::Schema(format!(
            "outcome header must be '{}[,icu_stay_index]', found '{}'",
            OUTCOME_HEADER.join(","),
            cols.join(",")
        )));
    }
    let mut out = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |what: &str| Error::Schema(format!("outcome line {line}: bad {what}"));
        let age: f64 = record[1].parse().map_err(|_| bad("age_years"))?;
        let died = parse_flag(&record[2]).ok_or_else(|| bad("died_in_hospital"))?;
        let hospice = parse_flag(&record[3]).ok_or_else(|| bad("hospice_death_within_7d"))?;
        let icu_stay_index = if with_index {
            Some(record[4].parse().map_err(|_| bad("icu_stay_index"))?)
        } else {
            None
        };
        out.insert(
            record[0].to_string(),
            Outcome {
                age_years: age,
                died_in_hospital: died,
                hospice_death_within_7d: hospice,
                icu_stay_index,
            },
        );
    }
    Ok(out)
}

pub fn load_outcomes(path: &Path) -> Result<BTreeMap<String, Outcome>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_outcomes(file)
}

/// Writes outcomes with the `icu_stay_index` column when every record has
/// one.
pub fn write_outcomes(path: &Path, outcomes: &BTreeMap<String, Outcome>) -> Result<()> {
    let with_index = outcomes.values().all(|o| o.icu_stay_index.is_some());
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let mut header = OUTCOME_HEADER.join(",");
    if with_index {
        header.push_str(",icu_stay_index");
    }
    writeln!(w, "{header}").map_err(|e| Error::io(path, e))?;
    for (id, o) in outcomes {
        write!(
            w,
            "{id},{},{},{}",
            o.age_years, o.died_in_hospital as u8, o.hospice_death_within_7d as u8
        )
        .map_err(|e| Error::io(path, e))?;
        match o.icu_stay_index {
            Some(i) if with_index => writeln!(w, ",{i}"),
            _ => writeln!(w),
        }
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> ParsedEvents {
        parse_events_from_reader(text.as_bytes()).unwrap()
    }

    #[test]
    fn maps_fields_directly() {
        let p = parse("encounter_id,patient_id,minutes,variable,value\ne1,p1,60,gcs,15\n");
        assert!(p.rejections.is_empty());
        assert_eq!(
            p.events,
            vec![RawEvent {
                encounter_id: "e1".into(),
                patient_id: "p1".into(),
                minutes: 60,
                variable: EventVariable::Channel(Variable::Gcs),
                value: EventValue::Numeric(15.0),
            }]
        );
    }

    #[test]
    fn unparseable_value_is_rejected() {
        let p = parse("encounter_id,patient_id,minutes,variable,value\ne1,p1,60,gcs,abc\n");
        assert!(p.events.is_empty());
        assert_eq!(p.rejections.len(), 1);
        assert_eq!(p.rejections[0].reason, RejectReason::BadValue);
        assert_eq!(p.rejections[0].line, 2);
    }

    #[test]
    fn one_bad_row_of_three() {
        let p = parse(
            "encounter_id,patient_id,minutes,variable,value\n\
             e1,p1,0,map,80\n\
             e1,p1,30,lactate,2.0\n\
             e1,p1,45,o2_device,Nasal Cannula\n",
        );
        assert_eq!(p.events.len(), 2);
        assert_eq!(p.rejections.len(), 1);
        assert_eq!(p.rejections[0].reason, RejectReason::UnknownVariable);
        assert_eq!(p.rejections[0].line, 3);
        assert_eq!(p.events[1].value, EventValue::Device("nasal cannula".into()));
    }

    #[test]
    fn header_mismatch_is_fatal() {
        assert!(matches!(
            parse_events_from_reader("a,b,c,d,e\n".as_bytes()),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn missing_file_is_fatal() {
        assert!(matches!(
            parse_events(Path::new("/nonexistent/events.csv")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn short_row_and_fractional_minutes() {
        let p = parse("encounter_id,patient_id,minutes,variable,value\ne1,p1,60\ne1,p1,6.5,map,80\ne1,p1,5,map,inf\n");
        let reasons: Vec<_> = p.rejections.iter().map(|r| r.reason).collect();
        assert_eq!(
            reasons,
            vec![RejectReason::FieldCount, RejectReason::BadMinutes, RejectReason::NonFinite]
        );
    }

    fn ev(var: Variable, x: f64) -> RawEvent {
        RawEvent {
            encounter_id: "e".into(),
            patient_id: "p".into(),
            minutes: 0,
            variable: EventVariable::Channel(var),
            value: EventValue::Numeric(x),
        }
    }

    #[test]
    fn outlier_bounds_follow_interval_ends() {
        let specs = VariableSpecs::default();
        let cases = [
            (Variable::Gcs, 2.0, false),
            (Variable::Gcs, 3.0, true),
            (Variable::Platelets, 832.0, true),
            (Variable::Platelets, 0.0, false),
            (Variable::Bilirubin, 50.1, false),
            (Variable::Bilirubin, 50.0, true),
            (Variable::Map, 0.0, false),
            (Variable::Map, 300.0, true),
            (Variable::Fio2, 20.9, false),
            (Variable::Urine, 0.0, true),
        ];
        for (var, x, keep) in cases {
            let (kept, rej) = filter_outliers(vec![ev(var, x)], &specs);
            assert_eq!(kept.len() == 1, keep, "{var} {x}");
            assert_eq!(rej.len() == 1, !keep);
        }
    }

    #[test]
    fn outcomes_with_optional_stay_index() {
        let o = parse_outcomes(
            "encounter_id,age_years,died_in_hospital,hospice_death_within_7d\ne1,70,0,1\n".as_bytes(),
        )
        .unwrap();
        assert!(o["e1"].label());
        assert_eq!(o["e1"].icu_stay_index, None);
        let o = parse_outcomes(
            "encounter_id,age_years,died_in_hospital,hospice_death_within_7d,icu_stay_index\ne1,70,0,0,2\n"
                .as_bytes(),
        )
        .unwrap();
        assert!(!o["e1"].label());
        assert_eq!(o["e1"].icu_stay_index, Some(2));
        assert!(parse_outcomes("encounter_id,age\n".as_bytes()).is_err());
    }
}
