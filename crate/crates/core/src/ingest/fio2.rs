//! FiO₂ imputation from oxygen delivery device and flow rate.

use std::collections::BTreeMap;

use super::events::{EventValue, EventVariable, RawEvent};
use crate::variables::Variable;

pub const ROOM_AIR_FIO2: f64 = 21.0;
pub const MAX_FIO2: f64 = 100.0;

/// `base + min(flow - offset, excess_cap) * slope`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowFormula {
    pub base: f64,
    pub offset: f64,
    pub slope: f64,
    pub excess_cap: Option<f64>,
}

impl FlowFormula {
    const fn linear(base: f64, offset: f64, slope: f64) -> Self {
        FlowFormula {
            base,
            offset,
            slope,
            excess_cap: None,
        }
    }

    pub fn eval(&self, flow: f64) -> f64 {
        let mut excess = flow - self.offset;
        if let Some(cap) = self.excess_cap {
            excess = excess.min(cap);
        }
        self.base + excess * self.slope
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceRule {
    pub name: &'static str,
    pub default_fio2: Option<f64>,
    pub flow_min: f64,
    pub flow_max: Option<f64>,
    pub formula: Option<FlowFormula>,
    pub max_fio2: Option<f64>,
}

const fn fixed(name: &'static str, default: f64) -> DeviceRule {
    DeviceRule {
        name,
        default_fio2: Some(default),
        flow_min: 0.0,
        flow_max: None,
        formula: None,
        max_fio2: None,
    }
}

pub const DEVICE_RULES: [DeviceRule; 20] = [
    DeviceRule {
        name: "aerosol mask",
        default_fio2: Some(35.0),
        flow_min: 0.0,
        flow_max: None,
        formula: Some(FlowFormula::linear(21.0, 0.0, 4.0)),
        max_fio2: Some(60.0),
    },
    DeviceRule {
        name: "nasal cannula",
        default_fio2: None,
        flow_min: 0.0,
        flow_max: None,
        formula: Some(FlowFormula::linear(21.0, 0.0, 4.0)),
        max_fio2: Some(40.0),
    },
    DeviceRule {
        name: "high flow nasal cannula",
        default_fio2: Some(50.0),
        flow_min: 6.0,
        flow_max: Some(15.0),
        formula: Some(FlowFormula::linear(48.0, 6.0, 2.0)),
        max_fio2: Some(100.0),
    },
    DeviceRule {
        name: "simple mask",
        default_fio2: None,
        flow_min: 0.0,
        flow_max: Some(19.0),
        formula: Some(FlowFormula::linear(21.0, 0.0, 4.0)),
        max_fio2: Some(60.0),
    },
    DeviceRule {
        name: "non-rebreather mask",
        default_fio2: Some(60.0),
        flow_min: 8.0,
        flow_max: None,
        formula: Some(FlowFormula {
            base: 80.0,
            offset: 10.0,
            slope: 10.0,
            excess_cap: Some(2.0),
        }),
        max_fio2: Some(100.0),
    },
    DeviceRule {
        name: "venturi mask",
        default_fio2: Some(35.0),
        flow_min: 4.0,
        flow_max: Some(8.0),
        formula: Some(FlowFormula::linear(26.0, 4.0, 2.5)),
        max_fio2: Some(55.0),
    },
    fixed("trach mask", 30.0),
    fixed("cpap", 40.0),
    fixed("bipap", 40.0),
    fixed("tracheostomy", 40.0),
    fixed("ventilator", 40.0),
    fixed("bag valve mask", 100.0),
    fixed("t-piece", 40.0),
    fixed("transtracheal catheter", 40.0),
    fixed("blow-by", 25.0),
    fixed("partial rebreather mask", 35.0),
    fixed("face tent", 25.0),
    fixed("oxyimiser", 40.0),
    fixed("oscillator", 80.0),
    fixed("oxyhood", 35.0),
];

/// Device names meaning "no supplemental oxygen".
pub const ROOM_AIR_NAMES: [&str; 3] = ["room air", "none", "ra"];

#[derive(Debug, Clone, PartialEq)]
pub enum OxygenDevice {
    Known(&'static DeviceRule),
    Unknown(String),
}

impl OxygenDevice {
    /// `None` for room air.
    pub fn parse(name: &str) -> Option<OxygenDevice> {
        let name = name.trim().to_lowercase();
        if ROOM_AIR_NAMES.contains(&name.as_str()) {
            return None;
        }
        Some(
            DEVICE_RULES
                .iter()
                .find(|r| r.name == name)
                .map_or(OxygenDevice::Unknown(name), OxygenDevice::Known),
        )
    }
}

pub fn device_rule(name: &str) -> Option<&'static DeviceRule> {
    DEVICE_RULES.iter().find(|r| r.name == name)
}

fn clamp_fio2(v: f64) -> f64 {
    v.clamp(ROOM_AIR_FIO2, MAX_FIO2)
}

/// FiO₂ percent for one respiratory observation, or `None` when nothing can
/// be derived. A directly charted FiO₂ wins; otherwise the device table is
/// applied. No device and no flow is room air.
pub fn impute_fio2(device: Option<&OxygenDevice>, flow_lpm: Option<f64>, direct_fio2: Option<f64>) -> Option<f64> {
    if let Some(direct) = direct_fio2 {
        return Some(clamp_fio2(direct));
    }
    let flow = flow_lpm.filter(|f| f.is_finite());
    match (device, flow) {
        (None, None) => Some(ROOM_AIR_FIO2),
        (None, Some(_)) => None,
        (Some(OxygenDevice::Unknown(_)), _) => None,
        (Some(OxygenDevice::Known(rule)), None) => rule.default_fio2.map(clamp_fio2),
        (Some(OxygenDevice::Known(rule)), Some(x)) => match rule.formula {
            Some(formula) => {
                let mut x = x.max(rule.flow_min);
                if let Some(hi) = rule.flow_max {
                    x = x.min(hi);
                }
                let mut v = formula.eval(x);
                if let Some(cap) = rule.max_fio2 {
                    v = v.min(cap);
                }
                Some(clamp_fio2(v))
            }
            None => rule.default_fio2.map(clamp_fio2),
        },
    }
}

/// Replaces device and flow events with imputed FiO₂ events.
///
/// Per encounter, each minute carrying a device or flow event is one
/// observation. The device in force is the latest device event at or before
/// that minute. Minutes that already carry a charted FiO₂ are left alone.
pub fn apply_fio2_imputation(events: Vec<RawEvent>) -> Vec<RawEvent> {
    let mut by_encounter: BTreeMap<String, Vec<RawEvent>> = BTreeMap::new();
    for ev in events {
        by_encounter.entry(ev.encounter_id.clone()).or_default().push(ev);
    }

    let mut out = Vec::new();
    for (_, mut evs) in by_encounter {
        evs.sort_by_key(|e| e.minutes);
        let mut current_device: Option<OxygenDevice> = None;
        let mut i = 0;
        while i < evs.len() {
            let minute = evs[i].minutes;
            let end = i + evs[i..].iter().take_while(|e| e.minutes == minute).count();
            let group = &evs[i..end];

            let mut flow = None;
            let mut touched = false;
            let mut has_direct = false;
            for e in group {
                match (&e.variable, &e.value) {
                    (EventVariable::O2Device, EventValue::Device(name)) => {
                        current_device = OxygenDevice::parse(name);
                        touched = true;
                    }
                    (EventVariable::O2FlowLpm, EventValue::Numeric(x)) => {
                        flow = Some(*x);
                        touched = true;
                    }
                    (EventVariable::Channel(Variable::Fio2), _) => has_direct = true,
                    _ => {}
                }
            }
            for e in group {
                if matches!(e.variable, EventVariable::Channel(_)) {
                    out.push(e.clone());
                }
            }
            if touched && !has_direct {
                if let Some(v) = impute_fio2(current_device.as_ref(), flow, None) {
                    out.push(RawEvent {
                        encounter_id: group[0].encounter_id.clone(),
                        patient_id: group[0].patient_id.clone(),
                        minutes: minute,
                        variable: EventVariable::Channel(Variable::Fio2),
                        value: EventValue::Numeric(v),
                    });
                }
            }
            i = end;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dev(name: &str) -> Option<OxygenDevice> {
        OxygenDevice::parse(name)
    }

    #[test]
    fn table_examples() {
        assert_eq!(impute_fio2(dev("nasal cannula").as_ref(), Some(2.0), None), Some(29.0));
        assert_eq!(impute_fio2(dev("nasal cannula").as_ref(), Some(10.0), None), Some(40.0));
        assert_eq!(impute_fio2(dev("non-rebreather mask").as_ref(), Some(15.0), None), Some(100.0));
        assert_eq!(impute_fio2(dev("high flow nasal cannula").as_ref(), Some(4.0), None), Some(48.0));
        assert_eq!(impute_fio2(dev("trach mask").as_ref(), None, None), Some(30.0));
    }

    #[test]
    fn direct_value_wins_and_is_clamped() {
        assert_eq!(impute_fio2(dev("nasal cannula").as_ref(), Some(2.0), Some(55.0)), Some(55.0));
        assert_eq!(impute_fio2(None, None, Some(15.0)), Some(21.0));
        assert_eq!(impute_fio2(None, None, Some(120.0)), Some(100.0));
    }

    #[test]
    fn room_air_and_unknown() {
        assert_eq!(dev("Room Air"), None);
        assert_eq!(impute_fio2(None, None, None), Some(21.0));
        assert_eq!(impute_fio2(dev("helmet").as_ref(), Some(5.0), None), None);
        assert_eq!(impute_fio2(dev("nasal cannula").as_ref(), None, None), None);
        assert_eq!(impute_fio2(None, Some(3.0), None), None);
    }

    #[test]
    fn flowless_device_ignores_flow() {
        assert_eq!(impute_fio2(dev("cpap").as_ref(), Some(12.0), None), Some(40.0));
    }

    fn raw(minutes: i64, variable: EventVariable, value: EventValue) -> RawEvent {
        RawEvent {
            encounter_id: "e".into(),
            patient_id: "p".into(),
            minutes,
            variable,
            value,
        }
    }

    #[test]
    fn pipeline_pairs_device_with_later_flows() {
        let evs = vec![
            raw(0, EventVariable::O2Device, EventValue::Device("nasal cannula".into())),
            raw(0, EventVariable::O2FlowLpm, EventValue::Numeric(2.0)),
            raw(60, EventVariable::O2FlowLpm, EventValue::Numeric(4.0)),
            raw(120, EventVariable::O2FlowLpm, EventValue::Numeric(3.0)),
            raw(120, EventVariable::Channel(Variable::Fio2), EventValue::Numeric(50.0)),
            raw(180, EventVariable::O2Device, EventValue::Device("room air".into())),
            raw(30, EventVariable::Channel(Variable::Map), EventValue::Numeric(70.0)),
        ];
        let out = apply_fio2_imputation(evs);
        let fio2: Vec<(i64, f64)> = out
            .iter()
            .filter(|e| e.variable == EventVariable::Channel(Variable::Fio2))
            .map(|e| (e.minutes, e.value.as_f64().unwrap()))
            .collect();
        assert_eq!(fio2, vec![(0, 29.0), (60, 37.0), (120, 50.0), (180, 21.0)]);
        assert_eq!(out.len(), 5);
    }
}
