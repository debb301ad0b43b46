use serde::Serialize;

use super::window::{WindowAggregate, WINDOW_HOURS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SofaAssessment {
    pub hour: usize,
    pub cardio: u8,
    pub resp: u8,
    pub cns: u8,
    pub coag: u8,
    pub liver: u8,
    pub renal: u8,
    pub total: u8,
}

impl SofaAssessment {
    pub fn components(&self) -> [u8; 6] {
        [self.cardio, self.resp, self.cns, self.coag, self.liver, self.renal]
    }
}

pub fn cardio_score(a: &WindowAggregate) -> u8 {
    let (dop, dob, epi, nor) = (a.dopamine_max, a.dobutamine_max, a.epinephrine_max, a.norepinephrine_max);
    if dop > 15.0 || epi > 0.1 || nor > 0.1 {
        4
    } else if dop > 5.0 || (epi > 0.0 && epi <= 0.1) || (nor > 0.0 && nor <= 0.1) {
        3
    } else if (dop > 0.0 && dop <= 5.0) || dob > 0.0 {
        2
    } else if a.map_min < 70.0 {
        1
    } else {
        0
    }
}

pub fn resp_score(a: &WindowAggregate) -> u8 {
    let Some(pf) = a.pf_ratio_min else {
        return 0;
    };
    if pf < 100.0 && a.mv_any {
        4
    } else if pf < 200.0 && a.mv_any {
        3
    } else if pf < 300.0 {
        2
    } else if pf < 400.0 {
        1
    } else {
        0
    }
}

pub fn cns_score(a: &WindowAggregate) -> u8 {
    let gcs = a.gcs_min;
    if gcs < 6.0 {
        4
    } else if gcs < 10.0 {
        3
    } else if gcs < 13.0 {
        2
    } else if gcs < 15.0 {
        1
    } else {
        0
    }
}

pub fn coag_score(a: &WindowAggregate) -> u8 {
    let p = a.platelets_min;
    if p < 20.0 {
        4
    } else if p < 50.0 {
        3
    } else if p < 100.0 {
        2
    } else if p < 150.0 {
        1
    } else {
        0
    }
}

pub fn liver_score(a: &WindowAggregate) -> u8 {
    let b = a.bilirubin_max;
    if b > 12.0 {
        4
    } else if b >= 6.0 {
        3
    } else if b >= 2.0 {
        2
    } else if b >= 1.2 {
        1
    } else {
        0
    }
}

/// Urine criteria only apply over a full 24-hour window.
pub fn renal_score(a: &WindowAggregate) -> u8 {
    let c = a.creatinine_max;
    let full_day = a.window_hours == WINDOW_HOURS;
    if c > 5.0 || (full_day && a.urine_sum_ml < 200.0) {
        4
    } else if c >= 3.5 || (full_day && a.urine_sum_ml < 500.0) {
        3
    } else if c >= 2.0 {
        2
    } else if c >= 1.2 {
        1
    } else {
        0
    }
}

pub fn component_scores(a: &WindowAggregate) -> SofaAssessment {
    let mut s = SofaAssessment {
        hour: 0,
        cardio: cardio_score(a),
        resp: resp_score(a),
        cns: cns_score(a),
        coag: coag_score(a),
        liver: liver_score(a),
        renal: renal_score(a),
        total: 0,
    };
    s.total = s.components().iter().sum();
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn agg() -> WindowAggregate {
        WindowAggregate::normal()
    }

    #[test]
    fn normal_scores_zero() {
        assert_eq!(component_scores(&agg()).total, 0);
    }

    #[test]
    fn single_component_examples() {
        assert_eq!(cns_score(&WindowAggregate { gcs_min: 7.0, ..agg() }), 3);
        assert_eq!(coag_score(&WindowAggregate { platelets_min: 45.0, ..agg() }), 3);
        assert_eq!(cardio_score(&WindowAggregate { dopamine_max: 20.0, ..agg() }), 4);
        assert_eq!(renal_score(&WindowAggregate { creatinine_max: 6.0, ..agg() }), 4);
    }

    #[test]
    fn ventilation_gates_top_resp_scores() {
        let with_mv = WindowAggregate {
            pf_ratio_min: Some(150.0),
            mv_any: true,
            ..agg()
        };
        assert_eq!(resp_score(&with_mv), 3);
        let without = WindowAggregate {
            pf_ratio_min: Some(90.0),
            mv_any: false,
            ..agg()
        };
        assert_eq!(resp_score(&without), 2);
        assert_eq!(resp_score(&WindowAggregate { pf_ratio_min: None, ..agg() }), 0);
    }

    #[test]
    fn urine_needs_full_window() {
        let low = WindowAggregate {
            urine_sum_ml: 150.0,
            window_hours: 23,
            ..agg()
        };
        assert_eq!(renal_score(&low), 0);
        assert_eq!(renal_score(&WindowAggregate { window_hours: 24, ..low.clone() }), 4);
        assert_eq!(
            renal_score(&WindowAggregate {
                window_hours: 24,
                urine_sum_ml: 450.0,
                ..low
            }),
            3
        );
    }

    #[test]
    fn total_is_sum() {
        let a = WindowAggregate {
            gcs_min: 3.0,
            platelets_min: 10.0,
            bilirubin_max: 13.0,
            creatinine_max: 6.0,
            epinephrine_max: 0.5,
            pf_ratio_min: Some(50.0),
            mv_any: true,
            ..agg()
        };
        assert_eq!(component_scores(&a).total, 24);
    }
}
