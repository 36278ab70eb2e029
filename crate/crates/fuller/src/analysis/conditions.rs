//! Switching-function conditions at estimated accumulation points.

use serde::{Deserialize, Serialize};

use crate::analysis::order::OrderReport;
use crate::sim::{ExtremalState, ExtremalSystem, Scenario, SimResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    H1,
    H01,
    /// `min(|h+01|, |h-01|)`
    HPlusMinus01,
    H001,
    H101,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionViolation {
    /// Accumulation point being checked.
    pub t_star: f64,
    /// Time of the stored state used for it.
    pub t_state: f64,
    pub condition: Condition,
    pub value: f64,
    pub bound: f64,
}

/// Stored state closest to `t`; among equal distances the latest wins, so
/// the closing sample of a chattering run is preferred.
fn nearest_state(result: &SimResult, t: f64) -> Option<&ExtremalState<f64>> {
    let mut best: Option<(&ExtremalState<f64>, f64)> = None;
    let all = result
        .arcs
        .iter()
        .flat_map(|a| a.samples.iter())
        .chain(std::iter::once(&result.final_state));
    for s in all {
        let d = (s.t - t).abs();
        if best.map_or(true, |(_, bd)| d <= bd) {
            best = Some((s, d));
        }
    }
    best.map(|(s, _)| s)
}

/// Check that `h1`, `h01` and one of `h+01`, `h-01` vanish at every
/// accumulation point of `report`, relative to `tol` times the local
/// magnitude of the state and of `lambda (|f0| + |f1|)`.
///
/// Limits of accumulation points (level 2 and above) sit inside the switch
/// set on both scales, and there `h001` and `h101` must vanish as well.
pub fn check_accumulation_conditions(
    result: &SimResult,
    report: &OrderReport,
    scenario: &Scenario,
    tol: f64,
) -> Vec<ConditionViolation> {
    let sys = ExtremalSystem::<f64>::new(scenario);
    let mut out = Vec::new();
    for acc in &report.accumulation_points {
        let Some(state) = nearest_state(result, acc.t) else {
            continue;
        };
        let y = state.packed();
        let sw = sys.switching(&y);
        let bound = tol * sys.h_scale(&y);
        let mut checks = vec![
            (Condition::H1, sw.h1.abs()),
            (Condition::H01, sw.h01.abs()),
            (
                Condition::HPlusMinus01,
                sw.h_plus01().abs().min(sw.h_minus01().abs()),
            ),
        ];
        if acc.level >= 2 {
            checks.push((Condition::H001, sw.h001.abs()));
            checks.push((Condition::H101, sw.h101.abs()));
        }
        for (condition, value) in checks {
            if !(value <= bound) {
                out.push(ConditionViolation {
                    t_star: acc.t,
                    t_state: state.t,
                    condition,
                    value,
                    bound,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::order::{fuller_order, AccumulationPoint, Epsilon, OrderOptions, SwitchSet};
    use crate::algebra::{PolyVectorField, Polynomial};
    use crate::sim::{simulate, SimOptions};

    fn di() -> (Scenario, SimResult) {
        let f0 = PolyVectorField::new(vec![Polynomial::var(2, 1), Polynomial::zero(2)]).unwrap();
        let sc = Scenario::new("di", f0, PolyVectorField::basis(2, 1)).unwrap();
        let init = ExtremalState::new(0.0, vec![0.0, 0.0], vec![-1.0, -0.5]);
        let r = simulate(&sc, &init, 1.0, &SimOptions::default()).unwrap();
        (sc, r)
    }

    #[test]
    fn order_zero_report_is_vacuous() {
        let (sc, r) = di();
        let set = SwitchSet::from_result(&r).unwrap();
        let rep = fuller_order(&set, Epsilon::Fixed(1e-3), &OrderOptions::default()).unwrap();
        assert_eq!(rep.estimated_order, 0);
        assert!(check_accumulation_conditions(&r, &rep, &sc, 1e-4).is_empty());
    }

    #[test]
    fn mid_arc_point_is_flagged() {
        let (sc, r) = di();
        let rep = OrderReport {
            layers: vec![],
            estimated_order: 1,
            accumulation_points: vec![AccumulationPoint {
                t: 0.25,
                level: 1,
                cluster_size: 2,
            }],
            epsilon_used: 1e-3,
            level_growth: 16.0,
        };
        let v = check_accumulation_conditions(&r, &rep, &sc, 1e-4);
        assert!(v.iter().any(|v| v.condition == Condition::H1));
    }
}
