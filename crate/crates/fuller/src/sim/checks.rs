//! Post-hoc checks on simulated extremals.

use serde::{Deserialize, Serialize};

use crate::sim::simulate::{ArcKind, SimResult};
use crate::sim::system::{ExtremalSystem, Scenario};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantTolerances {
    /// Allowed `|h1|` at switch times and wrong-signed `s h1` on bang arcs.
    pub switch_tol: f64,
    /// Allowed `|h1|`, `|h01|` and `|h001 + u h101|` on singular arcs.
    pub arc_tol: f64,
}

impl Default for InvariantTolerances {
    fn default() -> Self {
        InvariantTolerances {
            switch_tol: 1e-9,
            arc_tol: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    EmptyArc,
    Gap,
    BangControl,
    BangSign,
    SwitchNotOnSurface,
    SingularDrift,
    SingularIdentity,
    Legendre,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub arc: usize,
    pub t: f64,
    pub kind: ViolationKind,
    pub value: f64,
}

/// Check per-arc invariants on stored samples.
///
/// Bang arcs need `u = s` and no sample with `s h1 < -switch_tol`; arcs must
/// tile the run; `|h1| <= switch_tol` at each junction; singular arcs keep
/// `|h1|`, `|h01|` and `|h001 + u h101|` within `arc_tol` and `h101 >= -arc_tol`.
pub fn check_arc_invariants(
    result: &SimResult,
    scenario: &Scenario,
    tol: &InvariantTolerances,
) -> Vec<Violation> {
    let sys = ExtremalSystem::<f64>::new(scenario);
    let mut out = Vec::new();
    let mut push = |arc, t, kind, value| {
        out.push(Violation {
            arc,
            t,
            kind,
            value,
        })
    };
    for (k, arc) in result.arcs.iter().enumerate() {
        if arc.duration <= 0.0 {
            push(k, arc.t_start, ViolationKind::EmptyArc, arc.duration);
        }
        if let Some(next) = result.arcs.get(k + 1) {
            if next.t_start != arc.t_end {
                push(k, arc.t_end, ViolationKind::Gap, next.t_start - arc.t_end);
            }
            if let Some(last) = arc.samples.last() {
                let h1 = sys.h1(&last.packed());
                if h1.abs() > tol.switch_tol {
                    push(k, last.t, ViolationKind::SwitchNotOnSurface, h1);
                }
            }
        }
        for (s, &u) in arc.samples.iter().zip(&arc.controls) {
            let y = s.packed();
            let sw = sys.switching(&y);
            match arc.kind.sign() {
                Some(sign) => {
                    if u != sign as f64 {
                        push(k, s.t, ViolationKind::BangControl, u);
                    }
                    let g = sign as f64 * sw.h1;
                    if g < -tol.switch_tol {
                        push(k, s.t, ViolationKind::BangSign, g);
                    }
                }
                None => {
                    let drift = sw.h1.abs().max(sw.h01.abs());
                    if drift > tol.arc_tol {
                        push(k, s.t, ViolationKind::SingularDrift, drift);
                    }
                    let r = sw.h001 + u * sw.h101;
                    if r.abs() > tol.arc_tol {
                        push(k, s.t, ViolationKind::SingularIdentity, r);
                    }
                    if sw.h101 < -tol.arc_tol {
                        push(k, s.t, ViolationKind::Legendre, sw.h101);
                    }
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollinearityEntry {
    pub t: f64,
    pub q: Vec<f64>,
    /// `|f0(q) ^ f1(q)|`
    pub wedge: f64,
    /// Time-averaged control over `[t - window, t]`.
    pub u_bar: f64,
    /// `|f0(q) + u_bar f1(q)|`
    pub residual: f64,
}

fn wedge_norm(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let w = a[i] * b[j] - a[j] * b[i];
            s += w * w;
        }
    }
    s.sqrt()
}

/// Samples where `f0(q)` and `f1(q)` are dependent to within `tol`.
///
/// The control is treated as piecewise constant between samples, so the
/// window average is exact for bang-bang runs sampled at their switches.
pub fn collinearity_report(
    result: &SimResult,
    scenario: &Scenario,
    tol: f64,
    window: f64,
) -> Vec<CollinearityEntry> {
    let mut pts: Vec<(f64, &[f64], f64)> = Vec::new();
    for arc in &result.arcs {
        for (s, &u) in arc.samples.iter().zip(&arc.controls) {
            pts.push((s.t, &s.q, u));
        }
    }
    // integral of u from the first sample, u piecewise constant between samples
    let mut cum = vec![0.0; pts.len()];
    for k in 1..pts.len() {
        cum[k] = cum[k - 1] + pts[k - 1].2 * (pts[k].0 - pts[k - 1].0);
    }
    let integral_to = |t: f64| -> f64 {
        let j = pts.partition_point(|p| p.0 <= t);
        if j == 0 {
            return 0.0;
        }
        cum[j - 1] + pts[j - 1].2 * (t - pts[j - 1].0)
    };
    let average = |k: usize| -> f64 {
        let t = pts[k].0;
        let lo = (t - window).max(pts[0].0);
        if t > lo {
            (cum[k] - integral_to(lo)) / (t - lo)
        } else {
            pts[k].2
        }
    };
    let sys = ExtremalSystem::<f64>::new(scenario);
    let mut out = Vec::new();
    for (k, &(t, q, _)) in pts.iter().enumerate() {
        let a = sys.f0_at(q);
        let b = sys.f1_at(q);
        let w = wedge_norm(&a, &b);
        if w > tol {
            continue;
        }
        let u_bar = average(k);
        let residual = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x + u_bar * y).powi(2))
            .sum::<f64>()
            .sqrt();
        out.push(CollinearityEntry {
            t,
            q: q.to_vec(),
            wedge: w,
            u_bar,
            residual,
        });
    }
    out
}

/// Arc kinds in order, for compact assertions and reports.
pub fn arc_pattern(result: &SimResult) -> Vec<ArcKind> {
    result.arcs.iter().map(|a| a.kind).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{rat, PolyVectorField, Polynomial};
    use crate::sim::simulate::{simulate, ArcSegment, Diagnostics, SimOptions, TerminationReason};
    use crate::sim::system::ExtremalState;

    fn double_integrator() -> Scenario {
        let f0 = PolyVectorField::new(vec![Polynomial::var(2, 1), Polynomial::zero(2)]).unwrap();
        Scenario::new("di", f0, PolyVectorField::basis(2, 1)).unwrap()
    }

    fn di_run() -> SimResult {
        let init = ExtremalState::new(0.0, vec![0.0, 0.0], vec![-1.0, -0.5]);
        simulate(&double_integrator(), &init, 1.0, &SimOptions::default()).unwrap()
    }

    #[test]
    fn clean_run_has_no_violations() {
        let r = di_run();
        assert!(check_arc_invariants(&r, &double_integrator(), &InvariantTolerances::default()).is_empty());
        assert_eq!(arc_pattern(&r), vec![ArcKind::BangMinus, ArcKind::BangPlus]);
    }

    #[test]
    fn corrupted_control_is_reported() {
        let mut r = di_run();
        r.arcs[0].controls[1] = 0.5;
        let v = check_arc_invariants(&r, &double_integrator(), &InvariantTolerances::default());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::BangControl);
    }

    #[test]
    fn double_integrator_avoids_collinearity_off_the_axis() {
        // f0 ^ f1 = x2, which is nonzero after t = 0 for this start
        let init = ExtremalState::new(0.0, vec![0.0, 1.0], vec![0.0, 1.0]);
        let r = simulate(&double_integrator(), &init, 1.0, &SimOptions::default()).unwrap();
        assert!(collinearity_report(&r, &double_integrator(), 1e-3, 0.1).is_empty());
    }

    /// Bang-bang samples reaching `q* = (0, 0)` at `t = 1` for
    /// `f0 = (x1, -1/2)`, `f1 = (0, 1)`. The control dithers with a fixed
    /// fine period and duty cycle `3/4`, so window averages of `u` tend to
    /// `a = 1/2`, the multiplier with `f0(q*) + a f1(q*) = 0`.
    fn chattering_to_equilibrium() -> (Scenario, SimResult) {
        let f0 = PolyVectorField::new(vec![Polynomial::var(2, 0), Polynomial::constant(2, rat(-1, 2))])
            .unwrap();
        let sc = Scenario::new("eq", f0, PolyVectorField::basis(2, 1)).unwrap();
        let state = |t: f64| ExtremalState::new(t, vec![1.0 - t, 0.0], vec![0.0, 1.0]);
        let periods = 50_000;
        let period = 1.0 / periods as f64;
        let mut arcs = Vec::new();
        for k in 0..periods {
            let t0 = k as f64 * period;
            let cuts = [t0, t0 + 0.75 * period, t0 + period];
            for (i, sign) in [1i8, -1].into_iter().enumerate() {
                let (a, b) = (cuts[i], cuts[i + 1]);
                arcs.push(ArcSegment {
                    kind: ArcKind::bang(sign),
                    t_start: a,
                    t_end: b,
                    duration: b - a,
                    samples: vec![state(a), state(b)],
                    controls: vec![sign as f64; 2],
                });
            }
        }
        let r = SimResult {
            scenario: "eq".into(),
            precision: "double".into(),
            t_final: 1.0,
            arcs,
            switch_times: vec![],
            switch_gaps: vec![],
            resolution: 1e-13,
            event_log: vec![],
            diagnostics: Diagnostics {
                max_hamiltonian_drift: 0.0,
                renormalizations: 0,
                termination: TerminationReason::FinalTime,
                steps: 0,
                rejected_steps: 0,
            },
            final_state: state(1.0),
        };
        (sc, r)
    }

    #[test]
    fn residual_shrinks_near_the_equilibrium() {
        let (sc, r) = chattering_to_equilibrium();
        let worst = |tol: f64| {
            collinearity_report(&r, &sc, tol, tol)
                .iter()
                .map(|e| e.residual)
                .fold(0.0, f64::max)
        };
        let (a, b, c) = (worst(1e-1), worst(1e-2), worst(1e-3));
        assert!(a > 0.0 && b < a && c < b, "{a} {b} {c}");
        assert!(c < 2e-2);
    }

    #[test]
    fn shrinking_tolerance_never_adds_entries() {
        let (sc, r) = chattering_to_equilibrium();
        let mut prev: Option<std::collections::BTreeSet<u64>> = None;
        for tol in [1.0, 1e-1, 1e-2, 1e-3, 1e-5] {
            let ts: std::collections::BTreeSet<u64> = collinearity_report(&r, &sc, tol, 0.05)
                .iter()
                .map(|e| e.t.to_bits())
                .collect();
            if let Some(p) = &prev {
                assert!(ts.is_subset(p));
            }
            prev = Some(ts);
        }
    }
}
