//! Forward simulation of extremals with switch location.
//!
//! Bang arcs run with `u = s` until `s h1` turns negative inside a step; the
//! crossing is bisected on the dense output and the switch is committed at the
//! first point past the root. A crossing with `|h01| <= eps_h01` is probed for
//! singular entry instead. Singular arcs run with the feedback
//! `u = -h001 / h101` and end when the feedback saturates, when `h1` or `h01`
//! drift past `arc_tol`, or when `h101` degenerates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::sim::dopri::{Dense, Dopri5};
use crate::sim::system::{norm, ExtremalState, ExtremalSystem, Scenario, Switching};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimOptions {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    pub max_step: f64,
    /// Width below which a bracketed switch is considered located.
    pub time_tol: f64,
    /// Bisection also continues until `|h1| <= refine_tol` at the switch.
    pub refine_tol: f64,
    pub eps_h1: f64,
    pub eps_h01: f64,
    pub eps_h101: f64,
    /// Allowed `|h1|`, `|h01|` on a singular arc.
    pub arc_tol: f64,
    pub max_events: usize,
    pub accumulation_window: usize,
    pub accumulation_ratio: f64,
    pub max_steps: usize,
    pub renormalize: bool,
    /// Dense-output samples per step used to detect sign changes.
    pub scan_points: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            rtol: 1e-10,
            atol: 1e-10,
            initial_step: 1e-3,
            max_step: 0.1,
            time_tol: 1e-13,
            refine_tol: 1e-10,
            eps_h1: 1e-8,
            eps_h01: 1e-8,
            eps_h101: 1e-6,
            arc_tol: 1e-6,
            max_events: 10_000,
            accumulation_window: 10,
            accumulation_ratio: 0.9,
            max_steps: 2_000_000,
            renormalize: true,
            scan_points: 8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcKind {
    BangPlus,
    BangMinus,
    Singular,
}

impl ArcKind {
    pub fn bang(sign: i8) -> ArcKind {
        if sign >= 0 {
            ArcKind::BangPlus
        } else {
            ArcKind::BangMinus
        }
    }

    pub fn sign(self) -> Option<i8> {
        match self {
            ArcKind::BangPlus => Some(1),
            ArcKind::BangMinus => Some(-1),
            ArcKind::Singular => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ArcKind::BangPlus => "bang(+1)",
            ArcKind::BangMinus => "bang(-1)",
            ArcKind::Singular => "singular",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcSegment {
    pub kind: ArcKind,
    pub t_start: f64,
    pub t_end: f64,
    /// `t_end - t_start` evaluated in the working precision.
    pub duration: f64,
    pub samples: Vec<ExtremalState<f64>>,
    pub controls: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminationReason {
    FinalTime,
    MaxEvents,
    Accumulation,
    DegenerateSingular,
    CostateVanished,
    StepUnderflow,
    StepLimit,
}

impl TerminationReason {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminationReason::FinalTime => "final-time",
            TerminationReason::MaxEvents => "max-events",
            TerminationReason::Accumulation => "accumulation",
            TerminationReason::DegenerateSingular => "degenerate-singular",
            TerminationReason::CostateVanished => "costate-vanished",
            TerminationReason::StepUnderflow => "step-underflow",
            TerminationReason::StepLimit => "step-limit",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExitCause {
    Saturation,
    Drift,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum EventKind {
    Switch { from: i8, to: i8, transversal: bool },
    SingularEntry,
    SingularExit { to: i8, cause: ExitCause },
    Renormalization { factor: f64 },
    Termination { reason: TerminationReason },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub t: f64,
    #[serde(flatten)]
    pub kind: EventKind,
    pub state: ExtremalState<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Largest `|H(t) - H(0)|` of the maximized Hamiltonian, measured in the
    /// normalization of the initial costate.
    pub max_hamiltonian_drift: f64,
    pub renormalizations: usize,
    pub termination: TerminationReason,
    pub steps: usize,
    pub rejected_steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub scenario: String,
    pub precision: String,
    pub t_final: f64,
    pub arcs: Vec<ArcSegment>,
    /// Shared endpoints of consecutive arcs. When the run stops on a switch
    /// (event cap or accumulation) that switch closes the last arc and is
    /// included as the final entry.
    pub switch_times: Vec<f64>,
    /// `switch_times[k+1] - switch_times[k]` in the working precision.
    pub switch_gaps: Vec<f64>,
    /// Smallest time separation the run resolves (the switch location width).
    pub resolution: f64,
    pub event_log: Vec<SimEvent>,
    pub diagnostics: Diagnostics,
    pub final_state: ExtremalState<f64>,
}

impl SimResult {
    pub fn termination(&self) -> TerminationReason {
        self.diagnostics.termination
    }

    /// Number of bang-to-bang switches.
    pub fn switch_count(&self) -> usize {
        self.switch_times.len()
    }

    /// Rows `t, q.., lambda.., u, h1, h01` for every stored sample.
    pub fn trajectory_csv(&self, scenario: &Scenario) -> String {
        let sys = ExtremalSystem::<f64>::new(scenario);
        let n = scenario.dim();
        let mut out = String::from("t");
        for i in 1..=n {
            out.push_str(&format!(",q{i}"));
        }
        for i in 1..=n {
            out.push_str(&format!(",lambda{i}"));
        }
        out.push_str(",u,h1,h01\n");
        for arc in &self.arcs {
            for (s, u) in arc.samples.iter().zip(&arc.controls) {
                let y = s.packed();
                let sw = sys.switching(&y);
                let mut row = vec![s.t];
                row.extend(&y);
                row.extend([*u, sw.h1, sw.h01]);
                let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Located<T> {
    /// Last point on the starting side of the root.
    pub before: T,
    /// First point past the root; the reported switch time.
    pub after: T,
    pub iterations: usize,
}

const MAX_BISECTIONS: usize = 4096;

/// Bisect `[lo, hi]` where `past(lo)` is false and `past(hi)` is true.
fn bisect<T: Real>(
    mut past: impl FnMut(&T) -> bool,
    mut settled: impl FnMut(&T) -> bool,
    mut lo: T,
    mut hi: T,
    time_tol: &T,
) -> Located<T> {
    let two = T::from_i64(2);
    let mut iterations = 0;
    while iterations < MAX_BISECTIONS {
        let wide = hi.clone() - lo.clone() > *time_tol;
        if !wide && settled(&hi) {
            break;
        }
        let mid = (lo.clone() + hi.clone()) / two.clone();
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        if past(&mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Located {
        before: lo,
        after: hi,
        iterations,
    }
}

/// Locate a root of `g` in `[ta, tb]` by bisection.
///
/// Stops once the bracket is narrower than `time_tol` and `|g| <= refine_tol`
/// at the reported point, or when the bracket can no longer be split.
pub fn locate_switch<T: Real>(
    mut g: impl FnMut(&T) -> T,
    ta: T,
    tb: T,
    time_tol: &T,
    refine_tol: f64,
) -> Result<Located<T>> {
    let sa = g(&ta).signum();
    let sb = g(&tb).signum();
    if sa == sb || ta >= tb {
        return Err(Error::NoSignChange {
            ta: ta.to_f64(),
            tb: tb.to_f64(),
        });
    }
    if sa == 0 {
        return Ok(Located {
            before: ta.clone(),
            after: ta,
            iterations: 0,
        });
    }
    if sb == 0 {
        return Ok(Located {
            before: tb.clone(),
            after: tb,
            iterations: 0,
        });
    }
    let tol = T::from_f64(refine_tol);
    let g = std::cell::RefCell::new(g);
    Ok(bisect(
        |t| g.borrow_mut()(t).signum() != sa,
        |t| g.borrow_mut()(t).abs() <= tol,
        ta,
        tb,
        time_tol,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Bang(i8),
    Singular,
}

impl Mode {
    fn kind(self) -> ArcKind {
        match self {
            Mode::Bang(s) => ArcKind::bang(s),
            Mode::Singular => ArcKind::Singular,
        }
    }
}

/// Control used by [`propagate`].
#[derive(Clone, Debug, PartialEq)]
pub enum ControlLaw<T> {
    Constant(T),
    Singular,
}

fn singular_u<T: Real>(sw: &Switching<T>) -> T {
    if sw.h101 == T::zero() {
        return T::zero();
    }
    let u = -(sw.h001.clone() / sw.h101.clone());
    u.max(-T::one()).min(T::one())
}

fn control_value<T: Real>(sys: &ExtremalSystem<T>, mode: Mode, y: &[T]) -> T {
    match mode {
        Mode::Bang(s) => T::from_i64(s as i64),
        Mode::Singular => singular_u(&sys.switching(y)),
    }
}

/// Integrate under a fixed control law for `dt > 0`, with no event handling.
pub fn propagate<T: Real>(
    sys: &ExtremalSystem<T>,
    state: &ExtremalState<T>,
    law: &ControlLaw<T>,
    dt: &T,
    opts: &SimOptions,
) -> Result<ExtremalState<T>> {
    let rk = Dopri5::new(opts.rtol, opts.atol);
    let y0 = state.packed();
    let t1 = state.t.clone() + dt.clone();
    let y = match law {
        ControlLaw::Constant(u) => {
            let f = |y: &[T], dy: &mut [T]| sys.rhs(y, u, dy);
            rk.integrate(&f, &state.t, &y0, &t1, opts.initial_step)?
        }
        ControlLaw::Singular => {
            let f = |y: &[T], dy: &mut [T]| {
                let u = singular_u(&sys.switching(y));
                sys.rhs(y, &u, dy)
            };
            rk.integrate(&f, &state.t, &y0, &t1, opts.initial_step)?
        }
    };
    Ok(ExtremalState::from_packed(t1, &y))
}

enum Outcome<T> {
    /// Arc ends at `t` with state `y`; continue in `next`.
    Continue { t: T, y: Vec<T>, next: Mode, kind: EventKind },
    Stop { t: T, y: Vec<T>, reason: TerminationReason },
}

struct Run<'a, T: Real> {
    sys: &'a ExtremalSystem<T>,
    opts: &'a SimOptions,
    time_tol: T,
    t: T,
    y: Vec<T>,
    mode: Mode,
    arc_start: T,
    samples: Vec<ExtremalState<f64>>,
    controls: Vec<f64>,
    arcs: Vec<ArcSegment>,
    switches: Vec<T>,
    events: Vec<SimEvent>,
    event_count: usize,
    kappa: T,
    h_ref: T,
    max_drift: f64,
    renormalizations: usize,
    steps: usize,
    rejected: usize,
}

impl<'a, T: Real> Run<'a, T> {
    fn state(&self, t: &T, y: &[T]) -> ExtremalState<f64> {
        ExtremalState::from_packed(t.clone(), y).to_f64()
    }

    fn record_sample(&mut self) {
        let s = self.state(&self.t, &self.y);
        let u = control_value(self.sys, self.mode, &self.y).to_f64();
        self.samples.push(s);
        self.controls.push(u);
    }

    fn track_hamiltonian(&mut self, y: &[T]) {
        let h = self.sys.max_hamiltonian(y) / self.kappa.clone();
        let d = (h - self.h_ref.clone()).abs().to_f64();
        if d > self.max_drift {
            self.max_drift = d;
        }
    }

    fn close_arc(&mut self, t: &T, y: &[T]) {
        let kind = self.mode.kind();
        let s = self.state(t, y);
        if self.samples.last().map(|p| p.t) != Some(s.t) || self.samples.len() < 2 {
            self.samples.push(s);
            self.controls.push(control_value(self.sys, self.mode, y).to_f64());
        }
        let duration = (t.clone() - self.arc_start.clone()).to_f64();
        self.arcs.push(ArcSegment {
            kind,
            t_start: self.arc_start.to_f64(),
            t_end: t.to_f64(),
            duration,
            samples: std::mem::take(&mut self.samples),
            controls: std::mem::take(&mut self.controls),
        });
        self.arc_start = t.clone();
    }

    fn log(&mut self, t: &T, y: &[T], kind: EventKind) {
        let state = self.state(t, y);
        self.events.push(SimEvent {
            t: t.to_f64(),
            kind,
            state,
        });
    }

    /// Whether the most recent gaps shrink geometrically.
    fn accumulating(&self) -> bool {
        let w = self.opts.accumulation_window;
        if w == 0 || self.switches.len() < w + 2 {
            return false;
        }
        let n = self.switches.len();
        let gaps: Vec<T> = (n - w - 2..n - 1)
            .map(|k| self.switches[k + 1].clone() - self.switches[k].clone())
            .collect();
        let ratio = T::from_f64(self.opts.accumulation_ratio);
        gaps.windows(2)
            .all(|p| p[0] > T::zero() && p[1].clone() <= ratio.clone() * p[0].clone())
    }

    fn renormalize(&mut self) -> bool {
        if !self.sys.homogeneous() || !self.opts.renormalize {
            return false;
        }
        let n = self.sys.dim();
        let nrm = norm(&self.y[n..]);
        let half = T::frac(1, 2);
        if nrm >= half && nrm <= T::from_i64(2) {
            return false;
        }
        let c = T::one() / nrm;
        for v in &mut self.y[n..] {
            *v = v.clone() * c.clone();
        }
        self.kappa = self.kappa.clone() * c.clone();
        self.renormalizations += 1;
        let (t, y) = (self.t.clone(), self.y.clone());
        self.log(&t, &y, EventKind::Renormalization { factor: c.to_f64() });
        true
    }

    /// Probe for singular entry at a point on `{h1 = 0}`.
    fn singular_admissible(&self, sw: &Switching<T>) -> bool {
        let o = self.opts;
        if sw.h1.abs() > T::from_f64(o.eps_h1.max(o.arc_tol))
            || sw.h01.abs() > T::from_f64(o.eps_h01.max(o.arc_tol))
            || sw.h101.abs() <= T::from_f64(o.eps_h101)
        {
            return false;
        }
        let u = -(sw.h001.clone() / sw.h101.clone());
        u.abs() <= T::one()
    }

    fn scan_bang(&self, s: i8, dense: &Dense<T>) -> Option<Outcome<T>> {
        let sign = T::from_i64(s as i64);
        let g = |y: &[T]| sign.clone() * self.sys.h1(y);
        let m = self.opts.scan_points.max(1);
        let mut lo = T::zero();
        let mut hit = None;
        for k in 1..=m {
            let th = T::frac(k as i64, m as i64);
            if g(&dense.at_theta(&th)).is_negative() {
                hit = Some(th);
                break;
            }
            lo = th;
        }
        let hi = hit?;
        let at = |th: &T| dense.t0.clone() + th.clone() * dense.h.clone();
        let tol = T::from_f64(self.opts.refine_tol);
        let loc = bisect(
            |t| g(&dense.at(t)).is_negative(),
            |t| g(&dense.at(t)).abs() <= tol,
            at(&lo),
            at(&hi),
            &self.time_tol,
        );
        let t = loc.after;
        let y = dense.at(&t);
        let sw = self.sys.switching(&y);
        if sw.h01.abs() > T::from_f64(self.opts.eps_h01) {
            return Some(Outcome::Continue {
                t,
                y,
                next: Mode::Bang(-s),
                kind: EventKind::Switch {
                    from: s,
                    to: -s,
                    transversal: true,
                },
            });
        }
        if self.singular_admissible(&sw) {
            return Some(Outcome::Continue {
                t,
                y,
                next: Mode::Singular,
                kind: EventKind::SingularEntry,
            });
        }
        if sw.h101.abs() <= T::from_f64(self.opts.eps_h101) && sw.h01.abs() <= T::from_f64(self.opts.eps_h01) {
            return Some(Outcome::Stop {
                t,
                y,
                reason: TerminationReason::DegenerateSingular,
            });
        }
        Some(Outcome::Continue {
            t,
            y,
            next: Mode::Bang(-s),
            kind: EventKind::Switch {
                from: s,
                to: -s,
                transversal: false,
            },
        })
    }

    fn scan_singular(&self, dense: &Dense<T>) -> Option<Outcome<T>> {
        #[derive(PartialEq)]
        enum Bad {
            Degenerate,
            Saturated,
            Drift,
        }
        let o = self.opts;
        let e3 = T::from_f64(o.eps_h101);
        let tol = T::from_f64(o.arc_tol);
        let classify = |y: &[T]| -> Option<Bad> {
            let sw = self.sys.switching(y);
            if sw.h101.abs() <= e3 {
                return Some(Bad::Degenerate);
            }
            if (sw.h001.clone() / sw.h101.clone()).abs() > T::one() {
                return Some(Bad::Saturated);
            }
            if sw.h1.abs() > tol || sw.h01.abs() > tol {
                return Some(Bad::Drift);
            }
            None
        };
        let m = o.scan_points.max(1);
        let mut lo = T::zero();
        let mut hit = None;
        for k in 1..=m {
            let th = T::frac(k as i64, m as i64);
            if classify(&dense.at_theta(&th)).is_some() {
                hit = Some(th);
                break;
            }
            lo = th;
        }
        let hi = hit?;
        let at = |th: &T| dense.t0.clone() + th.clone() * dense.h.clone();
        let loc = bisect(
            |t| classify(&dense.at(t)).is_some(),
            |_| true,
            at(&lo),
            at(&hi),
            &self.time_tol,
        );
        let t = loc.after;
        let y = dense.at(&t);
        let sw = self.sys.switching(&y);
        match classify(&y).unwrap_or(Bad::Drift) {
            Bad::Degenerate => Some(Outcome::Stop {
                t,
                y,
                reason: TerminationReason::DegenerateSingular,
            }),
            Bad::Saturated => {
                let to = (-(sw.h001.clone() / sw.h101.clone())).signum();
                Some(Outcome::Continue {
                    t,
                    y,
                    next: Mode::Bang(to),
                    kind: EventKind::SingularExit {
                        to,
                        cause: ExitCause::Saturation,
                    },
                })
            }
            Bad::Drift => {
                let to = match sw.h1.signum() {
                    0 => sw.h01.signum().max(-1),
                    s => s,
                };
                let to = if to == 0 { 1 } else { to };
                Some(Outcome::Continue {
                    t,
                    y,
                    next: Mode::Bang(to),
                    kind: EventKind::SingularExit {
                        to,
                        cause: ExitCause::Drift,
                    },
                })
            }
        }
    }
}

/// Simulate in `f64`.
pub fn simulate(
    scenario: &Scenario,
    init: &ExtremalState<f64>,
    t_final: f64,
    opts: &SimOptions,
) -> Result<SimResult> {
    simulate_in::<f64>(scenario, init, &t_final, opts)
}

/// Simulate in the scalar type `T`.
pub fn simulate_in<T: Real>(
    scenario: &Scenario,
    init: &ExtremalState<T>,
    t_final: &T,
    opts: &SimOptions,
) -> Result<SimResult> {
    let n = scenario.dim();
    if init.q.len() != n || init.lambda.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: init.q.len().max(init.lambda.len()),
        });
    }
    if init.lambda.iter().all(|v| *v == T::zero()) {
        return Err(Error::CostateVanished {
            t: init.t.to_f64(),
        });
    }
    if *t_final <= init.t {
        return Err(Error::InvalidInput("t_final must exceed the initial time".into()));
    }
    let sys = ExtremalSystem::<T>::new(scenario);
    let y0 = init.packed();
    let sw0 = sys.switching(&y0);
    let h_ref = sys.max_hamiltonian(&y0);
    let mut run = Run {
        sys: &sys,
        opts,
        time_tol: T::from_f64(opts.time_tol),
        t: init.t.clone(),
        y: y0,
        mode: Mode::Bang(1),
        arc_start: init.t.clone(),
        samples: vec![],
        controls: vec![],
        arcs: vec![],
        switches: vec![],
        events: vec![],
        event_count: 0,
        kappa: T::one(),
        h_ref,
        max_drift: 0.0,
        renormalizations: 0,
        steps: 0,
        rejected: 0,
    };

    let initial = if sw0.h1.abs() > T::from_f64(opts.eps_h1) {
        Some(Mode::Bang(sw0.h1.signum()))
    } else if sw0.h01.abs() > T::from_f64(opts.eps_h01) {
        Some(Mode::Bang(sw0.h01.signum()))
    } else if run.singular_admissible(&sw0) {
        Some(Mode::Singular)
    } else {
        None
    };
    let termination = match initial {
        None => TerminationReason::DegenerateSingular,
        Some(mode) => {
            run.mode = mode;
            run.renormalize();
            if mode == Mode::Singular {
                let (t, y) = (run.t.clone(), run.y.clone());
                run.log(&t, &y, EventKind::SingularEntry);
            }
            run.record_sample();
            integrate(&mut run, t_final)
        }
    };

    let (t, y) = (run.t.clone(), run.y.clone());
    if initial.is_some() && termination == TerminationReason::FinalTime {
        run.close_arc(&t, &y);
    }
    run.log(&t, &y, EventKind::Termination { reason: termination });

    let switch_gaps = run
        .switches
        .windows(2)
        .map(|p| (p[1].clone() - p[0].clone()).to_f64())
        .collect();
    Ok(SimResult {
        scenario: scenario.name.clone(),
        precision: T::NAME.to_string(),
        t_final: t_final.to_f64(),
        arcs: run.arcs,
        switch_times: run.switches.iter().map(Real::to_f64).collect(),
        switch_gaps,
        resolution: opts.time_tol,
        event_log: run.events,
        diagnostics: Diagnostics {
            max_hamiltonian_drift: run.max_drift,
            renormalizations: run.renormalizations,
            termination,
            steps: run.steps,
            rejected_steps: run.rejected,
        },
        final_state: ExtremalState::from_packed(t, &y).to_f64(),
    })
}

fn integrate<T: Real>(run: &mut Run<'_, T>, t_final: &T) -> TerminationReason {
    let sys = run.sys;
    let opts = run.opts;
    let rk = Dopri5::<T>::new(opts.rtol, opts.atol);
    let max_step = T::from_f64(opts.max_step);
    let mut h = T::from_f64(opts.initial_step);
    let mut k1 = vec![T::zero(); run.y.len()];
    let f_for = |mode: Mode| {
        move |y: &[T], dy: &mut [T]| {
            let u = control_value(sys, mode, y);
            sys.rhs(y, &u, dy)
        }
    };
    sys.rhs(&run.y, &control_value(sys, run.mode, &run.y), &mut k1);

    loop {
        if run.t >= *t_final {
            return TerminationReason::FinalTime;
        }
        if run.steps + run.rejected >= opts.max_steps {
            let (t, y) = (run.t.clone(), run.y.clone());
            run.close_arc(&t, &y);
            return TerminationReason::StepLimit;
        }
        let rem = t_final.clone() - run.t.clone();
        let mut hh = h.clone().min(max_step.clone());
        let last = hh >= rem;
        if last {
            hh = rem;
        }
        let f = f_for(run.mode);
        let st = rk.step(&f, &run.t, &run.y, &k1, &hh);
        if st.err > 1.0 || st.y1.iter().any(|v| !v.to_f64().is_finite()) {
            run.rejected += 1;
            let fac = if st.err.is_finite() { rk.factor(st.err).min(1.0) } else { rk.fac_min };
            h = hh.clone() * T::from_f64(fac);
            let floor = T::from_f64(f64::EPSILON) * run.t.abs().max(T::one());
            if h < floor && h < run.time_tol {
                let (t, y) = (run.t.clone(), run.y.clone());
                run.close_arc(&t, &y);
                return TerminationReason::StepUnderflow;
            }
            continue;
        }
        run.steps += 1;
        let grow = T::from_f64(rk.factor(st.err));

        let outcome = match run.mode {
            Mode::Bang(s) => run.scan_bang(s, &st.dense),
            Mode::Singular => run.scan_singular(&st.dense),
        };
        match outcome {
            None => {
                run.t = if last { t_final.clone() } else { run.t.clone() + hh.clone() };
                run.y = st.y1;
                k1 = st.k_end;
                let y = run.y.clone();
                run.track_hamiltonian(&y);
                if run.renormalize() {
                    sys.rhs(&run.y, &control_value(sys, run.mode, &run.y), &mut k1);
                }
                run.record_sample();
                h = hh * grow;
            }
            Some(Outcome::Stop { t, y, reason }) => {
                run.track_hamiltonian(&y);
                run.close_arc(&t, &y);
                run.t = t;
                run.y = y;
                return reason;
            }
            Some(Outcome::Continue { t, y, next, kind }) => {
                run.track_hamiltonian(&y);
                let duration = t.clone() - run.arc_start.clone();
                run.close_arc(&t, &y);
                run.log(&t, &y, kind);
                run.switches.push(t.clone());
                run.event_count += 1;
                run.t = t;
                run.y = y;
                run.mode = next;
                if run.event_count >= opts.max_events {
                    return TerminationReason::MaxEvents;
                }
                if run.accumulating() {
                    return TerminationReason::Accumulation;
                }
                run.renormalize();
                run.record_sample();
                sys.rhs(&run.y, &control_value(sys, run.mode, &run.y), &mut k1);
                let cap = duration * T::frac(1, 2);
                h = if cap > T::zero() { (hh * grow).min(cap) } else { hh };
            }
        }
    }
}
