//! Extremal flows of single-input control-affine systems: bang and singular
//! arcs, switch location and arc diagnostics.

pub mod dopri;
pub mod system;

pub use system::{
    extremal_rhs, h_word, h_word_exact, pmp_control, singular_control, singular_hamiltonian_rhs,
    ControlMode, ExtremalState, ExtremalSystem, Scenario, Switching,
};
pub mod simulate;

pub use simulate::{
    locate_switch, propagate, simulate, simulate_in, ArcKind, ArcSegment, ControlLaw, Diagnostics,
    EventKind, ExitCause, Located, SimEvent, SimOptions, SimResult, TerminationReason,
};
pub mod checks;

pub use checks::{
    arc_pattern, check_arc_invariants, collinearity_report, CollinearityEntry, InvariantTolerances,
    Violation, ViolationKind,
};
