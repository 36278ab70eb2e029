//! Scenario documents, built-in fixtures and run records.

pub mod builtin;
pub mod cli;
pub mod file;
pub mod record;

pub use builtin::{builtin, check_singular_seed, fuller_constants, fuller_orbit_state, search_singular_fixture};
pub use file::{emit, parse_scenario, Fixture, Initial, Precision, ScenarioFile, Setup};
pub use record::RunRecord;
