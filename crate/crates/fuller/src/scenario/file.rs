//! JSON scenario documents.
//!
//! Polynomials are lists of `{"coeff": "p/q", "exponents": [..]}` terms in
//! ascending graded-lex order; every rational is a string so that no value
//! passes through a float. [`emit`] always writes the canonical form, so
//! `emit(parse(doc))` is a fixed point.

use serde::{Deserialize, Serialize};

use crate::algebra::{format_rational, parse_rational, PolyVectorField, Polynomial, Rational};
use crate::error::{Error, Result};
use crate::real::{Extended, Real};
use crate::sim::{simulate_in, ExtremalState, Scenario, SimOptions, SimResult};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermDoc {
    pub coeff: String,
    pub exponents: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitialDoc {
    pub q: Vec<String>,
    pub lambda: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fixture {
    DoubleIntegrator,
    Fuller,
    Singular3d,
    RandomPoly,
}

impl Fixture {
    pub fn name(self) -> &'static str {
        match self {
            Fixture::DoubleIntegrator => "double_integrator",
            Fixture::Fuller => "fuller",
            Fixture::Singular3d => "singular3d",
            Fixture::RandomPoly => "random_poly",
        }
    }

    pub fn from_name(s: &str) -> Option<Fixture> {
        [
            Fixture::DoubleIntegrator,
            Fixture::Fuller,
            Fixture::Singular3d,
            Fixture::RandomPoly,
        ]
        .into_iter()
        .find(|f| f.name() == s)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    #[default]
    Double,
    Extended,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub name: String,
    pub dim: usize,
    pub f0: Vec<Vec<TermDoc>>,
    pub f1: Vec<Vec<TermDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub running_cost: Option<Vec<TermDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<SimOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<Precision>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture: Option<Fixture>,
}

/// Where the initial extremal state comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum Initial {
    Exact { q: Vec<Rational>, lambda: Vec<Rational> },
    /// A point on the self-similar Fuller orbit, computed in working precision.
    FullerOrbit,
}

/// A validated scenario together with its run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Setup {
    pub scenario: Scenario,
    pub initial: Option<Initial>,
    pub t_final: Option<f64>,
    pub options: SimOptions,
    pub precision: Precision,
    pub fixture: Option<Fixture>,
}

impl Setup {
    pub fn initial_state<T: Real>(&self) -> Option<ExtremalState<T>> {
        match self.initial.as_ref()? {
            Initial::Exact { q, lambda } => Some(ExtremalState::new(
                T::zero(),
                q.iter().map(T::from_ratio).collect(),
                lambda.iter().map(T::from_ratio).collect(),
            )),
            Initial::FullerOrbit => Some(super::builtin::fuller_orbit_state()),
        }
    }

    /// Run from the stored initial state in the configured precision.
    /// `t_final` overrides the stored horizon.
    pub fn simulate(&self, t_final: Option<f64>) -> Result<SimResult> {
        let t = t_final
            .or(self.t_final)
            .ok_or_else(|| Error::InvalidInput("no t_final given or stored".into()))?;
        let missing = || Error::InvalidInput(format!("scenario `{}` has no initial state", self.scenario.name));
        match self.precision {
            Precision::Double => {
                let init = self.initial_state::<f64>().ok_or_else(missing)?;
                simulate_in(&self.scenario, &init, &(init.t + t), &self.options)
            }
            Precision::Extended => {
                let init = self.initial_state::<Extended>().ok_or_else(missing)?;
                let horizon = init.t.clone() + Extended::from_f64(t);
                simulate_in(&self.scenario, &init, &horizon, &self.options)
            }
        }
    }
}

fn poly_from_doc(dim: usize, terms: &[TermDoc], loc: &str) -> Result<Polynomial> {
    let mut out = Vec::with_capacity(terms.len());
    for (k, t) in terms.iter().enumerate() {
        let here = format!("{loc}[{k}]");
        if t.exponents.len() != dim {
            return Err(Error::parse(
                here,
                format!("{} exponents for dimension {dim}", t.exponents.len()),
            ));
        }
        let c = parse_rational(&t.coeff).map_err(|e| match e {
            Error::Parse { message, .. } => Error::parse(format!("{here}.coeff"), message),
            other => other,
        })?;
        out.push((t.exponents.clone(), c));
    }
    Polynomial::from_terms(dim, out)
}

fn field_from_doc(dim: usize, comps: &[Vec<TermDoc>], loc: &str) -> Result<PolyVectorField> {
    if comps.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: comps.len(),
        });
    }
    let polys = comps
        .iter()
        .enumerate()
        .map(|(i, c)| poly_from_doc(dim, c, &format!("{loc}[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    PolyVectorField::new(polys)
}

pub fn poly_to_doc(p: &Polynomial) -> Vec<TermDoc> {
    p.terms()
        .map(|(e, c)| TermDoc {
            coeff: format_rational(c),
            exponents: e.to_vec(),
        })
        .collect()
}

fn field_to_doc(f: &PolyVectorField) -> Vec<Vec<TermDoc>> {
    f.components().iter().map(poly_to_doc).collect()
}

fn rationals(v: &[String], loc: &str) -> Result<Vec<Rational>> {
    v.iter()
        .enumerate()
        .map(|(i, s)| {
            parse_rational(s).map_err(|_| Error::parse(format!("{loc}[{i}]"), format!("bad rational `{s}`")))
        })
        .collect()
}

impl ScenarioFile {
    pub fn into_setup(self) -> Result<Setup> {
        let n = self.dim;
        let f0 = field_from_doc(n, &self.f0, "f0")?;
        let f1 = field_from_doc(n, &self.f1, "f1")?;
        let mut scenario = Scenario::new(self.name, f0, f1)?;
        if let Some(c) = &self.running_cost {
            scenario = scenario.with_running_cost(poly_from_doc(n, c, "running_cost")?)?;
        }
        let initial = match (&self.initial, self.fixture) {
            (Some(init), _) => {
                let q = rationals(&init.q, "initial.q")?;
                let lambda = rationals(&init.lambda, "initial.lambda")?;
                for v in [&q, &lambda] {
                    if v.len() != n {
                        return Err(Error::DimensionMismatch {
                            expected: n,
                            found: v.len(),
                        });
                    }
                }
                Some(Initial::Exact { q, lambda })
            }
            (None, Some(Fixture::Fuller)) => Some(Initial::FullerOrbit),
            (None, _) => None,
        };
        Ok(Setup {
            scenario,
            initial,
            t_final: self.t_final,
            options: self.options.unwrap_or_default(),
            precision: self.precision.unwrap_or_default(),
            fixture: self.fixture,
        })
    }

    pub fn from_setup(s: &Setup) -> ScenarioFile {
        let initial = match &s.initial {
            Some(Initial::Exact { q, lambda }) => Some(InitialDoc {
                q: q.iter().map(format_rational).collect(),
                lambda: lambda.iter().map(format_rational).collect(),
            }),
            _ => None,
        };
        ScenarioFile {
            name: s.scenario.name.clone(),
            dim: s.scenario.dim(),
            f0: field_to_doc(&s.scenario.f0),
            f1: field_to_doc(&s.scenario.f1),
            running_cost: s.scenario.running_cost.as_ref().map(poly_to_doc),
            initial,
            t_final: s.t_final,
            options: (s.options != SimOptions::default()).then(|| s.options.clone()),
            precision: (s.precision != Precision::Double).then_some(s.precision),
            fixture: s.fixture,
        }
    }
}

/// Parse a scenario document.
pub fn parse_scenario(text: &str) -> Result<Setup> {
    let doc: ScenarioFile = serde_json::from_str(text).map_err(|e| {
        Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string())
    })?;
    doc.into_setup()
}

/// Canonical JSON text of a setup.
pub fn emit(setup: &Setup) -> String {
    let doc = ScenarioFile::from_setup(setup);
    let mut s = serde_json::to_string_pretty(&doc).expect("scenario documents serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "di",
        "dim": 2,
        "f0": [[{"coeff": "1", "exponents": [0, 1]}], []],
        "f1": [[], [{"coeff": "1", "exponents": [0, 0]}]]
    }"#;

    #[test]
    fn minimal_document() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.scenario.dim(), 2);
        assert_eq!(s.scenario.f0.component(0), &Polynomial::var(2, 1));
        assert_eq!(s.scenario.f1, PolyVectorField::basis(2, 1));
        assert!(s.initial.is_none());
        assert_eq!(s.precision, Precision::Double);
    }

    #[test]
    fn zero_denominator_is_rejected() {
        let bad = MINIMAL.replace("\"coeff\": \"1\", \"exponents\": [0, 1]", "\"coeff\": \"1/0\", \"exponents\": [0, 1]");
        match parse_scenario(&bad) {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "f0[0][0].coeff"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        match parse_scenario("{\n  \"name\": 3,\n}") {
            Err(Error::Parse { location, .. }) => assert!(location.starts_with("line 2")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_dimension() {
        let bad = MINIMAL.replace("\"dim\": 2", "\"dim\": 3");
        assert!(matches!(parse_scenario(&bad), Err(Error::DimensionMismatch { .. }) | Err(Error::Parse { .. })));
    }

    #[test]
    fn emit_is_a_fixed_point() {
        let noisy = MINIMAL.replace(
            "[{\"coeff\": \"1\", \"exponents\": [0, 1]}]",
            "[{\"coeff\": \"2/4\", \"exponents\": [0, 1]}, {\"coeff\": \"1/2\", \"exponents\": [0, 1]}, {\"coeff\": \"0\", \"exponents\": [1, 1]}]",
        );
        let once = emit(&parse_scenario(&noisy).unwrap());
        let twice = emit(&parse_scenario(&once).unwrap());
        assert_eq!(once, twice);
        assert_eq!(parse_scenario(&once).unwrap(), parse_scenario(MINIMAL).unwrap());
    }
}
