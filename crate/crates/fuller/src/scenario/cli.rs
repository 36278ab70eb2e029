//! Command-line front end.
//!
//! Exit status is 0 on success, 1 when a computation fails and 2 on bad
//! usage. Relative output paths land in `$FULLER_OUTPUT_DIR` when it is set.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::algebra::{decompose_word, format_rational, parse_rational, BracketWord, Rational};
use crate::analysis::{
    auto_epsilon, chatter_ratio_gaps, check_accumulation_conditions, fuller_order, ConditionViolation, Epsilon,
    OrderOptions, OrderReport, RatioEstimate, SwitchSet,
};
use crate::error::{Error, Result};
use crate::relations::{build_q, classify_point_3d, collinear_degeneracy_test, fuller_bound, longest_admissible};
use crate::scenario::{builtin, emit, parse_scenario, record::unix_now, RunRecord, ScenarioFile, Setup};
use crate::sim::SimResult;

pub const OUTPUT_DIR_VAR: &str = "FULLER_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "fuller", version, about = "Chattering extremals, bracket words and Fuller-order bounds")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Debug, Subcommand)]
enum Verb {
    /// Integrate an extremal and record its arcs and switches.
    Simulate(SimulateArgs),
    /// Fuller order, chattering ratio and accumulation conditions of a run.
    Analyze(AnalyzeArgs),
    /// Longest admissible curve and the resulting order bound.
    Bound {
        #[arg(long)]
        dim: usize,
    },
    /// Classify a point of a three-dimensional scenario.
    Classify(ClassifyArgs),
    /// Print the field of a bracket word, or its expansion.
    Brackets(BracketsArgs),
    /// Print the expanded polynomial relation `Q_r`.
    Qrel(QrelArgs),
    /// Write the canonical document of a built-in scenario.
    Emit {
        name: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct ScenarioArg {
    /// Scenario file, or the name of a built-in fixture.
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
    #[arg(long)]
    t_final: Option<f64>,
    /// JSON result file; a run record is written next to it.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Trajectory samples as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Output of `simulate`, or a text file with one switching time per line.
    #[arg(long)]
    input: PathBuf,
    /// `auto` or a positive number.
    #[arg(long, default_value = "auto")]
    epsilon: Epsilon,
    #[arg(long, default_value_t = 16.0)]
    level_growth: f64,
    /// Relative tolerance for the accumulation conditions.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// Resolution for plain time lists.
    #[arg(long, default_value_t = 0.0)]
    resolution: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
    /// Comma-separated rational coordinates.
    #[arg(long, alias = "q", allow_hyphen_values = true)]
    point: String,
    /// Classify in floating point instead of exactly.
    #[arg(long)]
    float: bool,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Debug, Args)]
struct BracketsArgs {
    #[arg(long, allow_hyphen_values = true)]
    word: BracketWord,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Print the expansion into 0/1 words instead of the field.
    #[arg(long)]
    decompose: bool,
    /// Evaluate at this comma-separated rational point.
    #[arg(long, allow_hyphen_values = true)]
    at: Option<String>,
}

#[derive(Debug, Args)]
struct QrelArgs {
    #[arg(long)]
    r: usize,
    /// `I_(l-1)`
    #[arg(long, allow_hyphen_values = true)]
    prev: BracketWord,
    /// `I_l`
    #[arg(long, allow_hyphen_values = true)]
    last: BracketWord,
}

/// What `simulate --output` writes: the canonical scenario and the run.
#[derive(Debug, Serialize, Deserialize)]
pub struct SimulationOutput {
    pub scenario: ScenarioFile,
    pub result: SimResult,
}

#[derive(Debug, Serialize)]
struct AnalysisOutput {
    order: OrderReport,
    ratio: Option<RatioEstimate>,
    violations: Vec<ConditionViolation>,
}

/// Parse `argv` (including the program name), run, and return the exit code.
pub fn run_cli<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli.verb, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn dispatch(verb: Verb, out: &mut dyn Write) -> Result<()> {
    match verb {
        Verb::Simulate(a) => simulate(a, out),
        Verb::Analyze(a) => analyze(a, out),
        Verb::Bound { dim } => bound(dim, out),
        Verb::Classify(a) => classify(a, out),
        Verb::Brackets(a) => brackets(a, out),
        Verb::Qrel(a) => {
            let q = build_q(a.r, &a.prev, &a.last)?;
            writeln!(out, "Q_{} = {}", a.r, q)?;
            Ok(())
        }
        Verb::Emit { name, seed, output } => {
            let text = emit(&builtin(&name, seed)?);
            match output {
                Some(p) => write_file(&p, &text).map(|_| ()),
                None => write!(out, "{text}").map_err(Error::from),
            }
        }
    }
}

/// A file path if it exists (also under `scenarios/`), otherwise a
/// built-in name, with any `.json` suffix dropped.
pub fn resolve_scenario(source: &str, seed: Option<u64>) -> Result<Setup> {
    let candidates = [PathBuf::from(source), Path::new("scenarios").join(source)];
    if let Some(p) = candidates.iter().find(|p| p.is_file()) {
        return parse_scenario(&std::fs::read_to_string(p)?);
    }
    let name = source.strip_suffix(".json").unwrap_or(source);
    let name = Path::new(name).file_name().and_then(|s| s.to_str()).unwrap_or(name);
    builtin(name, seed)
}

fn output_path(p: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_VAR) {
        Some(dir) if p.is_relative() => Path::new(&dir).join(p),
        _ => p.to_path_buf(),
    }
}

fn write_file(p: &Path, text: &str) -> Result<String> {
    let path = output_path(p);
    if let Some(parent) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&path, text)?;
    Ok(path.display().to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let started = unix_now();
    let setup = resolve_scenario(&a.scenario.scenario, a.scenario.seed)?;
    let result = setup.simulate(a.t_final)?;
    writeln!(
        out,
        "scenario={} precision={} switches={} termination={} t_end={}",
        result.scenario,
        result.precision,
        result.switch_count(),
        result.termination().as_str(),
        result.final_state.t
    )?;
    let mut written = Vec::new();
    if let Some(p) = &a.csv {
        written.push(write_file(p, &result.trajectory_csv(&setup.scenario))?);
    }
    if let Some(p) = &a.output {
        let doc = SimulationOutput {
            scenario: ScenarioFile::from_setup(&setup),
            result,
        };
        written.push(write_file(p, &to_json(&doc)?)?);
        let record = RunRecord::new("simulate", &emit(&setup), Some(setup.options.clone()), started)
            .finish(written.clone());
        write_file(&p.with_extension("record.json"), &to_json(&record)?)?;
    }
    for w in written {
        writeln!(out, "wrote {w}")?;
    }
    Ok(())
}

fn analyze(a: AnalyzeArgs, out: &mut dyn Write) -> Result<()> {
    let text = std::fs::read_to_string(&a.input)?;
    let run: Option<SimulationOutput> = serde_json::from_str(&text).ok();
    let set = match &run {
        Some(r) => SwitchSet::from_result(&r.result)?,
        None => SwitchSet::parse_lines(&text, None, a.resolution)?,
    };
    let opts = OrderOptions {
        level_growth: a.level_growth,
        ..OrderOptions::default()
    };
    if matches!(a.epsilon, Epsilon::Auto) {
        writeln!(out, "epsilon(auto)={:e}", auto_epsilon(&set))?;
    }
    let order = fuller_order(&set, a.epsilon, &opts)?;
    let ratio = chatter_ratio_gaps(&set.gaps[set.gaps.len().saturating_sub(10)..]).ok();
    let violations = match &run {
        Some(r) => {
            let setup = r.scenario.clone().into_setup()?;
            check_accumulation_conditions(&r.result, &order, &setup.scenario, a.tol)
        }
        None => Vec::new(),
    };
    writeln!(
        out,
        "estimated_order={} epsilon_used={:e} accumulation_points={}",
        order.estimated_order,
        order.epsilon_used,
        order.accumulation_points.len()
    )?;
    if let Some(r) = &ratio {
        writeln!(out, "ratio={:.6} dispersion={:.3e}", r.ratio, r.dispersion)?;
    }
    writeln!(out, "condition_violations={}", violations.len())?;
    let doc = AnalysisOutput {
        order,
        ratio,
        violations,
    };
    match &a.output {
        Some(p) => writeln!(out, "wrote {}", write_file(p, &to_json(&doc)?)?)?,
        None => write!(out, "{}", to_json(&doc)?)?,
    }
    Ok(())
}

fn bound(dim: usize, out: &mut dyn Write) -> Result<()> {
    let b = fuller_bound(dim)?;
    let curve = longest_admissible(dim)?;
    writeln!(out, "n={} longest={} K={} total={}", b.n, b.longest, b.k, b.total)?;
    let steps: Vec<String> = curve.witness.iter().map(|s| s.to_string()).collect();
    writeln!(out, "witness={}", steps.join(" "))?;
    Ok(())
}

fn parse_point(s: &str) -> Result<Vec<Rational>> {
    s.split(',').map(|c| parse_rational(c.trim())).collect()
}

fn classify(a: ClassifyArgs, out: &mut dyn Write) -> Result<()> {
    let setup = resolve_scenario(&a.scenario.scenario, a.scenario.seed)?;
    let q = parse_point(&a.point)?;
    let (class, collinear) = if a.float {
        let qf: Vec<f64> = q.iter().map(crate::relations::Scalar::to_f64).collect();
        (
            classify_point_3d(&setup.scenario, &qf, a.tol)?,
            collinear_degeneracy_test(&setup.scenario, &qf, a.tol)?,
        )
    } else {
        (
            classify_point_3d(&setup.scenario, &q, 0.0)?,
            collinear_degeneracy_test(&setup.scenario, &q, 0.0)?,
        )
    };
    writeln!(out, "classes={}", class.labels().join(","))?;
    writeln!(out, "L1={} L2={}", collinear.in_l1, collinear.in_l2)?;
    #[derive(Serialize)]
    struct Doc<'a> {
        point: &'a crate::relations::PointClass,
        collinear: &'a crate::relations::CollinearReport,
    }
    write!(
        out,
        "{}",
        to_json(&Doc {
            point: &class,
            collinear: &collinear
        })?
    )?;
    Ok(())
}

fn brackets(a: BracketsArgs, out: &mut dyn Write) -> Result<()> {
    if a.decompose {
        let d = decompose_word(&a.word)?;
        let terms: Vec<String> = d
            .terms
            .iter()
            .map(|(w, s)| format!("{}{}", if *s < 0 { "-" } else { "+" }, w))
            .collect();
        writeln!(out, "{} = {}", a.word, terms.join(" "))?;
        writeln!(out, "J1={} J2={}", d.j1, d.j2)?;
        return Ok(());
    }
    let source = a
        .scenario
        .ok_or_else(|| Error::InvalidInput("--scenario is required unless --decompose is given".into()))?;
    let setup = resolve_scenario(&source, a.seed)?;
    let mut cache = setup.scenario.cache();
    let field = cache.get(&a.word).clone();
    for (i, c) in field.components().iter().enumerate() {
        writeln!(out, "f_{}[{}] = {}", a.word, i + 1, c)?;
    }
    if let Some(at) = a.at {
        let q = parse_point(&at)?;
        if q.len() != field.dim() {
            return Err(Error::DimensionMismatch {
                expected: field.dim(),
                found: q.len(),
            });
        }
        let v: Vec<String> = field.eval_exact(&q).iter().map(format_rational).collect();
        writeln!(out, "f_{}({}) = ({})", a.word, at, v.join(", "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut o = Vec::new();
        let mut e = Vec::new();
        let argv = std::iter::once("fuller").chain(args.iter().copied());
        let code = run_cli(argv, &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn bound_three() {
        let (c, o, _) = run(&["bound", "--dim", "3"]);
        assert_eq!(c, 0);
        assert!(o.contains("longest=2 K=3 total=4"), "{o}");
    }

    #[test]
    fn usage_and_domain_errors() {
        assert_eq!(run(&["bound"]).0, 2);
        assert_eq!(run(&["frobnicate"]).0, 2);
        assert_eq!(run(&["bound", "--dim", "1"]).0, 1);
        assert_eq!(run(&["qrel", "--r", "0", "--prev", "001", "--last", "101"]).0, 1);
        assert_eq!(run(&["--help"]).0, 0);
    }

    #[test]
    fn qrel_prints_expansion() {
        let (c, o, _) = run(&["qrel", "--r", "1", "--prev", "001", "--last", "101"]);
        assert_eq!(c, 0);
        assert_eq!(o.trim(), "Q_1 = -S(0001)*S(1101) + S(0101)*S(1001)");
    }

    #[test]
    fn brackets_of_builtin() {
        let (c, o, _) = run(&["brackets", "--word", "+01", "--scenario", "double_integrator.json"]);
        assert_eq!(c, 0, "{o}");
        assert!(o.contains("f_+01[1]") && o.contains("f_+01[2]"));
        let (c, o, _) = run(&["brackets", "--word", "+-01", "--decompose"]);
        assert_eq!(c, 0);
        assert!(o.contains("J1=0001 J2=1101"), "{o}");
    }
}
