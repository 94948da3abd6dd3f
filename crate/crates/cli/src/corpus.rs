//! Corpus evaluation: refine, verify, then test each problem.
//!
//! A corpus is a directory of problem directories, each holding
//! `problem.spec`, optionally `problem.refine` (oracle script),
//! `problem.tests`, `domain.toml` and a `refinery.toml` that replaces the
//! configuration for that problem.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use refinery_core::harness::sample_cases;
use refinery_core::oracle::DriveOutcome;
use refinery_core::prog_lang::{parse_test_cases, run_tests, NumMode, Statement, TestCase, DEFAULT_STEP_LIMIT};
use refinery_core::refinement::{Library, SpecFile};
use refinery_core::verifier::DomainSpec;
use serde::Serialize;

use crate::commands::{load_spec, outcome_label, refine_spec, Refined};
use crate::config::load_domains;
use crate::{build_verifier, read, CliError, Config, EXIT_OK};

/// Largest input grid sampled for enlarged test sets.
pub const SAMPLE_GRID_LIMIT: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalRow {
    pub name: String,
    /// `None` when the problem could not be loaded.
    pub outcome: Option<DriveOutcome>,
    pub vcs_proved: usize,
    pub vcs_total: usize,
    pub tests_passed: usize,
    pub tests_total: usize,
    pub enlarged_passed: usize,
    pub enlarged_total: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl EvalRow {
    fn failed(name: String, note: String) -> Self {
        EvalRow {
            name,
            outcome: None,
            vcs_proved: 0,
            vcs_total: 0,
            tests_passed: 0,
            tests_total: 0,
            enlarged_passed: 0,
            enlarged_total: 0,
            note: Some(note),
        }
    }

    pub fn refined(&self) -> bool {
        matches!(self.outcome, Some(DriveOutcome::FullyRefined | DriveOutcome::Unverified))
    }

    pub fn verified(&self) -> bool {
        self.outcome == Some(DriveOutcome::FullyRefined) && self.vcs_proved == self.vcs_total
    }

    pub fn tests_ok(&self) -> bool {
        self.refined() && self.tests_passed == self.tests_total
    }

    pub fn enlarged_ok(&self) -> bool {
        self.refined() && self.enlarged_passed == self.enlarged_total
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EvalTotals {
    pub problems: usize,
    pub refined: usize,
    pub verified: usize,
    pub tests_passed: usize,
    pub enlarged_passed: usize,
    pub vcs_proved: usize,
    pub vcs_total: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub totals: EvalTotals,
}

impl EvalReport {
    pub fn from_rows(rows: Vec<EvalRow>) -> Self {
        let count = |f: fn(&EvalRow) -> bool| rows.iter().filter(|r| f(r)).count();
        let totals = EvalTotals {
            problems: rows.len(),
            refined: count(EvalRow::refined),
            verified: count(EvalRow::verified),
            tests_passed: count(EvalRow::tests_ok),
            enlarged_passed: count(EvalRow::enlarged_ok),
            vcs_proved: rows.iter().map(|r| r.vcs_proved).sum(),
            vcs_total: rows.iter().map(|r| r.vcs_total).sum(),
        };
        EvalReport { rows, totals }
    }

    /// Verified problems that pass their tests also pass the enlarged set.
    pub fn stable(&self) -> bool {
        self.rows.iter().filter(|r| r.verified() && r.tests_ok()).all(EvalRow::enlarged_ok)
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let w = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(7);
        let _ = writeln!(s, "{:w$}  {:34}  {:>9}  {:>9}  {:>9}", "problem", "outcome", "VCs", "tests", "enlarged");
        for r in &self.rows {
            let outcome = r.outcome.map_or("error", outcome_label);
            let frac = |a: usize, b: usize| format!("{a}/{b}");
            let _ = writeln!(
                s,
                "{:w$}  {:34}  {:>9}  {:>9}  {:>9}",
                r.name,
                outcome,
                frac(r.vcs_proved, r.vcs_total),
                frac(r.tests_passed, r.tests_total),
                frac(r.enlarged_passed, r.enlarged_total)
            );
            if let Some(n) = &r.note {
                let _ = writeln!(s, "{:w$}    {n}", "");
            }
        }
        let t = &self.totals;
        let _ = writeln!(
            s,
            "refined {}/{}, verified {}/{}, tests passed {}/{}, enlarged tests passed {}/{}",
            t.refined, t.problems, t.verified, t.problems, t.tests_passed, t.problems, t.enlarged_passed, t.problems
        );
        s
    }
}

#[derive(Clone, Debug)]
pub struct EvalArgs {
    pub corpus: PathBuf,
    pub oracle: Option<String>,
    /// Domains for problems without their own `domain.toml`.
    pub domains: Option<PathBuf>,
    /// Enlarged test sets hold this many times the bundled cases.
    pub enlarge: usize,
    pub seed: u64,
}

impl Default for EvalArgs {
    fn default() -> Self {
        EvalArgs { corpus: PathBuf::new(), oracle: None, domains: None, enlarge: 10, seed: 17 }
    }
}

/// Problem directories in name order.
pub fn problems(corpus: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = std::fs::read_dir(corpus).map_err(|e| CliError::Input(format!("{}: {e}", corpus.display())))?;
    let mut dirs: Vec<PathBuf> =
        entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.join("problem.spec").is_file()).collect();
    dirs.sort();
    Ok(dirs)
}

pub fn evaluate(args: &EvalArgs, cfg: &Config) -> Result<EvalReport, CliError> {
    let oracle = args.oracle.clone().unwrap_or_else(|| cfg.oracle.name.clone());
    let fallback = cfg.domains(args.domains.as_deref())?;
    let mut rows = Vec::new();
    for (k, dir) in problems(&args.corpus)?.into_iter().enumerate() {
        let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let seed = args.seed.wrapping_add(k as u64);
        let row = evaluate_problem(&dir, &name, &oracle, cfg, &fallback, args.enlarge, seed)
            .unwrap_or_else(|e| EvalRow::failed(name.clone(), e.to_string()));
        log::info!("{name}: {:?}", row.outcome);
        rows.push(row);
    }
    Ok(EvalReport::from_rows(rows))
}

fn evaluate_problem(
    dir: &Path,
    name: &str,
    oracle: &str,
    cfg: &Config,
    fallback: &DomainSpec,
    enlarge: usize,
    seed: u64,
) -> Result<EvalRow, CliError> {
    let spec = load_spec(&dir.join("problem.spec"))?;
    let local;
    let cfg = match dir.join("refinery.toml") {
        p if p.is_file() => {
            local = Config::load(&p)?;
            &local
        }
        _ => cfg,
    };
    let domains = match dir.join("domain.toml") {
        p if p.is_file() => load_domains(&p)?,
        _ => fallback.clone(),
    };
    let script = match dir.join("problem.refine") {
        p if p.is_file() => Some(read(&p)?),
        _ => None,
    };
    let tests = match dir.join("problem.tests") {
        p if p.is_file() => parse_test_cases(&read(&p)?).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        _ => Vec::new(),
    };
    let verifier = build_verifier(cfg.verifier_config(domains.clone()))?;
    let Refined { tree, report } = refine_spec(&spec, oracle, script, cfg, domains.clone(), &verifier, &Library::new())?;
    let c = report.final_obligations;
    let mut row = EvalRow {
        name: name.to_string(),
        outcome: Some(report.outcome),
        vcs_proved: c.proved,
        vcs_total: c.total(),
        tests_passed: 0,
        tests_total: tests.len(),
        enlarged_passed: 0,
        enlarged_total: 0,
        note: report.reason.clone(),
    };
    // tests only run on code that came out of the refinement
    let Some(program) = tree.extract_program().filter(|_| report.outcome != DriveOutcome::Exhausted) else {
        return Ok(row);
    };
    row.tests_passed = passed(&program, &tests);
    let enlarged = enlarged_cases(&spec, &domains, &tests, enlarge, seed)?;
    row.enlarged_total = enlarged.len();
    row.enlarged_passed = passed(&program, &enlarged);
    Ok(row)
}

fn passed(program: &Statement, cases: &[TestCase]) -> usize {
    run_tests(program, cases, DEFAULT_STEP_LIMIT, NumMode::Rational).passed()
}

/// The bundled cases plus seeded draws from the domain grid checked against
/// the postcondition, `factor` times as many in all.
pub fn enlarged_cases(
    spec: &SpecFile,
    domains: &DomainSpec,
    tests: &[TestCase],
    factor: usize,
    seed: u64,
) -> Result<Vec<TestCase>, CliError> {
    let extra = tests.len().max(1) * factor.max(1) - tests.len();
    let mut cases = tests.to_vec();
    cases.extend(
        sample_cases(&spec.statement, domains, extra, seed, SAMPLE_GRID_LIMIT)
            .map_err(|e| CliError::Input(format!("{}: {e}", spec.name)))?,
    );
    Ok(cases)
}

pub fn eval(args: &EvalArgs, cfg: &Config, json: Option<&Path>, out: &mut dyn Write) -> Result<i32, CliError> {
    let report = evaluate(args, cfg)?;
    let _ = write!(out, "{}", report.table());
    if let Some(p) = json {
        crate::write(p, &serde_json::to_string_pretty(&report).expect("plain data serializes"))?;
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(name: &str, outcome: Option<DriveOutcome>, vcs: (usize, usize), tests: (usize, usize)) -> EvalRow {
        EvalRow {
            name: name.into(),
            outcome,
            vcs_proved: vcs.0,
            vcs_total: vcs.1,
            tests_passed: tests.0,
            tests_total: tests.1,
            enlarged_passed: tests.0 * 10,
            enlarged_total: tests.1 * 10,
            note: None,
        }
    }

    #[test]
    fn totals_are_column_sums() {
        let r = EvalReport::from_rows(vec![
            row("a", Some(DriveOutcome::FullyRefined), (4, 4), (3, 3)),
            row("b", Some(DriveOutcome::Exhausted), (1, 3), (0, 3)),
            row("c", Some(DriveOutcome::Unverified), (2, 3), (2, 3)),
        ]);
        assert_eq!(r.totals, EvalTotals { problems: 3, refined: 2, verified: 1, tests_passed: 1, enlarged_passed: 1, vcs_proved: 7, vcs_total: 10 });
        assert!(r.stable());
        assert!(r.table().contains("refined 2/3, verified 1/3"));
    }

    #[test]
    fn empty_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let r = evaluate(&EvalArgs { corpus: dir.path().to_path_buf(), ..Default::default() }, &Config::default()).unwrap();
        assert_eq!(r, EvalReport::default());
    }
}
