//! The `refine`, `check`, `run` and `laws` commands.
//!
//! Each returns the process exit code; printed output goes to `out`.

use std::io::Write;
use std::path::{Path, PathBuf};

use refinery_core::oracle::{drive_refinement, DriveOutcome, DriveReport, OracleConfig, OracleError, OracleRegistry};
use refinery_core::prog_lang::{parse_program, parse_test_cases, render_program, run_tests, NumMode, DEFAULT_STEP_LIMIT};
use refinery_core::refinement::{parse_spec_file, Library, SpecFile, SpecTree, LAW_CATALOG};
use refinery_core::verifier::{DomainSpec, Verifier};

use crate::session::replay_script;
use crate::view::obligation_report;
use crate::{build_verifier, read, write, CliError, Config, EXIT_OK, EXIT_TESTS, EXIT_UNPROVED};

#[derive(Clone, Debug, Default)]
pub struct RefineArgs {
    pub spec: PathBuf,
    /// Oracle name; the configured one when absent.
    pub oracle: Option<String>,
    pub script: Option<PathBuf>,
    /// Program path; artifacts are written next to it.
    pub out: Option<PathBuf>,
    pub domains: Option<PathBuf>,
    pub library: Option<PathBuf>,
    /// Store the closed refinement in the library under this name.
    pub save_as: Option<String>,
}

pub fn load_spec(path: &Path) -> Result<SpecFile, CliError> {
    parse_spec_file(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn load_library(dir: Option<&Path>) -> Result<Library, CliError> {
    match dir {
        Some(d) => Library::open(d).map_err(|e| CliError::Input(e.to_string())),
        None => Ok(Library::new()),
    }
}

fn oracle_error(e: OracleError) -> CliError {
    CliError::Input(format!("oracle: {e}"))
}

/// Artifact paths derived from the program path.
pub fn artifact(program: &Path, suffix: &str) -> PathBuf {
    let mut s = program.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub struct Refined {
    pub tree: SpecTree,
    pub report: DriveReport,
}

/// Builds the oracle and drives the refinement of one specification.
pub fn refine_spec(
    spec: &SpecFile,
    oracle_name: &str,
    script: Option<String>,
    cfg: &Config,
    domains: DomainSpec,
    verifier: &Verifier,
    library: &Library,
) -> Result<Refined, CliError> {
    let ocfg = OracleConfig { script, remote: cfg.oracle.remote.clone(), domains };
    let mut oracle = OracleRegistry::default().build(oracle_name, &ocfg).map_err(oracle_error)?;
    let mut tree = SpecTree::new(spec.statement.clone());
    let report = drive_refinement(&mut tree, oracle.as_mut(), verifier, library, &cfg.limits());
    Ok(Refined { tree, report })
}

pub fn refine(args: &RefineArgs, cfg: &Config, out: &mut dyn Write) -> Result<i32, CliError> {
    let spec = load_spec(&args.spec)?;
    let script = args.script.as_deref().map(read).transpose()?;
    let oracle = args.oracle.clone().unwrap_or_else(|| if script.is_some() { "scripted".into() } else { cfg.oracle.name.clone() });
    let domains = cfg.domains(args.domains.as_deref())?;
    let verifier = build_verifier(cfg.verifier_config(domains.clone()))?;
    let mut library = load_library(args.library.as_deref())?;
    let Refined { tree, report } = refine_spec(&spec, &oracle, script, cfg, domains, &verifier, &library)?;

    let program_path = args.out.clone().unwrap_or_else(|| args.spec.with_extension("prog"));
    write(&artifact(&program_path, ".obligations.txt"), &obligation_report(&tree))?;
    write(&artifact(&program_path, ".transcript.jsonl"), &report.transcript_jsonl())?;
    write(&artifact(&program_path, ".session"), &(tree.script().join("\n") + "\n"))?;

    let _ = writeln!(out, "{}: {} after {} proposals, {} rejected", spec.name, outcome_label(report.outcome), report.proposals, report.failures);
    let c = report.final_obligations;
    let _ = writeln!(out, "obligations: {}/{} proved ({} checked in total)", c.proved, c.total(), report.checked.total());
    if let Some(reason) = &report.reason {
        let _ = writeln!(out, "stopped: {reason}");
    }
    if report.outcome == DriveOutcome::Exhausted {
        return Ok(EXIT_UNPROVED);
    }
    let program = render_program(&tree.extract_program().expect("no open nodes"));
    write(&program_path, &program)?;
    let _ = writeln!(out, "wrote {}\n{program}", program_path.display());
    if let Some(name) = &args.save_as {
        if report.outcome == DriveOutcome::FullyRefined {
            let entry = tree.to_entry(name).map_err(|e| CliError::Input(e.to_string()))?;
            library.insert(entry).map_err(|e| CliError::Input(e.to_string()))?;
            let _ = writeln!(out, "saved procedure {name}");
        }
    }
    Ok(if report.outcome == DriveOutcome::FullyRefined { EXIT_OK } else { EXIT_UNPROVED })
}

pub fn outcome_label(o: DriveOutcome) -> &'static str {
    match o {
        DriveOutcome::FullyRefined => "fully refined",
        DriveOutcome::Unverified => "refined with unproved obligations",
        DriveOutcome::Exhausted => "exhausted",
    }
}

#[derive(Clone, Debug, Default)]
pub struct CheckArgs {
    pub spec: PathBuf,
    /// A saved `.session` file or a plain refinement script.
    pub script: PathBuf,
    pub domains: Option<PathBuf>,
    pub library: Option<PathBuf>,
}

/// Rebuilds the tree from a script and discharges every obligation.
pub fn check(args: &CheckArgs, cfg: &Config, out: &mut dyn Write) -> Result<i32, CliError> {
    let spec = load_spec(&args.spec)?;
    let text = read(&args.script)?;
    let verifier = build_verifier(cfg.verifier_config(cfg.domains(args.domains.as_deref())?))?;
    let library = load_library(args.library.as_deref())?;
    let mut tree = SpecTree::new(spec.statement);
    replay_script(&mut tree, &text, &library)
        .map_err(|(line, m)| CliError::Input(format!("{} line {line}: {m}", args.script.display())))?;
    for id in tree.preorder() {
        if let Ok(obs) = tree.obligations_mut(id) {
            verifier.check_all(obs);
        }
    }
    let _ = write!(out, "{}", obligation_report(&tree));
    if tree.is_closed() {
        let _ = writeln!(out, "closed");
        Ok(EXIT_OK)
    } else {
        let _ = writeln!(out, "not closed: {} open nodes", tree.open_nodes().len());
        Ok(EXIT_UNPROVED)
    }
}

pub fn run(program: &Path, tests: &Path, mode: NumMode, out: &mut dyn Write) -> Result<i32, CliError> {
    let p = parse_program(&read(program)?).map_err(|e| CliError::Input(format!("{}: {e}", program.display())))?;
    let cases = parse_test_cases(&read(tests)?).map_err(|e| CliError::Input(format!("{}: {e}", tests.display())))?;
    let report = run_tests(&p, &cases, DEFAULT_STEP_LIMIT, mode);
    for (c, case) in report.cases.iter().zip(&cases) {
        match &c.message {
            None => {
                let _ = writeln!(out, "case {}: pass ({})", c.index + 1, case.input);
            }
            Some(m) => {
                let _ = writeln!(out, "case {}: FAIL ({}): {m}", c.index + 1, case.input);
            }
        }
    }
    let _ = writeln!(out, "{}/{} passed", report.passed(), report.total());
    Ok(if report.all_passed() { EXIT_OK } else { EXIT_TESTS })
}

pub fn laws(out: &mut dyn Write) -> i32 {
    for l in LAW_CATALOG {
        let _ = writeln!(out, "{}\n  syntax: {}\n  scheme: {}", l.keyword, l.syntax, l.scheme);
    }
    EXIT_OK
}
