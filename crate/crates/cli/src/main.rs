use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use refinery_cli::commands::{self, CheckArgs, RefineArgs};
use refinery_cli::corpus::{self, EvalArgs};
use refinery_cli::server::{self, AppState};
use refinery_cli::{build_verifier, CliError, Config};
use refinery_core::prog_lang::NumMode;

#[derive(Parser)]
#[command(name = "refinery", version, about = "Refine specifications into verified programs")]
struct Cli {
    /// Configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Verifier backends in order, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    backends: Option<Vec<String>>,
    /// Solver command for the smt backend.
    #[arg(long, global = true)]
    smt_cmd: Option<String>,
    /// Failed proposals at a node before its parent is backtracked.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Keep refinements whose obligations come back unknown.
    #[arg(long, global = true)]
    accept_unknown: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Refine a specification with an oracle.
    Refine {
        spec: PathBuf,
        #[arg(long)]
        oracle: Option<String>,
        #[arg(long)]
        script: Option<PathBuf>,
        /// Program output path; defaults to the spec path with `.prog`.
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long)]
        domains: Option<PathBuf>,
        #[arg(long)]
        library: Option<PathBuf>,
        #[arg(long)]
        save_as: Option<String>,
    },
    /// Replay a refinement script or saved session and discharge its obligations.
    Check {
        spec: PathBuf,
        script: PathBuf,
        #[arg(long)]
        domains: Option<PathBuf>,
        #[arg(long)]
        library: Option<PathBuf>,
    },
    /// Run a program against a test file.
    Run {
        program: PathBuf,
        tests: PathBuf,
        /// Round arithmetic to IEEE doubles instead of exact rationals.
        #[arg(long)]
        binary64: bool,
    },
    /// Refine, verify and test every problem of a corpus.
    Eval {
        corpus: PathBuf,
        #[arg(long)]
        oracle: Option<String>,
        #[arg(long)]
        domains: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        enlarge: usize,
        #[arg(long, default_value_t = 17)]
        seed: u64,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Serve the JSON session API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        domains: Option<PathBuf>,
        #[arg(long)]
        library: Option<PathBuf>,
    },
    /// List the refinement laws.
    Laws,
}

fn config(cli: &Cli) -> Result<Config, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None if Path::new("refinery.toml").is_file() => Config::load(Path::new("refinery.toml"))?,
        None => Config::default(),
    };
    if let Some(b) = &cli.backends {
        cfg.verifier.backends = b.clone();
    }
    if let Some(s) = &cli.smt_cmd {
        cfg.verifier.smt_cmd = Some(s.clone());
    }
    if let Some(k) = cli.k {
        cfg.driver.k = k;
    }
    cfg.driver.accept_unknown |= cli.accept_unknown;
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    let cfg = config(&cli)?;
    let out = &mut std::io::stdout().lock();
    match cli.command {
        Command::Refine { spec, oracle, script, out: program, domains, library, save_as } => {
            let args = RefineArgs { spec, oracle, script, out: program, domains, library, save_as };
            commands::refine(&args, &cfg, out)
        }
        Command::Check { spec, script, domains, library } => {
            commands::check(&CheckArgs { spec, script, domains, library }, &cfg, out)
        }
        Command::Run { program, tests, binary64 } => {
            let mode = if binary64 { NumMode::Binary64 } else { NumMode::Rational };
            commands::run(&program, &tests, mode, out)
        }
        Command::Eval { corpus, oracle, domains, enlarge, seed, json } => {
            let args = EvalArgs { corpus, oracle, domains, enlarge, seed };
            corpus::eval(&args, &cfg, json.as_deref(), out)
        }
        Command::Serve { port, host, domains, library } => {
            let verifier = build_verifier(cfg.verifier_config(cfg.domains(domains.as_deref())?))?;
            let library = commands::load_library(library.as_deref())?;
            let state = AppState::new(cfg, verifier, library);
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Input(e.to_string()))?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind((host.as_str(), port))
                    .await
                    .map_err(|e| CliError::Input(format!("{host}:{port}: {e}")))?;
                let _ = writeln!(out, "listening on http://{}", listener.local_addr().map_err(|e| CliError::Input(e.to_string()))?);
                let _ = out.flush();
                server::serve(listener, state).await.map_err(|e| CliError::Input(e.to_string()))
            })?;
            Ok(0)
        }
        Command::Laws => Ok(commands::laws(out)),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = dispatch(Cli::parse()).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
