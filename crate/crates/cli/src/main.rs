//! `soa`: validate workspaces, compute colimits and orbits, factor maps of
//! chain diagrams and of pro-complexes, and check certificates.
//!
//! Exit codes: 0 success, 1 schema error, 2 precondition violation,
//! 3 budget exhausted (the report is still written).

mod commands;
mod workspace;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;

use commands::{Outcome, Run, EXIT_PRECONDITION, EXIT_SCHEMA};
use soa_core::equichain::GeneratorClass;
use soa_core::profactor::ProClass;
use soa_core::ProbeMode;
use workspace::{Failure, Workspace, SCHEMA_VERSION};

#[derive(Parser, Debug)]
#[command(name = "soa", version, about = "Certified factorizations of diagrams of chain complexes and pro-complexes")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Prime for matrix entries (overrides the workspace config).
    #[arg(long, global = true, env = "SOA_P")]
    p: Option<u32>,
    /// Stage budget for factorizations.
    #[arg(long, global = true, env = "SOA_BUDGET")]
    budget: Option<usize>,
    /// When to probe for stabilization.
    #[arg(long, global = true, env = "SOA_PROBES", value_enum)]
    probes: Option<Probes>,
    /// Seed for sampled lifting problems.
    #[arg(long, global = true, env = "SOA_SEED")]
    seed: Option<u64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true, env = "SOA_OUT")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Probes {
    EveryStage,
    FinalOnly,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BaseClass {
    #[value(name = "I", alias = "i")]
    I,
    #[value(name = "J", alias = "j")]
    J,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProClassArg {
    #[value(name = "M", alias = "m")]
    M,
    #[value(name = "N", alias = "n")]
    N,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check every document of a workspace.
    Validate { workspace: PathBuf },
    /// Colimit of a set diagram.
    Colim {
        workspace: PathBuf,
        #[arg(long)]
        diagram: String,
    },
    /// Orbits of a set diagram, one per colimit point.
    Orbits {
        workspace: PathBuf,
        #[arg(long)]
        diagram: String,
    },
    /// Factor a chain map through the cells of class I or J.
    Factorize {
        workspace: PathBuf,
        #[arg(long)]
        map: String,
        #[arg(long, value_enum)]
        class: BaseClass,
    },
    /// Replay a certificate from a factorize or pro-factorize report and solve its lifting problems.
    CheckLift { report: PathBuf },
    /// Hom between two pro-objects.
    ProHom {
        workspace: PathBuf,
        #[arg(long)]
        source: String,
        #[arg(long)]
        target: String,
    },
    /// Reindex a pro-object over a finite directed poset.
    ProReindex {
        workspace: PathBuf,
        #[arg(long)]
        object: String,
    },
    /// Replace a pro-map by an isomorphic levelwise one.
    ProLevelwise {
        workspace: PathBuf,
        #[arg(long)]
        map: String,
    },
    /// Factor a map of pro-complexes with the constant (trivial) fibrations M or N.
    ProFactorize {
        workspace: PathBuf,
        #[arg(long)]
        map: String,
        #[arg(long, value_enum)]
        class: ProClassArg,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Colim { .. } => "colim",
            Command::Orbits { .. } => "orbits",
            Command::Factorize { .. } => "factorize",
            Command::CheckLift { .. } => "check-lift",
            Command::ProHom { .. } => "pro-hom",
            Command::ProReindex { .. } => "pro-reindex",
            Command::ProLevelwise { .. } => "pro-levelwise",
            Command::ProFactorize { .. } => "pro-factorize",
        }
    }

    fn workspace(&self) -> Option<&PathBuf> {
        match self {
            Command::Validate { workspace }
            | Command::Colim { workspace, .. }
            | Command::Orbits { workspace, .. }
            | Command::Factorize { workspace, .. }
            | Command::ProHom { workspace, .. }
            | Command::ProReindex { workspace, .. }
            | Command::ProLevelwise { workspace, .. }
            | Command::ProFactorize { workspace, .. } => Some(workspace),
            Command::CheckLift { .. } => None,
        }
    }
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Schema(format!("cannot read {}: {e}", path.display())))
}

/// Flags and environment first, then the workspace config, then defaults.
fn resolve_run(cli: &Cli, ws: Option<&mut Workspace>) -> Result<Run, Failure> {
    let cfg = ws.as_ref().map(|w| w.config.clone()).unwrap_or_default();
    let probes = match cli.probes {
        Some(Probes::EveryStage) => ProbeMode::EveryStage,
        Some(Probes::FinalOnly) => ProbeMode::FinalOnly,
        None => cfg.probes.unwrap_or(ProbeMode::EveryStage),
    };
    let p = cli.p.or(cfg.p).unwrap_or(2);
    if let Some(w) = ws {
        w.config.p = Some(p);
        w.p()?;
    }
    Ok(Run { p, budget: cli.budget.or(cfg.budget).unwrap_or(8), probes, seed: cli.seed.or(cfg.seed).unwrap_or(0) })
}

fn execute(cli: &Cli) -> Result<(Run, Outcome), Failure> {
    let mut ws = match cli.command.workspace() {
        Some(path) => Some(workspace::parse(&read(path)?)?),
        None => None,
    };
    let run = resolve_run(cli, ws.as_mut())?;
    let outcome = match (&cli.command, ws.as_ref()) {
        (Command::Validate { .. }, Some(ws)) => commands::validate(ws),
        (Command::Colim { diagram, .. }, Some(ws)) => commands::colim(ws, diagram)?,
        (Command::Orbits { diagram, .. }, Some(ws)) => commands::orbit_report(ws, diagram)?,
        (Command::Factorize { map, class, .. }, Some(ws)) => {
            let class = match class {
                BaseClass::I => GeneratorClass::I,
                BaseClass::J => GeneratorClass::J,
            };
            commands::factorize(ws, run, map, class)?
        }
        (Command::CheckLift { report }, _) => {
            let value: Value =
                serde_json::from_str(&read(report)?).map_err(|e| Failure::Schema(format!("report {}: {e}", report.display())))?;
            commands::check_lift(&value, run)?
        }
        (Command::ProHom { source, target, .. }, Some(ws)) => commands::pro_hom(ws, source, target)?,
        (Command::ProReindex { object, .. }, Some(ws)) => commands::pro_reindex(ws, object)?,
        (Command::ProLevelwise { map, .. }, Some(ws)) => commands::pro_levelwise(ws, map)?,
        (Command::ProFactorize { map, class, .. }, Some(ws)) => {
            let class = match class {
                ProClassArg::M => ProClass::M,
                ProClassArg::N => ProClass::N,
            };
            commands::pro_factor(ws, run, map, class)?
        }
        (_, None) => unreachable!("every other command reads a workspace"),
    };
    Ok((run, outcome))
}

fn emit(cli: &Cli, report: &Value) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    match &cli.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_SCHEMA as u8 } else { 0 });
        }
    };
    let command = cli.command.name();
    let (report, code, summary) = match execute(&cli) {
        Ok((run, outcome)) => (
            json!({ "schema_version": SCHEMA_VERSION, "command": command, "config": run.to_json(), "result": outcome.result }),
            outcome.exit,
            outcome.summary,
        ),
        Err(f) => {
            let (kind, code) = match f {
                Failure::Schema(_) => ("schema", EXIT_SCHEMA),
                Failure::Precondition(_) => ("precondition", EXIT_PRECONDITION),
            };
            let report = json!({ "schema_version": SCHEMA_VERSION, "command": command, "error": { "kind": kind, "message": f.message() } });
            (report, code, format!("{kind} error: {}", f.message()))
        }
    };
    eprintln!("{command}: {summary}");
    if let Err(e) = emit(&cli, &report) {
        eprintln!("{e:#}");
        return ExitCode::from(EXIT_SCHEMA as u8);
    }
    ExitCode::from(code as u8)
}
