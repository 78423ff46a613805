//! The `tvlp` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use tvlp_core::consequence::{apply_operator, fitting_lfp, ConsequenceError, LfpOptions, OperatorKind};
use tvlp_core::debugger::{
    DebugError, Debugger, DiagnosisKind, InterpretationOracle, Oracle, OracleError, Question, Transcript, TranscriptOracle, Verdict,
    VerdictSource,
};
use tvlp_core::interp::{load_interpretation, InterpError, Interpretation, SpecRegistry};
use tvlp_core::modelcheck::{check, verify_synopsis, CheckError, CheckOptions, Condition, ModelReport};
use tvlp_core::slddnf::{ground_sets, solve, SelectionRule, SolveError, SolveOptions};
use tvlp_core::syntax::{completion, parse_atom, parse_goal, parse_program, to_disjunctive, DisjunctiveProgram, SyntaxError};
use tvlp_core::universe::UniverseError;
use tvlp_core::{PredKey, Universe, UniverseSpec};

use crate::json;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{source}")]
    Syntax { path: String, source: SyntaxError },
    #[error("goal: {0}")]
    Goal(SyntaxError),
    #[error("{path}: {source}")]
    Interp { path: String, source: InterpError },
    #[error(transparent)]
    Universe(#[from] UniverseError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Consequence(#[from] ConsequenceError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Debug(#[from] DebugError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Debug(DebugError::NotExhaustive { .. }) => EXIT_INCONCLUSIVE,
            _ => EXIT_USAGE,
        }
    }
}

fn parse_rule(s: &str) -> Result<SelectionRule, String> {
    SelectionRule::parse(s).ok_or_else(|| format!("unknown rule `{s}`; use fair, strict_leftmost or leftmost_delay"))
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ConditionArg {
    All,
    Model,
    Strong,
    Completion,
    StrongCompletion,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OpArg {
    T3,
    T3plus,
    T3minus,
    Fitting,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SetArg {
    All,
    Ss,
    Ff,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OracleArg {
    Human,
    Interp,
    Transcript,
}

#[derive(Debug, Parser)]
#[command(name = "tvlp", version, about = "Three-valued semantics for pure logic programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Engine {
    /// fair, strict_leftmost or leftmost_delay
    #[arg(long, value_parser = parse_rule, default_value = "leftmost_delay")]
    pub rule: SelectionRule,
    /// Maximum number of node expansions
    #[arg(long, default_value_t = 100_000)]
    pub budget: u64,
}

impl Engine {
    fn options(&self) -> SolveOptions {
        SolveOptions::new(self.rule, self.budget)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the program with one disjunctive clause per predicate
    Normalize {
        #[arg(long)]
        program: PathBuf,
    },
    /// Print the completion of the program
    Complete {
        #[arg(long)]
        program: PathBuf,
    },
    /// Check an interpretation against the model conditions
    Check {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        interp: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        condition: ConditionArg,
        /// Also justify every true and false atom clause by clause
        #[arg(long)]
        synopsis: bool,
        #[arg(long, default_value_t = 5)]
        max_violations: usize,
        #[arg(long)]
        json: bool,
    },
    /// Apply an immediate consequence operator or compute the least fixpoint
    Fixpoint {
        #[arg(long)]
        program: PathBuf,
        #[arg(long, value_enum)]
        op: OpArg,
        /// Input interpretation; for fitting only its universe is used
        #[arg(long)]
        interp: Option<PathBuf>,
        /// Universe spec such as "depth=2 functors=a/0,f/1"
        #[arg(long)]
        universe: Option<String>,
    },
    /// Run a goal under SLDDNF resolution
    Solve {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        goal: String,
        #[command(flatten)]
        engine: Engine,
        /// Collect every answer instead of stopping at the first
        #[arg(long)]
        all: bool,
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        json: bool,
    },
    /// Classify every ground atom as succeeding, finitely failing or neither
    Enumerate {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        interp: Option<PathBuf>,
        #[arg(long)]
        universe: Option<String>,
        #[arg(long, value_enum, default_value = "all")]
        set: SetArg,
        /// Restrict to these predicates, written name/arity
        #[arg(long)]
        pred: Vec<String>,
        #[command(flatten)]
        engine: Engine,
    },
    /// Find the clause responsible for a wrong or missing answer
    Debug {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        goal: String,
        #[arg(long, value_enum, default_value = "human")]
        oracle: OracleArg,
        #[arg(long)]
        interp: Option<PathBuf>,
        /// Transcript to replay with --oracle transcript
        #[arg(long)]
        transcript: Option<PathBuf>,
        #[arg(long)]
        save_transcript: Option<PathBuf>,
        #[command(flatten)]
        engine: Engine,
        #[arg(long)]
        json: bool,
    },
    /// Serve the HTTP session API
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

pub fn load_program_text(path: &Path) -> Result<(String, DisjunctiveProgram), CliError> {
    let text = read(path)?;
    let parsed = parse_program(&text).map_err(|source| CliError::Syntax { path: path.display().to_string(), source })?;
    Ok((text, to_disjunctive(&parsed)))
}

fn load_program(path: &Path) -> Result<DisjunctiveProgram, CliError> {
    Ok(load_program_text(path)?.1)
}

fn load_interp(path: &Path, universe: Option<Arc<Universe>>) -> Result<Interpretation, CliError> {
    load_interpretation(&read(path)?, &SpecRegistry::standard(), universe)
        .map_err(|source| CliError::Interp { path: path.display().to_string(), source })
}

fn universe_for(
    program: &DisjunctiveProgram,
    interp: Option<&Path>,
    spec: Option<&str>,
) -> Result<Arc<Universe>, CliError> {
    match (spec, interp) {
        (Some(s), _) => Ok(Arc::new(s.parse::<UniverseSpec>()?.build()?)),
        (None, Some(p)) => Ok(load_interp(p, None)?.universe().clone()),
        (None, None) if program.predicates().iter().all(|k| k.arity == 0) => Ok(Arc::new(Universe::empty())),
        (None, None) => Err(CliError::Usage("give --universe or --interp to bound the ground atoms".into())),
    }
}

fn parse_single_goal(goal: &str) -> Result<tvlp_core::Atom, CliError> {
    parse_atom(goal).map_err(CliError::Goal)
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn print_report(out: &mut dyn Write, r: &ModelReport) -> std::io::Result<()> {
    writeln!(out, "{}: {}", r.condition, yes_no(r.holds))?;
    for v in &r.violations {
        writeln!(out, "  {v}")?;
    }
    if r.violation_count > r.violations.len() {
        writeln!(out, "  ... {} violations in total", r.violation_count)?;
    }
    Ok(())
}

/// Asks a person on a terminal.
pub struct StdinOracle<'a> {
    pub input: &'a mut dyn BufRead,
    pub output: &'a mut dyn Write,
}

impl Oracle for StdinOracle<'_> {
    fn ask(&mut self, q: &Question) -> Result<Verdict, OracleError> {
        loop {
            let _ = write!(self.output, "{q}? [c]orrect/[e]rroneous/[i]nadmissible: ");
            let _ = self.output.flush();
            let mut line = String::new();
            match self.input.read_line(&mut line) {
                Ok(0) | Err(_) => return Err(OracleError::Aborted),
                Ok(_) => {}
            }
            if let Some(v) = Verdict::parse(&line) {
                return Ok(v);
            }
            let _ = writeln!(self.output, "please answer c, e or i");
        }
    }

    fn source(&self) -> VerdictSource {
        VerdictSource::Human
    }
}

/// Runs the command line with explicit streams. `serve` is not handled
/// here; see the binary.
pub fn run<I, T>(args: I, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match execute(cli.command, input, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn io(e: std::io::Error) -> CliError {
    CliError::Io { path: "<output>".into(), source: e }
}

pub fn execute(cmd: Command, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<i32, CliError> {
    match cmd {
        Command::Normalize { program } => {
            let p = load_program(&program)?;
            write!(out, "{p}").map_err(io)?;
            for w in &p.warnings {
                writeln!(out, "% warning: {w}").map_err(io)?;
            }
            Ok(EXIT_OK)
        }
        Command::Complete { program } => {
            let p = load_program(&program)?;
            write!(out, "{}", completion(&p)).map_err(io)?;
            Ok(EXIT_OK)
        }
        Command::Check { program, interp, condition, synopsis, max_violations, json } => {
            let p = load_program(&program)?;
            let m = load_interp(&interp, None)?;
            let opts = CheckOptions { max_violations, ..CheckOptions::default() };
            let conditions: Vec<(Condition, bool)> = match condition {
                ConditionArg::All if p.is_definite() => vec![
                    (Condition::Model, true),
                    (Condition::StrongModel, false),
                    (Condition::CompletionModel, true),
                    (Condition::StrongCompletionModel, false),
                ],
                ConditionArg::All => vec![(Condition::CompletionModel, true), (Condition::StrongCompletionModel, false)],
                ConditionArg::Model => vec![(Condition::Model, true)],
                ConditionArg::Strong => vec![(Condition::StrongModel, true)],
                ConditionArg::Completion => vec![(Condition::CompletionModel, true)],
                ConditionArg::StrongCompletion => vec![(Condition::StrongCompletionModel, true)],
            };
            let mut ok = true;
            let mut reports = Vec::new();
            for (c, decisive) in conditions {
                let r = check(c, &p, &m, &opts)?;
                ok &= r.holds || !decisive;
                reports.push(r);
            }
            let syn = if synopsis { Some(verify_synopsis(&p, &m, &opts)?) } else { None };
            if let Some(s) = &syn {
                ok &= s.holds;
            }
            if json {
                let v = serde_json::json!({
                    "reports": reports.iter().map(json::report).collect::<Vec<_>>(),
                    "synopsis": syn.as_ref().map(|s| serde_json::json!({"holds": s.holds, "true_atoms": s.true_atoms, "false_atoms": s.false_atoms, "failure_count": s.failure_count})),
                });
                writeln!(out, "{v:#}").map_err(io)?;
            } else {
                if !p.is_definite() && matches!(condition, ConditionArg::All) {
                    writeln!(out, "program uses negation; only the completion conditions apply").map_err(io)?;
                }
                for r in &reports {
                    print_report(out, r).map_err(io)?;
                }
                if let Some(s) = &syn {
                    write!(out, "synopsis: {s}").map_err(io)?;
                }
            }
            Ok(if ok { EXIT_OK } else { EXIT_FAILED })
        }
        Command::Fixpoint { program, op, interp, universe } => {
            let p = load_program(&program)?;
            match op {
                OpArg::Fitting => {
                    let u = universe_for(&p, interp.as_deref(), universe.as_deref())?;
                    let r = fitting_lfp(&p, u, &LfpOptions::default())?;
                    write!(out, "{}", r.interp.save().map_err(|source| CliError::Interp { path: "<lfp>".into(), source })?)
                        .map_err(io)?;
                    writeln!(
                        out,
                        "% {} after {} iterations",
                        if r.converged { "converged" } else { "not converged" },
                        r.iterations
                    )
                    .map_err(io)?;
                    Ok(if r.converged { EXIT_OK } else { EXIT_INCONCLUSIVE })
                }
                _ => {
                    let path = interp.ok_or_else(|| CliError::Usage("this operator needs --interp".into()))?;
                    let u = match universe.as_deref() {
                        Some(s) => Some(Arc::new(s.parse::<UniverseSpec>()?.build()?)),
                        None => None,
                    };
                    let m = load_interp(&path, u)?;
                    let kind = match op {
                        OpArg::T3 => OperatorKind::T3,
                        OpArg::T3plus => OperatorKind::T3Plus,
                        _ => OperatorKind::T3Minus,
                    };
                    let next = apply_operator(kind, &p, &m)?;
                    write!(out, "{}", next.save().map_err(|source| CliError::Interp { path: "<result>".into(), source })?)
                        .map_err(io)?;
                    Ok(EXIT_OK)
                }
            }
        }
        Command::Solve { program, goal, engine, all, trace, json } => {
            let p = load_program(&program)?;
            let goal = parse_goal(&goal).map_err(CliError::Goal)?;
            let mut opts = engine.options();
            opts.all_answers = all;
            opts.trace = trace;
            let o = solve(&p, &goal, &opts)?;
            if json {
                writeln!(out, "{:#}", json::outcome(&o)).map_err(io)?;
            } else {
                for line in &o.trace {
                    writeln!(out, "{line}").map_err(io)?;
                }
                writeln!(out, "{o}").map_err(io)?;
            }
            Ok(if o.budget_exhausted { EXIT_INCONCLUSIVE } else { EXIT_OK })
        }
        Command::Enumerate { program, interp, universe, set, pred, engine } => {
            let p = load_program(&program)?;
            let u = universe_for(&p, interp.as_deref(), universe.as_deref())?;
            let preds: Vec<PredKey> = if pred.is_empty() {
                p.predicates().to_vec()
            } else {
                pred.iter()
                    .map(|s| {
                        p.predicates()
                            .iter()
                            .find(|k| k.to_string() == *s)
                            .cloned()
                            .ok_or_else(|| CliError::Usage(format!("no predicate {s} in the program")))
                    })
                    .collect::<Result<_, _>>()?
            };
            let sets = ground_sets(&p, &u, &preds, &engine.options())?;
            let mut section = |title: &str, atoms: &[tvlp_core::Atom]| -> std::io::Result<()> {
                writeln!(out, "{title} ({}):", atoms.len())?;
                for a in atoms {
                    writeln!(out, "  {a}")?;
                }
                Ok(())
            };
            if matches!(set, SetArg::All | SetArg::Ss) {
                section("success set", &sets.success).map_err(io)?;
            }
            if matches!(set, SetArg::All | SetArg::Ff) {
                section("finite failure set", &sets.finite_failure).map_err(io)?;
            }
            if matches!(set, SetArg::All) {
                section("floundered", &sets.floundered).map_err(io)?;
                section("unresolved", &sets.unresolved).map_err(io)?;
            }
            Ok(if sets.unresolved.is_empty() { EXIT_OK } else { EXIT_INCONCLUSIVE })
        }
        Command::Debug { program, goal, oracle, interp, transcript, save_transcript, engine, json } => {
            let p = Arc::new(load_program(&program)?);
            let goal = parse_single_goal(&goal)?;
            let mut d = Debugger::new(p, engine.options());
            let mut cache = BTreeMap::new();
            let result = match oracle {
                OracleArg::Interp => {
                    let path = interp.ok_or_else(|| CliError::Usage("--oracle interp needs --interp".into()))?;
                    let m = load_interp(&path, None)?;
                    d.debug_goal(&goal, &mut InterpretationOracle::new(&m), &mut cache)?
                }
                OracleArg::Transcript => {
                    let path = transcript.ok_or_else(|| CliError::Usage("--oracle transcript needs --transcript".into()))?;
                    let t = Transcript::parse(&read(&path)?)?;
                    d.debug_goal(&goal, &mut TranscriptOracle::new(&t), &mut cache)?
                }
                OracleArg::Human => {
                    let mut human = StdinOracle { input, output: out };
                    d.debug_goal(&goal, &mut human, &mut cache)?
                }
            };
            if let Some(path) = save_transcript {
                std::fs::write(&path, result.transcript.to_string())
                    .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
            }
            if json {
                writeln!(out, "{:#}", json::debug_result(&result)).map_err(io)?;
            } else {
                if !matches!(oracle, OracleArg::Human) && !result.transcript.is_empty() {
                    writeln!(out, "questions:").map_err(io)?;
                    for line in result.transcript.to_string().lines() {
                        writeln!(out, "  {line}").map_err(io)?;
                    }
                }
                match &result.diagnosis {
                    Some(diag) => writeln!(out, "{diag}").map_err(io)?,
                    None => writeln!(out, "{}", result.summary).map_err(io)?,
                }
            }
            let bug = result.diagnosis.as_ref().is_some_and(|d| d.kind != DiagnosisKind::GoalInadmissibleNoBug);
            Ok(if bug { EXIT_FAILED } else { EXIT_OK })
        }
        Command::Serve { .. } => Err(CliError::Usage("serve runs from the binary".into())),
    }
}
