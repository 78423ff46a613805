//! Declarative debugging with three-valued verdicts: wrong answers are
//! diagnosed on proof trees, missing answers on call-answer trees, and a
//! negation switches from one kind of tree to the other.
//!
//! The search is top-down: the first erroneous child is entered, and
//! inadmissible children are never questioned further. Every question is
//! asked at most once per debugger; repeated questions are served from the
//! cache and do not appear in the transcript again.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use crate::eval::literal_value;
use crate::interp::{InterpError, Interpretation};
use crate::slddnf::{solve, Answer, Outcome, SolveError, SolveOptions, StepKind};
use crate::syntax::{builtin_cmp, parse_goal, ClauseRef, DisjunctiveProgram, Literal, SyntaxError};
use crate::term::{Atom, Bindings, Renamer, Term, Var};
use crate::truth::TruthValue::{self, F, I, T};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    Correct,
    Erroneous,
    Inadmissible,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Correct => "correct",
            Verdict::Erroneous => "erroneous",
            Verdict::Inadmissible => "inadmissible",
        }
    }

    pub fn parse(s: &str) -> Option<Verdict> {
        match s.trim().to_ascii_lowercase().as_str() {
            "correct" | "c" => Some(Verdict::Correct),
            "erroneous" | "e" => Some(Verdict::Erroneous),
            "inadmissible" | "i" => Some(Verdict::Inadmissible),
            _ => None,
        }
    }

    pub fn of_truth(v: TruthValue) -> Verdict {
        match v {
            T => Verdict::Correct,
            F => Verdict::Erroneous,
            I => Verdict::Inadmissible,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Question {
    /// Is this ground literal true in the intended interpretation?
    Valid(Literal),
    /// Did this call return all of its correct answers?
    Complete { call: Literal, answers: Vec<Literal> },
}

impl fmt::Display for Question {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Question::Valid(l) => write!(f, "valid {l}"),
            Question::Complete { call, answers } => {
                let parts: Vec<String> = answers.iter().map(|a| a.to_string()).collect();
                write!(f, "complete {call} -> {{{}}}", parts.join(", "))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VerdictSource {
    Human,
    Interpretation,
    Transcript,
}

impl VerdictSource {
    pub fn name(self) -> &'static str {
        match self {
            VerdictSource::Human => "human",
            VerdictSource::Interpretation => "interpretation",
            VerdictSource::Transcript => "transcript",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("waiting for an answer to: {0}")]
    Pending(Question),
    #[error("transcript exhausted at: {0}")]
    TranscriptExhausted(Question),
    #[error("transcript has `{expected}` where the debugger asks `{asked}`")]
    TranscriptMismatch { expected: String, asked: String },
    #[error("cannot judge `{question}`: {reason}")]
    Undecidable { question: String, reason: String },
    #[error("debugging aborted")]
    Aborted,
}

pub trait Oracle {
    fn ask(&mut self, q: &Question) -> Result<Verdict, OracleError>;

    fn source(&self) -> VerdictSource;

    /// A true instance of `call` that `answers` do not cover, if the oracle
    /// can name one.
    fn missing_instance(&mut self, _call: &Literal, _answers: &[Literal]) -> Option<Literal> {
        None
    }
}

/// Answers from an intended interpretation.
pub struct InterpretationOracle<'a> {
    m: &'a Interpretation,
    cap: u128,
}

impl<'a> InterpretationOracle<'a> {
    pub fn new(m: &'a Interpretation) -> InterpretationOracle<'a> {
        InterpretationOracle { m, cap: 1_000_000 }
    }

    /// Ground instances of `call` in the universe with their values.
    fn instances(&self, call: &Literal) -> Result<Vec<(Literal, TruthValue)>, String> {
        let vars = call.vars();
        let terms = self.m.universe().terms();
        let count = (terms.len() as u128).checked_pow(vars.len() as u32).unwrap_or(u128::MAX);
        if count > self.cap {
            return Err(format!("{count} ground instances"));
        }
        let mut out = Vec::new();
        let mut digits = vec![0usize; vars.len()];
        if !vars.is_empty() && terms.is_empty() {
            return Ok(out);
        }
        loop {
            let inst = call.map_vars(&mut |v| terms[digits[vars.iter().position(|w| w == v).expect("var")]].clone());
            match literal_value(self.m, &inst) {
                Ok(v) => out.push((inst, v)),
                Err(InterpError::OutsideUniverse(_)) => {}
                Err(e) => return Err(e.to_string()),
            }
            let mut k = digits.len();
            loop {
                if k == 0 {
                    return Ok(out);
                }
                k -= 1;
                digits[k] += 1;
                if digits[k] < terms.len() {
                    break;
                }
                digits[k] = 0;
            }
        }
    }

    fn first_missing(&self, call: &Literal, answers: &[Literal]) -> Result<Option<Literal>, String> {
        Ok(self
            .instances(call)?
            .into_iter()
            .find(|(inst, v)| *v == T && !answers.iter().any(|a| literals_unify(a, inst)))
            .map(|(inst, _)| inst))
    }
}

impl Oracle for InterpretationOracle<'_> {
    fn ask(&mut self, q: &Question) -> Result<Verdict, OracleError> {
        let undecidable = |reason: String| OracleError::Undecidable { question: q.to_string(), reason };
        match q {
            Question::Valid(l) => Ok(Verdict::of_truth(literal_value(self.m, l).map_err(|e| undecidable(e.to_string()))?)),
            Question::Complete { call, answers } => {
                let inst = self.instances(call).map_err(undecidable)?;
                if inst.iter().all(|(_, v)| *v == I) {
                    return Ok(Verdict::Inadmissible);
                }
                let missing = self.first_missing(call, answers).map_err(undecidable)?;
                Ok(if missing.is_some() { Verdict::Erroneous } else { Verdict::Correct })
            }
        }
    }

    fn source(&self) -> VerdictSource {
        VerdictSource::Interpretation
    }

    fn missing_instance(&mut self, call: &Literal, answers: &[Literal]) -> Option<Literal> {
        self.first_missing(call, answers).ok().flatten()
    }
}

/// Verdicts given so far by a person; anything else is reported as pending.
#[derive(Clone, Debug, Default)]
pub struct ScriptedOracle {
    answers: BTreeMap<String, Verdict>,
}

impl ScriptedOracle {
    pub fn new() -> ScriptedOracle {
        ScriptedOracle::default()
    }

    pub fn answer(&mut self, question: &str, v: Verdict) {
        self.answers.insert(question.to_string(), v);
    }

    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }
}

impl Oracle for ScriptedOracle {
    fn ask(&mut self, q: &Question) -> Result<Verdict, OracleError> {
        self.answers.get(&q.to_string()).copied().ok_or_else(|| OracleError::Pending(q.clone()))
    }

    fn source(&self) -> VerdictSource {
        VerdictSource::Human
    }
}

/// Replays a recorded transcript in order.
pub struct TranscriptOracle {
    entries: VecDeque<TranscriptEntry>,
    witnesses: Vec<(String, String)>,
}

impl TranscriptOracle {
    pub fn new(t: &Transcript) -> TranscriptOracle {
        TranscriptOracle { entries: t.entries.iter().cloned().collect(), witnesses: t.witnesses.clone() }
    }
}

impl Oracle for TranscriptOracle {
    fn ask(&mut self, q: &Question) -> Result<Verdict, OracleError> {
        let asked = q.to_string();
        let e = self.entries.pop_front().ok_or_else(|| OracleError::TranscriptExhausted(q.clone()))?;
        if e.question != asked {
            return Err(OracleError::TranscriptMismatch { expected: e.question, asked });
        }
        Ok(e.verdict)
    }

    fn source(&self) -> VerdictSource {
        VerdictSource::Transcript
    }

    fn missing_instance(&mut self, call: &Literal, _answers: &[Literal]) -> Option<Literal> {
        let call = call.to_string();
        let (_, atom) = self.witnesses.iter().find(|(c, _)| *c == call)?;
        parse_goal(atom).ok()?.into_iter().next()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub question: String,
    pub verdict: Verdict,
}

/// Questions and verdicts in the order asked, then any missing atoms the
/// oracle named. The text form has one `question; verdict` record per line
/// and one `uncovered call => atom` line per named atom.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
    pub witnesses: Vec<(String, String)>,
}

impl Transcript {
    pub fn parse(text: &str) -> Result<Transcript, DebugError> {
        let mut t = Transcript::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || DebugError::TranscriptFormat { line: i + 1 };
            if let Some(rest) = line.strip_prefix("uncovered ") {
                let (call, atom) = rest.rsplit_once(" => ").ok_or_else(bad)?;
                t.witnesses.push((call.trim().to_string(), atom.trim().to_string()));
                continue;
            }
            let (q, v) = line.rsplit_once(';').ok_or_else(bad)?;
            let verdict = Verdict::parse(v).ok_or_else(bad)?;
            t.entries.push(TranscriptEntry { question: q.trim().to_string(), verdict });
        }
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(f, "{}; {}", e.question, e.verdict)?;
        }
        for (call, atom) in &self.witnesses {
            writeln!(f, "uncovered {call} => {atom}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DebugError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("debugging needs a single positive goal atom")]
    GoalShape,
    #[error("goal {goal} has no answer number {index}")]
    NoSuchAnswer { goal: String, index: usize },
    #[error("{0} is not ground in the proof tree")]
    NonGround(String),
    #[error("the search for {call} was not exhaustive ({status}), so missing answers cannot be told from unfound ones")]
    NotExhaustive { call: String, status: String },
    #[error("the tree would exceed {0} nodes")]
    TooLarge(usize),
    #[error("the program changed since the tree was built")]
    Stale,
    #[error("transcript line {line}: expected `question; verdict`")]
    TranscriptFormat { line: usize },
    #[error("no node {0}")]
    NoSuchNode(usize),
}

fn literals_unify(general: &Literal, ground: &Literal) -> bool {
    let mut b = Bindings::new();
    match (general, ground) {
        (Literal::Pos(a), Literal::Pos(x)) | (Literal::Neg(a), Literal::Neg(x)) => {
            a.pred == x.pred && a.args.len() == x.args.len() && a.args.iter().zip(&x.args).all(|(s, t)| b.unify(s, t))
        }
        (Literal::Eq(a, c), Literal::Eq(x, y)) => b.unify(a, x) && b.unify(c, y),
        _ => false,
    }
}

fn canonical(l: &Literal) -> String {
    match l {
        Literal::Pos(a) => a.canonical(),
        Literal::Neg(a) => format!("not {}", a.canonical()),
        Literal::Eq(..) => l.to_string(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    /// A proved ground literal and the clause instance used for it.
    Proof { literal: Literal, clause: Option<ClauseRef>, body: Vec<Literal> },
    /// A call with every answer it returned.
    Call { call: Literal, answers: Vec<Literal>, clauses: Vec<ClauseRef> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DebugNode {
    pub id: usize,
    pub kind: NodeKind,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Root of the tree of the other kind, entered through a negation.
    pub bridge: Option<usize>,
}

impl DebugNode {
    pub fn literal(&self) -> &Literal {
        match &self.kind {
            NodeKind::Proof { literal, .. } => literal,
            NodeKind::Call { call, .. } => call,
        }
    }

    pub fn question(&self) -> Question {
        match &self.kind {
            NodeKind::Proof { literal, .. } => Question::Valid(literal.clone()),
            NodeKind::Call { call, answers, .. } => Question::Complete { call: call.clone(), answers: answers.clone() },
        }
    }

    pub fn is_proof(&self) -> bool {
        matches!(self.kind, NodeKind::Proof { .. })
    }

    /// `head :- body.` for proof nodes built from a clause.
    pub fn instance(&self) -> Option<String> {
        match &self.kind {
            NodeKind::Proof { literal, clause: Some(_), body } => {
                if body.is_empty() {
                    Some(format!("{literal}."))
                } else {
                    let parts: Vec<String> = body.iter().map(|l| l.to_string()).collect();
                    Some(format!("{literal} :- {}.", parts.join(", ")))
                }
            }
            _ => None,
        }
    }
}

impl fmt::Display for DebugNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            NodeKind::Proof { literal, clause, .. } => {
                write!(f, "{literal}")?;
                if let Some(c) = clause {
                    write!(f, "  [{c}]")?;
                }
                Ok(())
            }
            NodeKind::Call { .. } => write!(f, "{}", self.question().to_string().trim_start_matches("complete ")),
        }
    }
}

/// Proof trees and call-answer trees in one arena.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DebugTree {
    pub nodes: Vec<DebugNode>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeSlice {
    pub node: DebugNode,
    pub children: Vec<DebugNode>,
    pub total_children: usize,
    pub offset: usize,
}

impl DebugTree {
    pub fn node(&self, id: usize) -> Result<&DebugNode, DebugError> {
        self.nodes.get(id).ok_or(DebugError::NoSuchNode(id))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, kind: NodeKind, parent: Option<usize>) -> usize {
        let id = self.nodes.len();
        self.nodes.push(DebugNode { id, kind, parent, children: Vec::new(), bridge: None });
        if let Some(p) = parent {
            self.nodes[p].children.push(id);
        }
        id
    }

    /// A node and one page of its children. Past the end the page is empty.
    pub fn slice(&self, id: usize, offset: usize, limit: usize) -> Result<TreeSlice, DebugError> {
        let node = self.node(id)?.clone();
        let children = node.children.iter().skip(offset).take(limit).map(|&c| self.nodes[c].clone()).collect();
        Ok(TreeSlice { total_children: node.children.len(), node, children, offset })
    }

    /// Indented text rendering of the subtree at `id`, bridges included.
    pub fn render(&self, id: usize) -> String {
        let mut out = String::new();
        self.render_into(id, 0, &mut out);
        out
    }

    fn render_into(&self, id: usize, depth: usize, out: &mut String) {
        let n = &self.nodes[id];
        out.push_str(&format!("{}{}\n", "  ".repeat(depth), n));
        for &c in &n.children {
            self.render_into(c, depth + 1, out);
        }
        if let Some(b) = n.bridge {
            out.push_str(&format!("{}via negation:\n", "  ".repeat(depth + 1)));
            self.render_into(b, depth + 2, out);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DiagnosisKind {
    /// An erroneous node whose children are all correct.
    IncorrectClauseInstance,
    /// An erroneous node with no erroneous child but an inadmissible one.
    InadmissibilityTransition,
    /// A true atom that no clause instance with a true body covers.
    UncoveredAtom,
    /// The goal itself is inadmissible, so the bug is in whatever called it.
    GoalInadmissibleNoBug,
}

impl DiagnosisKind {
    pub fn name(self) -> &'static str {
        match self {
            DiagnosisKind::IncorrectClauseInstance => "incorrect_clause_instance",
            DiagnosisKind::InadmissibilityTransition => "inadmissibility_transition",
            DiagnosisKind::UncoveredAtom => "uncovered_atom",
            DiagnosisKind::GoalInadmissibleNoBug => "goal_inadmissible_no_bug",
        }
    }

    fn describe(self) -> &'static str {
        match self {
            DiagnosisKind::IncorrectClauseInstance => "incorrect clause instance",
            DiagnosisKind::InadmissibilityTransition => "inadmissibility transition",
            DiagnosisKind::UncoveredAtom => "uncovered atom",
            DiagnosisKind::GoalInadmissibleNoBug => "goal is inadmissible; the bug is elsewhere",
        }
    }
}

impl fmt::Display for DiagnosisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnosis {
    pub kind: DiagnosisKind,
    /// The buggy node.
    pub node: usize,
    pub literal: Literal,
    pub clause: Option<ClauseRef>,
    pub instance: Option<String>,
    /// For uncovered atoms, the missing true atom if the oracle named one.
    pub uncovered: Option<Literal>,
    /// Clauses whose heads match an uncovered atom.
    pub candidates: Vec<ClauseRef>,
}

impl fmt::Display for Diagnosis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "diagnosis: {}", self.kind.describe())?;
        writeln!(f, "node: {}", self.literal)?;
        if let Some(c) = &self.clause {
            writeln!(f, "clause: {c}")?;
        } else if !self.candidates.is_empty() {
            let cs: Vec<String> = self.candidates.iter().map(|c| c.to_string()).collect();
            writeln!(f, "candidate clauses: {}", cs.join("; "))?;
        }
        if let Some(i) = &self.instance {
            writeln!(f, "instance: {i}")?;
        }
        if let Some(u) = &self.uncovered {
            writeln!(f, "uncovered: {u}")?;
        }
        write!(f, "kind: {}", self.kind)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DebugResult {
    pub diagnosis: Option<Diagnosis>,
    /// What happened, for runs without a diagnosis.
    pub summary: String,
    pub root: Option<usize>,
    pub transcript: Transcript,
}

struct Asker<'o> {
    oracle: &'o mut dyn Oracle,
    cache: &'o mut BTreeMap<String, Verdict>,
    transcript: Transcript,
}

impl Asker<'_> {
    fn ask(&mut self, q: &Question) -> Result<Verdict, DebugError> {
        let key = q.to_string();
        if let Some(v) = self.cache.get(&key) {
            return Ok(*v);
        }
        let v = self.oracle.ask(q)?;
        self.cache.insert(key.clone(), v);
        self.transcript.entries.push(TranscriptEntry { question: key, verdict: v });
        Ok(v)
    }
}

/// Builds debugging trees for one program and runs diagnoses over them.
/// Trees and solve results are kept, so re-running after more verdicts
/// arrive replays the same questions.
pub struct Debugger {
    program: Arc<DisjunctiveProgram>,
    fingerprint: u64,
    opts: SolveOptions,
    pub tree: DebugTree,
    pub max_nodes: usize,
    outcomes: BTreeMap<String, Outcome>,
    answers: BTreeMap<String, Vec<Literal>>,
    roots: BTreeMap<String, usize>,
    renamer: Renamer,
}

const MAX_CALL_DEPTH: usize = 200;

impl Debugger {
    pub fn new(program: Arc<DisjunctiveProgram>, opts: SolveOptions) -> Debugger {
        let fingerprint = program.fingerprint();
        Debugger {
            program,
            fingerprint,
            opts: SolveOptions { record: false, trace: false, all_answers: true, ..opts },
            tree: DebugTree::default(),
            max_nodes: 10_000,
            outcomes: BTreeMap::new(),
            answers: BTreeMap::new(),
            roots: BTreeMap::new(),
            renamer: Renamer::new(),
        }
    }

    pub fn program(&self) -> &Arc<DisjunctiveProgram> {
        &self.program
    }

    /// Fails if `program` is not the program the trees were built from.
    pub fn check_fresh(&self, program: &DisjunctiveProgram) -> Result<(), DebugError> {
        if program.fingerprint() == self.fingerprint {
            Ok(())
        } else {
            Err(DebugError::Stale)
        }
    }

    /// All answers to `atom`, with derivations.
    pub fn outcome(&mut self, atom: &Atom) -> Result<&Outcome, DebugError> {
        let key = atom.canonical();
        if !self.outcomes.contains_key(&key) {
            let opts = SolveOptions { record: true, ..self.opts.clone() };
            let o = solve(&self.program, &[Literal::Pos(atom.clone())], &opts)?;
            self.outcomes.insert(key.clone(), o);
        }
        Ok(&self.outcomes[&key])
    }

    fn ensure_nodes(&self) -> Result<(), DebugError> {
        if self.tree.len() > self.max_nodes {
            Err(DebugError::TooLarge(self.max_nodes))
        } else {
            Ok(())
        }
    }

    /// Proof tree for answer `index` of `goal`; returns its root.
    pub fn proof_tree(&mut self, goal: &Atom, index: usize) -> Result<usize, DebugError> {
        let key = format!("proof {} #{index}", goal.canonical());
        if let Some(&r) = self.roots.get(&key) {
            return Ok(r);
        }
        let answer: Answer = self
            .outcome(goal)?
            .answers
            .get(index)
            .cloned()
            .ok_or_else(|| DebugError::NoSuchAnswer { goal: goal.to_string(), index })?;
        let steps = answer.derivation.unwrap_or_default();
        let root_step = steps.iter().find(|s| s.owner == 0).ok_or(DebugError::GoalShape)?;
        let root = self.proof_node(&steps, root_step, None)?;
        self.roots.insert(key, root);
        Ok(root)
    }

    fn proof_node(&mut self, steps: &[crate::slddnf::Step], step: &crate::slddnf::Step, parent: Option<usize>) -> Result<usize, DebugError> {
        if !step.literal.vars().is_empty() {
            return Err(DebugError::NonGround(step.literal.to_string()));
        }
        let (clause, body) = match &step.kind {
            StepKind::Resolve { clause, .. } => (Some(clause.clone()), step.body.clone()),
            _ => (None, Vec::new()),
        };
        let id = self.tree.push(NodeKind::Proof { literal: step.literal.clone(), clause, body }, parent);
        self.ensure_nodes()?;
        if matches!(step.kind, StepKind::Resolve { .. }) {
            let mut kids: Vec<&crate::slddnf::Step> =
                steps.iter().filter(|s| s.owner == step.id && !matches!(s.kind, StepKind::Builtin)).collect();
            kids.sort_by_key(|s| s.pos);
            for k in kids {
                self.proof_node(steps, k, Some(id))?;
            }
        }
        Ok(id)
    }

    /// Answers of a call as instances of it, duplicates removed. The search
    /// must be exhaustive.
    fn call_answers(&mut self, call: &Literal) -> Result<Vec<Literal>, DebugError> {
        let key = canonical(call);
        if let Some(a) = self.answers.get(&key) {
            return Ok(a.clone());
        }
        let (atom, negated) = match call {
            Literal::Pos(a) => (a, false),
            Literal::Neg(a) => (a, true),
            Literal::Eq(..) => return Err(DebugError::GoalShape),
        };
        let goal = [Literal::Pos(atom.clone())];
        let o = solve(&self.program, &goal, &self.opts)?;
        let result = if negated {
            if o.succeeded() {
                Vec::new()
            } else if o.finitely_failed {
                vec![call.clone()]
            } else {
                return Err(DebugError::NotExhaustive { call: call.to_string(), status: o.status().to_string() });
            }
        } else {
            if !o.exhaustive {
                return Err(DebugError::NotExhaustive { call: call.to_string(), status: o.status().to_string() });
            }
            let mut out: Vec<Literal> = Vec::new();
            for a in &o.answers {
                let inst = a.apply(&goal).remove(0);
                if !out.contains(&inst) {
                    out.push(inst);
                }
            }
            out
        };
        self.answers.insert(key, result.clone());
        Ok(result)
    }

    fn matching_clauses(&self, l: &Literal) -> Vec<ClauseRef> {
        let Some(atom) = l.atom() else { return Vec::new() };
        self.program
            .source
            .clauses_for(&atom.key())
            .filter(|c| {
                let mut b = Bindings::new();
                let serial = u32::MAX;
                c.head.args.iter().zip(&atom.args).all(|(h, a)| b.unify(&h.map_vars(&mut |v| Term::Var(v.renamed(serial))), a))
            })
            .map(|c| c.clause_ref())
            .collect()
    }

    /// Call-answer tree rooted at `call`; returns its root.
    pub fn call_tree(&mut self, call: &Literal) -> Result<usize, DebugError> {
        let key = format!("calls {}", canonical(call));
        if let Some(&r) = self.roots.get(&key) {
            return Ok(r);
        }
        let root = self.call_node(call, None, 0)?;
        self.roots.insert(key, root);
        Ok(root)
    }

    fn call_node(&mut self, call: &Literal, parent: Option<usize>, depth: usize) -> Result<usize, DebugError> {
        if depth > MAX_CALL_DEPTH {
            return Err(DebugError::TooLarge(self.max_nodes));
        }
        let answers = self.call_answers(call)?;
        let clauses = self.matching_clauses(call);
        let id = self.tree.push(NodeKind::Call { call: call.clone(), answers, clauses }, parent);
        self.ensure_nodes()?;
        if let Literal::Pos(a) = call {
            for c in self.body_calls(a)? {
                self.call_node(&c, Some(id), depth + 1)?;
            }
        }
        Ok(id)
    }

    /// The distinct calls made in the bodies of the clauses for `atom`,
    /// running each body left to right and delaying literals that are not
    /// yet ground enough to select.
    fn body_calls(&mut self, atom: &Atom) -> Result<Vec<Literal>, DebugError> {
        let program = Arc::clone(&self.program);
        let def = program.def(&atom.key()).ok_or_else(|| SolveError::Syntax(SyntaxError::UnknownPredicate(atom.key())))?;
        let mut calls = Vec::new();
        let mut work = 0usize;
        for d in &def.disjuncts {
            let serial = self.renamer.fresh_serial();
            let mut rename = |v: &Var| Term::Var(v.renamed(serial));
            let mut b = Bindings::new();
            let mut ok = atom.args.iter().zip(&d.head_eqs).all(|(a, (_, t))| b.unify(a, &t.map_vars(&mut rename)));
            let mut rest = Vec::new();
            for l in &d.body {
                match l.map_vars(&mut rename) {
                    Literal::Eq(x, y) => ok = ok && b.unify(&x, &y),
                    other => rest.push(other),
                }
            }
            if ok {
                self.explore(b, rest, &mut calls, &mut work)?;
            }
        }
        Ok(calls)
    }

    fn explore(&mut self, b: Bindings, rest: Vec<Literal>, calls: &mut Vec<Literal>, work: &mut usize) -> Result<(), DebugError> {
        *work += 1;
        if *work > 100 * self.max_nodes {
            return Err(DebugError::TooLarge(self.max_nodes));
        }
        let ready = |l: &Literal| match l {
            Literal::Pos(a) if builtin_cmp(a).is_none() => true,
            Literal::Pos(a) | Literal::Neg(a) => a.args.iter().all(|t| b.is_ground(t)),
            Literal::Eq(..) => false,
        };
        let Some(i) = rest.iter().position(ready) else { return Ok(()) };
        let lit = b.resolve_literal(&rest[i]);
        let mut remaining = rest;
        remaining.remove(i);
        match &lit {
            Literal::Pos(a) | Literal::Neg(a) if builtin_cmp(a).is_some() => {
                let holds = crate::interp::builtin_truth(a) == Some(T);
                if holds != matches!(lit, Literal::Neg(_)) {
                    self.explore(b, remaining, calls, work)?;
                }
            }
            Literal::Neg(_) => {
                if !calls.iter().any(|c| canonical(c) == canonical(&lit)) {
                    calls.push(lit.clone());
                }
                if !self.call_answers(&lit)?.is_empty() {
                    self.explore(b, remaining, calls, work)?;
                }
            }
            Literal::Pos(a) => {
                if !calls.iter().any(|c| canonical(c) == canonical(&lit)) {
                    calls.push(lit.clone());
                }
                for ans in self.call_answers(&lit)? {
                    let serial = self.renamer.fresh_serial();
                    let Literal::Pos(inst) = ans.map_vars(&mut |v| Term::Var(v.renamed(serial))) else { continue };
                    let mut b2 = b.clone();
                    if a.args.iter().zip(&inst.args).all(|(x, y)| b2.unify(x, y)) {
                        self.explore(b2, remaining.clone(), calls, work)?;
                    }
                }
            }
            Literal::Eq(..) => {}
        }
        Ok(())
    }

    /// Wrong-answer search below an erroneous proof node.
    fn descend_wrong(&mut self, mut n: usize, asker: &mut Asker) -> Result<Diagnosis, DebugError> {
        'outer: loop {
            let children = self.tree.nodes[n].children.clone();
            let mut inadmissible = false;
            for c in children {
                match asker.ask(&self.tree.nodes[c].question())? {
                    Verdict::Erroneous => {
                        if let Literal::Neg(a) = self.tree.nodes[c].literal().clone() {
                            // `not A` is wrongly true: A is missing an answer
                            let r = self.bridge(c, |d| d.call_tree(&Literal::Pos(a.clone())))?;
                            return self.descend_missing(r, asker);
                        }
                        n = c;
                        continue 'outer;
                    }
                    Verdict::Inadmissible => inadmissible = true,
                    Verdict::Correct => {}
                }
            }
            let node = &self.tree.nodes[n];
            let NodeKind::Proof { clause, .. } = &node.kind else { unreachable!("proof node") };
            return Ok(Diagnosis {
                kind: if inadmissible {
                    DiagnosisKind::InadmissibilityTransition
                } else {
                    DiagnosisKind::IncorrectClauseInstance
                },
                node: n,
                literal: node.literal().clone(),
                clause: clause.clone(),
                instance: node.instance(),
                uncovered: None,
                candidates: Vec::new(),
            });
        }
    }

    /// Missing-answer search below a call node that misses answers.
    fn descend_missing(&mut self, mut n: usize, asker: &mut Asker) -> Result<Diagnosis, DebugError> {
        'outer: loop {
            let children = self.tree.nodes[n].children.clone();
            for c in children {
                if asker.ask(&self.tree.nodes[c].question())? == Verdict::Erroneous {
                    if let Literal::Neg(a) = self.tree.nodes[c].literal().clone() {
                        // `not A` wrongly failed: A has a wrong answer
                        let r = self.bridge(c, |d| d.proof_tree(&a, 0))?;
                        return self.descend_wrong(r, asker);
                    }
                    n = c;
                    continue 'outer;
                }
            }
            let node = self.tree.nodes[n].clone();
            let NodeKind::Call { call, answers, .. } = &node.kind else { unreachable!("call node") };
            let uncovered = asker.oracle.missing_instance(call, answers);
            if let Some(u) = &uncovered {
                asker.transcript.witnesses.push((call.to_string(), u.to_string()));
            }
            let candidates = self.matching_clauses(uncovered.as_ref().unwrap_or(call));
            return Ok(Diagnosis {
                kind: DiagnosisKind::UncoveredAtom,
                node: n,
                literal: call.clone(),
                clause: if candidates.len() == 1 { candidates.first().cloned() } else { None },
                instance: None,
                uncovered,
                candidates,
            });
        }
    }

    fn bridge(&mut self, node: usize, build: impl FnOnce(&mut Debugger) -> Result<usize, DebugError>) -> Result<usize, DebugError> {
        if let Some(b) = self.tree.nodes[node].bridge {
            return Ok(b);
        }
        let r = build(self)?;
        self.tree.nodes[node].bridge = Some(r);
        Ok(r)
    }

    fn finish(&self, asker: Asker, root: Option<usize>, d: Result<Option<Diagnosis>, DebugError>, summary: &str) -> Result<DebugResult, DebugError> {
        let diagnosis = d?;
        Ok(DebugResult {
            summary: diagnosis.as_ref().map_or_else(|| summary.to_string(), |d| d.kind.describe().to_string()),
            diagnosis,
            root,
            transcript: asker.transcript,
        })
    }

    fn inadmissible_root(&self, root: usize) -> Diagnosis {
        let node = &self.tree.nodes[root];
        Diagnosis {
            kind: DiagnosisKind::GoalInadmissibleNoBug,
            node: root,
            literal: node.literal().clone(),
            clause: None,
            instance: None,
            uncovered: None,
            candidates: Vec::new(),
        }
    }

    /// Diagnoses the proof tree rooted at `root`, starting with the root
    /// question.
    pub fn diagnose_wrong_answer(
        &mut self,
        root: usize,
        oracle: &mut dyn Oracle,
        cache: &mut BTreeMap<String, Verdict>,
    ) -> Result<DebugResult, DebugError> {
        let mut asker = Asker { oracle, cache, transcript: Transcript::default() };
        let d = match asker.ask(&self.tree.node(root)?.question()) {
            Err(e) => Err(e),
            Ok(Verdict::Correct) => Ok(None),
            Ok(Verdict::Inadmissible) => Ok(Some(self.inadmissible_root(root))),
            Ok(Verdict::Erroneous) => self.descend_wrong(root, &mut asker).map(Some),
        };
        self.finish(asker, Some(root), d, "the answer is correct; nothing to diagnose")
    }

    /// Diagnoses the call-answer tree rooted at `root`.
    pub fn diagnose_missing_answer(
        &mut self,
        root: usize,
        oracle: &mut dyn Oracle,
        cache: &mut BTreeMap<String, Verdict>,
    ) -> Result<DebugResult, DebugError> {
        let mut asker = Asker { oracle, cache, transcript: Transcript::default() };
        let d = match asker.ask(&self.tree.node(root)?.question()) {
            Err(e) => Err(e),
            Ok(Verdict::Correct) => Ok(None),
            Ok(Verdict::Inadmissible) => Ok(Some(self.inadmissible_root(root))),
            Ok(Verdict::Erroneous) => self.descend_missing(root, &mut asker).map(Some),
        };
        self.finish(asker, Some(root), d, "no answers are missing; nothing to diagnose")
    }

    /// Solves `goal`, looks for a wrong answer, and failing that for a
    /// missing one.
    pub fn debug_goal(
        &mut self,
        goal: &Atom,
        oracle: &mut dyn Oracle,
        cache: &mut BTreeMap<String, Verdict>,
    ) -> Result<DebugResult, DebugError> {
        let outcome = self.outcome(goal)?.clone();
        let goal_lit = [Literal::Pos(goal.clone())];
        let mut asker = Asker { oracle, cache, transcript: Transcript::default() };
        let mut wrong = None;
        for (i, a) in outcome.answers.iter().enumerate() {
            let inst = a.apply(&goal_lit).remove(0);
            if !inst.vars().is_empty() {
                continue;
            }
            let v = match asker.ask(&Question::Valid(inst)) {
                Ok(v) => v,
                Err(e) => return self.finish(asker, None, Err(e), ""),
            };
            if v != Verdict::Correct {
                wrong = Some((i, v));
                break;
            }
        }
        if let Some((i, v)) = wrong {
            let root = match self.proof_tree(goal, i) {
                Ok(r) => r,
                Err(e) => return self.finish(asker, None, Err(e), ""),
            };
            let d = if v == Verdict::Inadmissible {
                Ok(Some(self.inadmissible_root(root)))
            } else {
                self.descend_wrong(root, &mut asker).map(Some)
            };
            return self.finish(asker, Some(root), d, "");
        }
        if !outcome.exhaustive {
            let summary = format!("all answers found are correct; the search was not exhaustive ({})", outcome.status());
            return self.finish(asker, None, Ok(None), &summary);
        }
        let root = match self.call_tree(&goal_lit[0]) {
            Ok(r) => r,
            Err(e) => return self.finish(asker, None, Err(e), ""),
        };
        let d = match asker.ask(&self.tree.nodes[root].question()) {
            Err(e) => Err(e),
            Ok(Verdict::Correct) => Ok(None),
            Ok(Verdict::Inadmissible) => Ok(Some(self.inadmissible_root(root))),
            Ok(Verdict::Erroneous) => self.descend_missing(root, &mut asker).map(Some),
        };
        self.finish(asker, Some(root), d, "all answers are correct and none are missing")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::{load_interpretation, SpecRegistry};
    use crate::syntax::{parse_atom, parse_program, to_disjunctive};

    const MERGE: &str = "merge([], Bs, Bs).
merge(A.As, [], A.As).
merge(A.As, B.Bs, A.Cs) :- A =< B, merge(As, B.Bs, Cs).
merge(A.As, B.Bs, B.Cs) :- A > B, merge(A.As, Bs, Cs).
";
    const MERGE_INTERP: &str = "universe depth=3 ints=0..3 lists=3 elements=ints\nspec merge/3 builtin:merge_sorted_numbers\n";

    fn debugger(src: &str) -> Debugger {
        Debugger::new(Arc::new(to_disjunctive(&parse_program(src).unwrap())), SolveOptions::default())
    }

    fn interp(text: &str) -> Interpretation {
        load_interpretation(text, &SpecRegistry::standard(), None).unwrap()
    }

    #[test]
    fn mutant_merge_clause_is_located() {
        let src = MERGE.replace("merge(A.As, B.Bs, B.Cs) :- A > B", "merge(A.As, B.Bs, A.Cs) :- A > B");
        let mut d = debugger(&src);
        let m = interp(MERGE_INTERP);
        let r = d.debug_goal(&parse_atom("merge([2],[1],X)").unwrap(), &mut InterpretationOracle::new(&m), &mut BTreeMap::new()).unwrap();
        let diag = r.diagnosis.unwrap();
        assert_eq!(diag.kind, DiagnosisKind::IncorrectClauseInstance);
        assert_eq!(diag.clause.unwrap().number, 4);
        assert_eq!(diag.instance.unwrap(), "merge([2],[1],[2,2]) :- 2 > 1, merge([2],[],[2]).");
        assert_eq!(r.transcript.to_string(), "valid merge([2],[1],[2,2]); erroneous\nvalid merge([2],[],[2]); correct\n");
    }

    #[test]
    fn inadmissible_goal_blames_the_caller() {
        let mut d = debugger(MERGE);
        let m = interp(MERGE_INTERP);
        let r = d.debug_goal(&parse_atom("merge([2],[2,1],X)").unwrap(), &mut InterpretationOracle::new(&m), &mut BTreeMap::new()).unwrap();
        assert_eq!(r.diagnosis.unwrap().kind, DiagnosisKind::GoalInadmissibleNoBug);
        assert_eq!(r.transcript.len(), 1);
    }

    #[test]
    fn inadmissibility_transition() {
        let src = "p(X) :- q(X).\nq(a).\n";
        let mut d = debugger(src);
        let m = interp("universe depth=0 functors=a/0\npred p/1\nF p(a).\npred q/1\nI q(a).\n");
        let r = d.debug_goal(&parse_atom("p(X)").unwrap(), &mut InterpretationOracle::new(&m), &mut BTreeMap::new()).unwrap();
        let diag = r.diagnosis.unwrap();
        assert_eq!(diag.kind, DiagnosisKind::InadmissibilityTransition);
        assert_eq!(diag.literal.to_string(), "p(a)");
    }

    #[test]
    fn missing_fact_is_an_uncovered_atom() {
        let src = "even(0).\neven(s(N)) :- odd(N).\nodd(s(s(N))) :- even(s(N)).\n";
        let m = interp("universe depth=3 functors=0/0,s/1\nspec even/1 builtin:even_odd_numerals\nspec odd/1 builtin:even_odd_numerals\n");
        let mut d = debugger(src);
        let r = d.debug_goal(&parse_atom("odd(s(0))").unwrap(), &mut InterpretationOracle::new(&m), &mut BTreeMap::new()).unwrap();
        let diag = r.diagnosis.unwrap();
        assert_eq!(diag.kind, DiagnosisKind::UncoveredAtom);
        assert_eq!(diag.uncovered.unwrap().to_string(), "odd(s(0))");
        assert!(diag.candidates.is_empty());
    }

    #[test]
    fn negation_bridges_to_missing_answers() {
        // q(b) is true but missing, so `not q(b)` is a wrong answer
        let src = "p(X) :- r(X), not q(X).\nr(b).\nq(a).\n";
        let m = interp("universe depth=0 functors=a/0,b/0\npred p/1\ndefault F\npred r/1\nT r(b).\nF r(a).\npred q/1\ndefault T\n");
        let mut d = debugger(src);
        let r = d.debug_goal(&parse_atom("p(X)").unwrap(), &mut InterpretationOracle::new(&m), &mut BTreeMap::new()).unwrap();
        let diag = r.diagnosis.unwrap();
        assert_eq!(diag.kind, DiagnosisKind::UncoveredAtom);
        assert_eq!(diag.literal.to_string(), "q(b)");
        assert!(d.tree.render(r.root.unwrap()).contains("via negation"));
    }

    #[test]
    fn transcript_replay_is_identical() {
        let src = MERGE.replace("merge(A.As, [], A.As)", "merge(A.As, [], As)");
        let m = interp(MERGE_INTERP);
        let goal = parse_atom("merge([1,3],[2],X)").unwrap();
        let mut d1 = debugger(&src);
        let first = d1.debug_goal(&goal, &mut InterpretationOracle::new(&m), &mut BTreeMap::new()).unwrap();
        assert_eq!(first.diagnosis.as_ref().unwrap().clause.as_ref().unwrap().number, 2);
        let text = first.transcript.to_string();
        let mut d2 = debugger(&src);
        let replay = Transcript::parse(&text).unwrap();
        let second = d2.debug_goal(&goal, &mut TranscriptOracle::new(&replay), &mut BTreeMap::new()).unwrap();
        assert_eq!(first, second);
        let mut short = replay.clone();
        short.entries.pop();
        let mut d3 = debugger(&src);
        assert!(matches!(
            d3.debug_goal(&goal, &mut TranscriptOracle::new(&short), &mut BTreeMap::new()),
            Err(DebugError::Oracle(OracleError::TranscriptExhausted(_)))
        ));
    }

    #[test]
    fn scripted_oracle_pauses_and_resumes() {
        let src = MERGE.replace("merge(A.As, B.Bs, B.Cs) :- A > B", "merge(A.As, B.Bs, A.Cs) :- A > B");
        let mut d = debugger(&src);
        let goal = parse_atom("merge([2],[1],X)").unwrap();
        let mut human = ScriptedOracle::new();
        let mut asked = Vec::new();
        let result = loop {
            let mut cache = BTreeMap::new();
            match d.debug_goal(&goal, &mut human, &mut cache) {
                Err(DebugError::Oracle(OracleError::Pending(q))) => {
                    let v = if asked.is_empty() { Verdict::Erroneous } else { Verdict::Correct };
                    asked.push(q.to_string());
                    human.answer(&q.to_string(), v);
                }
                other => break other.unwrap(),
            }
        };
        assert_eq!(asked.len(), 2);
        assert_eq!(result.diagnosis.unwrap().clause.unwrap().number, 4);
        assert!(d.tree.len() <= 3);
    }

    #[test]
    fn call_answer_tree_for_subs() {
        let src = "subs([], L).\nsubs([H|T], LH) :- select(H, LH, L), subs(T, L), not member(H, T).\nselect(H, [H|L], L).\nselect(H, [X|L], [X|LH]) :- select(H, L, LH).\nmember(X, [X|L]).\nmember(X, [Y|L]) :- member(X, L).\n";
        let mut d = debugger(src);
        let root = d.call_tree(&Literal::Pos(parse_atom("subs(X,[1,2])").unwrap())).unwrap();
        let NodeKind::Call { answers, clauses, .. } = &d.tree.nodes[root].kind else { panic!() };
        assert_eq!(answers.len(), 5);
        assert_eq!(clauses.len(), 2);
        let first = d.tree.slice(root, 0, 1).unwrap();
        assert_eq!(first.total_children, d.tree.nodes[root].children.len());
        assert_eq!(first.children[0].literal().to_string(), "select(_H_2,[1,2],_L_2)");
        assert!(d.tree.slice(root, 1000, 5).unwrap().children.is_empty());
    }
}
