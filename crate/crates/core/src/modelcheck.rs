//! Model conditions over a bounded universe, with violating instances.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;

use crate::consequence::{t3, t3_minus, t3_plus, ConsequenceError};
use crate::eval::{literal_value, EvalError, Evaluator, DEFAULT_ASSIGNMENT_CAP};
use crate::interp::{InterpError, Interpretation};
use crate::syntax::{Clause, ClauseRef, DisjunctiveProgram, Literal};
use crate::term::{match_term, Atom, PredKey, Substitution, Term, Var};
use crate::truth::TruthValue::{self, F, I, T};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CheckError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("the program contains negation; use the completion conditions")]
    NegationPresent,
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
}

impl From<InterpError> for CheckError {
    fn from(e: InterpError) -> Self {
        CheckError::Eval(EvalError::Interp(e))
    }
}

impl From<ConsequenceError> for CheckError {
    fn from(e: ConsequenceError) -> Self {
        match e {
            ConsequenceError::Eval(e) => CheckError::Eval(e),
            ConsequenceError::NotApplicable(s) => CheckError::Inconsistent(s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Condition {
    /// Model of a definite program: no F<-T, no F<-I.
    Model,
    /// Additionally no I<-T.
    StrongModel,
    /// Model of the completion: no F<-T, F<-I, T<-F, T<-I.
    CompletionModel,
    /// Head and body always agree.
    StrongCompletionModel,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Model => "model",
            Condition::StrongModel => "strong model",
            Condition::CompletionModel => "model of the completion",
            Condition::StrongCompletionModel => "strong model of the completion",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    FalseTrue,
    FalseInadmissible,
    TrueFalse,
    TrueInadmissible,
    StrongMismatch,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::FalseTrue => "F<-T",
            ViolationKind::FalseInadmissible => "F<-I",
            ViolationKind::TrueFalse => "T<-F",
            ViolationKind::TrueInadmissible => "T<-I",
            ViolationKind::StrongMismatch => "strong mismatch",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub pred: PredKey,
    pub atom: Atom,
    pub head: TruthValue,
    pub body: TruthValue,
    pub kind: ViolationKind,
    pub disjunct: Option<usize>,
    pub clause: Option<ClauseRef>,
    pub witness: Option<Substitution>,
    pub note: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: head {} is {} but body is {}", self.kind, self.atom, self.head, self.body)?;
        if let Some(c) = &self.clause {
            write!(f, " via {c}")?;
        }
        if let Some(w) = &self.witness {
            if !w.is_empty() {
                write!(f, " with {w}")?;
            }
        }
        if !self.note.is_empty() {
            write!(f, " ({})", self.note)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct CheckOptions {
    pub max_violations: usize,
    pub cap: u128,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { max_violations: 5, cap: DEFAULT_ASSIGNMENT_CAP }
    }
}

#[derive(Clone, Debug)]
pub struct ModelReport {
    pub condition: Condition,
    pub holds: bool,
    pub violation_count: usize,
    /// The first violations in enumeration order, up to the configured cap.
    pub violations: Vec<Violation>,
    /// Some body quantifier ranged over the bounded universe, so F bodies
    /// are F within the bound.
    pub bounded: bool,
    pub atoms_checked: usize,
}

impl fmt::Display for ModelReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.holds { "holds" } else { "fails" };
        write!(f, "{}: {verdict} over {} atoms", self.condition, self.atoms_checked)?;
        if self.bounded {
            write!(f, " (bounded)")?;
        }
        writeln!(f)?;
        if self.violation_count > 0 {
            writeln!(f, "{} violation(s)", self.violation_count)?;
        }
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

fn classify(cond: Condition, head: TruthValue, body: TruthValue) -> Option<ViolationKind> {
    use ViolationKind::*;
    let kind = match (head, body) {
        (F, T) => FalseTrue,
        (F, I) => FalseInadmissible,
        (T, F) => TrueFalse,
        (T, I) => TrueInadmissible,
        (h, b) if h == b => return None,
        _ => StrongMismatch,
    };
    let reported = match cond {
        Condition::Model => matches!(kind, FalseTrue | FalseInadmissible),
        Condition::StrongModel => matches!(kind, FalseTrue | FalseInadmissible) || (head == I && body == T),
        Condition::CompletionModel => kind != StrongMismatch,
        Condition::StrongCompletionModel => true,
    };
    reported.then_some(kind)
}

/// Shared driver: evaluates every head atom of every program predicate.
pub fn check(cond: Condition, program: &DisjunctiveProgram, m: &Interpretation, opts: &CheckOptions) -> Result<ModelReport, CheckError> {
    if matches!(cond, Condition::Model | Condition::StrongModel) && !program.is_definite() {
        return Err(CheckError::NegationPresent);
    }
    let ev = Evaluator::new(program, m).with_cap(opts.cap);
    let u = m.universe();
    let mut report =
        ModelReport { condition: cond, holds: true, violation_count: 0, violations: vec![], bounded: false, atoms_checked: 0 };
    for pred in program.predicates() {
        let heads = m.values(pred)?;
        let found: Vec<(Option<Violation>, bool)> = (0..heads.len())
            .into_par_iter()
            .map(|i| -> Result<(Option<Violation>, bool), CheckError> {
                let head = heads[i];
                // I heads only matter for the strong conditions
                if head == I && matches!(cond, Condition::Model | Condition::CompletionModel) {
                    return Ok((None, false));
                }
                let atom = u.atom_at(pred, i);
                let body = ev.body_value(&atom)?;
                let v = classify(cond, head, body.value).map(|kind| {
                    let (disjunct, clause, witness) = match body.witness {
                        Some(w) => (Some(w.disjunct), w.clause, Some(w.bindings)),
                        None => (None, None, None),
                    };
                    let note = if body.value == F { "all disjuncts".to_string() } else { String::new() };
                    Violation { pred: pred.clone(), atom, head, body: body.value, kind, disjunct, clause, witness, note }
                });
                Ok((v, body.bounded))
            })
            .collect::<Result<_, _>>()?;
        report.atoms_checked += heads.len();
        for (v, bounded) in found {
            report.bounded |= bounded;
            if let Some(v) = v {
                report.violation_count += 1;
                if report.violations.len() < opts.max_violations {
                    report.violations.push(v);
                }
            }
        }
    }
    report.holds = report.violation_count == 0;
    Ok(report)
}

pub fn check_model_definite(program: &DisjunctiveProgram, m: &Interpretation, opts: &CheckOptions) -> Result<ModelReport, CheckError> {
    check(Condition::Model, program, m, opts)
}

pub fn check_strong_model(program: &DisjunctiveProgram, m: &Interpretation, opts: &CheckOptions) -> Result<ModelReport, CheckError> {
    check(Condition::StrongModel, program, m, opts)
}

pub fn check_model_completion(program: &DisjunctiveProgram, m: &Interpretation, opts: &CheckOptions) -> Result<ModelReport, CheckError> {
    check(Condition::CompletionModel, program, m, opts)
}

pub fn check_strong_model_completion(
    program: &DisjunctiveProgram,
    m: &Interpretation,
    opts: &CheckOptions,
) -> Result<ModelReport, CheckError> {
    check(Condition::StrongCompletionModel, program, m, opts)
}

// ---------------------------------------------------------------------------
// Clause-instance route

/// Why an atom does or does not satisfy its clause-level obligation: a true
/// atom needs a matching ground clause instance with a true body, a false
/// atom needs every matching instance to have a false body.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomEvidence {
    pub atom: Atom,
    pub value: TruthValue,
    pub satisfied: bool,
    /// The supporting instance (true atoms) or the offending one (false
    /// atoms), as clause text.
    pub instance: Option<String>,
    pub clause: Option<ClauseRef>,
    pub instance_body: Option<TruthValue>,
    pub instances_checked: usize,
}

impl fmt::Display for AtomEvidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.satisfied { "ok" } else { "VIOLATED" };
        write!(f, "{} is {}: {status}", self.atom, self.value)?;
        match (&self.instance, self.value, self.satisfied) {
            (Some(i), T, true) => write!(f, "; matched by {i} with a true body"),
            (Some(i), F, false) => write!(f, "; instance {i} has a {} body", self.instance_body.unwrap_or(I)),
            (Some(i), T, false) => write!(f, "; best instance {i} has an {} body", self.instance_body.unwrap_or(I)),
            (None, T, false) => write!(f, "; no matching clause instance has a true body"),
            (_, F, true) => write!(f, "; all {} matching instances have false bodies", self.instances_checked),
            _ => Ok(()),
        }
    }
}

fn instantiate(c: &Clause, s: &HashMap<Var, Term>) -> (Atom, Vec<Literal>) {
    let mut f = |v: &Var| s.get(v).cloned().unwrap_or_else(|| Term::Var(v.clone()));
    (c.head.map_vars(&mut f), c.body.iter().map(|l| l.map_vars(&mut f)).collect())
}

fn instance_text(c: &Clause, s: &HashMap<Var, Term>) -> String {
    let (head, body) = instantiate(c, s);
    Clause { head, body, line: c.line, number: c.number }.to_string()
}

/// Walks the ground instances of clauses whose head matches `atom`.
fn for_each_instance(
    program: &DisjunctiveProgram,
    m: &Interpretation,
    atom: &Atom,
    cap: u128,
    mut visit: impl FnMut(&Clause, &HashMap<Var, Term>, TruthValue) -> bool,
) -> Result<usize, CheckError> {
    let terms = m.universe().terms();
    let mut count = 0usize;
    for c in program.source.clauses_for(&atom.key()) {
        let mut s = HashMap::new();
        if !c.head.args.iter().zip(&atom.args).all(|(p, t)| match_term(p, t, &mut s)) {
            continue;
        }
        let mut free: Vec<Var> = c.vars().into_iter().filter(|v| !s.contains_key(v)).collect();
        free.dedup();
        let mut seen = Vec::new();
        free.retain(|v| {
            let fresh = !seen.contains(v);
            seen.push(v.clone());
            fresh
        });
        let n = terms.len() as u128;
        if !free.is_empty() && n.checked_pow(free.len() as u32).is_none_or(|k| k > cap) {
            return Err(EvalError::TooLarge { count: u128::MAX, context: format!("instances of {}", c.clause_ref()) }.into());
        }
        if !free.is_empty() && terms.is_empty() {
            continue;
        }
        let mut digits = vec![0usize; free.len()];
        loop {
            for (v, d) in free.iter().zip(&digits) {
                s.insert(v.clone(), terms[*d].clone());
            }
            let (_, body) = instantiate(c, &s);
            let mut value = T;
            for l in &body {
                value = value.and(literal_value(m, l)?);
                if value == F {
                    break;
                }
            }
            count += 1;
            if !visit(c, &s, value) {
                return Ok(count);
            }
            let mut i = digits.len();
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                digits[i] += 1;
                if digits[i] < terms.len() {
                    break;
                }
                digits[i] = 0;
                if i == 0 {
                    i = usize::MAX;
                    break;
                }
            }
            if i == usize::MAX || digits.is_empty() {
                break;
            }
        }
    }
    Ok(count)
}

/// Clause-level evidence for a single ground atom.
pub fn explain_atom(program: &DisjunctiveProgram, m: &Interpretation, atom: &Atom, cap: u128) -> Result<AtomEvidence, CheckError> {
    let value = m.truth_of(atom)?;
    let mut ev = AtomEvidence {
        atom: atom.clone(),
        value,
        satisfied: true,
        instance: None,
        clause: None,
        instance_body: None,
        instances_checked: 0,
    };
    match value {
        I => {}
        T => {
            ev.satisfied = false;
            ev.instances_checked = for_each_instance(program, m, atom, cap, |c, s, v| {
                if v == T {
                    ev.satisfied = true;
                    ev.instance = Some(instance_text(c, s));
                    ev.clause = Some(c.clause_ref());
                    ev.instance_body = Some(T);
                    return false;
                }
                if v == I && ev.instance.is_none() {
                    ev.instance = Some(instance_text(c, s));
                    ev.clause = Some(c.clause_ref());
                    ev.instance_body = Some(I);
                }
                true
            })?;
        }
        F => {
            ev.instances_checked = for_each_instance(program, m, atom, cap, |c, s, v| {
                if v != F {
                    ev.satisfied = false;
                    ev.instance = Some(instance_text(c, s));
                    ev.clause = Some(c.clause_ref());
                    ev.instance_body = Some(v);
                    return false;
                }
                true
            })?;
        }
    }
    Ok(ev)
}

#[derive(Clone, Debug)]
pub struct SynopsisReport {
    pub holds: bool,
    pub true_atoms: usize,
    pub false_atoms: usize,
    pub failure_count: usize,
    pub failures: Vec<AtomEvidence>,
}

impl fmt::Display for SynopsisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} true atoms need a matching clause instance with a true body; {} false atoms need all matching instances false",
            self.true_atoms, self.false_atoms
        )?;
        writeln!(f, "{}", if self.holds { "verified" } else { "not verified" })?;
        for e in &self.failures {
            writeln!(f, "  {e}")?;
        }
        Ok(())
    }
}

/// Checks every true and false atom against the clauses directly, then
/// confirms the verdict agrees with the completion check.
pub fn verify_synopsis(program: &DisjunctiveProgram, m: &Interpretation, opts: &CheckOptions) -> Result<SynopsisReport, CheckError> {
    let u = m.universe();
    let mut report = SynopsisReport { holds: true, true_atoms: 0, false_atoms: 0, failure_count: 0, failures: vec![] };
    for pred in program.predicates() {
        let values = m.values(pred)?;
        let evidence: Vec<Option<AtomEvidence>> = (0..values.len())
            .into_par_iter()
            .map(|i| {
                if values[i] == I {
                    return Ok(None);
                }
                explain_atom(program, m, &u.atom_at(pred, i), opts.cap).map(Some)
            })
            .collect::<Result<_, CheckError>>()?;
        for e in evidence.into_iter().flatten() {
            match e.value {
                T => report.true_atoms += 1,
                _ => report.false_atoms += 1,
            }
            if !e.satisfied {
                report.failure_count += 1;
                if report.failures.len() < opts.max_violations {
                    report.failures.push(e);
                }
            }
        }
    }
    report.holds = report.failure_count == 0;
    let direct = check_model_completion(program, m, opts)?;
    if direct.holds != report.holds {
        return Err(CheckError::Inconsistent(format!(
            "clause-instance route says {}, completion route says {}",
            report.holds, direct.holds
        )));
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Fixpoint characterizations

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DefiniteRoutes {
    pub direct: bool,
    /// T-set of T3+(M) is contained in the T-set of M.
    pub plus_true_subset: bool,
    /// F-set of M is contained in the F-set of T3(M).
    pub false_subset: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompletionRoutes {
    pub direct: bool,
    /// M is a fixpoint of both T3+ and T3-.
    pub fixpoint_of_both: bool,
    /// M is below T3(M) in the information order.
    pub below_t3: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixpointCrosscheck {
    pub definite: Option<DefiniteRoutes>,
    pub completion: CompletionRoutes,
}

fn subset_where(
    program: &DisjunctiveProgram,
    a: &Interpretation,
    av: TruthValue,
    b: &Interpretation,
    bv: TruthValue,
) -> Result<bool, CheckError> {
    for p in program.predicates() {
        let (x, y) = (a.values(p)?, b.values(p)?);
        if x.iter().zip(y.iter()).any(|(x, y)| *x == av && *y != bv) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Decides the model conditions three ways and fails if they disagree.
pub fn crosscheck_fixpoint_props(program: &DisjunctiveProgram, m: &Interpretation) -> Result<FixpointCrosscheck, CheckError> {
    let opts = CheckOptions { max_violations: 1, ..CheckOptions::default() };
    let step = t3(program, m)?;
    let plus = t3_plus(program, m)?;
    let minus = t3_minus(program, m)?;
    let definite = if program.is_definite() {
        let r = DefiniteRoutes {
            direct: check_model_definite(program, m, &opts)?.holds,
            plus_true_subset: subset_where(program, &plus, T, m, T)?,
            false_subset: subset_where(program, m, F, &step, F)?,
        };
        if r.direct != r.plus_true_subset || r.direct != r.false_subset {
            return Err(CheckError::Inconsistent(format!("definite model routes disagree: {r:?}")));
        }
        Some(r)
    } else {
        None
    };
    let mut below = true;
    for p in program.predicates() {
        if !crate::truth::leq_info(&m.values(p)?, &step.values(p)?).unwrap_or(false) {
            below = false;
        }
    }
    let completion = CompletionRoutes {
        direct: check_model_completion(program, m, &opts)?.holds,
        fixpoint_of_both: plus.same_values(m)? && minus.same_values(m)?,
        below_t3: below,
    };
    if completion.direct != completion.fixpoint_of_both || completion.direct != completion.below_t3 {
        return Err(CheckError::Inconsistent(format!("completion model routes disagree: {completion:?}")));
    }
    Ok(FixpointCrosscheck { definite, completion })
}
