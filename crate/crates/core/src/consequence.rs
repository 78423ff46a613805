//! Immediate consequence operators and the information-least fixpoint.

use std::collections::BTreeSet;
use std::sync::Arc;

use rayon::prelude::*;

use crate::eval::{EvalError, Evaluator};
use crate::interp::{InterpError, Interpretation};
use crate::syntax::DisjunctiveProgram;
use crate::term::PredKey;
use crate::truth::TruthValue::{self, F, I, T};
use crate::universe::Universe;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConsequenceError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{0}")]
    NotApplicable(String),
}

impl From<InterpError> for ConsequenceError {
    fn from(e: InterpError) -> Self {
        ConsequenceError::Eval(EvalError::Interp(e))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    /// Each atom takes the value of its completed body.
    T3,
    /// I preserved; T if the body is T or I.
    T3Plus,
    /// I preserved; T only if the body is T.
    T3Minus,
    /// Two-valued `T_P` for definite programs.
    ClassicalTp,
}

impl OperatorKind {
    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::T3 => "t3",
            OperatorKind::T3Plus => "t3plus",
            OperatorKind::T3Minus => "t3minus",
            OperatorKind::ClassicalTp => "tp",
        }
    }

    pub fn parse(s: &str) -> Option<OperatorKind> {
        [OperatorKind::T3, OperatorKind::T3Plus, OperatorKind::T3Minus, OperatorKind::ClassicalTp]
            .into_iter()
            .find(|k| k.name() == s)
    }

    fn combine(self, head: TruthValue, body: TruthValue) -> TruthValue {
        match self {
            OperatorKind::T3 => body,
            OperatorKind::ClassicalTp => TruthValue::from_bool(body == T),
            OperatorKind::T3Plus | OperatorKind::T3Minus if head == I => I,
            OperatorKind::T3Plus => TruthValue::from_bool(body != F),
            OperatorKind::T3Minus => TruthValue::from_bool(body == T),
        }
    }
}

fn pred_values(
    kind: OperatorKind,
    program: &DisjunctiveProgram,
    m: &Interpretation,
    pred: &PredKey,
) -> Result<Vec<TruthValue>, ConsequenceError> {
    let u = m.universe();
    let n = u.checked_tuple_count(pred).map_err(InterpError::from)?;
    let needs_head = matches!(kind, OperatorKind::T3Plus | OperatorKind::T3Minus);
    let heads = if needs_head { Some(m.values(pred)?) } else { None };
    let ev = Evaluator::new(program, m);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let head = heads.as_ref().map_or(F, |h| h[i]);
            if needs_head && head == I {
                return Ok(I);
            }
            let body = ev.body_value(&u.atom_at(pred, i))?.value;
            Ok(kind.combine(head, body))
        })
        .collect()
}

fn apply_to(
    kind: OperatorKind,
    program: &DisjunctiveProgram,
    m: &Interpretation,
    preds: &[PredKey],
) -> Result<Interpretation, ConsequenceError> {
    if kind == OperatorKind::ClassicalTp {
        if !program.is_definite() {
            return Err(ConsequenceError::NotApplicable("T_P needs a definite program".into()));
        }
        if m.count(I)? > 0 {
            return Err(ConsequenceError::NotApplicable("T_P needs a two-valued interpretation".into()));
        }
    }
    let mut out = m.clone();
    for p in preds {
        let v = pred_values(kind, program, m, p)?;
        out.set_dense(p.clone(), v)?;
    }
    Ok(out)
}

/// One operator step. Predicates of `m` that the program does not define
/// are carried over unchanged.
pub fn apply_operator(kind: OperatorKind, program: &DisjunctiveProgram, m: &Interpretation) -> Result<Interpretation, ConsequenceError> {
    apply_to(kind, program, m, program.predicates())
}

pub fn t3(program: &DisjunctiveProgram, m: &Interpretation) -> Result<Interpretation, ConsequenceError> {
    apply_operator(OperatorKind::T3, program, m)
}

pub fn t3_plus(program: &DisjunctiveProgram, m: &Interpretation) -> Result<Interpretation, ConsequenceError> {
    apply_operator(OperatorKind::T3Plus, program, m)
}

pub fn t3_minus(program: &DisjunctiveProgram, m: &Interpretation) -> Result<Interpretation, ConsequenceError> {
    apply_operator(OperatorKind::T3Minus, program, m)
}

pub fn classical_tp(program: &DisjunctiveProgram, m: &Interpretation) -> Result<Interpretation, ConsequenceError> {
    apply_operator(OperatorKind::ClassicalTp, program, m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum IterationMode {
    /// Re-evaluate every predicate on every pass.
    #[default]
    Naive,
    /// Re-evaluate only predicates that call something that just changed.
    SemiNaive,
}

#[derive(Clone, Debug, Default)]
pub struct LfpOptions {
    /// Defaults to the number of ground atoms plus one.
    pub max_iters: Option<usize>,
    pub mode: IterationMode,
}

#[derive(Clone, Debug)]
pub struct LfpResult {
    pub interp: Interpretation,
    /// Operator applications performed, including the one confirming the
    /// fixpoint.
    pub iterations: usize,
    pub converged: bool,
}

/// The all-I interpretation over the program's predicates.
pub fn bottom(program: &DisjunctiveProgram, universe: Arc<Universe>) -> Result<Interpretation, ConsequenceError> {
    Ok(Interpretation::constant(universe, program.predicates(), I)?)
}

/// Iterates `T3` from the all-I interpretation.
pub fn fitting_lfp(program: &DisjunctiveProgram, universe: Arc<Universe>, opts: &LfpOptions) -> Result<LfpResult, ConsequenceError> {
    let mut m = bottom(program, universe.clone())?;
    let mut total = 0usize;
    for p in program.predicates() {
        total += m.atom_count(p)?;
    }
    let max_iters = opts.max_iters.unwrap_or(total + 1);
    let preds = program.predicates().to_vec();
    let mut changed: BTreeSet<PredKey> = preds.iter().cloned().collect();
    for k in 1..=max_iters {
        let todo: Vec<PredKey> = match opts.mode {
            IterationMode::Naive => preds.clone(),
            IterationMode::SemiNaive if k == 1 => preds.clone(),
            IterationMode::SemiNaive => preds
                .iter()
                .filter(|p| program.def(p).is_some_and(|d| !d.calls().is_disjoint(&changed)))
                .cloned()
                .collect(),
        };
        let next = apply_to(OperatorKind::T3, program, &m, &todo)?;
        changed = BTreeSet::new();
        for p in &todo {
            if m.values(p)? != next.values(p)? {
                changed.insert(p.clone());
            }
        }
        m = next;
        if changed.is_empty() {
            return Ok(LfpResult { interp: m, iterations: k, converged: true });
        }
    }
    Ok(LfpResult { interp: m, iterations: max_iters, converged: false })
}

/// The first `n` iterates of `T3` from all-I, starting with all-I itself.
pub fn fitting_iterates(program: &DisjunctiveProgram, universe: Arc<Universe>, n: usize) -> Result<Vec<Interpretation>, ConsequenceError> {
    let mut out = vec![bottom(program, universe)?];
    for _ in 1..n {
        let next = t3(program, out.last().unwrap())?;
        out.push(next);
    }
    Ok(out)
}
