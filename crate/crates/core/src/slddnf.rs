//! Top-down resolution over the normalised program: SLDNF with grounded
//! negation, where selecting a floundering negation leaves the goal
//! unchanged.
//!
//! The search is depth-first and iterative. A negation opens a new frame
//! that searches for one success of the negated atom. One expansion counter
//! is shared by all frames, so an infinite negative subtree shows up as an
//! exhausted budget rather than as failure.

use std::fmt;
use std::rc::Rc;

use crate::syntax::{builtin_cmp, ClauseRef, DisjunctiveProgram, Literal, SyntaxError};
use crate::term::{Atom, Bindings, ConstraintSet, PredKey, Renamer, Substitution, Term, Var};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("the budget must allow at least one expansion")]
    ZeroBudget,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum SelectionRule {
    /// Always the leftmost selectable literal, even if it just floundered.
    StrictLeftmost,
    /// Leftmost selectable literal, skipping negations that floundered on an
    /// identical goal.
    #[default]
    LeftmostDelay,
    /// Cycles through the selectable literals by node depth.
    FairRoundRobin,
}

impl SelectionRule {
    pub fn name(self) -> &'static str {
        match self {
            SelectionRule::StrictLeftmost => "strict_leftmost",
            SelectionRule::LeftmostDelay => "leftmost_delay",
            SelectionRule::FairRoundRobin => "fair",
        }
    }

    pub fn parse(s: &str) -> Option<SelectionRule> {
        match s {
            "strict" | "strict_leftmost" => Some(SelectionRule::StrictLeftmost),
            "leftmost" | "leftmost_delay" | "leftmost_delay_nonground_negation" => Some(SelectionRule::LeftmostDelay),
            "fair" | "fair_round_robin" => Some(SelectionRule::FairRoundRobin),
            _ => None,
        }
    }
}

impl fmt::Display for SelectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub rule: SelectionRule,
    /// Maximum number of node expansions, negative subtrees included.
    pub budget: u64,
    /// Search for every answer rather than stopping at the first.
    pub all_answers: bool,
    /// Keep the resolution steps behind each answer.
    pub record: bool,
    pub trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { rule: SelectionRule::default(), budget: 100_000, all_answers: true, record: false, trace: false }
    }
}

impl SolveOptions {
    pub fn new(rule: SelectionRule, budget: u64) -> SolveOptions {
        SolveOptions { rule, budget, ..SolveOptions::default() }
    }

    pub fn first_answer(mut self) -> SolveOptions {
        self.all_answers = false;
        self
    }

    pub fn recording(mut self) -> SolveOptions {
        self.record = true;
        self
    }

    pub fn tracing(mut self) -> SolveOptions {
        self.trace = true;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepKind {
    /// The atom was replaced by a disjunct of its definition.
    Resolve { disjunct: usize, clause: ClauseRef },
    /// The negated atom finitely failed, so the literal was dropped.
    NegationSucceeded,
    /// A ground comparison held.
    Builtin,
}

/// One resolution step on the path to an answer. Literals introduced by a
/// `Resolve` step carry its `id` as their owner; `pos` is the literal's
/// position in the body (or the goal, for owner 0).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub id: u32,
    pub owner: u32,
    pub pos: u32,
    pub literal: Literal,
    pub kind: StepKind,
    /// For `Resolve`, the body of the clause instance used.
    pub body: Vec<Literal>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Answer {
    pub constraints: ConstraintSet,
    pub substitution: Substitution,
    /// Steps in execution order, literals resolved under the final bindings.
    pub derivation: Option<Vec<Step>>,
}

impl Answer {
    pub fn apply(&self, goal: &[Literal]) -> Vec<Literal> {
        goal.iter().map(|l| l.map_vars(&mut |v| self.substitution.get(v).cloned().unwrap_or_else(|| Term::Var(v.clone())))).collect()
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.substitution.is_empty() {
            return write!(f, "yes");
        }
        let parts: Vec<String> = self.substitution.sorted().iter().map(|(v, t)| format!("{v} = {t}")).collect();
        write!(f, "{}", parts.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlounderedLeaf {
    pub substitution: Substitution,
    /// Negations and comparisons that never became selectable.
    pub residue: Vec<Literal>,
}

impl FlounderedLeaf {
    pub fn apply(&self, goal: &[Literal]) -> Vec<Literal> {
        goal.iter().map(|l| l.map_vars(&mut |v| self.substitution.get(v).cloned().unwrap_or_else(|| Term::Var(v.clone())))).collect()
    }
}

impl fmt::Display for FlounderedLeaf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let residue: Vec<String> = self.residue.iter().map(|l| l.to_string()).collect();
        if self.substitution.is_empty() {
            write!(f, "{}", residue.join(", "))
        } else {
            let parts: Vec<String> = self.substitution.sorted().iter().map(|(v, t)| format!("{v} = {t}")).collect();
            write!(f, "{} with {}", parts.join(", "), residue.join(", "))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub goal: Vec<Literal>,
    pub rule: SelectionRule,
    pub budget: u64,
    pub answers: Vec<Answer>,
    /// Positive leaves left with only unselectable literals.
    pub floundered_leaves: Vec<FlounderedLeaf>,
    /// The whole tree was searched: an all-observations tree.
    pub exhaustive: bool,
    pub floundered: bool,
    pub finitely_failed: bool,
    pub budget_exhausted: bool,
    pub expansions: u64,
    pub trace: Vec<String>,
}

impl Outcome {
    pub fn succeeded(&self) -> bool {
        !self.answers.is_empty()
    }

    /// Short status word for reports.
    pub fn status(&self) -> &'static str {
        if self.budget_exhausted {
            "budget exhausted"
        } else if self.finitely_failed {
            "finitely failed"
        } else if self.succeeded() {
            if self.exhaustive {
                "succeeded (all answers)"
            } else {
                "succeeded"
            }
        } else {
            "floundered"
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let goal: Vec<String> = self.goal.iter().map(|l| l.to_string()).collect();
        writeln!(f, "goal: {}", goal.join(", "))?;
        for a in &self.answers {
            writeln!(f, "answer: {a}")?;
        }
        writeln!(f, "answers: {}", self.answers.len())?;
        for l in &self.floundered_leaves {
            writeln!(f, "floundered: {l}")?;
        }
        write!(f, "status: {}, {} expansions, rule {}", self.status(), self.expansions, self.rule)
    }
}

#[derive(Clone, Debug)]
struct GLit {
    lit: Literal,
    owner: u32,
    pos: u32,
}

struct StepCell {
    step: Step,
    prev: Option<Rc<StepCell>>,
}

#[derive(Clone)]
struct Node {
    lits: Vec<GLit>,
    b: Bindings,
    depth: u32,
    /// Literal positions whose negation floundered on this very goal.
    marked: Vec<usize>,
    steps: Option<Rc<StepCell>>,
    next_id: u32,
}

impl Node {
    fn child(&self, lits: Vec<GLit>, b: Bindings) -> Node {
        Node { lits, b, depth: self.depth + 1, marked: Vec::new(), steps: self.steps.clone(), next_id: self.next_id }
    }

    fn push_step(&mut self, step: Step) {
        self.steps = Some(Rc::new(StepCell { step, prev: self.steps.take() }));
    }
}

enum SubResult {
    Succeeded,
    Failed,
    Floundered,
}

struct Frame {
    stack: Vec<Node>,
    /// Node of the enclosing frame whose selected negation this frame decides.
    waiting: Option<(Node, usize)>,
    success: bool,
    floundered: bool,
}

fn ground_int(b: &Bindings, t: &Term) -> Option<i64> {
    b.walk(t).as_int()
}

/// Comparisons need two integers; anything else waits.
fn comparison(b: &Bindings, a: &Atom) -> Option<bool> {
    let op = builtin_cmp(a)?;
    Some(op.holds(ground_int(b, &a.args[0])?, ground_int(b, &a.args[1])?))
}

fn selectable(l: &Literal, b: &Bindings) -> bool {
    match l {
        Literal::Eq(..) => false,
        Literal::Pos(a) | Literal::Neg(a) if builtin_cmp(a).is_some() => comparison(b, a).is_some(),
        Literal::Pos(_) => true,
        Literal::Neg(a) => a.args.iter().all(|t| b.is_ground(t)),
    }
}

struct Engine<'a> {
    program: &'a DisjunctiveProgram,
    opts: &'a SolveOptions,
    renamer: Renamer,
    expansions: u64,
    trace: Vec<String>,
}

impl<'a> Engine<'a> {
    fn select(&self, node: &Node) -> Option<usize> {
        let cands: Vec<usize> = (0..node.lits.len()).filter(|&i| selectable(&node.lits[i].lit, &node.b)).collect();
        match self.opts.rule {
            SelectionRule::StrictLeftmost => cands.first().copied(),
            SelectionRule::LeftmostDelay => cands.into_iter().find(|i| !node.marked.contains(i)),
            SelectionRule::FairRoundRobin => {
                if cands.is_empty() {
                    None
                } else {
                    Some(cands[node.depth as usize % cands.len()])
                }
            }
        }
    }

    fn note(&mut self, level: usize, node: &Node, m: usize, action: &str) {
        if self.opts.trace {
            let pol = if level == 0 { '+' } else { '-' };
            let lit = node.b.resolve_literal(&node.lits[m].lit);
            self.trace.push(format!("{} {pol}{level} {lit} {action}", node.depth));
        }
    }

    /// Children of resolving the atom at `m`, in disjunct order.
    fn resolve(&mut self, node: &Node, m: usize, atom: &Atom) -> Result<(Vec<Node>, usize), SolveError> {
        let key = atom.key();
        let def = self.program.def(&key).ok_or(SyntaxError::UnknownPredicate(key))?;
        let mut out = Vec::new();
        let mut failed = 0;
        let id = node.next_id;
        for (i, d) in def.disjuncts.iter().enumerate() {
            let serial = self.renamer.fresh_serial();
            let mut rename = |v: &Var| Term::Var(v.renamed(serial));
            let mut b = node.b.clone();
            let mut ok = atom.args.iter().zip(&d.head_eqs).all(|(a, (_, t))| b.unify(a, &t.map_vars(&mut rename)));
            let mut body = Vec::with_capacity(d.body.len());
            if ok {
                for (k, l) in d.body.iter().enumerate() {
                    match l.map_vars(&mut rename) {
                        Literal::Eq(x, y) => {
                            if !b.unify(&x, &y) {
                                ok = false;
                                break;
                            }
                        }
                        lit => body.push(GLit { lit, owner: id, pos: k as u32 }),
                    }
                }
            }
            if !ok {
                failed += 1;
                continue;
            }
            let mut lits = Vec::with_capacity(node.lits.len() - 1 + body.len());
            lits.extend_from_slice(&node.lits[..m]);
            lits.extend(body);
            lits.extend_from_slice(&node.lits[m + 1..]);
            let mut child = node.child(lits, b);
            child.next_id = id + 1;
            if self.opts.record {
                let g = &node.lits[m];
                child.push_step(Step {
                    id,
                    owner: g.owner,
                    pos: g.pos,
                    literal: g.lit.clone(),
                    kind: StepKind::Resolve { disjunct: i, clause: d.clause.clone() },
                    body: d.body.iter().map(|l| l.map_vars(&mut rename)).collect(),
                });
            }
            out.push(child);
        }
        Ok((out, failed))
    }

    fn without(&self, node: &Node, m: usize, kind: StepKind) -> Node {
        let mut lits = node.lits.clone();
        let g = lits.remove(m);
        let mut child = node.child(lits, node.b.clone());
        if self.opts.record {
            child.push_step(Step { id: 0, owner: g.owner, pos: g.pos, literal: g.lit, kind, body: Vec::new() });
        }
        child
    }

    fn answer(&self, node: &Node, goal_vars: &[Var]) -> Answer {
        let substitution: Substitution = goal_vars
            .iter()
            .map(|v| (v.clone(), node.b.resolve(&Term::Var(v.clone()))))
            .filter(|(v, t)| !matches!(t, Term::Var(w) if w == v))
            .collect();
        let derivation = self.opts.record.then(|| {
            let mut steps = Vec::new();
            let mut cur = node.steps.clone();
            while let Some(cell) = cur {
                let mut s = cell.step.clone();
                s.literal = node.b.resolve_literal(&s.literal);
                s.body = s.body.iter().map(|l| node.b.resolve_literal(l)).collect();
                steps.push(s);
                cur = cell.prev.clone();
            }
            steps.reverse();
            steps
        });
        Answer { constraints: ConstraintSet::from_bindings(&node.b, Some(goal_vars)), substitution, derivation }
    }

    fn run(&mut self, goal: &[Literal]) -> Result<Outcome, SolveError> {
        let mut goal_vars = Vec::new();
        goal.iter().for_each(|l| l.collect_vars(&mut goal_vars));
        let mut outcome = Outcome {
            goal: goal.to_vec(),
            rule: self.opts.rule,
            budget: self.opts.budget,
            answers: Vec::new(),
            floundered_leaves: Vec::new(),
            exhaustive: false,
            floundered: false,
            finitely_failed: false,
            budget_exhausted: false,
            expansions: 0,
            trace: Vec::new(),
        };
        let mut b = Bindings::new();
        let mut lits = Vec::new();
        let mut consistent = true;
        for (i, l) in goal.iter().enumerate() {
            match l {
                Literal::Eq(x, y) => consistent &= b.unify(x, y),
                other => lits.push(GLit { lit: other.clone(), owner: 0, pos: i as u32 }),
            }
        }
        let root = Node { lits, b, depth: 0, marked: Vec::new(), steps: None, next_id: 1 };
        let mut frames =
            vec![Frame { stack: if consistent { vec![root] } else { vec![] }, waiting: None, success: false, floundered: false }];
        let mut stopped_early = false;
        loop {
            let level = frames.len() - 1;
            let Some(node) = frames[level].stack.pop() else {
                let done = frames.pop().expect("frame");
                let Some((parent, m)) = done.waiting else { break };
                let result = if done.success {
                    SubResult::Succeeded
                } else if done.floundered {
                    SubResult::Floundered
                } else {
                    SubResult::Failed
                };
                let up = frames.len() - 1;
                let child = match result {
                    SubResult::Succeeded => {
                        self.note(up, &parent, m, "negation fails");
                        None
                    }
                    SubResult::Failed => {
                        self.note(up, &parent, m, "negation succeeds");
                        Some(self.without(&parent, m, StepKind::NegationSucceeded))
                    }
                    SubResult::Floundered => {
                        self.note(up, &parent, m, "negation flounders; goal unchanged");
                        let mut same = parent.child(parent.lits.clone(), parent.b.clone());
                        same.marked = parent.marked.clone();
                        same.marked.push(m);
                        same.next_id = parent.next_id;
                        Some(same)
                    }
                };
                frames[up].stack.extend(child);
                continue;
            };
            if node.lits.is_empty() {
                if level == 0 {
                    outcome.answers.push(self.answer(&node, &goal_vars));
                    if !self.opts.all_answers {
                        stopped_early = !frames[0].stack.is_empty();
                        break;
                    }
                } else {
                    frames[level].success = true;
                    frames[level].stack.clear();
                }
                continue;
            }
            let Some(m) = self.select(&node) else {
                if level == 0 {
                    let residue = node.lits.iter().map(|g| node.b.resolve_literal(&g.lit)).collect();
                    let substitution = self.answer(&node, &goal_vars).substitution;
                    outcome.floundered_leaves.push(FlounderedLeaf { substitution, residue });
                } else {
                    frames[level].floundered = true;
                }
                continue;
            };
            if self.expansions >= self.opts.budget {
                outcome.budget_exhausted = true;
                break;
            }
            self.expansions += 1;
            match node.lits[m].lit.clone() {
                Literal::Pos(a) if builtin_cmp(&a).is_some() => {
                    if comparison(&node.b, &a) == Some(true) {
                        self.note(level, &node, m, "holds");
                        frames[level].stack.push(self.without(&node, m, StepKind::Builtin));
                    } else {
                        self.note(level, &node, m, "fails");
                    }
                }
                Literal::Neg(a) if builtin_cmp(&a).is_some() => {
                    if comparison(&node.b, &a) == Some(false) {
                        self.note(level, &node, m, "holds");
                        frames[level].stack.push(self.without(&node, m, StepKind::Builtin));
                    } else {
                        self.note(level, &node, m, "fails");
                    }
                }
                Literal::Pos(a) => {
                    let (children, failed) = self.resolve(&node, m, &a)?;
                    if self.opts.trace {
                        self.note(level, &node, m, &format!("resolves: {} children, {failed} failed", children.len()));
                    }
                    frames[level].stack.extend(children.into_iter().rev());
                }
                Literal::Neg(a) => {
                    let sub = node.b.resolve_atom(&a);
                    self.note(level, &node, m, "opens negative subtree");
                    let key = sub.key();
                    if self.program.def(&key).is_none() {
                        return Err(SyntaxError::UnknownPredicate(key).into());
                    }
                    let root = Node {
                        lits: vec![GLit { lit: Literal::Pos(sub), owner: 0, pos: 0 }],
                        b: Bindings::new(),
                        depth: 0,
                        marked: Vec::new(),
                        steps: None,
                        next_id: 1,
                    };
                    frames.push(Frame { stack: vec![root], waiting: Some((node, m)), success: false, floundered: false });
                }
                Literal::Eq(..) => unreachable!("equalities are never selected"),
            }
        }
        outcome.floundered = !outcome.floundered_leaves.is_empty();
        outcome.exhaustive = !outcome.budget_exhausted && !stopped_early;
        outcome.finitely_failed = outcome.exhaustive && outcome.answers.is_empty() && !outcome.floundered;
        outcome.expansions = self.expansions;
        outcome.trace = std::mem::take(&mut self.trace);
        Ok(outcome)
    }
}

fn check_goal(program: &DisjunctiveProgram, goal: &[Literal]) -> Result<(), SolveError> {
    for l in goal {
        if let Some(a) = l.atom() {
            if builtin_cmp(a).is_none() && program.def(&a.key()).is_none() {
                return Err(SyntaxError::UnknownPredicate(a.key()).into());
            }
        }
    }
    Ok(())
}

/// Searches the tree for `goal` depth-first under `opts`.
pub fn solve(program: &DisjunctiveProgram, goal: &[Literal], opts: &SolveOptions) -> Result<Outcome, SolveError> {
    if opts.budget == 0 {
        return Err(SolveError::ZeroBudget);
    }
    check_goal(program, goal)?;
    let mut engine = Engine { program, opts, renamer: Renamer::new(), expansions: 0, trace: Vec::new() };
    engine.run(goal)
}

pub fn solve_atom(program: &DisjunctiveProgram, atom: &Atom, opts: &SolveOptions) -> Result<Outcome, SolveError> {
    solve(program, &[Literal::Pos(atom.clone())], opts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroundStatus {
    Success,
    FiniteFailure,
    /// Searched to the end with floundered leaves and no success.
    Floundered,
    /// The budget ran out first.
    Unresolved,
}

impl GroundStatus {
    pub fn of(o: &Outcome) -> GroundStatus {
        if o.succeeded() {
            GroundStatus::Success
        } else if o.finitely_failed {
            GroundStatus::FiniteFailure
        } else if o.budget_exhausted {
            GroundStatus::Unresolved
        } else {
            GroundStatus::Floundered
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroundSets {
    pub success: Vec<Atom>,
    pub finite_failure: Vec<Atom>,
    pub floundered: Vec<Atom>,
    pub unresolved: Vec<Atom>,
}

impl GroundSets {
    pub fn get(&self, s: GroundStatus) -> &[Atom] {
        match s {
            GroundStatus::Success => &self.success,
            GroundStatus::FiniteFailure => &self.finite_failure,
            GroundStatus::Floundered => &self.floundered,
            GroundStatus::Unresolved => &self.unresolved,
        }
    }
}

/// Runs every ground atom of `preds` over the universe, stopping at the
/// first answer, and sorts the atoms by outcome.
pub fn ground_sets(
    program: &DisjunctiveProgram,
    universe: &crate::universe::Universe,
    preds: &[PredKey],
    opts: &SolveOptions,
) -> Result<GroundSets, SolveError> {
    let first = SolveOptions { all_answers: false, record: false, trace: false, ..opts.clone() };
    let mut out = GroundSets::default();
    for p in preds {
        for atom in universe.atoms(p) {
            let o = solve_atom(program, &atom, &first)?;
            match GroundStatus::of(&o) {
                GroundStatus::Success => out.success.push(atom),
                GroundStatus::FiniteFailure => out.finite_failure.push(atom),
                GroundStatus::Floundered => out.floundered.push(atom),
                GroundStatus::Unresolved => out.unresolved.push(atom),
            }
        }
    }
    Ok(out)
}

pub fn success_set(
    program: &DisjunctiveProgram,
    universe: &crate::universe::Universe,
    preds: &[PredKey],
    opts: &SolveOptions,
) -> Result<Vec<Atom>, SolveError> {
    Ok(ground_sets(program, universe, preds, opts)?.success)
}

pub fn finite_failure_set(
    program: &DisjunctiveProgram,
    universe: &crate::universe::Universe,
    preds: &[PredKey],
    opts: &SolveOptions,
) -> Result<Vec<Atom>, SolveError> {
    Ok(ground_sets(program, universe, preds, opts)?.finite_failure)
}
