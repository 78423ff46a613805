//! Checks the operational soundness and completeness theorems against a
//! model of the completion, goal by goal, over the bounded universe.

use std::fmt;

use crate::eval::{eval_conjunction, literal_value, EvalError};
use crate::interp::{InterpError, Interpretation};
use crate::modelcheck::{check_model_completion, CheckError, CheckOptions, ModelReport};
use crate::slddnf::{solve, Outcome, SolveError, SolveOptions};
use crate::syntax::{DisjunctiveProgram, Literal};
use crate::term::{Bindings, Term, Var};
use crate::truth::{and3, TruthValue, TruthValue::*};

#[derive(Debug, Clone, thiserror::Error)]
pub enum TheoremError {
    #[error("the interpretation is not a model of the completion:\n{0}")]
    NotAModel(Box<ModelReport>),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error("{count} ground instances needed for {goal}; raise the cap")]
    TooLarge { count: u128, goal: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Theorem {
    /// Every ground instance of a computed answer is true or inadmissible.
    SoundnessModuloInadmissibility,
    /// A finitely failed goal has no true ground instance.
    FiniteFailureSoundness,
    /// After an exhaustive search every true ground instance is an instance
    /// of some computed answer or of a floundered leaf whose residue has a
    /// true instance.
    StrongCompleteness,
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Theorem::SoundnessModuloInadmissibility => "soundness modulo inadmissibility",
            Theorem::FiniteFailureSoundness => "soundness of finite failure",
            Theorem::StrongCompleteness => "strong completeness",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TheoremViolation {
    pub theorem: Theorem,
    pub goal: String,
    pub instance: String,
    pub value: TruthValue,
}

impl fmt::Display for TheoremViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} fails for goal {}: instance {} is {}", self.theorem, self.goal, self.instance, self.value)
    }
}

#[derive(Clone, Debug)]
pub struct TheoremOptions {
    pub solve: SolveOptions,
    /// Cap on ground instances enumerated per goal or answer.
    pub cap: u128,
    pub max_violations: usize,
}

impl Default for TheoremOptions {
    fn default() -> Self {
        TheoremOptions { solve: SolveOptions::default(), cap: 1_000_000, max_violations: 10 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TheoremReport {
    pub goals: usize,
    pub answers: usize,
    pub succeeded: usize,
    pub finitely_failed: usize,
    pub exhaustive: usize,
    pub unresolved: usize,
    pub floundered: usize,
    pub instances_checked: u64,
    /// Instances with a subterm outside the universe, which cannot be judged.
    pub instances_skipped: u64,
    pub violation_count: usize,
    pub violations: Vec<TheoremViolation>,
}

impl TheoremReport {
    pub fn holds(&self) -> bool {
        self.violation_count == 0
    }
}

impl fmt::Display for TheoremReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} goals: {} succeeded ({} answers), {} finitely failed, {} exhaustive, {} unresolved, {} floundered",
            self.goals, self.succeeded, self.answers, self.finitely_failed, self.exhaustive, self.unresolved, self.floundered
        )?;
        writeln!(f, "{} ground instances checked, {} outside the universe", self.instances_checked, self.instances_skipped)?;
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        write!(f, "theorems hold: {}", if self.holds() { "yes" } else { "no" })
    }
}

fn show(goal: &[Literal]) -> String {
    goal.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(", ")
}

/// Calls `f` with every ground instance of `goal` over the universe and its
/// value, or `None` when an instance leaves the universe. Stops when `f`
/// returns false.
fn for_each_instance(
    m: &Interpretation,
    goal: &[Literal],
    cap: u128,
    mut f: impl FnMut(&[Literal], Option<TruthValue>) -> bool,
) -> Result<(), TheoremError> {
    let mut vars: Vec<Var> = Vec::new();
    goal.iter().for_each(|l| l.collect_vars(&mut vars));
    let terms = m.universe().terms();
    if !vars.is_empty() && terms.is_empty() {
        return Ok(());
    }
    let count = (terms.len() as u128).checked_pow(vars.len() as u32).unwrap_or(u128::MAX);
    if count > cap {
        return Err(TheoremError::TooLarge { count, goal: show(goal) });
    }
    let mut digits = vec![0usize; vars.len()];
    loop {
        let inst: Vec<Literal> = goal
            .iter()
            .map(|l| {
                l.map_vars(&mut |v| {
                    let i = vars.iter().position(|w| w == v).expect("collected");
                    terms[digits[i]].clone()
                })
            })
            .collect();
        let mut value = Some(T);
        for l in &inst {
            match literal_value(m, l) {
                Ok(v) => value = value.map(|acc| and3(acc, v)),
                Err(InterpError::OutsideUniverse(_)) => value = None,
                Err(e) => return Err(e.into()),
            }
        }
        if !f(&inst, value) {
            return Ok(());
        }
        let mut k = digits.len();
        loop {
            if k == 0 {
                return Ok(());
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

fn unifies(general: &[Literal], ground: &[Literal]) -> bool {
    unify_into(&mut Bindings::new(), general, ground)
}

fn unify_into(b: &mut Bindings, general: &[Literal], ground: &[Literal]) -> bool {
    general.iter().zip(ground).all(|(g, t)| match (g, t) {
        (Literal::Eq(a, c), Literal::Eq(x, y)) => b.unify(a, x) && b.unify(c, y),
        (Literal::Pos(a), Literal::Pos(x)) | (Literal::Neg(a), Literal::Neg(x)) => {
            a.pred == x.pred && a.args.len() == x.args.len() && a.args.iter().zip(&x.args).all(|(s, t)| b.unify(s, t))
        }
        _ => false,
    })
}

impl TheoremReport {
    fn violation(&mut self, max: usize, theorem: Theorem, goal: &[Literal], instance: &[Literal], value: TruthValue) {
        self.violation_count += 1;
        if self.violations.len() < max {
            self.violations.push(TheoremViolation { theorem, goal: show(goal), instance: show(instance), value });
        }
    }

    fn add(&mut self, m: &Interpretation, goal: &[Literal], o: &Outcome, opts: &TheoremOptions) -> Result<(), TheoremError> {
        self.goals += 1;
        self.answers += o.answers.len();
        self.succeeded += usize::from(o.succeeded());
        self.finitely_failed += usize::from(o.finitely_failed);
        self.exhaustive += usize::from(o.exhaustive);
        self.unresolved += usize::from(o.budget_exhausted);
        self.floundered += usize::from(o.floundered);
        let max = opts.max_violations;
        for a in &o.answers {
            let inst = a.apply(goal);
            let mut bad = Vec::new();
            for_each_instance(m, &inst, opts.cap, |g, v| {
                self.instances_checked += 1;
                match v {
                    None => self.instances_skipped += 1,
                    Some(F) => bad.push(g.to_vec()),
                    Some(_) => {}
                }
                true
            })?;
            for g in bad {
                self.violation(max, Theorem::SoundnessModuloInadmissibility, goal, &g, F);
            }
        }
        if o.finitely_failed || o.exhaustive {
            let answers: Vec<Vec<Literal>> = o.answers.iter().map(|a| a.apply(goal)).collect();
            let leaves: Vec<(Vec<Literal>, &[Literal])> =
                o.floundered_leaves.iter().map(|l| (l.apply(goal), &l.residue[..])).collect();
            let mut bad = Vec::new();
            let mut unmatched = Vec::new();
            for_each_instance(m, goal, opts.cap, |g, v| {
                self.instances_checked += 1;
                match v {
                    None => self.instances_skipped += 1,
                    Some(T) => {
                        if o.finitely_failed {
                            bad.push((Theorem::FiniteFailureSoundness, g.to_vec()));
                        } else if !answers.iter().any(|a| unifies(a, g)) {
                            unmatched.push(g.to_vec());
                        }
                    }
                    Some(_) => {}
                }
                true
            })?;
            for g in unmatched {
                // a floundered leaf also counts if some instance of its
                // residue is true
                let mut covered = false;
                for (inst, residue) in &leaves {
                    let mut b = Bindings::new();
                    if !unify_into(&mut b, inst, &g) {
                        continue;
                    }
                    let lits: Vec<Literal> = residue.iter().map(|l| b.resolve_literal(l)).collect();
                    match eval_conjunction(m, &lits, &Bindings::new(), opts.cap) {
                        Ok(v) if v.value == T => covered = true,
                        Ok(_) => {}
                        Err(EvalError::Interp(InterpError::OutsideUniverse(_))) => {
                            self.instances_skipped += 1;
                            covered = true;
                        }
                        Err(e) => return Err(CheckError::Eval(e).into()),
                    }
                    if covered {
                        break;
                    }
                }
                if !covered {
                    bad.push((Theorem::StrongCompleteness, g));
                }
            }
            for (t, g) in bad {
                self.violation(max, t, goal, &g, T);
            }
        }
        Ok(())
    }
}

/// Solves each goal and checks the three theorems against `m`, which must
/// be a model of the completion.
pub fn check_operational_theorems(
    program: &DisjunctiveProgram,
    m: &Interpretation,
    goals: impl IntoIterator<Item = Vec<Literal>>,
    opts: &TheoremOptions,
) -> Result<TheoremReport, TheoremError> {
    let model = check_model_completion(program, m, &CheckOptions::default())?;
    if !model.holds {
        return Err(TheoremError::NotAModel(Box::new(model)));
    }
    let mut report = TheoremReport::default();
    for goal in goals {
        let o = solve(program, &goal, &opts.solve)?;
        report.add(m, &goal, &o, opts)?;
    }
    Ok(report)
}

/// One single-atom goal per ground atom of `pred` over the universe.
pub fn ground_atom_goals<'a>(
    m: &'a Interpretation,
    pred: &'a crate::term::PredKey,
) -> impl Iterator<Item = Vec<Literal>> + 'a {
    m.universe().atoms(pred).map(|a| vec![Literal::Pos(a)])
}

/// The most general goal `p(X1, ..., Xn)`.
pub fn open_goal(pred: &crate::term::PredKey) -> Vec<Literal> {
    let args = (1..=pred.arity).map(|i| Term::var(&format!("X{i}"))).collect();
    vec![Literal::Pos(crate::term::Atom::new(&pred.name, args))]
}
