//! Kleene evaluation of clause bodies under an interpretation, with local
//! variables ranging over the bounded universe.

use rustc_hash::FxHashMap as HashMap;

use crate::interp::{InterpError, Interpretation, PredTable};
use crate::syntax::{builtin_cmp, ClauseRef, CmpOp, Definition, Disjunct, DisjunctiveProgram, Literal, SyntaxError};
use crate::term::{Atom, Bindings, PredKey, Substitution, Sym, Term, Var};
use crate::universe::Universe;
use crate::truth::{and3, or3, TruthValue, TruthValue::*};

/// Default cap on the number of local-variable assignments tried for one
/// disjunct.
pub const DEFAULT_ASSIGNMENT_CAP: u128 = 20_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("{count} local assignments needed for {context}; raise the cap or shrink the universe")]
    TooLarge { count: u128, context: String },
}

/// Which disjunct and local assignment produced a body value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub disjunct: usize,
    pub clause: Option<ClauseRef>,
    pub bindings: Substitution,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BodyValue {
    pub value: TruthValue,
    /// For T the first true instance; for I the first inadmissible one.
    pub witness: Option<Witness>,
    /// Set when some quantifier ranged over the bounded universe.
    pub bounded: bool,
}

pub struct Evaluator<'a> {
    pub program: &'a DisjunctiveProgram,
    pub interp: &'a Interpretation,
    pub cap: u128,
    compiled: Vec<(&'a PredKey, Vec<Option<Compiled<'a>>>)>,
}

/// A term pattern whose variables are numbered slots.
#[derive(Debug)]
enum Pat {
    Slot(usize),
    Ground(Term, Option<u32>),
    App(Sym, Vec<Pat>),
}

impl Pat {
    fn new(t: &Term, slots: &mut Vec<Var>, u: &Universe) -> Pat {
        match t {
            Term::Var(v) => Pat::Slot(slot_of(v, slots)),
            _ if t.is_ground() => Pat::Ground(t.clone(), u.index_of(t)),
            Term::App(f, args) => Pat::App(f.clone(), args.iter().map(|a| Pat::new(a, slots, u)).collect()),
            Term::Int(_) => unreachable!(),
        }
    }

    fn matches(&self, t: &Term, vals: &mut [Option<(Term, Option<u32>)>], u: &Universe) -> bool {
        match self {
            Pat::Slot(i) => match &vals[*i] {
                Some((b, _)) => b == t,
                None => {
                    vals[*i] = Some((t.clone(), u.index_of(t)));
                    true
                }
            },
            Pat::Ground(g, _) => g == t,
            Pat::App(f, ps) => match t {
                Term::App(g, ts) if f == g && ps.len() == ts.len() => {
                    ps.iter().zip(ts.iter()).all(|(p, t)| p.matches(t, vals, u))
                }
                _ => false,
            },
        }
    }

    fn build(&self, vals: &[Option<(Term, Option<u32>)>]) -> Term {
        match self {
            Pat::Slot(i) => vals[*i].as_ref().map(|(t, _)| t.clone()).expect("slot bound"),
            Pat::Ground(g, _) => g.clone(),
            Pat::App(f, ps) => Term::App(f.clone(), ps.iter().map(|p| p.build(vals)).collect()),
        }
    }

    fn index(&self, vals: &[Option<(Term, Option<u32>)>], u: &Universe) -> Option<u32> {
        match self {
            Pat::Slot(i) => vals[*i].as_ref().and_then(|(_, x)| *x),
            Pat::Ground(_, x) => *x,
            Pat::App(..) => u.index_of(&self.build(vals)),
        }
    }

    fn collect_slots(&self, out: &mut Vec<usize>) {
        match self {
            Pat::Slot(i) => {
                if !out.contains(i) {
                    out.push(*i)
                }
            }
            Pat::Ground(..) => {}
            Pat::App(_, ps) => ps.iter().for_each(|p| p.collect_slots(out)),
        }
    }
}

fn slot_of(v: &Var, slots: &mut Vec<Var>) -> usize {
    match slots.iter().position(|w| w == v) {
        Some(i) => i,
        None => {
            slots.push(v.clone());
            slots.len() - 1
        }
    }
}

#[derive(Debug)]
enum CKind<'a> {
    Cmp(CmpOp),
    Table(Option<&'a PredTable>),
}

#[derive(Debug)]
struct CLit<'a> {
    negative: bool,
    pred: Sym,
    kind: CKind<'a>,
    args: Vec<Pat>,
    slots: Vec<usize>,
}

/// A disjunct without body equalities, with variables numbered.
#[derive(Debug)]
struct Compiled<'a> {
    head: Vec<Pat>,
    lits: Vec<CLit<'a>>,
    vars: Vec<Var>,
    /// Number of slots that are locals of the disjunct.
    locals: usize,
}

type Vals = Vec<Option<(Term, Option<u32>)>>;

impl<'a> Compiled<'a> {
    fn new(d: &Disjunct, m: &'a Interpretation) -> Option<Compiled<'a>> {
        let u = m.universe();
        let mut vars = d.locals.clone();
        let locals = vars.len();
        let head = d.head_eqs.iter().map(|(_, t)| Pat::new(t, &mut vars, u)).collect();
        let mut lits = Vec::new();
        for l in &d.body {
            let (negative, a) = match l {
                Literal::Eq(..) => return None,
                Literal::Pos(a) => (false, a),
                Literal::Neg(a) => (true, a),
            };
            let kind = match builtin_cmp(a) {
                Some(op) => CKind::Cmp(op),
                None => CKind::Table(m.table(&a.key())),
            };
            let args: Vec<Pat> = a.args.iter().map(|t| Pat::new(t, &mut vars, u)).collect();
            let mut slots = Vec::new();
            args.iter().for_each(|p| p.collect_slots(&mut slots));
            lits.push(CLit { negative, pred: a.pred.clone(), kind, args, slots });
        }
        Some(Compiled { head, lits, vars, locals })
    }

    fn atom(&self, l: &CLit, vals: &Vals) -> Atom {
        Atom { pred: l.pred.clone(), args: l.args.iter().map(|p| p.build(vals)).collect() }
    }

    fn literal(&self, l: &CLit, vals: &Vals, u: &Universe) -> Result<TruthValue, InterpError> {
        let v = match &l.kind {
            CKind::Cmp(op) => {
                let x = l.args[0].build(vals);
                let y = l.args[1].build(vals);
                match (x.as_int(), y.as_int()) {
                    (Some(x), Some(y)) => TruthValue::from_bool(op.holds(x, y)),
                    _ => F,
                }
            }
            CKind::Table(None) => return Err(InterpError::UnknownPredicate(self.atom(l, vals).key())),
            CKind::Table(Some(PredTable::Spec(s))) => {
                let a = self.atom(l, vals);
                if !u.contains_atom(&a) {
                    return Err(InterpError::OutsideUniverse(a));
                }
                s.eval(&a)
            }
            CKind::Table(Some(PredTable::Dense(table))) => {
                let n = u.len();
                let mut idx = 0usize;
                for p in &l.args {
                    match p.index(vals, u) {
                        Some(i) => idx = idx * n + i as usize,
                        None => return Err(InterpError::OutsideUniverse(self.atom(l, vals))),
                    }
                }
                table[idx]
            }
        };
        Ok(if l.negative { v.not() } else { v })
    }

    fn solution(&self, vals: &Vals) -> Substitution {
        self.vars[..self.locals]
            .iter()
            .zip(vals)
            .map(|(v, b)| (v.clone(), b.as_ref().map(|(t, _)| t.clone()).unwrap_or_else(|| Term::Var(v.clone()))))
            .collect()
    }

    fn eval(&self, head: &Atom, u: &Universe, cap: u128, context: &dyn Fn() -> String) -> Result<Exists, EvalError> {
        let mut vals: Vals = vec![None; self.vars.len()];
        if !self.head.iter().zip(&head.args).all(|(p, t)| p.matches(t, &mut vals, u)) {
            return Ok(Exists { value: F, bindings: None, bounded: false });
        }
        if vals[..self.locals].iter().flatten().any(|(_, i)| i.is_none()) {
            return Ok(Exists { value: F, bindings: None, bounded: true });
        }
        let free: Vec<usize> = (0..vals.len()).filter(|&i| vals[i].is_none()).collect();
        let mut base = T;
        let mut open = Vec::new();
        for l in &self.lits {
            if l.slots.iter().all(|&i| vals[i].is_some()) {
                base = and3(base, self.literal(l, &vals, u)?);
                if base == F {
                    return Ok(Exists { value: F, bindings: None, bounded: false });
                }
            } else {
                open.push(l);
            }
        }
        if free.is_empty() {
            return Ok(Exists { value: base, bindings: Some(self.solution(&vals)), bounded: false });
        }
        let terms = u.terms();
        if terms.is_empty() {
            return Ok(Exists { value: F, bindings: None, bounded: true });
        }
        let count = (terms.len() as u128).checked_pow(free.len() as u32).unwrap_or(u128::MAX);
        if count > cap {
            return Err(EvalError::TooLarge { count, context: context() });
        }
        let mut digits = vec![0usize; free.len()];
        for &i in &free {
            vals[i] = Some((terms[0].clone(), Some(0)));
        }
        let mut acc = F;
        let mut witness = None;
        loop {
            let mut v = base;
            for l in &open {
                v = and3(v, self.literal(l, &vals, u)?);
                if v == F {
                    break;
                }
            }
            if v == T {
                return Ok(Exists { value: T, bindings: Some(self.solution(&vals)), bounded: true });
            }
            if v == I && acc == F {
                acc = I;
                witness = Some(self.solution(&vals));
            }
            // odometer step, last variable fastest
            let mut k = digits.len();
            loop {
                if k == 0 {
                    return Ok(Exists { value: acc, bindings: witness, bounded: true });
                }
                k -= 1;
                digits[k] += 1;
                if digits[k] < terms.len() {
                    vals[free[k]] = Some((terms[digits[k]].clone(), Some(digits[k] as u32)));
                    break;
                }
                digits[k] = 0;
                vals[free[k]] = Some((terms[0].clone(), Some(0)));
            }
        }
    }
}

pub fn literal_value(m: &Interpretation, l: &Literal) -> Result<TruthValue, InterpError> {
    match l {
        Literal::Eq(a, b) => Ok(TruthValue::from_bool(a == b)),
        Literal::Pos(a) => m.truth_of(a),
        Literal::Neg(a) => Ok(m.truth_of(a)?.not()),
    }
}

fn apply(l: &Literal, s: &HashMap<Var, Term>) -> Literal {
    l.map_vars(&mut |v| s.get(v).cloned().unwrap_or_else(|| Term::Var(v.clone())))
}

/// Value of `exists free. lits` under bindings `b`. `locals` are the
/// variables whose values must lie in the universe.
pub(crate) struct Exists {
    pub value: TruthValue,
    pub bindings: Option<Substitution>,
    pub bounded: bool,
}

pub(crate) fn exists_conj(
    m: &Interpretation,
    lits: &[&Literal],
    b: &Bindings,
    locals: &[Var],
    cap: u128,
    context: &dyn Fn() -> String,
) -> Result<Exists, EvalError> {
    let resolved: Vec<Literal> = lits.iter().map(|l| l.map_vars(&mut |v| b.resolve(&Term::Var(v.clone())))).collect();
    let local_terms: Vec<(Var, Term)> = locals.iter().map(|v| (v.clone(), b.resolve(&Term::Var(v.clone())))).collect();
    exists_resolved(m, resolved, local_terms, cap, context)
}

/// As [`exists_conj`], with literals and local values already resolved.
pub(crate) fn exists_resolved(
    m: &Interpretation,
    resolved: Vec<Literal>,
    local_terms: Vec<(Var, Term)>,
    cap: u128,
    context: &dyn Fn() -> String,
) -> Result<Exists, EvalError> {
    let u = m.universe();
    if local_terms.iter().any(|(_, t)| t.is_ground() && !u.contains(t)) {
        return Ok(Exists { value: F, bindings: None, bounded: true });
    }
    let mut free: Vec<Var> = Vec::new();
    for (_, t) in &local_terms {
        for v in t.vars() {
            if !free.contains(&v) {
                free.push(v);
            }
        }
    }
    for l in &resolved {
        for v in l.vars() {
            if !free.contains(&v) {
                free.push(v);
            }
        }
    }
    let (ground, open): (Vec<&Literal>, Vec<&Literal>) = resolved.iter().partition(|l| l.vars().is_empty());
    let mut base = T;
    for l in &ground {
        base = and3(base, literal_value(m, l)?);
        if base == F {
            return Ok(Exists { value: F, bindings: None, bounded: false });
        }
    }
    let solution = |s: &HashMap<Var, Term>| -> Substitution {
        local_terms
            .iter()
            .map(|(v, t)| (v.clone(), t.map_vars(&mut |w| s.get(w).cloned().unwrap_or_else(|| Term::Var(w.clone())))))
            .collect()
    };
    if free.is_empty() {
        return Ok(Exists { value: base, bindings: Some(solution(&HashMap::default())), bounded: false });
    }
    let n = u.len() as u128;
    if n == 0 {
        return Ok(Exists { value: F, bindings: None, bounded: true });
    }
    let count = n.checked_pow(free.len() as u32).unwrap_or(u128::MAX);
    if count > cap {
        return Err(EvalError::TooLarge { count, context: context() });
    }
    let open_locals: Vec<&(Var, Term)> = local_terms.iter().filter(|(_, t)| !t.is_ground()).collect();
    let terms = u.terms();
    let mut digits = vec![0usize; free.len()];
    let mut s: HashMap<Var, Term> = free.iter().map(|v| (v.clone(), terms[0].clone())).collect();
    let mut acc = F;
    let mut witness = None;
    loop {
        let in_universe = open_locals.iter().all(|(_, t)| {
            u.contains(&t.map_vars(&mut |w| s.get(w).cloned().unwrap_or_else(|| Term::Var(w.clone()))))
        });
        if in_universe {
            let mut v = base;
            for l in &open {
                v = and3(v, literal_value(m, &apply(l, &s))?);
                if v == F {
                    break;
                }
            }
            if v == T {
                return Ok(Exists { value: T, bindings: Some(solution(&s)), bounded: true });
            }
            if v == I && acc == F {
                acc = I;
                witness = Some(solution(&s));
            }
        }
        // odometer step, last variable fastest
        let mut i = digits.len();
        loop {
            if i == 0 {
                return Ok(Exists { value: acc, bindings: witness, bounded: true });
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < terms.len() {
                s.insert(free[i].clone(), terms[digits[i]].clone());
                break;
            }
            digits[i] = 0;
            s.insert(free[i].clone(), terms[0].clone());
        }
    }
}

impl<'a> Evaluator<'a> {
    pub fn new(program: &'a DisjunctiveProgram, interp: &'a Interpretation) -> Evaluator<'a> {
        let compiled = program
            .defs
            .iter()
            .map(|(k, d)| (k, d.disjuncts.iter().map(|d| Compiled::new(d, interp)).collect()))
            .collect();
        Evaluator { program, interp, cap: DEFAULT_ASSIGNMENT_CAP, compiled }
    }

    pub fn with_cap(mut self, cap: u128) -> Evaluator<'a> {
        self.cap = cap;
        self
    }

    fn compiled_for(&self, head: &Atom) -> Option<&[Option<Compiled<'a>>]> {
        self.compiled
            .iter()
            .find(|(k, _)| k.arity == head.args.len() && k.name == *head.pred)
            .map(|(_, c)| c.as_slice())
    }

    pub fn def(&self, pred: &PredKey) -> Result<&'a Definition, EvalError> {
        self.program.def(pred).ok_or_else(|| EvalError::Syntax(SyntaxError::UnknownPredicate(pred.clone())))
    }

    /// Value of one disjunct of the definition of `head`'s predicate.
    pub fn disjunct_value(&self, head: &Atom, index: usize) -> Result<BodyValue, EvalError> {
        let compiled = self
            .compiled_for(head)
            .ok_or_else(|| EvalError::Syntax(SyntaxError::UnknownPredicate(head.key())))?;
        let def = self.def(&head.key())?;
        let d = &def.disjuncts[index];
        let context = || format!("{head} via {}", d.clause);
        if let Some(c) = &compiled[index] {
            // head args are ground, so unification is one-way matching
            let e = c.eval(head, self.interp.universe(), self.cap, &context)?;
            return Ok(self.wrap(index, d.clause.clone(), e));
        }
        let mut b = Bindings::new();
        let mut rest = Vec::new();
        let unified = head.args.iter().zip(&d.head_eqs).all(|(a, (_, t))| b.unify(a, t))
            && d.body.iter().all(|l| match l {
                Literal::Eq(x, y) => b.unify(x, y),
                other => {
                    rest.push(other);
                    true
                }
            });
        if !unified {
            return Ok(BodyValue { value: F, witness: None, bounded: false });
        }
        let e = exists_conj(self.interp, &rest, &b, &d.locals, self.cap, &context)?;
        Ok(self.wrap(index, d.clause.clone(), e))
    }

    fn wrap(&self, disjunct: usize, clause: ClauseRef, e: Exists) -> BodyValue {
        BodyValue {
            value: e.value,
            witness: e
                .bindings
                .filter(|_| e.value != F)
                .map(|bindings| Witness { disjunct, clause: Some(clause), bindings }),
            bounded: e.bounded,
        }
    }

    /// Value of the completed body of `head`'s predicate at `head`.
    pub fn body_value(&self, head: &Atom) -> Result<BodyValue, EvalError> {
        let n = self
            .compiled_for(head)
            .ok_or_else(|| EvalError::Syntax(SyntaxError::UnknownPredicate(head.key())))?
            .len();
        let mut out = BodyValue { value: F, witness: None, bounded: false };
        for i in 0..n {
            let v = self.disjunct_value(head, i)?;
            out.bounded |= v.bounded;
            if v.value == T {
                return Ok(BodyValue { bounded: out.bounded, ..v });
            }
            if v.value == I && out.value == F {
                out.value = or3(out.value, I);
                out.witness = v.witness;
            }
        }
        Ok(out)
    }
}

/// Value of `exists vars. goal` under bindings, for goals and resolvents.
pub fn eval_conjunction(m: &Interpretation, lits: &[Literal], b: &Bindings, cap: u128) -> Result<BodyValue, EvalError> {
    let refs: Vec<&Literal> = lits.iter().collect();
    let mut locals: Vec<Var> = Vec::new();
    for l in lits {
        for v in l.vars() {
            if !locals.contains(&v) {
                locals.push(v);
            }
        }
    }
    let context = || "goal".to_string();
    let e = exists_conj(m, &refs, b, &locals, cap, &context)?;
    Ok(BodyValue {
        value: e.value,
        witness: e.bindings.filter(|_| e.value != F).map(|bindings| Witness { disjunct: 0, clause: None, bindings }),
        bounded: e.bounded,
    })
}
