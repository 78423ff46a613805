//! Herbrand terms, atoms, substitutions and syntactic unification.
//!
//! Unification always performs the occurs check; there is no rational tree
//! mode. Bindings are kept in a persistent map so that search nodes can share
//! them cheaply.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::hash::BuildHasherDefault;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub type Sym = Arc<str>;

pub const NIL: &str = "[]";
pub const CONS: &str = ".";

/// A logic variable. Source variables have serial 0; renamed copies get a
/// fresh serial from a monotone counter.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Var {
    pub name: Sym,
    pub serial: u32,
}

impl Var {
    pub fn new(name: &str) -> Var {
        Var { name: name.into(), serial: 0 }
    }

    pub fn renamed(&self, serial: u32) -> Var {
        Var { name: self.name.clone(), serial }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.serial == 0 {
            write!(f, "{}", self.name)
        } else {
            write!(f, "_{}_{}", self.name.trim_start_matches('_'), self.serial)
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Term {
    Var(Var),
    Int(i64),
    App(Sym, Arc<[Term]>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Var::new(name))
    }

    pub fn constant(name: &str) -> Term {
        Term::App(name.into(), Arc::from(Vec::new()))
    }

    pub fn app(name: &str, args: Vec<Term>) -> Term {
        Term::App(name.into(), args.into())
    }

    pub fn nil() -> Term {
        Term::constant(NIL)
    }

    pub fn cons(head: Term, tail: Term) -> Term {
        Term::App(CONS.into(), Arc::from(vec![head, tail]))
    }

    /// Builds `[e1, ..., en | tail]`.
    pub fn list_with_tail(items: impl IntoIterator<Item = Term, IntoIter: DoubleEndedIterator>, tail: Term) -> Term {
        items.into_iter().rev().fold(tail, |acc, t| Term::cons(t, acc))
    }

    pub fn list(items: impl IntoIterator<Item = Term, IntoIter: DoubleEndedIterator>) -> Term {
        Term::list_with_tail(items, Term::nil())
    }

    pub fn int_list(items: &[i64]) -> Term {
        Term::list(items.iter().map(|&i| Term::Int(i)))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, Term::App(f, args) if args.is_empty() && &**f == NIL)
    }

    pub fn as_cons(&self) -> Option<(&Term, &Term)> {
        match self {
            Term::App(f, args) if args.len() == 2 && &**f == CONS => Some((&args[0], &args[1])),
            _ => None,
        }
    }

    /// Elements of a proper (`[]`-terminated) list.
    pub fn as_list(&self) -> Option<Vec<&Term>> {
        let mut items = Vec::new();
        let mut cur = self;
        loop {
            if cur.is_nil() {
                return Some(items);
            }
            let (h, t) = cur.as_cons()?;
            items.push(h);
            cur = t;
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Term::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Int(_) => true,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    /// Constants have depth 0; a compound is one deeper than its deepest argument.
    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) | Term::Int(_) => 0,
            Term::App(_, args) => args.iter().map(|a| a.depth() + 1).max().unwrap_or(0),
        }
    }

    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Int(_) => {}
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn occurs(&self, v: &Var) -> bool {
        match self {
            Term::Var(w) => w == v,
            Term::Int(_) => false,
            Term::App(_, args) => args.iter().any(|a| a.occurs(v)),
        }
    }

    /// Every subterm, including the term itself.
    pub fn subterms(&self, out: &mut BTreeSet<Term>) {
        out.insert(self.clone());
        if let Term::App(_, args) = self {
            args.iter().for_each(|a| a.subterms(out));
        }
    }

    pub fn map_vars(&self, f: &mut impl FnMut(&Var) -> Term) -> Term {
        match self {
            Term::Var(v) => f(v),
            Term::Int(_) => self.clone(),
            Term::App(name, args) => {
                if args.is_empty() {
                    return self.clone();
                }
                Term::App(name.clone(), args.iter().map(|a| a.map_vars(f)).collect())
            }
        }
    }
}

fn is_plain_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => chars.all(|c| c.is_ascii_alphanumeric() || c == '_'),
        _ => false,
    }
}

pub(crate) fn write_name(f: &mut fmt::Formatter<'_>, name: &str) -> fmt::Result {
    if is_plain_name(name) || name == NIL {
        write!(f, "{name}")
    } else {
        write!(f, "'{}'", name.replace('\'', "\\'"))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Int(i) => write!(f, "{i}"),
            Term::App(name, args) => {
                if self.as_cons().is_some() {
                    write!(f, "[")?;
                    let mut cur = self;
                    let mut first = true;
                    while let Some((h, t)) = cur.as_cons() {
                        if !first {
                            write!(f, ",")?;
                        }
                        first = false;
                        write!(f, "{h}")?;
                        cur = t;
                    }
                    if !cur.is_nil() {
                        write!(f, "|{cur}")?;
                    }
                    return write!(f, "]");
                }
                write_name(f, name)?;
                if !args.is_empty() {
                    write!(f, "(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{a}")?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

/// Predicate identity: name and arity.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct PredKey {
    pub name: String,
    pub arity: usize,
}

impl PredKey {
    pub fn new(name: &str, arity: usize) -> PredKey {
        PredKey { name: name.to_string(), arity }
    }
}

impl fmt::Display for PredKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Atom {
    pub pred: Sym,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: &str, args: Vec<Term>) -> Atom {
        Atom { pred: pred.into(), args }
    }

    pub fn key(&self) -> PredKey {
        PredKey::new(&self.pred, self.args.len())
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        self.args.iter().for_each(|a| a.collect_vars(out));
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn map_vars(&self, f: &mut impl FnMut(&Var) -> Term) -> Atom {
        Atom { pred: self.pred.clone(), args: self.args.iter().map(|a| a.map_vars(f)).collect() }
    }

    pub fn as_term(&self) -> Term {
        Term::App(self.pred.clone(), self.args.clone().into())
    }

    /// Renders the atom with its variables renamed `_1`, `_2`, ... in order of
    /// first occurrence, so variant atoms print identically.
    pub fn canonical(&self) -> String {
        let vars = self.vars();
        let renamed = self.map_vars(&mut |v| {
            let i = vars.iter().position(|w| w == v).unwrap_or(0);
            Term::var(&format!("_{}", i + 1))
        });
        renamed.to_string()
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_name(f, &self.pred)?;
        if !self.args.is_empty() {
            write!(f, "(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// A finite, idempotent map from variables to terms.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Substitution {
    map: HashMap<Var, Term>,
}

impl Substitution {
    pub fn new() -> Substitution {
        Substitution::default()
    }

    pub fn get(&self, v: &Var) -> Option<&Term> {
        self.map.get(v)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn apply(&self, t: &Term) -> Term {
        t.map_vars(&mut |v| self.map.get(v).cloned().unwrap_or_else(|| Term::Var(v.clone())))
    }

    pub fn apply_atom(&self, a: &Atom) -> Atom {
        a.map_vars(&mut |v| self.map.get(v).cloned().unwrap_or_else(|| Term::Var(v.clone())))
    }

    /// Bindings sorted by variable, for deterministic display.
    pub fn sorted(&self) -> Vec<(Var, Term)> {
        let mut out: Vec<_> = self.map.iter().map(|(v, t)| (v.clone(), t.clone())).collect();
        out.sort();
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.map.iter()
    }
}

impl FromIterator<(Var, Term)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (Var, Term)>>(iter: I) -> Self {
        Substitution { map: iter.into_iter().collect() }
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (v, t)) in self.sorted().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v} -> {t}")?;
        }
        write!(f, "}}")
    }
}

/// Triangular bindings in a persistent map. Cloning is O(1), which the
/// resolution engine relies on when it branches.
#[derive(Clone, Debug, Default)]
pub struct Bindings {
    map: im::HashMap<Var, Term, BuildHasherDefault<rustc_hash::FxHasher>>,
}

impl Bindings {
    pub fn new() -> Bindings {
        Bindings::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn bind(&mut self, v: Var, t: Term) {
        self.map.insert(v, t);
    }

    /// Follows variable bindings at the top level only.
    pub fn walk<'a>(&'a self, mut t: &'a Term) -> &'a Term {
        while let Term::Var(v) = t {
            match self.map.get(v) {
                Some(next) => t = next,
                None => break,
            }
        }
        t
    }

    pub fn resolve(&self, t: &Term) -> Term {
        match self.walk(t) {
            Term::Var(v) => Term::Var(v.clone()),
            Term::Int(i) => Term::Int(*i),
            app @ Term::App(name, args) => {
                if args.is_empty() {
                    return app.clone();
                }
                Term::App(name.clone(), args.iter().map(|a| self.resolve(a)).collect())
            }
        }
    }

    pub fn resolve_atom(&self, a: &Atom) -> Atom {
        Atom { pred: a.pred.clone(), args: a.args.iter().map(|t| self.resolve(t)).collect() }
    }

    pub fn is_ground(&self, t: &Term) -> bool {
        match self.walk(t) {
            Term::Var(_) => false,
            Term::Int(_) => true,
            Term::App(_, args) => args.iter().all(|a| self.is_ground(a)),
        }
    }

    fn occurs(&self, v: &Var, t: &Term) -> bool {
        match self.walk(t) {
            Term::Var(w) => w == v,
            Term::Int(_) => false,
            Term::App(_, args) => args.iter().any(|a| self.occurs(v, a)),
        }
    }

    /// Unifies two terms under the current bindings, extending them. On
    /// failure the bindings may be partially extended and should be dropped.
    pub fn unify(&mut self, a: &Term, b: &Term) -> bool {
        let mut work = vec![(a.clone(), b.clone())];
        while let Some((x, y)) = work.pop() {
            let x = self.walk(&x).clone();
            let y = self.walk(&y).clone();
            match (&x, &y) {
                (Term::Var(v), Term::Var(w)) if v == w => {}
                (Term::Var(v), other) | (other, Term::Var(v)) => {
                    if self.occurs(v, other) {
                        return false;
                    }
                    self.map.insert(v.clone(), other.clone());
                }
                (Term::Int(i), Term::Int(j)) => {
                    if i != j {
                        return false;
                    }
                }
                (Term::App(f, xs), Term::App(g, ys)) => {
                    if f != g || xs.len() != ys.len() {
                        return false;
                    }
                    work.extend(xs.iter().cloned().zip(ys.iter().cloned()));
                }
                _ => return false,
            }
        }
        true
    }

    /// The idempotent substitution equivalent to these bindings.
    pub fn solved(&self) -> Substitution {
        self.map.keys().map(|v| (v.clone(), self.resolve(&Term::Var(v.clone())))).collect()
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.map.keys()
    }
}

/// Most general unifier under occurs-check semantics.
pub fn unify(a: &Term, b: &Term) -> Option<Substitution> {
    let mut b_ = Bindings::new();
    b_.unify(a, b).then(|| b_.solved())
}

pub fn unify_atoms(a: &Atom, b: &Atom) -> Option<Substitution> {
    if a.pred != b.pred || a.args.len() != b.args.len() {
        return None;
    }
    let mut bs = Bindings::new();
    for (x, y) in a.args.iter().zip(&b.args) {
        if !bs.unify(x, y) {
            return None;
        }
    }
    Some(bs.solved())
}

/// One-way matching: a substitution `s` over the variables of `pattern` with
/// `s(pattern) == target`. `target` is treated as rigid.
pub fn match_term<S: std::hash::BuildHasher>(pattern: &Term, target: &Term, s: &mut HashMap<Var, Term, S>) -> bool {
    match pattern {
        Term::Var(v) => match s.get(v) {
            Some(bound) => bound == target,
            None => {
                s.insert(v.clone(), target.clone());
                true
            }
        },
        Term::Int(i) => matches!(target, Term::Int(j) if i == j),
        Term::App(f, xs) => match target {
            Term::App(g, ys) if f == g && xs.len() == ys.len() => {
                xs.iter().zip(ys.iter()).all(|(x, y)| match_term(x, y, s))
            }
            _ => false,
        },
    }
}

pub fn is_instance_of(instance: &Atom, general: &Atom) -> bool {
    if instance.pred != general.pred || instance.args.len() != general.args.len() {
        return false;
    }
    let mut s = HashMap::new();
    general.args.iter().zip(&instance.args).all(|(g, i)| match_term(g, i, &mut s))
}

/// A set of equality atoms standing for a substitution.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ConstraintSet {
    pub equations: Vec<(Term, Term)>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ConstraintStatus {
    pub satisfiable: bool,
    pub solution: Option<Substitution>,
}

impl ConstraintSet {
    pub fn new(equations: Vec<(Term, Term)>) -> ConstraintSet {
        ConstraintSet { equations }
    }

    pub fn solve(&self) -> ConstraintStatus {
        let mut b = Bindings::new();
        let ok = self.equations.iter().all(|(l, r)| b.unify(l, r));
        ConstraintStatus { satisfiable: ok, solution: ok.then(|| b.solved()) }
    }

    /// Equations `V = t` for the bindings, restricted to `vars` if given.
    pub fn from_bindings(b: &Bindings, vars: Option<&[Var]>) -> ConstraintSet {
        let mut eqs: Vec<(Term, Term)> = match vars {
            Some(vs) => vs.iter().map(|v| (Term::Var(v.clone()), b.resolve(&Term::Var(v.clone())))).collect(),
            None => b.vars().map(|v| (Term::Var(v.clone()), b.resolve(&Term::Var(v.clone())))).collect(),
        };
        eqs.retain(|(l, r)| l != r);
        eqs.sort();
        ConstraintSet { equations: eqs }
    }
}

impl fmt::Display for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (l, r)) in self.equations.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{l} = {r}")?;
        }
        write!(f, "}}")
    }
}

/// Hands out fresh variable serials. Renaming apart uses one counter per
/// engine or session; there is no global state.
#[derive(Debug, Default, Clone)]
pub struct Renamer {
    next: u32,
}

impl Renamer {
    pub fn new() -> Renamer {
        Renamer { next: 1 }
    }

    pub fn fresh_serial(&mut self) -> u32 {
        let s = self.next.max(1);
        self.next = s + 1;
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> Term {
        Term::var(n)
    }

    #[test]
    fn binds_variable_to_compound() {
        let s = unify(&v("X"), &Term::app("f", vec![v("Y")])).unwrap();
        assert_eq!(s.get(&Var::new("X")), Some(&Term::app("f", vec![v("Y")])));
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn occurs_check_rejects_cyclic_binding() {
        assert!(unify(&v("X"), &Term::app("f", vec![v("X")])).is_none());
        let deep = Term::app("g", vec![Term::constant("a"), Term::list([v("X")])]);
        assert!(unify(&v("X"), &deep).is_none());
    }

    #[test]
    fn merge_clause_two_head_against_ground_atom() {
        // merge(A.As, [], A.As) vs merge([1], [], [1])
        let a_as = Term::cons(v("A"), v("As"));
        let pattern = Atom::new("merge", vec![a_as.clone(), Term::nil(), a_as]);
        let target = Atom::new("merge", vec![Term::int_list(&[1]), Term::nil(), Term::int_list(&[1])]);
        let s = unify_atoms(&pattern, &target).unwrap();
        assert_eq!(s.get(&Var::new("A")), Some(&Term::Int(1)));
        assert_eq!(s.get(&Var::new("As")), Some(&Term::nil()));
    }

    #[test]
    fn constraint_sets() {
        let a = Term::constant("a");
        let b = Term::constant("b");
        let unsat = ConstraintSet::new(vec![(v("X"), a.clone()), (v("X"), b)]);
        assert!(!unsat.solve().satisfiable);

        let chain = ConstraintSet::new(vec![(v("X"), v("Y")), (v("Y"), a.clone())]);
        let st = chain.solve();
        assert!(st.satisfiable);
        let sol = st.solution.unwrap();
        assert_eq!(sol.get(&Var::new("X")), Some(&a));
        assert_eq!(sol.get(&Var::new("Y")), Some(&a));

        let open = ConstraintSet::new(vec![(v("X"), Term::app("f", vec![v("Y")]))]);
        let sol = open.solve().solution.unwrap();
        assert!(!sol.apply(&v("X")).is_ground());
    }

    #[test]
    fn list_display_and_parts() {
        let t = Term::list_with_tail([Term::Int(1), Term::Int(2)], v("T"));
        assert_eq!(t.to_string(), "[1,2|T]");
        assert_eq!(Term::int_list(&[1, 2]).as_list().unwrap().len(), 2);
        assert!(t.as_list().is_none());
        assert_eq!(Term::int_list(&[1, 2, 3]).depth(), 3);
        assert_eq!(Term::constant("a").depth(), 0);
    }

    #[test]
    fn canonical_renames_variables() {
        let a = Atom::new("p", vec![v("Q"), Term::app("f", vec![v("R"), v("Q")])]);
        assert_eq!(a.canonical(), "p(_1,f(_2,_1))");
        let quoted = Atom::new("p", vec![Term::constant("Hello world")]);
        assert_eq!(quoted.to_string(), "p('Hello world')");
    }

    #[test]
    fn instance_matching() {
        let general = Atom::new("p", vec![v("X"), v("X")]);
        assert!(is_instance_of(&Atom::new("p", vec![Term::Int(1), Term::Int(1)]), &general));
        assert!(!is_instance_of(&Atom::new("p", vec![Term::Int(1), Term::Int(2)]), &general));
    }
}
