//! Finite, subterm-closed approximations of the Herbrand universe.

use rustc_hash::FxHashMap;
use std::fmt;
use std::str::FromStr;

use crate::term::{Atom, PredKey, Term, CONS, NIL};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum UniverseError {
    #[error("signature has no constants or integers, so no ground terms exist")]
    NoGroundTerms,
    #[error("malformed universe spec: {0}")]
    Malformed(String),
    #[error("universe too large: {0} tuples for {1}")]
    TooLarge(u128, PredKey),
}

/// Which terms may appear as list elements when lists are shape-restricted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ListElements {
    Ints,
    Atomic,
    Any,
}

/// Restricts `./2` compounds to proper lists of bounded length.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ListShape {
    pub max_len: usize,
    pub elements: ListElements,
}

/// Declarative description of a bounded universe.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UniverseSpec {
    /// Functor names with arities; arity-0 entries are constants.
    pub functors: Vec<(String, usize)>,
    pub ints: Option<(i64, i64)>,
    pub max_depth: usize,
    pub max_terms: Option<usize>,
    pub lists: Option<ListShape>,
}

impl UniverseSpec {
    pub fn new(functors: &[(&str, usize)], max_depth: usize) -> UniverseSpec {
        UniverseSpec {
            functors: functors.iter().map(|(f, n)| (f.to_string(), *n)).collect(),
            ints: None,
            max_depth,
            max_terms: None,
            lists: None,
        }
    }

    pub fn with_ints(mut self, lo: i64, hi: i64) -> UniverseSpec {
        self.ints = Some((lo, hi));
        self
    }

    pub fn with_lists(mut self, max_len: usize, elements: ListElements) -> UniverseSpec {
        self.lists = Some(ListShape { max_len, elements });
        for (f, n) in [(NIL, 0), (CONS, 2)] {
            if !self.functors.iter().any(|(g, m)| g == f && *m == n) {
                self.functors.push((f.to_string(), n));
            }
        }
        self
    }

    pub fn with_max_terms(mut self, n: usize) -> UniverseSpec {
        self.max_terms = Some(n);
        self
    }

    pub fn build(&self) -> Result<Universe, UniverseError> {
        Universe::new(self.clone())
    }
}

impl fmt::Display for UniverseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "depth={}", self.max_depth)?;
        if let Some((lo, hi)) = self.ints {
            write!(f, " ints={lo}..{hi}")?;
        }
        let fs: Vec<String> = self.functors.iter().map(|(n, a)| format!("{n}/{a}")).collect();
        write!(f, " functors={}", fs.join(","))?;
        if let Some(n) = self.max_terms {
            write!(f, " terms={n}")?;
        }
        if let Some(shape) = self.lists {
            let el = match shape.elements {
                ListElements::Ints => "ints",
                ListElements::Atomic => "atomic",
                ListElements::Any => "any",
            };
            write!(f, " lists={} elements={el}", shape.max_len)?;
        }
        Ok(())
    }
}

impl FromStr for UniverseSpec {
    type Err = UniverseError;

    /// Parses `depth=<d> ints=<lo>..<hi> functors=<f/n,...>` with optional
    /// `terms=<n>`, `lists=<len>` and `elements=ints|atomic|any`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |m: &str| UniverseError::Malformed(m.to_string());
        let mut spec = UniverseSpec { functors: vec![], ints: None, max_depth: 0, max_terms: None, lists: None };
        let mut depth = None;
        let mut lists = None;
        let mut elements = ListElements::Ints;
        for field in s.split_whitespace() {
            let (key, value) = field.split_once('=').ok_or_else(|| bad(field))?;
            match key {
                "depth" => depth = Some(value.parse().map_err(|_| bad(field))?),
                "ints" => {
                    let (lo, hi) = value.split_once("..").ok_or_else(|| bad(field))?;
                    let lo: i64 = lo.parse().map_err(|_| bad(field))?;
                    let hi: i64 = hi.parse().map_err(|_| bad(field))?;
                    if lo > hi {
                        return Err(bad(field));
                    }
                    spec.ints = Some((lo, hi));
                }
                "functors" => {
                    for item in value.split(',').filter(|i| !i.is_empty()) {
                        let (name, arity) = item.rsplit_once('/').ok_or_else(|| bad(item))?;
                        let arity: usize = arity.parse().map_err(|_| bad(item))?;
                        let name = name.trim_matches('\'');
                        if name.is_empty() {
                            return Err(bad(item));
                        }
                        spec.functors.push((name.to_string(), arity));
                    }
                }
                "terms" => spec.max_terms = Some(value.parse().map_err(|_| bad(field))?),
                "lists" => lists = Some(value.parse().map_err(|_| bad(field))?),
                "elements" => {
                    elements = match value {
                        "ints" => ListElements::Ints,
                        "atomic" => ListElements::Atomic,
                        "any" => ListElements::Any,
                        _ => return Err(bad(field)),
                    }
                }
                _ => return Err(bad(field)),
            }
        }
        spec.max_depth = depth.ok_or_else(|| bad("missing depth"))?;
        if let Some(len) = lists {
            spec = spec.with_lists(len, elements);
        }
        Ok(spec)
    }
}

/// An enumerated bounded universe. Enumeration is ordered by depth, then
/// functor, then arguments (by their own enumeration order).
#[derive(Clone, Debug)]
pub struct Universe {
    spec: UniverseSpec,
    terms: Vec<Term>,
    index: FxHashMap<Term, u32>,
}

impl PartialEq for Universe {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl Universe {
    pub fn new(spec: UniverseSpec) -> Result<Universe, UniverseError> {
        let terms = enumerate(&spec)?;
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Ok(Universe { spec, terms, index })
    }

    /// A universe with no terms, for propositional programs.
    pub fn empty() -> Universe {
        Universe {
            spec: UniverseSpec { functors: vec![], ints: None, max_depth: 0, max_terms: None, lists: None },
            terms: vec![],
            index: FxHashMap::default(),
        }
    }

    pub fn spec(&self) -> &UniverseSpec {
        &self.spec
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, t: &Term) -> Option<u32> {
        self.index.get(t).copied()
    }

    pub fn contains(&self, t: &Term) -> bool {
        self.index.contains_key(t)
    }

    pub fn contains_atom(&self, a: &Atom) -> bool {
        a.args.iter().all(|t| self.contains(t))
    }

    /// Number of ground atoms of the given arity.
    pub fn tuple_count(&self, arity: usize) -> Option<usize> {
        (self.terms.len() as u128)
            .checked_pow(arity as u32)
            .filter(|n| *n <= usize::MAX as u128)
            .map(|n| n as usize)
    }

    pub fn checked_tuple_count(&self, pred: &PredKey) -> Result<usize, UniverseError> {
        const LIMIT: u128 = 50_000_000;
        let n = (self.terms.len() as u128).pow(pred.arity as u32);
        if n > LIMIT {
            return Err(UniverseError::TooLarge(n, pred.clone()));
        }
        Ok(n as usize)
    }

    /// Position of an argument tuple in the mixed-radix tuple order, or
    /// `None` if some argument is outside the universe.
    pub fn tuple_index(&self, args: &[Term]) -> Option<usize> {
        let n = self.terms.len();
        let mut idx = 0usize;
        for a in args {
            idx = idx * n + self.index_of(a)? as usize;
        }
        Some(idx)
    }

    pub fn tuple_at(&self, arity: usize, mut idx: usize) -> Vec<Term> {
        let n = self.terms.len();
        let mut out = vec![Term::nil(); arity];
        for slot in out.iter_mut().rev() {
            *slot = self.terms[idx % n].clone();
            idx /= n;
        }
        out
    }

    pub fn atom_at(&self, pred: &PredKey, idx: usize) -> Atom {
        Atom::new(&pred.name, self.tuple_at(pred.arity, idx))
    }

    /// All ground atoms for a predicate, in tuple order.
    pub fn atoms<'a>(&'a self, pred: &'a PredKey) -> impl Iterator<Item = Atom> + 'a {
        let count = if pred.arity == 0 { 1 } else { self.tuple_count(pred.arity).unwrap_or(0) };
        (0..count).map(move |i| self.atom_at(pred, i))
    }
}

pub fn enumerate_ground(spec: &UniverseSpec) -> Result<Vec<Term>, UniverseError> {
    enumerate(spec)
}

fn is_list_element(t: &Term, kind: ListElements) -> bool {
    match kind {
        ListElements::Ints => matches!(t, Term::Int(_)),
        ListElements::Atomic => t.depth() == 0,
        ListElements::Any => true,
    }
}

fn list_len(t: &Term) -> Option<usize> {
    t.as_list().map(|l| l.len())
}

fn enumerate(spec: &UniverseSpec) -> Result<Vec<Term>, UniverseError> {
    let mut constants: Vec<&str> = spec.functors.iter().filter(|(_, n)| *n == 0).map(|(f, _)| f.as_str()).collect();
    constants.sort();
    constants.dedup();
    let mut compounds: Vec<(&str, usize)> =
        spec.functors.iter().filter(|(_, n)| *n > 0).map(|(f, n)| (f.as_str(), *n)).collect();
    compounds.sort();
    compounds.dedup();

    let mut terms: Vec<Term> = Vec::new();
    if let Some((lo, hi)) = spec.ints {
        terms.extend((lo..=hi).map(Term::Int));
    }
    // numeric constant names denote integers, so `0/0` and `ints=0..0` agree
    for c in &constants {
        let t = match c.parse::<i64>() {
            Ok(i) => Term::Int(i),
            Err(_) => Term::constant(c),
        };
        if !terms.contains(&t) {
            terms.push(t);
        }
    }
    if terms.is_empty() {
        return Err(UniverseError::NoGroundTerms);
    }
    let cap = spec.max_terms.unwrap_or(usize::MAX);
    terms.truncate(cap);

    let mut level_start = 0usize;
    for _depth in 1..=spec.max_depth {
        if terms.len() >= cap {
            break;
        }
        let prev_end = terms.len();
        let mut added = Vec::new();
        for &(f, arity) in &compounds {
            let mut choice = vec![0usize; arity];
            'tuples: loop {
                // at least one argument must come from the previous level
                if choice.iter().any(|&c| c >= level_start) {
                    let args: Vec<Term> = choice.iter().map(|&c| terms[c].clone()).collect();
                    let t = Term::app(f, args);
                    if admissible_shape(&t, spec) {
                        added.push(t);
                        if prev_end + added.len() >= cap {
                            break 'tuples;
                        }
                    }
                }
                let mut pos = arity;
                loop {
                    if pos == 0 {
                        break 'tuples;
                    }
                    pos -= 1;
                    choice[pos] += 1;
                    if choice[pos] < prev_end {
                        break;
                    }
                    choice[pos] = 0;
                }
            }
            if prev_end + added.len() >= cap {
                break;
            }
        }
        if added.is_empty() {
            break;
        }
        level_start = prev_end;
        terms.extend(added);
    }
    terms.truncate(cap);
    Ok(terms)
}

fn admissible_shape(t: &Term, spec: &UniverseSpec) -> bool {
    let Some(shape) = spec.lists else { return true };
    match t.as_cons() {
        None => true,
        Some((head, _)) => {
            is_list_element(head, shape.elements) && list_len(t).is_some_and(|n| n <= shape.max_len)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn numerals_to_depth_two() {
        let u = UniverseSpec::new(&[("0", 0), ("s", 1)], 2).build().unwrap();
        let shown: Vec<String> = u.terms().iter().map(|t| t.to_string()).collect();
        assert_eq!(shown, ["0", "s(0)", "s(s(0))"]);
    }

    #[test]
    fn nil_only_at_depth_zero() {
        let u = UniverseSpec::new(&[("[]", 0)], 0).build().unwrap();
        assert_eq!(u.terms(), &[Term::nil()]);
    }

    #[test]
    fn no_constants_is_an_error() {
        let err = UniverseSpec::new(&[("s", 1)], 3).build().unwrap_err();
        assert_eq!(err, UniverseError::NoGroundTerms);
    }

    /// Independent generator: all terms of depth <= d by structural recursion,
    /// then sorted into a set.
    fn brute_force(consts: &[Term], funs: &[(&str, usize)], d: usize) -> BTreeSet<Term> {
        let mut set: BTreeSet<Term> = consts.iter().cloned().collect();
        for _ in 0..d {
            let cur: Vec<Term> = set.iter().cloned().collect();
            for (f, n) in funs {
                let mut tuples: Vec<Vec<Term>> = vec![vec![]];
                for _ in 0..*n {
                    tuples = tuples
                        .into_iter()
                        .flat_map(|t| cur.iter().map(move |c| {
                            let mut t = t.clone();
                            t.push(c.clone());
                            t
                        }))
                        .collect();
                }
                for args in tuples {
                    set.insert(Term::app(f, args));
                }
            }
        }
        set
    }

    #[test]
    fn list_universe_matches_brute_force_count() {
        // {[]/0, ./2, ints 1..1}, depth 2
        let spec = UniverseSpec::new(&[("[]", 0), (".", 2)], 2).with_ints(1, 1);
        let u = spec.build().unwrap();
        let oracle = brute_force(&[Term::Int(1), Term::nil()], &[(".", 2)], 2);
        let got: BTreeSet<Term> = u.terms().iter().cloned().collect();
        assert_eq!(got.len(), u.len(), "duplicates in enumeration");
        assert_eq!(got, oracle);
        assert_eq!(u.len(), 2 + 4 + 32);
        for want in [Term::nil(), Term::Int(1), Term::int_list(&[1]), Term::list([Term::nil()]), Term::int_list(&[1, 1])] {
            assert!(u.contains(&want), "{want} missing");
        }
    }

    #[test]
    fn shaped_lists_are_subterm_closed() {
        let spec = UniverseSpec::new(&[("a", 0)], 3).with_ints(0, 3).with_lists(3, ListElements::Ints);
        let u = spec.build().unwrap();
        // 4 ints + a + [] + 4 + 16 + 64 lists
        assert_eq!(u.len(), 4 + 1 + 1 + 4 + 16 + 64);
        for t in u.terms() {
            let mut subs = BTreeSet::new();
            t.subterms(&mut subs);
            assert!(subs.iter().all(|s| u.contains(s)), "{t} not subterm closed");
        }
    }

    #[test]
    fn spec_round_trips_through_text() {
        let text = "depth=3 ints=0..3 functors=a/0,[]/0,./2 lists=3 elements=ints";
        let spec: UniverseSpec = text.parse().unwrap();
        let again: UniverseSpec = spec.to_string().parse().unwrap();
        assert_eq!(spec, again);
        assert!("depth=x".parse::<UniverseSpec>().is_err());
    }

    #[test]
    fn tuple_indexing_round_trips() {
        let u = UniverseSpec::new(&[("a", 0), ("b", 0), ("f", 1)], 1).build().unwrap();
        for i in 0..u.tuple_count(2).unwrap() {
            let t = u.tuple_at(2, i);
            assert_eq!(u.tuple_index(&t), Some(i));
        }
    }
}
