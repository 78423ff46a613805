//! Total three-valued interpretations over a bounded universe.
//!
//! Each predicate is either a dense table indexed by argument tuple or a
//! named decision procedure from [`SpecRegistry`]. Equality and the integer
//! comparisons have a fixed two-valued meaning.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::syntax::{builtin_cmp, is_builtin, parse_atom};
use crate::term::{Atom, PredKey, Term};
use crate::truth::TruthValue::{self, F, I, T};
use crate::universe::{Universe, UniverseError, UniverseSpec};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InterpError {
    #[error("atom {0} is outside the bounded universe")]
    OutsideUniverse(Atom),
    #[error("atom {0} is not ground")]
    NotGround(Atom),
    #[error("predicate {0} is not declared in the interpretation")]
    UnknownPredicate(PredKey),
    #[error("interpretations range over different universes")]
    UniverseMismatch,
    #[error("precondition violated at {atom}: {reason}")]
    Precondition { atom: Atom, reason: String },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Universe(#[from] UniverseError),
}

/// A named total decision procedure for one predicate.
#[derive(Clone)]
pub struct SpecFn {
    pub name: String,
    f: Arc<dyn Fn(&Atom) -> TruthValue + Send + Sync>,
}

impl SpecFn {
    pub fn new(name: &str, f: impl Fn(&Atom) -> TruthValue + Send + Sync + 'static) -> SpecFn {
        SpecFn { name: name.to_string(), f: Arc::new(f) }
    }

    pub fn eval(&self, a: &Atom) -> TruthValue {
        (self.f)(a)
    }
}

impl fmt::Debug for SpecFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpecFn({})", self.name)
    }
}

#[derive(Clone, Debug)]
pub enum PredTable {
    Dense(Arc<Vec<TruthValue>>),
    Spec(SpecFn),
}

#[derive(Clone, Debug)]
pub struct Interpretation {
    universe: Arc<Universe>,
    preds: BTreeMap<PredKey, PredTable>,
}

fn outside(a: &Atom) -> InterpError {
    InterpError::OutsideUniverse(a.clone())
}

/// Value of a ground builtin atom, or `None` if `a` is not a builtin.
pub fn builtin_truth(a: &Atom) -> Option<TruthValue> {
    if &*a.pred == "=" && a.args.len() == 2 {
        return Some(TruthValue::from_bool(a.args[0] == a.args[1]));
    }
    let op = builtin_cmp(a)?;
    Some(match (a.args[0].as_int(), a.args[1].as_int()) {
        (Some(x), Some(y)) => TruthValue::from_bool(op.holds(x, y)),
        _ => F,
    })
}

impl Interpretation {
    pub fn new(universe: Arc<Universe>) -> Interpretation {
        Interpretation { universe, preds: BTreeMap::new() }
    }

    /// Every atom of each listed predicate mapped to `value`.
    pub fn constant(universe: Arc<Universe>, preds: &[PredKey], value: TruthValue) -> Result<Interpretation, InterpError> {
        let mut m = Interpretation::new(universe);
        for p in preds {
            m.declare(p.clone(), value)?;
        }
        Ok(m)
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn predicates(&self) -> impl Iterator<Item = &PredKey> {
        self.preds.keys()
    }

    pub fn has_predicate(&self, p: &PredKey) -> bool {
        self.preds.contains_key(p)
    }

    pub fn table(&self, p: &PredKey) -> Option<&PredTable> {
        self.preds.get(p)
    }

    pub fn atom_count(&self, p: &PredKey) -> Result<usize, InterpError> {
        Ok(self.universe.checked_tuple_count(p)?)
    }

    /// Adds (or resets) a dense predicate with every atom at `value`.
    pub fn declare(&mut self, p: PredKey, value: TruthValue) -> Result<(), InterpError> {
        let n = self.atom_count(&p)?;
        self.preds.insert(p, PredTable::Dense(Arc::new(vec![value; n])));
        Ok(())
    }

    pub fn set_dense(&mut self, p: PredKey, values: Vec<TruthValue>) -> Result<(), InterpError> {
        let n = self.atom_count(&p)?;
        if values.len() != n {
            return Err(InterpError::Format { line: 0, message: format!("{p}: expected {n} values, got {}", values.len()) });
        }
        self.preds.insert(p, PredTable::Dense(Arc::new(values)));
        Ok(())
    }

    pub fn set_spec(&mut self, p: PredKey, spec: SpecFn) {
        self.preds.insert(p, PredTable::Spec(spec));
    }

    pub fn remove(&mut self, p: &PredKey) {
        self.preds.remove(p);
    }

    fn index(&self, a: &Atom) -> Result<usize, InterpError> {
        if !a.is_ground() {
            return Err(InterpError::NotGround(a.clone()));
        }
        self.universe.tuple_index(&a.args).ok_or_else(|| outside(a))
    }

    fn lookup(&self, a: &Atom) -> Option<&PredTable> {
        self.preds.iter().find(|(k, _)| k.arity == a.args.len() && k.name == *a.pred).map(|(_, t)| t)
    }

    pub fn truth_of(&self, a: &Atom) -> Result<TruthValue, InterpError> {
        if let Some(v) = builtin_truth(a) {
            if !a.is_ground() {
                return Err(InterpError::NotGround(a.clone()));
            }
            return Ok(v);
        }
        let table = self.lookup(a).ok_or_else(|| InterpError::UnknownPredicate(a.key()))?;
        let idx = self.index(a)?;
        Ok(match table {
            PredTable::Dense(v) => v[idx],
            PredTable::Spec(s) => s.eval(a),
        })
    }

    /// Sets one atom, materializing a spec-backed predicate first.
    pub fn set(&mut self, a: &Atom, v: TruthValue) -> Result<(), InterpError> {
        let key = a.key();
        if is_builtin(&key) {
            return Err(InterpError::Precondition { atom: a.clone(), reason: "built-in atoms are fixed".into() });
        }
        let idx = self.index(a)?;
        if !self.preds.contains_key(&key) {
            return Err(InterpError::UnknownPredicate(key));
        }
        let dense = self.values(&key)?;
        let mut values = Arc::unwrap_or_clone(dense);
        values[idx] = v;
        self.preds.insert(key, PredTable::Dense(Arc::new(values)));
        Ok(())
    }

    /// All values of a predicate in tuple order.
    pub fn values(&self, p: &PredKey) -> Result<Arc<Vec<TruthValue>>, InterpError> {
        match self.preds.get(p).ok_or_else(|| InterpError::UnknownPredicate(p.clone()))? {
            PredTable::Dense(v) => Ok(v.clone()),
            PredTable::Spec(s) => {
                let n = self.atom_count(p)?;
                let u = &self.universe;
                let v = (0..n).into_par_iter().map(|i| s.eval(&u.atom_at(p, i))).collect();
                Ok(Arc::new(v))
            }
        }
    }

    /// The same interpretation with every predicate as an explicit table.
    pub fn materialize(&self) -> Result<Interpretation, InterpError> {
        let mut out = Interpretation::new(self.universe.clone());
        for p in self.preds.keys() {
            out.preds.insert(p.clone(), PredTable::Dense(self.values(p)?));
        }
        Ok(out)
    }

    /// Ground atoms of `p` with value `v`, in tuple order.
    pub fn atoms_with(&self, p: &PredKey, v: TruthValue) -> Result<Vec<Atom>, InterpError> {
        let values = self.values(p)?;
        Ok(values.iter().enumerate().filter(|(_, x)| **x == v).map(|(i, _)| self.universe.atom_at(p, i)).collect())
    }

    pub fn count(&self, v: TruthValue) -> Result<usize, InterpError> {
        let mut n = 0;
        for p in self.preds.keys() {
            n += self.values(p)?.iter().filter(|x| **x == v).count();
        }
        Ok(n)
    }

    fn zip_preds(&self, other: &Interpretation) -> Result<Vec<(PredKey, Arc<Vec<TruthValue>>, Arc<Vec<TruthValue>>)>, InterpError> {
        if self.universe.spec() != other.universe.spec() {
            return Err(InterpError::UniverseMismatch);
        }
        let mut out = Vec::new();
        for p in self.preds.keys() {
            if !other.preds.contains_key(p) {
                return Err(InterpError::UnknownPredicate(p.clone()));
            }
            out.push((p.clone(), self.values(p)?, other.values(p)?));
        }
        if let Some(p) = other.preds.keys().find(|p| !self.preds.contains_key(*p)) {
            return Err(InterpError::UnknownPredicate(p.clone()));
        }
        Ok(out)
    }

    /// True iff both give every atom the same value.
    pub fn same_values(&self, other: &Interpretation) -> Result<bool, InterpError> {
        Ok(self.zip_preds(other)?.iter().all(|(_, a, b)| a == b))
    }

    /// First atom on which the two differ.
    pub fn first_difference(&self, other: &Interpretation) -> Result<Option<(Atom, TruthValue, TruthValue)>, InterpError> {
        for (p, a, b) in self.zip_preds(other)? {
            if let Some(i) = (0..a.len()).find(|i| a[*i] != b[*i]) {
                return Ok(Some((self.universe.atom_at(&p, i), a[i], b[i])));
            }
        }
        Ok(None)
    }

    /// Information ordering: T and F sets only grow from `self` to `other`.
    pub fn leq_info(&self, other: &Interpretation) -> Result<bool, InterpError> {
        for (_, a, b) in self.zip_preds(other)? {
            if !crate::truth::leq_info(&a, &b).unwrap_or(false) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn combine(
        &self,
        other: &Interpretation,
        what: &str,
        pre: impl Fn(TruthValue, TruthValue) -> bool,
        f: impl Fn(TruthValue, TruthValue) -> TruthValue,
    ) -> Result<Interpretation, InterpError> {
        let mut out = Interpretation::new(self.universe.clone());
        for (p, a, b) in self.zip_preds(other)? {
            if let Some(i) = (0..a.len()).find(|i| !pre(a[*i], b[*i])) {
                return Err(InterpError::Precondition {
                    atom: self.universe.atom_at(&p, i),
                    reason: format!("{what} ({} vs {})", a[i], b[i]),
                });
            }
            let v = a.iter().zip(b.iter()).map(|(x, y)| f(*x, *y)).collect();
            out.preds.insert(p, PredTable::Dense(Arc::new(v)));
        }
        Ok(out)
    }

    /// `<I, T1 ∩ T2>` for two interpretations with the same inadmissible set.
    pub fn intersect_true(&self, other: &Interpretation) -> Result<Interpretation, InterpError> {
        self.combine(
            other,
            "inadmissible sets differ",
            |a, b| (a == I) == (b == I),
            |a, b| if a == I { I } else if a == T && b == T { T } else { F },
        )
    }

    /// `<I1 ∩ I2, T>` for two interpretations with the same true set.
    pub fn intersect_inadmissible(&self, other: &Interpretation) -> Result<Interpretation, InterpError> {
        self.combine(
            other,
            "true sets differ",
            |a, b| (a == T) == (b == T),
            |a, b| if a == T { T } else if a == I && b == I { I } else { F },
        )
    }

    /// Re-splits `T ∪ I` into new true and inadmissible sets; F is kept.
    pub fn repartition(&self, inadmissible: impl Fn(&Atom) -> bool) -> Result<Interpretation, InterpError> {
        let mut out = Interpretation::new(self.universe.clone());
        for p in self.preds.keys() {
            let vals = self.values(p)?;
            let v = vals
                .iter()
                .enumerate()
                .map(|(i, x)| match x {
                    F => F,
                    _ if inadmissible(&self.universe.atom_at(p, i)) => I,
                    _ => T,
                })
                .collect();
            out.preds.insert(p.clone(), PredTable::Dense(Arc::new(v)));
        }
        Ok(out)
    }

    /// Map every atom's value through `f`.
    pub fn map_values(&self, f: impl Fn(&Atom, TruthValue) -> TruthValue) -> Result<Interpretation, InterpError> {
        let mut out = Interpretation::new(self.universe.clone());
        for p in self.preds.keys() {
            let vals = self.values(p)?;
            let v = vals.iter().enumerate().map(|(i, x)| f(&self.universe.atom_at(p, i), *x)).collect();
            out.preds.insert(p.clone(), PredTable::Dense(Arc::new(v)));
        }
        Ok(out)
    }

    /// Deterministic text form; see [`load_interpretation`].
    pub fn save(&self) -> Result<String, InterpError> {
        let mut out = String::new();
        let spec = self.universe.spec();
        if spec.functors.is_empty() && spec.ints.is_none() {
            out.push_str("universe none\n");
        } else {
            out.push_str(&format!("universe {spec}\n"));
        }
        for (p, table) in &self.preds {
            match table {
                PredTable::Spec(s) => out.push_str(&format!("spec {p} builtin:{}\n", s.name)),
                PredTable::Dense(vals) => {
                    let mut counts = [0usize; 3];
                    for v in vals.iter() {
                        counts[TruthValue::ALL.iter().position(|x| x == v).unwrap()] += 1;
                    }
                    // ties resolve in T, F, I order
                    let default = TruthValue::ALL[(0..3).max_by_key(|i| (counts[*i], 3 - i)).unwrap()];
                    out.push_str(&format!("pred {p}\ndefault {default}\n"));
                    for (i, v) in vals.iter().enumerate() {
                        if *v != default {
                            out.push_str(&format!("{v} {}.\n", self.universe.atom_at(p, i)));
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Built-in intended interpretations

fn int_list(t: &Term) -> Option<Vec<i64>> {
    t.as_list()?.into_iter().map(Term::as_int).collect()
}

fn sorted_int_list(t: &Term) -> Option<Vec<i64>> {
    int_list(t).filter(|v| v.windows(2).all(|w| w[0] <= w[1]))
}

fn merged(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut v: Vec<i64> = a.iter().chain(b).copied().collect();
    v.sort();
    v
}

fn merge_sorted_numbers(a: &Atom) -> TruthValue {
    match (sorted_int_list(&a.args[0]), sorted_int_list(&a.args[1])) {
        (Some(x), Some(y)) => TruthValue::from_bool(int_list(&a.args[2]) == Some(merged(&x, &y))),
        _ => I,
    }
}

fn merge_sorted_split(a: &Atom) -> TruthValue {
    let (x, y) = (sorted_int_list(&a.args[0]), sorted_int_list(&a.args[1]));
    let z = sorted_int_list(&a.args[2]);
    match (x, y) {
        (Some(x), Some(y)) => TruthValue::from_bool(z == Some(merged(&x, &y))),
        _ if z.is_some() => F,
        _ => I,
    }
}

/// `Some(n)` for the numeral `s^n(0)`.
pub fn numeral(t: &Term) -> Option<usize> {
    let mut n = 0;
    let mut cur = t;
    loop {
        match cur {
            Term::Int(0) => return Some(n),
            Term::App(f, args) if &**f == "s" && args.len() == 1 => {
                n += 1;
                cur = &args[0];
            }
            _ => return None,
        }
    }
}

fn even_odd_numerals(a: &Atom) -> TruthValue {
    let want_even = a.pred.starts_with('e');
    match numeral(&a.args[0]) {
        Some(n) => TruthValue::from_bool((n % 2 == 0) == want_even),
        None => I,
    }
}

fn member_listsecond(a: &Atom) -> TruthValue {
    match a.args[1].as_list() {
        Some(items) => TruthValue::from_bool(items.contains(&&a.args[0])),
        None => I,
    }
}

fn subset_lists(a: &Atom) -> TruthValue {
    match (a.args[0].as_list(), a.args[1].as_list()) {
        (Some(l), Some(m)) => {
            let sub = l.iter().all(|x| m.contains(x));
            TruthValue::from_bool(sub == (&*a.pred != "notsubset"))
        }
        _ => I,
    }
}

fn subs_dupfree(a: &Atom) -> TruthValue {
    let Some(m) = a.args[1].as_list() else { return I };
    let ok = a.args[0].as_list().is_some_and(|l| {
        l.iter().enumerate().all(|(i, x)| m.contains(x) && !l[..i].contains(x))
    });
    TruthValue::from_bool(ok)
}

fn select_listsecond(a: &Atom) -> TruthValue {
    let Some(l) = a.args[1].as_list() else { return I };
    let ok = a.args[2].as_list().is_some_and(|m| {
        m.len() + 1 == l.len()
            && (0..l.len()).any(|i| l[i] == &a.args[0] && l[..i] == m[..i] && l[i + 1..] == m[i..])
    });
    TruthValue::from_bool(ok)
}

type SpecImpl = fn(&Atom) -> TruthValue;

/// Named intended interpretations, each with the arity it expects.
#[derive(Clone)]
pub struct SpecRegistry {
    entries: BTreeMap<String, (usize, SpecImpl)>,
}

impl SpecRegistry {
    pub fn standard() -> SpecRegistry {
        let mut entries: BTreeMap<String, (usize, SpecImpl)> = BTreeMap::new();
        entries.insert("merge_sorted_numbers".into(), (3, merge_sorted_numbers));
        entries.insert("merge_sorted_split".into(), (3, merge_sorted_split));
        entries.insert("even_odd_numerals".into(), (1, even_odd_numerals));
        entries.insert("member_listsecond".into(), (2, member_listsecond));
        entries.insert("subset_lists".into(), (2, subset_lists));
        entries.insert("subs_dupfree".into(), (2, subs_dupfree));
        entries.insert("select_listsecond".into(), (3, select_listsecond));
        SpecRegistry { entries }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get(&self, name: &str, arity: usize) -> Option<SpecFn> {
        let (n, f) = self.entries.get(name)?;
        (*n == arity).then(|| SpecFn::new(name, *f))
    }
}

impl Default for SpecRegistry {
    fn default() -> Self {
        SpecRegistry::standard()
    }
}

// ---------------------------------------------------------------------------
// File format

fn parse_pred_key(s: &str) -> Option<PredKey> {
    let (name, arity) = s.rsplit_once('/')?;
    Some(PredKey::new(name, arity.parse().ok()?))
}

fn parse_universe_line(rest: &str, line: usize) -> Result<Arc<Universe>, InterpError> {
    if rest == "none" {
        return Ok(Arc::new(Universe::empty()));
    }
    let spec: UniverseSpec = rest.parse().map_err(|e: UniverseError| InterpError::Format { line, message: e.to_string() })?;
    Ok(Arc::new(spec.build()?))
}

/// Reads an interpretation. `universe` supplies an already built universe;
/// the file's own `universe` line must then describe the same one.
pub fn load_interpretation(
    text: &str,
    registry: &SpecRegistry,
    universe: Option<Arc<Universe>>,
) -> Result<Interpretation, InterpError> {
    let fmt_err = |line: usize, message: String| InterpError::Format { line, message };
    let mut uni: Option<Arc<Universe>> = None;
    let mut global_default: Option<TruthValue> = None;
    // per predicate: default and explicit atoms
    let mut sections: Vec<(PredKey, Option<TruthValue>, HashMap<usize, (TruthValue, usize)>)> = Vec::new();
    let mut specs: Vec<(PredKey, SpecFn)> = Vec::new();
    let mut current: Option<usize> = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('%').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (word, rest) = content.split_once(char::is_whitespace).map(|(w, r)| (w, r.trim())).unwrap_or((content, ""));
        match word {
            "universe" => {
                if uni.is_some() {
                    return Err(fmt_err(line, "second universe line".into()));
                }
                let file_u = parse_universe_line(rest, line)?;
                uni = Some(match &universe {
                    Some(u) if u.spec() != file_u.spec() => return Err(InterpError::UniverseMismatch),
                    Some(u) => u.clone(),
                    None => file_u,
                });
            }
            "pred" => {
                let key = parse_pred_key(rest).ok_or_else(|| fmt_err(line, format!("bad predicate `{rest}`")))?;
                if sections.iter().any(|(k, ..)| *k == key) || specs.iter().any(|(k, _)| *k == key) {
                    return Err(fmt_err(line, format!("predicate {key} declared twice")));
                }
                sections.push((key, None, HashMap::new()));
                current = Some(sections.len() - 1);
            }
            "default" => {
                let v: TruthValue = rest.parse().map_err(|e: crate::truth::ParseTruthError| fmt_err(line, e.to_string()))?;
                match current {
                    Some(c) if sections[c].1.is_some() => return Err(fmt_err(line, "second default for predicate".into())),
                    Some(c) => sections[c].1 = Some(v),
                    None if global_default.is_some() => return Err(fmt_err(line, "second global default".into())),
                    None => global_default = Some(v),
                }
            }
            "spec" => {
                let (k, b) = rest.split_once(char::is_whitespace).ok_or_else(|| fmt_err(line, "expected `spec name/arity builtin:name`".into()))?;
                let key = parse_pred_key(k).ok_or_else(|| fmt_err(line, format!("bad predicate `{k}`")))?;
                let name = b.trim().strip_prefix("builtin:").ok_or_else(|| fmt_err(line, "expected builtin:<name>".into()))?;
                let f = registry.get(name, key.arity).ok_or_else(|| fmt_err(line, format!("no builtin spec {name} for {key}")))?;
                if sections.iter().any(|(k, ..)| *k == key) || specs.iter().any(|(k, _)| *k == key) {
                    return Err(fmt_err(line, format!("predicate {key} declared twice")));
                }
                specs.push((key, f));
                current = None;
            }
            "T" | "F" | "I" => {
                let u = uni.as_ref().ok_or_else(|| fmt_err(line, "atom before universe line".into()))?;
                let v: TruthValue = word.parse().unwrap();
                let atom = parse_atom(rest).map_err(|e| fmt_err(line, e.to_string()))?;
                if !atom.is_ground() {
                    return Err(fmt_err(line, format!("atom {atom} is not ground")));
                }
                if is_builtin(&atom.key()) {
                    return Err(fmt_err(line, format!("built-in atom {atom} cannot be assigned")));
                }
                let idx = u.tuple_index(&atom.args).ok_or_else(|| fmt_err(line, format!("atom {atom} is outside the universe")))?;
                let key = atom.key();
                let s = match sections.iter().position(|(k, ..)| *k == key) {
                    Some(s) => s,
                    None if specs.iter().any(|(k, _)| *k == key) => {
                        return Err(fmt_err(line, format!("{key} is defined by a spec")));
                    }
                    None => {
                        sections.push((key, None, HashMap::new()));
                        sections.len() - 1
                    }
                };
                if let Some((old, at)) = sections[s].2.insert(idx, (v, line)) {
                    let what = if old == v { "duplicate" } else { "conflicting" };
                    return Err(fmt_err(line, format!("{what} value for {atom} (first given on line {at})")));
                }
            }
            other => return Err(fmt_err(line, format!("unknown directive `{other}`"))),
        }
    }
    let u = uni.ok_or_else(|| fmt_err(0, "missing universe line".into()))?;
    let mut m = Interpretation::new(u.clone());
    for (key, default, atoms) in sections {
        let n = u.checked_tuple_count(&key)?;
        let mut vals: Vec<Option<TruthValue>> = vec![default.or(global_default); n];
        for (idx, (v, _)) in atoms {
            vals[idx] = Some(v);
        }
        let vals = vals
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| fmt_err(0, format!("no value for {} and no default", u.atom_at(&key, i)))))
            .collect::<Result<Vec<_>, _>>()?;
        m.preds.insert(key, PredTable::Dense(Arc::new(vals)));
    }
    for (key, f) in specs {
        m.set_spec(key, f);
    }
    Ok(m)
}
