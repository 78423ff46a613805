//! Concrete syntax for pure Prolog, disjunctive normal form and completion.
//!
//! Both `A.As` and `[A|As]` list notations are accepted; the printer emits
//! the bracket form. A `.` ends a clause only when followed by whitespace,
//! a comment or end of input.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::term::{write_name, Atom, Bindings, PredKey, Renamer, Term, Var};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SyntaxError {
    #[error("{line}:{col}: {message}")]
    Parse { line: usize, col: usize, message: String },
    #[error("{line}:{col}: impure construct `{what}` is not supported")]
    Impure { line: usize, col: usize, what: String },
    #[error("arity mismatch for {pred}: got {got} arguments")]
    Arity { pred: PredKey, got: usize },
    #[error("unknown predicate {0}")]
    UnknownPredicate(PredKey),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Le,
    Gt,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Le => "=<",
            CmpOp::Gt => ">",
        }
    }

    pub fn from_symbol(s: &str) -> Option<CmpOp> {
        match s {
            "=<" => Some(CmpOp::Le),
            ">" => Some(CmpOp::Gt),
            _ => None,
        }
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
        }
    }
}

impl Bindings {
    pub fn resolve_literal(&self, l: &Literal) -> Literal {
        match l {
            Literal::Eq(a, b) => Literal::Eq(self.resolve(a), self.resolve(b)),
            Literal::Pos(a) => Literal::Pos(self.resolve_atom(a)),
            Literal::Neg(a) => Literal::Neg(self.resolve_atom(a)),
        }
    }
}

/// Integer comparisons are atoms with a fixed interpretation.
pub fn builtin_cmp(atom: &Atom) -> Option<CmpOp> {
    if atom.args.len() == 2 {
        CmpOp::from_symbol(&atom.pred)
    } else {
        None
    }
}

pub fn is_builtin(key: &PredKey) -> bool {
    key.arity == 2 && (key.name == "=" || CmpOp::from_symbol(&key.name).is_some())
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    Eq(Term, Term),
    Pos(Atom),
    Neg(Atom),
}

impl Literal {
    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Literal::Eq(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Literal::Pos(a) | Literal::Neg(a) => a.collect_vars(out),
        }
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn map_vars(&self, f: &mut impl FnMut(&Var) -> Term) -> Literal {
        match self {
            Literal::Eq(a, b) => Literal::Eq(a.map_vars(f), b.map_vars(f)),
            Literal::Pos(a) => Literal::Pos(a.map_vars(f)),
            Literal::Neg(a) => Literal::Neg(a.map_vars(f)),
        }
    }

    pub fn atom(&self) -> Option<&Atom> {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => Some(a),
            Literal::Eq(..) => None,
        }
    }

    /// The user-defined predicate this literal calls, if any.
    pub fn called_pred(&self) -> Option<PredKey> {
        self.atom().filter(|a| builtin_cmp(a).is_none()).map(Atom::key)
    }

    pub fn is_negative(&self) -> bool {
        matches!(self, Literal::Neg(_))
    }
}

fn write_atom_lit(f: &mut fmt::Formatter<'_>, a: &Atom) -> fmt::Result {
    match builtin_cmp(a) {
        Some(op) => write!(f, "{} {} {}", a.args[0], op.symbol(), a.args[1]),
        None => write!(f, "{a}"),
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Eq(a, b) => write!(f, "{a} = {b}"),
            Literal::Pos(a) => write_atom_lit(f, a),
            Literal::Neg(a) => {
                write!(f, "not ")?;
                write_atom_lit(f, a)
            }
        }
    }
}

/// Source location of a clause: its predicate, 1-based position among that
/// predicate's clauses, and source line.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClauseRef {
    pub pred: PredKey,
    pub number: usize,
    pub line: usize,
}

impl fmt::Display for ClauseRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} clause {} (line {})", self.pred, self.number, self.line)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    pub head: Atom,
    pub body: Vec<Literal>,
    pub line: usize,
    pub number: usize,
}

impl Clause {
    pub fn clause_ref(&self) -> ClauseRef {
        ClauseRef { pred: self.head.key(), number: self.number, line: self.line }
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut out = self.head.vars();
        self.body.iter().for_each(|l| l.collect_vars(&mut out));
        out
    }

    pub fn is_definite(&self) -> bool {
        !self.body.iter().any(Literal::is_negative)
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            write!(f, " :- ")?;
            for (i, l) in self.body.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{l}")?;
            }
        }
        write!(f, ".")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ClausalProgram {
    pub clauses: Vec<Clause>,
}

impl ClausalProgram {
    /// Defined predicates in order of first appearance.
    pub fn predicates(&self) -> Vec<PredKey> {
        let mut seen = Vec::new();
        for c in &self.clauses {
            let k = c.head.key();
            if !seen.contains(&k) {
                seen.push(k);
            }
        }
        seen
    }

    pub fn clauses_for<'a>(&'a self, pred: &PredKey) -> impl Iterator<Item = &'a Clause> + 'a {
        let pred = pred.clone();
        self.clauses.iter().filter(move |c| *c.head.pred == *pred.name && c.head.args.len() == pred.arity)
    }

    pub fn clause(&self, r: &ClauseRef) -> Option<&Clause> {
        self.clauses_for(&r.pred).find(|c| c.number == r.number)
    }

    pub fn is_definite(&self) -> bool {
        self.clauses.iter().all(Clause::is_definite)
    }

    /// Predicates called in bodies but never defined.
    pub fn undefined_calls(&self) -> Vec<PredKey> {
        let defined: BTreeSet<PredKey> = self.predicates().into_iter().collect();
        let mut out = Vec::new();
        for c in &self.clauses {
            for l in &c.body {
                if let Some(k) = l.called_pred() {
                    if !defined.contains(&k) && !out.contains(&k) {
                        out.push(k);
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for ClausalProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Name(String),
    Quoted(String),
    Var(String),
    Int(i64),
    Punct(&'static str),
    End,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 14] = [":-", "=<", "\\+", "->", "=", ">", "(", ")", "[", "]", "|", ",", "!", ";"];

fn lex(text: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, m: String| SyntaxError::Parse { line, col, message: m };
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '.' {
            let next = chars.get(i + 1).copied();
            let tok = if next.is_none_or(|n| n.is_whitespace() || n == '%') { Tok::End } else { Tok::Punct(".") };
            out.push(Token { tok, line: tl, col: tc });
            advance(1, &mut i, &mut col);
            continue;
        }
        if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            advance(1, &mut i, &mut col);
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance(1, &mut i, &mut col);
            }
            let s: String = chars[start..i].iter().collect();
            let n = s.parse().map_err(|_| err(tl, tc, format!("integer out of range: {s}")))?;
            out.push(Token { tok: Tok::Int(n), line: tl, col: tc });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                advance(1, &mut i, &mut col);
            }
            let s: String = chars[start..i].iter().collect();
            let tok = if c.is_uppercase() || c == '_' { Tok::Var(s) } else { Tok::Name(s) };
            out.push(Token { tok, line: tl, col: tc });
            continue;
        }
        if c == '\'' {
            let mut s = String::new();
            advance(1, &mut i, &mut col);
            loop {
                match chars.get(i) {
                    None | Some('\n') => return Err(err(tl, tc, "unterminated quoted atom".into())),
                    Some('\\') if chars.get(i + 1).is_some() => {
                        s.push(chars[i + 1]);
                        advance(2, &mut i, &mut col);
                    }
                    Some('\'') if chars.get(i + 1) == Some(&'\'') => {
                        s.push('\'');
                        advance(2, &mut i, &mut col);
                    }
                    Some('\'') => {
                        advance(1, &mut i, &mut col);
                        break;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        advance(1, &mut i, &mut col);
                    }
                }
            }
            out.push(Token { tok: Tok::Quoted(s), line: tl, col: tc });
            continue;
        }
        let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(sym) => {
                out.push(Token { tok: Tok::Punct(sym), line: tl, col: tc });
                advance(sym.chars().count(), &mut i, &mut col);
            }
            None => return Err(err(tl, tc, format!("unexpected character `{c}`"))),
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser

const IMPURE: [(&str, usize); 12] = [
    ("var", 1),
    ("nonvar", 1),
    ("assert", 1),
    ("asserta", 1),
    ("assertz", 1),
    ("retract", 1),
    ("call", 1),
    ("findall", 3),
    ("bagof", 3),
    ("setof", 3),
    ("is", 2),
    ("fail_if", 1),
];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    anon: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Parser, SyntaxError> {
        Ok(Parser { toks: lex(text)?, pos: 0, anon: 0 })
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, SyntaxError> {
        let t = self.peek();
        Err(SyntaxError::Parse { line: t.line, col: t.col, message: message.into() })
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Name(s) | Tok::Var(s) => format!("`{s}`"),
            Tok::Quoted(s) => format!("`'{s}'`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::End => "end of clause".into(),
            Tok::Eof => "end of input".into(),
        }
    }

    fn expect(&mut self, p: &str) -> Result<(), SyntaxError> {
        if self.peek().tok == Tok::Punct(static_sym(p)) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected `{p}`, found {}", Self::describe(&self.peek().tok)))
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek().tok, Tok::Punct(q) if q == p)
    }

    fn term(&mut self) -> Result<Term, SyntaxError> {
        let head = self.primary()?;
        if self.is_punct(".") {
            self.bump();
            let tail = self.term()?;
            return Ok(Term::cons(head, tail));
        }
        Ok(head)
    }

    fn args(&mut self) -> Result<Vec<Term>, SyntaxError> {
        self.expect("(")?;
        let mut args = vec![self.term()?];
        while self.is_punct(",") {
            self.bump();
            args.push(self.term()?);
        }
        self.expect(")")?;
        Ok(args)
    }

    fn primary(&mut self) -> Result<Term, SyntaxError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Var(name) => {
                self.bump();
                if name == "_" {
                    self.anon += 1;
                    Ok(Term::var(&format!("_G{}", self.anon)))
                } else {
                    Ok(Term::var(&name))
                }
            }
            Tok::Int(i) => {
                self.bump();
                Ok(Term::Int(i))
            }
            Tok::Name(name) | Tok::Quoted(name) => {
                self.bump();
                if self.is_punct("(") {
                    let args = self.args()?;
                    Ok(Term::app(&name, args))
                } else {
                    Ok(Term::constant(&name))
                }
            }
            Tok::Punct("[") => {
                self.bump();
                if self.is_punct("]") {
                    self.bump();
                    return Ok(Term::nil());
                }
                let mut items = vec![self.term()?];
                while self.is_punct(",") {
                    self.bump();
                    items.push(self.term()?);
                }
                let tail = if self.is_punct("|") {
                    self.bump();
                    self.term()?
                } else {
                    Term::nil()
                };
                self.expect("]")?;
                Ok(Term::list_with_tail(items, tail))
            }
            Tok::Punct("(") => {
                self.bump();
                let inner = self.term()?;
                self.expect(")")?;
                Ok(inner)
            }
            Tok::Punct("!") => Err(SyntaxError::Impure { line: t.line, col: t.col, what: "!".into() }),
            other => self.error(format!("expected a term, found {}", Self::describe(&other))),
        }
    }

    fn to_atom(&self, t: Term, line: usize, col: usize) -> Result<Atom, SyntaxError> {
        match t {
            Term::App(name, args) => {
                let atom = Atom { pred: name, args: args.to_vec() };
                if IMPURE.iter().any(|(n, a)| *n == &*atom.pred && *a == atom.args.len()) {
                    return Err(SyntaxError::Impure { line, col, what: atom.key().to_string() });
                }
                Ok(atom)
            }
            Term::Var(v) => Err(SyntaxError::Impure { line, col, what: format!("meta-call of variable {v}") }),
            Term::Int(i) => Err(SyntaxError::Parse { line, col, message: format!("integer {i} is not callable") }),
        }
    }

    /// An atom, equality or comparison.
    fn simple_literal(&mut self) -> Result<Literal, SyntaxError> {
        let (line, col) = (self.peek().line, self.peek().col);
        let lhs = self.term()?;
        for op in ["=", "=<", ">"] {
            if self.is_punct(op) {
                self.bump();
                let rhs = self.term()?;
                return Ok(match op {
                    "=" => Literal::Eq(lhs, rhs),
                    _ => Literal::Pos(Atom::new(op, vec![lhs, rhs])),
                });
            }
        }
        if self.is_punct(";") || self.is_punct("->") {
            let t = self.peek();
            let what = Self::describe(&t.tok);
            return Err(SyntaxError::Impure { line: t.line, col: t.col, what });
        }
        Ok(Literal::Pos(self.to_atom(lhs, line, col)?))
    }

    fn literal(&mut self) -> Result<Literal, SyntaxError> {
        let t = self.peek().clone();
        let negated = match &t.tok {
            Tok::Name(n) if n == "not" && *self.peek_at(1) != Tok::Punct("(") => true,
            Tok::Punct("\\+") => true,
            _ => false,
        };
        let lit = if negated {
            self.bump();
            self.simple_literal()?
        } else if matches!(&t.tok, Tok::Name(n) if n == "not") {
            // not(Goal)
            self.bump();
            self.expect("(")?;
            let inner = self.simple_literal()?;
            self.expect(")")?;
            match inner {
                Literal::Pos(a) => return Ok(Literal::Neg(a)),
                _ => inner,
            }
        } else {
            return self.simple_literal();
        };
        match lit {
            Literal::Pos(a) if negated => Ok(Literal::Neg(a)),
            Literal::Eq(..) if negated => Err(SyntaxError::Parse {
                line: t.line,
                col: t.col,
                message: "negated equality is not supported".into(),
            }),
            other => Ok(other),
        }
    }

    fn body(&mut self) -> Result<Vec<Literal>, SyntaxError> {
        let mut lits = Vec::new();
        loop {
            let is_true = matches!(&self.peek().tok, Tok::Name(n) if n == "true")
                && matches!(self.peek_at(1), Tok::Punct(",") | Tok::End | Tok::Eof);
            if is_true {
                self.bump();
            } else {
                lits.push(self.literal()?);
            }
            if self.is_punct(",") {
                self.bump();
                continue;
            }
            return Ok(lits);
        }
    }

    fn clause(&mut self) -> Result<(Atom, Vec<Literal>, usize), SyntaxError> {
        self.anon = 0;
        let (line, col) = (self.peek().line, self.peek().col);
        let head_term = self.term()?;
        let head = self.to_atom(head_term, line, col)?;
        if is_builtin(&head.key()) || &*head.pred == "not" {
            return Err(SyntaxError::Parse { line, col, message: format!("cannot define built-in {}", head.key()) });
        }
        let body = if self.is_punct(":-") {
            self.bump();
            self.body()?
        } else {
            Vec::new()
        };
        if self.peek().tok != Tok::End {
            return self.error(format!("expected `.` ending the clause, found {}", Self::describe(&self.peek().tok)));
        }
        self.bump();
        Ok((head, body, line))
    }
}

fn static_sym(p: &str) -> &'static str {
    SYMBOLS.iter().copied().chain(["."]).find(|s| *s == p).unwrap_or("?")
}

pub fn parse_program(text: &str) -> Result<ClausalProgram, SyntaxError> {
    let mut p = Parser::new(text)?;
    let mut clauses = Vec::new();
    let mut counts: HashMap<PredKey, usize> = HashMap::new();
    while p.peek().tok != Tok::Eof {
        let (head, body, line) = p.clause()?;
        let n = counts.entry(head.key()).or_insert(0);
        *n += 1;
        clauses.push(Clause { head, body, line, number: *n });
    }
    Ok(ClausalProgram { clauses })
}

fn finish<T>(p: &mut Parser, value: T) -> Result<T, SyntaxError> {
    if p.peek().tok == Tok::End {
        p.bump();
    }
    if p.peek().tok != Tok::Eof {
        return p.error(format!("unexpected {}", Parser::describe(&p.peek().tok)));
    }
    Ok(value)
}

pub fn parse_term(text: &str) -> Result<Term, SyntaxError> {
    let mut p = Parser::new(text)?;
    let t = p.term()?;
    finish(&mut p, t)
}

pub fn parse_atom(text: &str) -> Result<Atom, SyntaxError> {
    let mut p = Parser::new(text)?;
    let a = match p.simple_literal()? {
        Literal::Pos(a) => a,
        Literal::Eq(x, y) => Atom::new("=", vec![x, y]),
        Literal::Neg(_) => unreachable!(),
    };
    finish(&mut p, a)
}

/// A goal: a comma-separated conjunction of literals, optional trailing `.`.
pub fn parse_goal(text: &str) -> Result<Vec<Literal>, SyntaxError> {
    let mut p = Parser::new(text)?;
    let body = p.body()?;
    finish(&mut p, body)
}

// ---------------------------------------------------------------------------
// Disjunctive normal form

/// One original clause as a disjunct: `V1 = T1, ..., Vn = Tn, body`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Disjunct {
    pub head_eqs: Vec<(Var, Term)>,
    pub body: Vec<Literal>,
    pub locals: Vec<Var>,
    pub clause: ClauseRef,
}

impl Disjunct {
    pub fn literals(&self) -> Vec<Literal> {
        let mut out: Vec<Literal> =
            self.head_eqs.iter().map(|(v, t)| Literal::Eq(Term::Var(v.clone()), t.clone())).collect();
        out.extend(self.body.iter().cloned());
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Definition {
    pub pred: PredKey,
    pub head_vars: Vec<Var>,
    pub disjuncts: Vec<Disjunct>,
}

impl Definition {
    pub fn head(&self) -> Atom {
        Atom::new(&self.pred.name, self.head_vars.iter().cloned().map(Term::Var).collect())
    }

    /// Predicates called from the body.
    pub fn calls(&self) -> BTreeSet<PredKey> {
        self.disjuncts.iter().flat_map(|d| d.body.iter().filter_map(Literal::called_pred)).collect()
    }
}

fn write_disjunct(f: &mut fmt::Formatter<'_>, d: &Disjunct, quantified: bool) -> fmt::Result {
    if quantified && !d.locals.is_empty() {
        let names: Vec<String> = d.locals.iter().map(|v| v.to_string()).collect();
        write!(f, "exists {}: ", names.join(","))?;
    }
    write!(f, "(")?;
    let lits = d.literals();
    for (i, l) in lits.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{l}")?;
    }
    if lits.is_empty() {
        write!(f, "true")?;
    }
    write!(f, ")")
}

fn write_definition(f: &mut fmt::Formatter<'_>, d: &Definition, quantified: bool) -> fmt::Result {
    write!(f, "{} <- ", d.head())?;
    if d.disjuncts.is_empty() {
        return writeln!(f, "false.");
    }
    for (i, dj) in d.disjuncts.iter().enumerate() {
        if i > 0 {
            write!(f, "\n    ; ")?;
        }
        write_disjunct(f, dj, quantified)?;
    }
    writeln!(f, ".")
}

/// One disjunctive clause per predicate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DisjunctiveProgram {
    pub source: ClausalProgram,
    pub defs: BTreeMap<PredKey, Definition>,
    /// Predicates in source order; undefined callees come last.
    pub order: Vec<PredKey>,
    pub warnings: Vec<String>,
}

impl DisjunctiveProgram {
    pub fn def(&self, pred: &PredKey) -> Option<&Definition> {
        self.defs.get(pred)
    }

    pub fn predicates(&self) -> &[PredKey] {
        &self.order
    }

    pub fn is_definite(&self) -> bool {
        self.source.is_definite()
    }

    pub fn has_negated_builtins(&self) -> bool {
        self.defs
            .values()
            .flat_map(|d| d.disjuncts.iter())
            .flat_map(|d| d.body.iter())
            .any(|l| matches!(l, Literal::Neg(a) if builtin_cmp(a).is_some()))
    }

    /// Stable digest of the program text, used to detect stale debugging
    /// artifacts.
    pub fn fingerprint(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.source.to_string().hash(&mut h);
        h.finish()
    }

    /// Head instance of `pred` at `args`: the body disjuncts with head
    /// variables replaced by `args` and locals renamed apart.
    pub fn head_instance(&self, pred: &PredKey, args: &[Term], renamer: &mut Renamer) -> Result<HeadInstance, SyntaxError> {
        let def = self.def(pred).ok_or_else(|| SyntaxError::UnknownPredicate(pred.clone()))?;
        head_instance(def, args, renamer)
    }
}

impl fmt::Display for DisjunctiveProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.order {
            write_definition(f, &self.defs[p], false)?;
        }
        Ok(())
    }
}

fn head_var_names(arity: usize, clauses: &[&Clause]) -> Vec<Var> {
    let used: BTreeSet<String> = clauses.iter().flat_map(|c| c.vars()).map(|v| v.name.to_string()).collect();
    (1..=arity)
        .map(|i| {
            let mut name = format!("V{i}");
            while used.contains(&name) {
                name.insert(0, '_');
            }
            Var::new(&name)
        })
        .collect()
}

pub fn to_disjunctive(program: &ClausalProgram) -> DisjunctiveProgram {
    let mut defs = BTreeMap::new();
    let mut order = program.predicates();
    for pred in &order {
        let clauses: Vec<&Clause> = program.clauses_for(pred).collect();
        let head_vars = head_var_names(pred.arity, &clauses);
        let disjuncts = clauses
            .iter()
            .map(|c| Disjunct {
                head_eqs: head_vars.iter().cloned().zip(c.head.args.iter().cloned()).collect(),
                body: c.body.clone(),
                locals: c.vars(),
                clause: c.clause_ref(),
            })
            .collect();
        defs.insert(pred.clone(), Definition { pred: pred.clone(), head_vars, disjuncts });
    }
    let mut warnings = Vec::new();
    for pred in program.undefined_calls() {
        warnings.push(format!("{pred} is called but has no clauses; its body is false"));
        let head_vars = head_var_names(pred.arity, &[]);
        defs.insert(pred.clone(), Definition { pred: pred.clone(), head_vars, disjuncts: vec![] });
        order.push(pred);
    }
    for c in &program.clauses {
        for l in &c.body {
            if let Literal::Neg(a) = l {
                if is_builtin(&a.key()) {
                    warnings.push(format!("comparison {a} under not in {}", c.clause_ref()));
                }
            }
        }
    }
    DisjunctiveProgram { source: program.clone(), defs, order, warnings }
}

/// The completion: each definition read as `H <- exists locals. D1 ; ... ; Dk`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompletedProgram {
    pub program: DisjunctiveProgram,
}

impl CompletedProgram {
    pub fn defs(&self) -> impl Iterator<Item = &Definition> {
        self.program.order.iter().map(|p| &self.program.defs[p])
    }
}

impl fmt::Display for CompletedProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in self.defs() {
            write_definition(f, d, true)?;
        }
        Ok(())
    }
}

pub fn completion(program: &DisjunctiveProgram) -> CompletedProgram {
    CompletedProgram { program: program.clone() }
}

/// A disjunct of a head instance: equalities `arg_i = T_i` followed by the
/// renamed body.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceDisjunct {
    pub literals: Vec<Literal>,
    pub locals: Vec<Var>,
    pub clause: ClauseRef,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeadInstance {
    pub head: Atom,
    pub disjuncts: Vec<InstanceDisjunct>,
}

pub fn head_instance(def: &Definition, args: &[Term], renamer: &mut Renamer) -> Result<HeadInstance, SyntaxError> {
    if args.len() != def.pred.arity {
        return Err(SyntaxError::Arity { pred: def.pred.clone(), got: args.len() });
    }
    let disjuncts = def
        .disjuncts
        .iter()
        .map(|d| {
            let serial = renamer.fresh_serial();
            let mut rename = |v: &Var| Term::Var(v.renamed(serial));
            let mut literals: Vec<Literal> =
                args.iter().zip(&d.head_eqs).map(|(a, (_, t))| Literal::Eq(a.clone(), t.map_vars(&mut rename))).collect();
            literals.extend(d.body.iter().map(|l| l.map_vars(&mut rename)));
            InstanceDisjunct { literals, locals: d.locals.iter().map(|v| v.renamed(serial)).collect(), clause: d.clause.clone() }
        })
        .collect();
    Ok(HeadInstance { head: Atom::new(&def.pred.name, args.to_vec()), disjuncts })
}

/// Writes an atom the way the parser reads it back.
pub fn atom_to_source(a: &Atom) -> String {
    struct W<'a>(&'a Atom);
    impl fmt::Display for W<'_> {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            write_name(f, &self.0.pred)?;
            if !self.0.args.is_empty() {
                let parts: Vec<String> = self.0.args.iter().map(|t| t.to_string()).collect();
                write!(f, "({})", parts.join(","))?;
            }
            Ok(())
        }
    }
    W(a).to_string()
}
