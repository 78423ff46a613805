#![allow(dead_code)]

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use tvlp_core::interp::{load_interpretation, Interpretation, SpecRegistry};
use tvlp_core::syntax::{parse_program, to_disjunctive, DisjunctiveProgram};
use tvlp_core::{TruthValue, Universe, UniverseSpec};

pub fn corpus(name: &str) -> String {
    let path = format!("{}/../../corpus/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub fn program(src: &str) -> DisjunctiveProgram {
    to_disjunctive(&parse_program(src).expect("program parses"))
}

pub fn interp(text: &str) -> Interpretation {
    load_interpretation(text, &SpecRegistry::standard(), None).expect("interpretation loads")
}

pub fn load(prog: &str, interp_file: &str) -> (DisjunctiveProgram, Interpretation) {
    (program(&corpus(prog)), interp(&corpus(interp_file)))
}

/// `{a, b}` with no deeper terms.
pub fn tiny_universe() -> Arc<Universe> {
    Arc::new(UniverseSpec::new(&[("a", 0), ("b", 0)], 0).build().unwrap())
}

const PREDS: [(&str, usize); 3] = [("p", 0), ("q", 1), ("r", 2)];

fn random_arg(rng: &mut impl Rng, vars: &[&str]) -> String {
    if rng.gen_bool(0.6) {
        vars.choose(rng).unwrap().to_string()
    } else {
        ["a", "b"].choose(rng).unwrap().to_string()
    }
}

fn random_atom(rng: &mut impl Rng, vars: &[&str]) -> String {
    let (name, arity) = *PREDS.choose(rng).unwrap();
    if arity == 0 {
        return name.to_string();
    }
    let args: Vec<String> = (0..arity).map(|_| random_arg(rng, vars)).collect();
    format!("{name}({})", args.join(","))
}

/// Source of a random program over p/0, q/1 and r/2 with constants a and b.
/// Every predicate gets at least one clause.
pub fn random_program_source(rng: &mut impl Rng, negation: bool) -> String {
    let mut out = String::new();
    for (name, arity) in PREDS {
        for _ in 0..rng.gen_range(1..=2) {
            let head = if arity == 0 {
                name.to_string()
            } else {
                let args: Vec<String> = (0..arity).map(|_| random_arg(rng, &["X", "Y"])).collect();
                format!("{name}({})", args.join(","))
            };
            let body: Vec<String> = (0..rng.gen_range(0..=2))
                .map(|_| {
                    let a = random_atom(rng, &["X", "Y", "Z"]);
                    if negation && rng.gen_bool(0.3) {
                        format!("not {a}")
                    } else {
                        a
                    }
                })
                .collect();
            if body.is_empty() {
                out.push_str(&format!("{head}.\n"));
            } else {
                out.push_str(&format!("{head} :- {}.\n", body.join(", ")));
            }
        }
    }
    out
}

pub fn random_interp(rng: &mut impl Rng, p: &DisjunctiveProgram, u: &Arc<Universe>) -> Interpretation {
    let mut m = Interpretation::constant(u.clone(), p.predicates(), TruthValue::I).unwrap();
    for pred in p.predicates() {
        for atom in u.atoms(pred) {
            m.set(&atom, *[TruthValue::T, TruthValue::F, TruthValue::I].choose(rng).unwrap()).unwrap();
        }
    }
    m
}

/// Every interpretation of the program's predicates over `u`.
pub fn all_interps(p: &DisjunctiveProgram, u: &Arc<Universe>) -> Vec<Interpretation> {
    let atoms: Vec<_> = p.predicates().iter().flat_map(|k| u.atoms(k).collect::<Vec<_>>()).collect();
    let base = Interpretation::constant(u.clone(), p.predicates(), TruthValue::I).unwrap();
    let mut out = Vec::new();
    let total = 3usize.pow(atoms.len() as u32);
    for code in 0..total {
        let mut m = base.clone();
        let mut c = code;
        for a in &atoms {
            m.set(a, [TruthValue::T, TruthValue::F, TruthValue::I][c % 3]).unwrap();
            c /= 3;
        }
        out.push(m);
    }
    out
}
