//! Three-valued semantics for pure logic programs.

pub mod consequence;
pub mod debugger;
pub mod eval;
pub mod interp;
pub mod modelcheck;
pub mod slddnf;
pub mod syntax;
pub mod term;
pub mod theorems;
pub mod truth;
pub mod universe;

pub use syntax::{parse_atom, parse_goal, parse_program, parse_term, ClausalProgram, Literal};
pub use term::{Atom, PredKey, Substitution, Term, Var};
pub use truth::TruthValue;
pub use universe::{Universe, UniverseSpec};
