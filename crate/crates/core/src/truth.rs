//! The three truth values and their connectives.
//!
//! Conjunction and disjunction follow Kleene's strong logic. The arrow used
//! in model conditions is two-valued.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub enum TruthValue {
    T,
    F,
    I,
}

use TruthValue::{F, I, T};

impl TruthValue {
    pub const ALL: [TruthValue; 3] = [T, F, I];

    pub fn from_bool(b: bool) -> TruthValue {
        if b {
            T
        } else {
            F
        }
    }

    pub fn and(self, other: TruthValue) -> TruthValue {
        and3(self, other)
    }

    pub fn or(self, other: TruthValue) -> TruthValue {
        or3(self, other)
    }

    pub fn not(self) -> TruthValue {
        not3(self)
    }

    pub fn is_admissible(self) -> bool {
        self != I
    }
}

impl fmt::Display for TruthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            T => "T",
            F => "F",
            I => "I",
        };
        f.write_str(c)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a truth value: {0:?}")]
pub struct ParseTruthError(pub String);

impl FromStr for TruthValue {
    type Err = ParseTruthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "T" => Ok(T),
            "F" => Ok(F),
            "I" => Ok(I),
            _ => Err(ParseTruthError(s.to_string())),
        }
    }
}

pub fn and3(a: TruthValue, b: TruthValue) -> TruthValue {
    match (a, b) {
        (F, _) | (_, F) => F,
        (T, T) => T,
        _ => I,
    }
}

pub fn or3(a: TruthValue, b: TruthValue) -> TruthValue {
    match (a, b) {
        (T, _) | (_, T) => T,
        (F, F) => F,
        _ => I,
    }
}

pub fn not3(a: TruthValue) -> TruthValue {
    match a {
        T => F,
        F => T,
        I => I,
    }
}

/// Value of `head <- body`. False exactly for T<-F, T<-I, F<-T and F<-I.
pub fn arrow3(head: TruthValue, body: TruthValue) -> TruthValue {
    match (head, body) {
        (T, F) | (T, I) | (F, T) | (F, I) => F,
        _ => T,
    }
}

/// Existential closure over a finite set of instance values. The empty set
/// is vacuously false.
pub fn exists3(values: impl IntoIterator<Item = TruthValue>) -> TruthValue {
    let mut acc = F;
    for v in values {
        match v {
            T => return T,
            I => acc = I,
            F => {}
        }
    }
    acc
}

pub fn forall3(values: impl IntoIterator<Item = TruthValue>) -> TruthValue {
    not3(exists3(values.into_iter().map(not3)))
}

pub fn conj3(values: impl IntoIterator<Item = TruthValue>) -> TruthValue {
    let mut acc = T;
    for v in values {
        acc = and3(acc, v);
        if acc == F {
            return F;
        }
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("assignments range over different domains ({0} vs {1} atoms)")]
pub struct DomainMismatch(pub usize, pub usize);

/// Information ordering on two assignments over the same atoms: true and
/// false sets may only grow from `m1` to `m2`.
pub fn leq_info(m1: &[TruthValue], m2: &[TruthValue]) -> Result<bool, DomainMismatch> {
    if m1.len() != m2.len() {
        return Err(DomainMismatch(m1.len(), m2.len()));
    }
    Ok(m1.iter().zip(m2).all(|(a, b)| *a == I || a == b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negation_and_arrow_rows() {
        assert_eq!(not3(T), F);
        assert_eq!(not3(I), I);
        assert_eq!(not3(not3(F)), F);
        assert_eq!(arrow3(F, I), F);
        assert_eq!(arrow3(I, F), T);
        assert_eq!(arrow3(T, T), T);
    }

    #[test]
    fn quantifier() {
        assert_eq!(exists3([F, I, F]), I);
        assert_eq!(exists3([F, T, I]), T);
        assert_eq!(exists3([]), F);
        assert_eq!(forall3([T, I]), I);
        assert_eq!(forall3([]), T);
    }

    #[test]
    fn kleene_laws() {
        for a in TruthValue::ALL {
            for b in TruthValue::ALL {
                assert_eq!(and3(a, b), and3(b, a));
                assert_eq!(or3(a, b), or3(b, a));
                assert_eq!(not3(and3(a, b)), or3(not3(a), not3(b)));
                assert_eq!(not3(or3(a, b)), and3(not3(a), not3(b)));
                if arrow3(a, b) == T && a == F {
                    assert_eq!(b, F);
                }
                for c in TruthValue::ALL {
                    assert_eq!(and3(a, and3(b, c)), and3(and3(a, b), c));
                    assert_eq!(or3(a, or3(b, c)), or3(or3(a, b), c));
                }
            }
        }
        for a in [true, false] {
            for b in [true, false] {
                let (ta, tb) = (TruthValue::from_bool(a), TruthValue::from_bool(b));
                assert_eq!(and3(ta, tb), TruthValue::from_bool(a && b));
                assert_eq!(or3(ta, tb), TruthValue::from_bool(a || b));
            }
        }
    }

    #[test]
    fn information_order() {
        assert!(leq_info(&[I, I], &[T, F]).unwrap());
        assert!(!leq_info(&[T], &[F]).unwrap());
        assert!(!leq_info(&[F], &[T]).unwrap());
        assert!(leq_info(&[T], &[T, F]).is_err());
    }

    #[test]
    fn parse_round_trip() {
        for v in TruthValue::ALL {
            assert_eq!(v.to_string().parse::<TruthValue>().unwrap(), v);
        }
        assert!("X".parse::<TruthValue>().is_err());
    }
}
