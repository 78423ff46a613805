//! JSON views of core values. Field names follow the Rust field names.

use serde_json::{json, Value};
use tvlp_core::debugger::{DebugNode, DebugResult, Diagnosis, NodeKind, Question, TreeSlice};
use tvlp_core::modelcheck::{ModelReport, Violation};
use tvlp_core::slddnf::{Answer, Outcome};
use tvlp_core::syntax::{ClauseRef, Literal};

fn strings<T: ToString>(xs: &[T]) -> Value {
    Value::from(xs.iter().map(|x| x.to_string()).collect::<Vec<_>>())
}

pub fn clause_ref(c: &ClauseRef) -> Value {
    json!({ "pred": c.pred.to_string(), "number": c.number, "line": c.line })
}

fn opt_clause(c: Option<&ClauseRef>) -> Value {
    c.map_or(Value::Null, clause_ref)
}

pub fn answer(a: &Answer, goal: &[Literal]) -> Value {
    let substitution: serde_json::Map<String, Value> =
        a.substitution.sorted().into_iter().map(|(v, t)| (v.to_string(), Value::from(t.to_string()))).collect();
    json!({
        "substitution": substitution,
        "constraints": a.constraints.to_string(),
        "instance": strings(&a.apply(goal)),
        "text": a.to_string(),
    })
}

pub fn outcome(o: &Outcome) -> Value {
    json!({
        "goal": strings(&o.goal),
        "rule": o.rule.name(),
        "budget": o.budget,
        "answers": o.answers.iter().map(|a| answer(a, &o.goal)).collect::<Vec<_>>(),
        "floundered_leaves": strings(&o.floundered_leaves),
        "exhaustive": o.exhaustive,
        "floundered": o.floundered,
        "finitely_failed": o.finitely_failed,
        "budget_exhausted": o.budget_exhausted,
        "expansions": o.expansions,
        "status": o.status(),
    })
}

fn violation(v: &Violation) -> Value {
    json!({
        "pred": v.pred.to_string(),
        "atom": v.atom.to_string(),
        "head": v.head.to_string(),
        "body": v.body.to_string(),
        "kind": v.kind.to_string(),
        "clause": opt_clause(v.clause.as_ref()),
        "witness": v.witness.as_ref().map(|w| w.to_string()),
        "note": v.note,
    })
}

pub fn report(r: &ModelReport) -> Value {
    json!({
        "condition": r.condition.to_string(),
        "holds": r.holds,
        "violation_count": r.violation_count,
        "violations": r.violations.iter().map(violation).collect::<Vec<_>>(),
        "bounded": r.bounded,
        "atoms_checked": r.atoms_checked,
    })
}

pub fn question(q: &Question) -> Value {
    match q {
        Question::Valid(l) => json!({ "kind": "valid", "text": q.to_string(), "literal": l.to_string() }),
        Question::Complete { call, answers } => json!({
            "kind": "complete",
            "text": q.to_string(),
            "call": call.to_string(),
            "answers": strings(answers),
        }),
    }
}

pub fn diagnosis(d: &Diagnosis) -> Value {
    json!({
        "kind": d.kind.name(),
        "node": d.node,
        "literal": d.literal.to_string(),
        "clause": opt_clause(d.clause.as_ref()),
        "instance": d.instance,
        "uncovered": d.uncovered.as_ref().map(|u| u.to_string()),
        "candidates": d.candidates.iter().map(clause_ref).collect::<Vec<_>>(),
    })
}

pub fn debug_result(r: &DebugResult) -> Value {
    json!({
        "diagnosis": r.diagnosis.as_ref().map(diagnosis),
        "summary": r.summary,
        "root": r.root,
        "questions": r.transcript.len(),
        "transcript": r.transcript.to_string(),
    })
}

pub fn node(n: &DebugNode) -> Value {
    let mut v = json!({
        "id": n.id,
        "literal": n.literal().to_string(),
        "question": n.question().to_string(),
        "parent": n.parent,
        "children": n.children,
        "bridge": n.bridge,
    });
    let extra = match &n.kind {
        NodeKind::Proof { clause, .. } => json!({
            "kind": "proof",
            "clause": opt_clause(clause.as_ref()),
            "instance": n.instance(),
        }),
        NodeKind::Call { answers, clauses, .. } => json!({
            "kind": "call",
            "answers": strings(answers),
            "clauses": clauses.iter().map(clause_ref).collect::<Vec<_>>(),
        }),
    };
    if let (Value::Object(a), Value::Object(b)) = (&mut v, extra) {
        a.extend(b);
    }
    v
}

pub fn slice(s: &TreeSlice) -> Value {
    json!({
        "node": node(&s.node),
        "children": s.children.iter().map(node).collect::<Vec<_>>(),
        "total_children": s.total_children,
        "offset": s.offset,
    })
}
