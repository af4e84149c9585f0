//! Candidate constraints and characterizing attribute expressions.

use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;

use crate::abac::{AtomicConstraint, AttrKind, AttrValue, AttributeData, AttrExpr, Conjunct, Evaluator, Side};
use crate::error::Result;

/// Every well-typed atomic constraint that holds between user `u` and
/// resource `r` (entity indices), in canonical order.
pub fn candidate_constraint(data: &AttributeData, r: usize, u: usize) -> Vec<AtomicConstraint> {
    let schema = data.schema();
    let uvals = data.users()[u].values();
    let rvals = data.resources()[r].values();
    let mut out = Vec::new();
    for (ui, (ua, uk)) in schema.attrs(Side::User).enumerate() {
        for (ri, (ra, rk)) in schema.attrs(Side::Resource).enumerate() {
            let Some(f) = AtomicConstraint::for_kinds(ua, uk, ra, rk) else {
                continue;
            };
            let holds = match (&uvals[ui], &rvals[ri]) {
                (AttrValue::Set(a), AttrValue::Set(b)) => a.is_superset(b),
                (AttrValue::Set(a), AttrValue::Atomic(b)) => a.contains(b),
                (AttrValue::Atomic(a), AttrValue::Atomic(b)) => a == b,
                _ => false,
            };
            if holds {
                out.push(f);
            }
        }
    }
    out.sort();
    out
}

fn characterize(ev: &Evaluator, side: Side, s: &BTreeSet<usize>) -> Result<AttrExpr> {
    let data = ev.data();
    let id_attr = side.id_attr();
    let mut e = AttrExpr::top();
    for (pos, (attr, kind)) in data.schema().attrs(side).enumerate() {
        if attr == id_attr {
            continue;
        }
        let values: Vec<&AttrValue> = s.iter().map(|&i| &data.entities(side)[i].values()[pos]).collect();
        if values.iter().any(|v| v.is_bottom()) || values.is_empty() {
            continue;
        }
        let c = match kind {
            AttrKind::Single => Conjunct::Atoms(values.iter().filter_map(|v| v.as_atomic()).map(str::to_string).collect()),
            AttrKind::Multi => Conjunct::Sets(values.iter().filter_map(|v| v.as_set()).cloned().collect()),
        };
        e.set(attr, c);
    }
    let members = ev.expr_members(side, &e)?;
    let mut target = FixedBitSet::with_capacity(data.entities(side).len());
    for &i in s {
        target.insert(i);
    }
    if members != target {
        let ids = s.iter().map(|&i| data.entities(side)[i].id().to_string());
        e.set(id_attr, Conjunct::atoms(ids));
    }
    Ok(e)
}

/// UAE characterizing the users `s` (indices), falling back to `uid` only
/// when the other attributes over-approximate `s`. Redundant supersets in
/// multi-valued conjuncts are dropped.
pub fn compute_uae(ev: &Evaluator, s: &BTreeSet<usize>) -> Result<AttrExpr> {
    let mut e = characterize(ev, Side::User, s)?;
    e.elim_redundant_sets();
    Ok(e)
}

/// RAE characterizing the resources `s` (indices).
pub fn compute_rae(ev: &Evaluator, s: &BTreeSet<usize>) -> Result<AttrExpr> {
    characterize(ev, Side::Resource, s)
}
