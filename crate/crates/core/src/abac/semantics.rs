//! Satisfaction relations, written directly from their definitions.
//!
//! These are the semantic reference; [`super::Evaluator`] is the indexed
//! path and must agree with them.

use super::data::{AttrKind, AttrValue, AttributeData, Side};
use super::rule::{AtomicConstraint, AttrExpr, Conjunct, Rule};
use super::universe::{TupleSet, Universe};
use crate::error::{Error, Result};

fn conjunct_holds(side: Side, kind: AttrKind, value: &AttrValue, c: &Conjunct) -> Result<bool> {
    Ok(match (kind, value, c) {
        (_, AttrValue::Bottom, _) => false,
        (AttrKind::Single, AttrValue::Atomic(v), Conjunct::Atoms(vs)) => vs.contains(v),
        (AttrKind::Multi, AttrValue::Set(s), Conjunct::Sets(alts)) => match side {
            Side::User => alts.iter().any(|alt| s.is_superset(alt)),
            Side::Resource => alts.contains(s),
        },
        _ => return Err(Error::Schema("conjunct does not match attribute kind".into())),
    })
}

/// Whether the entity at `ix` satisfies `e`. Multi-valued user attributes use
/// `⊇` against some listed set; multi-valued resource attributes use equality.
pub fn satisfies_expr(side: Side, ix: usize, e: &AttrExpr, data: &AttributeData) -> Result<bool> {
    for (attr, c) in e.iter() {
        let kind = data.schema().require(side, attr)?;
        let v = data.value(side, ix, attr)?;
        if !conjunct_holds(side, kind, v, c)? {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn satisfies_uae(u: usize, e: &AttrExpr, data: &AttributeData) -> Result<bool> {
    satisfies_expr(Side::User, u, e, data)
}

pub fn satisfies_rae(r: usize, e: &AttrExpr, data: &AttributeData) -> Result<bool> {
    satisfies_expr(Side::Resource, r, e, data)
}

/// Whether `(u, r)` satisfies one atomic constraint. `⊥` on either side fails.
pub fn satisfies_atomic(u: usize, r: usize, f: &AtomicConstraint, data: &AttributeData) -> Result<bool> {
    let uv = data.value(Side::User, u, f.user_attr())?;
    let rv = data.value(Side::Resource, r, f.res_attr())?;
    Ok(match (f, uv, rv) {
        (_, AttrValue::Bottom, _) | (_, _, AttrValue::Bottom) => false,
        (AtomicConstraint::SupersetEq { .. }, AttrValue::Set(a), AttrValue::Set(b)) => a.is_superset(b),
        (AtomicConstraint::Contains { .. }, AttrValue::Set(a), AttrValue::Atomic(b)) => a.contains(b),
        (AtomicConstraint::Equal { .. }, AttrValue::Atomic(a), AttrValue::Atomic(b)) => a == b,
        _ => return Err(Error::Schema("constraint does not match attribute kinds".into())),
    })
}

pub fn satisfies_constraint<'a>(
    u: usize,
    r: usize,
    con: impl IntoIterator<Item = &'a AtomicConstraint>,
    data: &AttributeData,
) -> Result<bool> {
    for f in con {
        if !satisfies_atomic(u, r, f, data)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `⟦ρ⟧` by filtering every tuple of the universe.
pub fn rule_meaning_brute(rule: &Rule, data: &AttributeData, universe: &Universe) -> Result<TupleSet> {
    let mut out = universe.empty_set();
    for u in 0..universe.n_users() {
        for r in 0..universe.n_resources() {
            for (o, op) in universe.ops().iter().enumerate() {
                if rule.ops.contains(op)
                    && satisfies_uae(u, &rule.uae, data)?
                    && satisfies_rae(r, &rule.rae, data)?
                    && satisfies_constraint(u, r, &rule.con, data)?
                {
                    out.insert(universe.index(u, r, o));
                }
            }
        }
    }
    Ok(out)
}

pub fn policy_meaning_brute<'a>(
    rules: impl IntoIterator<Item = &'a Rule>,
    data: &AttributeData,
    universe: &Universe,
) -> Result<TupleSet> {
    let mut out = universe.empty_set();
    for rule in rules {
        out.union_with(&rule_meaning_brute(rule, data, universe)?);
    }
    Ok(out)
}
