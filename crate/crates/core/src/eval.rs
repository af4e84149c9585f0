//! Comparing a mined policy with a reference policy.

use std::collections::BTreeSet;

use crate::abac::{AbacPolicy, AttrExpr, AttributeSchema, Conjunct, Rule, Side, TupleSet};
use crate::error::{Error, Result};

/// `|S1 ∩ S2| / |S1 ∪ S2|`, with `J(∅, ∅) = 1`.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

fn jaccard_tuples(a: &TupleSet, b: &TupleSet) -> f64 {
    let union = a.union_count(b);
    if union == 0 {
        return 1.0;
    }
    a.intersection_count(b) as f64 / union as f64
}

/// Jaccard of two conjuncts, where an absent conjunct (⊤) only matches
/// another absent conjunct.
fn conjunct_sim(a: Option<&Conjunct>, b: Option<&Conjunct>) -> f64 {
    match (a, b) {
        (None, None) => 1.0,
        (Some(Conjunct::Atoms(x)), Some(Conjunct::Atoms(y))) => jaccard(x, y),
        (Some(Conjunct::Sets(x)), Some(Conjunct::Sets(y))) => jaccard(x, y),
        _ => 0.0,
    }
}

fn expr_sim(schema: &AttributeSchema, side: Side, a: &AttrExpr, b: &AttrExpr) -> f64 {
    let n = schema.len(side);
    if n == 0 {
        return 1.0;
    }
    let total: f64 = schema.names(side).map(|attr| conjunct_sim(a.get(attr), b.get(attr))).sum();
    total / n as f64
}

/// Mean of the similarities of the four rule components.
pub fn rule_sim(schema: &AttributeSchema, a: &Rule, b: &Rule) -> f64 {
    (expr_sim(schema, Side::User, &a.uae, &b.uae)
        + expr_sim(schema, Side::Resource, &a.rae, &b.rae)
        + jaccard(&a.ops, &b.ops)
        + jaccard(&a.con, &b.con))
        / 4.0
}

/// Average over `a` of the similarity to the closest rule of `b`.
pub fn rules_sim(schema: &AttributeSchema, a: &[Rule], b: &[Rule]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let total: f64 = a
        .iter()
        .map(|r| b.iter().map(|s| rule_sim(schema, r, s)).fold(0.0, f64::max))
        .sum();
    total / a.len() as f64
}

/// Syntactic similarity: the larger of the two directed rule-set
/// similarities.
pub fn syn_sim(p1: &AbacPolicy, p2: &AbacPolicy) -> Result<f64> {
    let schema = p1.data.schema();
    if schema != p2.data.schema() {
        return Err(Error::Schema("policies use different attribute schemas".into()));
    }
    Ok(rules_sim(schema, &p1.rules, &p2.rules).max(rules_sim(schema, &p2.rules, &p1.rules)))
}

fn meanings(p1: &AbacPolicy, p2: &AbacPolicy) -> Result<(TupleSet, TupleSet)> {
    let (e1, e2) = (p1.evaluator(), p2.evaluator());
    let (u1, u2) = (e1.universe(), e2.universe());
    if u1.users() != u2.users() || u1.resources() != u2.resources() || u1.ops() != u2.ops() {
        return Err(Error::Data("policies do not share users, resources and operations".into()));
    }
    Ok((e1.policy_meaning(&p1.rules)?, e2.policy_meaning(&p2.rules)?))
}

/// Semantic similarity: Jaccard of the two meanings.
pub fn sem_sim(p1: &AbacPolicy, p2: &AbacPolicy) -> Result<f64> {
    let (m1, m2) = meanings(p1, p2)?;
    Ok(jaccard_tuples(&m1, &m2))
}

/// `(|⟦mined⟧ ∖ ⟦orig⟧|, |⟦orig⟧ ∖ ⟦mined⟧|)`, both divided by `|⟦mined⟧|`.
pub fn assignment_fractions(original: &AbacPolicy, mined: &AbacPolicy) -> Result<(f64, f64)> {
    let (orig, m) = meanings(original, mined)?;
    fractions(&orig, &m)
}

fn fractions(orig: &TupleSet, mined: &TupleSet) -> Result<(f64, f64)> {
    if mined.is_empty() {
        return Err(Error::Data("mined policy grants nothing".into()));
    }
    let n = mined.len() as f64;
    Ok((mined.difference_count(orig) as f64 / n, orig.difference_count(mined) as f64 / n))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityReport {
    pub syn_sim: f64,
    pub sem_sim: f64,
    pub over_frac: f64,
    pub under_frac: f64,
}

impl SimilarityReport {
    /// One `name=value` line per metric.
    pub fn to_lines(&self) -> String {
        format!(
            "synSim={:.3}\nsemSim={:.3}\noverFrac={:.3}\nunderFrac={:.3}\n",
            self.syn_sim, self.sem_sim, self.over_frac, self.under_frac
        )
    }
}

/// All four metrics of `mined` against `original`.
pub fn compare(original: &AbacPolicy, mined: &AbacPolicy) -> Result<SimilarityReport> {
    let syn = syn_sim(original, mined)?;
    let (orig, m) = meanings(original, mined)?;
    let (over, under) = fractions(&orig, &m)?;
    Ok(SimilarityReport {
        syn_sim: syn,
        sem_sim: jaccard_tuples(&orig, &m),
        over_frac: over,
        under_frac: under,
    })
}
