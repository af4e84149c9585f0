use std::collections::BTreeSet;

use super::{Miner, RuleMetric, Scope, Validity};
use crate::abac::{AtomicConstraint, AttrKind, Conjunct, Rule, Side, TupleSet};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Edit {
    Unchanged,
    Modified,
    Removed,
}

/// One listed value of a conjunct.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Value {
    Atom(String),
    Set(BTreeSet<String>),
}

fn conjunct_values(c: &Conjunct) -> Vec<Value> {
    match c {
        Conjunct::Atoms(s) => s.iter().cloned().map(Value::Atom).collect(),
        Conjunct::Sets(s) => s.iter().cloned().map(Value::Set).collect(),
    }
}

fn conjunct_has(c: &Conjunct, v: &Value) -> bool {
    match (c, v) {
        (Conjunct::Atoms(s), Value::Atom(a)) => s.contains(a),
        (Conjunct::Sets(s), Value::Set(a)) => s.contains(a),
        _ => false,
    }
}

fn conjunct_remove(c: &mut Conjunct, v: &Value) {
    match (c, v) {
        (Conjunct::Atoms(s), Value::Atom(a)) => {
            s.remove(a);
        }
        (Conjunct::Sets(s), Value::Set(a)) => {
            s.remove(a);
        }
        _ => {}
    }
}

const SIDES: [Side; 2] = [Side::User, Side::Resource];

/// Conditions shared by the overlap eliminations: `other` uses no attribute
/// that `rho` leaves unconstrained, its constraint is weaker, and every
/// conjunct except possibly `skip` is ⊤ or a superset of `rho`'s.
fn overlaps(other: &Rule, rho: &Rule, skip: Option<(Side, &str)>) -> bool {
    if !other.con.is_subset(&rho.con) {
        return false;
    }
    SIDES.iter().all(|&side| {
        other.expr(side).iter().all(|(a, c)| match rho.expr(side).get(a) {
            None => false,
            Some(_) if skip == Some((side, a)) => true,
            Some(mine) => c.is_superset(mine),
        })
    })
}

impl Miner<'_> {
    /// Simplifies every rule in place. Returns whether any rule changed in a
    /// way that can affect merging.
    pub fn simplify_rules(&self, rules: &mut Vec<Rule>) -> Result<bool> {
        rules.sort();
        rules.dedup();
        let mut changed = false;

        for i in 0..rules.len() {
            rules[i].uae.elim_redundant_sets();
            if let Some(r) = self.elim_conjuncts(i, rules)? {
                rules[i] = r;
                changed = true;
            }
            if let Some(r) = self.elim_elements(&rules[i])? {
                rules[i] = r;
                changed = true;
            }
        }
        changed |= self.overlap_pass(rules, |m, i, rules| m.elim_overlap_val(i, rules))?;
        changed |= self.overlap_pass(rules, |m, i, rules| m.elim_overlap_op(i, rules))?;
        for i in 0..rules.len() {
            if let Some(r) = self.elim_constraints(i, rules)? {
                rules[i] = r;
                changed = true;
            }
        }
        rules.sort();
        rules.dedup();
        Ok(changed)
    }

    fn overlap_pass(
        &self,
        rules: &mut Vec<Rule>,
        f: impl Fn(&Self, usize, &mut Vec<Rule>) -> Edit,
    ) -> Result<bool> {
        let mut changed = false;
        let mut i = 0;
        while i < rules.len() {
            match f(self, i, rules) {
                Edit::Unchanged => i += 1,
                Edit::Modified => {
                    changed = true;
                    i += 1;
                }
                Edit::Removed => {
                    rules.remove(i);
                    changed = true;
                }
            }
        }
        Ok(changed)
    }

    /// Meaning and WSC of every rule but `i`. Only the ILP metric reads
    /// them, so other metrics get an empty set.
    fn others(&self, i: usize, rules: &[Rule]) -> Result<(TupleSet, f64)> {
        let mut m = self.ev.universe().empty_set();
        let mut wsc = 0.0;
        if self.cfg.rule_metric != RuleMetric::QRulIlp {
            return Ok((m, wsc));
        }
        for (j, r) in rules.iter().enumerate() {
            if j != i {
                m.union_with(&*self.meaning(r)?);
                wsc += self.wsc(r);
            }
        }
        Ok((m, wsc))
    }

    /// Tries dropping combinations of removable conjuncts, one side at a
    /// time; the side with the larger maximal conjunct goes first.
    fn elim_conjuncts(&self, i: usize, rules: &[Rule]) -> Result<Option<Rule>> {
        let rho = &rules[i];
        let tagged = |side: Side| -> Vec<(Side, String)> {
            rho.expr(side)
                .attrs()
                .map(|a| (side, a.to_string()))
                .filter(|ta| !self.cfg.unremovable.contains(ta))
                .collect()
        };
        let (au, ar) = (tagged(Side::User), tagged(Side::Resource));
        let (others, others_wsc) = self.others(i, rules)?;
        let scope = Scope::Modify {
            others: &others,
            others_wsc,
        };
        let (first, second) = if rho.uae.max_conjunct_size() >= rho.rae.max_conjunct_size() {
            (au, ar)
        } else {
            (ar, au)
        };
        let r1 = self.elim_conjuncts_helper(rho, &first, scope)?.0;
        let r2 = self.elim_conjuncts_helper(&r1, &second, scope)?.0;
        Ok((r2 != *rho).then_some(r2))
    }

    fn elim_conjuncts_helper(&self, rho: &Rule, attrs: &[(Side, String)], scope: Scope<'_>) -> Result<(Rule, f64)> {
        let mut best = (rho.clone(), self.score(rho, scope)?);
        let mut usable = Vec::new();
        for ta in attrs {
            let mut r = rho.clone();
            r.expr_mut(ta.0).remove(&ta.1);
            if self.cfg.validity == Validity::Relaxed || self.is_valid(&r)? {
                usable.push(ta.clone());
            }
        }
        for k in 0..usable.len() {
            let mut r = rho.clone();
            r.expr_mut(usable[k].0).remove(&usable[k].1);
            let cand = self.elim_conjuncts_helper(&r, &usable[k + 1..], scope)?;
            if cand.1 > best.1 {
                best = cand;
            }
        }
        Ok(best)
    }

    /// Removes elements from sets in multi-valued user conjuncts while the
    /// rule stays free of over-assignments.
    fn elim_elements(&self, rho: &Rule) -> Result<Option<Rule>> {
        let schema = self.ev.data().schema();
        let mut cur = rho.clone();
        let targets: Vec<(String, BTreeSet<String>)> = rho
            .uae
            .iter()
            .filter(|(a, _)| schema.kind(Side::User, a) == Some(AttrKind::Multi))
            .flat_map(|(a, c)| match c {
                Conjunct::Sets(sets) => sets.iter().map(|s| (a.to_string(), s.clone())).collect(),
                Conjunct::Atoms(_) => Vec::new(),
            })
            .collect();
        for (attr, original) in targets {
            let mut set = original;
            for e in set.clone() {
                let Some(Conjunct::Sets(sets)) = cur.uae.get(&attr) else {
                    break;
                };
                if !sets.contains(&set) {
                    break;
                }
                let mut smaller = set.clone();
                smaller.remove(&e);
                let mut sets = sets.clone();
                sets.remove(&set);
                sets.insert(smaller.clone());
                let mut cand = cur.clone();
                cand.uae.set(attr.clone(), Conjunct::Sets(sets));
                if self.is_valid(&cand)? {
                    cur = cand;
                    set = smaller;
                }
            }
        }
        Ok((cur != *rho).then_some(cur))
    }

    /// Removes conjunct values whose tuples another rule already grants.
    fn elim_overlap_val(&self, i: usize, rules: &mut [Rule]) -> Edit {
        let mut edit = Edit::Unchanged;
        for side in SIDES {
            let attrs: Vec<String> = rules[i].expr(side).attrs().map(str::to_string).collect();
            for a in attrs {
                let values = match rules[i].expr(side).get(&a) {
                    Some(c) => conjunct_values(c),
                    None => continue,
                };
                for v in values {
                    let rho = &rules[i];
                    let covered = rules.iter().enumerate().any(|(j, other)| {
                        j != i
                            && rho.ops.is_subset(&other.ops)
                            && other.expr(side).get(&a).is_none_or(|c| conjunct_has(c, &v))
                            && overlaps(other, rho, Some((side, &a)))
                    });
                    if covered {
                        let c = rules[i].expr_mut(side).get_mut(&a).expect("attribute present");
                        conjunct_remove(c, &v);
                        if c.is_empty() {
                            return Edit::Removed;
                        }
                        edit = Edit::Modified;
                    }
                }
            }
        }
        edit
    }

    /// Removes operations that another, more general rule already grants.
    fn elim_overlap_op(&self, i: usize, rules: &mut [Rule]) -> Edit {
        let mut edit = Edit::Unchanged;
        for o in rules[i].ops.clone() {
            let rho = &rules[i];
            let covered = rules
                .iter()
                .enumerate()
                .any(|(j, other)| j != i && other.ops.contains(&o) && overlaps(other, rho, None));
            if covered {
                rules[i].ops.remove(&o);
                if rules[i].ops.is_empty() {
                    return Edit::Removed;
                }
                edit = Edit::Modified;
            }
        }
        edit
    }

    /// Tries dropping combinations of atomic constraints whose removal keeps
    /// the rule free of over-assignments.
    fn elim_constraints(&self, i: usize, rules: &[Rule]) -> Result<Option<Rule>> {
        let rho = &rules[i];
        let (others, others_wsc) = self.others(i, rules)?;
        let scope = Scope::Modify {
            others: &others,
            others_wsc,
        };
        let cons: Vec<AtomicConstraint> = rho.con.iter().cloned().collect();
        let best = self.elim_constraints_helper(rho, &cons, scope)?.0;
        Ok((best != *rho).then_some(best))
    }

    fn elim_constraints_helper(
        &self,
        rho: &Rule,
        cons: &[AtomicConstraint],
        scope: Scope<'_>,
    ) -> Result<(Rule, f64)> {
        let mut best = (rho.clone(), self.score(rho, scope)?);
        let mut usable = Vec::new();
        for f in cons {
            let mut r = rho.clone();
            r.con.remove(f);
            if self.cfg.validity == Validity::Relaxed || self.is_valid(&r)? {
                usable.push(f.clone());
            }
        }
        for k in 0..usable.len() {
            let mut r = rho.clone();
            r.con.remove(&usable[k]);
            let cand = self.elim_constraints_helper(&r, &usable[k + 1..], scope)?;
            if cand.1 > best.1 {
                best = cand;
            }
        }
        Ok(best)
    }
}
