use std::collections::VecDeque;

use super::{Miner, Validity};
use crate::abac::{Rule, TupleSet};
use crate::error::Result;

/// Component-wise union of two rules, keeping the first rule's constraint.
pub(crate) fn merge_pair(a: &Rule, b: &Rule) -> Rule {
    Rule {
        uae: a.uae.union(&b.uae),
        rae: a.rae.union(&b.rae),
        ops: a.ops.union(&b.ops).cloned().collect(),
        con: a.con.clone(),
    }
}

fn drop_marked<T>(v: &mut Vec<T>, marked: &[bool]) {
    let mut k = 0;
    v.retain(|_| {
        k += 1;
        !marked[k - 1]
    });
}

/// Acceptance test for a merged rule, given its meaning and the meaning of
/// the current rule set.
pub(crate) trait MergeGuard {
    fn admits(&self, merged: &TupleSet, current: &TupleSet) -> bool;
}

/// `⟦ρ_mrg⟧ ⊆ UP0`.
pub(crate) struct NoOverAssignment<'s>(pub &'s TupleSet);

impl MergeGuard for NoOverAssignment<'_> {
    fn admits(&self, merged: &TupleSet, _current: &TupleSet) -> bool {
        merged.is_subset(self.0)
    }
}

/// Admits every merge; quality alone decides.
pub(crate) struct AnyMerge;

impl MergeGuard for AnyMerge {
    fn admits(&self, _merged: &TupleSet, _current: &TupleSet) -> bool {
        true
    }
}

/// `⟦ρ_mrg⟧ ⊆ ⟦Rules⟧`.
pub(crate) struct PreservesMeaning;

impl MergeGuard for PreservesMeaning {
    fn admits(&self, merged: &TupleSet, current: &TupleSet) -> bool {
        merged.is_subset(current)
    }
}

/// How redundancy is judged before merging.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Redundancy {
    /// `⟦ρ⟧ ∩ UP0 ⊆ ⟦ρ'⟧ ∩ UP0`.
    WithinLog,
    /// `⟦ρ⟧ ⊆ ⟦ρ'⟧`.
    Meaning,
}

impl Miner<'_> {
    /// Removes redundant rules, then merges pairs with equal constraints
    /// while that lowers `Q_pol` and, under strict validity, the merged rule
    /// has no over-assignments. Returns whether any pair was merged.
    pub fn merge_rules(&self, rules: &mut Vec<Rule>) -> Result<bool> {
        match self.cfg.validity {
            Validity::Strict => {
                let up0 = self.up0.clone();
                self.merge_with(rules, Redundancy::WithinLog, &NoOverAssignment(&up0))
            }
            Validity::Relaxed => self.merge_with(rules, Redundancy::WithinLog, &AnyMerge),
        }
    }

    pub(crate) fn merge_with(
        &self,
        rules: &mut Vec<Rule>,
        redundancy: Redundancy,
        guard: &dyn MergeGuard,
    ) -> Result<bool> {
        rules.sort();
        rules.dedup();
        self.remove_redundant(rules, redundancy)?;

        // Rules carry ids so that queued pairs can be dropped lazily once
        // either side is gone.
        let mut ids: Vec<usize> = (0..rules.len()).collect();
        let mut next_id = rules.len();
        let mut alive: Vec<bool> = vec![true; rules.len()];
        let mut by_id: Vec<Rule> = rules.clone();
        let mut work: VecDeque<(usize, usize)> = VecDeque::new();
        for i in 0..rules.len() {
            for j in i + 1..rules.len() {
                if rules[i].con == rules[j].con {
                    work.push_back((i, j));
                }
            }
        }
        // Rules found redundant have meanings inside the merged rule's, so
        // the next rule set means exactly `current ∪ ⟦ρ_mrg⟧`.
        let mut ms = rules.iter().map(|r| self.meaning(r)).collect::<Result<Vec<_>>>()?;
        let mut current = self.ev.universe().empty_set();
        for m in &ms {
            current.union_with(m);
        }
        let mut wsc_total: f64 = rules.iter().map(|r| self.wsc(r)).sum();
        let mut q_current = self.q_pol_of(wsc_total, &current);
        let mut merged_any = false;
        while let Some((a, b)) = work.pop_front() {
            if !alive[a] || !alive[b] {
                continue;
            }
            let merged = merge_pair(&by_id[a], &by_id[b]);
            let m = self.meaning(&merged)?;
            if !guard.admits(&m, &current) {
                continue;
            }
            let redun: Vec<bool> = ms.iter().map(|x| x.is_subset(&m)).collect();
            let removed: f64 = rules.iter().zip(&redun).filter(|x| *x.1).map(|(r, _)| self.wsc(r)).sum();
            let next_wsc = wsc_total - removed + self.wsc(&merged);
            let next_meaning = current.union(&m);
            let q_next = self.q_pol_of(next_wsc, &next_meaning);
            if q_next < q_current {
                for (k, &gone) in redun.iter().enumerate() {
                    if gone {
                        alive[ids[k]] = false;
                    }
                }
                drop_marked(rules, &redun);
                drop_marked(&mut ms, &redun);
                drop_marked(&mut ids, &redun);
                let id = next_id;
                next_id += 1;
                for (r, &rid) in rules.iter().zip(&ids) {
                    if r.con == merged.con {
                        work.push_back((id, rid));
                    }
                }
                by_id.push(merged.clone());
                alive.push(true);
                rules.push(merged);
                ms.push(m);
                ids.push(id);
                current = next_meaning;
                wsc_total = next_wsc;
                q_current = q_next;
                merged_any = true;
            }
        }
        Ok(merged_any)
    }

    /// Drops rules whose relevant meaning is contained in another rule's,
    /// one at a time so that of two equivalent rules one survives. Larger
    /// rules are considered for removal first.
    fn remove_redundant(&self, rules: &mut Vec<Rule>, redundancy: Redundancy) -> Result<()> {
        let mut keyed = Vec::with_capacity(rules.len());
        for r in rules.iter() {
            let mut m = (*self.meaning(r)?).clone();
            if redundancy == Redundancy::WithinLog {
                m.intersect_with(&self.up0);
            }
            keyed.push((r.clone(), m));
        }
        let mut order: Vec<usize> = (0..keyed.len()).collect();
        let w = self.cfg.quality.wsc;
        order.sort_by(|&i, &j| {
            keyed[j].0.wsc(&w).total_cmp(&keyed[i].0.wsc(&w)).then_with(|| keyed[i].0.cmp(&keyed[j].0))
        });
        let mut alive = vec![true; keyed.len()];
        for &i in &order {
            let covered = (0..keyed.len()).any(|j| j != i && alive[j] && keyed[i].1.is_subset(&keyed[j].1));
            if covered {
                alive[i] = false;
            }
        }
        let dead: Vec<bool> = alive.iter().map(|a| !a).collect();
        drop_marked(rules, &dead);
        Ok(())
    }
}
