use rustc_hash::FxHashMap;

use super::{Miner, Scope};
use crate::abac::{AtomicConstraint, Rule, TupleSet};
use crate::error::Result;

impl Miner<'_> {
    /// Best-quality generalization of `rho` obtained by adding constraints
    /// from `cc` (in order) and dropping the conjuncts of the attributes they
    /// relate. `prior` is the meaning of the current candidate set; quality
    /// is measured against `uncov`.
    pub fn generalize_rule(
        &self,
        rho: &Rule,
        cc: &[AtomicConstraint],
        uncov: &TupleSet,
        prior: &TupleSet,
    ) -> Result<Rule> {
        let scope = Scope::Extend { uncov, prior };
        let mut memo = FxHashMap::default();
        Ok(self.generalize_from(rho, cc, 0, scope, &mut memo)?.0)
    }

    fn generalize_from(
        &self,
        rho: &Rule,
        cc: &[AtomicConstraint],
        start: usize,
        scope: Scope<'_>,
        memo: &mut FxHashMap<(Rule, usize), (Rule, f64)>,
    ) -> Result<(Rule, f64)> {
        if let Some(hit) = memo.get(&(rho.clone(), start)) {
            return Ok(hit.clone());
        }
        // Candidates are evaluated outside the shared meaning cache: few of
        // them survive, and each is visited once per call.
        let m = self.evaluator().rule_meaning(rho)?;
        let mut best = (rho.clone(), self.score_meaning(rho, &m, scope));
        for i in start..cc.len() {
            let f = &cc[i];
            for variant in 0..3 {
                let mut g = rho.clone();
                if variant != 2 {
                    g.uae.remove(f.user_attr());
                }
                if variant != 1 {
                    g.rae.remove(f.res_attr());
                }
                g.con.insert(f.clone());
                let cand = self.generalize_from(&g, cc, i + 1, scope, memo)?;
                if cand.1 > best.1 {
                    best = cand;
                }
            }
        }
        memo.insert((rho.clone(), start), best.clone());
        Ok(best)
    }
}
