//! Seeded mining: candidate rules from seed tuples, generalization with
//! constraints, merging, simplification and greedy selection.

mod candidate;
mod generalize;
mod merge;
mod select;
mod simplify;

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::rc::Rc;

use rustc_hash::FxHashMap;

use crate::abac::{AbacPolicy, AtomicConstraint, AttributeData, Evaluator, Rule, Side, TupleSet, UpTuple};
use crate::error::{Error, Result};
use crate::log::{Frequencies, LogSummary};
use crate::metrics::{self, IlpContext, QualityConfig};

pub use candidate::{candidate_constraint, compute_rae, compute_uae};
pub use select::Selection;
pub(crate) use merge::{PreservesMeaning, Redundancy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RuleMetric {
    #[default]
    QRul,
    QRulFreq,
    QRulIlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMetric {
    QRulFreq,
    QFreq,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub metric: NoiseMetric,
    pub tau: f64,
}

/// How the next seed is picked from the uncovered tuples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeedOrder {
    /// Highest frequency first, ties by (user, resource, op) id.
    #[default]
    FrequencyThenLex,
    /// Smallest (user, resource, op) id first.
    Lex,
}

/// Whether rule rewrites must stay within `UP0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Validity {
    /// Merged rules and conjunct or constraint eliminations may not add
    /// tuples outside `UP0`.
    #[default]
    Strict,
    /// Such rewrites are judged by quality alone, so over-assignments are
    /// traded against size through `w_o` and `w'_o`.
    Relaxed,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MiningConfig {
    pub quality: QualityConfig,
    pub rule_metric: RuleMetric,
    /// Tagged attributes whose conjuncts are never eliminated.
    pub unremovable: BTreeSet<(Side, String)>,
    pub seed_order: SeedOrder,
    pub noise: Option<NoiseConfig>,
    pub validity: Validity,
}

impl MiningConfig {
    pub fn validate(&self) -> Result<()> {
        self.quality.validate()?;
        if let Some(n) = &self.noise {
            if !(n.tau >= 0.0) {
                return Err(Error::Config("noise threshold must be non-negative".into()));
            }
        }
        Ok(())
    }
}

/// What a rule's quality is measured against.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Scope<'s> {
    /// Extending a rule set whose meaning is `prior`; `uncov` is the part of
    /// `UP0` it leaves uncovered.
    Extend { uncov: &'s TupleSet, prior: &'s TupleSet },
    /// Replacing one rule of a set; `others` is the meaning of the remaining
    /// rules and `others_wsc` their WSC.
    Modify { others: &'s TupleSet, others_wsc: f64 },
}

/// Output of [`mine_policy`].
#[derive(Debug, Clone)]
pub struct MiningOutcome {
    pub policy: AbacPolicy,
    /// Rules in selection order with their selection-time quality.
    pub selection: Vec<Selection>,
    /// Tuples of `UP0` covered only by rules dropped as noise.
    pub suspected_noise: BTreeSet<UpTuple>,
}

/// A mining session over fixed attribute data and log summary.
///
/// Rule meanings are memoized by rule content, so no invalidation is needed
/// when rules are rewritten.
pub struct Miner<'a> {
    ev: &'a Evaluator,
    cfg: &'a MiningConfig,
    up0: TupleSet,
    freqs: Frequencies,
    ilp: IlpContext,
    cache: Option<RefCell<FxHashMap<Rule, Rc<TupleSet>>>>,
}

impl<'a> Miner<'a> {
    pub fn new(ev: &'a Evaluator, summary: &LogSummary, cfg: &'a MiningConfig) -> Result<Self> {
        cfg.validate()?;
        if summary.is_empty() {
            return Err(Error::EmptyLog);
        }
        let freqs = summary.frequencies(ev.universe())?;
        let up0 = freqs.support(ev.universe());
        Ok(Miner {
            ilp: IlpContext {
                m: up0.len(),
                x: ev.universe().len(),
            },
            ev,
            cfg,
            up0,
            freqs,
            cache: Some(RefCell::new(FxHashMap::default())),
        })
    }

    /// Disables meaning memoization (reference path for tests).
    pub fn uncached(mut self) -> Self {
        self.cache = None;
        self
    }

    pub fn up0(&self) -> &TupleSet {
        &self.up0
    }

    pub fn evaluator(&self) -> &Evaluator {
        self.ev
    }

    pub fn frequencies(&self) -> &Frequencies {
        &self.freqs
    }

    pub fn quality(&self) -> &QualityConfig {
        &self.cfg.quality
    }

    pub fn meaning(&self, rule: &Rule) -> Result<Rc<TupleSet>> {
        let Some(cache) = &self.cache else {
            return Ok(Rc::new(self.ev.rule_meaning(rule)?));
        };
        if let Some(m) = cache.borrow().get(rule) {
            return Ok(Rc::clone(m));
        }
        let m = Rc::new(self.ev.rule_meaning(rule)?);
        cache.borrow_mut().insert(rule.clone(), Rc::clone(&m));
        Ok(m)
    }

    pub fn meaning_of(&self, rules: &[Rule]) -> Result<TupleSet> {
        let mut out = self.ev.universe().empty_set();
        for r in rules {
            out.union_with(&*self.meaning(r)?);
        }
        Ok(out)
    }

    fn wsc(&self, rule: &Rule) -> f64 {
        rule.wsc(&self.cfg.quality.wsc)
    }

    /// `⟦ρ⟧ ⊆ UP0`.
    pub fn is_valid(&self, rule: &Rule) -> Result<bool> {
        Ok(self.meaning(rule)?.is_subset(&self.up0))
    }

    /// `Q_pol` of a rule set.
    pub fn q_pol(&self, rules: &[Rule]) -> Result<f64> {
        let wsc: f64 = rules.iter().map(|r| self.wsc(r)).sum();
        Ok(self.q_pol_of(wsc, &self.meaning_of(rules)?))
    }

    /// `Q_pol` from a total WSC and the policy meaning.
    pub(crate) fn q_pol_of(&self, wsc: f64, meaning: &TupleSet) -> f64 {
        metrics::q_pol_parts(
            wsc,
            meaning,
            &self.up0,
            self.ev.universe().n_users(),
            &self.freqs,
            &self.cfg.quality,
        )
    }

    /// Quality of `rule` under the configured rule metric. The ILP metric is
    /// reported in the log2 domain.
    pub(crate) fn score(&self, rule: &Rule, scope: Scope<'_>) -> Result<f64> {
        Ok(self.score_meaning(rule, &*self.meaning(rule)?, scope))
    }

    /// [`Miner::score`] with the rule's meaning supplied by the caller.
    pub(crate) fn score_meaning(&self, rule: &Rule, m: &TupleSet, scope: Scope<'_>) -> f64 {
        let wsc = self.wsc(rule);
        let q = &self.cfg.quality;
        match (self.cfg.rule_metric, scope) {
            (RuleMetric::QRul, Scope::Extend { uncov, .. }) => metrics::q_rul(m, wsc, uncov, &self.up0, q),
            (RuleMetric::QRul, Scope::Modify { .. }) => metrics::q_rul(m, wsc, &self.up0, &self.up0, q),
            (RuleMetric::QRulFreq, Scope::Extend { uncov, .. }) => {
                metrics::q_rul_freq(m, wsc, uncov, &self.up0, &self.freqs, q)
            }
            (RuleMetric::QRulFreq, Scope::Modify { .. }) => {
                metrics::q_rul_freq(m, wsc, &self.up0, &self.up0, &self.freqs, q)
            }
            (RuleMetric::QRulIlp, Scope::Extend { uncov, prior }) => {
                let p = m.intersection_count(uncov);
                let dg = self.ilp.generality(m.difference_count(prior));
                metrics::q_rul_ilp_log2(wsc, self.ilp.m, p, dg).unwrap_or(f64::NEG_INFINITY)
            }
            (RuleMetric::QRulIlp, Scope::Modify { others, others_wsc }) => {
                let g = self.ilp.generality(m.union_count(others));
                metrics::fm_log2(others_wsc + wsc, g, self.ilp.m)
            }
        }
    }

    fn next_seed(&self, uncov: &TupleSet) -> Option<usize> {
        match self.cfg.seed_order {
            SeedOrder::Lex => uncov.iter().next(),
            SeedOrder::FrequencyThenLex => {
                let mut best: Option<(usize, f64)> = None;
                for i in uncov.iter() {
                    let f = self.freqs.get(i);
                    if best.is_none_or(|(_, bf)| f > bf) {
                        best = Some((i, f));
                    }
                }
                best.map(|(i, _)| i)
            }
        }
    }

    /// Builds `⟨computeUAE(su), computeRAE(sr), so, ∅⟩`, generalizes it with
    /// `cc`, adds it to `rules` and removes its meaning from `uncov`.
    pub fn add_cand_rule(
        &self,
        su: &BTreeSet<usize>,
        sr: &BTreeSet<usize>,
        so: &BTreeSet<String>,
        cc: &[AtomicConstraint],
        uncov: &mut TupleSet,
        rules: &mut Vec<Rule>,
    ) -> Result<Rule> {
        let mut covered = self.meaning_of(rules)?;
        self.add_cand_rule_tracked(su, sr, so, cc, uncov, rules, &mut covered)
    }

    /// [`Miner::add_cand_rule`] with `covered = ⟦rules⟧` kept up to date by
    /// the caller.
    #[allow(clippy::too_many_arguments)]
    fn add_cand_rule_tracked(
        &self,
        su: &BTreeSet<usize>,
        sr: &BTreeSet<usize>,
        so: &BTreeSet<String>,
        cc: &[AtomicConstraint],
        uncov: &mut TupleSet,
        rules: &mut Vec<Rule>,
        covered: &mut TupleSet,
    ) -> Result<Rule> {
        let rho = Rule {
            uae: compute_uae(self.ev, su)?,
            rae: compute_rae(self.ev, sr)?,
            ops: so.clone(),
            con: BTreeSet::new(),
        };
        let best = self.generalize_rule(&rho, cc, uncov, covered)?;
        let m = self.meaning(&best)?;
        uncov.difference_with(&m);
        covered.union_with(&m);
        if !rules.contains(&best) {
            rules.push(best.clone());
        }
        Ok(best)
    }

    /// One pass of the seed loop: the two candidate rules built from `seed`.
    pub fn seed_step(&self, seed: usize, uncov: &mut TupleSet, rules: &mut Vec<Rule>) -> Result<(Rule, Rule)> {
        let mut covered = self.meaning_of(rules)?;
        self.seed_step_tracked(seed, uncov, rules, &mut covered)
    }

    fn seed_step_tracked(
        &self,
        seed: usize,
        uncov: &mut TupleSet,
        rules: &mut Vec<Rule>,
        covered: &mut TupleSet,
    ) -> Result<(Rule, Rule)> {
        let uni = self.ev.universe();
        let (u, r, o) = uni.decode(seed);
        let data = self.ev.data();
        let cc = candidate_constraint(data, r, u);
        let su: BTreeSet<usize> = (0..uni.n_users())
            .filter(|&u2| self.up0.contains(uni.index(u2, r, o)) && candidate_constraint(data, r, u2) == cc)
            .collect();
        let so: BTreeSet<String> = (0..uni.n_ops())
            .filter(|&o2| self.up0.contains(uni.index(u, r, o2)))
            .map(|o2| uni.ops()[o2].clone())
            .collect();
        let sr = BTreeSet::from([r]);
        let first_ops = BTreeSet::from([uni.ops()[o].clone()]);
        let first = self.add_cand_rule_tracked(&su, &sr, &first_ops, &cc, uncov, rules, covered)?;
        let second = self.add_cand_rule_tracked(&BTreeSet::from([u]), &sr, &so, &cc, uncov, rules, covered)?;
        Ok((first, second))
    }

    /// Candidate rules covering `UP0`.
    pub fn seed_loop(&self) -> Result<Vec<Rule>> {
        let mut uncov = self.up0.clone();
        let mut rules = Vec::new();
        let mut covered = self.ev.universe().empty_set();
        while let Some(seed) = self.next_seed(&uncov) {
            self.seed_step_tracked(seed, &mut uncov, &mut rules, &mut covered)?;
        }
        Ok(rules)
    }

    /// Merge, then alternate simplification and merging until neither
    /// applies.
    pub fn refine(&self, rules: &mut Vec<Rule>) -> Result<()> {
        self.merge_rules(rules)?;
        while self.simplify_rules(rules)? && self.merge_rules(rules)? {}
        Ok(())
    }

    pub fn run(&self) -> Result<MiningOutcome> {
        let mut rules = self.seed_loop()?;
        self.refine(&mut rules)?;
        let selection = self.select_final_rules(&rules)?;
        let (kept, suspected) = match &self.cfg.noise {
            Some(noise) => self.detect_noise(&selection, noise)?,
            None => (selection.iter().map(|s| s.rule.clone()).collect(), TupleSet::with_capacity(0)),
        };
        if self.cfg.noise.is_none() && !self.up0.is_subset(&self.meaning_of(&kept)?) {
            return Err(Error::Invariant("mined policy does not cover the log".into()));
        }
        let policy = AbacPolicy {
            data: self.ev.data().clone(),
            operations: self.ev.operations().clone(),
            rules: kept,
        };
        Ok(MiningOutcome {
            policy,
            selection,
            suspected_noise: self.ev.universe().named(&suspected),
        })
    }
}

/// Mines a policy from attribute data, the operation set and a log summary.
pub fn mine_policy(
    data: &AttributeData,
    operations: &BTreeSet<String>,
    summary: &LogSummary,
    cfg: &MiningConfig,
) -> Result<MiningOutcome> {
    let ev = Evaluator::new(data, operations);
    Miner::new(&ev, summary, cfg)?.run()
}
