use std::cmp::Ordering;

use super::{Miner, NoiseConfig, NoiseMetric, Scope};
use crate::abac::{Rule, TupleSet};
use crate::error::{Error, Result};
use crate::format::rule_to_string;
use crate::metrics;

/// A rule chosen by the greedy selection, with the quality it had when
/// chosen and its frequency-sensitive score used for noise detection.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub rule: Rule,
    pub quality: f64,
    pub noise_score: Option<f64>,
}

impl Miner<'_> {
    /// Greedily moves the highest-quality rule into the result until `UP0`
    /// is covered. Quality is measured against the still-uncovered part of
    /// `UP0`; rules covering none of it are discarded. Ties go to the lower
    /// WSC, then to the smaller printed form.
    pub fn select_final_rules(&self, candidates: &[Rule]) -> Result<Vec<Selection>> {
        let mut pool: Vec<(Rule, String)> = candidates.iter().map(|r| (r.clone(), rule_to_string(r))).collect();
        pool.sort_by(|a, b| a.1.cmp(&b.1));
        pool.dedup_by(|a, b| a.1 == b.1);
        let mut chosen: Vec<Selection> = Vec::new();
        let mut covered = self.ev.universe().empty_set();
        let mut uncov = self.up0.clone();
        while !uncov.is_empty() {
            let mut alive = Vec::with_capacity(pool.len());
            for entry in pool.drain(..) {
                if !self.meaning(&entry.0)?.is_disjoint(&uncov) {
                    alive.push(entry);
                }
            }
            pool = alive;
            if pool.is_empty() {
                return Err(Error::Invariant("candidate rules do not cover the log".into()));
            }
            let scope = Scope::Extend {
                uncov: &uncov,
                prior: &covered,
            };
            let mut best: Option<(usize, f64)> = None;
            for (k, (rule, text)) in pool.iter().enumerate() {
                let q = self.score(rule, scope)?;
                let better = match best {
                    None => true,
                    Some((bk, bq)) => match q.total_cmp(&bq) {
                        Ordering::Greater => true,
                        Ordering::Less => false,
                        Ordering::Equal => {
                            let (br, bt) = &pool[bk];
                            match self.wsc(rule).total_cmp(&self.wsc(br)) {
                                Ordering::Less => true,
                                Ordering::Greater => false,
                                Ordering::Equal => text < bt,
                            }
                        }
                    },
                };
                if better {
                    best = Some((k, q));
                }
            }
            let (k, quality) = best.expect("pool is non-empty");
            let (rule, _) = pool.remove(k);
            let m = self.meaning(&rule)?;
            let noise_score = self.cfg.noise.map(|n| match n.metric {
                NoiseMetric::QRulFreq => {
                    metrics::q_rul_freq(&m, self.wsc(&rule), &uncov, &self.up0, &self.freqs, &self.cfg.quality)
                }
                NoiseMetric::QFreq => metrics::q_freq(&m, &self.freqs),
            });
            covered.union_with(&m);
            uncov.difference_with(&m);
            chosen.push(Selection {
                rule,
                quality,
                noise_score,
            });
        }
        Ok(chosen)
    }

    /// Drops selected rules scoring below `τ` and reports the tuples of
    /// `UP0` that only dropped rules covered.
    pub fn detect_noise(&self, selection: &[Selection], noise: &NoiseConfig) -> Result<(Vec<Rule>, TupleSet)> {
        let mut kept = Vec::new();
        for s in selection {
            let score = match s.noise_score {
                Some(v) => v,
                None => {
                    let m = self.meaning(&s.rule)?;
                    match noise.metric {
                        NoiseMetric::QFreq => metrics::q_freq(&m, &self.freqs),
                        NoiseMetric::QRulFreq => metrics::q_rul_freq(
                            &m,
                            self.wsc(&s.rule),
                            &self.up0,
                            &self.up0,
                            &self.freqs,
                            &self.cfg.quality,
                        ),
                    }
                }
            };
            if score >= noise.tau {
                kept.push(s.rule.clone());
            }
        }
        let suspected = self.up0.difference(&self.meaning_of(&kept)?);
        Ok((kept, suspected))
    }
}
