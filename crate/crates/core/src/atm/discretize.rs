//! Turning a fitted model into rules: top-n selection per author and topic,
//! and an annealing search over the selection sizes.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::authors::Author;
use super::model::AtmModel;
use crate::abac::{Rule, TupleSet};
use crate::error::{Error, Result};
use crate::log::Frequencies;
use crate::metrics::QualityConfig;
use crate::miner::{Miner, PreservesMeaning, Redundancy};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealConfig {
    pub max_iter: usize,
    pub t0: f64,
    /// Cooling factor applied after every iteration.
    pub gamma: f64,
    /// Proposal radius.
    pub epsilon: usize,
    pub seed: u64,
    /// Return the last state instead of the best one seen.
    pub return_final: bool,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        AnnealConfig {
            max_iter: 200,
            t0: 10.0,
            gamma: 0.95,
            epsilon: 1,
            seed: 0,
            return_final: false,
        }
    }
}

impl AnnealConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(Error::Config("initial temperature must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config("gamma must lie in (0, 1)".into()));
        }
        if self.epsilon == 0 {
            return Err(Error::Config("epsilon must be at least 1".into()));
        }
        Ok(())
    }
}

/// Indices of `row` by decreasing value, ties by index.
fn ranking(row: &[f64]) -> Vec<usize> {
    let mut ix: Vec<usize> = (0..row.len()).collect();
    ix.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    ix
}

/// Operations (as indices) of author `a`: the `tw[t]` most likely words of
/// each of its `at_a` most likely topics.
fn author_ops(topics: &[usize], words: &[Vec<usize>], at_a: usize, tw: &[usize]) -> Vec<usize> {
    let mut ops: Vec<usize> = topics[..at_a].iter().flat_map(|&t| words[t][..tw[t]].iter().copied()).collect();
    ops.sort_unstable();
    ops.dedup();
    ops
}

/// Rules for the assignment `at`, `tw`, before merging: one rule per author
/// and selected topic, skipping empty operation sets. Rules of one author
/// differ only in their operations and are emitted already combined.
pub fn construct_rules(model: &AtmModel, at: &[usize], tw: &[usize], authors: &[Author], ops: &[String]) -> Vec<Rule> {
    let words: Vec<Vec<usize>> = model.phi.iter().map(|r| ranking(r)).collect();
    let mut rules = Vec::new();
    for (a, author) in authors.iter().enumerate() {
        let o = author_ops(&ranking(&model.theta[a]), &words, at[a], tw);
        if !o.is_empty() {
            rules.push(author.rule(o.into_iter().map(|i| ops[i].clone()).collect()));
        }
    }
    rules
}

/// Merges rules while the policy meaning stays exactly the same.
pub fn merge_rules_gen(miner: &Miner<'_>, rules: &mut Vec<Rule>) -> Result<bool> {
    miner.merge_with(rules, Redundancy::Meaning, &PreservesMeaning)
}

/// `constructABACRules`: [`construct_rules`] followed by
/// [`merge_rules_gen`].
pub fn construct_abac_rules(
    miner: &Miner<'_>,
    model: &AtmModel,
    at: &[usize],
    tw: &[usize],
    authors: &[Author],
) -> Result<Vec<Rule>> {
    let ops: Vec<String> = miner.evaluator().universe().ops().to_vec();
    let mut rules = construct_rules(model, at, tw, authors, &ops);
    merge_rules_gen(miner, &mut rules)?;
    Ok(rules)
}

/// Result of [`discretize`].
#[derive(Debug, Clone)]
pub struct Discretized {
    pub rules: Vec<Rule>,
    pub q_pol: f64,
    pub at: Vec<usize>,
    pub tw: Vec<usize>,
    /// Quality of the initial random assignment, after merging.
    pub initial_q_pol: f64,
    /// Annealing passes run, at most `max_iter + 1`.
    pub iterations: usize,
}

/// Incremental `Q_pol` over per-author rules.
struct State<'s> {
    pairs: &'s [Vec<usize>],
    base_wsc: &'s [f64],
    w3: f64,
    n_ops: usize,
    n_users: f64,
    up0: &'s TupleSet,
    freqs: &'s Frequencies,
    quality: &'s QualityConfig,
    ops: Vec<Vec<usize>>,
    cover: Vec<u32>,
}

impl State<'_> {
    fn rule_wsc(&self, a: usize, ops: &[usize]) -> f64 {
        if ops.is_empty() {
            0.0
        } else {
            self.base_wsc[a] + self.w3 * ops.len() as f64
        }
    }

    fn reset(&mut self, ops: Vec<Vec<usize>>) {
        self.cover.iter_mut().for_each(|c| *c = 0);
        for (a, o) in ops.iter().enumerate() {
            for &p in &self.pairs[a] {
                for &op in o {
                    self.cover[p * self.n_ops + op] += 1;
                }
            }
        }
        self.ops = ops;
    }

    fn q(&self) -> f64 {
        let wsc: f64 = self.ops.iter().enumerate().map(|(a, o)| self.rule_wsc(a, o)).sum();
        let mut over = 0usize;
        let mut under = 0.0;
        for (i, &c) in self.cover.iter().enumerate() {
            match (c > 0, self.up0.contains(i)) {
                (true, false) => over += 1,
                (false, true) => under += self.freqs.get(i),
                _ => {}
            }
        }
        self.quality_of(wsc, over as f64, under)
    }

    fn quality_of(&self, wsc: f64, over: f64, under: f64) -> f64 {
        let mut q = wsc + self.quality.wo * over / self.n_users;
        if self.quality.wu > 0.0 {
            q += self.quality.wu * under;
        }
        q
    }

    /// Change in quality if each listed author's operations were replaced.
    fn delta(&self, changes: &[(usize, Vec<usize>)]) -> f64 {
        let mut wsc = 0.0;
        let mut dc: HashMap<usize, i64> = HashMap::new();
        for (a, new) in changes {
            let old = &self.ops[*a];
            wsc += self.rule_wsc(*a, new) - self.rule_wsc(*a, old);
            for &p in &self.pairs[*a] {
                for &op in old.iter().filter(|o| !new.contains(o)) {
                    *dc.entry(p * self.n_ops + op).or_default() -= 1;
                }
                for &op in new.iter().filter(|o| !old.contains(o)) {
                    *dc.entry(p * self.n_ops + op).or_default() += 1;
                }
            }
        }
        let (mut over, mut under) = (0.0, 0.0);
        for (i, d) in dc {
            let before = self.cover[i] > 0;
            let after = self.cover[i] as i64 + d > 0;
            if before == after {
                continue;
            }
            let sign = if after { 1.0 } else { -1.0 };
            if self.up0.contains(i) {
                under -= sign * self.freqs.get(i);
            } else {
                over += sign;
            }
        }
        self.quality_of(wsc, over, under) - self.quality_of(0.0, 0.0, 0.0)
    }
}

fn accept(dq: f64, temp: f64, rng: &mut ChaCha8Rng) -> bool {
    dq < 0.0 || rng.gen::<f64>() < (-dq / temp).exp()
}

/// Annealing search over `AT` (topics per author) and `TW` (words per
/// topic). Starts from a uniformly random assignment; each iteration
/// proposes a neighbour for every author and every topic against the same
/// current state, applies the accepted ones together and cools. Stops when
/// nothing was accepted or after `max_iter + 1` passes.
///
/// Moves are scored on the unmerged rules. The returned policy is the
/// merged form of the best state seen, or of the initial state if merging
/// makes that one better.
pub fn discretize(miner: &Miner<'_>, model: &AtmModel, authors: &[Author], cfg: &AnnealConfig) -> Result<Discretized> {
    cfg.validate()?;
    model.validate()?;
    let ev = miner.evaluator();
    let uni = ev.universe();
    if model.n_authors() != authors.len() || model.n_words() != uni.n_ops() {
        return Err(Error::Data("model dimensions do not match authors and operations".into()));
    }
    let (k, n_words) = (model.k, uni.n_ops());
    let topics: Vec<Vec<usize>> = model.theta.iter().map(|r| ranking(r)).collect();
    let words: Vec<Vec<usize>> = model.phi.iter().map(|r| ranking(r)).collect();
    // rank[a][t]: position of topic t in author a's ranking
    let mut rank = vec![vec![0usize; k]; authors.len()];
    for (a, ts) in topics.iter().enumerate() {
        for (i, &t) in ts.iter().enumerate() {
            rank[a][t] = i;
        }
    }
    let n_r = uni.n_resources();
    let pairs: Vec<Vec<usize>> = authors
        .iter()
        .map(|a| Ok(ev.pairs(&a.uae, &a.rae, &a.con)?.into_iter().map(|(u, r)| u * n_r + r).collect()))
        .collect::<Result<_>>()?;
    let quality = miner.quality();
    let base_wsc: Vec<f64> = authors.iter().map(|a| a.wsc(&quality.wsc)).collect();
    let mut st = State {
        pairs: &pairs,
        base_wsc: &base_wsc,
        w3: quality.wsc.w3,
        n_ops: n_words,
        n_users: uni.n_users().max(1) as f64,
        up0: miner.up0(),
        freqs: miner.frequencies(),
        quality,
        ops: Vec::new(),
        cover: vec![0; uni.len()],
    };
    let all_ops = |at: &[usize], tw: &[usize]| -> Vec<Vec<usize>> {
        (0..authors.len()).map(|a| author_ops(&topics[a], &words, at[a], tw)).collect()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut at: Vec<usize> = (0..authors.len()).map(|_| rng.gen_range(0..=k)).collect();
    let mut tw: Vec<usize> = (0..k).map(|_| rng.gen_range(0..=n_words)).collect();
    st.reset(all_ops(&at, &tw));
    let initial = (at.clone(), tw.clone());
    let mut best = (st.q(), at.clone(), tw.clone());
    let mut temp = cfg.t0;
    let mut iterations = 0;
    // passes i = 0..=max_iter, as in the reference loop
    while iterations <= cfg.max_iter {
        iterations += 1;
        let mut at_tmp = at.clone();
        for a in 0..authors.len() {
            let lo = at[a].saturating_sub(cfg.epsilon);
            let hi = (at[a] + cfg.epsilon).min(k);
            let prop = rng.gen_range(lo..=hi);
            if prop == at[a] {
                continue;
            }
            let dq = st.delta(&[(a, author_ops(&topics[a], &words, prop, &tw))]);
            if accept(dq, temp, &mut rng) {
                at_tmp[a] = prop;
            }
        }
        let mut tw_tmp = tw.clone();
        for t in 0..k {
            let lo = tw[t].saturating_sub(cfg.epsilon);
            let hi = (tw[t] + cfg.epsilon).min(n_words);
            let prop = rng.gen_range(lo..=hi);
            if prop == tw[t] {
                continue;
            }
            let mut tw2 = tw.clone();
            tw2[t] = prop;
            let changes: Vec<(usize, Vec<usize>)> = (0..authors.len())
                .filter(|&a| rank[a][t] < at[a])
                .map(|a| (a, author_ops(&topics[a], &words, at[a], &tw2)))
                .collect();
            let dq = st.delta(&changes);
            if accept(dq, temp, &mut rng) {
                tw_tmp[t] = prop;
            }
        }
        if at_tmp == at && tw_tmp == tw {
            break;
        }
        at = at_tmp;
        tw = tw_tmp;
        st.reset(all_ops(&at, &tw));
        let q = st.q();
        if q < best.0 {
            best = (q, at.clone(), tw.clone());
        }
        temp *= cfg.gamma;
    }

    let finish = |at: &[usize], tw: &[usize]| -> Result<(f64, Vec<Rule>)> {
        let rules = construct_abac_rules(miner, model, at, tw, authors)?;
        Ok((miner.q_pol(&rules)?, rules))
    };
    let (q_init, init_rules) = finish(&initial.0, &initial.1)?;
    let (final_at, final_tw) = if cfg.return_final { (at, tw) } else { (best.1, best.2) };
    let (mut q, mut rules) = finish(&final_at, &final_tw)?;
    let (mut out_at, mut out_tw) = (final_at, final_tw);
    if !cfg.return_final && q_init < q {
        (q, rules) = (q_init, init_rules);
        (out_at, out_tw) = initial;
    }
    Ok(Discretized {
        rules,
        q_pol: q,
        at: out_at,
        tw: out_tw,
        initial_q_pol: q_init,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::abac::{AttrExpr, AttributeData, AttributeSchema, Conjunct, EntitySpec, Evaluator, UpTuple};
    use crate::atm::{active_authors, AuthorBounds, DEFAULT_AUTHOR_CAP};
    use crate::log::LogSummary;
    use crate::miner::MiningConfig;

    /// Role-a users read kind-x resources; role-b users write and delete
    /// kind-y resources.
    fn corpus() -> (AttributeData, BTreeSet<String>, LogSummary) {
        let schema = AttributeSchema::new(["role"], [], ["kind"], []).unwrap();
        let mut users = Vec::new();
        let mut res = Vec::new();
        for i in 0..3 {
            users.push(EntitySpec::new(format!("a{i}")).atomic("role", "a"));
            users.push(EntitySpec::new(format!("b{i}")).atomic("role", "b"));
            res.push(EntitySpec::new(format!("x{i}")).atomic("kind", "x"));
            res.push(EntitySpec::new(format!("y{i}")).atomic("kind", "y"));
        }
        let data = AttributeData::new(schema, users, res).unwrap();
        let ops = ["del", "read", "write"].iter().map(|s| s.to_string()).collect();
        let mut w = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                w.push((UpTuple::new(format!("a{i}"), format!("x{j}"), "read"), 1.0));
                w.push((UpTuple::new(format!("b{i}"), format!("y{j}"), "write"), 1.0));
                w.push((UpTuple::new(format!("b{i}"), format!("y{j}"), "del"), 1.0));
            }
        }
        (data, ops, LogSummary::from_weights(w).unwrap())
    }

    fn mining() -> MiningConfig {
        let mut cfg = MiningConfig::default();
        cfg.quality.wu = 1000.0;
        cfg
    }

    fn authors(ev: &Evaluator, miner: &Miner<'_>) -> Vec<Author> {
        let uni = ev.universe();
        let pairs = miner
            .up0()
            .iter()
            .map(|i| {
                let (u, r, _) = uni.decode(i);
                (u, r)
            })
            .collect();
        active_authors(ev, &AuthorBounds::default(), DEFAULT_AUTHOR_CAP, &pairs, &miner.quality().wsc).unwrap()
    }

    fn author(role: Option<&str>, kind: Option<&str>) -> Author {
        let e = |attr: &str, v: Option<&str>| match v {
            Some(v) => AttrExpr::top().with(attr, Conjunct::atoms([v])),
            None => AttrExpr::top(),
        };
        Author {
            uae: e("role", role),
            rae: e("kind", kind),
            con: BTreeSet::new(),
        }
    }

    fn ops() -> Vec<String> {
        ["del", "read", "write"].iter().map(|s| s.to_string()).collect()
    }

    fn hand_model() -> AtmModel {
        AtmModel {
            k: 2,
            theta: vec![vec![0.7, 0.3], vec![0.2, 0.8]],
            phi: vec![vec![0.5, 0.3, 0.2], vec![0.1, 0.2, 0.7]],
        }
    }

    #[test]
    fn zero_topics_give_no_rules() {
        let a = vec![author(Some("a"), None), author(None, Some("y"))];
        assert!(construct_rules(&hand_model(), &[0, 0], &[3, 3], &a, &ops()).is_empty());
    }

    #[test]
    fn full_word_lists_give_one_rule_per_author() {
        let a = vec![author(Some("a"), None), author(None, Some("y"))];
        let rules = construct_rules(&hand_model(), &[1, 1], &[3, 3], &a, &ops());
        assert_eq!(rules.len(), 2);
        assert!(rules.iter().all(|r| r.ops.len() == 3));
    }

    #[test]
    fn hand_computed_selection() {
        let a = vec![author(Some("a"), None), author(None, Some("y"))];
        // author 0: topic 0, its top 2 words (del, read)
        // author 1: topics 1 then 0; write from topic 1, del and read from topic 0
        let rules = construct_rules(&hand_model(), &[1, 2], &[2, 1], &a, &ops());
        let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        assert_eq!(rules[0], a[0].rule(names(&["del", "read"])));
        assert_eq!(rules[1], a[1].rule(names(&["del", "read", "write"])));
    }

    #[test]
    fn merging_preserves_meaning() {
        let (data, ops_set, summary) = corpus();
        let ev = Evaluator::new(&data, &ops_set);
        let cfg = mining();
        let miner = Miner::new(&ev, &summary, &cfg).unwrap();
        let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        let mut rules = vec![
            author(Some("b"), Some("y")).rule(names(&["write"])),
            author(Some("b"), Some("y")).rule(names(&["del"])),
            author(Some("a"), Some("x")).rule(names(&["read"])),
        ];
        let before = miner.meaning_of(&rules).unwrap();
        assert!(merge_rules_gen(&miner, &mut rules).unwrap());
        assert_eq!(rules.len(), 2);
        assert_eq!(miner.meaning_of(&rules).unwrap(), before);
        // merging a-x with b-y would add a-y and b-x pairs
        let mut apart = vec![
            author(Some("a"), Some("x")).rule(names(&["read"])),
            author(Some("b"), Some("y")).rule(names(&["read"])),
        ];
        assert!(!merge_rules_gen(&miner, &mut apart).unwrap());
        assert_eq!(apart.len(), 2);
    }

    #[test]
    fn incremental_quality_matches_policy_quality() {
        let (data, ops_set, summary) = corpus();
        let ev = Evaluator::new(&data, &ops_set);
        let cfg = mining();
        let miner = Miner::new(&ev, &summary, &cfg).unwrap();
        let authors = authors(&ev, &miner);
        let n_r = ev.universe().n_resources();
        let pairs: Vec<Vec<usize>> = authors
            .iter()
            .map(|a| ev.pairs(&a.uae, &a.rae, &a.con).unwrap().into_iter().map(|(u, r)| u * n_r + r).collect())
            .collect();
        let base: Vec<f64> = authors.iter().map(|a| a.wsc(&cfg.quality.wsc)).collect();
        let mut st = State {
            pairs: &pairs,
            base_wsc: &base,
            w3: cfg.quality.wsc.w3,
            n_ops: 3,
            n_users: ev.universe().n_users() as f64,
            up0: miner.up0(),
            freqs: miner.frequencies(),
            quality: &cfg.quality,
            ops: Vec::new(),
            cover: vec![0; ev.universe().len()],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let ops: Vec<Vec<usize>> = (0..authors.len())
                .map(|_| (0..3).filter(|_| rng.gen_bool(0.2)).collect())
                .collect();
            let rules: Vec<Rule> = authors
                .iter()
                .zip(&ops)
                .filter(|(_, o)| !o.is_empty())
                .map(|(a, o)| a.rule(o.iter().map(|&i| self::ops()[i].clone()).collect()))
                .collect();
            st.reset(ops);
            let q = st.q();
            assert!((q - miner.q_pol(&rules).unwrap()).abs() < 1e-6);
            let a = rng.gen_range(0..authors.len());
            let new: Vec<usize> = (0..3).filter(|_| rng.gen_bool(0.5)).collect();
            let d = st.delta(&[(a, new.clone())]);
            let mut next = st.ops.clone();
            next[a] = new;
            st.reset(next);
            assert!((st.q() - (q + d)).abs() < 1e-6);
        }
    }

    fn run(anneal: &AnnealConfig, k: usize) -> Discretized {
        let (data, ops_set, summary) = corpus();
        let ev = Evaluator::new(&data, &ops_set);
        let cfg = mining();
        let miner = Miner::new(&ev, &summary, &cfg).unwrap();
        let authors = authors(&ev, &miner);
        let corpus = crate::atm::build_documents(&ev, &summary, &authors).unwrap();
        let gibbs = crate::atm::GibbsConfig::default();
        let model = crate::atm::learn_atm(&corpus.docs, authors.len(), 3, k, &gibbs).unwrap();
        discretize(&miner, &model, &authors, anneal).unwrap()
    }

    #[test]
    fn reproducible_and_no_worse_than_the_start() {
        for seed in 0..5 {
            let cfg = AnnealConfig { seed, ..AnnealConfig::default() };
            let a = run(&cfg, 2);
            let b = run(&cfg, 2);
            assert_eq!((&a.rules, a.at.clone(), a.tw.clone()), (&b.rules, b.at.clone(), b.tw.clone()));
            assert!(a.q_pol <= a.initial_q_pol);
            let greedy = run(&AnnealConfig { t0: 1e-12, seed, ..AnnealConfig::default() }, 2);
            assert!(greedy.q_pol <= greedy.initial_q_pol);
        }
    }

    #[test]
    fn one_iteration_is_allowed() {
        let d = run(&AnnealConfig { max_iter: 1, ..AnnealConfig::default() }, 1);
        assert!((1..=2).contains(&d.iterations));
        assert!(AnnealConfig { max_iter: 0, ..AnnealConfig::default() }.validate().is_err());
        assert!(AnnealConfig { gamma: 1.0, ..AnnealConfig::default() }.validate().is_err());
    }
}
