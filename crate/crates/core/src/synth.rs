//! Synthetic policies, logs and log summaries.
//!
//! Rules are generated first; attribute data is then built around them so
//! that every rule has witnesses. Logs are drawn by picking a rule, then an
//! operation and a user-resource pair it grants.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::abac::{
    AbacPolicy, AtomicConstraint, AttrExpr, AttrValue, AttributeData, AttributeSchema, Conjunct, EntitySpec,
    Evaluator, Rule, Side, UpTuple,
};
use crate::error::{Error, Result};
use crate::log::{LogEntry, LogSummary};

/// Shape of a generated policy.
///
/// Attributes come in families sharing a value domain: `ua{i}`/`ra{i}`
/// (single-valued, related by `=`), and `um{i}` with `rc{i}` and `rm{i}`
/// (multi-valued user attribute related to a single- and a multi-valued
/// resource attribute by `∋` and `⊇`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthPolicyConfig {
    pub n_rule: usize,
    pub users_per_rule: usize,
    pub resources_per_rule: usize,
    pub n_ops: usize,
    pub single_families: usize,
    pub multi_families: usize,
    pub values_per_attr: usize,
    /// Chance, in percent, that an unconstrained attribute of a generated
    /// entity is left unknown.
    pub bottom_percent: u32,
    pub seed: u64,
}

impl Default for SynthPolicyConfig {
    fn default() -> Self {
        SynthPolicyConfig {
            n_rule: 10,
            users_per_rule: 5,
            resources_per_rule: 5,
            n_ops: 4,
            single_families: 3,
            multi_families: 1,
            values_per_attr: 6,
            bottom_percent: 5,
            seed: 0,
        }
    }
}

impl SynthPolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_rule == 0 {
            return Err(Error::Config("n_rule must be at least 1".into()));
        }
        if self.users_per_rule == 0 || self.resources_per_rule == 0 {
            return Err(Error::Config("each rule needs at least one user and one resource".into()));
        }
        if self.n_ops == 0 || self.values_per_attr < 2 {
            return Err(Error::Config("need at least one operation and two values per attribute".into()));
        }
        if self.single_families + self.multi_families == 0 {
            return Err(Error::Config("need at least one attribute family".into()));
        }
        if self.bottom_percent > 100 {
            return Err(Error::Config("bottom_percent is a percentage".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Attr {
    Single(usize),
    UserMulti(usize),
    ResContains(usize),
    ResMulti(usize),
}

fn domain_value(family: &str, i: usize, v: usize) -> String {
    format!("{family}{i}v{v}")
}

struct Vocab {
    n: usize,
}

impl Vocab {
    fn single(&self, i: usize, rng: &mut ChaCha8Rng) -> String {
        domain_value("s", i, rng.gen_range(0..self.n))
    }

    fn multi(&self, i: usize, rng: &mut ChaCha8Rng) -> String {
        domain_value("m", i, rng.gen_range(0..self.n))
    }

    fn multi_set(&self, i: usize, size: usize, rng: &mut ChaCha8Rng) -> BTreeSet<String> {
        let mut idx: Vec<usize> = (0..self.n).collect();
        idx.shuffle(rng);
        idx.into_iter().take(size.min(self.n)).map(|v| domain_value("m", i, v)).collect()
    }
}

/// Generates a policy with exactly `cfg.n_rule` distinct rules, each
/// granting at least one tuple.
pub fn gen_synthetic_policy(cfg: &SynthPolicyConfig) -> Result<AbacPolicy> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let vocab = Vocab { n: cfg.values_per_attr };
    let sf = cfg.single_families;
    let mf = cfg.multi_families;
    let schema = AttributeSchema::new(
        (0..sf).map(|i| format!("ua{i}")).collect::<Vec<_>>(),
        (0..mf).map(|i| format!("um{i}")).collect::<Vec<_>>(),
        (0..sf).map(|i| format!("ra{i}")).chain((0..mf).map(|i| format!("rc{i}"))).collect::<Vec<_>>(),
        (0..mf).map(|i| format!("rm{i}")).collect::<Vec<_>>(),
    )?;
    let ops: Vec<String> = (0..cfg.n_ops).map(|o| format!("op{o}")).collect();

    let mut attrs: Vec<(Side, Attr)> = Vec::new();
    for i in 0..sf {
        attrs.push((Side::User, Attr::Single(i)));
        attrs.push((Side::Resource, Attr::Single(i)));
    }
    for i in 0..mf {
        attrs.push((Side::User, Attr::UserMulti(i)));
        attrs.push((Side::Resource, Attr::ResContains(i)));
        attrs.push((Side::Resource, Attr::ResMulti(i)));
    }
    let mut all_cons: Vec<AtomicConstraint> = Vec::new();
    for i in 0..sf {
        all_cons.push(AtomicConstraint::equal(format!("ua{i}"), format!("ra{i}")));
    }
    for i in 0..mf {
        all_cons.push(AtomicConstraint::contains(format!("um{i}"), format!("rc{i}")));
        all_cons.push(AtomicConstraint::superset_eq(format!("um{i}"), format!("rm{i}")));
    }

    let name = |side: Side, a: Attr| -> String {
        match (side, a) {
            (Side::User, Attr::Single(i)) => format!("ua{i}"),
            (Side::Resource, Attr::Single(i)) => format!("ra{i}"),
            (_, Attr::UserMulti(i)) => format!("um{i}"),
            (_, Attr::ResContains(i)) => format!("rc{i}"),
            (_, Attr::ResMulti(i)) => format!("rm{i}"),
        }
    };

    let mut rules: Vec<Rule> = Vec::new();
    let mut seen: HashSet<Rule> = HashSet::new();
    let mut attempts = 0;
    while rules.len() < cfg.n_rule {
        attempts += 1;
        if attempts > 1000 * cfg.n_rule {
            return Err(Error::Config("vocabulary too small for the requested number of distinct rules".into()));
        }
        let n_con = rng.gen_range(0..=2usize).min(all_cons.len());
        let con: BTreeSet<AtomicConstraint> = all_cons.choose_multiple(&mut rng, n_con).cloned().collect();
        let constrained: BTreeSet<(Side, String)> = con
            .iter()
            .flat_map(|f| [(Side::User, f.user_attr().to_string()), (Side::Resource, f.res_attr().to_string())])
            .collect();
        let free: Vec<(Side, Attr)> = attrs
            .iter()
            .copied()
            .filter(|&(s, a)| !constrained.contains(&(s, name(s, a))))
            .collect();
        let n_conj = rng.gen_range(1..=3usize).min(free.len());
        let mut uae = AttrExpr::top();
        let mut rae = AttrExpr::top();
        for &(side, a) in free.choose_multiple(&mut rng, n_conj) {
            let width = rng.gen_range(1..=2usize);
            let c = match a {
                Attr::Single(i) => {
                    Conjunct::Atoms((0..width).map(|_| vocab.single(i, &mut rng)).collect())
                }
                Attr::ResContains(i) => {
                    Conjunct::Atoms((0..width).map(|_| vocab.multi(i, &mut rng)).collect())
                }
                Attr::UserMulti(i) | Attr::ResMulti(i) => {
                    let size = rng.gen_range(1..=2usize);
                    Conjunct::Sets([vocab.multi_set(i, size, &mut rng)].into_iter().collect())
                }
            };
            match side {
                Side::User => uae.set(name(side, a), c),
                Side::Resource => rae.set(name(side, a), c),
            }
        }
        let n_op = rng.gen_range(1..=2usize).min(ops.len());
        let rule_ops: BTreeSet<String> = ops.choose_multiple(&mut rng, n_op).cloned().collect();
        let rule = Rule {
            uae,
            rae,
            ops: rule_ops,
            con,
        };
        if seen.insert(rule.clone()) {
            rules.push(rule);
        }
    }

    let mut users = Vec::new();
    let mut resources = Vec::new();
    let width = (cfg.n_rule * cfg.users_per_rule.max(cfg.resources_per_rule)).to_string().len();
    for (k, rule) in rules.iter().enumerate() {
        let mut us: Vec<BTreeMap<String, AttrValue>> = (0..cfg.users_per_rule)
            .map(|_| random_entity(&attrs, Side::User, &vocab, cfg.bottom_percent, &name, &mut rng))
            .collect();
        let mut rs: Vec<BTreeMap<String, AttrValue>> = (0..cfg.resources_per_rule)
            .map(|_| random_entity(&attrs, Side::Resource, &vocab, cfg.bottom_percent, &name, &mut rng))
            .collect();
        for u in us.iter_mut() {
            impose(u, &rule.uae, &vocab, &mut rng);
        }
        for r in rs.iter_mut() {
            impose(r, &rule.rae, &vocab, &mut rng);
        }
        // Witness pair i shares the constrained values; once one side runs
        // out of fresh entities it wraps around and copies the other side.
        let (nu, nr) = (us.len(), rs.len());
        for i in 0..nu.max(nr) {
            let (ui, ri) = (i % nu, i % nr);
            let fresh = i < nu.min(nr);
            for f in &rule.con {
                let (ua, ra) = (f.user_attr().to_string(), f.res_attr().to_string());
                let fam: usize = ua[2..].parse().expect("generated name");
                match f {
                    AtomicConstraint::Equal { .. } => {
                        let v = if fresh {
                            AttrValue::Atomic(vocab.single(fam, &mut rng))
                        } else if i >= nu {
                            us[ui][&ua].clone()
                        } else {
                            rs[ri][&ra].clone()
                        };
                        us[ui].insert(ua, v.clone());
                        rs[ri].insert(ra, v);
                    }
                    AtomicConstraint::Contains { .. } => {
                        let v = if fresh || i < nu {
                            match rs[ri].get(&ra) {
                                Some(AttrValue::Atomic(v)) if !fresh => v.clone(),
                                _ => vocab.multi(fam, &mut rng),
                            }
                        } else {
                            match &us[ui][&ua] {
                                AttrValue::Set(s) => s.iter().next().expect("non-empty").clone(),
                                _ => unreachable!("user side was filled on an earlier pair"),
                            }
                        };
                        add_elements(&mut us[ui], &ua, [v.clone()]);
                        rs[ri].insert(ra, AttrValue::Atomic(v));
                    }
                    AtomicConstraint::SupersetEq { .. } => {
                        let sub = match rs[ri].get(&ra) {
                            Some(AttrValue::Set(s)) => s.clone(),
                            _ => {
                                let s = vocab.multi_set(fam, 1, &mut rng);
                                rs[ri].insert(ra.clone(), AttrValue::Set(s.clone()));
                                s
                            }
                        };
                        add_elements(&mut us[ui], &ua, sub);
                    }
                }
            }
        }
        for (i, attrs) in us.into_iter().enumerate() {
            users.push(EntitySpec {
                id: format!("u{:0width$}", k * cfg.users_per_rule + i),
                attrs,
            });
        }
        for (i, attrs) in rs.into_iter().enumerate() {
            resources.push(EntitySpec {
                id: format!("r{:0width$}", k * cfg.resources_per_rule + i),
                attrs,
            });
        }
    }

    let data = AttributeData::new(schema, users, resources)?;
    let policy = AbacPolicy::new(data, ops.into_iter().collect(), rules)?;
    let ev = policy.evaluator();
    for r in &policy.rules {
        if ev.rule_meaning(r)?.is_empty() {
            return Err(Error::Invariant("generated rule grants nothing".into()));
        }
    }
    Ok(policy)
}

fn random_entity(
    attrs: &[(Side, Attr)],
    side: Side,
    vocab: &Vocab,
    bottom_percent: u32,
    name: &impl Fn(Side, Attr) -> String,
    rng: &mut ChaCha8Rng,
) -> BTreeMap<String, AttrValue> {
    let mut out = BTreeMap::new();
    for &(s, a) in attrs.iter().filter(|(s, _)| *s == side) {
        if rng.gen_range(0..100) < bottom_percent {
            continue;
        }
        let v = match a {
            Attr::Single(i) => AttrValue::Atomic(vocab.single(i, rng)),
            Attr::ResContains(i) => AttrValue::Atomic(vocab.multi(i, rng)),
            Attr::UserMulti(i) => {
                let size = rng.gen_range(1..=3usize);
                AttrValue::Set(vocab.multi_set(i, size, rng))
            }
            Attr::ResMulti(i) => {
                let size = rng.gen_range(1..=2usize);
                AttrValue::Set(vocab.multi_set(i, size, rng))
            }
        };
        out.insert(name(s, a), v);
    }
    out
}

/// Overwrites attributes so the entity satisfies `e`.
fn impose(entity: &mut BTreeMap<String, AttrValue>, e: &AttrExpr, vocab: &Vocab, rng: &mut ChaCha8Rng) {
    for (attr, c) in e.iter() {
        let v = match c {
            Conjunct::Atoms(vs) => {
                let vs: Vec<&String> = vs.iter().collect();
                AttrValue::Atomic(vs.choose(rng).expect("non-empty conjunct").to_string())
            }
            Conjunct::Sets(ss) => {
                let ss: Vec<&BTreeSet<String>> = ss.iter().collect();
                let mut s = (*ss.choose(rng).expect("non-empty conjunct")).clone();
                // ⊇ on the user side leaves room for extra elements.
                if attr.starts_with("um") && rng.gen_bool(0.5) {
                    let fam: usize = attr[2..].parse().expect("generated name");
                    s.insert(vocab.multi(fam, rng));
                }
                AttrValue::Set(s)
            }
        };
        entity.insert(attr.to_string(), v);
    }
}

fn add_elements(entity: &mut BTreeMap<String, AttrValue>, attr: &str, vs: impl IntoIterator<Item = String>) {
    let slot = entity.entry(attr.to_string()).or_insert_with(|| AttrValue::Set(BTreeSet::new()));
    match slot {
        AttrValue::Set(s) => s.extend(vs),
        other => *other = AttrValue::Set(vs.into_iter().collect()),
    }
}

/// Max/min probability ratios of the generated distributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionRatios {
    pub rule: f64,
    pub user: f64,
    pub resource: f64,
    pub op: f64,
}

impl Default for DistributionRatios {
    fn default() -> Self {
        DistributionRatios {
            rule: 25.0,
            user: 3.0,
            resource: 25.0,
            op: 3.0,
        }
    }
}

/// Masses interpolated geometrically between 1 and `ratio`, shuffled and
/// normalized.
pub fn ratio_distribution(n: usize, ratio: f64, rng: &mut impl Rng) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![1.0];
    }
    let mut m: Vec<f64> = (0..n).map(|i| ratio.powf(i as f64 / (n - 1) as f64)).collect();
    m.shuffle(rng);
    let total: f64 = m.iter().sum();
    m.iter().map(|x| x / total).collect()
}

/// `P_rule`, `P_user`, `P_res` and `P'_op`, indexed like the policy's rules,
/// the data's (id-sorted) users and resources, and the sorted operations.
#[derive(Debug, Clone, PartialEq)]
pub struct GenDistributions {
    pub p_rule: Vec<f64>,
    pub p_user: Vec<f64>,
    pub p_res: Vec<f64>,
    pub p_op: Vec<f64>,
}

impl GenDistributions {
    pub fn uniform(policy: &AbacPolicy) -> Self {
        let u = |n: usize| vec![1.0 / n as f64; n];
        GenDistributions {
            p_rule: u(policy.rules.len()),
            p_user: u(policy.data.users().len()),
            p_res: u(policy.data.resources().len()),
            p_op: u(policy.operations.len()),
        }
    }

    pub fn with_ratios(policy: &AbacPolicy, ratios: &DistributionRatios, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GenDistributions {
            p_rule: ratio_distribution(policy.rules.len(), ratios.rule, &mut rng),
            p_user: ratio_distribution(policy.data.users().len(), ratios.user, &mut rng),
            p_res: ratio_distribution(policy.data.resources().len(), ratios.resource, &mut rng),
            p_op: ratio_distribution(policy.operations.len(), ratios.op, &mut rng),
        }
    }

    pub fn validate(&self, policy: &AbacPolicy) -> Result<()> {
        let checks = [
            ("rule", &self.p_rule, policy.rules.len()),
            ("user", &self.p_user, policy.data.users().len()),
            ("resource", &self.p_res, policy.data.resources().len()),
            ("operation", &self.p_op, policy.operations.len()),
        ];
        for (what, p, n) in checks {
            if p.len() != n {
                return Err(Error::Config(format!("{what} distribution has {} entries, expected {n}", p.len())));
            }
            if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::Config(format!("{what} distribution has a negative mass")));
            }
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("{what} distribution sums to {total}")));
            }
        }
        Ok(())
    }
}

/// `P_ur(·|ρ)` over `(user, resource)` index pairs and `P_op(·|ρ)` over
/// operation indices.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleConditionals {
    pub ur: Vec<((usize, usize), f64)>,
    pub op: Vec<(usize, f64)>,
}

/// Spreads the mass of pairs and operations the rule does not grant over
/// the ones it does, proportionally.
pub fn derive_conditional_dists(ev: &Evaluator, dists: &GenDistributions, rule: &Rule) -> Result<RuleConditionals> {
    let pairs = ev.pairs(&rule.uae, &rule.rae, &rule.con)?;
    if pairs.is_empty() || rule.ops.is_empty() {
        return Err(Error::Data("rule grants nothing".into()));
    }
    let ur_w: Vec<f64> = pairs.iter().map(|&(u, r)| dists.p_user[u] * dists.p_res[r]).collect();
    let c: f64 = ur_w.iter().sum();
    if c <= 0.0 {
        return Err(Error::Data("rule's pairs all have zero mass".into()));
    }
    let mut op = Vec::new();
    for o in &rule.ops {
        let i = ev
            .universe()
            .op_index(o)
            .ok_or_else(|| Error::Schema(format!("unknown operation `{o}`")))?;
        op.push((i, dists.p_op[i]));
    }
    let co: f64 = op.iter().map(|x| x.1).sum();
    if co <= 0.0 {
        return Err(Error::Data("rule's operations all have zero mass".into()));
    }
    Ok(RuleConditionals {
        ur: pairs.into_iter().zip(ur_w).map(|(p, w)| (p, w / c)).collect(),
        op: op.into_iter().map(|(i, w)| (i, w / co)).collect(),
    })
}

/// `round(c · n)` with halves rounded up.
pub fn target_size(completeness: f64, n: usize) -> usize {
    (completeness * n as f64 + 0.5 + 1e-9).floor() as usize
}

fn check_completeness(c: f64) -> Result<()> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::Config(format!("completeness {c} is not in (0, 1]")));
    }
    Ok(())
}

/// Asymptotic tuple frequencies of an infinitely long generated log,
/// `Σ_ρ P_rule(ρ) · P_op(o|ρ) · P_ur(u,r|ρ)`.
pub fn full_summary(policy: &AbacPolicy, dists: &GenDistributions) -> Result<LogSummary> {
    dists.validate(policy)?;
    let ev = policy.evaluator();
    let uni = ev.universe();
    let mut freq: BTreeMap<usize, f64> = BTreeMap::new();
    for (k, rule) in policy.rules.iter().enumerate() {
        if dists.p_rule[k] == 0.0 {
            continue;
        }
        let cond = derive_conditional_dists(&ev, dists, rule)?;
        for &((u, r), pur) in &cond.ur {
            for &(o, po) in &cond.op {
                *freq.entry(uni.index(u, r, o)).or_default() += dists.p_rule[k] * po * pur;
            }
        }
    }
    LogSummary::from_weights(freq.into_iter().map(|(i, f)| (uni.tuple(i), f)))
}

/// Keeps `n` tuples drawn without replacement with probability
/// proportional to frequency, then renormalizes.
pub fn reduce_summary(summary: &LogSummary, n: usize, rng: &mut impl Rng) -> Result<LogSummary> {
    if n == 0 {
        return Err(Error::Config("reduced summary would be empty".into()));
    }
    if n >= summary.len() {
        return Ok(summary.clone());
    }
    // Exponential keys ln(u)/w: the n largest form a sequential weighted
    // sample without replacement.
    let mut keyed: Vec<(f64, &UpTuple, f64)> = summary
        .iter()
        .map(|(t, f)| {
            let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            (u.ln() / f, t, f)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    LogSummary::from_weights(keyed.into_iter().take(n).map(|(_, t, f)| (t.clone(), f)))
}

/// Log summary at the given completeness: the asymptotic summary, reduced
/// by weighted subsampling when `completeness < 1`.
pub fn gen_log_summary(
    policy: &AbacPolicy,
    dists: &GenDistributions,
    completeness: f64,
    seed: u64,
) -> Result<LogSummary> {
    check_completeness(completeness)?;
    let full = full_summary(policy, dists)?;
    if completeness >= 1.0 {
        return Ok(full);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    reduce_summary(&full, target_size(completeness, full.len()), &mut rng)
}

/// Default bound on the number of generated entries in [`gen_log`].
pub const DEFAULT_MAX_ENTRIES: usize = 10_000_000;

/// Samples log entries until `round(c · |⟦π⟧|)` distinct tuples appear.
/// Timestamps are entry indices.
pub fn gen_log(
    policy: &AbacPolicy,
    dists: &GenDistributions,
    completeness: f64,
    seed: u64,
    max_entries: usize,
) -> Result<Vec<LogEntry>> {
    check_completeness(completeness)?;
    dists.validate(policy)?;
    let ev = policy.evaluator();
    let uni = ev.universe();
    let meaning = ev.policy_meaning(&policy.rules)?;
    let target = target_size(completeness, meaning.len());
    if target == 0 {
        return Err(Error::Config("target completeness selects no tuples".into()));
    }
    let mut per_rule = Vec::with_capacity(policy.rules.len());
    for rule in &policy.rules {
        let c = derive_conditional_dists(&ev, dists, rule)?;
        let ur_ix = WeightedIndex::new(c.ur.iter().map(|x| x.1)).map_err(|e| Error::Config(e.to_string()))?;
        let op_ix = WeightedIndex::new(c.op.iter().map(|x| x.1)).map_err(|e| Error::Config(e.to_string()))?;
        per_rule.push((c, ur_ix, op_ix));
    }
    let rule_ix = WeightedIndex::new(&dists.p_rule).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = uni.empty_set();
    let mut log = Vec::new();
    while seen.len() < target {
        if log.len() >= max_entries {
            return Err(Error::Data(format!(
                "completeness {completeness} not reached after {max_entries} entries"
            )));
        }
        let (c, ur_ix, op_ix) = &per_rule[rule_ix.sample(&mut rng)];
        let o = c.op[op_ix.sample(&mut rng)].0;
        let (u, r) = c.ur[ur_ix.sample(&mut rng)].0;
        seen.insert(uni.index(u, r, o));
        log.push(LogEntry::new(
            &uni.users()[u],
            &uni.resources()[r],
            &uni.ops()[o],
            log.len().to_string(),
        ));
    }
    Ok(log)
}
