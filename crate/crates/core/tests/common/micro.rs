//! Random micro-instances and an exhaustive policy-space oracle.
//!
//! Instances have at most 3 users, 3 resources, 2 operations and 2
//! attributes per side besides the ids. The oracle enumerates every rule
//! over the values present in the data. A rule's meaning only depends on
//! its user set, resource set, constraint-satisfying pairs and operations,
//! and WSC is additive over the four parts, so each part is reduced to the
//! cheapest expression per member set before combining.

use std::collections::{BTreeSet, HashMap};

use abac_logmine::abac::semantics::{satisfies_atomic, satisfies_expr};
use abac_logmine::abac::{
    AtomicConstraint, AttrExpr, AttrKind, AttrValue, AttributeData, AttributeSchema, Conjunct, EntitySpec, Evaluator,
    Rule, Side, UpTuple,
};
use abac_logmine::log::LogSummary;
use abac_logmine::metrics::QualityConfig;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Micro {
    pub data: AttributeData,
    pub ops: BTreeSet<String>,
    pub summary: LogSummary,
}

fn subsets<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    (1u32..1 << items.len())
        .map(|m| (0..items.len()).filter(|i| m >> i & 1 == 1).map(|i| items[i].clone()).collect())
        .collect()
}

fn random_value(rng: &mut ChaCha8Rng, kind: AttrKind, domain: &[&str]) -> Option<AttrValue> {
    if rng.gen_bool(0.15) {
        return None;
    }
    Some(match kind {
        AttrKind::Single => AttrValue::atomic(*domain.choose(rng).unwrap()),
        AttrKind::Multi => AttrValue::set(domain.iter().filter(|_| rng.gen_bool(0.5)).copied()),
    })
}

/// Attribute data for `seed`, without a log.
pub fn micro_data(seed: u64) -> (AttributeData, BTreeSet<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (nu, nr, no) = (rng.gen_range(1..=3), rng.gen_range(1..=3), rng.gen_range(1..=2));
    // family 0 relates ua/ra by =; family 1 is either ub/rb (=) or um/rm
    // (⊇, ∋ against rb)
    let multi_user = rng.gen_bool(0.5);
    let multi_res = rng.gen_bool(0.5);
    let user_attrs: Vec<(&str, AttrKind, &[&str])> = vec![
        ("ua", AttrKind::Single, &["x", "y"]),
        if multi_user { ("um", AttrKind::Multi, &["p", "q"]) } else { ("ub", AttrKind::Single, &["p", "q"]) },
    ];
    let res_attrs: Vec<(&str, AttrKind, &[&str])> = vec![
        ("ra", AttrKind::Single, &["x", "y"]),
        if multi_res { ("rm", AttrKind::Multi, &["p", "q"]) } else { ("rb", AttrKind::Single, &["p", "q"]) },
    ];
    let user_attrs = &user_attrs[..rng.gen_range(0..=2)];
    let res_attrs = &res_attrs[..rng.gen_range(0..=2)];
    let of = |attrs: &[(&str, AttrKind, &[&str])], k: AttrKind| -> Vec<String> {
        attrs.iter().filter(|a| a.1 == k).map(|a| a.0.to_string()).collect()
    };
    let schema = AttributeSchema::new(
        of(user_attrs, AttrKind::Single),
        of(user_attrs, AttrKind::Multi),
        of(res_attrs, AttrKind::Single),
        of(res_attrs, AttrKind::Multi),
    )
    .unwrap();
    let mut entities = |prefix: &str, n: usize, attrs: &[(&str, AttrKind, &[&str])]| -> Vec<EntitySpec> {
        (0..n)
            .map(|i| {
                let mut e = EntitySpec::new(format!("{prefix}{i}"));
                for (name, kind, domain) in attrs {
                    if let Some(v) = random_value(&mut rng, *kind, domain) {
                        e = e.with(*name, v);
                    }
                }
                e
            })
            .collect()
    };
    let users = entities("u", nu, user_attrs);
    let resources = entities("r", nr, res_attrs);
    let ops = (0..no).map(|o| format!("op{o}")).collect();
    (AttributeData::new(schema, users, resources).unwrap(), ops)
}

/// A micro-instance whose log is a random sample of one or two random
/// rules' meaning, with random frequencies.
pub fn micro_instance(seed: u64) -> Micro {
    let (data, ops) = micro_data(seed);
    let ev = Evaluator::new(&data, &ops);
    let space = RuleSpace::new(&data, &ops);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let uni = ev.universe();
    let mut granted = uni.empty_set();
    for _ in 0..rng.gen_range(1..=2) {
        granted.union_with(&ev.rule_meaning(&space.random_rule(&mut rng)).unwrap());
    }
    let mut tuples: Vec<UpTuple> = granted.iter().filter(|_| rng.gen_bool(0.85)).map(|i| uni.tuple(i)).collect();
    if tuples.is_empty() {
        tuples.push(uni.tuple(rng.gen_range(0..uni.len())));
    }
    let summary = LogSummary::from_weights(tuples.into_iter().map(|t| (t, rng.gen_range(1..=5) as f64))).unwrap();
    Micro { data, ops, summary }
}

/// Every conjunct choice over present values, per side, and every
/// well-typed constraint.
pub struct RuleSpace {
    pub user: Vec<AttrExpr>,
    pub resource: Vec<AttrExpr>,
    pub constraints: Vec<AtomicConstraint>,
    pub ops: Vec<String>,
}

fn conjunct_options(data: &AttributeData, side: Side, attr: &str, kind: AttrKind) -> Vec<Option<Conjunct>> {
    let mut out = vec![None];
    let present: Vec<&AttrValue> = (0..data.entities(side).len())
        .map(|i| data.value(side, i, attr).unwrap())
        .filter(|v| !v.is_bottom())
        .collect();
    match (kind, side) {
        (AttrKind::Single, _) => {
            let vals: Vec<String> = present
                .iter()
                .map(|v| v.as_atomic().unwrap().to_string())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            out.extend(subsets(&vals).into_iter().map(|s| Some(Conjunct::atoms(s))));
        }
        (AttrKind::Multi, Side::User) => {
            let vals: Vec<String> = present.iter().flat_map(|v| v.as_set().unwrap().iter().cloned()).collect::<BTreeSet<_>>().into_iter().collect();
            // ∅ as an alternative costs nothing, so it only enters when a
            // user holds it, as it would through computeUAE
            let mut alts = subsets(&vals);
            if present.iter().any(|v| v.as_set().unwrap().is_empty()) {
                alts.push(vec![]);
            }
            for pick in subsets(&alts) {
                if pick.len() <= 2 {
                    out.push(Some(Conjunct::sets(pick)));
                }
            }
        }
        (AttrKind::Multi, Side::Resource) => {
            let vals: Vec<Vec<String>> = present
                .iter()
                .map(|v| v.as_set().unwrap().iter().cloned().collect::<Vec<_>>())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            out.extend(subsets(&vals).into_iter().map(|s| Some(Conjunct::sets(s))));
        }
    }
    out
}

fn expr_options(data: &AttributeData, side: Side) -> Vec<AttrExpr> {
    let mut exprs = vec![AttrExpr::top()];
    for (attr, kind) in data.schema().attrs(side) {
        let opts = conjunct_options(data, side, attr, kind);
        exprs = exprs
            .into_iter()
            .flat_map(|e| {
                opts.iter().map(move |c| match c {
                    None => e.clone(),
                    Some(c) => e.clone().with(attr, c.clone()),
                })
            })
            .collect();
    }
    exprs
}

impl RuleSpace {
    pub fn new(data: &AttributeData, ops: &BTreeSet<String>) -> Self {
        let schema = data.schema();
        let mut constraints = Vec::new();
        for (ua, uk) in schema.attrs(Side::User) {
            for (ra, rk) in schema.attrs(Side::Resource) {
                if let Some(f) = AtomicConstraint::for_kinds(ua, uk, ra, rk) {
                    constraints.push(f);
                }
            }
        }
        RuleSpace {
            user: expr_options(data, Side::User),
            resource: expr_options(data, Side::Resource),
            constraints,
            ops: ops.iter().cloned().collect(),
        }
    }

    pub fn random_rule(&self, rng: &mut impl Rng) -> Rule {
        let ops: Vec<&String> = loop {
            let pick: Vec<&String> = self.ops.iter().filter(|_| rng.gen_bool(0.5)).collect();
            if !pick.is_empty() {
                break pick;
            }
        };
        Rule::new(
            self.user.choose(rng).unwrap().clone(),
            self.resource.choose(rng).unwrap().clone(),
            ops.into_iter().cloned(),
            self.constraints.iter().filter(|_| rng.gen_bool(0.2)).cloned(),
        )
    }
}

/// Cheapest weight per member bitmask.
fn cheapest(items: impl Iterator<Item = (u32, f64)>) -> HashMap<u32, f64> {
    let mut best: HashMap<u32, f64> = HashMap::new();
    for (mask, w) in items {
        let e = best.entry(mask).or_insert(f64::INFINITY);
        if w < *e {
            *e = w;
        }
    }
    best
}

/// Smallest `Q_pol` over all policies covering the logged tuples. Requires
/// `w_u = 0`.
pub fn optimal_q_pol(m: &Micro, q: &QualityConfig) -> f64 {
    assert_eq!(q.wu, 0.0);
    let data = &m.data;
    let ev = Evaluator::new(data, &m.ops);
    let uni = ev.universe();
    let (nu, nr, no) = (uni.n_users(), uni.n_resources(), uni.n_ops());
    assert!(uni.len() <= 18);
    let space = RuleSpace::new(data, &m.ops);
    let w = q.wsc;
    let members = |side: Side, e: &AttrExpr, n: usize| -> u32 {
        (0..n).filter(|&i| satisfies_expr(side, i, e, data).unwrap()).fold(0, |m, i| m | 1 << i)
    };
    let users = cheapest(space.user.iter().map(|e| (members(Side::User, e, nu), w.w1 * e.wsc() as f64)));
    let res = cheapest(space.resource.iter().map(|e| (members(Side::Resource, e, nr), w.w2 * e.wsc() as f64)));
    let all_pairs = (1u32 << (nu * nr)) - 1;
    let cons = cheapest((0u32..1 << space.constraints.len()).map(|pick| {
        let mut pairs = all_pairs;
        let mut n = 0;
        for (k, f) in space.constraints.iter().enumerate() {
            if pick >> k & 1 == 1 {
                n += 1;
                for (u, r) in (0..nu).flat_map(|u| (0..nr).map(move |r| (u, r))) {
                    if !satisfies_atomic(u, r, f, data).unwrap() {
                        pairs &= !(1 << (u * nr + r));
                    }
                }
            }
        }
        (pairs, w.w4 * n as f64)
    }));
    let mut meanings: HashMap<u32, f64> = HashMap::new();
    for (&um, &uw) in &users {
        for (&rm, &rw) in &res {
            for (&cm, &cw) in &cons {
                for om in 1u32..1 << no {
                    let mut bits = 0u32;
                    for u in (0..nu).filter(|u| um >> u & 1 == 1) {
                        for r in (0..nr).filter(|r| rm >> r & 1 == 1 && cm >> (u * nr + r) & 1 == 1) {
                            for o in (0..no).filter(|o| om >> o & 1 == 1) {
                                bits |= 1 << uni.index(u, r, o);
                            }
                        }
                    }
                    if bits != 0 {
                        let wsc = uw + rw + cw + w.w3 * om.count_ones() as f64;
                        let e = meanings.entry(bits).or_insert(f64::INFINITY);
                        *e = e.min(wsc);
                    }
                }
            }
        }
    }
    let up0 = m.summary.iter().fold(0u32, |acc, (t, _)| acc | 1 << uni.index_of(t).unwrap());
    let meanings: Vec<(u32, f64)> = meanings.into_iter().collect();
    let mut best = vec![f64::INFINITY; 1 << uni.len()];
    best[0] = 0.0;
    let mut opt = f64::INFINITY;
    for mask in 0..best.len() {
        let b = best[mask];
        if !b.is_finite() {
            continue;
        }
        let mask = mask as u32;
        if mask & up0 == up0 {
            let over = (mask & !up0).count_ones() as f64;
            opt = opt.min(b + q.wo * over / nu as f64);
        }
        for &(m, wsc) in &meanings {
            let next = (mask | m) as usize;
            if next as u32 != mask && b + wsc < best[next] {
                best[next] = b + wsc;
            }
        }
    }
    opt
}
