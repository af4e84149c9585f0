//! Authors: bounded `⟨uae, rae, con⟩` skeletons with single-valued
//! conjuncts.

use std::collections::{BTreeSet, HashMap};

use fixedbitset::FixedBitSet;

use crate::abac::{AtomicConstraint, AttrExpr, AttrKind, AttributeData, Conjunct, Evaluator, Rule, Side, WscWeights};
use crate::error::{Error, Result};

/// Default limit on the number of enumerated authors.
pub const DEFAULT_AUTHOR_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Author {
    pub uae: AttrExpr,
    pub rae: AttrExpr,
    pub con: BTreeSet<AtomicConstraint>,
}

impl Author {
    pub fn rule(&self, ops: BTreeSet<String>) -> Rule {
        Rule {
            uae: self.uae.clone(),
            rae: self.rae.clone(),
            ops,
            con: self.con.clone(),
        }
    }

    pub fn wsc(&self, w: &WscWeights) -> f64 {
        self.rule(BTreeSet::new()).wsc(w)
    }
}

/// Limits on authors: conjuncts per side, atomic constraints, and the size
/// of the one set a multi-valued conjunct may hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuthorBounds {
    pub b_u: usize,
    pub b_r: usize,
    pub b_c: usize,
    pub b_s: usize,
}

impl Default for AuthorBounds {
    fn default() -> Self {
        AuthorBounds {
            b_u: 2,
            b_r: 2,
            b_c: 2,
            b_s: 1,
        }
    }
}

fn subsets_upto(items: &[String], max: usize) -> Vec<BTreeSet<String>> {
    fn go(items: &[String], from: usize, max: usize, cur: &mut Vec<String>, out: &mut Vec<BTreeSet<String>>) {
        if !cur.is_empty() {
            out.push(cur.iter().cloned().collect());
        }
        if cur.len() == max {
            return;
        }
        for i in from..items.len() {
            cur.push(items[i].clone());
            go(items, i + 1, max, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(items, 0, max, &mut Vec::new(), &mut out);
    out
}

/// Attribute expressions of one side with at most `bound` conjuncts, each
/// holding one value. The id attribute is never used.
fn expr_options(data: &AttributeData, side: Side, bound: usize, b_s: usize) -> Result<Vec<AttrExpr>> {
    let mut per_attr: Vec<(String, Vec<Conjunct>)> = Vec::new();
    for (attr, kind) in data.schema().attrs(side) {
        if attr == side.id_attr() {
            continue;
        }
        let vocab: Vec<String> = data.vocabulary(side, attr)?.into_iter().collect();
        let opts: Vec<Conjunct> = match kind {
            AttrKind::Single => vocab.iter().map(|v| Conjunct::atoms([v.as_str()])).collect(),
            AttrKind::Multi => subsets_upto(&vocab, b_s)
                .into_iter()
                .map(|s| Conjunct::Sets(BTreeSet::from([s])))
                .collect(),
        };
        if !opts.is_empty() {
            per_attr.push((attr.to_string(), opts));
        }
    }
    fn go(per_attr: &[(String, Vec<Conjunct>)], from: usize, left: usize, cur: AttrExpr, out: &mut Vec<AttrExpr>) {
        out.push(cur.clone());
        if left == 0 {
            return;
        }
        for i in from..per_attr.len() {
            for c in &per_attr[i].1 {
                go(per_attr, i + 1, left - 1, cur.clone().with(per_attr[i].0.clone(), c.clone()), out);
            }
        }
    }
    let mut out = Vec::new();
    go(&per_attr, 0, bound, AttrExpr::top(), &mut out);
    Ok(out)
}

/// Constraints with at most `bound` atomic constraints, no attribute used
/// twice on either side.
fn con_options(data: &AttributeData, bound: usize) -> Vec<BTreeSet<AtomicConstraint>> {
    let schema = data.schema();
    let mut atoms = Vec::new();
    for (ua, uk) in schema.attrs(Side::User) {
        for (ra, rk) in schema.attrs(Side::Resource) {
            if let Some(f) = AtomicConstraint::for_kinds(ua, uk, ra, rk) {
                atoms.push(f);
            }
        }
    }
    atoms.sort();
    fn go(
        atoms: &[AtomicConstraint],
        from: usize,
        left: usize,
        cur: &mut Vec<AtomicConstraint>,
        out: &mut Vec<BTreeSet<AtomicConstraint>>,
    ) {
        out.push(cur.iter().cloned().collect());
        if left == 0 {
            return;
        }
        for i in from..atoms.len() {
            let f = &atoms[i];
            if cur.iter().any(|g| g.user_attr() == f.user_attr() || g.res_attr() == f.res_attr()) {
                continue;
            }
            cur.push(f.clone());
            go(atoms, i + 1, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(&atoms, 0, bound, &mut Vec::new(), &mut out);
    out
}

/// The factors of the author space, before any pruning.
pub(crate) struct AuthorSpace {
    pub uae: Vec<AttrExpr>,
    pub rae: Vec<AttrExpr>,
    pub con: Vec<BTreeSet<AtomicConstraint>>,
}

impl AuthorSpace {
    fn unchecked(data: &AttributeData, bounds: &AuthorBounds) -> Result<Self> {
        Ok(AuthorSpace {
            uae: expr_options(data, Side::User, bounds.b_u, bounds.b_s)?,
            rae: expr_options(data, Side::Resource, bounds.b_r, bounds.b_s)?,
            con: con_options(data, bounds.b_c),
        })
    }

    fn count(&self) -> u128 {
        self.uae.len() as u128 * self.rae.len() as u128 * self.con.len() as u128
    }

    pub fn new(data: &AttributeData, bounds: &AuthorBounds, cap: usize) -> Result<Self> {
        let space = Self::unchecked(data, bounds)?;
        let count = space.count();
        if count > cap as u128 {
            return Err(Error::TooLarge { count, cap: cap as u128 });
        }
        Ok(space)
    }

    pub fn len(&self) -> usize {
        self.uae.len() * self.rae.len() * self.con.len()
    }

    pub fn author(&self, (i, j, l): (usize, usize, usize)) -> Author {
        Author {
            uae: self.uae[i].clone(),
            rae: self.rae[j].clone(),
            con: self.con[l].clone(),
        }
    }
}

/// Number of authors within `bounds`, without enumerating them.
pub fn author_space_size(data: &AttributeData, bounds: &AuthorBounds) -> Result<u128> {
    Ok(AuthorSpace::unchecked(data, bounds)?.count())
}

/// Every author within `bounds` over the data's vocabulary, ordered by user
/// expression, then resource expression, then constraint.
pub fn enumerate_authors(data: &AttributeData, bounds: &AuthorBounds, cap: usize) -> Result<Vec<Author>> {
    let space = AuthorSpace::new(data, bounds, cap)?;
    let mut out = Vec::with_capacity(space.len());
    for i in 0..space.uae.len() {
        for j in 0..space.rae.len() {
            for l in 0..space.con.len() {
                out.push(space.author((i, j, l)));
            }
        }
    }
    Ok(out)
}

/// User-resource pairs an author matches, as a bitset over `u·|R| + r`.
pub(crate) fn extension(ev: &Evaluator, a: &Author) -> Result<FixedBitSet> {
    let n_r = ev.universe().n_resources();
    let mut bits = FixedBitSet::with_capacity(ev.universe().n_users() * n_r);
    for (u, r) in ev.pairs(&a.uae, &a.rae, &a.con)? {
        bits.insert(u * n_r + r);
    }
    Ok(bits)
}

/// Authors within `bounds` that match at least one of `pairs`, one per
/// distinct set of matched user-resource pairs (the one with the smallest
/// WSC, then the earliest in enumeration order).
pub fn active_authors(
    ev: &Evaluator,
    bounds: &AuthorBounds,
    cap: usize,
    pairs: &BTreeSet<(usize, usize)>,
    w: &WscWeights,
) -> Result<Vec<Author>> {
    let space = AuthorSpace::new(ev.data(), bounds, cap)?;
    let uni = ev.universe();
    let (n_u, n_r) = (uni.n_users(), uni.n_resources());
    let mut wanted = FixedBitSet::with_capacity(n_u * n_r);
    for &(u, r) in pairs {
        wanted.insert(u * n_r + r);
    }
    let users: Vec<FixedBitSet> = space
        .uae
        .iter()
        .map(|e| ev.expr_members(Side::User, e))
        .collect::<Result<_>>()?;
    let resources: Vec<FixedBitSet> = space
        .rae
        .iter()
        .map(|e| ev.expr_members(Side::Resource, e))
        .collect::<Result<_>>()?;
    let cons = space
        .con
        .iter()
        .map(|c| {
            let mut bits = FixedBitSet::with_capacity(n_u * n_r);
            for (u, r) in ev.pairs(&AttrExpr::top(), &AttrExpr::top(), c)? {
                bits.insert(u * n_r + r);
            }
            Ok(bits)
        })
        .collect::<Result<Vec<_>>>()?;
    let wsc_u: Vec<f64> = space.uae.iter().map(|e| w.w1 * e.wsc() as f64).collect();
    let wsc_r: Vec<f64> = space.rae.iter().map(|e| w.w2 * e.wsc() as f64).collect();
    let wsc_c: Vec<f64> = space.con.iter().map(|c| w.w4 * c.len() as f64).collect();

    let mut best: HashMap<FixedBitSet, (f64, (usize, usize, usize))> = HashMap::new();
    let mut prod = FixedBitSet::with_capacity(n_u * n_r);
    for (i, us) in users.iter().enumerate() {
        for (j, rs) in resources.iter().enumerate() {
            prod.clear();
            for u in us.ones() {
                for r in rs.ones() {
                    prod.insert(u * n_r + r);
                }
            }
            if prod.is_disjoint(&wanted) {
                continue;
            }
            for (l, cs) in cons.iter().enumerate() {
                let mut ext = prod.clone();
                ext.intersect_with(cs);
                if ext.is_disjoint(&wanted) {
                    continue;
                }
                let wsc = wsc_u[i] + wsc_r[j] + wsc_c[l];
                match best.get_mut(&ext) {
                    Some(slot) => {
                        if wsc < slot.0 {
                            *slot = (wsc, (i, j, l));
                        }
                    }
                    None => {
                        best.insert(ext, (wsc, (i, j, l)));
                    }
                }
            }
        }
    }
    let mut keep: Vec<(usize, usize, usize)> = best.into_values().map(|(_, ix)| ix).collect();
    keep.sort_unstable();
    Ok(keep.into_iter().map(|ix| space.author(ix)).collect())
}
