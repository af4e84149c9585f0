//! Indexed computation of rule and policy meanings.

use std::collections::{BTreeSet, HashMap};

use fixedbitset::FixedBitSet;

use super::data::{AttrKind, AttrValue, AttributeData, Side};
use super::rule::{AtomicConstraint, AttrExpr, Conjunct, Rule};
use super::universe::{TupleSet, Universe};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
struct AttrIndex {
    kind: AttrKind,
    /// single-valued: value → entities; multi-valued: element → entities
    /// whose set contains it
    by_value: HashMap<String, FixedBitSet>,
    /// multi-valued: exact set → entities
    by_set: HashMap<BTreeSet<String>, FixedBitSet>,
    known: FixedBitSet,
}

impl AttrIndex {
    fn build(data: &AttributeData, side: Side, pos: usize, kind: AttrKind) -> Self {
        let n = data.entities(side).len();
        let mut idx = AttrIndex {
            kind,
            by_value: HashMap::new(),
            by_set: HashMap::new(),
            known: FixedBitSet::with_capacity(n),
        };
        for (i, e) in data.entities(side).iter().enumerate() {
            match &e.values()[pos] {
                AttrValue::Bottom => {}
                AttrValue::Atomic(v) => {
                    idx.known.insert(i);
                    idx.by_value
                        .entry(v.clone())
                        .or_insert_with(|| FixedBitSet::with_capacity(n))
                        .insert(i);
                }
                AttrValue::Set(s) => {
                    idx.known.insert(i);
                    for v in s {
                        idx.by_value
                            .entry(v.clone())
                            .or_insert_with(|| FixedBitSet::with_capacity(n))
                            .insert(i);
                    }
                    idx.by_set
                        .entry(s.clone())
                        .or_insert_with(|| FixedBitSet::with_capacity(n))
                        .insert(i);
                }
            }
        }
        idx
    }

    fn matching(&self, side: Side, c: &Conjunct, n: usize) -> Result<FixedBitSet> {
        let mut out = FixedBitSet::with_capacity(n);
        match (self.kind, c) {
            (AttrKind::Single, Conjunct::Atoms(vs)) => {
                for v in vs {
                    if let Some(b) = self.by_value.get(v) {
                        out.union_with(b);
                    }
                }
            }
            (AttrKind::Multi, Conjunct::Sets(alts)) if side == Side::User => {
                for alt in alts {
                    let mut acc = self.known.clone();
                    for v in alt {
                        match self.by_value.get(v) {
                            Some(b) => acc.intersect_with(b),
                            None => acc.clear(),
                        }
                    }
                    out.union_with(&acc);
                }
            }
            (AttrKind::Multi, Conjunct::Sets(alts)) => {
                for alt in alts {
                    if let Some(b) = self.by_set.get(alt) {
                        out.union_with(b);
                    }
                }
            }
            _ => return Err(Error::Schema("conjunct does not match attribute kind".into())),
        }
        Ok(out)
    }
}

/// Immutable evaluation context: attribute data, tuple universe and
/// per-attribute value indexes.
#[derive(Debug, Clone)]
pub struct Evaluator {
    data: AttributeData,
    universe: Universe,
    operations: BTreeSet<String>,
    user_index: Vec<AttrIndex>,
    res_index: Vec<AttrIndex>,
}

impl Evaluator {
    pub fn new(data: &AttributeData, operations: &BTreeSet<String>) -> Self {
        let build = |side: Side| {
            data.schema()
                .attrs(side)
                .enumerate()
                .map(|(pos, (_, kind))| AttrIndex::build(data, side, pos, kind))
                .collect()
        };
        Evaluator {
            universe: Universe::new(data, operations),
            operations: operations.clone(),
            user_index: build(Side::User),
            res_index: build(Side::Resource),
            data: data.clone(),
        }
    }

    pub fn data(&self) -> &AttributeData {
        &self.data
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn operations(&self) -> &BTreeSet<String> {
        &self.operations
    }

    fn index(&self, side: Side, attr: &str) -> Result<&AttrIndex> {
        let pos = self
            .data
            .schema()
            .position(side, attr)
            .ok_or_else(|| Error::Schema(format!("unknown {side} attribute `{attr}`")))?;
        Ok(match side {
            Side::User => &self.user_index[pos],
            Side::Resource => &self.res_index[pos],
        })
    }

    /// Entities of `side` satisfying `e`, as a bitset over entity indices.
    pub fn expr_members(&self, side: Side, e: &AttrExpr) -> Result<FixedBitSet> {
        let n = self.data.entities(side).len();
        let mut out = FixedBitSet::with_capacity(n);
        out.insert_range(..);
        for (attr, c) in e.iter() {
            let m = self.index(side, attr)?.matching(side, c, n)?;
            out.intersect_with(&m);
        }
        Ok(out)
    }

    fn compile_constraints<'c>(
        &self,
        con: impl IntoIterator<Item = &'c AtomicConstraint>,
    ) -> Result<Vec<(u8, usize, usize)>> {
        let schema = self.data.schema();
        con.into_iter()
            .map(|f| {
                f.validate(schema)?;
                let form = match f {
                    AtomicConstraint::SupersetEq { .. } => 0,
                    AtomicConstraint::Contains { .. } => 1,
                    AtomicConstraint::Equal { .. } => 2,
                };
                let up = schema.position(Side::User, f.user_attr()).expect("validated");
                let rp = schema.position(Side::Resource, f.res_attr()).expect("validated");
                Ok((form, up, rp))
            })
            .collect()
    }

    fn pair_holds(&self, compiled: &[(u8, usize, usize)], u: usize, r: usize) -> bool {
        let uvals = self.data.users()[u].values();
        let rvals = self.data.resources()[r].values();
        compiled.iter().all(|&(form, up, rp)| match (form, &uvals[up], &rvals[rp]) {
            (0, AttrValue::Set(a), AttrValue::Set(b)) => a.is_superset(b),
            (1, AttrValue::Set(a), AttrValue::Atomic(b)) => a.contains(b),
            (2, AttrValue::Atomic(a), AttrValue::Atomic(b)) => a == b,
            _ => false,
        })
    }

    /// User-resource pairs satisfying `uae`, `rae` and `con`, in
    /// lexicographic order.
    pub fn pairs<'c>(
        &self,
        uae: &AttrExpr,
        rae: &AttrExpr,
        con: impl IntoIterator<Item = &'c AtomicConstraint>,
    ) -> Result<Vec<(usize, usize)>> {
        let us = self.expr_members(Side::User, uae)?;
        let rs = self.expr_members(Side::Resource, rae)?;
        let compiled = self.compile_constraints(con)?;
        let mut out = Vec::new();
        for u in us.ones() {
            for r in rs.ones() {
                if self.pair_holds(&compiled, u, r) {
                    out.push((u, r));
                }
            }
        }
        Ok(out)
    }

    /// `⟦ρ⟧`.
    pub fn rule_meaning(&self, rule: &Rule) -> Result<TupleSet> {
        let mut ops = Vec::with_capacity(rule.ops.len());
        for op in &rule.ops {
            ops.push(
                self.universe
                    .op_index(op)
                    .ok_or_else(|| Error::Schema(format!("unknown operation `{op}`")))?,
            );
        }
        let mut out = self.universe.empty_set();
        for (u, r) in self.pairs(&rule.uae, &rule.rae, &rule.con)? {
            for &o in &ops {
                out.insert(self.universe.index(u, r, o));
            }
        }
        Ok(out)
    }

    /// `⟦π⟧`: union of the rule meanings.
    pub fn policy_meaning<'a>(&self, rules: impl IntoIterator<Item = &'a Rule>) -> Result<TupleSet> {
        let mut out = self.universe.empty_set();
        for r in rules {
            out.union_with(&self.rule_meaning(r)?);
        }
        Ok(out)
    }
}
