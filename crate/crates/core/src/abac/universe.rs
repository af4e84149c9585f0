//! The tuple universe `U × R × Op` and dense sets over it.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use fixedbitset::FixedBitSet;

use super::data::AttributeData;
use crate::error::{Error, Result};

/// A user-permission tuple `⟨user, resource, op⟩`, by name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UpTuple {
    pub user: String,
    pub resource: String,
    pub op: String,
}

impl UpTuple {
    pub fn new(user: impl Into<String>, resource: impl Into<String>, op: impl Into<String>) -> Self {
        UpTuple {
            user: user.into(),
            resource: resource.into(),
            op: op.into(),
        }
    }
}

impl fmt::Display for UpTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, {}, {}>", self.user, self.resource, self.op)
    }
}

/// Dense indexing of `U × R × Op`. Index of `(u, r, o)` is
/// `(u * |R| + r) * |Op| + o`, so iteration order is lexicographic by
/// (user index, resource index, op index).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Universe {
    users: Vec<String>,
    resources: Vec<String>,
    ops: Vec<String>,
    user_ix: HashMap<String, usize>,
    res_ix: HashMap<String, usize>,
    op_ix: HashMap<String, usize>,
}

impl Universe {
    pub fn new(data: &AttributeData, operations: &BTreeSet<String>) -> Self {
        let users: Vec<String> = data.users().iter().map(|e| e.id().to_string()).collect();
        let resources: Vec<String> = data.resources().iter().map(|e| e.id().to_string()).collect();
        let ops: Vec<String> = operations.iter().cloned().collect();
        let ix = |v: &[String]| v.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Universe {
            user_ix: ix(&users),
            res_ix: ix(&resources),
            op_ix: ix(&ops),
            users,
            resources,
            ops,
        }
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_resources(&self) -> usize {
        self.resources.len()
    }

    pub fn n_ops(&self) -> usize {
        self.ops.len()
    }

    pub fn len(&self) -> usize {
        self.users.len() * self.resources.len() * self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn resources(&self) -> &[String] {
        &self.resources
    }

    pub fn ops(&self) -> &[String] {
        &self.ops
    }

    pub fn op_index(&self, op: &str) -> Option<usize> {
        self.op_ix.get(op).copied()
    }

    #[inline]
    pub fn index(&self, u: usize, r: usize, o: usize) -> usize {
        (u * self.resources.len() + r) * self.ops.len() + o
    }

    #[inline]
    pub fn decode(&self, i: usize) -> (usize, usize, usize) {
        let no = self.ops.len();
        let nr = self.resources.len();
        (i / (nr * no), (i / no) % nr, i % no)
    }

    pub fn index_of(&self, t: &UpTuple) -> Result<usize> {
        let u = self
            .user_ix
            .get(&t.user)
            .ok_or_else(|| Error::Data(format!("unknown user `{}`", t.user)))?;
        let r = self
            .res_ix
            .get(&t.resource)
            .ok_or_else(|| Error::Data(format!("unknown resource `{}`", t.resource)))?;
        let o = self
            .op_ix
            .get(&t.op)
            .ok_or_else(|| Error::Data(format!("unknown operation `{}`", t.op)))?;
        Ok(self.index(*u, *r, *o))
    }

    pub fn tuple(&self, i: usize) -> UpTuple {
        let (u, r, o) = self.decode(i);
        UpTuple::new(&self.users[u], &self.resources[r], &self.ops[o])
    }

    pub fn empty_set(&self) -> TupleSet {
        TupleSet::with_capacity(self.len())
    }

    pub fn full_set(&self) -> TupleSet {
        let mut s = self.empty_set();
        s.bits.insert_range(..);
        s
    }

    /// Converts named tuples into a dense set; unknown names are errors.
    pub fn set_of<'a>(&self, tuples: impl IntoIterator<Item = &'a UpTuple>) -> Result<TupleSet> {
        let mut s = self.empty_set();
        for t in tuples {
            s.insert(self.index_of(t)?);
        }
        Ok(s)
    }

    pub fn named(&self, s: &TupleSet) -> BTreeSet<UpTuple> {
        s.iter().map(|i| self.tuple(i)).collect()
    }
}

/// A set of tuple indices of one [`Universe`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TupleSet {
    bits: FixedBitSet,
}

impl TupleSet {
    pub fn with_capacity(n: usize) -> Self {
        TupleSet {
            bits: FixedBitSet::with_capacity(n),
        }
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        self.bits.insert(i);
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.bits.contains(i)
    }

    pub fn remove(&mut self, i: usize) {
        self.bits.set(i, false);
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn union_with(&mut self, other: &TupleSet) {
        self.bits.union_with(&other.bits);
    }

    pub fn intersect_with(&mut self, other: &TupleSet) {
        self.bits.intersect_with(&other.bits);
    }

    pub fn difference_with(&mut self, other: &TupleSet) {
        self.bits.difference_with(&other.bits);
    }

    pub fn union(&self, other: &TupleSet) -> TupleSet {
        let mut s = self.clone();
        s.union_with(other);
        s
    }

    pub fn intersection(&self, other: &TupleSet) -> TupleSet {
        let mut s = self.clone();
        s.intersect_with(other);
        s
    }

    pub fn difference(&self, other: &TupleSet) -> TupleSet {
        let mut s = self.clone();
        s.difference_with(other);
        s
    }

    pub fn intersection_count(&self, other: &TupleSet) -> usize {
        self.bits.intersection_count(&other.bits)
    }

    /// `|self ∖ other|`.
    pub fn difference_count(&self, other: &TupleSet) -> usize {
        self.bits.difference_count(&other.bits)
    }

    pub fn union_count(&self, other: &TupleSet) -> usize {
        self.bits.union_count(&other.bits)
    }

    pub fn is_subset(&self, other: &TupleSet) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn is_disjoint(&self, other: &TupleSet) -> bool {
        self.bits.is_disjoint(&other.bits)
    }
}
