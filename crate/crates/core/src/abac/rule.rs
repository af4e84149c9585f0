//! Attribute expressions, constraints, rules and their weighted structural
//! complexity.

use std::collections::{BTreeMap, BTreeSet};

use super::data::{AttrKind, AttributeSchema, Side};
use crate::error::{Error, Result};

/// Value set of one conjunct. Single-valued attributes list atomic values,
/// multi-valued attributes list sets of atomic values.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Conjunct {
    Atoms(BTreeSet<String>),
    Sets(BTreeSet<BTreeSet<String>>),
}

impl Conjunct {
    pub fn atoms<S: Into<String>>(vs: impl IntoIterator<Item = S>) -> Self {
        Conjunct::Atoms(vs.into_iter().map(Into::into).collect())
    }

    pub fn sets<S: Into<String>, I: IntoIterator<Item = S>>(vs: impl IntoIterator<Item = I>) -> Self {
        Conjunct::Sets(
            vs.into_iter()
                .map(|s| s.into_iter().map(Into::into).collect())
                .collect(),
        )
    }

    /// Number of atomic values appearing in the conjunct.
    pub fn wsc(&self) -> usize {
        match self {
            Conjunct::Atoms(s) => s.len(),
            Conjunct::Sets(s) => s.iter().map(BTreeSet::len).sum(),
        }
    }

    /// Number of listed alternatives.
    pub fn len(&self) -> usize {
        match self {
            Conjunct::Atoms(s) => s.len(),
            Conjunct::Sets(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> AttrKind {
        match self {
            Conjunct::Atoms(_) => AttrKind::Single,
            Conjunct::Sets(_) => AttrKind::Multi,
        }
    }

    /// Union of two conjuncts of the same kind.
    pub fn union(&self, other: &Conjunct) -> Option<Conjunct> {
        match (self, other) {
            (Conjunct::Atoms(a), Conjunct::Atoms(b)) => Some(Conjunct::Atoms(a.union(b).cloned().collect())),
            (Conjunct::Sets(a), Conjunct::Sets(b)) => Some(Conjunct::Sets(a.union(b).cloned().collect())),
            _ => None,
        }
    }

    pub fn is_superset(&self, other: &Conjunct) -> bool {
        match (self, other) {
            (Conjunct::Atoms(a), Conjunct::Atoms(b)) => a.is_superset(b),
            (Conjunct::Sets(a), Conjunct::Sets(b)) => a.is_superset(b),
            _ => false,
        }
    }

    /// Removes every listed set that is a strict superset of another listed
    /// set. Returns whether anything was removed. No-op for atoms.
    pub fn elim_redundant_sets(&mut self) -> bool {
        let Conjunct::Sets(sets) = self else {
            return false;
        };
        let redundant: Vec<BTreeSet<String>> = sets
            .iter()
            .filter(|s| sets.iter().any(|t| t != *s && s.is_superset(t)))
            .cloned()
            .collect();
        for s in &redundant {
            sets.remove(s);
        }
        !redundant.is_empty()
    }
}

/// A conjunction over the attributes of one side. Attributes that are absent
/// are unconstrained (⊤).
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttrExpr {
    conjuncts: BTreeMap<String, Conjunct>,
}

impl AttrExpr {
    /// The all-⊤ expression.
    pub fn top() -> Self {
        AttrExpr::default()
    }

    pub fn with(mut self, attr: impl Into<String>, c: Conjunct) -> Self {
        self.set(attr, c);
        self
    }

    pub fn set(&mut self, attr: impl Into<String>, c: Conjunct) {
        self.conjuncts.insert(attr.into(), c);
    }

    /// Maps `attr` to ⊤; returns the removed conjunct.
    pub fn remove(&mut self, attr: &str) -> Option<Conjunct> {
        self.conjuncts.remove(attr)
    }

    pub fn without(&self, attr: &str) -> Self {
        let mut e = self.clone();
        e.remove(attr);
        e
    }

    pub fn get(&self, attr: &str) -> Option<&Conjunct> {
        self.conjuncts.get(attr)
    }

    pub fn get_mut(&mut self, attr: &str) -> Option<&mut Conjunct> {
        self.conjuncts.get_mut(attr)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Conjunct)> {
        self.conjuncts.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Attributes used by the expression (those not mapped to ⊤).
    pub fn attrs(&self) -> impl Iterator<Item = &str> {
        self.conjuncts.keys().map(String::as_str)
    }

    pub fn uses(&self, attr: &str) -> bool {
        self.conjuncts.contains_key(attr)
    }

    pub fn is_top(&self) -> bool {
        self.conjuncts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.conjuncts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conjuncts.is_empty()
    }

    pub fn wsc(&self) -> usize {
        self.conjuncts.values().map(Conjunct::wsc).sum()
    }

    /// Size (WSC) of the largest conjunct, 0 for the all-⊤ expression.
    pub fn max_conjunct_size(&self) -> usize {
        self.conjuncts.values().map(Conjunct::wsc).max().unwrap_or(0)
    }

    /// Attribute-wise union; ⊤ on either side yields ⊤.
    pub fn union(&self, other: &AttrExpr) -> AttrExpr {
        let conjuncts = self
            .conjuncts
            .iter()
            .filter_map(|(a, c)| {
                let d = other.conjuncts.get(a)?;
                c.union(d).map(|u| (a.clone(), u))
            })
            .collect();
        AttrExpr { conjuncts }
    }

    /// Applies [`Conjunct::elim_redundant_sets`] to every conjunct.
    pub fn elim_redundant_sets(&mut self) -> bool {
        let mut changed = false;
        for c in self.conjuncts.values_mut() {
            changed |= c.elim_redundant_sets();
        }
        changed
    }

    pub fn validate(&self, schema: &AttributeSchema, side: Side) -> Result<()> {
        for (attr, c) in &self.conjuncts {
            let kind = schema.require(side, attr)?;
            if kind != c.kind() {
                return Err(Error::Schema(format!(
                    "conjunct for {side} attribute `{attr}` does not match its kind"
                )));
            }
            if c.is_empty() {
                return Err(Error::Schema(format!("empty conjunct for {side} attribute `{attr}`")));
            }
        }
        Ok(())
    }
}

/// Relation between one user attribute and one resource attribute.
///
/// The derived order (form, then user attribute, then resource attribute) is
/// the canonical order used everywhere constraints are enumerated.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AtomicConstraint {
    /// Multi-valued user attribute ⊇ multi-valued resource attribute.
    SupersetEq { user: String, res: String },
    /// Multi-valued user attribute ∋ single-valued resource attribute.
    Contains { user: String, res: String },
    /// Single-valued user attribute = single-valued resource attribute.
    Equal { user: String, res: String },
}

impl AtomicConstraint {
    pub fn superset_eq(user: impl Into<String>, res: impl Into<String>) -> Self {
        AtomicConstraint::SupersetEq {
            user: user.into(),
            res: res.into(),
        }
    }

    pub fn contains(user: impl Into<String>, res: impl Into<String>) -> Self {
        AtomicConstraint::Contains {
            user: user.into(),
            res: res.into(),
        }
    }

    pub fn equal(user: impl Into<String>, res: impl Into<String>) -> Self {
        AtomicConstraint::Equal {
            user: user.into(),
            res: res.into(),
        }
    }

    pub fn user_attr(&self) -> &str {
        match self {
            AtomicConstraint::SupersetEq { user, .. }
            | AtomicConstraint::Contains { user, .. }
            | AtomicConstraint::Equal { user, .. } => user,
        }
    }

    pub fn res_attr(&self) -> &str {
        match self {
            AtomicConstraint::SupersetEq { res, .. }
            | AtomicConstraint::Contains { res, .. }
            | AtomicConstraint::Equal { res, .. } => res,
        }
    }

    /// Attribute kinds (user, resource) required by the constraint form.
    pub fn kinds(&self) -> (AttrKind, AttrKind) {
        match self {
            AtomicConstraint::SupersetEq { .. } => (AttrKind::Multi, AttrKind::Multi),
            AtomicConstraint::Contains { .. } => (AttrKind::Multi, AttrKind::Single),
            AtomicConstraint::Equal { .. } => (AttrKind::Single, AttrKind::Single),
        }
    }

    /// The well-typed form relating `user` and `res`, if any.
    pub fn for_kinds(user: &str, uk: AttrKind, res: &str, rk: AttrKind) -> Option<Self> {
        match (uk, rk) {
            (AttrKind::Multi, AttrKind::Multi) => Some(AtomicConstraint::superset_eq(user, res)),
            (AttrKind::Multi, AttrKind::Single) => Some(AtomicConstraint::contains(user, res)),
            (AttrKind::Single, AttrKind::Single) => Some(AtomicConstraint::equal(user, res)),
            (AttrKind::Single, AttrKind::Multi) => None,
        }
    }

    pub fn validate(&self, schema: &AttributeSchema) -> Result<()> {
        let uk = schema.require(Side::User, self.user_attr())?;
        let rk = schema.require(Side::Resource, self.res_attr())?;
        if (uk, rk) != self.kinds() {
            return Err(Error::Schema(format!(
                "constraint on `{}` and `{}` does not match attribute kinds",
                self.user_attr(),
                self.res_attr()
            )));
        }
        Ok(())
    }
}

/// Non-negative weights for the uae, rae, operation-set and constraint parts
/// of a rule's weighted structural complexity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WscWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
}

impl Default for WscWeights {
    fn default() -> Self {
        WscWeights {
            w1: 1.0,
            w2: 1.0,
            w3: 1.0,
            w4: 1.0,
        }
    }
}

impl WscWeights {
    pub fn validate(&self) -> Result<()> {
        if [self.w1, self.w2, self.w3, self.w4]
            .iter()
            .any(|w| !w.is_finite() || *w < 0.0)
        {
            return Err(Error::Config("WSC weights must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// `⟨uae, rae, ops, con⟩`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    pub uae: AttrExpr,
    pub rae: AttrExpr,
    pub ops: BTreeSet<String>,
    pub con: BTreeSet<AtomicConstraint>,
}

impl Rule {
    pub fn new<S: Into<String>>(
        uae: AttrExpr,
        rae: AttrExpr,
        ops: impl IntoIterator<Item = S>,
        con: impl IntoIterator<Item = AtomicConstraint>,
    ) -> Self {
        Rule {
            uae,
            rae,
            ops: ops.into_iter().map(Into::into).collect(),
            con: con.into_iter().collect(),
        }
    }

    pub fn expr(&self, side: Side) -> &AttrExpr {
        match side {
            Side::User => &self.uae,
            Side::Resource => &self.rae,
        }
    }

    pub fn expr_mut(&mut self, side: Side) -> &mut AttrExpr {
        match side {
            Side::User => &mut self.uae,
            Side::Resource => &mut self.rae,
        }
    }

    pub fn wsc(&self, w: &WscWeights) -> f64 {
        w.w1 * self.uae.wsc() as f64
            + w.w2 * self.rae.wsc() as f64
            + w.w3 * self.ops.len() as f64
            + w.w4 * self.con.len() as f64
    }

    /// Checks the rule against a schema and operation universe.
    pub fn validate(&self, schema: &AttributeSchema, operations: &BTreeSet<String>) -> Result<()> {
        if self.ops.is_empty() {
            return Err(Error::Schema("rule with empty operation set".into()));
        }
        if let Some(op) = self.ops.iter().find(|o| !operations.contains(*o)) {
            return Err(Error::Schema(format!("unknown operation `{op}`")));
        }
        self.uae.validate(schema, Side::User)?;
        self.rae.validate(schema, Side::Resource)?;
        for c in &self.con {
            c.validate(schema)?;
        }
        Ok(())
    }
}

/// WSC of a rule set: the sum over its members.
pub fn rules_wsc<'a>(rules: impl IntoIterator<Item = &'a Rule>, w: &WscWeights) -> f64 {
    rules.into_iter().map(|r| r.wsc(w)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e1() -> AttrExpr {
        AttrExpr::top()
            .with("dept", Conjunct::atoms(["CS"]))
            .with("position", Conjunct::atoms(["grad", "ugrad"]))
            .with("courses", Conjunct::sets([["CS101", "CS102"]]))
    }

    #[test]
    fn wsc_counts_atomic_values() {
        assert_eq!(e1().wsc(), 5);
        assert_eq!(rules_wsc(&[], &WscWeights::default()), 0.0);
    }

    #[test]
    fn wsc_of_rule_is_weighted_sum() {
        let r = Rule::new(
            AttrExpr::top().with("position", Conjunct::atoms(["faculty", "student"])),
            AttrExpr::top().with("type", Conjunct::atoms(["gradebook"])),
            ["addScore"],
            [AtomicConstraint::equal("dept", "dept"), AtomicConstraint::contains("crsTaught", "crs")],
        );
        assert_eq!(r.wsc(&WscWeights::default()), 6.0);
        let w = WscWeights { w1: 2.0, w2: 0.5, w3: 1.0, w4: 0.0 };
        assert_eq!(r.wsc(&w), 4.0 + 0.5 + 1.0);
    }

    #[test]
    fn elim_redundant_sets_drops_supersets() {
        let mut c = Conjunct::sets([vec!["a"], vec!["a", "b"]]);
        assert!(c.elim_redundant_sets());
        assert_eq!(c, Conjunct::sets([["a"]]));
        let mut d = Conjunct::sets([vec!["a"], vec!["b"]]);
        assert!(!d.elim_redundant_sets());
    }

    #[test]
    fn union_with_top_is_top() {
        let a = AttrExpr::top().with("x", Conjunct::atoms(["1"])).with("y", Conjunct::atoms(["1"]));
        let b = AttrExpr::top().with("x", Conjunct::atoms(["2"]));
        let u = a.union(&b);
        assert_eq!(u.get("x"), Some(&Conjunct::atoms(["1", "2"])));
        assert!(!u.uses("y"));
    }

    #[test]
    fn constraint_order_is_form_then_names() {
        let mut v = [
            AtomicConstraint::equal("dept", "dept"),
            AtomicConstraint::contains("crsTaught", "crs"),
            AtomicConstraint::superset_eq("b", "a"),
        ];
        v.sort();
        assert!(matches!(v[0], AtomicConstraint::SupersetEq { .. }));
        assert!(matches!(v[2], AtomicConstraint::Equal { .. }));
    }

    #[test]
    fn validate_rejects_bad_rules() {
        let schema = AttributeSchema::new(["dept"], ["crsTaught"], ["dept", "crs"], []).unwrap();
        let ops: BTreeSet<String> = ["read".to_string()].into();
        let empty_ops = Rule::new::<String>(AttrExpr::top(), AttrExpr::top(), [], []);
        assert!(empty_ops.validate(&schema, &ops).is_err());
        let bad_kind = Rule::new(AttrExpr::top(), AttrExpr::top(), ["read"], [AtomicConstraint::equal("crsTaught", "crs")]);
        assert!(bad_kind.validate(&schema, &ops).is_err());
        let unknown = Rule::new(AttrExpr::top().with("nope", Conjunct::atoms(["x"])), AttrExpr::top(), ["read"], []);
        assert!(unknown.validate(&schema, &ops).is_err());
        let ok = Rule::new(AttrExpr::top(), AttrExpr::top(), ["read"], [AtomicConstraint::contains("crsTaught", "crs")]);
        assert!(ok.validate(&schema, &ops).is_ok());
    }
}
