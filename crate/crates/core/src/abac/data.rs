//! Attribute schema and attribute data for users and resources.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};

/// Distinguished user attribute holding each user's unique id.
pub const UID: &str = "uid";
/// Distinguished resource attribute holding each resource's unique id.
pub const RID: &str = "rid";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    User,
    Resource,
}

impl Side {
    pub fn id_attr(self) -> &'static str {
        match self {
            Side::User => UID,
            Side::Resource => RID,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::User => f.write_str("user"),
            Side::Resource => f.write_str("resource"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AttrKind {
    Single,
    Multi,
}

/// Partition of user and resource attributes into single- and multi-valued.
///
/// `uid` is always a single-valued user attribute and `rid` a single-valued
/// resource attribute.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AttributeSchema {
    user: BTreeMap<String, AttrKind>,
    resource: BTreeMap<String, AttrKind>,
}

impl AttributeSchema {
    pub fn new<S: Into<String>>(
        user_single: impl IntoIterator<Item = S>,
        user_multi: impl IntoIterator<Item = S>,
        res_single: impl IntoIterator<Item = S>,
        res_multi: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let mut schema = AttributeSchema::default();
        schema.user.insert(UID.to_string(), AttrKind::Single);
        schema.resource.insert(RID.to_string(), AttrKind::Single);
        for (side, kind, names) in [
            (Side::User, AttrKind::Single, collect(user_single)),
            (Side::User, AttrKind::Multi, collect(user_multi)),
            (Side::Resource, AttrKind::Single, collect(res_single)),
            (Side::Resource, AttrKind::Multi, collect(res_multi)),
        ] {
            for name in names {
                schema.declare(side, &name, kind)?;
            }
        }
        Ok(schema)
    }

    fn declare(&mut self, side: Side, name: &str, kind: AttrKind) -> Result<()> {
        if name.is_empty() {
            return Err(Error::Schema("empty attribute name".into()));
        }
        let map = self.side_map_mut(side);
        match map.get(name) {
            Some(existing) if *existing == kind => Ok(()),
            Some(_) => Err(Error::Schema(format!(
                "{side} attribute `{name}` declared both single- and multi-valued"
            ))),
            None => {
                map.insert(name.to_string(), kind);
                Ok(())
            }
        }
    }

    fn side_map(&self, side: Side) -> &BTreeMap<String, AttrKind> {
        match side {
            Side::User => &self.user,
            Side::Resource => &self.resource,
        }
    }

    fn side_map_mut(&mut self, side: Side) -> &mut BTreeMap<String, AttrKind> {
        match side {
            Side::User => &mut self.user,
            Side::Resource => &mut self.resource,
        }
    }

    pub fn kind(&self, side: Side, attr: &str) -> Option<AttrKind> {
        self.side_map(side).get(attr).copied()
    }

    /// Attribute names of one side in canonical (sorted) order.
    pub fn names(&self, side: Side) -> impl Iterator<Item = &str> {
        self.side_map(side).keys().map(String::as_str)
    }

    pub fn attrs(&self, side: Side) -> impl Iterator<Item = (&str, AttrKind)> {
        self.side_map(side).iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn attrs_of_kind(&self, side: Side, kind: AttrKind) -> impl Iterator<Item = &str> {
        self.attrs(side)
            .filter(move |(_, k)| *k == kind)
            .map(|(n, _)| n)
    }

    pub fn len(&self, side: Side) -> usize {
        self.side_map(side).len()
    }

    pub fn is_empty(&self) -> bool {
        self.user.is_empty() && self.resource.is_empty()
    }

    /// Position of `attr` in [`AttributeSchema::names`].
    pub fn position(&self, side: Side, attr: &str) -> Option<usize> {
        self.side_map(side).keys().position(|k| k == attr)
    }

    pub fn require(&self, side: Side, attr: &str) -> Result<AttrKind> {
        self.kind(side, attr)
            .ok_or_else(|| Error::Schema(format!("unknown {side} attribute `{attr}`")))
    }
}

fn collect<S: Into<String>>(it: impl IntoIterator<Item = S>) -> Vec<String> {
    it.into_iter().map(Into::into).collect()
}

/// Value of one attribute of one entity.
///
/// Set values are canonical (sorted, deduplicated) by construction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AttrValue {
    Atomic(String),
    Set(BTreeSet<String>),
    /// Unknown value.
    Bottom,
}

impl AttrValue {
    pub fn atomic(v: impl Into<String>) -> Self {
        AttrValue::Atomic(v.into())
    }

    pub fn set<S: Into<String>>(vs: impl IntoIterator<Item = S>) -> Self {
        AttrValue::Set(vs.into_iter().map(Into::into).collect())
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, AttrValue::Bottom)
    }

    pub fn as_atomic(&self) -> Option<&str> {
        match self {
            AttrValue::Atomic(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_set(&self) -> Option<&BTreeSet<String>> {
        match self {
            AttrValue::Set(s) => Some(s),
            _ => None,
        }
    }

    fn fits(&self, kind: AttrKind) -> bool {
        matches!(
            (self, kind),
            (AttrValue::Bottom, _)
                | (AttrValue::Atomic(_), AttrKind::Single)
                | (AttrValue::Set(_), AttrKind::Multi)
        )
    }
}

/// A user or resource together with its attribute values, aligned with the
/// schema's canonical attribute order for its side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    id: String,
    values: Vec<AttrValue>,
}

impl Entity {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn values(&self) -> &[AttrValue] {
        &self.values
    }
}

/// Builder input for one entity: id plus any subset of attribute values.
/// Attributes that are not given are `Bottom`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntitySpec {
    pub id: String,
    pub attrs: BTreeMap<String, AttrValue>,
}

impl EntitySpec {
    pub fn new(id: impl Into<String>) -> Self {
        EntitySpec {
            id: id.into(),
            attrs: BTreeMap::new(),
        }
    }

    pub fn with(mut self, attr: impl Into<String>, value: AttrValue) -> Self {
        self.attrs.insert(attr.into(), value);
        self
    }

    pub fn atomic(self, attr: impl Into<String>, v: impl Into<String>) -> Self {
        self.with(attr, AttrValue::atomic(v))
    }

    pub fn set<S: Into<String>>(self, attr: impl Into<String>, vs: impl IntoIterator<Item = S>) -> Self {
        self.with(attr, AttrValue::set(vs))
    }
}

/// Users, resources and their attribute values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeData {
    schema: AttributeSchema,
    users: Vec<Entity>,
    resources: Vec<Entity>,
    user_ix: HashMap<String, usize>,
    res_ix: HashMap<String, usize>,
}

impl AttributeData {
    /// Validates and canonicalizes attribute data. Entities are sorted by id.
    pub fn new(
        schema: AttributeSchema,
        users: Vec<EntitySpec>,
        resources: Vec<EntitySpec>,
    ) -> Result<Self> {
        let users = build_entities(&schema, Side::User, users)?;
        let resources = build_entities(&schema, Side::Resource, resources)?;
        let user_ix = users
            .iter()
            .enumerate()
            .map(|(i, e)| (e.id.clone(), i))
            .collect();
        let res_ix = resources
            .iter()
            .enumerate()
            .map(|(i, e)| (e.id.clone(), i))
            .collect();
        Ok(AttributeData {
            schema,
            users,
            resources,
            user_ix,
            res_ix,
        })
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn entities(&self, side: Side) -> &[Entity] {
        match side {
            Side::User => &self.users,
            Side::Resource => &self.resources,
        }
    }

    pub fn users(&self) -> &[Entity] {
        &self.users
    }

    pub fn resources(&self) -> &[Entity] {
        &self.resources
    }

    pub fn index_of(&self, side: Side, id: &str) -> Option<usize> {
        match side {
            Side::User => self.user_ix.get(id).copied(),
            Side::Resource => self.res_ix.get(id).copied(),
        }
    }

    pub fn user_index(&self, id: &str) -> Option<usize> {
        self.user_ix.get(id).copied()
    }

    pub fn resource_index(&self, id: &str) -> Option<usize> {
        self.res_ix.get(id).copied()
    }

    /// Value of `attr` for the entity at `ix`; errors on unknown attributes.
    pub fn value(&self, side: Side, ix: usize, attr: &str) -> Result<&AttrValue> {
        let pos = self
            .schema
            .position(side, attr)
            .ok_or_else(|| Error::Schema(format!("unknown {side} attribute `{attr}`")))?;
        Ok(&self.entities(side)[ix].values[pos])
    }

    /// All atomic values that occur for `attr` (elements of sets for
    /// multi-valued attributes), sorted.
    pub fn vocabulary(&self, side: Side, attr: &str) -> Result<BTreeSet<String>> {
        let pos = self
            .schema
            .position(side, attr)
            .ok_or_else(|| Error::Schema(format!("unknown {side} attribute `{attr}`")))?;
        let mut out = BTreeSet::new();
        for e in self.entities(side) {
            match &e.values[pos] {
                AttrValue::Atomic(v) => {
                    out.insert(v.clone());
                }
                AttrValue::Set(s) => out.extend(s.iter().cloned()),
                AttrValue::Bottom => {}
            }
        }
        Ok(out)
    }

    /// Converts back into builder form (used by serializers and generators).
    pub fn to_specs(&self, side: Side) -> Vec<EntitySpec> {
        let names: Vec<&str> = self.schema.names(side).collect();
        self.entities(side)
            .iter()
            .map(|e| EntitySpec {
                id: e.id.clone(),
                attrs: names
                    .iter()
                    .zip(&e.values)
                    .filter(|(n, v)| **n != side.id_attr() && !v.is_bottom())
                    .map(|(n, v)| (n.to_string(), v.clone()))
                    .collect(),
            })
            .collect()
    }
}

fn build_entities(schema: &AttributeSchema, side: Side, specs: Vec<EntitySpec>) -> Result<Vec<Entity>> {
    let names: Vec<(&str, AttrKind)> = schema.attrs(side).collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(specs.len());
    for spec in specs {
        if spec.id.is_empty() {
            return Err(Error::Data(format!("{side} with empty id")));
        }
        if !seen.insert(spec.id.clone()) {
            return Err(Error::Data(format!("duplicate {side} id `{}`", spec.id)));
        }
        for (attr, value) in &spec.attrs {
            let kind = schema.require(side, attr)?;
            if attr == side.id_attr() {
                if value.as_atomic() != Some(spec.id.as_str()) {
                    return Err(Error::Data(format!(
                        "{side} `{}`: `{attr}` must equal the entity id",
                        spec.id
                    )));
                }
            } else if !value.fits(kind) {
                return Err(Error::Schema(format!(
                    "{side} `{}`: value of `{attr}` does not match its kind",
                    spec.id
                )));
            }
        }
        let values = names
            .iter()
            .map(|(n, _)| {
                if *n == side.id_attr() {
                    AttrValue::Atomic(spec.id.clone())
                } else {
                    spec.attrs.get(*n).cloned().unwrap_or(AttrValue::Bottom)
                }
            })
            .collect();
        out.push(Entity { id: spec.id, values });
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_adds_id_attributes() {
        let s = AttributeSchema::new(["dept"], [], ["type"], []).unwrap();
        assert_eq!(s.kind(Side::User, UID), Some(AttrKind::Single));
        assert_eq!(s.kind(Side::Resource, RID), Some(AttrKind::Single));
        assert_eq!(s.names(Side::User).collect::<Vec<_>>(), vec!["dept", "uid"]);
    }

    #[test]
    fn schema_rejects_kind_conflict() {
        let e = AttributeSchema::new(["a"], ["a"], Vec::<&str>::new(), []).unwrap_err();
        assert!(matches!(e, Error::Schema(_)));
    }

    #[test]
    fn missing_attributes_are_bottom() {
        let s = AttributeSchema::new(["dept", "pos"], [], Vec::<&str>::new(), []).unwrap();
        let d = AttributeData::new(s, vec![EntitySpec::new("u1").atomic("dept", "cs")], vec![]).unwrap();
        assert_eq!(d.value(Side::User, 0, "pos").unwrap(), &AttrValue::Bottom);
        assert_eq!(d.value(Side::User, 0, UID).unwrap(), &AttrValue::atomic("u1"));
    }

    #[test]
    fn rejects_duplicates_and_kind_mismatch() {
        let s = AttributeSchema::new(["dept"], ["crs"], Vec::<&str>::new(), []).unwrap();
        let dup = AttributeData::new(
            s.clone(),
            vec![EntitySpec::new("u"), EntitySpec::new("u")],
            vec![],
        );
        assert!(matches!(dup, Err(Error::Data(_))));
        let bad = AttributeData::new(s, vec![EntitySpec::new("u").atomic("crs", "x")], vec![]);
        assert!(matches!(bad, Err(Error::Schema(_))));
    }

    #[test]
    fn entities_sorted_and_indexed() {
        let s = AttributeSchema::new(Vec::<&str>::new(), [], [], []).unwrap();
        let d = AttributeData::new(s, vec![EntitySpec::new("b"), EntitySpec::new("a")], vec![]).unwrap();
        assert_eq!(d.users()[0].id(), "a");
        assert_eq!(d.user_index("b"), Some(1));
    }
}
