//! JSON attribute-data files.
//!
//! ```json
//! {
//!   "schema": {"user": {"single": ["dept"], "multi": ["crsTaught"]},
//!              "resource": {"single": ["dept", "crs"], "multi": []}},
//!   "operations": ["addScore", "readScore"],
//!   "users": [{"id": "csFac2", "attrs": {"dept": "cs", "crsTaught": ["cs601"]}}],
//!   "resources": [{"id": "cs601gradebook", "attrs": {"dept": "cs", "crs": "cs601"}}]
//! }
//! ```
//!
//! A string is an atomic value, an array of strings a set, and `null` or an
//! absent attribute is ⊥.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::abac::{AttrKind, AttrValue, AttributeData, AttributeSchema, EntitySpec, Side};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SideSchema {
    #[serde(default)]
    single: Vec<String>,
    #[serde(default)]
    multi: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaFile {
    user: SideSchema,
    resource: SideSchema,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntityFile {
    id: String,
    #[serde(default)]
    attrs: BTreeMap<String, Value>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DataFile {
    schema: SchemaFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    operations: Option<Vec<String>>,
    users: Vec<EntityFile>,
    resources: Vec<EntityFile>,
}

/// Attribute data plus the operation set, if the file declares one.
#[derive(Debug, Clone, PartialEq)]
pub struct DataText {
    pub data: AttributeData,
    pub operations: Option<BTreeSet<String>>,
}

fn to_value(side: Side, id: &str, attr: &str, kind: AttrKind, v: &Value) -> Result<AttrValue> {
    let bad = |what: &str| Error::Data(format!("{side} `{id}`: attribute `{attr}` {what}"));
    match (kind, v) {
        (_, Value::Null) => Ok(AttrValue::Bottom),
        (AttrKind::Single, Value::String(s)) => Ok(AttrValue::atomic(s.clone())),
        (AttrKind::Multi, Value::Array(items)) => {
            let mut set = BTreeSet::new();
            for item in items {
                match item {
                    Value::String(s) => {
                        set.insert(s.clone());
                    }
                    _ => return Err(bad("must list strings")),
                }
            }
            Ok(AttrValue::Set(set))
        }
        (AttrKind::Single, _) => Err(bad("is single-valued and needs a string")),
        (AttrKind::Multi, _) => Err(bad("is multi-valued and needs an array")),
    }
}

fn specs(schema: &AttributeSchema, side: Side, entities: Vec<EntityFile>) -> Result<Vec<EntitySpec>> {
    entities
        .into_iter()
        .map(|e| {
            let mut spec = EntitySpec::new(e.id.clone());
            for (attr, v) in &e.attrs {
                let kind = schema.require(side, attr)?;
                spec = spec.with(attr.clone(), to_value(side, &e.id, attr, kind, v)?);
            }
            Ok(spec)
        })
        .collect()
}

pub fn parse_data(src: &str) -> Result<DataText> {
    let file: DataFile = serde_json::from_str(src)?;
    let schema = AttributeSchema::new(
        file.schema.user.single,
        file.schema.user.multi,
        file.schema.resource.single,
        file.schema.resource.multi,
    )?;
    let users = specs(&schema, Side::User, file.users)?;
    let resources = specs(&schema, Side::Resource, file.resources)?;
    let operations = file.operations.map(|o| o.into_iter().collect());
    Ok(DataText {
        data: AttributeData::new(schema, users, resources)?,
        operations,
    })
}

fn side_schema(schema: &AttributeSchema, side: Side) -> SideSchema {
    let names = |kind| {
        schema
            .attrs_of_kind(side, kind)
            .filter(|a| *a != side.id_attr())
            .map(str::to_string)
            .collect()
    };
    SideSchema {
        single: names(AttrKind::Single),
        multi: names(AttrKind::Multi),
    }
}

fn entity_files(data: &AttributeData, side: Side) -> Vec<EntityFile> {
    data.to_specs(side)
        .into_iter()
        .map(|spec| EntityFile {
            id: spec.id.clone(),
            attrs: spec
                .attrs
                .iter()
                .map(|(a, v)| {
                    let j = match v {
                        AttrValue::Atomic(s) => Value::String(s.clone()),
                        AttrValue::Set(s) => Value::Array(s.iter().cloned().map(Value::String).collect()),
                        AttrValue::Bottom => Value::Null,
                    };
                    (a.to_string(), j)
                })
                .collect(),
        })
        .collect()
}

/// Pretty-printed JSON in canonical order. ⊥ values are omitted.
pub fn print_data(data: &AttributeData, operations: Option<&BTreeSet<String>>) -> String {
    let file = DataFile {
        schema: SchemaFile {
            user: side_schema(data.schema(), Side::User),
            resource: side_schema(data.schema(), Side::Resource),
        },
        operations: operations.map(|o| o.iter().cloned().collect()),
        users: entity_files(data, Side::User),
        resources: entity_files(data, Side::Resource),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("serializable");
    s.push('\n');
    s
}
