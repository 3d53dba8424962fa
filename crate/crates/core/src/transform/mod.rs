//! Conversion between concrete instances of an NDF type and the generic
//! model.
//!
//! A concrete instance of `Room { String roomName; }` becomes a category
//! named `room` holding an entry `roomName`. A nested type `Building { Room
//! {..} }` becomes a child category `room` of `building` that collects the
//! nested instances, one child category per instance named by its position
//! (`0`, `1`, ...).

mod document;

use std::collections::BTreeMap;

use nim_ndf::TypeDef;

use crate::error::{Error, Result};
use crate::metamodel::{AccessPolicy, Category, Component, Entry, InstanceId, Scalar, TimedValue, ValueRange};
use crate::time::Timestamp;

pub use document::{decode_document, decode_scalar, encode_document, encode_instances, encode_scalar};

/// Name of the generic category for a type: the simple name, lowercased.
pub fn category_name(def: &TypeDef) -> String {
    def.name.to_lowercase()
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldValue {
    Scalar(Scalar),
    Nested(Vec<ConcreteInstance>),
}

/// Per-entry metadata supplied at ingest.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EntryMeta {
    pub unit: String,
    pub range: Option<ValueRange>,
    pub policy: AccessPolicy,
}

impl EntryMeta {
    fn of(entry: &Entry) -> Self {
        Self {
            unit: entry.unit.clone(),
            range: entry.range,
            policy: entry.policy.clone(),
        }
    }

    pub fn is_default(&self) -> bool {
        *self == Self::default()
    }
}

/// An instance in the concrete format of one NDF type. Scalar fields may be
/// absent; every nested type has a (possibly empty) list.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcreteInstance {
    pub type_name: String,
    pub fields: BTreeMap<String, FieldValue>,
    pub instance_id: Option<InstanceId>,
    pub meta: BTreeMap<String, EntryMeta>,
}

impl ConcreteInstance {
    pub fn new(type_name: impl Into<String>) -> Self {
        Self {
            type_name: type_name.into(),
            fields: BTreeMap::new(),
            instance_id: None,
            meta: BTreeMap::new(),
        }
    }

    pub fn with(mut self, field: impl Into<String>, value: Scalar) -> Self {
        self.fields.insert(field.into(), FieldValue::Scalar(value));
        self
    }

    pub fn scalar(&self, field: &str) -> Option<&Scalar> {
        match self.fields.get(field) {
            Some(FieldValue::Scalar(s)) => Some(s),
            _ => None,
        }
    }

    pub fn nested(&self, type_name: &str) -> &[ConcreteInstance] {
        match self.fields.get(type_name) {
            Some(FieldValue::Nested(v)) => v,
            _ => &[],
        }
    }

    /// Pre-order walk over this instance and all nested instances.
    pub fn walk(&self, visit: &mut impl FnMut(&ConcreteInstance)) {
        visit(self);
        for v in self.fields.values() {
            if let FieldValue::Nested(list) = v {
                for n in list {
                    n.walk(visit);
                }
            }
        }
    }
}

fn schema_error(def: &TypeDef, message: impl Into<String>) -> Error {
    Error::Schema {
        type_name: def.qualified_name.clone(),
        message: message.into(),
    }
}

/// Checks that `instance` fits `def`, nested instances included.
pub fn validate_instance(def: &TypeDef, instance: &ConcreteInstance) -> Result<()> {
    if instance.type_name != def.qualified_name {
        return Err(schema_error(
            def,
            format!("instance is of type `{}`", instance.type_name),
        ));
    }
    for (key, value) in &instance.fields {
        match (def.field(key), def.nested(key), value) {
            (Some(f), _, FieldValue::Scalar(s)) => {
                s.expect_kind(f.field_type.into())
                    .map_err(|e| schema_error(def, format!("field `{key}`: {e}")))?;
            }
            (None, Some(n), FieldValue::Nested(list)) => {
                for item in list {
                    validate_instance(n, item)?;
                }
            }
            (Some(_), _, FieldValue::Nested(_)) => {
                return Err(schema_error(def, format!("field `{key}` holds a scalar, not a list")));
            }
            (None, Some(_), FieldValue::Scalar(_)) => {
                return Err(schema_error(def, format!("`{key}` is a nested type, not a scalar")));
            }
            (None, None, _) => return Err(schema_error(def, format!("unknown field `{key}`"))),
        }
    }
    for (key, meta) in &instance.meta {
        let Some(f) = def.field(key) else {
            return Err(schema_error(def, format!("metadata for unknown field `{key}`")));
        };
        if meta.range.is_some() && f.field_type != nim_ndf::FieldType::Number {
            return Err(schema_error(def, format!("range on non-numeric field `{key}`")));
        }
    }
    Ok(())
}

/// Time and sequence number stamped on every value created by a conversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestStamp {
    pub time: Timestamp,
    pub seq: u64,
}

/// Concrete → generic. Every field becomes an entry named exactly like the
/// field, holding one value at `stamp.time` when the field is present.
pub fn to_generic(def: &TypeDef, instance: &ConcreteInstance, stamp: IngestStamp) -> Result<Category> {
    validate_instance(def, instance)?;
    Ok(convert(def, instance, stamp))
}

fn convert(def: &TypeDef, instance: &ConcreteInstance, stamp: IngestStamp) -> Category {
    let mut cat = Category::new(category_name(def));
    cat.instance_id = instance.instance_id.clone();
    cat.source_type = def.qualified_name.clone();
    for field in &def.fields {
        let meta = instance.meta.get(&field.name).cloned().unwrap_or_default();
        let mut entry = Entry::new(&field.name, field.field_type.into());
        entry.unit = meta.unit;
        entry.range = meta.range;
        if let Some(value) = instance.scalar(&field.name) {
            entry.values.push(TimedValue {
                value: value.clone(),
                timestamp: stamp.time,
                expiry: meta.policy.default_expiry.map(|d| stamp.time.saturating_add(d)),
                ingest_seq: stamp.seq,
            });
        }
        entry.policy = meta.policy;
        cat.children.push(Component::Entry(entry));
    }
    for nested in &def.nested_types {
        let mut collection = Category::new(category_name(nested));
        for (i, item) in instance.nested(&nested.name).iter().enumerate() {
            let mut child = convert(nested, item, stamp);
            child.name = i.to_string();
            collection.children.push(Component::Category(child));
        }
        cat.children.push(Component::Category(collection));
    }
    cat
}

/// What [`from_generic`] does when an entry or nested collection is missing
/// from the category, e.g. because access control omitted it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissingEntries {
    Error,
    Omit,
}

/// Generic → concrete for a category produced from the same type. Fields
/// take the entry's current value at `at`; fields without one are absent.
pub fn from_generic(
    def: &TypeDef,
    category: &Category,
    at: Timestamp,
    missing: MissingEntries,
) -> Result<ConcreteInstance> {
    if category.source_type != def.qualified_name {
        return Err(Error::SourceTypeMismatch {
            expected: def.qualified_name.clone(),
            found: category.source_type.clone(),
        });
    }
    let missing_error =
        |name: &str| Error::MalformedTree(format!("category `{}` has no component `{name}`", category.name));
    let mut out = ConcreteInstance::new(&def.qualified_name);
    out.instance_id = category.instance_id.clone();
    for field in &def.fields {
        let Some(entry) = category.entry(&field.name) else {
            match missing {
                MissingEntries::Error => return Err(missing_error(&field.name)),
                MissingEntries::Omit => continue,
            }
        };
        if let Some(v) = entry.current_value(at) {
            out.fields
                .insert(field.name.clone(), FieldValue::Scalar(v.value.clone()));
        }
        let meta = EntryMeta::of(entry);
        if !meta.is_default() {
            out.meta.insert(field.name.clone(), meta);
        }
    }
    for nested in &def.nested_types {
        let collection_name = category_name(nested);
        let Some(collection) = category.category(&collection_name) else {
            match missing {
                MissingEntries::Error => return Err(missing_error(&collection_name)),
                MissingEntries::Omit => {
                    out.fields.insert(nested.name.clone(), FieldValue::Nested(Vec::new()));
                    continue;
                }
            }
        };
        let mut items = Vec::with_capacity(collection.children.len());
        for child in &collection.children {
            let Component::Category(c) = child else {
                return Err(Error::MalformedTree(format!(
                    "collection `{collection_name}` holds an entry"
                )));
            };
            items.push(from_generic(nested, c, at, missing)?);
        }
        out.fields.insert(nested.name.clone(), FieldValue::Nested(items));
    }
    Ok(out)
}
