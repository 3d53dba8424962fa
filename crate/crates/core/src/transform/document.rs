//! JSON wire form of concrete instances.
//!
//! Documents are objects keyed by field name. Nested types appear under
//! their simple type name as an array (a single object is accepted on
//! input). Two reserved keys exist: `@id`, the instance id, and `@meta`,
//! per-field metadata:
//!
//! ```json
//! { "@id": "b-1",
//!   "@meta": { "area": { "unit": "m2", "range": { "lower": 0, "upper": 500 },
//!                        "agreedUsage": ["facility-manager"],
//!                        "allowedLocations": ["DE"], "defaultExpiry": 3600 } },
//!   "name": "B1", "area": 120.5, "Room": [ { "area": 12 } ] }
//! ```

use std::collections::BTreeMap;
use std::time::Duration;

use nim_ndf::{FieldType, TypeDef};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{validate_instance, ConcreteInstance, EntryMeta, FieldValue};
use crate::error::{Error, Result};
use crate::metamodel::{AccessPolicy, InstanceId, Scalar, ValueRange};
use crate::time::Timestamp;

const ID_KEY: &str = "@id";
const META_KEY: &str = "@meta";

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct WireMeta {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    unit: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    range: Option<WireRange>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    agreed_usage: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    allowed_locations: Vec<String>,
    /// Seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    default_expiry: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireRange {
    lower: f64,
    upper: f64,
}

fn err(def: &TypeDef, message: impl Into<String>) -> Error {
    Error::Schema {
        type_name: def.qualified_name.clone(),
        message: message.into(),
    }
}

/// Reads a scalar of the given field type from JSON. `null` is "absent".
pub fn decode_scalar(field_type: FieldType, value: &Value) -> std::result::Result<Option<Scalar>, String> {
    let scalar = match (field_type, value) {
        (_, Value::Null) => return Ok(None),
        (FieldType::Text, Value::String(s)) => Scalar::Text(s.clone()),
        (FieldType::Number, Value::Number(n)) => match n.as_f64() {
            Some(f) if f.is_finite() => Scalar::Number(f),
            _ => return Err(format!("number {n} is not representable")),
        },
        (FieldType::Boolean, Value::Bool(b)) => Scalar::Boolean(*b),
        (FieldType::Timestamp, Value::String(s)) => {
            Scalar::Timestamp(Timestamp::parse_iso(s).map_err(|e| format!("invalid timestamp {s:?}: {e}"))?)
        }
        (t, other) => return Err(format!("expected {} value, found {other}", t.keyword())),
    };
    Ok(Some(scalar))
}

pub fn encode_scalar(s: &Scalar) -> Value {
    match s {
        Scalar::Text(t) => Value::String(t.clone()),
        Scalar::Number(n) => serde_json::Number::from_f64(*n).map_or(Value::Null, Value::Number),
        Scalar::Boolean(b) => Value::Bool(*b),
        Scalar::Timestamp(t) => Value::String(t.to_iso()),
    }
}

/// Decodes and validates a document against `def`.
pub fn decode_document(def: &TypeDef, doc: &Value) -> Result<ConcreteInstance> {
    let instance = decode(def, doc)?;
    validate_instance(def, &instance)?;
    Ok(instance)
}

fn decode(def: &TypeDef, doc: &Value) -> Result<ConcreteInstance> {
    let Value::Object(obj) = doc else {
        return Err(err(def, "document must be a JSON object"));
    };
    let mut out = ConcreteInstance::new(&def.qualified_name);
    for (key, value) in obj {
        match key.as_str() {
            ID_KEY => match value {
                Value::String(s) if !s.is_empty() => out.instance_id = Some(InstanceId(s.clone())),
                _ => return Err(err(def, "`@id` must be a non-empty string")),
            },
            META_KEY => out.meta = decode_meta(def, value)?,
            _ => {
                if let Some(field) = def.field(key) {
                    let scalar =
                        decode_scalar(field.field_type, value).map_err(|m| err(def, format!("field `{key}`: {m}")))?;
                    if let Some(s) = scalar {
                        out.fields.insert(key.clone(), FieldValue::Scalar(s));
                    }
                } else if let Some(nested) = def.nested(key) {
                    let items = match value {
                        Value::Array(items) => items.iter().collect(),
                        Value::Object(_) => vec![value],
                        Value::Null => vec![],
                        _ => return Err(err(def, format!("`{key}` must be an object or array"))),
                    };
                    let list = items
                        .into_iter()
                        .map(|item| decode(nested, item))
                        .collect::<Result<Vec<_>>>()?;
                    out.fields.insert(key.clone(), FieldValue::Nested(list));
                } else {
                    return Err(err(def, format!("unknown field `{key}`")));
                }
            }
        }
    }
    for nested in &def.nested_types {
        out.fields
            .entry(nested.name.clone())
            .or_insert_with(|| FieldValue::Nested(Vec::new()));
    }
    Ok(out)
}

fn decode_meta(def: &TypeDef, value: &Value) -> Result<BTreeMap<String, EntryMeta>> {
    let wire: BTreeMap<String, WireMeta> =
        serde_json::from_value(value.clone()).map_err(|e| err(def, format!("invalid `@meta`: {e}")))?;
    let mut out = BTreeMap::new();
    for (field, m) in wire {
        let range = m
            .range
            .map(|r| ValueRange::new(r.lower, r.upper))
            .transpose()
            .map_err(|e| err(def, format!("field `{field}`: {e}")))?;
        let default_expiry = m
            .default_expiry
            .map(Duration::try_from_secs_f64)
            .transpose()
            .map_err(|e| err(def, format!("field `{field}`: defaultExpiry: {e}")))?;
        out.insert(
            field,
            EntryMeta {
                unit: m.unit,
                range,
                policy: AccessPolicy {
                    agreed_usage: m.agreed_usage,
                    allowed_locations: m.allowed_locations,
                    default_expiry,
                },
            },
        );
    }
    Ok(out)
}

/// Encodes an instance. Metadata is included only when asked for.
pub fn encode_document(instance: &ConcreteInstance, include_meta: bool) -> Value {
    let mut obj = Map::new();
    if let Some(id) = &instance.instance_id {
        obj.insert(ID_KEY.into(), Value::String(id.0.clone()));
    }
    if include_meta && !instance.meta.is_empty() {
        let meta: BTreeMap<&String, WireMeta> = instance
            .meta
            .iter()
            .map(|(k, m)| {
                (
                    k,
                    WireMeta {
                        unit: m.unit.clone(),
                        range: m.range.map(|r| WireRange {
                            lower: r.lower,
                            upper: r.upper,
                        }),
                        agreed_usage: m.policy.agreed_usage.clone(),
                        allowed_locations: m.policy.allowed_locations.clone(),
                        default_expiry: m.policy.default_expiry.map(|d| d.as_secs_f64()),
                    },
                )
            })
            .collect();
        obj.insert(META_KEY.into(), serde_json::to_value(meta).unwrap_or(Value::Null));
    }
    for (k, v) in &instance.fields {
        let value = match v {
            FieldValue::Scalar(s) => encode_scalar(s),
            FieldValue::Nested(list) => Value::Array(list.iter().map(|i| encode_document(i, include_meta)).collect()),
        };
        obj.insert(k.clone(), value);
    }
    Value::Object(obj)
}

pub fn encode_instances(instances: &[ConcreteInstance]) -> Value {
    Value::Array(instances.iter().map(|i| encode_document(i, false)).collect())
}
