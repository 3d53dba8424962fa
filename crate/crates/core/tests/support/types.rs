//! Random NDF type trees and instances of them.

use std::collections::BTreeMap;
use std::time::Duration;

use nim_core::{AccessPolicy, ConcreteInstance, EntryMeta, FieldValue, InstanceId, Scalar, Timestamp, ValueRange};
use nim_ndf::{parse, FieldType, TypeDef};
use proptest::prelude::*;

#[derive(Debug, Clone)]
pub struct Shape {
    pub fields: Vec<FieldType>,
    pub nested: Vec<Shape>,
}

fn shape() -> impl Strategy<Value = Shape> {
    let leaf = proptest::collection::vec(proptest::sample::select(FieldType::ALL.to_vec()), 0..5)
        .prop_map(|fields| Shape { fields, nested: vec![] });
    leaf.prop_recursive(2, 8, 3, |inner| {
        (
            proptest::collection::vec(proptest::sample::select(FieldType::ALL.to_vec()), 0..5),
            proptest::collection::vec(inner, 0..3),
        )
            .prop_map(|(fields, nested)| Shape { fields, nested })
    })
}

fn render(name: &str, s: &Shape, out: &mut String) {
    out.push_str(name);
    out.push_str(" { ");
    for (i, t) in s.fields.iter().enumerate() {
        out.push_str(&format!("{} f{i}; ", t.keyword()));
    }
    for (i, n) in s.nested.iter().enumerate() {
        render(&format!("N{i}"), n, out);
    }
    out.push_str("} ");
}

/// A random type definition of nesting depth at most 3, parsed from text.
pub fn type_def() -> impl Strategy<Value = TypeDef> {
    shape().prop_map(|s| {
        let mut src = String::new();
        render("Root", &s, &mut src);
        parse(&src).unwrap().types.remove(0)
    })
}

pub fn scalar(t: FieldType) -> BoxedStrategy<Scalar> {
    match t {
        FieldType::Text => "[a-zA-Z0-9 _\\-]{0,8}".prop_map(Scalar::Text).boxed(),
        FieldType::Number => prop_oneof![
            (-1000i32..1000).prop_map(|n| Scalar::Number(n as f64)),
            (-1e12f64..1e12).prop_map(Scalar::Number),
        ]
        .boxed(),
        FieldType::Boolean => any::<bool>().prop_map(Scalar::Boolean).boxed(),
        FieldType::Timestamp => (-2_000_000_000_000i64..4_000_000_000_000)
            .prop_map(|ms| Scalar::Timestamp(Timestamp::from_millis(ms)))
            .boxed(),
    }
}

fn meta(t: FieldType) -> impl Strategy<Value = EntryMeta> {
    let range = if t == FieldType::Number {
        proptest::option::of((-100i32..0, 0i32..100))
            .prop_map(|r| r.map(|(lo, hi)| ValueRange::new(lo as f64, hi as f64).unwrap()))
            .boxed()
    } else {
        Just(None).boxed()
    };
    (
        proptest::sample::select(vec!["", "kWh", "m2"]),
        range,
        proptest::collection::vec(proptest::sample::select(vec!["mgr", "tenant"]), 0..2),
        proptest::collection::vec(proptest::sample::select(vec!["DE", "IE"]), 0..2),
        proptest::option::of(1u64..100_000),
    )
        .prop_map(|(unit, range, usage, locs, exp)| EntryMeta {
            unit: unit.to_string(),
            range,
            policy: AccessPolicy {
                agreed_usage: usage.into_iter().map(String::from).collect(),
                allowed_locations: locs.into_iter().map(String::from).collect(),
                default_expiry: exp.map(Duration::from_millis),
            },
        })
}

/// A random instance of `def`; `with_ids` decides whether instance ids may
/// be set.
pub fn instance(def: &TypeDef, with_ids: bool) -> BoxedStrategy<ConcreteInstance> {
    let type_name = def.qualified_name.clone();
    let scalars: Vec<_> = def
        .fields
        .iter()
        .map(|f| {
            (
                Just(f.name.clone()),
                proptest::option::of(scalar(f.field_type)),
                proptest::option::of(meta(f.field_type)),
            )
        })
        .collect();
    let nested: Vec<_> = def
        .nested_types
        .iter()
        .map(|n| {
            (
                Just(n.name.clone()),
                proptest::collection::vec(instance(n, with_ids), 0..3),
            )
        })
        .collect();
    let id = if with_ids {
        proptest::option::of("[a-z][a-z0-9]{0,6}".prop_map(InstanceId)).boxed()
    } else {
        Just(None).boxed()
    };
    (scalars, nested, id)
        .prop_map(move |(scalars, nested, instance_id)| {
            let mut fields = BTreeMap::new();
            let mut metas = BTreeMap::new();
            for (name, value, meta) in scalars {
                if let Some(v) = value {
                    fields.insert(name.clone(), FieldValue::Scalar(v));
                }
                if let Some(m) = meta.filter(|m| !m.is_default()) {
                    metas.insert(name, m);
                }
            }
            for (name, list) in nested {
                fields.insert(name, FieldValue::Nested(list));
            }
            ConcreteInstance {
                type_name: type_name.clone(),
                fields,
                instance_id,
                meta: metas,
            }
        })
        .boxed()
}

/// A type together with one of its instances.
pub fn typed_instance() -> impl Strategy<Value = (TypeDef, ConcreteInstance)> {
    type_def().prop_flat_map(|def| {
        let inst = instance(&def, true);
        (Just(def), inst)
    })
}

/// Shape oracle: the category tree mirrors the type tree and the instance's
/// nested lists one to one.
pub fn same_shape(def: &TypeDef, inst: &ConcreteInstance, cat: &nim_core::Category) -> bool {
    if cat.name != def.name.to_lowercase() && cat.name.parse::<usize>().is_err() {
        return false;
    }
    if cat.children.len() != def.fields.len() + def.nested_types.len() {
        return false;
    }
    let entries_ok = def.fields.iter().all(|f| {
        cat.entry(&f.name)
            .is_some_and(|e| e.values.len() == usize::from(inst.scalar(&f.name).is_some()))
    });
    entries_ok
        && def.nested_types.iter().all(|n| {
            let items = inst.nested(&n.name);
            cat.category(&n.name.to_lowercase()).is_some_and(|coll| {
                coll.children.len() == items.len()
                    && coll
                        .children
                        .iter()
                        .zip(items)
                        .enumerate()
                        .all(|(i, (c, item))| match c {
                            nim_core::Component::Category(c) => c.name == i.to_string() && same_shape(n, item, c),
                            nim_core::Component::Entry(_) => false,
                        })
            })
        })
}

/// Every nested type has a list after conversion, possibly empty.
pub fn normalized(def: &TypeDef, mut inst: ConcreteInstance) -> ConcreteInstance {
    for n in &def.nested_types {
        let list = match inst.fields.remove(&n.name) {
            Some(nim_core::FieldValue::Nested(l)) => l.into_iter().map(|i| normalized(n, i)).collect(),
            _ => vec![],
        };
        inst.fields.insert(n.name.clone(), nim_core::FieldValue::Nested(list));
    }
    inst
}
