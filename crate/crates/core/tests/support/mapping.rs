//! Random stores behind a virtual type `T`, and a brute-force resolver.

use std::collections::BTreeMap;

use nim_core::{build_plan, ConcreteInstance, EntryMeta, FieldValue, Scalar, Timestamp};
use proptest::prelude::*;

use super::oracle::{current, NaiveValue};
use super::Fixture;

#[derive(Debug, Clone)]
pub struct World {
    /// Per source type: does it map `size` too?
    pub full: Vec<bool>,
    /// Registration order, as a permutation of source indices.
    pub order: Vec<usize>,
    /// Order of sources inside each rule.
    pub rule_order: Vec<usize>,
    /// (source index, name, size, name restricted to "mgr").
    pub instances: Vec<(usize, Option<String>, Option<i32>, bool)>,
    /// (instance index, new name).
    pub updates: Vec<(usize, String)>,
    pub principals: Vec<String>,
}

pub fn world() -> impl Strategy<Value = World> {
    (1usize..=5).prop_flat_map(|n| {
        let perm = Just((0..n).collect::<Vec<_>>()).prop_shuffle();
        let perm2 = Just((0..n).collect::<Vec<_>>()).prop_shuffle();
        (
            proptest::collection::vec(prop::bool::weighted(0.75), n),
            perm,
            perm2,
            proptest::collection::vec(
                (
                    0..n,
                    proptest::option::of("[a-z]{1,3}"),
                    proptest::option::of(0i32..50),
                    prop::bool::weighted(0.2),
                ),
                0..200,
            ),
            proptest::collection::vec((any::<usize>(), "[a-z]{1,3}"), 0..40),
            proptest::sample::subsequence(vec!["mgr".to_string(), "tenant".to_string()], 0..=2),
        )
            .prop_map(|(full, order, rule_order, instances, updates, principals)| World {
                full,
                order,
                rule_order,
                instances,
                updates,
                principals,
            })
    })
}

pub fn setup(w: &World) -> (Fixture, nim_core::MappingPlan, Vec<String>) {
    let mut fix = Fixture::new("DE");
    for &i in &w.order {
        fix.register(
            &format!("s{i}"),
            &format!("S{i} {{ String name{i}; Number size{i}; String extra; }}"),
        );
    }
    let id_sources: Vec<String> = w.rule_order.iter().map(|i| format!("S{i}.name{i}")).collect();
    let size_sources: Vec<String> = w
        .rule_order
        .iter()
        .filter(|i| w.full[**i])
        .map(|i| format!("S{i}.size{i}"))
        .collect();
    let mut src = "T { String id; Number size; }\n".to_string();
    src.push_str(&format!("T.id := {};\n", id_sources.join(" | ")));
    if size_sources.is_empty() {
        // T.size cannot be left uncovered; give it a source of its own.
        src.push_str("Z { Number z; }\nT.size := Z.z;\n");
    } else {
        src.push_str(&format!("T.size := {};\n", size_sources.join(" | ")));
    }
    let rules = fix.register("t", &src);
    let plan = build_plan("T", &rules, &fix.symbols).unwrap().0;
    let mut ids = Vec::new();
    for (k, (s, name, size, restricted)) in w.instances.iter().enumerate() {
        fix.set_time(k as i64);
        let mut inst = ConcreteInstance::new(format!("S{s}"));
        if let Some(n) = name {
            inst = inst.with(format!("name{s}"), Scalar::Text(n.clone()));
        }
        if let Some(z) = size {
            inst = inst.with(format!("size{s}"), Scalar::Number(*z as f64));
        }
        if *restricted {
            inst.meta.insert(
                format!("name{s}"),
                EntryMeta {
                    policy: nim_core::AccessPolicy {
                        agreed_usage: vec!["mgr".into()],
                        ..Default::default()
                    },
                    ..Default::default()
                },
            );
        }
        ids.push(fix.ingest(&inst).0);
    }
    for (k, (pick, name)) in w.updates.iter().enumerate() {
        if ids.is_empty() {
            break;
        }
        let idx = pick % ids.len();
        let s = w.instances[idx].0;
        fix.store
            .append_value(
                &nim_core::InstanceId(ids[idx].clone()),
                &[format!("name{s}")],
                Scalar::Text(name.clone()),
                Some(Timestamp::from_millis(1000 + k as i64)),
                None,
            )
            .unwrap();
    }
    (fix, plan, ids)
}

/// Brute force: scan every generated instance of every covering source
/// type, in registration order, and read its fields from a naive value log.
pub fn oracle(w: &World, ids: &[String]) -> Vec<ConcreteInstance> {
    let mut log: Vec<Vec<NaiveValue>> = w
        .instances
        .iter()
        .enumerate()
        .map(|(k, (_, name, _, _))| {
            name.iter()
                .map(|n| NaiveValue {
                    value: Scalar::Text(n.clone()),
                    ts: k as i64,
                    expiry: None,
                    seq: 0,
                })
                .collect()
        })
        .collect();
    for (k, (pick, name)) in w.updates.iter().enumerate() {
        if ids.is_empty() {
            break;
        }
        let idx = pick % ids.len();
        let ts = 1000 + k as i64;
        let v = Scalar::Text(name.clone());
        if current(&log[idx], ts).is_some_and(|c| c.value == v) {
            continue;
        }
        log[idx].push(NaiveValue {
            value: v,
            ts,
            expiry: None,
            seq: k as u64 + 1,
        });
    }
    let at = i64::MAX / 2;
    let mgr = w.principals.iter().any(|p| p == "mgr");
    let mut out = Vec::new();
    for &s in &w.order {
        if !w.full[s] {
            continue;
        }
        for (k, (src, _, size, restricted)) in w.instances.iter().enumerate() {
            if *src != s {
                continue;
            }
            let mut fields = BTreeMap::new();
            if !*restricted || mgr {
                if let Some(v) = current(&log[k], at) {
                    fields.insert("id".to_string(), FieldValue::Scalar(v.value.clone()));
                }
            }
            if let Some(z) = size {
                fields.insert("size".to_string(), FieldValue::Scalar(Scalar::Number(*z as f64)));
            }
            out.push(ConcreteInstance {
                type_name: "T".into(),
                fields,
                instance_id: Some(nim_core::InstanceId(ids[k].clone())),
                meta: BTreeMap::new(),
            });
        }
    }
    out
}
