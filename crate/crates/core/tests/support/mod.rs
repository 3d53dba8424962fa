#![allow(dead_code)]

pub mod mapping;
pub mod oracle;
pub mod types;

use std::sync::Arc;

use nim_core::{ConcreteInstance, InstanceId, ManualClock, Store, StoreConfig, Timestamp};
use nim_ndf::{analyze, parse, SymbolTable, TypeDef};

/// A store plus the symbol table of the models registered in it.
pub struct Fixture {
    pub store: Store,
    pub symbols: SymbolTable,
    pub clock: Arc<ManualClock>,
}

impl Fixture {
    pub fn new(node_location: &str) -> Self {
        let clock = Arc::new(ManualClock::new(Timestamp::from_millis(0)));
        let config = StoreConfig::in_memory(node_location).with_clock(clock.clone());
        Self {
            store: Store::in_memory(config),
            symbols: SymbolTable::new(),
            clock,
        }
    }

    pub fn with_store(store: Store, clock: Arc<ManualClock>) -> Self {
        Self {
            store,
            symbols: SymbolTable::new(),
            clock,
        }
    }

    pub fn register(&mut self, id: &str, src: &str) -> Vec<nim_ndf::ResolvedRule> {
        let checked = analyze(&parse(src).unwrap(), &self.symbols).unwrap_or_else(|d| panic!("{d:?}"));
        self.symbols.insert_model(&checked, id);
        let types = checked.model.all_types().map(|t| t.qualified_name.clone()).collect();
        self.store.register_model(id, src, types).unwrap();
        checked.rules
    }

    pub fn def(&self, qualified: &str) -> TypeDef {
        self.symbols.get(qualified).unwrap().def.clone()
    }

    pub fn ingest(&mut self, instance: &ConcreteInstance) -> InstanceId {
        let def = self.def(&instance.type_name);
        self.store.ingest(&def, instance).unwrap()
    }

    pub fn set_time(&self, ms: i64) {
        self.clock.set(Timestamp::from_millis(ms));
    }
}

pub fn ts(ms: i64) -> Timestamp {
    Timestamp::from_millis(ms)
}

use nim_core::{AccessPolicy, AppendOutcome, EntryMeta, Scalar, Selector, ValueRange};
use oracle::{current, history, readable, CreateSpec, NaiveField, NaiveInstance, NaiveStore, NaiveValue, Op, FIELDS};

pub fn sensor_instance(spec: &CreateSpec) -> ConcreteInstance {
    let mut inst = ConcreteInstance::new("Sensor");
    if let Some(v) = spec.value {
        inst = inst.with("value", Scalar::Number(v));
    }
    if let Some(l) = &spec.label {
        inst = inst.with("label", Scalar::Text(l.clone()));
    }
    for (i, f) in FIELDS.iter().enumerate() {
        let meta = EntryMeta {
            unit: String::new(),
            range: if i == 0 {
                spec.range.map(|(lo, hi)| ValueRange::new(lo, hi).unwrap())
            } else {
                None
            },
            policy: AccessPolicy {
                agreed_usage: spec.usage[i].clone(),
                allowed_locations: vec![],
                default_expiry: spec
                    .default_expiry_ms
                    .map(|ms| std::time::Duration::from_millis(ms as u64)),
            },
        };
        if !meta.is_default() {
            inst.meta.insert(f.to_string(), meta);
        }
    }
    inst
}

/// Applies `op` to both the real store and the naive model and checks that
/// they agree on the outcome.
pub fn apply_op(fix: &mut Fixture, naive: &mut NaiveStore, op: &Op) {
    match op {
        Op::Create(spec) => {
            let id = fix.ingest(&sensor_instance(spec));
            naive.seq += 1;
            let now = naive.now;
            let expiry = spec.default_expiry_ms.map(|e| now + e);
            let field = |i: usize, v: Option<Scalar>| NaiveField {
                usage: spec.usage[i].clone(),
                range: if i == 0 { spec.range } else { None },
                default_expiry_ms: spec.default_expiry_ms,
                values: v
                    .map(|value| NaiveValue {
                        value,
                        ts: now,
                        expiry,
                        seq: naive.seq,
                    })
                    .into_iter()
                    .collect(),
            };
            naive.instances.push(NaiveInstance {
                id: id.0.clone(),
                fields: [
                    field(0, spec.value.map(Scalar::Number)),
                    field(1, spec.label.clone().map(Scalar::Text)),
                ],
            });
        }
        Op::Append {
            instance,
            field,
            value,
            back,
            lifetime,
        } => {
            if naive.instances.is_empty() {
                return;
            }
            let idx = instance % naive.instances.len();
            let ts = naive.now - back;
            let explicit = lifetime.map(|l| ts + l);
            let id = InstanceId(naive.instances[idx].id.clone());
            let got = fix.store.append_value(
                &id,
                &[FIELDS[*field].to_string()],
                value.clone(),
                Some(Timestamp::from_millis(ts)),
                explicit.map(Timestamp::from_millis),
            );
            let nf = &mut naive.instances[idx].fields[*field];
            let expected_dedup = current(&nf.values, ts).is_some_and(|c| c.value == *value);
            let out_of_range = match (nf.range, value) {
                (Some((lo, hi)), Scalar::Number(n)) => *n < lo || *n > hi,
                _ => false,
            };
            if expected_dedup {
                assert_eq!(got.unwrap(), AppendOutcome::Deduplicated);
            } else if out_of_range {
                assert!(got.is_err(), "range violation accepted");
            } else {
                naive.seq += 1;
                assert_eq!(got.unwrap(), AppendOutcome::Stored { seq: naive.seq });
                nf.values.push(NaiveValue {
                    value: value.clone(),
                    ts,
                    expiry: explicit.or(nf.default_expiry_ms.map(|e| ts + e)),
                    seq: naive.seq,
                });
            }
        }
        Op::Advance(d) => {
            naive.now += d;
            fix.set_time(naive.now);
        }
        Op::Purge => {
            let now = naive.now;
            let mut expected = 0;
            for inst in &mut naive.instances {
                for f in &mut inst.fields {
                    let before = f.values.len();
                    f.values.retain(|v| v.live(now));
                    expected += before - f.values.len();
                }
            }
            naive.seq += 1;
            let deleted = fix.store.purge_expired(Timestamp::from_millis(now)).unwrap();
            assert_eq!(deleted, expected);
        }
    }
}

/// Compares `query(Sensor, principals, at)` against a direct filter over
/// the naive model.
pub fn check_query(fix: &Fixture, naive: &NaiveStore, principals: &[String], at: i64) {
    let snaps = fix
        .store
        .query(&Selector::Type("Sensor".into()), principals, Timestamp::from_millis(at))
        .unwrap();
    assert_eq!(snaps.len(), naive.instances.len());
    for (snap, inst) in snaps.iter().zip(&naive.instances) {
        assert_eq!(snap.instance_id.as_ref().unwrap().0, inst.id);
        for (i, f) in inst.fields.iter().enumerate() {
            let entry = snap.entry(FIELDS[i]);
            if !readable(&f.usage, principals) {
                assert!(entry.is_none(), "restricted entry visible");
                continue;
            }
            let entry = entry.expect("readable entry missing");
            let mut expected: Vec<&NaiveValue> = f.values.iter().filter(|v| v.live(at)).collect();
            expected.sort_by_key(|v| (v.ts, v.seq));
            let got: Vec<(Scalar, i64, Option<i64>, u64)> = entry
                .values
                .iter()
                .map(|v| {
                    (
                        v.value.clone(),
                        v.timestamp.as_millis(),
                        v.expiry.map(|e| e.as_millis()),
                        v.ingest_seq,
                    )
                })
                .collect();
            let want: Vec<(Scalar, i64, Option<i64>, u64)> = expected
                .iter()
                .map(|v| (v.value.clone(), v.ts, v.expiry, v.seq))
                .collect();
            assert_eq!(got, want);
            assert_eq!(
                entry.current_value(Timestamp::from_millis(at)).map(|v| v.ingest_seq),
                current(&f.values, at).map(|v| v.seq)
            );
            let stored = fix
                .store
                .entry(&InstanceId(inst.id.clone()), &[FIELDS[i].to_string()])
                .unwrap();
            for (from, to) in [(at - 20, at), (at - 5, at + 5), (i64::MIN / 4, i64::MAX / 4)] {
                let got: Vec<u64> = stored
                    .history(
                        Timestamp::from_millis(from),
                        Timestamp::from_millis(to),
                        Timestamp::from_millis(at),
                    )
                    .unwrap()
                    .iter()
                    .map(|v| v.ingest_seq)
                    .collect();
                let want: Vec<u64> = history(&f.values, from, to, at).iter().map(|v| v.seq).collect();
                assert_eq!(got, want, "history [{from}, {to}] at {at}");
            }
        }
    }
}
