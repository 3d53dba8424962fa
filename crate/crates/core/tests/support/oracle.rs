//! Naive reference model of a store holding `Sensor { Number value; String
//! label; }` instances. Every rule is a direct scan with no indexing.

use nim_core::Scalar;
use proptest::prelude::*;

pub const SENSOR: &str = "Sensor { Number value; String label; }";
pub const FIELDS: [&str; 2] = ["value", "label"];
pub const PRINCIPALS: [&str; 3] = ["mgr", "tenant", "svc"];

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveValue {
    pub value: Scalar,
    pub ts: i64,
    pub expiry: Option<i64>,
    pub seq: u64,
}

impl NaiveValue {
    pub fn live(&self, at: i64) -> bool {
        self.expiry.is_none_or(|e| e > at)
    }
}

pub fn current(values: &[NaiveValue], at: i64) -> Option<&NaiveValue> {
    let mut best: Option<&NaiveValue> = None;
    for v in values {
        if v.ts <= at && v.live(at) {
            let better = match best {
                None => true,
                Some(b) => (v.ts, v.seq) > (b.ts, b.seq),
            };
            if better {
                best = Some(v);
            }
        }
    }
    best
}

pub fn history(values: &[NaiveValue], from: i64, to: i64, at: i64) -> Vec<NaiveValue> {
    let mut out: Vec<NaiveValue> = values
        .iter()
        .filter(|v| from <= v.ts && v.ts <= to && v.live(at))
        .cloned()
        .collect();
    out.sort_by_key(|v| (v.ts, v.seq));
    out
}

pub fn readable(usage: &[String], principals: &[String]) -> bool {
    usage.is_empty() || usage.iter().any(|u| principals.contains(u))
}

#[derive(Debug, Clone)]
pub struct NaiveField {
    pub usage: Vec<String>,
    pub range: Option<(f64, f64)>,
    pub default_expiry_ms: Option<i64>,
    pub values: Vec<NaiveValue>,
}

#[derive(Debug, Clone)]
pub struct NaiveInstance {
    pub id: String,
    pub fields: [NaiveField; 2],
}

#[derive(Debug, Clone, Default)]
pub struct NaiveStore {
    pub seq: u64,
    pub now: i64,
    pub instances: Vec<NaiveInstance>,
}

#[derive(Debug, Clone)]
pub struct CreateSpec {
    pub value: Option<f64>,
    pub label: Option<String>,
    pub usage: [Vec<String>; 2],
    pub range: Option<(f64, f64)>,
    pub default_expiry_ms: Option<i64>,
}

#[derive(Debug, Clone)]
pub enum Op {
    Create(CreateSpec),
    /// Instance index (modulo the population), field index, value, timestamp
    /// offset from now, explicit lifetime.
    Append {
        instance: usize,
        field: usize,
        value: Scalar,
        back: i64,
        lifetime: Option<i64>,
    },
    Advance(i64),
    Purge,
}

fn principal_set() -> impl Strategy<Value = Vec<String>> {
    proptest::sample::subsequence(PRINCIPALS.to_vec(), 0..=2).prop_map(|v| v.into_iter().map(String::from).collect())
}

fn number() -> impl Strategy<Value = f64> {
    // Small value set so that duplicates, and thus dedup, are frequent.
    prop_oneof![(-2i32..6).prop_map(|n| n as f64 * 25.0), Just(21.5)]
}

fn label() -> impl Strategy<Value = String> {
    proptest::sample::select(vec!["a", "b", "c"]).prop_map(String::from)
}

pub fn create_spec() -> impl Strategy<Value = CreateSpec> {
    (
        proptest::option::of(number()),
        proptest::option::of(label()),
        principal_set(),
        principal_set(),
        proptest::option::of(Just((0.0, 100.0))),
        proptest::option::of(1i64..50),
    )
        .prop_map(|(value, label, u0, u1, range, exp)| CreateSpec {
            value: value.filter(|v| range.is_none_or(|(lo, hi)| *v >= lo && *v <= hi)),
            label,
            usage: [u0, u1],
            range,
            default_expiry_ms: exp,
        })
}

pub fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        2 => create_spec().prop_map(Op::Create),
        6 => (any::<usize>(), 0usize..2, number(), label(), 0i64..20, proptest::option::of(0i64..40))
            .prop_map(|(instance, field, n, l, back, lifetime)| Op::Append {
                instance,
                field,
                value: if field == 0 { Scalar::Number(n) } else { Scalar::Text(l) },
                back,
                lifetime,
            }),
        2 => (1i64..15).prop_map(Op::Advance),
        1 => Just(Op::Purge),
    ]
}

pub fn ops(max: usize) -> impl Strategy<Value = Vec<Op>> {
    proptest::collection::vec(op(), 1..max)
}
