//! The generic model: a composite of categories and entries.
//!
//! Entries carry metadata (name, unit, access policy), a time-ordered value
//! history, explicitly stored forecasts and an optional valid range.
//! Expired values stay in memory until purged but are hidden from every read
//! from their expiry instant on.

use std::fmt;
use std::time::Duration;

use nim_ndf::FieldType;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::Timestamp;

/// Opaque identifier of a stored concrete instance.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InstanceId(pub String);

impl InstanceId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::borrow::Borrow<str> for InstanceId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for InstanceId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Text,
    Number,
    Boolean,
    Timestamp,
}

impl From<FieldType> for ValueKind {
    fn from(t: FieldType) -> Self {
        match t {
            FieldType::Text => ValueKind::Text,
            FieldType::Number => ValueKind::Number,
            FieldType::Boolean => ValueKind::Boolean,
            FieldType::Timestamp => ValueKind::Timestamp,
        }
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueKind::Text => "text",
            ValueKind::Number => "number",
            ValueKind::Boolean => "boolean",
            ValueKind::Timestamp => "timestamp",
        })
    }
}

/// A typed scalar. Number equality is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Scalar {
    Text(String),
    Number(f64),
    Boolean(bool),
    Timestamp(Timestamp),
}

impl Scalar {
    pub fn kind(&self) -> ValueKind {
        match self {
            Scalar::Text(_) => ValueKind::Text,
            Scalar::Number(_) => ValueKind::Number,
            Scalar::Boolean(_) => ValueKind::Boolean,
            Scalar::Timestamp(_) => ValueKind::Timestamp,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Scalar::Number(n) => Some(*n),
            _ => None,
        }
    }

    pub fn expect_kind(&self, kind: ValueKind) -> Result<()> {
        if self.kind() == kind {
            Ok(())
        } else {
            Err(Error::KindMismatch {
                expected: kind,
                found: self.kind().to_string(),
            })
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Text(s) => f.write_str(s),
            Scalar::Number(n) => write!(f, "{n}"),
            Scalar::Boolean(b) => write!(f, "{b}"),
            Scalar::Timestamp(t) => write!(f, "{t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedValue {
    pub value: Scalar,
    pub timestamp: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expiry: Option<Timestamp>,
    pub ingest_seq: u64,
}

impl TimedValue {
    /// False from the expiry instant on.
    pub fn is_live_at(&self, at: Timestamp) -> bool {
        self.expiry.is_none_or(|e| e > at)
    }

    fn order_key(&self) -> (Timestamp, u64) {
        (self.timestamp, self.ingest_seq)
    }
}

/// One prediction series from one source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub source_id: String,
    pub points: Vec<(Timestamp, Scalar)>,
    pub created_at: Timestamp,
}

impl Forecast {
    pub fn new(source_id: impl Into<String>, points: Vec<(Timestamp, Scalar)>, created_at: Timestamp) -> Result<Self> {
        let source_id = source_id.into();
        if source_id.is_empty() {
            return Err(Error::EmptyForecastSource);
        }
        if points.is_empty() {
            return Err(Error::EmptyForecast);
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::NonMonotoneForecast);
        }
        Ok(Self {
            source_id,
            points,
            created_at,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueRange {
    pub lower: f64,
    pub upper: f64,
}

impl ValueRange {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(Error::InvalidRange(format!(
                "lower bound {lower} exceeds upper bound {upper}"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

/// Entry-level privacy metadata. Empty lists mean "unrestricted".
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessPolicy {
    /// Principals (roles, users, services) allowed to read the entry.
    #[serde(default)]
    pub agreed_usage: Vec<String>,
    /// Location codes where the entry's values may be stored.
    #[serde(default)]
    pub allowed_locations: Vec<String>,
    /// Lifetime applied to values that arrive without an explicit expiry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_expiry: Option<Duration>,
}

impl AccessPolicy {
    pub fn is_unrestricted(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Allow,
    Deny,
}

impl Decision {
    pub fn is_allow(self) -> bool {
        self == Decision::Allow
    }
}

/// Allow iff the agreed usage is empty or shares a principal with `principals`.
pub fn check_access<S: AsRef<str>>(policy: &AccessPolicy, principals: &[S]) -> Decision {
    let allowed = policy.agreed_usage.is_empty()
        || principals
            .iter()
            .any(|p| policy.agreed_usage.iter().any(|a| a == p.as_ref()));
    if allowed {
        Decision::Allow
    } else {
        Decision::Deny
    }
}

/// Allow iff no locations are listed or `node_location` is one of them.
pub fn check_storage_location(policy: &AccessPolicy, node_location: &str) -> Decision {
    if policy.allowed_locations.is_empty() || policy.allowed_locations.iter().any(|l| l == node_location) {
        Decision::Allow
    } else {
        Decision::Deny
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub name: String,
    #[serde(default)]
    pub unit: String,
    #[serde(default)]
    pub policy: AccessPolicy,
    pub value_kind: ValueKind,
    /// Sorted by `(timestamp, ingest_seq)`.
    #[serde(default)]
    pub values: Vec<TimedValue>,
    #[serde(default)]
    pub forecasts: Vec<Forecast>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<ValueRange>,
}

impl Entry {
    pub fn new(name: impl Into<String>, value_kind: ValueKind) -> Self {
        Self {
            name: name.into(),
            unit: String::new(),
            policy: AccessPolicy::default(),
            value_kind,
            values: Vec::new(),
            forecasts: Vec::new(),
            range: None,
        }
    }

    /// Ranges are only meaningful for numeric entries.
    pub fn with_range(mut self, range: ValueRange) -> Result<Self> {
        if self.value_kind != ValueKind::Number {
            return Err(Error::InvalidRange(format!(
                "entry `{}` holds {} values; ranges need numbers",
                self.name, self.value_kind
            )));
        }
        self.range = Some(range);
        Ok(self)
    }

    /// The live value with the greatest `(timestamp, ingest_seq)` whose
    /// timestamp is not after `at`.
    pub fn current_value(&self, at: Timestamp) -> Option<&TimedValue> {
        let end = self.values.partition_point(|v| v.timestamp <= at);
        self.values[..end].iter().rev().find(|v| v.is_live_at(at))
    }

    /// Live values with `from ≤ timestamp ≤ to`, ascending.
    pub fn history(&self, from: Timestamp, to: Timestamp, at: Timestamp) -> Result<Vec<&TimedValue>> {
        if from > to {
            return Err(Error::InvalidTimeRange);
        }
        let start = self.values.partition_point(|v| v.timestamp < from);
        let end = self.values.partition_point(|v| v.timestamp <= to);
        Ok(self.values[start..end].iter().filter(|v| v.is_live_at(at)).collect())
    }

    pub fn validate_range(&self, candidate: &Scalar) -> Result<()> {
        candidate.expect_kind(self.value_kind)?;
        match (self.range, candidate.as_number()) {
            (Some(r), Some(v)) if !r.contains(v) => Err(Error::RangeViolation {
                value: v,
                lower: r.lower,
                upper: r.upper,
            }),
            _ => Ok(()),
        }
    }

    /// Inserts keeping the `(timestamp, ingest_seq)` order.
    pub fn insert_value(&mut self, value: TimedValue) {
        let key = value.order_key();
        let idx = self.values.partition_point(|v| v.order_key() <= key);
        self.values.insert(idx, value);
    }

    /// The most recently created forecast of `source_id`.
    pub fn active_forecast(&self, source_id: &str) -> Option<&Forecast> {
        self.forecasts
            .iter()
            .filter(|f| f.source_id == source_id)
            .fold(None, |best: Option<&Forecast>, f| match best {
                Some(b) if b.created_at > f.created_at => Some(b),
                _ => Some(f),
            })
    }

    /// Removes values with `expiry ≤ now`, returning how many went.
    pub fn purge_expired(&mut self, now: Timestamp) -> usize {
        let before = self.values.len();
        self.values.retain(|v| v.is_live_at(now));
        before - self.values.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "component", rename_all = "lowercase")]
pub enum Component {
    Category(Category),
    Entry(Entry),
}

impl Component {
    pub fn name(&self) -> &str {
        match self {
            Component::Category(c) => &c.name,
            Component::Entry(e) => &e.name,
        }
    }

    pub fn as_entry(&self) -> Option<&Entry> {
        match self {
            Component::Entry(e) => Some(e),
            Component::Category(_) => None,
        }
    }

    pub fn as_category(&self) -> Option<&Category> {
        match self {
            Component::Category(c) => Some(c),
            Component::Entry(_) => None,
        }
    }
}

/// A container of components. Children form a tree; `references` may point
/// anywhere, cycles included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Category {
    pub name: String,
    #[serde(default)]
    pub children: Vec<Component>,
    #[serde(default)]
    pub references: Vec<InstanceId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_id: Option<InstanceId>,
    /// Qualified NDF type that produced this category; empty when built by hand.
    #[serde(default)]
    pub source_type: String,
}

impl Category {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            children: Vec::new(),
            references: Vec::new(),
            instance_id: None,
            source_type: String::new(),
        }
    }

    pub fn child(&self, name: &str) -> Option<&Component> {
        self.children.iter().find(|c| c.name() == name)
    }

    pub fn entry(&self, name: &str) -> Option<&Entry> {
        self.child(name).and_then(Component::as_entry)
    }

    pub fn category(&self, name: &str) -> Option<&Category> {
        self.child(name).and_then(Component::as_category)
    }

    /// Adds a child, keeping child names unique.
    pub fn add_child(&mut self, child: Component) -> Result<()> {
        if self.child(child.name()).is_some() {
            return Err(Error::MalformedTree(format!(
                "category `{}` already has a child named `{}`",
                self.name,
                child.name()
            )));
        }
        self.children.push(child);
        Ok(())
    }

    pub fn entry_at<S: AsRef<str>>(&self, path: &[S]) -> Option<&Entry> {
        let (last, parents) = path.split_last()?;
        let mut cat = self;
        for p in parents {
            cat = cat.category(p.as_ref())?;
        }
        cat.entry(last.as_ref())
    }

    pub fn entry_at_mut<S: AsRef<str>>(&mut self, path: &[S]) -> Option<&mut Entry> {
        let (last, parents) = path.split_last()?;
        let mut cat = self;
        for p in parents {
            cat = cat.children.iter_mut().find_map(|c| match c {
                Component::Category(c) if c.name == p.as_ref() => Some(c),
                _ => None,
            })?;
        }
        cat.children.iter_mut().find_map(|c| match c {
            Component::Entry(e) if e.name == last.as_ref() => Some(e),
            _ => None,
        })
    }

    /// Depth-first pre-order walk over this category and all descendants.
    pub fn walk(&self, visit: &mut impl FnMut(&[&str], ComponentRef<'_>)) {
        fn go<'a>(cat: &'a Category, path: &mut Vec<&'a str>, visit: &mut impl FnMut(&[&str], ComponentRef<'_>)) {
            visit(path, ComponentRef::Category(cat));
            for child in &cat.children {
                path.push(child.name());
                match child {
                    Component::Category(c) => go(c, path, visit),
                    Component::Entry(e) => visit(path, ComponentRef::Entry(e)),
                }
                path.pop();
            }
        }
        go(self, &mut Vec::new(), visit);
    }

    pub fn walk_entries_mut(&mut self, visit: &mut impl FnMut(&mut Entry)) {
        for child in &mut self.children {
            match child {
                Component::Category(c) => c.walk_entries_mut(visit),
                Component::Entry(e) => visit(e),
            }
        }
    }

    pub fn walk_categories_mut(&mut self, visit: &mut impl FnMut(&mut Category)) {
        visit(self);
        for child in &mut self.children {
            if let Component::Category(c) = child {
                c.walk_categories_mut(visit);
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum ComponentRef<'a> {
    Category(&'a Category),
    Entry(&'a Entry),
}
