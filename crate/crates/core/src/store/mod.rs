//! Journaled repository of generic instances.
//!
//! Every mutation is validated, written to the journal, then applied to the
//! in-memory state through the same [`StoreState::apply`] that replay uses,
//! so replaying a journal reproduces the live state exactly.

pub mod journal;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metamodel::{
    check_access, check_storage_location, Category, Component, ComponentRef, Decision, Entry, Forecast, InstanceId,
    Scalar, TimedValue,
};
use crate::time::{Clock, SystemClock, Timestamp};
use crate::transform::{to_generic, ConcreteInstance, IngestStamp};
use journal::{read_records, JournalEvent, JournalRecord, JournalWarning, JournalWriter, JOURNAL_FILE};
use nim_ndf::TypeDef;

#[derive(Debug, Clone)]
pub struct StoreConfig {
    /// Location code of this node, checked against entry storage policies.
    pub node_location: String,
    /// Journal directory; `None` keeps everything in memory.
    pub data_dir: Option<PathBuf>,
    pub clock: Arc<dyn Clock>,
}

impl StoreConfig {
    pub fn in_memory(node_location: impl Into<String>) -> Self {
        Self {
            node_location: node_location.into(),
            data_dir: None,
            clock: Arc::new(SystemClock),
        }
    }

    pub fn with_data_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.data_dir = Some(dir.into());
        self
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }
}

/// A registered model as recorded in the journal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub model_id: String,
    pub source: String,
    pub types: Vec<String>,
    pub registered_at: Timestamp,
}

/// The complete store contents. Serializing it with `serde_json` gives the
/// canonical form used for snapshot comparison.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StoreState {
    pub last_seq: u64,
    pub models: Vec<ModelRecord>,
    pub known_types: BTreeSet<String>,
    /// Root instances in ingest order.
    pub instances: Vec<Category>,
    #[serde(skip)]
    index: HashMap<InstanceId, Locator>,
}

/// Root position plus the category names leading to the instance.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Locator {
    root: usize,
    path: Vec<String>,
}

impl StoreState {
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("store state always serializes")
    }

    pub fn instance(&self, id: &InstanceId) -> Option<&Category> {
        let loc = self.index.get(id)?;
        let mut cat = self.instances.get(loc.root)?;
        for name in &loc.path {
            cat = cat.category(name)?;
        }
        Some(cat)
    }

    fn instance_mut(&mut self, id: &InstanceId) -> Option<&mut Category> {
        let loc = self.index.get(id)?;
        let mut cat = self.instances.get_mut(loc.root)?;
        for name in &loc.path {
            cat = cat.children.iter_mut().find_map(|c| match c {
                Component::Category(c) if c.name == *name => Some(c),
                _ => None,
            })?;
        }
        Some(cat)
    }

    fn entry_mut(&mut self, id: &InstanceId, path: &[String]) -> Result<&mut Entry> {
        let cat = self
            .instance_mut(id)
            .ok_or_else(|| Error::UnknownInstance(id.to_string()))?;
        cat.entry_at_mut(path).ok_or_else(|| Error::UnknownEntry {
            instance: id.to_string(),
            path: path.join("/"),
        })
    }

    fn index_root(&mut self, root: usize) {
        let mut found = Vec::new();
        self.instances[root].walk(&mut |path, c| {
            if let ComponentRef::Category(cat) = c {
                if let Some(id) = &cat.instance_id {
                    found.push((id.clone(), path.iter().map(|s| s.to_string()).collect()));
                }
            }
        });
        for (id, path) in found {
            self.index.insert(id, Locator { root, path });
        }
    }

    /// Applies one journaled event. Events that do not fit the current state
    /// are rejected so replay can stop at them.
    pub fn apply(&mut self, record: &JournalRecord) -> Result<()> {
        if record.seq <= self.last_seq {
            return Err(Error::MalformedTree(format!(
                "record {} is not after {}",
                record.seq, self.last_seq
            )));
        }
        match &record.event {
            JournalEvent::ModelRegistered {
                model_id,
                source,
                types,
                registered_at,
            } => {
                self.known_types.extend(types.iter().cloned());
                self.models.push(ModelRecord {
                    model_id: model_id.clone(),
                    source: source.clone(),
                    types: types.clone(),
                    registered_at: *registered_at,
                });
            }
            JournalEvent::InstanceCreated { category } => {
                check_new_tree(self, category)?;
                self.instances.push(category.clone());
                self.index_root(self.instances.len() - 1);
            }
            JournalEvent::ValueAppended {
                instance_id,
                path,
                value,
            } => {
                let entry = self.entry_mut(instance_id, path)?;
                value.value.expect_kind(entry.value_kind)?;
                entry.insert_value(value.clone());
            }
            JournalEvent::ForecastAdded {
                instance_id,
                path,
                forecast,
            } => {
                let entry = self.entry_mut(instance_id, path)?;
                entry.forecasts.push(forecast.clone());
            }
            JournalEvent::Purged { now, .. } => {
                for root in &mut self.instances {
                    root.walk_entries_mut(&mut |e| {
                        e.purge_expired(*now);
                    });
                }
            }
        }
        self.last_seq = record.seq;
        Ok(())
    }
}

/// Structural checks on a tree about to become a root instance.
fn check_new_tree(state: &StoreState, root: &Category) -> Result<()> {
    if !state.known_types.contains(&root.source_type) {
        return Err(Error::UnknownType(root.source_type.clone()));
    }
    let mut ids = HashSet::new();
    let mut problem = None;
    root.walk(&mut |_, c| {
        if problem.is_some() {
            return;
        }
        match c {
            ComponentRef::Category(cat) => {
                let mut names = HashSet::new();
                if cat.children.iter().any(|ch| !names.insert(ch.name())) {
                    problem = Some(Error::MalformedTree(format!("duplicate child names in `{}`", cat.name)));
                }
                if let Some(id) = &cat.instance_id {
                    if state.index.contains_key(id) || !ids.insert(id.clone()) {
                        problem = Some(Error::DuplicateInstance(id.to_string()));
                    }
                }
            }
            ComponentRef::Entry(e) => {
                if let Some(v) = e.values.iter().find(|v| v.value.kind() != e.value_kind) {
                    problem = Some(Error::KindMismatch {
                        expected: e.value_kind,
                        found: v.value.kind().to_string(),
                    });
                }
            }
        }
    });
    problem.map_or(Ok(()), Err)
}

/// Which instances a query selects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selector {
    /// Categories produced from this qualified NDF type, nested ones included.
    Type(String),
    /// Categories with this generic name.
    Category(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AppendOutcome {
    Stored {
        seq: u64,
    },
    /// The value equals the current one; nothing was stored.
    Deduplicated,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReplayReport {
    pub records: usize,
    pub warning: Option<JournalWarning>,
}

#[derive(Debug)]
pub struct Store {
    config: StoreConfig,
    state: StoreState,
    journal: Option<JournalWriter>,
}

impl Store {
    pub fn in_memory(config: StoreConfig) -> Self {
        Self {
            config,
            state: StoreState::default(),
            journal: None,
        }
    }

    /// Opens the store, replaying `<data_dir>/nim.journal` when a data
    /// directory is configured. A damaged journal tail is reported and cut
    /// off before new records are appended.
    pub fn open(config: StoreConfig) -> Result<(Self, ReplayReport)> {
        let Some(dir) = config.data_dir.clone() else {
            return Ok((Self::in_memory(config), ReplayReport::default()));
        };
        std::fs::create_dir_all(&dir)?;
        let path = dir.join(JOURNAL_FILE);
        let (state, report, valid_len) = if path.exists() {
            replay_file(&path)?
        } else {
            (StoreState::default(), ReplayReport::default(), 0)
        };
        let journal = JournalWriter::open(&path, valid_len)?;
        Ok((
            Self {
                config,
                state,
                journal: Some(journal),
            },
            report,
        ))
    }

    pub fn config(&self) -> &StoreConfig {
        &self.config
    }

    pub fn now(&self) -> Timestamp {
        self.config.clock.now()
    }

    pub fn state(&self) -> &StoreState {
        &self.state
    }

    pub fn roots(&self) -> &[Category] {
        &self.state.instances
    }

    pub fn knows_type(&self, qualified: &str) -> bool {
        self.state.known_types.contains(qualified)
    }

    pub fn instance(&self, id: &InstanceId) -> Option<&Category> {
        self.state.instance(id)
    }

    pub fn entry(&self, id: &InstanceId, path: &[String]) -> Result<&Entry> {
        let cat = self
            .instance(id)
            .ok_or_else(|| Error::UnknownInstance(id.to_string()))?;
        cat.entry_at(path).ok_or_else(|| Error::UnknownEntry {
            instance: id.to_string(),
            path: path.join("/"),
        })
    }

    fn commit(&mut self, event: JournalEvent) -> Result<u64> {
        let record = JournalRecord {
            seq: self.state.last_seq + 1,
            event,
        };
        if let Some(j) = &mut self.journal {
            j.append(&record)?;
        }
        self.state.apply(&record)?;
        Ok(record.seq)
    }

    /// Records a model and makes its types known. Returns the registration
    /// time.
    pub fn register_model(&mut self, model_id: &str, source: &str, types: Vec<String>) -> Result<Timestamp> {
        let registered_at = self.now();
        self.commit(JournalEvent::ModelRegistered {
            model_id: model_id.to_owned(),
            source: source.to_owned(),
            types,
            registered_at,
        })?;
        Ok(registered_at)
    }

    pub fn models(&self) -> &[ModelRecord] {
        &self.state.models
    }

    /// Stores a new root instance. Categories with a source type but no id
    /// get fresh ids; every value is stamped with the record's sequence
    /// number and checked against the entry's range and storage policy.
    pub fn create_instance(&mut self, mut root: Category) -> Result<InstanceId> {
        if !self.knows_type(&root.source_type) {
            return Err(Error::UnknownType(root.source_type.clone()));
        }
        let seq = self.state.last_seq + 1;
        let mut taken = HashSet::new();
        root.walk(&mut |_, c| {
            if let ComponentRef::Category(cat) = c {
                if let Some(id) = &cat.instance_id {
                    taken.insert(id.clone());
                }
            }
        });
        // Fresh ids: `i<seq>` for the root, `i<seq>-<k>` for nested instances.
        let mut k = 0;
        root.walk_categories_mut(&mut |cat| {
            if cat.instance_id.is_some() || cat.source_type.is_empty() {
                return;
            }
            let mut candidate = if k == 0 {
                format!("i{seq}")
            } else {
                format!("i{seq}-{k}")
            };
            k += 1;
            while taken.contains(candidate.as_str()) || self.state.index.contains_key(candidate.as_str()) {
                candidate.push('x');
            }
            let id = InstanceId(candidate);
            taken.insert(id.clone());
            cat.instance_id = Some(id);
        });

        let location = self.config.node_location.clone();
        let mut problem = None;
        root.walk_entries_mut(&mut |e| {
            for v in &mut e.values {
                v.ingest_seq = seq;
            }
            if problem.is_some() {
                return;
            }
            problem = e.values.iter().find_map(|v| validate_value(e, v, &location).err());
        });
        if let Some(e) = problem {
            return Err(e);
        }
        check_new_tree(&self.state, &root)?;
        let id = root.instance_id.clone().expect("root has a source type");
        self.commit(JournalEvent::InstanceCreated { category: root })?;
        Ok(id)
    }

    /// Converts a concrete instance of `def` and stores it as a new root.
    pub fn ingest(&mut self, def: &TypeDef, instance: &ConcreteInstance) -> Result<InstanceId> {
        let stamp = IngestStamp {
            time: self.now(),
            seq: 0,
        };
        let root = to_generic(def, instance, stamp)?;
        self.create_instance(root)
    }

    /// Appends a value unless it equals the entry's current value at its
    /// timestamp. Missing timestamps default to the store clock; missing
    /// expiries to the entry's default lifetime.
    pub fn append_value(
        &mut self,
        id: &InstanceId,
        path: &[String],
        value: Scalar,
        timestamp: Option<Timestamp>,
        expiry: Option<Timestamp>,
    ) -> Result<AppendOutcome> {
        let timestamp = timestamp.unwrap_or_else(|| self.now());
        let entry = self.entry(id, path)?;
        value.expect_kind(entry.value_kind)?;
        let expiry = expiry.or_else(|| entry.policy.default_expiry.map(|d| timestamp.saturating_add(d)));
        if entry.current_value(timestamp).is_some_and(|cur| cur.value == value) {
            return Ok(AppendOutcome::Deduplicated);
        }
        let candidate = TimedValue {
            value,
            timestamp,
            expiry,
            ingest_seq: self.state.last_seq + 1,
        };
        validate_value(entry, &candidate, &self.config.node_location)?;
        let seq = self.commit(JournalEvent::ValueAppended {
            instance_id: id.clone(),
            path: path.to_vec(),
            value: candidate,
        })?;
        Ok(AppendOutcome::Stored { seq })
    }

    pub fn add_forecast(
        &mut self,
        id: &InstanceId,
        path: &[String],
        source_id: &str,
        points: Vec<(Timestamp, Scalar)>,
    ) -> Result<()> {
        let entry = self.entry(id, path)?;
        for (_, v) in &points {
            v.expect_kind(entry.value_kind)?;
        }
        let forecast = Forecast::new(source_id, points, self.now())?;
        self.commit(JournalEvent::ForecastAdded {
            instance_id: id.clone(),
            path: path.to_vec(),
            forecast,
        })?;
        Ok(())
    }

    /// Snapshots of the selected instances in ingest order. Entries the
    /// principals may not read are omitted, as are values expired at `at`.
    pub fn query<S: AsRef<str>>(&self, selector: &Selector, principals: &[S], at: Timestamp) -> Result<Vec<Category>> {
        if let Selector::Type(t) = selector {
            if !self.knows_type(t) {
                return Err(Error::UnknownType(t.clone()));
            }
        }
        let mut out = Vec::new();
        for root in &self.state.instances {
            collect_matching(root, selector, &mut |c| out.push(visible_snapshot(c, principals, at)));
        }
        Ok(out)
    }

    /// Snapshot of one instance under the same filtering as [`Store::query`].
    pub fn instance_snapshot<S: AsRef<str>>(
        &self,
        id: &InstanceId,
        principals: &[S],
        at: Timestamp,
    ) -> Option<Category> {
        self.instance(id).map(|c| visible_snapshot(c, principals, at))
    }

    /// Physically removes values with `expiry ≤ now`.
    pub fn purge_expired(&mut self, now: Timestamp) -> Result<usize> {
        let mut deleted = 0usize;
        for root in &self.state.instances {
            root.walk(&mut |_, c| {
                if let ComponentRef::Entry(e) = c {
                    deleted += e.values.iter().filter(|v| !v.is_live_at(now)).count();
                }
            });
        }
        self.commit(JournalEvent::Purged {
            now,
            deleted: deleted as u64,
        })?;
        Ok(deleted)
    }
}

fn validate_value(entry: &Entry, v: &TimedValue, location: &str) -> Result<()> {
    if v.expiry.is_some_and(|e| e < v.timestamp) {
        return Err(Error::ExpiryBeforeTimestamp);
    }
    entry.validate_range(&v.value)?;
    if check_storage_location(&entry.policy, location) == Decision::Deny {
        return Err(Error::LocationDenied(location.to_owned()));
    }
    Ok(())
}

fn collect_matching<'a>(cat: &'a Category, selector: &Selector, emit: &mut impl FnMut(&'a Category)) {
    let hit = match selector {
        Selector::Type(t) => cat.source_type == *t,
        Selector::Category(n) => cat.name == *n,
    };
    if hit {
        emit(cat);
    }
    for child in &cat.children {
        if let Component::Category(c) = child {
            collect_matching(c, selector, emit);
        }
    }
}

/// Copy of `cat` with unreadable entries dropped and values expired at `at`
/// removed.
pub fn visible_snapshot<S: AsRef<str>>(cat: &Category, principals: &[S], at: Timestamp) -> Category {
    let children = cat
        .children
        .iter()
        .filter_map(|child| match child {
            Component::Category(c) => Some(Component::Category(visible_snapshot(c, principals, at))),
            Component::Entry(e) => {
                if check_access(&e.policy, principals) == Decision::Deny {
                    return None;
                }
                let mut e = e.clone();
                e.values.retain(|v| v.is_live_at(at));
                Some(Component::Entry(e))
            }
        })
        .collect();
    Category {
        name: cat.name.clone(),
        children,
        references: cat.references.clone(),
        instance_id: cat.instance_id.clone(),
        source_type: cat.source_type.clone(),
    }
}

fn replay_file(path: &Path) -> Result<(StoreState, ReplayReport, u64)> {
    let reader = BufReader::new(File::open(path)?);
    replay_reader(reader)
}

/// Rebuilds a store state from journal bytes. Returns the state, a report,
/// and the length of the valid journal prefix.
pub fn replay_reader(reader: impl std::io::BufRead) -> Result<(StoreState, ReplayReport, u64)> {
    let (records, mut warning) = read_records(reader)?;
    let mut state = StoreState::default();
    let mut valid_len = 0;
    let mut applied = 0;
    for raw in &records {
        if let Err(e) = state.apply(&raw.record) {
            warning = Some(JournalWarning {
                line: raw.line,
                offset: raw.offset,
                reason: format!("record does not apply: {e}"),
            });
            break;
        }
        applied += 1;
        valid_len = raw.end;
    }
    Ok((
        state,
        ReplayReport {
            records: applied,
            warning,
        },
        valid_len,
    ))
}

/// Reads `<data_dir>/nim.journal` into a store state without opening it for
/// writing. A missing journal gives an empty state.
pub fn replay_journal(data_dir: &Path) -> Result<(StoreState, ReplayReport)> {
    let path = data_dir.join(JOURNAL_FILE);
    if !path.exists() {
        return Ok((StoreState::default(), ReplayReport::default()));
    }
    let (state, report, _) = replay_file(&path)?;
    Ok((state, report))
}
