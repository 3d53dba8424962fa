//! The generic neighbourhood model and everything that operates on it.
//!
//! * [`metamodel`]: categories, entries, timed values, forecasts, ranges and
//!   access policies, with the pure read and policy operations.
//! * [`store`]: the journaled repository of generic instances.
//! * [`transform`]: concrete ⇄ generic conversion and the wire document codec.
//! * [`mapping`]: mapping plans and their resolution against a store.

pub mod error;
pub mod mapping;
pub mod metamodel;
pub mod store;
pub mod time;
pub mod transform;

pub use error::Error;
pub use mapping::{build_plan, resolve_mapping, MappingPlan, SourceMapping};
pub use metamodel::{
    check_access, check_storage_location, AccessPolicy, Category, Component, ComponentRef, Decision, Entry, Forecast,
    InstanceId, Scalar, TimedValue, ValueKind, ValueRange,
};
pub use store::{AppendOutcome, ModelRecord, ReplayReport, Selector, Store, StoreConfig, StoreState};
pub use time::{Clock, ManualClock, SystemClock, Timestamp};
pub use transform::{from_generic, to_generic, ConcreteInstance, EntryMeta, FieldValue, MissingEntries};
