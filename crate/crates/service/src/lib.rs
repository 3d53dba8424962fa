//! Runtime model registration and the HTTP service.
//!
//! Uploaded NDF models are checked, turned into adapters (the instance
//! endpoints of their types plus mapping plans for mapped types) and
//! published without a restart. All data lives in one journaled store.

pub mod builtins;
mod engine;
mod error;
pub mod http;

pub use engine::{
    instances_path, prepare_model, AdapterDescriptor, Endpoint, Engine, HistoryWindow, PreparedModel,
    RegistrationResult, RegistrationStatus, Registry, ValueInput,
};
pub use error::{ApiError, ApiResult, ErrorKind};
