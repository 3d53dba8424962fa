//! Model registry and data access behind the HTTP API.
//!
//! Lookups read an immutable registry snapshot; a successful registration
//! builds a new snapshot and swaps it in. Registrations are serialized, and
//! the store follows a single-writer, many-readers discipline.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, PoisonError, RwLock, RwLockReadGuard, RwLockWriteGuard};

use nim_core::store::visible_snapshot;
use nim_core::transform::{decode_document, decode_scalar, IngestStamp};
use nim_core::{
    build_plan, check_access, from_generic, resolve_mapping, to_generic, AppendOutcome, ConcreteInstance, Decision,
    Entry, Forecast, InstanceId, MappingPlan, MissingEntries, Selector, Store, TimedValue, Timestamp,
};
use nim_ndf::{analyze, parse, pretty_print, CheckedModel, Diagnostic, NdfModel, SymbolTable, TypeDef};
use serde::Serialize;
use serde_json::Value;

use crate::builtins;
use crate::error::{ApiError, ApiResult, ErrorKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Endpoint {
    pub method: &'static str,
    pub path: String,
}

/// A registered model and the access surface derived from it.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AdapterDescriptor {
    pub model_id: String,
    pub package: String,
    pub qualified_types: Vec<String>,
    pub virtual_types: Vec<String>,
    pub mapping_plans: Vec<MappingPlan>,
    pub endpoints: Vec<Endpoint>,
    pub registered_at: String,
    #[serde(skip)]
    pub model: NdfModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RegistrationStatus {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RegistrationResult {
    pub status: RegistrationStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    /// Errors when rejected; mapping warnings when accepted.
    pub diagnostics: Vec<Diagnostic>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub endpoints: Vec<Endpoint>,
}

impl RegistrationResult {
    pub fn is_accepted(&self) -> bool {
        self.status == RegistrationStatus::Accepted
    }

    fn rejected(diagnostics: Vec<Diagnostic>) -> Self {
        Self {
            status: RegistrationStatus::Rejected,
            model_id: None,
            diagnostics,
            endpoints: Vec::new(),
        }
    }
}

/// A model that passed every check, with the symbol table and mapping
/// plans it would produce once registered.
#[derive(Debug, Clone)]
pub struct PreparedModel {
    pub checked: CheckedModel,
    pub symbols: SymbolTable,
    pub plans: Vec<MappingPlan>,
    pub warnings: Vec<Diagnostic>,
}

/// Parses and checks `source` against `symbols`. Shared by offline
/// validation and registration so both accept exactly the same inputs.
pub fn prepare_model(source: &str, symbols: &SymbolTable, model_id: &str) -> Result<PreparedModel, Vec<Diagnostic>> {
    let model = parse(source)?;
    let checked = analyze(&model, symbols)?;
    let mut next = symbols.clone();
    next.insert_model(&checked, model_id);
    let mut plans = Vec::new();
    let mut warnings = Vec::new();
    for target in checked.virtual_types() {
        let (plan, diags) = build_plan(target, &checked.rules, &next)
            .expect("virtual types of a checked model are in its symbol table");
        plans.push(plan);
        warnings.extend(diags);
    }
    Ok(PreparedModel {
        checked,
        symbols: next,
        plans,
        warnings,
    })
}

/// Immutable view of all registered models.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    pub symbols: SymbolTable,
    pub adapters: Vec<Arc<AdapterDescriptor>>,
    plans: HashMap<String, MappingPlan>,
}

impl Registry {
    pub fn def(&self, qualified: &str) -> Option<&TypeDef> {
        self.symbols.get(qualified).map(|s| &s.def)
    }

    pub fn plan(&self, qualified: &str) -> Option<&MappingPlan> {
        self.plans.get(qualified)
    }

    pub fn is_virtual(&self, qualified: &str) -> bool {
        self.plans.contains_key(qualified)
    }

    pub fn adapter(&self, model_id: &str) -> Option<&Arc<AdapterDescriptor>> {
        self.adapters.iter().find(|a| a.model_id == model_id)
    }

    /// Exact qualified name, or else the only type whose name ends in
    /// `.name`.
    pub fn resolve_type(&self, name: &str) -> ApiResult<String> {
        if self.symbols.contains(name) {
            return Ok(name.to_owned());
        }
        let suffix = format!(".{name}");
        let matches: Vec<&str> = self
            .symbols
            .in_order()
            .into_iter()
            .map(|s| s.qualified_name.as_str())
            .filter(|q| q.ends_with(&suffix))
            .collect();
        match matches.as_slice() {
            [one] => Ok((*one).to_owned()),
            [] => Err(ApiError::not_found(format!("unknown type `{name}`"))),
            many => Err(ApiError::not_found(format!(
                "type name `{name}` is ambiguous: {}",
                many.join(", ")
            ))),
        }
    }

    fn with_model(&self, prepared: PreparedModel, adapter: AdapterDescriptor) -> Self {
        let mut plans = self.plans.clone();
        for plan in prepared.plans {
            plans.insert(plan.target_type.clone(), plan);
        }
        let mut adapters = self.adapters.clone();
        adapters.push(Arc::new(adapter));
        Self {
            symbols: prepared.symbols,
            adapters,
            plans,
        }
    }
}

pub fn instances_path(qualified: &str) -> String {
    format!("/v1/types/{qualified}/instances")
}

fn describe(prepared: &PreparedModel, model_id: &str, registered_at: Timestamp) -> AdapterDescriptor {
    let model = &prepared.checked.model;
    let virtual_types: Vec<String> = prepared.plans.iter().map(|p| p.target_type.clone()).collect();
    let mut qualified_types = Vec::new();
    let mut endpoints = Vec::new();
    for t in model.all_types() {
        let path = instances_path(&t.qualified_name);
        endpoints.push(Endpoint {
            method: "GET",
            path: path.clone(),
        });
        if !virtual_types.contains(&t.qualified_name) {
            endpoints.push(Endpoint { method: "POST", path });
        }
        qualified_types.push(t.qualified_name.clone());
    }
    AdapterDescriptor {
        model_id: model_id.to_owned(),
        package: model.package_name(),
        qualified_types,
        virtual_types,
        mapping_plans: prepared.plans.clone(),
        endpoints,
        registered_at: registered_at.to_iso(),
        model: model.clone(),
    }
}

/// Bounds of a history read. Open ends are unbounded; `at` defaults to now.
#[derive(Debug, Clone, Copy, Default)]
pub struct HistoryWindow {
    pub from: Option<Timestamp>,
    pub to: Option<Timestamp>,
    pub at: Option<Timestamp>,
}

/// Request body of a value append.
#[derive(Debug, Clone)]
pub struct ValueInput {
    pub value: Value,
    pub timestamp: Option<Timestamp>,
    pub expiry: Option<Timestamp>,
}

#[derive(Debug)]
pub struct Engine {
    store: RwLock<Store>,
    registry: RwLock<Arc<Registry>>,
    registering: Mutex<()>,
}

impl Engine {
    /// Wraps a store, rebuilding the registry from the models it recorded.
    pub fn new(store: Store) -> ApiResult<Self> {
        let mut registry = Registry::default();
        for record in store.models() {
            let prepared = prepare_model(&record.source, &registry.symbols, &record.model_id).map_err(|d| {
                ApiError::new(
                    ErrorKind::Internal,
                    format!(
                        "recorded model {} no longer validates: {}",
                        record.model_id,
                        d.first().map(ToString::to_string).unwrap_or_default()
                    ),
                )
            })?;
            let adapter = describe(&prepared, &record.model_id, record.registered_at);
            registry = registry.with_model(prepared, adapter);
        }
        Ok(Self {
            store: RwLock::new(store),
            registry: RwLock::new(Arc::new(registry)),
            registering: Mutex::new(()),
        })
    }

    pub fn registry(&self) -> Arc<Registry> {
        self.registry.read().unwrap_or_else(PoisonError::into_inner).clone()
    }

    pub fn store(&self) -> RwLockReadGuard<'_, Store> {
        self.store.read().unwrap_or_else(PoisonError::into_inner)
    }

    fn store_mut(&self) -> RwLockWriteGuard<'_, Store> {
        self.store.write().unwrap_or_else(PoisonError::into_inner)
    }

    pub fn now(&self) -> Timestamp {
        self.store().now()
    }

    /// Validates and publishes a model. A rejected model changes nothing.
    pub fn register_model(&self, source: &str) -> ApiResult<RegistrationResult> {
        let _serial = self.registering.lock().unwrap_or_else(PoisonError::into_inner);
        let current = self.registry();
        let model_id = format!("m{}", current.adapters.len() + 1);
        let prepared = match prepare_model(source, &current.symbols, &model_id) {
            Ok(p) => p,
            Err(diags) => return Ok(RegistrationResult::rejected(diags)),
        };
        let types = prepared
            .checked
            .model
            .all_types()
            .map(|t| t.qualified_name.clone())
            .collect();
        let registered_at = self.store_mut().register_model(&model_id, source, types)?;
        let adapter = describe(&prepared, &model_id, registered_at);
        let result = RegistrationResult {
            status: RegistrationStatus::Accepted,
            model_id: Some(model_id),
            diagnostics: prepared.warnings.clone(),
            endpoints: adapter.endpoints.clone(),
        };
        let next = current.with_model(prepared, adapter);
        *self.registry.write().unwrap_or_else(PoisonError::into_inner) = Arc::new(next);
        Ok(result)
    }

    pub fn list_models(&self) -> Vec<Arc<AdapterDescriptor>> {
        self.registry().adapters.clone()
    }

    /// The model's text in canonical form.
    pub fn model_text(&self, model_id: &str) -> ApiResult<String> {
        let registry = self.registry();
        let adapter = registry
            .adapter(model_id)
            .ok_or_else(|| ApiError::not_found(format!("unknown model `{model_id}`")))?;
        Ok(pretty_print(&adapter.model))
    }

    /// Stores a concrete-format document as a new instance of `type_name`.
    pub fn ingest(&self, type_name: &str, document: &Value) -> ApiResult<InstanceId> {
        let registry = self.registry();
        let qualified = registry.resolve_type(type_name)?;
        if registry.is_virtual(&qualified) {
            return Err(ApiError::new(
                ErrorKind::Conflict,
                format!("`{qualified}` is a mapped type and cannot be ingested directly"),
            ));
        }
        let def = registry.def(&qualified).expect("resolved type has a definition");
        let instance = decode_document(def, document)?;
        let mut store = self.store_mut();
        let stamp = IngestStamp {
            time: store.now(),
            seq: 0,
        };
        let mut root = to_generic(def, &instance, stamp)?;
        builtins::check_grid_connections(&mut root, &store, stamp.time)
            .map_err(|v| ApiError::unprocessable(v.to_string()))?;
        Ok(store.create_instance(root)?)
    }

    /// All instances of a type in its concrete format. Mapped types are
    /// resolved from their sources.
    pub fn get_instances(
        &self,
        type_name: &str,
        principals: &[String],
        at: Option<Timestamp>,
    ) -> ApiResult<Vec<ConcreteInstance>> {
        let registry = self.registry();
        let qualified = registry.resolve_type(type_name)?;
        let store = self.store();
        let at = at.unwrap_or_else(|| store.now());
        if let Some(plan) = registry.plan(&qualified) {
            return Ok(resolve_mapping(plan, &store, principals, at)?);
        }
        let def = registry.def(&qualified).expect("resolved type has a definition");
        let snapshots = store.query(&Selector::Type(qualified.clone()), principals, at)?;
        Ok(snapshots
            .iter()
            .map(|c| from_generic(def, c, at, MissingEntries::Omit))
            .collect::<Result<_, _>>()?)
    }

    pub fn get_instance(
        &self,
        type_name: &str,
        instance_id: &str,
        principals: &[String],
        at: Option<Timestamp>,
    ) -> ApiResult<ConcreteInstance> {
        let registry = self.registry();
        let qualified = registry.resolve_type(type_name)?;
        let store = self.store();
        let at = at.unwrap_or_else(|| store.now());
        let missing = || ApiError::not_found(format!("no `{qualified}` instance `{instance_id}`"));
        if let Some(plan) = registry.plan(&qualified) {
            return resolve_mapping(plan, &store, principals, at)?
                .into_iter()
                .find(|i| i.instance_id.as_ref().is_some_and(|id| id.0 == instance_id))
                .ok_or_else(missing);
        }
        let def = registry.def(&qualified).expect("resolved type has a definition");
        let category = store
            .instance(&InstanceId(instance_id.to_owned()))
            .filter(|c| c.source_type == qualified)
            .ok_or_else(missing)?;
        let snapshot = visible_snapshot(category, principals, at);
        Ok(from_generic(def, &snapshot, at, MissingEntries::Omit)?)
    }

    /// Resolves an entry address and checks that it names a scalar field of
    /// a stored instance of a native type.
    fn entry_address(
        &self,
        registry: &Registry,
        store: &Store,
        type_name: &str,
        instance_id: &str,
        field: &str,
    ) -> ApiResult<(InstanceId, Vec<String>, nim_ndf::FieldType)> {
        let qualified = registry.resolve_type(type_name)?;
        if registry.is_virtual(&qualified) {
            return Err(ApiError::new(
                ErrorKind::Conflict,
                format!("`{qualified}` is a mapped type; its entries live in the source instances"),
            ));
        }
        let def = registry.def(&qualified).expect("resolved type has a definition");
        let id = InstanceId(instance_id.to_owned());
        if !store.instance(&id).is_some_and(|c| c.source_type == qualified) {
            return Err(ApiError::not_found(format!(
                "no `{qualified}` instance `{instance_id}`"
            )));
        }
        let field_type = def
            .field(field)
            .ok_or_else(|| ApiError::not_found(format!("`{qualified}` has no field `{field}`")))?
            .field_type;
        Ok((id, vec![field.to_owned()], field_type))
    }

    fn readable_entry<'s>(
        &self,
        store: &'s Store,
        type_name: &str,
        instance_id: &str,
        field: &str,
        principals: &[String],
    ) -> ApiResult<&'s Entry> {
        let registry = self.registry();
        let (id, path, _) = self.entry_address(&registry, store, type_name, instance_id, field)?;
        let entry = store.entry(&id, &path)?;
        if check_access(&entry.policy, principals) == Decision::Deny {
            return Err(ApiError::new(
                ErrorKind::Forbidden,
                format!("entry `{field}` is not readable with the given principals"),
            ));
        }
        Ok(entry)
    }

    pub fn append_value(
        &self,
        type_name: &str,
        instance_id: &str,
        field: &str,
        input: &ValueInput,
    ) -> ApiResult<AppendOutcome> {
        let registry = self.registry();
        let mut store = self.store_mut();
        let (id, path, field_type) = self.entry_address(&registry, &store, type_name, instance_id, field)?;
        let value = decode_scalar(field_type, &input.value)
            .map_err(ApiError::unprocessable)?
            .ok_or_else(|| ApiError::unprocessable("`value` is required"))?;
        Ok(store.append_value(&id, &path, value, input.timestamp, input.expiry)?)
    }

    pub fn history(
        &self,
        type_name: &str,
        instance_id: &str,
        field: &str,
        principals: &[String],
        window: HistoryWindow,
    ) -> ApiResult<Vec<TimedValue>> {
        let store = self.store();
        let entry = self.readable_entry(&store, type_name, instance_id, field, principals)?;
        let at = window.at.unwrap_or_else(|| store.now());
        let from = window.from.unwrap_or(Timestamp::MIN);
        let values = entry.history(from, window.to.unwrap_or(Timestamp::MAX), at)?;
        Ok(values.into_iter().cloned().collect())
    }

    pub fn add_forecast(
        &self,
        type_name: &str,
        instance_id: &str,
        field: &str,
        source: &str,
        points: &[(Timestamp, Value)],
    ) -> ApiResult<()> {
        let registry = self.registry();
        let mut store = self.store_mut();
        let (id, path, field_type) = self.entry_address(&registry, &store, type_name, instance_id, field)?;
        let points = points
            .iter()
            .map(|(t, v)| match decode_scalar(field_type, v) {
                Ok(Some(s)) => Ok((*t, s)),
                Ok(None) => Err(ApiError::unprocessable("forecast point without a value")),
                Err(m) => Err(ApiError::unprocessable(m)),
            })
            .collect::<ApiResult<Vec<_>>>()?;
        Ok(store.add_forecast(&id, &path, source, points)?)
    }

    /// Forecasts of an entry in creation order, optionally of one source.
    pub fn forecasts(
        &self,
        type_name: &str,
        instance_id: &str,
        field: &str,
        principals: &[String],
        source: Option<&str>,
    ) -> ApiResult<Vec<Forecast>> {
        let store = self.store();
        let entry = self.readable_entry(&store, type_name, instance_id, field, principals)?;
        let mut out: Vec<Forecast> = entry
            .forecasts
            .iter()
            .filter(|f| source.is_none_or(|s| f.source_id == s))
            .cloned()
            .collect();
        out.sort_by_key(|f| f.created_at);
        Ok(out)
    }

    pub fn purge(&self) -> ApiResult<usize> {
        let mut store = self.store_mut();
        let now = store.now();
        Ok(store.purge_expired(now)?)
    }

    /// The generic tree of every stored instance, serialized canonically.
    pub fn dump_components(&self) -> String {
        #[derive(Serialize)]
        #[serde(rename_all = "camelCase")]
        struct Dump<'a> {
            last_seq: u64,
            instances: &'a [nim_core::Category],
        }
        let store = self.store();
        serde_json::to_string(&Dump {
            last_seq: store.state().last_seq,
            instances: store.roots(),
        })
        .expect("component trees always serialize")
    }
}
