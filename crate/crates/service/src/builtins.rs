//! The neighbourhood information model shipped with the service, and its
//! grid-connection rule.

use std::collections::HashSet;

use nim_core::{Category, ComponentRef, ConcreteInstance, InstanceId, Scalar, Store, Timestamp};
use nim_ndf::SymbolTable;

use crate::engine::{prepare_model, Engine, RegistrationResult, Registry};
use crate::error::ApiResult;

pub const PACKAGE: &str = "cooperate.nim";

/// Builtin model files in registration order.
pub const BUILTIN_MODELS: &[(&str, &str)] = &[
    (
        "01_neighbourhood.ndf",
        include_str!("../../../models/builtin/01_neighbourhood.ndf"),
    ),
    (
        "02_energy_element.ndf",
        include_str!("../../../models/builtin/02_energy_element.ndf"),
    ),
];

pub const NEIGHBOURHOOD: &str = "cooperate.nim.Neighbourhood";
pub const GRID_CONNECTION: &str = "cooperate.nim.Neighbourhood.EnergyGridConnection";
pub const ENERGY_ELEMENT: &str = "cooperate.nim.EnergyElement";
pub const ENERGY_ELEMENTS: [&str; 4] = [
    "cooperate.nim.Neighbourhood.PublicLighting",
    "cooperate.nim.Neighbourhood.Building",
    "cooperate.nim.Neighbourhood.TechnicalSystem",
    "cooperate.nim.Neighbourhood.ElectricVehicle",
];

/// Registers every builtin model in order. On a registry that already
/// holds them, each one is rejected and nothing changes.
pub fn load_builtins(engine: &Engine) -> ApiResult<Vec<RegistrationResult>> {
    BUILTIN_MODELS
        .iter()
        .map(|(_, source)| engine.register_model(source))
        .collect()
}

pub fn builtins_loaded(registry: &Registry) -> bool {
    registry.symbols.contains(NEIGHBOURHOOD)
}

/// Symbol table holding just the builtin models, for offline checks.
pub fn builtin_symbols() -> SymbolTable {
    let mut symbols = SymbolTable::new();
    for (i, (name, source)) in BUILTIN_MODELS.iter().enumerate() {
        let prepared = prepare_model(source, &symbols, &format!("m{}", i + 1))
            .unwrap_or_else(|d| panic!("builtin model {name} is invalid: {d:?}"));
        symbols = prepared.symbols;
    }
    symbols
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GridViolation {
    #[error("a grid connection links exactly two energy elements, found {0} links")]
    Arity(usize),
    #[error("link {0} of the grid connection names no element")]
    MissingElement(usize),
    #[error("`{0}` is not an energy element")]
    Dangling(String),
    #[error("a grid connection cannot link `{0}` to itself")]
    SelfPair(String),
}

fn check_links(links: &[Option<&str>], is_energy_element: impl Fn(&str) -> bool) -> Result<[String; 2], GridViolation> {
    let [a, b] = links else {
        return Err(GridViolation::Arity(links.len()));
    };
    let a = a.ok_or(GridViolation::MissingElement(0))?;
    let b = b.ok_or(GridViolation::MissingElement(1))?;
    if a == b {
        return Err(GridViolation::SelfPair(a.to_owned()));
    }
    for id in [a, b] {
        if !is_energy_element(id) {
            return Err(GridViolation::Dangling(id.to_owned()));
        }
    }
    Ok([a.to_owned(), b.to_owned()])
}

/// Accepts a grid connection iff its links name exactly two distinct
/// energy elements. Returns their ids.
pub fn validate_grid_connection(
    instance: &ConcreteInstance,
    is_energy_element: impl Fn(&str) -> bool,
) -> Result<[String; 2], GridViolation> {
    let links: Vec<Option<&str>> = instance
        .nested("Link")
        .iter()
        .map(|link| match link.scalar("element") {
            Some(Scalar::Text(id)) => Some(id.as_str()),
            _ => None,
        })
        .collect();
    check_links(&links, is_energy_element)
}

/// Applies the grid-connection rule to every connection in a tree about to
/// be stored, and records the linked ids as the connection's references.
/// Linked elements may be stored already or be part of the same tree.
pub fn check_grid_connections(root: &mut Category, store: &Store, at: Timestamp) -> Result<(), GridViolation> {
    let mut local = HashSet::new();
    let mut has_connection = false;
    root.walk(&mut |_, c| {
        if let ComponentRef::Category(cat) = c {
            has_connection |= cat.source_type == GRID_CONNECTION;
            if ENERGY_ELEMENTS.contains(&cat.source_type.as_str()) {
                if let Some(id) = &cat.instance_id {
                    local.insert(id.0.clone());
                }
            }
        }
    });
    if !has_connection {
        return Ok(());
    }
    let is_energy_element = |id: &str| {
        local.contains(id)
            || store
                .instance(&InstanceId(id.to_owned()))
                .is_some_and(|c| ENERGY_ELEMENTS.contains(&c.source_type.as_str()))
    };
    let mut problem = None;
    root.walk_categories_mut(&mut |cat| {
        if problem.is_some() || cat.source_type != GRID_CONNECTION {
            return;
        }
        let links: Vec<Option<String>> = cat
            .category("link")
            .map(|coll| {
                coll.children
                    .iter()
                    .filter_map(|c| c.as_category())
                    .map(|link| {
                        match link
                            .entry("element")
                            .and_then(|e| e.current_value(at))
                            .map(|v| &v.value)
                        {
                            Some(Scalar::Text(id)) => Some(id.clone()),
                            _ => None,
                        }
                    })
                    .collect()
            })
            .unwrap_or_default();
        let links: Vec<Option<&str>> = links.iter().map(|l| l.as_deref()).collect();
        match check_links(&links, is_energy_element) {
            Ok(ids) => cat.references = ids.into_iter().map(InstanceId).collect(),
            Err(e) => problem = Some(e),
        }
    });
    problem.map_or(Ok(()), Err)
}
