use std::collections::BTreeMap;

use thiserror::Error;

use crate::ast::{NdfModel, TypeDef};
use crate::check::{CheckedModel, ResolvedRule};

/// One registered type.
#[derive(Debug, Clone, PartialEq)]
pub struct Symbol {
    pub qualified_name: String,
    pub package: String,
    pub model_id: String,
    pub def: TypeDef,
    /// Global registration order (model order, then declaration pre-order).
    pub order: usize,
    pub top_level: bool,
    /// Rules targeting this type. Non-empty iff the type is virtual.
    pub rules: Vec<ResolvedRule>,
}

impl Symbol {
    pub fn is_virtual(&self) -> bool {
        !self.rules.is_empty()
    }
}

/// All types of the registered models, keyed by qualified name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SymbolTable {
    symbols: BTreeMap<String, Symbol>,
    next_order: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("unresolved type `{0}`")]
    Unresolved(String),
    #[error("ambiguous type `{name}`: candidates {}", candidates.join(", "))]
    Ambiguous { name: String, candidates: Vec<String> },
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, qualified: &str) -> Option<&Symbol> {
        self.symbols.get(qualified)
    }

    pub fn contains(&self, qualified: &str) -> bool {
        self.symbols.contains_key(qualified)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Symbols in registration order.
    pub fn in_order(&self) -> Vec<&Symbol> {
        let mut all: Vec<&Symbol> = self.symbols.values().collect();
        all.sort_by_key(|s| s.order);
        all
    }

    /// Adds every type of an already checked model. The caller is
    /// responsible for having run the context conditions against `self`.
    pub fn insert_model(&mut self, checked: &CheckedModel, model_id: &str) {
        let model = &checked.model;
        let package = model.package_name();
        for top in &model.types {
            for def in top.walk() {
                let rules = checked
                    .rules
                    .iter()
                    .filter(|r| r.target_type == def.qualified_name)
                    .cloned()
                    .collect();
                let symbol = Symbol {
                    qualified_name: def.qualified_name.clone(),
                    package: package.clone(),
                    model_id: model_id.to_owned(),
                    def: def.clone(),
                    order: self.next_order,
                    top_level: std::ptr::eq(def, top),
                    rules,
                };
                self.next_order += 1;
                self.symbols.insert(def.qualified_name.clone(), symbol);
            }
        }
    }

    /// Registry candidates for `name`: the exact qualified name if present,
    /// otherwise every type whose qualified name ends in `.name`.
    fn global_candidates(&self, name: &str) -> Vec<&str> {
        if let Some(sym) = self.symbols.get(name) {
            return vec![sym.qualified_name.as_str()];
        }
        let suffix = format!(".{name}");
        self.symbols
            .keys()
            .filter(|q| q.ends_with(&suffix))
            .map(String::as_str)
            .collect()
    }
}

/// Resolves a possibly qualified type name as seen from `context`:
/// first types of the model itself, then types of the same package in the
/// registry, then a globally unique match in the registry.
pub fn resolve_name(name: &str, context: &NdfModel, symbols: &SymbolTable) -> Result<String, ResolveError> {
    let package = context.package_name();
    let in_package = if package.is_empty() {
        name.to_owned()
    } else {
        format!("{package}.{name}")
    };

    if let Some(t) = context
        .all_types()
        .find(|t| t.qualified_name == in_package || t.qualified_name == name)
    {
        return Ok(t.qualified_name.clone());
    }
    if symbols.contains(&in_package) {
        return Ok(in_package);
    }
    match symbols.global_candidates(name).as_slice() {
        [] => Err(ResolveError::Unresolved(name.to_owned())),
        [one] => Ok((*one).to_owned()),
        many => Err(ResolveError::Ambiguous {
            name: name.to_owned(),
            candidates: many.iter().map(|s| (*s).to_owned()).collect(),
        }),
    }
}
