//! Mapping plans: how instances of each source type appear in the format of
//! a virtual target type, and the resolution of a plan against a store.
//!
//! `|` is a union over populations: every visible instance of every covering
//! source type yields one target instance.

use std::collections::BTreeMap;

use nim_ndf::{Code, Diagnostic, Pos, ResolvedRule, SymbolTable};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::store::{Selector, Store};
use crate::time::Timestamp;
use crate::transform::{ConcreteInstance, FieldValue};

/// Target field → source field, for one source type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SourceMapping {
    pub source_type: String,
    pub fields: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MappingPlan {
    pub target_type: String,
    pub target_fields: Vec<String>,
    /// Covering source types in registration order.
    pub per_source: Vec<SourceMapping>,
}

/// Follows chains through other virtual types down to stored (non-virtual)
/// source fields, keeping left-to-right source order.
fn expand(type_name: &str, field: &str, symbols: &SymbolTable, out: &mut Vec<(String, String)>, depth: usize) {
    let symbol = symbols.get(type_name);
    match symbol.filter(|s| s.is_virtual()) {
        // Chains are acyclic after CC6; the bound only guards corrupted tables.
        Some(s) if depth < 64 => {
            if let Some(rule) = s.rules.iter().find(|r| r.target_field == field) {
                for src in &rule.sources {
                    expand(&src.type_name, &src.field, symbols, out, depth + 1);
                }
            }
        }
        _ => out.push((type_name.to_owned(), field.to_owned())),
    }
}

/// Builds the plan for `target` from its rules. Source types that do not
/// cover every target field are left out and reported; so are duplicate
/// feeds of one target field from one source type (the leftmost wins).
pub fn build_plan(
    target: &str,
    rules: &[ResolvedRule],
    symbols: &SymbolTable,
) -> Result<(MappingPlan, Vec<Diagnostic>)> {
    let target_def = &symbols
        .get(target)
        .ok_or_else(|| Error::UnknownType(target.to_owned()))?
        .def;
    let target_fields: Vec<String> = target_def.fields.iter().map(|f| f.name.clone()).collect();

    let mut diags = Vec::new();
    let mut by_source: BTreeMap<String, (BTreeMap<String, String>, Pos)> = BTreeMap::new();
    for field in &target_fields {
        let Some(rule) = rules
            .iter()
            .find(|r| r.target_type == target && r.target_field == *field)
        else {
            continue;
        };
        let mut feeds = Vec::new();
        for src in &rule.sources {
            expand(&src.type_name, &src.field, symbols, &mut feeds, 0);
        }
        for (source_type, source_field) in feeds {
            let (fields, _) = by_source
                .entry(source_type.clone())
                .or_insert_with(|| (BTreeMap::new(), rule.pos));
            match fields.get(field) {
                None => {
                    fields.insert(field.clone(), source_field);
                }
                Some(existing) if *existing != source_field => diags.push(Diagnostic::warning(
                    Code::MapDuplicateSource,
                    rule.pos,
                    format!(
                        "`{target}.{field}` is fed by both `{source_type}.{existing}` and `{source_type}.{source_field}`; using `{existing}`"
                    ),
                )),
                Some(_) => {}
            }
        }
    }

    let mut per_source = Vec::new();
    for (source_type, (fields, pos)) in by_source {
        if fields.len() == target_fields.len() {
            per_source.push(SourceMapping { source_type, fields });
        } else {
            let missing: Vec<&str> = target_fields
                .iter()
                .filter(|f| !fields.contains_key(*f))
                .map(String::as_str)
                .collect();
            diags.push(Diagnostic::warning(
                Code::MapPartialCoverage,
                pos,
                format!(
                    "`{source_type}` does not map {} of `{target}` and is left out",
                    missing.join(", ")
                ),
            ));
        }
    }
    per_source.sort_by_key(|s| symbols.get(&s.source_type).map_or(usize::MAX, |sym| sym.order));

    Ok((
        MappingPlan {
            target_type: target.to_owned(),
            target_fields,
            per_source,
        },
        diags,
    ))
}

/// All source instances visible to `principals`, converted to the target
/// format: source types in plan order, instances in ingest order. Each
/// result keeps the id of the instance it came from.
pub fn resolve_mapping<S: AsRef<str>>(
    plan: &MappingPlan,
    store: &Store,
    principals: &[S],
    at: Timestamp,
) -> Result<Vec<ConcreteInstance>> {
    let mut out = Vec::new();
    for source in &plan.per_source {
        let snapshots = store.query(&Selector::Type(source.source_type.clone()), principals, at)?;
        for snap in snapshots {
            let mut inst = ConcreteInstance::new(&plan.target_type);
            inst.instance_id = snap.instance_id.clone();
            for (target_field, source_field) in &source.fields {
                let current = snap.entry(source_field).and_then(|e| e.current_value(at));
                if let Some(v) = current {
                    inst.fields
                        .insert(target_field.clone(), FieldValue::Scalar(v.value.clone()));
                }
            }
            out.push(inst);
        }
    }
    Ok(out)
}
