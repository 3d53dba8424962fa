//! Context conditions, checked after parsing against the symbol table of
//! already registered models:
//!
//! * CC1 type names are unique within their package, registry included
//! * CC2 member names (fields and nested types) are unique within a type,
//!   also once nested type names are lowercased
//! * CC3 a mapping targets a field of a top-level type of this model, at
//!   most one rule per target field
//! * CC4 every mapping source type and field exists
//! * CC5 source and target field types are equal
//! * CC6 the target → source dependency graph is acyclic
//! * CC7 a mapped type is virtual: every field is covered by a rule and it
//!   has no nested types

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::ast::{FieldType, NdfModel, Pos, QualifiedField, TypeDef};
use crate::diagnostic::{Code, Diagnostic};
use crate::symbols::{resolve_name, SymbolTable};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedSource {
    pub type_name: String,
    pub field: String,
}

/// A mapping rule with every type reference replaced by its qualified name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedRule {
    pub target_type: String,
    pub target_field: String,
    pub sources: Vec<ResolvedSource>,
    #[serde(skip)]
    pub pos: Pos,
}

/// A model that passed all context conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckedModel {
    pub model: NdfModel,
    pub rules: Vec<ResolvedRule>,
}

impl CheckedModel {
    /// Qualified names of the types targeted by mapping rules.
    pub fn virtual_types(&self) -> BTreeSet<&str> {
        self.rules.iter().map(|r| r.target_type.as_str()).collect()
    }
}

/// Returns every context-condition violation; empty iff the model is valid
/// against `symbols`.
pub fn check_context_conditions(model: &NdfModel, symbols: &SymbolTable) -> Vec<Diagnostic> {
    match analyze(model, symbols) {
        Ok(_) => Vec::new(),
        Err(diags) => diags,
    }
}

/// Checks the context conditions and, if they hold, returns the model with
/// its mapping rules resolved.
pub fn analyze(model: &NdfModel, symbols: &SymbolTable) -> Result<CheckedModel, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    check_type_uniqueness(model, symbols, &mut diags);
    for t in model.all_types() {
        check_member_uniqueness(t, &mut diags);
    }
    let mut targets = Targets::new();
    let rules = resolve_rules(model, symbols, &mut targets, &mut diags);
    check_acyclic(&rules, symbols, &mut diags);
    check_virtual_coverage(model, &targets, &mut diags);

    if diags.is_empty() {
        Ok(CheckedModel {
            model: model.clone(),
            rules: rules.into_iter().map(|(rule, _)| rule).collect(),
        })
    } else {
        diags.sort_by_key(|d| (d.line, d.column, d.code));
        Err(diags)
    }
}

fn check_type_uniqueness(model: &NdfModel, symbols: &SymbolTable, diags: &mut Vec<Diagnostic>) {
    let mut seen = HashSet::new();
    for t in model.all_types() {
        if !seen.insert(t.qualified_name.as_str()) {
            diags.push(Diagnostic::error(
                Code::Cc1,
                t.pos,
                format!("type `{}` is defined more than once", t.qualified_name),
            ));
        } else if let Some(existing) = symbols.get(&t.qualified_name) {
            diags.push(Diagnostic::error(
                Code::Cc1,
                t.pos,
                format!(
                    "type `{}` is already registered by model {}",
                    t.qualified_name, existing.model_id
                ),
            ));
        }
    }
}

fn check_member_uniqueness(t: &TypeDef, diags: &mut Vec<Diagnostic>) {
    // A nested type is stored under its lowercased name, next to the
    // entries named after the fields, so both spellings must stay distinct.
    let mut members: Vec<(&str, String, Pos)> = t
        .fields
        .iter()
        .map(|f| (f.name.as_str(), f.name.clone(), f.pos))
        .chain(
            t.nested_types
                .iter()
                .map(|n| (n.name.as_str(), n.name.to_lowercase(), n.pos)),
        )
        .collect();
    members.sort_by_key(|(_, _, pos)| *pos);
    let mut names = HashSet::new();
    let mut stored = HashSet::new();
    for (name, stored_name, pos) in members {
        if !names.insert(name) {
            diags.push(Diagnostic::error(
                Code::Cc2,
                pos,
                format!("duplicate member `{name}` in type `{}`", t.qualified_name),
            ));
        } else if !stored.insert(stored_name.clone()) {
            diags.push(Diagnostic::error(
                Code::Cc2,
                pos,
                format!(
                    "member `{name}` in type `{}` clashes with another member named `{stored_name}` when stored",
                    t.qualified_name
                ),
            ));
        }
    }
}

fn field_type_of(def: &TypeDef, field: &str) -> Option<FieldType> {
    def.field(field).map(|f| f.field_type)
}

/// Local target types mapped to the fields that have a rule. A type whose
/// rule names a missing field is still recorded: it is meant to be virtual.
type Targets = BTreeMap<String, BTreeSet<String>>;

/// Resolves targets (CC3) and sources (CC4) and compares field types (CC5).
/// Returns the rules whose target and every source resolved, paired with
/// the target field type.
fn resolve_rules(
    model: &NdfModel,
    symbols: &SymbolTable,
    targets: &mut Targets,
    diags: &mut Vec<Diagnostic>,
) -> Vec<(ResolvedRule, FieldType)> {
    let package = model.package_name();
    let local_type = |q: &QualifiedField| {
        let name = q.type_name();
        let in_package = if package.is_empty() {
            name.clone()
        } else {
            format!("{package}.{name}")
        };
        model
            .types
            .iter()
            .find(|t| t.qualified_name == in_package || t.qualified_name == name)
    };

    let mut out = Vec::new();
    for rule in &model.mappings {
        let target = &rule.target;
        let Some(target_def) = local_type(target) else {
            let nested = model
                .all_types()
                .any(|t| t.qualified_name.ends_with(&format!(".{}", target.type_name())));
            let message = if nested {
                format!("mapping target `{}` must be a top-level type", target.type_name())
            } else {
                format!(
                    "mapping target type `{}` is not defined in this model",
                    target.type_name()
                )
            };
            diags.push(Diagnostic::error(Code::Cc3, target.pos, message));
            continue;
        };
        let covered = targets.entry(target_def.qualified_name.clone()).or_default();
        let Some(target_type) = field_type_of(target_def, &target.field) else {
            diags.push(Diagnostic::error(
                Code::Cc3,
                target.pos,
                format!("`{}` has no field `{}`", target_def.qualified_name, target.field),
            ));
            continue;
        };
        if !covered.insert(target.field.clone()) {
            diags.push(Diagnostic::error(
                Code::Cc3,
                target.pos,
                format!("more than one mapping rule for `{target}`"),
            ));
            continue;
        }

        let mut sources = Vec::new();
        let mut complete = true;
        for src in &rule.sources {
            let qualified = match resolve_name(&src.type_name(), model, symbols) {
                Ok(q) => q,
                Err(e) => {
                    diags.push(Diagnostic::error(Code::Cc4, src.pos, e.to_string()));
                    complete = false;
                    continue;
                }
            };
            let src_def = model
                .find_type(&qualified)
                .or_else(|| symbols.get(&qualified).map(|s| &s.def));
            let Some(src_type) = src_def.and_then(|d| field_type_of(d, &src.field)) else {
                diags.push(Diagnostic::error(
                    Code::Cc4,
                    src.pos,
                    format!("`{qualified}` has no field `{}`", src.field),
                ));
                complete = false;
                continue;
            };
            if src_type != target_type {
                diags.push(Diagnostic::error(
                    Code::Cc5,
                    src.pos,
                    format!("`{src}` is {src_type} but `{target}` is {target_type}"),
                ));
                complete = false;
                continue;
            }
            sources.push(ResolvedSource {
                type_name: qualified,
                field: src.field.clone(),
            });
        }
        if complete {
            out.push((
                ResolvedRule {
                    target_type: target_def.qualified_name.clone(),
                    target_field: target.field.clone(),
                    sources,
                    pos: rule.pos,
                },
                target_type,
            ));
        }
    }
    out
}

fn check_acyclic(rules: &[(ResolvedRule, FieldType)], symbols: &SymbolTable, diags: &mut Vec<Diagnostic>) {
    let mut graph: HashMap<&str, BTreeSet<&str>> = HashMap::new();
    let registry_rules = symbols.in_order().into_iter().flat_map(|s| s.rules.iter());
    for rule in rules.iter().map(|(r, _)| r).chain(registry_rules) {
        let edges = graph.entry(rule.target_type.as_str()).or_default();
        edges.extend(rule.sources.iter().map(|s| s.type_name.as_str()));
    }

    let reaches = |from: &str, to: &str| {
        let mut queue = VecDeque::from([from]);
        let mut visited = HashSet::new();
        while let Some(node) = queue.pop_front() {
            if node == to {
                return true;
            }
            if visited.insert(node) {
                if let Some(next) = graph.get(node) {
                    queue.extend(next.iter().copied());
                }
            }
        }
        false
    };

    for (rule, _) in rules {
        let cyclic = rule.sources.iter().find(|s| reaches(&s.type_name, &rule.target_type));
        if let Some(src) = cyclic {
            diags.push(Diagnostic::error(
                Code::Cc6,
                rule.pos,
                format!(
                    "mapping `{}.{}` depends on itself through `{}`",
                    rule.target_type, rule.target_field, src.type_name
                ),
            ));
        }
    }
}

fn check_virtual_coverage(model: &NdfModel, targets: &Targets, diags: &mut Vec<Diagnostic>) {
    for t in &model.types {
        let Some(covered) = targets.get(&t.qualified_name) else {
            continue;
        };
        for f in &t.fields {
            if !covered.contains(&f.name) {
                diags.push(Diagnostic::error(
                    Code::Cc7,
                    f.pos,
                    format!(
                        "`{}` is a mapping target but field `{}` has no mapping rule",
                        t.qualified_name, f.name
                    ),
                ));
            }
        }
        for n in &t.nested_types {
            diags.push(Diagnostic::error(
                Code::Cc7,
                n.pos,
                format!(
                    "`{}` is a mapping target and cannot contain nested type `{}`",
                    t.qualified_name, n.name
                ),
            ));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_type_names_clash_case_insensitively() {
        for src in ["T { String room; Room { } }", "T { Room { } ROOM { } }"] {
            let codes = codes_of(src);
            assert_eq!(codes, vec![Code::Cc2], "{src}");
        }
        assert!(codes_of("T { String rooms; Room { } }").is_empty());
    }

    fn codes_of(src: &str) -> Vec<Code> {
        check_context_conditions(&crate::parse(src).unwrap(), &SymbolTable::new())
            .into_iter()
            .map(|d| d.code)
            .collect()
    }
    use crate::parse;

    const ROOM: &str = "Room {\n  String roomName;\n}\n";
    const ANOTHER_ROOM: &str = "AnotherRoom {\n  String roomID;\n  Number surface;\n}\n";
    const STANDARD_ROOM: &str = "StandardRoom {\n  String identifier;\n}\n\nStandardRoom.identifier := Room.roomName |\n  AnotherRoom.roomID;\n";

    fn table(sources: &[&str]) -> SymbolTable {
        let mut t = SymbolTable::new();
        for (i, src) in sources.iter().enumerate() {
            let checked = analyze(&parse(src).unwrap(), &t).unwrap();
            t.insert_model(&checked, &format!("m{i}"));
        }
        t
    }

    fn codes(src: &str, symbols: &SymbolTable) -> Vec<(Code, u32, u32)> {
        check_context_conditions(&parse(src).unwrap(), symbols)
            .into_iter()
            .map(|d| (d.code, d.line, d.column))
            .collect()
    }

    #[test]
    fn room_models_are_clean() {
        let t = table(&[ROOM, ANOTHER_ROOM]);
        let model = parse(STANDARD_ROOM).unwrap();
        assert_eq!(check_context_conditions(&model, &t), vec![]);
        let checked = analyze(&model, &t).unwrap();
        assert_eq!(checked.rules[0].sources.len(), 2);
        assert_eq!(checked.rules[0].sources[1].type_name, "AnotherRoom");
    }

    #[test]
    fn cc1_duplicates() {
        let t = table(&[ROOM]);
        assert_eq!(codes("Room { String x; }", &t), [(Code::Cc1, 1, 1)]);
        assert_eq!(codes("A {}\nA {}", &SymbolTable::new()), [(Code::Cc1, 2, 1)]);
        // Same simple name in another package is fine.
        assert_eq!(codes("package p; Room { String x; }", &t), []);
    }

    #[test]
    fn cc2_duplicate_members() {
        let empty = SymbolTable::new();
        assert_eq!(codes("X { String a; String a; }", &empty), [(Code::Cc2, 1, 22)]);
        assert_eq!(codes("X { String a;\n a {} }", &empty), [(Code::Cc2, 2, 2)]);
    }

    #[test]
    fn cc3_target_must_be_local() {
        let t = table(&[ROOM]);
        assert_eq!(codes("Room.roomName := Room.roomName;", &t), [(Code::Cc3, 1, 1)]);
        assert_eq!(
            codes("S { String a; } S.b := Room.roomName;", &t),
            [(Code::Cc7, 1, 12), (Code::Cc3, 1, 17)]
        );
        assert_eq!(
            codes("S { String a; }\nS.a := Room.roomName;\nS.a := Room.roomName;", &t),
            [(Code::Cc3, 3, 1)]
        );
        assert_eq!(
            codes("B { N { String a; } }\nB.N.a := Room.roomName;", &t),
            [(Code::Cc3, 2, 1)]
        );
    }

    #[test]
    fn cc4_unknown_source() {
        let t = table(&[ROOM]);
        assert_eq!(
            codes("S { String a; }\nS.a := Ghost.roomName;", &t),
            [(Code::Cc4, 2, 8)]
        );
        assert_eq!(codes("S { String a; }\nS.a := Room.nope;", &t), [(Code::Cc4, 2, 8)]);
    }

    #[test]
    fn cc4_ambiguous_source() {
        let t = table(&["package a; Room { String n; }", "package b; Room { String n; }"]);
        assert_eq!(codes("S { String x; } S.x := Room.n;", &t), [(Code::Cc4, 1, 24)]);
        assert_eq!(codes("S { String x; } S.x := a.Room.n;", &t), []);
    }

    #[test]
    fn cc5_type_mismatch() {
        let t = table(&[ANOTHER_ROOM]);
        assert_eq!(
            codes("S { String a; }\nS.a := AnotherRoom.surface;", &t),
            [(Code::Cc5, 2, 8)]
        );
    }

    #[test]
    fn cc6_cycles() {
        let empty = SymbolTable::new();
        assert_eq!(
            codes("A { String x; String y; }\nA.x := A.y;\nA.y := A.x;", &empty)
                .iter()
                .filter(|c| c.0 == Code::Cc6)
                .count(),
            2
        );
        let src = "A { String x; }\nB { String y; }\nA.x := B.y;\nB.y := A.x;";
        assert_eq!(codes(src, &empty), [(Code::Cc6, 3, 1), (Code::Cc6, 4, 1)]);
        // Chains are fine.
        let t = table(&[ROOM]);
        assert_eq!(
            codes(
                "A { String x; }\nB { String y; }\nA.x := B.y;\nB.y := Room.roomName;",
                &t
            ),
            []
        );
    }

    #[test]
    fn cc7_partial_virtual_type() {
        let t = table(&[ROOM]);
        assert_eq!(
            codes("S {\n String a;\n String b;\n}\nS.a := Room.roomName;", &t),
            [(Code::Cc7, 3, 9)]
        );
        assert_eq!(
            codes("S {\n String a;\n N { }\n}\nS.a := Room.roomName;", &t),
            [(Code::Cc7, 3, 2)]
        );
    }

    #[test]
    fn empty_model_is_valid() {
        assert!(analyze(&parse("").unwrap(), &SymbolTable::new()).is_ok());
    }
}
