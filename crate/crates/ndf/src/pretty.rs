use std::fmt::Write;

use crate::ast::{NdfModel, TypeDef};

const INDENT: &str = "  ";

/// Renders a model as canonical NDF text: package line, then types (fields
/// before nested types), then mapping rules, separated by blank lines.
pub fn pretty_print(model: &NdfModel) -> String {
    let mut blocks = Vec::new();
    if !model.package.is_empty() {
        blocks.push(format!("package {};\n", model.package_name()));
    }
    for t in &model.types {
        let mut out = String::new();
        write_type(&mut out, t, 0);
        blocks.push(out);
    }
    if !model.mappings.is_empty() {
        let mut out = String::new();
        for rule in &model.mappings {
            let sources: Vec<String> = rule.sources.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "{} := {};", rule.target, sources.join(" | "));
        }
        blocks.push(out);
    }
    blocks.join("\n")
}

fn write_type(out: &mut String, t: &TypeDef, depth: usize) {
    let pad = INDENT.repeat(depth);
    let _ = writeln!(out, "{pad}{} {{", t.name);
    for f in &t.fields {
        let _ = writeln!(out, "{pad}{INDENT}{} {};", f.field_type.keyword(), f.name);
    }
    for nested in &t.nested_types {
        write_type(out, nested, depth + 1);
    }
    let _ = writeln!(out, "{pad}}}");
}
