use serde_json::Value;

use crate::Format;

fn cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => "-".into(),
        Some(Value::String(s)) => s.clone(),
        Some(Value::Array(items)) => format!("[{}]", items.len()),
        Some(other) => other.to_string(),
    }
}

/// Renders rows as aligned columns. `columns` fixes the leading columns;
/// any other keys follow in sorted order.
pub fn table(rows: &[Value], columns: &[&str]) -> String {
    let mut cols: Vec<String> = columns.iter().map(|c| c.to_string()).collect();
    let mut extra = std::collections::BTreeSet::new();
    for row in rows {
        if let Value::Object(obj) = row {
            for k in obj.keys() {
                if k != "@meta" && !cols.contains(k) {
                    extra.insert(k.clone());
                }
            }
        }
    }
    cols.extend(extra);
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|row| cols.iter().map(|c| cell(row.get(c))).collect())
        .collect();
    let widths: Vec<usize> = cols
        .iter()
        .enumerate()
        .map(|(i, c)| {
            cells
                .iter()
                .map(|r| r[i].chars().count())
                .chain([c.chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |values: &[String]| {
        let padded: Vec<String> = values.iter().zip(&widths).map(|(v, w)| format!("{v:<w$}")).collect();
        padded.join("  ").trim_end().to_string()
    };
    let mut out = line(&cols);
    out.push('\n');
    for r in &cells {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}

pub fn print(format: Format, value: &Value, rows: impl FnOnce(&Value) -> String) {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(value).unwrap_or_default()),
        Format::Table => print!("{}", rows(value)),
    }
}
