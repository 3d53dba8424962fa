//! Random NDF models for property tests. The text renderer here is written
//! independently of `pretty_print`: it scatters whitespace and comments
//! between tokens and interleaves fields with nested types.

use nim_ndf::{FieldDef, FieldType, MappingRule, NdfModel, Pos, QualifiedField, TypeDef};
use proptest::prelude::*;

const KEYWORDS: [&str; 5] = ["package", "String", "Number", "Boolean", "Timestamp"];
pub const MAX_TYPES: usize = 10;
pub const MAX_DEPTH: usize = 3;

#[derive(Debug, Clone)]
pub struct RawType {
    pub name: String,
    pub fields: Vec<(String, FieldType)>,
    pub children: Vec<RawType>,
}

fn ident() -> impl Strategy<Value = String> {
    "[A-Za-z_][A-Za-z0-9_]{0,7}".prop_filter("keyword", |s| !KEYWORDS.contains(&s.as_str()))
}

fn field_type() -> impl Strategy<Value = FieldType> {
    prop::sample::select(FieldType::ALL.to_vec())
}

fn raw_type(depth: usize) -> BoxedStrategy<RawType> {
    let fields = prop::collection::vec((ident(), field_type()), 0..4);
    if depth >= MAX_DEPTH {
        (ident(), fields)
            .prop_map(|(name, fields)| RawType {
                name,
                fields,
                children: vec![],
            })
            .boxed()
    } else {
        (ident(), fields, prop::collection::vec(raw_type(depth + 1), 0..3))
            .prop_map(|(name, fields, children)| RawType { name, fields, children })
            .boxed()
    }
}

fn prune(types: &mut Vec<RawType>, budget: &mut usize) {
    types.retain_mut(|t| {
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        prune(&mut t.children, budget);
        true
    });
}

fn build(raw: &RawType, prefix: &[String]) -> TypeDef {
    let mut path = prefix.to_vec();
    path.push(raw.name.clone());
    TypeDef {
        name: raw.name.clone(),
        fields: raw
            .fields
            .iter()
            .map(|(n, t)| FieldDef {
                name: n.clone(),
                field_type: *t,
                pos: Pos::default(),
            })
            .collect(),
        nested_types: raw.children.iter().map(|c| build(c, &path)).collect(),
        qualified_name: path.join("."),
        pos: Pos::default(),
    }
}

fn qfield() -> impl Strategy<Value = QualifiedField> {
    (prop::collection::vec(ident(), 1..4), ident()).prop_map(|(type_path, field)| QualifiedField {
        type_path,
        field,
        pos: Pos::default(),
    })
}

fn mapping() -> impl Strategy<Value = MappingRule> {
    (qfield(), prop::collection::vec(qfield(), 1..4)).prop_map(|(target, sources)| MappingRule {
        target,
        sources,
        pos: Pos::default(),
    })
}

/// A syntactically valid model (depth ≤ 3, ≤ 10 types) and its AST.
pub fn arb_model() -> impl Strategy<Value = NdfModel> {
    (
        prop::collection::vec(ident(), 0..3),
        prop::collection::vec(raw_type(1), 0..5),
        prop::collection::vec(mapping(), 0..4),
    )
        .prop_map(|(package, mut raw, mappings)| {
            let mut budget = MAX_TYPES;
            prune(&mut raw, &mut budget);
            NdfModel {
                types: raw.iter().map(|r| build(r, &package)).collect(),
                package,
                mappings,
                source_text: String::new(),
                model_id: None,
            }
        })
}

/// Renders `model` with layout noise drawn from `noise`.
pub fn render_noisy(model: &NdfModel, noise: &[u8]) -> String {
    let mut r = Renderer {
        out: String::new(),
        noise,
        i: 0,
    };
    if !model.package.is_empty() {
        r.tok("package");
        r.gap_required();
        r.qname(&model.package);
        r.tok(";");
    }
    // Interleave types and mappings; the AST keeps them in separate lists.
    let (mut ti, mut mi) = (0, 0);
    while ti < model.types.len() || mi < model.mappings.len() {
        if mi >= model.mappings.len() || (ti < model.types.len() && r.coin()) {
            r.typedef(&model.types[ti]);
            ti += 1;
        } else {
            let m = &model.mappings[mi];
            r.qfield(&m.target);
            r.tok(":=");
            for (k, s) in m.sources.iter().enumerate() {
                if k > 0 {
                    r.tok("|");
                }
                r.qfield(s);
            }
            r.tok(";");
            mi += 1;
        }
    }
    r.gap();
    r.out
}

struct Renderer<'a> {
    out: String,
    noise: &'a [u8],
    i: usize,
}

impl Renderer<'_> {
    fn next(&mut self) -> u8 {
        if self.noise.is_empty() {
            return 0;
        }
        let b = self.noise[self.i % self.noise.len()];
        self.i += 1;
        b
    }

    fn coin(&mut self) -> bool {
        self.next().is_multiple_of(2)
    }

    fn gap(&mut self) {
        match self.next() % 6 {
            0 | 1 => {}
            2 => self.out.push(' '),
            3 => self.out.push_str("\n\t"),
            4 => self.out.push_str("  \r\n"),
            _ => self.out.push_str(" // noise { ; := |\n"),
        }
    }

    fn gap_required(&mut self) {
        self.out.push(' ');
        self.gap();
    }

    fn tok(&mut self, t: &str) {
        self.gap();
        self.out.push_str(t);
    }

    fn word(&mut self, w: &str) {
        // Separate adjacent words.
        if self.out.ends_with(|c: char| c.is_ascii_alphanumeric() || c == '_') {
            self.out.push(' ');
        }
        self.tok(w);
    }

    fn qname(&mut self, parts: &[String]) {
        for (k, p) in parts.iter().enumerate() {
            if k > 0 {
                self.tok(".");
            }
            self.word(p);
        }
    }

    fn qfield(&mut self, q: &QualifiedField) {
        self.qname(&q.type_path);
        self.tok(".");
        self.word(&q.field);
    }

    fn typedef(&mut self, t: &TypeDef) {
        self.word(&t.name);
        self.tok("{");
        let (mut fi, mut ni) = (0, 0);
        while fi < t.fields.len() || ni < t.nested_types.len() {
            if ni >= t.nested_types.len() || (fi < t.fields.len() && self.coin()) {
                let f = &t.fields[fi];
                self.word(f.field_type.keyword());
                self.word(&f.name);
                self.tok(";");
                fi += 1;
            } else {
                self.typedef(&t.nested_types[ni]);
                ni += 1;
            }
        }
        self.tok("}");
    }
}
