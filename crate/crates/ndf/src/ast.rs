use std::fmt;

use serde::{Deserialize, Serialize};

/// 1-based source position. Columns count characters, not bytes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl Pos {
    pub const fn new(line: u32, column: u32) -> Self {
        Self { line, column }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// The closed set of primitive field types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldType {
    Text,
    Number,
    Boolean,
    Timestamp,
}

impl FieldType {
    pub const ALL: [FieldType; 4] = [
        FieldType::Text,
        FieldType::Number,
        FieldType::Boolean,
        FieldType::Timestamp,
    ];

    /// The keyword that introduces a field of this type.
    pub fn keyword(self) -> &'static str {
        match self {
            FieldType::Text => "String",
            FieldType::Number => "Number",
            FieldType::Boolean => "Boolean",
            FieldType::Timestamp => "Timestamp",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        match word {
            "String" => Some(FieldType::Text),
            "Number" => Some(FieldType::Number),
            "Boolean" => Some(FieldType::Boolean),
            "Timestamp" => Some(FieldType::Timestamp),
            _ => None,
        }
    }
}

impl fmt::Display for FieldType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDef {
    pub name: String,
    pub field_type: FieldType,
    #[serde(skip)]
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeDef {
    pub name: String,
    pub fields: Vec<FieldDef>,
    pub nested_types: Vec<TypeDef>,
    /// Package, enclosing type path and name joined with `.`.
    pub qualified_name: String,
    #[serde(skip)]
    pub pos: Pos,
}

impl TypeDef {
    pub fn field(&self, name: &str) -> Option<&FieldDef> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn nested(&self, name: &str) -> Option<&TypeDef> {
        self.nested_types.iter().find(|t| t.name == name)
    }

    /// Pre-order walk over this type and all nested types.
    pub fn walk(&self) -> impl Iterator<Item = &TypeDef> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let next = stack.pop()?;
            stack.extend(next.nested_types.iter().rev());
            Some(next)
        })
    }
}

/// `Type.path.field` as written in a mapping rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualifiedField {
    /// The type reference, possibly package-qualified or nested.
    pub type_path: Vec<String>,
    pub field: String,
    #[serde(skip)]
    pub pos: Pos,
}

impl QualifiedField {
    pub fn type_name(&self) -> String {
        self.type_path.join(".")
    }
}

impl fmt::Display for QualifiedField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.type_name(), self.field)
    }
}

/// `Target.field := Src1.f1 | Src2.f2;`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingRule {
    pub target: QualifiedField,
    pub sources: Vec<QualifiedField>,
    #[serde(skip)]
    pub pos: Pos,
}

/// The parsed form of one NDF file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NdfModel {
    pub package: Vec<String>,
    pub types: Vec<TypeDef>,
    pub mappings: Vec<MappingRule>,
    #[serde(skip)]
    pub source_text: String,
    /// Assigned on registration.
    #[serde(skip)]
    pub model_id: Option<String>,
}

impl NdfModel {
    pub fn package_name(&self) -> String {
        self.package.join(".")
    }

    /// All types, nested ones included, in declaration pre-order.
    pub fn all_types(&self) -> impl Iterator<Item = &TypeDef> {
        self.types.iter().flat_map(TypeDef::walk)
    }

    pub fn find_type(&self, qualified: &str) -> Option<&TypeDef> {
        self.all_types().find(|t| t.qualified_name == qualified)
    }

    /// Copy with positions, source text and model id cleared, leaving only
    /// the structure.
    pub fn normalized(&self) -> NdfModel {
        fn strip_type(t: &TypeDef) -> TypeDef {
            TypeDef {
                name: t.name.clone(),
                fields: t
                    .fields
                    .iter()
                    .map(|f| FieldDef {
                        pos: Pos::default(),
                        ..f.clone()
                    })
                    .collect(),
                nested_types: t.nested_types.iter().map(strip_type).collect(),
                qualified_name: t.qualified_name.clone(),
                pos: Pos::default(),
            }
        }
        fn strip_field(q: &QualifiedField) -> QualifiedField {
            QualifiedField {
                pos: Pos::default(),
                ..q.clone()
            }
        }
        NdfModel {
            package: self.package.clone(),
            types: self.types.iter().map(strip_type).collect(),
            mappings: self
                .mappings
                .iter()
                .map(|m| MappingRule {
                    target: strip_field(&m.target),
                    sources: m.sources.iter().map(strip_field).collect(),
                    pos: Pos::default(),
                })
                .collect(),
            source_text: String::new(),
            model_id: None,
        }
    }

    /// Equality on package, types, fields and mappings only.
    pub fn structurally_eq(&self, other: &NdfModel) -> bool {
        self.normalized() == other.normalized()
    }
}
