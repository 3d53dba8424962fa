use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ast::Pos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// Stable diagnostic codes. The `CC*` codes are the context conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Code {
    /// Input is not valid UTF-8.
    #[serde(rename = "UTF8")]
    Utf8,
    #[serde(rename = "LEX")]
    Lex,
    #[serde(rename = "SYNTAX")]
    Syntax,
    /// Type name is not unique within its package.
    #[serde(rename = "CC1")]
    Cc1,
    /// Member name is not unique within a type.
    #[serde(rename = "CC2")]
    Cc2,
    /// Mapping target is not a field of a top-level type of this model.
    #[serde(rename = "CC3")]
    Cc3,
    /// Mapping source type or field does not exist.
    #[serde(rename = "CC4")]
    Cc4,
    /// Source field type differs from target field type.
    #[serde(rename = "CC5")]
    Cc5,
    /// Mapping dependencies form a cycle.
    #[serde(rename = "CC6")]
    Cc6,
    /// A mapped (virtual) type has fields that no rule covers.
    #[serde(rename = "CC7")]
    Cc7,
    /// Several source fields of one source type feed the same target field.
    #[serde(rename = "MAP-DUP")]
    MapDuplicateSource,
    /// A source type covers only part of the target type.
    #[serde(rename = "MAP-PARTIAL")]
    MapPartialCoverage,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::Utf8 => "UTF8",
            Code::Lex => "LEX",
            Code::Syntax => "SYNTAX",
            Code::Cc1 => "CC1",
            Code::Cc2 => "CC2",
            Code::Cc3 => "CC3",
            Code::Cc4 => "CC4",
            Code::Cc5 => "CC5",
            Code::Cc6 => "CC6",
            Code::Cc7 => "CC7",
            Code::MapDuplicateSource => "MAP-DUP",
            Code::MapPartialCoverage => "MAP-PARTIAL",
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: Code,
    pub message: String,
    pub line: u32,
    pub column: u32,
}

impl Diagnostic {
    pub fn error(code: Code, pos: Pos, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            code,
            message: message.into(),
            line: pos.line,
            column: pos.column,
        }
    }

    pub fn warning(code: Code, pos: Pos, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            ..Self::error(code, pos, message)
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    pub fn pos(&self) -> Pos {
        Pos::new(self.line, self.column)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(
            f,
            "{}:{}: {}[{}]: {}",
            self.line, self.column, sev, self.code, self.message
        )
    }
}
