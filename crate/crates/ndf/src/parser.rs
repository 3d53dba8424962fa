//! Recursive-descent parser for the NDF grammar:
//!
//! ```text
//! file     := [ "package" qname ";" ] { typedef | mapping }
//! typedef  := IDENT "{" { member } "}"
//! member   := fielddef | typedef
//! fielddef := ("String"|"Number"|"Boolean"|"Timestamp") IDENT ";"
//! mapping  := qfield ":=" qfield { "|" qfield } ";"
//! qfield   := qname "." IDENT
//! qname    := IDENT { "." IDENT }
//! ```
//!
//! The parser stops at the first syntax error.

use crate::ast::{FieldDef, FieldType, MappingRule, NdfModel, Pos, QualifiedField, TypeDef};
use crate::diagnostic::{Code, Diagnostic};
use crate::lexer::{tokenize, Spanned, Token};

/// Type definitions nested deeper than this are rejected.
pub const MAX_NESTING_DEPTH: usize = 64;

const KEYWORDS: [&str; 5] = ["package", "String", "Number", "Boolean", "Timestamp"];

type PResult<T> = Result<T, Diagnostic>;

/// Parses NDF source text into a model.
pub fn parse(source: &str) -> Result<NdfModel, Vec<Diagnostic>> {
    let tokens = tokenize(source)?;
    let mut parser = Parser { tokens, idx: 0 };
    let mut model = parser.file().map_err(|d| vec![d])?;
    model.source_text = source.to_owned();
    Ok(model)
}

/// Like [`parse`], but starts from raw bytes and reports invalid UTF-8 with a
/// position.
pub fn parse_bytes(bytes: &[u8]) -> Result<NdfModel, Vec<Diagnostic>> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse(text),
        Err(e) => {
            let valid = &bytes[..e.valid_up_to()];
            // The prefix is valid by construction.
            let prefix = std::str::from_utf8(valid).unwrap_or_default();
            let line = prefix.matches('\n').count() as u32 + 1;
            let column = prefix.rsplit('\n').next().unwrap_or("").chars().count() as u32 + 1;
            Err(vec![Diagnostic::error(
                Code::Utf8,
                Pos::new(line, column),
                format!("invalid UTF-8 at byte offset {}", e.valid_up_to()),
            )])
        }
    }
}

struct Parser {
    tokens: Vec<Spanned>,
    idx: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.idx].tok
    }

    fn peek_at(&self, offset: usize) -> &Token {
        let i = (self.idx + offset).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn pos(&self) -> Pos {
        self.tokens[self.idx].pos
    }

    fn bump(&mut self) -> Spanned {
        let t = self.tokens[self.idx].clone();
        if self.idx + 1 < self.tokens.len() {
            self.idx += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> Diagnostic {
        Diagnostic::error(
            Code::Syntax,
            self.pos(),
            format!("expected {expected}, found {}", self.peek().describe()),
        )
    }

    fn expect(&mut self, tok: Token) -> PResult<Pos> {
        if *self.peek() == tok {
            Ok(self.bump().pos)
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn is_keyword(&self, word: &str) -> bool {
        matches!(self.peek(), Token::Ident(s) if s == word)
    }

    /// A non-keyword identifier.
    fn ident(&mut self) -> PResult<(String, Pos)> {
        match self.peek() {
            Token::Ident(s) if KEYWORDS.contains(&s.as_str()) => Err(Diagnostic::error(
                Code::Syntax,
                self.pos(),
                format!("`{s}` is a reserved keyword"),
            )),
            Token::Ident(_) => {
                let t = self.bump();
                match t.tok {
                    Token::Ident(s) => Ok((s, t.pos)),
                    _ => unreachable!("peeked an identifier"),
                }
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn qname(&mut self) -> PResult<(Vec<String>, Pos)> {
        let (first, pos) = self.ident()?;
        let mut parts = vec![first];
        while *self.peek() == Token::Dot {
            self.bump();
            parts.push(self.ident()?.0);
        }
        Ok((parts, pos))
    }

    fn file(&mut self) -> PResult<NdfModel> {
        let mut model = NdfModel::default();
        if self.is_keyword("package") {
            self.bump();
            model.package = self.qname()?.0;
            self.expect(Token::Semi)?;
        }
        let prefix = model.package.clone();
        loop {
            match (self.peek(), self.peek_at(1)) {
                (Token::Eof, _) => break,
                (Token::Ident(_), Token::LBrace) => {
                    let t = self.typedef(&prefix, 1)?;
                    model.types.push(t);
                }
                (Token::Ident(s), _) if s == "package" => {
                    return Err(Diagnostic::error(
                        Code::Syntax,
                        self.pos(),
                        "`package` must be the first statement",
                    ));
                }
                (Token::Ident(_), _) => {
                    let m = self.mapping()?;
                    model.mappings.push(m);
                }
                _ => return Err(self.unexpected("type definition or mapping rule")),
            }
        }
        Ok(model)
    }

    fn typedef(&mut self, prefix: &[String], depth: usize) -> PResult<TypeDef> {
        let (name, pos) = self.ident()?;
        if depth > MAX_NESTING_DEPTH {
            return Err(Diagnostic::error(
                Code::Syntax,
                pos,
                format!("type nesting deeper than {MAX_NESTING_DEPTH} levels"),
            ));
        }
        self.expect(Token::LBrace)?;
        let mut path = prefix.to_vec();
        path.push(name.clone());
        let mut def = TypeDef {
            name,
            fields: Vec::new(),
            nested_types: Vec::new(),
            qualified_name: path.join("."),
            pos,
        };
        loop {
            match self.peek() {
                Token::RBrace => {
                    self.bump();
                    return Ok(def);
                }
                Token::Ident(word) => {
                    if let Some(field_type) = FieldType::from_keyword(word) {
                        self.bump();
                        let (name, pos) = self.ident()?;
                        self.expect(Token::Semi)?;
                        def.fields.push(FieldDef { name, field_type, pos });
                    } else if *self.peek_at(1) == Token::LBrace {
                        let nested = self.typedef(&path, depth + 1)?;
                        def.nested_types.push(nested);
                    } else {
                        return Err(Diagnostic::error(
                            Code::Syntax,
                            self.pos(),
                            format!(
                                "expected field type (String, Number, Boolean, Timestamp) or nested type, found {}",
                                self.peek().describe()
                            ),
                        ));
                    }
                }
                _ => return Err(self.unexpected("member or `}`")),
            }
        }
    }

    fn qfield(&mut self) -> PResult<QualifiedField> {
        let (mut parts, pos) = self.qname()?;
        if parts.len() < 2 {
            return Err(Diagnostic::error(
                Code::Syntax,
                pos,
                format!("expected `Type.field`, found `{}`", parts[0]),
            ));
        }
        let field = parts.pop().expect("at least two segments");
        Ok(QualifiedField {
            type_path: parts,
            field,
            pos,
        })
    }

    fn mapping(&mut self) -> PResult<MappingRule> {
        let target = self.qfield()?;
        self.expect(Token::Assign)?;
        let mut sources = vec![self.qfield()?];
        while *self.peek() == Token::Pipe {
            self.bump();
            sources.push(self.qfield()?);
        }
        self.expect(Token::Semi)?;
        Ok(MappingRule {
            pos: target.pos,
            target,
            sources,
        })
    }
}
