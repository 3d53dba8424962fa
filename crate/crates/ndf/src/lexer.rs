use crate::ast::Pos;
use crate::diagnostic::{Code, Diagnostic};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Token {
    Ident(String),
    LBrace,
    RBrace,
    Semi,
    Dot,
    /// `:=`
    Assign,
    Pipe,
    Eof,
}

impl Token {
    pub(crate) fn describe(&self) -> String {
        match self {
            Token::Ident(s) => format!("identifier `{s}`"),
            Token::LBrace => "`{`".into(),
            Token::RBrace => "`}`".into(),
            Token::Semi => "`;`".into(),
            Token::Dot => "`.`".into(),
            Token::Assign => "`:=`".into(),
            Token::Pipe => "`|`".into(),
            Token::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Spanned {
    pub tok: Token,
    pub pos: Pos,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    column: u32,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos::new(self.line, self.column)
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Tokenizes the whole input. Lexing continues past bad characters so that
/// all of them are reported at once.
pub(crate) fn tokenize(source: &str) -> Result<Vec<Spanned>, Vec<Diagnostic>> {
    let mut cur = Cursor {
        chars: source.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();
    let mut errors = Vec::new();

    while let Some(c) = cur.peek() {
        let pos = cur.pos();
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if is_ident_start(c) {
            let mut ident = String::new();
            while let Some(c) = cur.peek().filter(|c| is_ident_continue(*c)) {
                ident.push(c);
                cur.bump();
            }
            tokens.push(Spanned {
                tok: Token::Ident(ident),
                pos,
            });
            continue;
        }
        cur.bump();
        let tok = match c {
            '{' => Token::LBrace,
            '}' => Token::RBrace,
            ';' => Token::Semi,
            '.' => Token::Dot,
            '|' => Token::Pipe,
            ':' if cur.peek() == Some('=') => {
                cur.bump();
                Token::Assign
            }
            '/' if cur.peek() == Some('/') => {
                while cur.peek().is_some_and(|c| c != '\n') {
                    cur.bump();
                }
                continue;
            }
            '/' => {
                errors.push(Diagnostic::error(
                    Code::Lex,
                    pos,
                    "unexpected character `/`; mapping sources are separated by `|`",
                ));
                continue;
            }
            other => {
                errors.push(Diagnostic::error(
                    Code::Lex,
                    pos,
                    format!("unexpected character {other:?}"),
                ));
                continue;
            }
        };
        tokens.push(Spanned { tok, pos });
    }

    if errors.is_empty() {
        tokens.push(Spanned {
            tok: Token::Eof,
            pos: cur.pos(),
        });
        Ok(tokens)
    } else {
        Err(errors)
    }
}
