use super::{ParseError, ParseErrorKind, SourceSpan};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TokenKind {
    Ident(String),
    /// Magnitude only; the parser applies a leading `-` and range-checks.
    Int(i128),
    Decimal(f64),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Colon,
    Semi,
    Comma,
    Minus,
    Arrow,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Eof,
}

impl TokenKind {
    pub(crate) fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Int(i) => format!("integer {i}"),
            TokenKind::Decimal(d) => format!("number {d}"),
            TokenKind::Str(_) => "string literal".to_string(),
            TokenKind::LBrace => "`{`".into(),
            TokenKind::RBrace => "`}`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Colon => "`:`".into(),
            TokenKind::Semi => "`;`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Arrow => "`->`".into(),
            TokenKind::Eq => "`=`".into(),
            TokenKind::Ne => "`!=`".into(),
            TokenKind::Lt => "`<`".into(),
            TokenKind::Le => "`<=`".into(),
            TokenKind::Gt => "`>`".into(),
            TokenKind::Ge => "`>=`".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub kind: TokenKind,
    pub span: SourceSpan,
}

struct Cursor<'a> {
    src: &'a str,
    offset: usize,
    line: usize,
    column: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.offset..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.offset..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.offset += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 0;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn span(&self) -> SourceSpan {
        SourceSpan {
            line: self.line,
            column: self.column,
            offset: self.offset,
        }
    }
}

fn err(kind: ParseErrorKind, span: SourceSpan) -> ParseError {
    ParseError { kind, span }
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut c = Cursor {
        src,
        offset: 0,
        line: 0,
        column: 0,
    };
    let mut out = Vec::new();
    loop {
        while let Some(ch) = c.peek() {
            if ch.is_whitespace() {
                c.bump();
            } else if ch == '#' {
                while let Some(ch) = c.peek() {
                    if ch == '\n' {
                        break;
                    }
                    c.bump();
                }
            } else {
                break;
            }
        }
        let start = c.span();
        let Some(ch) = c.bump() else {
            out.push(Token {
                kind: TokenKind::Eof,
                span: start,
            });
            return Ok(out);
        };
        let kind = match ch {
            '{' => TokenKind::LBrace,
            '}' => TokenKind::RBrace,
            '(' => TokenKind::LParen,
            ')' => TokenKind::RParen,
            ':' => TokenKind::Colon,
            ';' => TokenKind::Semi,
            ',' => TokenKind::Comma,
            '=' => TokenKind::Eq,
            '-' if c.peek() == Some('>') => {
                c.bump();
                TokenKind::Arrow
            }
            '-' => TokenKind::Minus,
            '!' if c.peek() == Some('=') => {
                c.bump();
                TokenKind::Ne
            }
            '<' if c.peek() == Some('=') => {
                c.bump();
                TokenKind::Le
            }
            '<' => TokenKind::Lt,
            '>' if c.peek() == Some('=') => {
                c.bump();
                TokenKind::Ge
            }
            '>' => TokenKind::Gt,
            '"' => lex_string(&mut c, start)?,
            ch if ch.is_ascii_digit() => lex_number(&mut c, start)?,
            ch if ch.is_ascii_alphabetic() || ch == '_' => {
                while c.peek().is_some_and(|ch| ch.is_ascii_alphanumeric() || ch == '_') {
                    c.bump();
                }
                TokenKind::Ident(src[start.offset..c.offset].to_string())
            }
            other => {
                return Err(err(
                    ParseErrorKind::Syntax {
                        expected: "a token".into(),
                        found: format!("character {other:?}"),
                    },
                    start,
                ))
            }
        };
        out.push(Token { kind, span: start });
    }
}

fn lex_string(c: &mut Cursor<'_>, start: SourceSpan) -> Result<TokenKind, ParseError> {
    let mut s = String::new();
    loop {
        let at = c.span();
        match c.bump() {
            None => {
                return Err(err(
                    ParseErrorKind::Syntax {
                        expected: "closing `\"`".into(),
                        found: "end of input".into(),
                    },
                    start,
                ))
            }
            Some('"') => return Ok(TokenKind::Str(s)),
            Some('\\') => match c.bump() {
                Some('"') => s.push('"'),
                Some('\\') => s.push('\\'),
                Some('n') => s.push('\n'),
                Some('t') => s.push('\t'),
                Some('r') => s.push('\r'),
                other => {
                    return Err(err(
                        ParseErrorKind::Syntax {
                            expected: "escape sequence".into(),
                            found: match other {
                                Some(ch) => format!("`\\{ch}`"),
                                None => "end of input".into(),
                            },
                        },
                        at,
                    ))
                }
            },
            Some(ch) => s.push(ch),
        }
    }
}

fn lex_number(c: &mut Cursor<'_>, start: SourceSpan) -> Result<TokenKind, ParseError> {
    while c.peek().is_some_and(|ch| ch.is_ascii_digit()) {
        c.bump();
    }
    let is_decimal = c.peek() == Some('.') && c.peek2().is_some_and(|ch| ch.is_ascii_digit());
    if is_decimal {
        c.bump();
        while c.peek().is_some_and(|ch| ch.is_ascii_digit()) {
            c.bump();
        }
    }
    let text = &c.src[start.offset..c.offset];
    let bad = || {
        err(
            ParseErrorKind::Syntax {
                expected: "a number in range".into(),
                found: format!("`{text}`"),
            },
            start,
        )
    };
    if is_decimal {
        text.parse::<f64>().map(TokenKind::Decimal).map_err(|_| bad())
    } else {
        text.parse::<i128>().map(TokenKind::Int).map_err(|_| bad())
    }
}
