//! Tokenizer for specification text.

use std::fmt;

use super::ast::Span;
use super::error::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    // declarations
    Input,
    Output,
    Const,
    // feedback
    Trigger,
    TriggerOnce,
    TriggerChange,
    Snapshot,
    Tag,
    Filter,
    As,
    With,
    At,
    // control
    If,
    Elif,
    Else,
    Switch,
    Case,
    Default,
    // atoms
    Position,
    IntMin,
    IntMax,
    DoubleMin,
    DoubleMax,
    True,
    False,
    Ident(String),
    Int(i64),
    Double(f64),
    Str(String),
    // operators
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Eq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Amp,
    Pipe,
    Bang,
    Assign,
    // punctuation
    LBracket,
    RBracket,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Hash,
    Comma,
    Eof,
}

impl TokenKind {
    fn keyword(word: &str) -> Option<TokenKind> {
        Some(match word {
            "input" => TokenKind::Input,
            "output" => TokenKind::Output,
            "const" => TokenKind::Const,
            "trigger" => TokenKind::Trigger,
            "trigger_once" => TokenKind::TriggerOnce,
            "trigger_change" => TokenKind::TriggerChange,
            "snapshot" => TokenKind::Snapshot,
            "tag" => TokenKind::Tag,
            "filter" => TokenKind::Filter,
            "as" => TokenKind::As,
            "with" => TokenKind::With,
            "at" => TokenKind::At,
            "if" => TokenKind::If,
            "elif" => TokenKind::Elif,
            "else" => TokenKind::Else,
            "switch" => TokenKind::Switch,
            "case" => TokenKind::Case,
            "default" => TokenKind::Default,
            "position" => TokenKind::Position,
            "int_min" => TokenKind::IntMin,
            "int_max" => TokenKind::IntMax,
            "double_min" => TokenKind::DoubleMin,
            "double_max" => TokenKind::DoubleMax,
            "true" => TokenKind::True,
            "false" => TokenKind::False,
            _ => return None,
        })
    }

    /// True for tokens that can only start a new top-level declaration.
    pub fn starts_declaration(&self) -> bool {
        matches!(
            self,
            TokenKind::Input
                | TokenKind::Output
                | TokenKind::Const
                | TokenKind::Trigger
                | TokenKind::TriggerOnce
                | TokenKind::TriggerChange
                | TokenKind::Snapshot
                | TokenKind::Tag
                | TokenKind::Filter
                | TokenKind::Eof
        )
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TokenKind::Input => "input",
            TokenKind::Output => "output",
            TokenKind::Const => "const",
            TokenKind::Trigger => "trigger",
            TokenKind::TriggerOnce => "trigger_once",
            TokenKind::TriggerChange => "trigger_change",
            TokenKind::Snapshot => "snapshot",
            TokenKind::Tag => "tag",
            TokenKind::Filter => "filter",
            TokenKind::As => "as",
            TokenKind::With => "with",
            TokenKind::At => "at",
            TokenKind::If => "if",
            TokenKind::Elif => "elif",
            TokenKind::Else => "else",
            TokenKind::Switch => "switch",
            TokenKind::Case => "case",
            TokenKind::Default => "default",
            TokenKind::Position => "position",
            TokenKind::IntMin => "int_min",
            TokenKind::IntMax => "int_max",
            TokenKind::DoubleMin => "double_min",
            TokenKind::DoubleMax => "double_max",
            TokenKind::True => "true",
            TokenKind::False => "false",
            TokenKind::Ident(name) => return write!(f, "identifier `{name}`"),
            TokenKind::Int(v) => return write!(f, "integer {v}"),
            TokenKind::Double(v) => return write!(f, "number {v:?}"),
            TokenKind::Str(s) => return write!(f, "string {s:?}"),
            TokenKind::Plus => "+",
            TokenKind::Minus => "-",
            TokenKind::Star => "*",
            TokenKind::Slash => "/",
            TokenKind::Caret => "^",
            TokenKind::Eq => "=",
            TokenKind::NotEq => "!=",
            TokenKind::Lt => "<",
            TokenKind::Le => "<=",
            TokenKind::Gt => ">",
            TokenKind::Ge => ">=",
            TokenKind::Amp => "&",
            TokenKind::Pipe => "|",
            TokenKind::Bang => "!",
            TokenKind::Assign => ":=",
            TokenKind::LBracket => "[",
            TokenKind::RBracket => "]",
            TokenKind::LParen => "(",
            TokenKind::RParen => ")",
            TokenKind::LBrace => "{",
            TokenKind::RBrace => "}",
            TokenKind::Hash => "#",
            TokenKind::Comma => ",",
            TokenKind::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
    /// Byte offset one past the token's last character.
    pub end: usize,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_second(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn span(&self) -> Span {
        Span {
            line: self.line,
            col: self.col,
            offset: self.pos,
        }
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') if self.peek_second() == Some('/') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn number(&mut self, start: Span) -> Result<TokenKind, ParseError> {
        let begin = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
        }
        let mut is_double = false;
        if self.peek() == Some('.') && matches!(self.peek_second(), Some(c) if c.is_ascii_digit()) {
            is_double = true;
            self.bump();
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.bump();
            }
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let rest = &self.src[self.pos + 1..];
            let digits_follow = rest.starts_with(|c: char| c.is_ascii_digit())
                || ((rest.starts_with('+') || rest.starts_with('-'))
                    && rest[1..].starts_with(|c: char| c.is_ascii_digit()));
            if digits_follow {
                is_double = true;
                self.bump();
                if matches!(self.peek(), Some('+' | '-')) {
                    self.bump();
                }
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.bump();
                }
            }
        }
        let text = &self.src[begin..self.pos];
        if is_double {
            text.parse::<f64>()
                .map(TokenKind::Double)
                .map_err(|_| ParseError::lexical(start, format!("malformed number `{text}`")))
        } else {
            text.parse::<i64>().map(TokenKind::Int).map_err(|_| {
                ParseError::lexical(start, format!("integer literal `{text}` out of range"))
            })
        }
    }

    fn string(&mut self, start: Span) -> Result<TokenKind, ParseError> {
        self.bump(); // opening quote
        let mut out = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => {
                    return Err(ParseError::lexical(start, "unterminated string literal"))
                }
                Some('"') => return Ok(TokenKind::Str(out)),
                Some('\\') => {
                    let esc = self.span();
                    match self.bump() {
                        Some('n') => out.push('\n'),
                        Some('t') => out.push('\t'),
                        Some('r') => out.push('\r'),
                        Some('"') => out.push('"'),
                        Some('\\') => out.push('\\'),
                        Some(c) => {
                            return Err(ParseError::lexical(
                                esc,
                                format!("unknown escape sequence `\\{c}`"),
                            ))
                        }
                        None => {
                            return Err(ParseError::lexical(start, "unterminated string literal"))
                        }
                    }
                }
                Some(c) => out.push(c),
            }
        }
    }

    fn next_token(&mut self) -> Result<Token, ParseError> {
        self.skip_trivia();
        let span = self.span();
        let Some(c) = self.peek() else {
            return Ok(Token {
                kind: TokenKind::Eof,
                span,
                end: self.pos,
            });
        };
        let kind = match c {
            c if c.is_ascii_alphabetic() || c == '_' => {
                let begin = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                    self.bump();
                }
                let word = &self.src[begin..self.pos];
                TokenKind::keyword(word).unwrap_or_else(|| TokenKind::Ident(word.to_string()))
            }
            c if c.is_ascii_digit() => self.number(span)?,
            '"' => self.string(span)?,
            _ => {
                self.bump();
                let next = self.peek();
                let two = |kind: TokenKind, lexer: &mut Self| {
                    lexer.bump();
                    kind
                };
                match (c, next) {
                    (':', Some('=')) => two(TokenKind::Assign, self),
                    ('!', Some('=')) => two(TokenKind::NotEq, self),
                    ('<', Some('=')) => two(TokenKind::Le, self),
                    ('>', Some('=')) => two(TokenKind::Ge, self),
                    ('+', _) => TokenKind::Plus,
                    ('-', _) => TokenKind::Minus,
                    ('*', _) => TokenKind::Star,
                    ('/', _) => TokenKind::Slash,
                    ('^', _) => TokenKind::Caret,
                    ('=', _) => TokenKind::Eq,
                    ('<', _) => TokenKind::Lt,
                    ('>', _) => TokenKind::Gt,
                    ('&', _) => TokenKind::Amp,
                    ('|', _) => TokenKind::Pipe,
                    ('!', _) => TokenKind::Bang,
                    ('[', _) => TokenKind::LBracket,
                    (']', _) => TokenKind::RBracket,
                    ('(', _) => TokenKind::LParen,
                    (')', _) => TokenKind::RParen,
                    ('{', _) => TokenKind::LBrace,
                    ('}', _) => TokenKind::RBrace,
                    ('#', _) => TokenKind::Hash,
                    (',', _) => TokenKind::Comma,
                    _ => {
                        return Err(ParseError::lexical(
                            span,
                            format!("unexpected character `{c}`"),
                        ))
                    }
                }
            }
        };
        Ok(Token {
            kind,
            span,
            end: self.pos,
        })
    }
}

/// Splits `source` into tokens. The result always ends with [`TokenKind::Eof`].
pub fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    let mut lexer = Lexer {
        src: source,
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut tokens = Vec::new();
    loop {
        let tok = lexer.next_token()?;
        let done = tok.kind == TokenKind::Eof;
        tokens.push(tok);
        if done {
            return Ok(tokens);
        }
    }
}
