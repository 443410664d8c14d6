//! Recursive descent parser producing an unchecked [`Specification`].

use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::error::ParseError;
use super::lexer::{tokenize, Token, TokenKind};

/// Parses a whole specification file.
///
/// Name resolution is whole-file: a stream may be referenced before it is
/// declared. Duplicate declarations and references to undeclared streams
/// are reported here.
pub fn parse_specification(source: &str) -> Result<Specification, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser {
        src: source,
        tokens,
        pos: 0,
    };
    let mut spec = Specification::default();
    while !parser.at(&TokenKind::Eof) {
        parser.declaration(&mut spec)?;
    }
    validate(&spec)?;
    Ok(spec)
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<Token>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &TokenKind {
        &self.tokens[self.pos].kind
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn at(&self, kind: &TokenKind) -> bool {
        self.peek() == kind
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if tok.kind != TokenKind::Eof {
            self.pos += 1;
        }
        tok
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.at(kind) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.tokens[self.pos - 1].end
        }
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        ParseError::Syntax {
            span: self.span(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().to_string(),
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<Token, ParseError> {
        if self.at(&kind) {
            Ok(self.advance())
        } else {
            Err(self.error(&[&format!("`{kind}`")]))
        }
    }

    fn ident(&mut self) -> Result<(String, Span), ParseError> {
        match self.peek().clone() {
            TokenKind::Ident(name) => {
                let span = self.advance().span;
                Ok((name, span))
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn ident_list(&mut self) -> Result<Vec<(String, Span)>, ParseError> {
        let mut names = vec![self.ident()?];
        while self.eat(&TokenKind::Comma) {
            names.push(self.ident()?);
        }
        Ok(names)
    }

    fn string(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            TokenKind::Str(s) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.error(&["string literal"])),
        }
    }

    fn stream_type(&mut self) -> Result<StreamType, ParseError> {
        let span = self.span();
        match self.peek() {
            TokenKind::Ident(name) => match StreamType::from_name(name) {
                Some(ty) => {
                    self.advance();
                    Ok(ty)
                }
                None => Err(ParseError::invalid(
                    span,
                    format!("unknown type `{name}`; expected bool, int, double or string"),
                )),
            },
            _ => Err(self.error(&["type"])),
        }
    }

    fn declaration(&mut self, spec: &mut Specification) -> Result<(), ParseError> {
        let span = self.span();
        match self.peek() {
            TokenKind::Input => {
                self.advance();
                let ty = self.stream_type()?;
                for (name, span) in self.ident_list()? {
                    spec.inputs.push(StreamDecl {
                        name,
                        ty,
                        kind: StreamKind::Input,
                        definition: None,
                        constant: false,
                        span,
                    });
                }
            }
            TokenKind::Output | TokenKind::Const => {
                let constant = self.advance().kind == TokenKind::Const;
                let ty = self.stream_type()?;
                let (name, span) = self.ident()?;
                self.expect(TokenKind::Assign)?;
                let definition = self.expr()?;
                spec.outputs.push(StreamDecl {
                    name,
                    ty,
                    kind: StreamKind::Output,
                    definition: Some(definition),
                    constant,
                    span,
                });
            }
            TokenKind::Trigger | TokenKind::TriggerOnce | TokenKind::TriggerChange => {
                let kind = match self.advance().kind {
                    TokenKind::Trigger => FeedbackKind::Trigger,
                    TokenKind::TriggerOnce => FeedbackKind::TriggerOnce,
                    _ => FeedbackKind::TriggerChange,
                };
                let (condition, condition_text) = self.condition()?;
                let message = self.message()?;
                spec.feedback.push(FeedbackDecl {
                    kind,
                    condition,
                    message,
                    bindings: Vec::new(),
                    location: None,
                    condition_text,
                    span,
                });
            }
            TokenKind::Snapshot => {
                self.advance();
                let unconditional = self.peek().starts_declaration()
                    || matches!(self.peek(), TokenKind::With | TokenKind::Str(_));
                let (condition, condition_text) = if unconditional {
                    (
                        Expr::new(ExprKind::Lit(Literal::Bool(true)), span),
                        "true".to_string(),
                    )
                } else {
                    self.condition()?
                };
                let message = self.message()?;
                spec.feedback.push(FeedbackDecl {
                    kind: FeedbackKind::Snapshot,
                    condition,
                    message,
                    bindings: Vec::new(),
                    location: None,
                    condition_text,
                    span,
                });
            }
            TokenKind::Tag => {
                self.advance();
                self.expect(TokenKind::As)?;
                let targets = self.ident_list()?;
                self.expect(TokenKind::If)?;
                let (condition, condition_text) = self.condition()?;
                self.expect(TokenKind::With)?;
                let sources = self.ident_list()?;
                if sources.len() != targets.len() {
                    return Err(ParseError::invalid(
                        span,
                        format!(
                            "tag declares {} target columns but {} source streams",
                            targets.len(),
                            sources.len()
                        ),
                    ));
                }
                self.expect(TokenKind::At)?;
                let location = self.string()?;
                spec.feedback.push(FeedbackDecl {
                    kind: FeedbackKind::Tag,
                    condition,
                    message: None,
                    bindings: sources
                        .into_iter()
                        .zip(targets)
                        .map(|((source, _), (target, _))| TagBinding { source, target })
                        .collect(),
                    location: Some(location),
                    condition_text,
                    span,
                });
            }
            TokenKind::Filter => {
                self.advance();
                let streams = if matches!(self.peek(), TokenKind::Ident(_)) {
                    self.ident_list()?
                } else {
                    Vec::new()
                };
                self.expect(TokenKind::If)?;
                let (condition, condition_text) = self.condition()?;
                self.expect(TokenKind::At)?;
                let location = self.string()?;
                spec.feedback.push(FeedbackDecl {
                    kind: FeedbackKind::Filter,
                    condition,
                    message: None,
                    bindings: streams
                        .into_iter()
                        .map(|(name, _)| TagBinding {
                            source: name.clone(),
                            target: name,
                        })
                        .collect(),
                    location: Some(location),
                    condition_text,
                    span,
                });
            }
            _ => {
                return Err(self.error(&[
                    "input",
                    "output",
                    "const",
                    "trigger",
                    "trigger_once",
                    "trigger_change",
                    "snapshot",
                    "tag",
                    "filter",
                ]))
            }
        }
        Ok(())
    }

    /// Parses a feedback condition and captures its source text.
    fn condition(&mut self) -> Result<(Expr, String), ParseError> {
        let start = self.span().offset;
        let expr = self.expr()?;
        let text = self.src[start..self.prev_end()].to_string();
        Ok((expr, text))
    }

    /// `with "msg"`, a juxtaposed `"msg"`, or nothing.
    fn message(&mut self) -> Result<Option<String>, ParseError> {
        if self.eat(&TokenKind::With) {
            return self.string().map(Some);
        }
        if let TokenKind::Str(s) = self.peek().clone() {
            self.advance();
            return Ok(Some(s));
        }
        Ok(None)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.binary(1)
    }

    fn binary_op(&self) -> Option<BinaryOp> {
        Some(match self.peek() {
            TokenKind::Pipe => BinaryOp::Or,
            TokenKind::Amp => BinaryOp::And,
            TokenKind::Eq => BinaryOp::Eq,
            TokenKind::NotEq => BinaryOp::Ne,
            TokenKind::Lt => BinaryOp::Lt,
            TokenKind::Le => BinaryOp::Le,
            TokenKind::Gt => BinaryOp::Gt,
            TokenKind::Ge => BinaryOp::Ge,
            TokenKind::Plus => BinaryOp::Add,
            TokenKind::Minus => BinaryOp::Sub,
            TokenKind::Star => BinaryOp::Mul,
            TokenKind::Slash => BinaryOp::Div,
            TokenKind::Caret => BinaryOp::Pow,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binary_op() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.advance();
            // `^` is right-associative, everything else left-associative.
            let next = if op == BinaryOp::Pow { prec } else { prec + 1 };
            let rhs = self.binary(next)?;
            let span = lhs.span;
            lhs = Expr::new(
                ExprKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            );
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        let op = match self.peek() {
            TokenKind::Bang => UnaryOp::Not,
            TokenKind::Minus => UnaryOp::Neg,
            _ => return self.primary(),
        };
        self.advance();
        let operand = self.unary()?;
        Ok(Expr::new(
            ExprKind::Unary {
                op,
                operand: Box::new(operand),
            },
            span,
        ))
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        let kind = match self.peek().clone() {
            TokenKind::Int(v) => {
                self.advance();
                ExprKind::Lit(Literal::Int(v))
            }
            TokenKind::Double(v) => {
                self.advance();
                ExprKind::Lit(Literal::Double(v))
            }
            TokenKind::Str(s) => {
                self.advance();
                ExprKind::Lit(Literal::Str(s))
            }
            TokenKind::True => {
                self.advance();
                ExprKind::Lit(Literal::Bool(true))
            }
            TokenKind::False => {
                self.advance();
                ExprKind::Lit(Literal::Bool(false))
            }
            TokenKind::Position => self.keyword(Keyword::Position),
            TokenKind::IntMin => self.keyword(Keyword::IntMin),
            TokenKind::IntMax => self.keyword(Keyword::IntMax),
            TokenKind::DoubleMin => self.keyword(Keyword::DoubleMin),
            TokenKind::DoubleMax => self.keyword(Keyword::DoubleMax),
            TokenKind::LParen => {
                self.advance();
                let inner = self.expr()?;
                self.expect(TokenKind::RParen)?;
                return Ok(inner);
            }
            TokenKind::If => return self.conditional(),
            TokenKind::Switch => return self.switch(),
            TokenKind::Ident(name) => {
                self.advance();
                match self.peek() {
                    TokenKind::LParen => {
                        self.advance();
                        let mut args = Vec::new();
                        if !self.at(&TokenKind::RParen) {
                            args.push(self.expr()?);
                            while self.eat(&TokenKind::Comma) {
                                args.push(self.expr()?);
                            }
                        }
                        self.expect(TokenKind::RParen)?;
                        ExprKind::Call { name, args }
                    }
                    TokenKind::LBracket => {
                        self.advance();
                        let offset = self.signed_int()?;
                        self.expect(TokenKind::Comma)?;
                        let default = self.expr()?;
                        self.expect(TokenKind::RBracket)?;
                        ExprKind::Access {
                            stream: name,
                            offset,
                            // present-value access is total
                            default: (offset != 0).then(|| Box::new(default)),
                        }
                    }
                    TokenKind::Hash => {
                        self.advance();
                        self.expect(TokenKind::LBracket)?;
                        let index_span = self.span();
                        let index = self.signed_int()?;
                        if index < 0 {
                            return Err(ParseError::invalid(
                                index_span,
                                "absolute offset index must be non-negative",
                            ));
                        }
                        self.expect(TokenKind::Comma)?;
                        let default = self.expr()?;
                        self.expect(TokenKind::RBracket)?;
                        ExprKind::Absolute {
                            stream: name,
                            index: index as u64,
                            default: Box::new(default),
                        }
                    }
                    _ => ExprKind::Access {
                        stream: name,
                        offset: 0,
                        default: None,
                    },
                }
            }
            _ => return Err(self.error(&["expression"])),
        };
        Ok(Expr::new(kind, span))
    }

    fn keyword(&mut self, kw: Keyword) -> ExprKind {
        self.advance();
        ExprKind::Keyword(kw)
    }

    fn signed_int(&mut self) -> Result<i64, ParseError> {
        let negative = if self.eat(&TokenKind::Minus) {
            true
        } else {
            self.eat(&TokenKind::Plus);
            false
        };
        match *self.peek() {
            TokenKind::Int(v) => {
                self.advance();
                Ok(if negative { -v } else { v })
            }
            _ => Err(self.error(&["integer"])),
        }
    }

    fn block(&mut self) -> Result<Expr, ParseError> {
        self.expect(TokenKind::LBrace)?;
        let e = self.expr()?;
        self.expect(TokenKind::RBrace)?;
        Ok(e)
    }

    fn conditional(&mut self) -> Result<Expr, ParseError> {
        let span = self.expect(TokenKind::If)?.span;
        let cond = self.expr()?;
        let then = self.block()?;
        let mut elifs = Vec::new();
        while self.eat(&TokenKind::Elif) {
            let c = self.expr()?;
            let e = self.block()?;
            elifs.push((c, e));
        }
        if !self.eat(&TokenKind::Else) {
            return Err(self.error(&["`elif`", "`else`"]));
        }
        let otherwise = self.block()?;
        Ok(Expr::new(
            ExprKind::If {
                cond: Box::new(cond),
                then: Box::new(then),
                elifs,
                otherwise: Box::new(otherwise),
            },
            span,
        ))
    }

    fn case_literal(&mut self) -> Result<Literal, ParseError> {
        let negative = self.eat(&TokenKind::Minus);
        let lit = match *self.peek() {
            TokenKind::Int(v) => Literal::Int(if negative { -v } else { v }),
            TokenKind::Double(v) => Literal::Double(if negative { -v } else { v }),
            _ => return Err(self.error(&["numeric case constant"])),
        };
        self.advance();
        Ok(lit)
    }

    fn switch(&mut self) -> Result<Expr, ParseError> {
        let span = self.expect(TokenKind::Switch)?.span;
        let scrutinee = self.expr()?;
        self.expect(TokenKind::LBrace)?;
        let mut cases: Vec<(Literal, Expr)> = Vec::new();
        let mut previous: Option<f64> = None;
        while self.at(&TokenKind::Case) {
            self.advance();
            let lit_span = self.span();
            let lit = self.case_literal()?;
            let key = match lit {
                Literal::Int(v) => v as f64,
                Literal::Double(v) => v,
                _ => unreachable!("case literals are numeric"),
            };
            if let Some(prev) = previous {
                if key <= prev {
                    return Err(ParseError::invalid(
                        lit_span,
                        "switch cases must be distinct and in increasing order",
                    ));
                }
            }
            previous = Some(key);
            let body = self.block()?;
            cases.push((lit, body));
        }
        if !self.eat(&TokenKind::Default) {
            return Err(self.error(&["`case`", "`default`"]));
        }
        let default = self.block()?;
        self.expect(TokenKind::RBrace)?;
        Ok(Expr::new(
            ExprKind::Switch {
                scrutinee: Box::new(scrutinee),
                cases,
                default: Box::new(default),
            },
            span,
        ))
    }
}

fn validate(spec: &Specification) -> Result<(), ParseError> {
    let mut declared: HashMap<&str, Span> = HashMap::new();
    for decl in spec.streams() {
        if let Some(first) = declared.insert(&decl.name, decl.span) {
            return Err(ParseError::DuplicateStream {
                name: decl.name.clone(),
                first,
                second: decl.span,
            });
        }
    }
    let mut undeclared = None;
    let mut check = |name: &str, _: Access, span: Span| {
        if undeclared.is_none() && !declared.contains_key(name) {
            undeclared = Some((name.to_string(), span));
        }
    };
    for decl in &spec.outputs {
        if let Some(def) = &decl.definition {
            def.for_each_access(&mut check);
        }
    }
    for fb in &spec.feedback {
        fb.condition.for_each_access(&mut check);
        for b in &fb.bindings {
            check(&b.source, Access::Relative(0), fb.span);
        }
    }
    if let Some((name, span)) = undeclared {
        return Err(ParseError::UndeclaredStream { name, span });
    }
    for fb in &spec.feedback {
        let mut seen = HashSet::new();
        for b in &fb.bindings {
            if !seen.insert(b.target.as_str()) {
                return Err(ParseError::invalid(
                    fb.span,
                    format!("column `{}` appears twice in {}", b.target, fb.kind),
                ));
            }
        }
    }
    Ok(())
}
