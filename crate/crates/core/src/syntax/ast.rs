//! Untyped abstract syntax of specifications.

use std::fmt;

/// Source position (1-based line and column, 0-based byte offset).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub line: u32,
    pub col: u32,
    pub offset: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StreamType {
    Bool,
    Int,
    Double,
    String,
}

impl StreamType {
    pub fn from_name(name: &str) -> Option<StreamType> {
        match name {
            "bool" => Some(StreamType::Bool),
            "int" => Some(StreamType::Int),
            "double" => Some(StreamType::Double),
            "string" => Some(StreamType::String),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StreamType::Bool => "bool",
            StreamType::Int => "int",
            StreamType::Double => "double",
            StreamType::String => "string",
        }
    }
}

impl fmt::Display for StreamType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Bool(bool),
    Int(i64),
    Double(f64),
    Str(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keyword {
    Position,
    IntMin,
    IntMax,
    DoubleMin,
    DoubleMax,
}

impl Keyword {
    pub fn name(self) -> &'static str {
        match self {
            Keyword::Position => "position",
            Keyword::IntMin => "int_min",
            Keyword::IntMax => "int_max",
            Keyword::DoubleMin => "double_min",
            Keyword::DoubleMax => "double_max",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
            BinaryOp::Eq => "=",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::And => "&",
            BinaryOp::Or => "|",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Eq
            | BinaryOp::Ne
            | BinaryOp::Lt
            | BinaryOp::Le
            | BinaryOp::Gt
            | BinaryOp::Ge => 3,
            BinaryOp::Add | BinaryOp::Sub => 4,
            BinaryOp::Mul | BinaryOp::Div => 5,
            BinaryOp::Pow => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 3
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Lit(Literal),
    Keyword(Keyword),
    /// `s` (offset 0, no default) or `s[k, d]` with `k != 0`.
    Access {
        stream: String,
        offset: i64,
        default: Option<Box<Expr>>,
    },
    /// `s#[i, d]`
    Absolute {
        stream: String,
        index: u64,
        default: Box<Expr>,
    },
    Call {
        name: String,
        args: Vec<Expr>,
    },
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    /// `elifs` is always empty after desugaring.
    If {
        cond: Box<Expr>,
        then: Box<Expr>,
        elifs: Vec<(Expr, Expr)>,
        otherwise: Box<Expr>,
    },
    Switch {
        scrutinee: Box<Expr>,
        cases: Vec<(Literal, Expr)>,
        default: Box<Expr>,
    },
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Expr {
        Expr { kind, span }
    }

    /// Visits every stream access (relative and absolute) in source order.
    pub fn for_each_access<'a>(&'a self, f: &mut dyn FnMut(&'a str, Access, Span)) {
        match &self.kind {
            ExprKind::Lit(_) | ExprKind::Keyword(_) => {}
            ExprKind::Access {
                stream,
                offset,
                default,
            } => {
                f(stream, Access::Relative(*offset), self.span);
                if let Some(d) = default {
                    d.for_each_access(f);
                }
            }
            ExprKind::Absolute {
                stream,
                index,
                default,
            } => {
                f(stream, Access::Absolute(*index), self.span);
                default.for_each_access(f);
            }
            ExprKind::Call { args, .. } => args.iter().for_each(|a| a.for_each_access(f)),
            ExprKind::Unary { operand, .. } => operand.for_each_access(f),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.for_each_access(f);
                rhs.for_each_access(f);
            }
            ExprKind::If {
                cond,
                then,
                elifs,
                otherwise,
            } => {
                cond.for_each_access(f);
                then.for_each_access(f);
                for (c, e) in elifs {
                    c.for_each_access(f);
                    e.for_each_access(f);
                }
                otherwise.for_each_access(f);
            }
            ExprKind::Switch {
                scrutinee,
                cases,
                default,
            } => {
                scrutinee.for_each_access(f);
                cases.iter().for_each(|(_, e)| e.for_each_access(f));
                default.for_each_access(f);
            }
        }
    }

    fn for_each_span_mut(&mut self, f: &mut dyn FnMut(&mut Span)) {
        f(&mut self.span);
        match &mut self.kind {
            ExprKind::Lit(_) | ExprKind::Keyword(_) => {}
            ExprKind::Access { default, .. } => {
                if let Some(d) = default {
                    d.for_each_span_mut(f);
                }
            }
            ExprKind::Absolute { default, .. } => default.for_each_span_mut(f),
            ExprKind::Call { args, .. } => args.iter_mut().for_each(|a| a.for_each_span_mut(f)),
            ExprKind::Unary { operand, .. } => operand.for_each_span_mut(f),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.for_each_span_mut(f);
                rhs.for_each_span_mut(f);
            }
            ExprKind::If {
                cond,
                then,
                elifs,
                otherwise,
            } => {
                cond.for_each_span_mut(f);
                then.for_each_span_mut(f);
                for (c, e) in elifs {
                    c.for_each_span_mut(f);
                    e.for_each_span_mut(f);
                }
                otherwise.for_each_span_mut(f);
            }
            ExprKind::Switch {
                scrutinee,
                cases,
                default,
            } => {
                scrutinee.for_each_span_mut(f);
                cases.iter_mut().for_each(|(_, e)| e.for_each_span_mut(f));
                default.for_each_span_mut(f);
            }
        }
    }
}

/// How a stream is accessed from an expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Access {
    Relative(i64),
    Absolute(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamDecl {
    pub name: String,
    pub ty: StreamType,
    pub kind: StreamKind,
    pub definition: Option<Expr>,
    /// Declared with `const`; cleared by desugaring.
    pub constant: bool,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackKind {
    Trigger,
    TriggerOnce,
    TriggerChange,
    Snapshot,
    Tag,
    Filter,
}

impl FeedbackKind {
    pub fn keyword(self) -> &'static str {
        match self {
            FeedbackKind::Trigger => "trigger",
            FeedbackKind::TriggerOnce => "trigger_once",
            FeedbackKind::TriggerChange => "trigger_change",
            FeedbackKind::Snapshot => "snapshot",
            FeedbackKind::Tag => "tag",
            FeedbackKind::Filter => "filter",
        }
    }

    pub fn is_offline(self) -> bool {
        matches!(self, FeedbackKind::Tag | FeedbackKind::Filter)
    }
}

impl fmt::Display for FeedbackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagBinding {
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackDecl {
    pub kind: FeedbackKind,
    pub condition: Expr,
    /// Explicit message, if any. Message-less triggers report `condition_text`.
    pub message: Option<String>,
    pub bindings: Vec<TagBinding>,
    pub location: Option<String>,
    /// Source text of the condition, used as the fallback message.
    pub condition_text: String,
    pub span: Span,
}

impl FeedbackDecl {
    pub fn effective_message(&self) -> &str {
        self.message.as_deref().unwrap_or(&self.condition_text)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Specification {
    pub inputs: Vec<StreamDecl>,
    pub outputs: Vec<StreamDecl>,
    pub feedback: Vec<FeedbackDecl>,
}

impl Specification {
    pub fn streams(&self) -> impl Iterator<Item = &StreamDecl> {
        self.inputs.iter().chain(self.outputs.iter())
    }

    pub fn stream(&self, name: &str) -> Option<&StreamDecl> {
        self.streams().find(|s| s.name == name)
    }

    /// Resets every span (and the layout-dependent condition text) so that
    /// structurally equal specifications compare equal regardless of layout.
    pub fn strip_layout(&mut self) {
        let mut clear = |s: &mut Span| *s = Span::default();
        for decl in self.inputs.iter_mut().chain(self.outputs.iter_mut()) {
            decl.span = Span::default();
            if let Some(def) = &mut decl.definition {
                def.for_each_span_mut(&mut clear);
            }
        }
        for fb in &mut self.feedback {
            fb.span = Span::default();
            fb.condition_text.clear();
            fb.condition.for_each_span_mut(&mut clear);
        }
    }
}
