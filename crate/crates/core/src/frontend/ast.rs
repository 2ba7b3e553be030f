//! Syntax tree for the supported Solidity subset.
//!
//! Every node carries a [`Span`]. `msg.sender`, `msg.value` and `this` have
//! dedicated variants so rules can match them structurally, and every
//! ether-transfer syntax ends up as an [`ExprKind::Call`] whose [`CallKind`]
//! is filled in by call-form normalization.

use serde::Serialize;

use crate::span::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Diagnostic {
    pub span: Span,
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    pub fn error(span: Span, message: impl Into<String>) -> Self {
        Diagnostic { span, severity: Severity::Error, message: message.into() }
    }

    pub fn warning(span: Span, message: impl Into<String>) -> Self {
        Diagnostic { span, severity: Severity::Warning, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceUnit {
    pub path: String,
    pub pragma: Option<String>,
    pub contracts: Vec<ContractDef>,
    pub diagnostics: Vec<Diagnostic>,
    /// Length of the source text in bytes.
    pub len: u32,
}

impl SourceUnit {
    pub fn contract(&self, name: &str) -> Option<&ContractDef> {
        self.contracts.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractKind {
    Contract,
    Interface,
    Library,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UsingDirective {
    pub library: String,
    /// `None` for `using L for *`.
    pub target_type: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractDef {
    pub name: String,
    pub kind: ContractKind,
    pub is_abstract: bool,
    /// Base contracts in declaration order.
    pub bases: Vec<String>,
    pub state_vars: Vec<StateVarDef>,
    pub functions: Vec<FunctionDef>,
    pub modifiers: Vec<ModifierDef>,
    pub using: Vec<UsingDirective>,
    /// Names of structs and enums declared inside the contract.
    pub type_decls: Vec<String>,
    pub span: Span,
}

impl ContractDef {
    pub fn constructor(&self) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.is_constructor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    Public,
    External,
    Internal,
    Private,
}

impl Visibility {
    pub fn is_callable_from_outside(self) -> bool {
        matches!(self, Visibility::Public | Visibility::External)
    }
}

/// `constant` functions are parsed as `View`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutability {
    NonPayable,
    View,
    Pure,
    Payable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVarDef {
    pub name: String,
    pub type_name: String,
    pub visibility: Visibility,
    pub is_constant_or_immutable: bool,
    pub initializer: Option<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub type_name: String,
    pub name: Option<String>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModifierInvocation {
    pub name: String,
    /// `None` when written without parentheses.
    pub args: Option<Vec<Expr>>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionKind {
    Function,
    Constructor,
    Fallback,
    Receive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDef {
    /// Empty for fallback and receive functions.
    pub name: String,
    pub kind: FunctionKind,
    pub visibility: Visibility,
    pub mutability: Mutability,
    pub modifiers_invoked: Vec<ModifierInvocation>,
    pub params: Vec<Param>,
    pub returns: Vec<Param>,
    pub body: Option<Block>,
    pub is_constructor: bool,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModifierDef {
    pub name: String,
    pub params: Vec<Param>,
    pub body: Block,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub unchecked: bool,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalVar {
    pub type_name: String,
    /// `memory`, `storage` or `calldata`.
    pub location: Option<String>,
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RevertKind {
    /// Pre-0.5 `throw;`
    Throw,
    /// `revert(...)`
    Call(Vec<Expr>),
    /// `revert CustomError(...)`
    Error { name: String, args: Vec<Expr> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Block(Block),
    If { cond: Expr, then_branch: Box<Stmt>, else_branch: Option<Box<Stmt>> },
    While { cond: Expr, body: Box<Stmt> },
    DoWhile { body: Box<Stmt>, cond: Expr },
    For { init: Option<Box<Stmt>>, cond: Option<Expr>, update: Option<Expr>, body: Box<Stmt> },
    Require { cond: Expr, message: Option<Expr>, is_assert: bool },
    Return(Option<Expr>),
    Revert(RevertKind),
    /// Single declaration, or a tuple declaration (`tuple == true`) whose
    /// empty slots are `None`.
    LocalDecl { vars: Vec<Option<LocalVar>>, tuple: bool, init: Option<Expr> },
    Assign { target: Expr, op: AssignOp, value: Expr },
    Expr(Expr),
    Emit(Expr),
    Placeholder,
    Break,
    Continue,
    /// Construct the analyzer does not model (assembly, try/catch, ...).
    /// Treated as a potential write to unknown state.
    Opaque { reason: String, text: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum AssignOp {
    #[serde(rename = "=")]
    Assign,
    #[serde(rename = "+=")]
    Add,
    #[serde(rename = "-=")]
    Sub,
    #[serde(rename = "*=")]
    Mul,
    #[serde(rename = "/=")]
    Div,
    #[serde(rename = "%=")]
    Mod,
    #[serde(rename = "|=")]
    BitOr,
    #[serde(rename = "&=")]
    BitAnd,
    #[serde(rename = "^=")]
    BitXor,
    #[serde(rename = "<<=")]
    Shl,
    #[serde(rename = ">>=")]
    Shr,
}

impl AssignOp {
    pub fn from_token(t: &str) -> Option<Self> {
        Some(match t {
            "=" => AssignOp::Assign,
            "+=" => AssignOp::Add,
            "-=" => AssignOp::Sub,
            "*=" => AssignOp::Mul,
            "/=" => AssignOp::Div,
            "%=" => AssignOp::Mod,
            "|=" => AssignOp::BitOr,
            "&=" => AssignOp::BitAnd,
            "^=" => AssignOp::BitXor,
            "<<=" => AssignOp::Shl,
            ">>=" => AssignOp::Shr,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AssignOp::Assign => "=",
            AssignOp::Add => "+=",
            AssignOp::Sub => "-=",
            AssignOp::Mul => "*=",
            AssignOp::Div => "/=",
            AssignOp::Mod => "%=",
            AssignOp::BitOr => "|=",
            AssignOp::BitAnd => "&=",
            AssignOp::BitXor => "^=",
            AssignOp::Shl => "<<=",
            AssignOp::Shr => ">>=",
        }
    }

    pub fn is_compound(self) -> bool {
        self != AssignOp::Assign
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    BitOr,
    BitXor,
    BitAnd,
    Shl,
    Shr,
    Sar,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Pow,
}

impl BinOp {
    pub fn from_token(t: &str) -> Option<Self> {
        Some(match t {
            "||" => BinOp::Or,
            "&&" => BinOp::And,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "<" => BinOp::Lt,
            ">" => BinOp::Gt,
            "<=" => BinOp::Le,
            ">=" => BinOp::Ge,
            "|" => BinOp::BitOr,
            "^" => BinOp::BitXor,
            "&" => BinOp::BitAnd,
            "<<" => BinOp::Shl,
            ">>" => BinOp::Shr,
            ">>>" => BinOp::Sar,
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "%" => BinOp::Mod,
            "**" => BinOp::Pow,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BinOp::Or => "||",
            BinOp::And => "&&",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::BitOr => "|",
            BinOp::BitXor => "^",
            BinOp::BitAnd => "&",
            BinOp::Shl => "<<",
            BinOp::Shr => ">>",
            BinOp::Sar => ">>>",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Pow => "**",
        }
    }

    /// Binding power; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => 4,
            BinOp::BitOr => 5,
            BinOp::BitXor => 6,
            BinOp::BitAnd => 7,
            BinOp::Shl | BinOp::Shr | BinOp::Sar => 8,
            BinOp::Add | BinOp::Sub => 9,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 10,
            BinOp::Pow => 11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
    BitNot,
    Inc,
    Dec,
    Delete,
}

impl UnOp {
    pub fn as_str(self) -> &'static str {
        match self {
            UnOp::Not => "!",
            UnOp::Neg => "-",
            UnOp::BitNot => "~",
            UnOp::Inc => "++",
            UnOp::Dec => "--",
            UnOp::Delete => "delete",
        }
    }

    pub fn writes_operand(self) -> bool {
        matches!(self, UnOp::Inc | UnOp::Dec | UnOp::Delete)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LitKind {
    Number,
    Address,
    String,
    Bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Literal {
    pub kind: LitKind,
    /// Source text, verbatim (checksum casing of addresses preserved).
    pub text: String,
    /// Ether or time unit suffix, e.g. `ether`.
    pub unit: Option<String>,
}

impl Literal {
    pub fn is_zero(&self) -> bool {
        match self.kind {
            LitKind::Number => {
                let digits = self.text.trim_start_matches("0x").trim_start_matches("0X");
                !digits.is_empty() && digits.chars().all(|c| c == '0' || c == '_' || c == '.')
            }
            LitKind::Address => self.text[2..].chars().all(|c| c == '0'),
            _ => false,
        }
    }
}

/// Compare address literals ignoring checksum casing and the `0x` prefix.
pub fn same_address(a: &str, b: &str) -> bool {
    let strip = |s: &str| s.trim_start_matches("0x").trim_start_matches("0X").to_ascii_lowercase();
    strip(a) == strip(b)
}

/// Canonical classification of call expressions.
///
/// `LowLevelCall`, `Transfer`, `Send`, `ExternalMemberCall` and
/// `DelegateCall` leave the current contract; the rest do not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CallKind {
    Unresolved,
    Internal,
    Builtin,
    LowLevelCall,
    Transfer,
    Send,
    ExternalMemberCall,
    DelegateCall,
}

impl CallKind {
    pub fn is_external(self) -> bool {
        matches!(
            self,
            CallKind::LowLevelCall
                | CallKind::Transfer
                | CallKind::Send
                | CallKind::ExternalMemberCall
                | CallKind::DelegateCall
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CallKind::Unresolved => "unresolved",
            CallKind::Internal => "internal",
            CallKind::Builtin => "builtin",
            CallKind::LowLevelCall => "low_level_call",
            CallKind::Transfer => "transfer",
            CallKind::Send => "send",
            CallKind::ExternalMemberCall => "external_member_call",
            CallKind::DelegateCall => "delegatecall",
        }
    }

    pub const EXTERNAL: [CallKind; 5] = [
        CallKind::LowLevelCall,
        CallKind::Transfer,
        CallKind::Send,
        CallKind::ExternalMemberCall,
        CallKind::DelegateCall,
    ];

    pub fn parse_external(s: &str) -> Option<CallKind> {
        CallKind::EXTERNAL.into_iter().find(|k| k.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptionStyle {
    None,
    /// `.value(v)` / `.gas(g)` chains (pre-0.7).
    Legacy,
    /// `{value: v, gas: g}` (0.6.2+).
    Braced,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CallOption {
    pub name: String,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CallArgs {
    Positional(Vec<Expr>),
    Named(Vec<(String, Expr)>),
}

impl CallArgs {
    pub fn len(&self) -> usize {
        match self {
            CallArgs::Positional(v) => v.len(),
            CallArgs::Named(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn exprs(&self) -> Box<dyn Iterator<Item = &Expr> + '_> {
        match self {
            CallArgs::Positional(v) => Box::new(v.iter()),
            CallArgs::Named(v) => Box::new(v.iter().map(|(_, e)| e)),
        }
    }

    pub fn positional(&self) -> Option<&[Expr]> {
        match self {
            CallArgs::Positional(v) => Some(v),
            CallArgs::Named(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Call {
    pub callee: Box<Expr>,
    pub args: CallArgs,
    pub options: Vec<CallOption>,
    pub option_style: OptionStyle,
    pub kind: CallKind,
}

impl Call {
    fn option(&self, name: &str) -> Option<&Expr> {
        self.options.iter().find(|o| o.name == name).map(|o| &o.value)
    }

    /// Ether amount attached to the call: the `value` option, or the single
    /// argument of `transfer`/`send`.
    pub fn value_slot(&self) -> Option<&Expr> {
        match self.kind {
            CallKind::Transfer | CallKind::Send => self.args.positional().and_then(|a| a.first()),
            _ => self.option("value"),
        }
    }

    pub fn gas_option(&self) -> Option<&Expr> {
        self.option("gas")
    }

    /// For member calls, the receiver expression (`x` in `x.f(...)`).
    pub fn receiver(&self) -> Option<&Expr> {
        match &self.callee.kind {
            ExprKind::Member { base, .. } => Some(base),
            _ => None,
        }
    }

    pub fn member_name(&self) -> Option<&str> {
        match &self.callee.kind {
            ExprKind::Member { member, .. } => Some(member),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Ident(String),
    Member { base: Box<Expr>, member: String },
    Index { base: Box<Expr>, index: Option<Box<Expr>> },
    Call(Call),
    Literal(Literal),
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Unary { op: UnOp, operand: Box<Expr>, prefix: bool },
    Ternary { cond: Box<Expr>, then_expr: Box<Expr>, else_expr: Box<Expr> },
    Assign { target: Box<Expr>, op: AssignOp, value: Box<Expr> },
    Tuple(Vec<Option<Expr>>),
    ArrayLit(Vec<Expr>),
    Paren(Box<Expr>),
    MsgSender,
    MsgValue,
    This,
    TypeCast { type_name: String, arg: Box<Expr> },
    New(String),
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    /// Strips parentheses and single-element tuples.
    pub fn peeled(&self) -> &Expr {
        match &self.kind {
            ExprKind::Paren(inner) => inner.peeled(),
            ExprKind::Tuple(items) if items.len() == 1 => match &items[0] {
                Some(e) => e.peeled(),
                None => self,
            },
            _ => self,
        }
    }

    pub fn as_ident(&self) -> Option<&str> {
        match &self.peeled().kind {
            ExprKind::Ident(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_call(&self) -> Option<&Call> {
        match &self.peeled().kind {
            ExprKind::Call(c) => Some(c),
            _ => None,
        }
    }

    /// The variable at the root of an lvalue chain (`a` in `a[i].b`).
    pub fn root_ident(&self) -> Option<&str> {
        match &self.peeled().kind {
            ExprKind::Ident(n) => Some(n),
            ExprKind::Member { base, .. } | ExprKind::Index { base, .. } => base.root_ident(),
            _ => None,
        }
    }

    /// Pre-order traversal over this expression and all sub-expressions.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        self.for_each_child(&mut |c| c.walk(f));
    }

    pub fn for_each_child<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        match &self.kind {
            ExprKind::Member { base, .. } => f(base),
            ExprKind::Index { base, index } => {
                f(base);
                if let Some(i) = index {
                    f(i);
                }
            }
            ExprKind::Call(call) => {
                f(&call.callee);
                for o in &call.options {
                    f(&o.value);
                }
                for a in call.args.exprs() {
                    f(a);
                }
            }
            ExprKind::Binary { lhs, rhs, .. } => {
                f(lhs);
                f(rhs);
            }
            ExprKind::Unary { operand, .. } => f(operand),
            ExprKind::Ternary { cond, then_expr, else_expr } => {
                f(cond);
                f(then_expr);
                f(else_expr);
            }
            ExprKind::Assign { target, value, .. } => {
                f(target);
                f(value);
            }
            ExprKind::Tuple(items) => items.iter().flatten().for_each(f),
            ExprKind::ArrayLit(items) => items.iter().for_each(f),
            ExprKind::Paren(inner) => f(inner),
            ExprKind::TypeCast { arg, .. } => f(arg),
            ExprKind::Ident(_)
            | ExprKind::Literal(_)
            | ExprKind::MsgSender
            | ExprKind::MsgValue
            | ExprKind::This
            | ExprKind::New(_) => {}
        }
    }

    pub fn for_each_child_mut(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        match &mut self.kind {
            ExprKind::Member { base, .. } => f(base),
            ExprKind::Index { base, index } => {
                f(base);
                if let Some(i) = index {
                    f(i);
                }
            }
            ExprKind::Call(call) => {
                f(&mut call.callee);
                for o in &mut call.options {
                    f(&mut o.value);
                }
                match &mut call.args {
                    CallArgs::Positional(v) => v.iter_mut().for_each(&mut *f),
                    CallArgs::Named(v) => v.iter_mut().for_each(|(_, e)| f(e)),
                }
            }
            ExprKind::Binary { lhs, rhs, .. } => {
                f(lhs);
                f(rhs);
            }
            ExprKind::Unary { operand, .. } => f(operand),
            ExprKind::Ternary { cond, then_expr, else_expr } => {
                f(cond);
                f(then_expr);
                f(else_expr);
            }
            ExprKind::Assign { target, value, .. } => {
                f(target);
                f(value);
            }
            ExprKind::Tuple(items) => items.iter_mut().flatten().for_each(f),
            ExprKind::ArrayLit(items) => items.iter_mut().for_each(f),
            ExprKind::Paren(inner) => f(inner),
            ExprKind::TypeCast { arg, .. } => f(arg),
            ExprKind::Ident(_)
            | ExprKind::Literal(_)
            | ExprKind::MsgSender
            | ExprKind::MsgValue
            | ExprKind::This
            | ExprKind::New(_) => {}
        }
    }

    /// Structural equality that ignores spans.
    pub fn same_shape(&self, other: &Expr) -> bool {
        crate::frontend::render::expr_text(self) == crate::frontend::render::expr_text(other)
    }
}

impl Stmt {
    pub fn new(kind: StmtKind, span: Span) -> Self {
        Stmt { kind, span }
    }

    /// Expressions held directly by this statement (not by nested statements).
    pub fn own_exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } | StmtKind::DoWhile { cond, .. } => vec![cond],
            StmtKind::For { cond, update, .. } => cond.iter().chain(update.iter()).collect(),
            StmtKind::Require { cond, message, .. } => std::iter::once(cond).chain(message.iter()).collect(),
            StmtKind::Return(e) => e.iter().collect(),
            StmtKind::Revert(RevertKind::Call(args)) | StmtKind::Revert(RevertKind::Error { args, .. }) => {
                args.iter().collect()
            }
            StmtKind::LocalDecl { init, .. } => init.iter().collect(),
            StmtKind::Assign { target, value, .. } => vec![target, value],
            StmtKind::Expr(e) | StmtKind::Emit(e) => vec![e],
            _ => Vec::new(),
        }
    }

    /// Direct child statements.
    pub fn children(&self) -> Vec<&Stmt> {
        match &self.kind {
            StmtKind::Block(b) => b.stmts.iter().collect(),
            StmtKind::If { then_branch, else_branch, .. } => {
                std::iter::once(then_branch.as_ref()).chain(else_branch.as_deref()).collect()
            }
            StmtKind::While { body, .. } | StmtKind::DoWhile { body, .. } => vec![body],
            StmtKind::For { init, body, .. } => init.as_deref().into_iter().chain(std::iter::once(body.as_ref())).collect(),
            _ => Vec::new(),
        }
    }

    /// Pre-order traversal over this statement and all nested statements.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    pub fn for_each_expr_mut(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        match &mut self.kind {
            StmtKind::Block(b) => b.stmts.iter_mut().for_each(|s| s.for_each_expr_mut(f)),
            StmtKind::If { cond, then_branch, else_branch } => {
                f(cond);
                then_branch.for_each_expr_mut(f);
                if let Some(e) = else_branch {
                    e.for_each_expr_mut(f);
                }
            }
            StmtKind::While { cond, body } | StmtKind::DoWhile { body, cond } => {
                f(cond);
                body.for_each_expr_mut(f);
            }
            StmtKind::For { init, cond, update, body } => {
                if let Some(i) = init {
                    i.for_each_expr_mut(f);
                }
                if let Some(c) = cond {
                    f(c);
                }
                if let Some(u) = update {
                    f(u);
                }
                body.for_each_expr_mut(f);
            }
            StmtKind::Require { cond, message, .. } => {
                f(cond);
                if let Some(m) = message {
                    f(m);
                }
            }
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    f(e);
                }
            }
            StmtKind::Revert(RevertKind::Call(args)) | StmtKind::Revert(RevertKind::Error { args, .. }) => {
                args.iter_mut().for_each(&mut *f)
            }
            StmtKind::LocalDecl { init, .. } => {
                if let Some(i) = init {
                    f(i);
                }
            }
            StmtKind::Assign { target, value, .. } => {
                f(target);
                f(value);
            }
            StmtKind::Expr(e) | StmtKind::Emit(e) => f(e),
            _ => {}
        }
    }
}

impl Block {
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        for s in &self.stmts {
            s.walk(f);
        }
    }

    /// Every expression in the block, including nested sub-expressions.
    pub fn walk_exprs<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        self.walk(&mut |s| {
            for e in s.own_exprs() {
                e.walk(f);
            }
        });
    }
}

/// Textual type helpers. Type names are stored with tokens joined so that
/// `mapping(address => uint256)` and `uint256[]` read naturally.
pub mod types {
    pub fn is_address(t: &str) -> bool {
        t == "address" || t == "address payable"
    }

    pub fn is_bool(t: &str) -> bool {
        t == "bool"
    }

    pub fn is_mapping(t: &str) -> bool {
        t.starts_with("mapping(")
    }

    pub fn is_array(t: &str) -> bool {
        t.ends_with(']')
    }

    /// Key and value types of a mapping type name.
    pub fn mapping_parts(t: &str) -> Option<(String, String)> {
        let inner = t.strip_prefix("mapping(")?.strip_suffix(')')?;
        let mut depth = 0i32;
        let bytes = inner.as_bytes();
        for i in 0..bytes.len() {
            match bytes[i] {
                b'(' => depth += 1,
                b')' => depth -= 1,
                b'=' if depth == 0 && bytes.get(i + 1) == Some(&b'>') => {
                    let key = inner[..i].trim();
                    let value = inner[i + 2..].trim();
                    // named mapping parameters: `address user => uint amount`
                    let key = key.split_whitespace().next().unwrap_or(key);
                    let value = if is_mapping(value) {
                        value.to_string()
                    } else {
                        strip_trailing_name(value)
                    };
                    return Some((key.to_string(), value));
                }
                _ => {}
            }
        }
        None
    }

    fn strip_trailing_name(value: &str) -> String {
        let parts: Vec<&str> = value.split_whitespace().collect();
        if parts.len() == 2 && parts[0] != "address" {
            parts[0].to_string()
        } else if parts.len() == 3 && parts[0] == "address" && parts[1] == "payable" {
            "address payable".to_string()
        } else {
            value.to_string()
        }
    }

    /// `bool`, `uint*`, `int*`, `bytes*`, `string`, `address` and friends.
    pub fn is_elementary(t: &str) -> bool {
        let base = t.split_whitespace().next().unwrap_or(t);
        matches!(base, "address" | "bool" | "string" | "bytes" | "byte" | "uint" | "int" | "var" | "payable")
            || numeric_suffix(base, "uint")
            || numeric_suffix(base, "int")
            || numeric_suffix(base, "bytes")
            || base.starts_with("fixed")
            || base.starts_with("ufixed")
    }

    fn numeric_suffix(word: &str, prefix: &str) -> bool {
        word.strip_prefix(prefix).is_some_and(|rest| !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()))
    }

    /// Value types that can never be the receiver of an external call.
    pub fn is_non_address_value(t: &str) -> bool {
        (is_elementary(t) && !is_address(t) && t != "payable") || is_array(t) || is_mapping(t)
    }

    pub fn is_data_location(word: &str) -> bool {
        matches!(word, "memory" | "storage" | "calldata")
    }
}
