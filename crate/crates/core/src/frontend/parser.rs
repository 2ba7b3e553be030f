//! Recursive-descent parser with statement-level error recovery.
//!
//! Recoverable errors become diagnostics plus an `Opaque` statement (or a
//! skipped contract member); only non-UTF-8 or oversized input and
//! unbalanced braces abort parsing.

use thiserror::Error;

use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use super::normalize::normalize_call_forms;
use crate::span::Span;

pub const DEFAULT_MAX_BYTES: usize = 2 * 1024 * 1024;
pub const DEFAULT_MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseOptions {
    pub max_bytes: usize,
    /// Combined statement/expression nesting beyond which a construct is
    /// made opaque.
    pub max_depth: usize,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { max_bytes: DEFAULT_MAX_BYTES, max_depth: DEFAULT_MAX_DEPTH }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("{path}: unreadable input at byte {}: {reason}", span.start)]
    UnreadableInput { path: String, span: Span, reason: String },
    #[error("{path}:{span}: {message}")]
    FatalSyntax { path: String, span: Span, message: String },
}

pub fn parse_source(text: &str, path: &str) -> Result<SourceUnit, ParseError> {
    parse_source_with(text, path, &ParseOptions::default())
}

/// Entry point for raw file contents; rejects non-UTF-8 input.
pub fn parse_bytes(bytes: &[u8], path: &str, opts: &ParseOptions) -> Result<SourceUnit, ParseError> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_source_with(text, path, opts),
        Err(e) => Err(ParseError::UnreadableInput {
            path: path.to_string(),
            span: Span::new(0, 0, e.valid_up_to() as u32, e.valid_up_to() as u32),
            reason: "input is not valid UTF-8".into(),
        }),
    }
}

pub fn parse_source_with(text: &str, path: &str, opts: &ParseOptions) -> Result<SourceUnit, ParseError> {
    if text.len() > opts.max_bytes {
        return Err(ParseError::UnreadableInput {
            path: path.to_string(),
            span: Span::new(0, 0, opts.max_bytes as u32, opts.max_bytes as u32),
            reason: format!("input is {} bytes, limit is {}", text.len(), opts.max_bytes),
        });
    }
    let toks = tokenize(text);
    check_braces(text, &toks).map_err(|(span, message)| ParseError::FatalSyntax {
        path: path.to_string(),
        span,
        message,
    })?;
    let mut p = Parser { src: text, toks, pos: 0, diags: Vec::new(), depth: 0, max_depth: opts.max_depth };
    let (pragma, contracts) = p.source_unit();
    let mut unit = SourceUnit { path: path.to_string(), pragma, contracts, diagnostics: p.diags, len: text.len() as u32 };
    normalize_call_forms(&mut unit);
    unit.diagnostics.sort();
    Ok(unit)
}

fn check_braces(src: &str, toks: &[Token]) -> Result<(), (Span, String)> {
    let mut open: Vec<Span> = Vec::new();
    for t in toks {
        match (t.kind, t.text(src)) {
            (TokenKind::Punct, "{") => open.push(t.span),
            (TokenKind::Punct, "}") => {
                if open.pop().is_none() {
                    return Err((t.span, "unmatched closing brace".into()));
                }
            }
            _ => {}
        }
    }
    match open.pop() {
        Some(span) => Err((span, "unclosed brace".into())),
        None => Ok(()),
    }
}

/// Marker for a failed production; the diagnostic is already recorded.
#[derive(Debug)]
struct Stall;

type PResult<T> = Result<T, Stall>;

const UNITS: &[&str] =
    &["wei", "gwei", "szabo", "finney", "ether", "seconds", "minutes", "hours", "days", "weeks", "years"];

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
    depth: usize,
    max_depth: usize,
}

fn join_compact(parts: &[&str]) -> String {
    let mut out = String::new();
    let mut prev = "";
    for (i, t) in parts.iter().enumerate() {
        let glue = i == 0
            || matches!(prev, "(" | "[" | ".")
            || matches!(*t, ")" | "]" | "," | "." | "[" | "(");
        if !glue {
            out.push(' ');
        }
        out.push_str(t);
        prev = t;
    }
    out
}

impl<'a> Parser<'a> {
    // ---- token helpers -------------------------------------------------

    fn tok(&self, ahead: usize) -> Option<&Token> {
        self.toks.get(self.pos + ahead)
    }

    fn text(&self, ahead: usize) -> &'a str {
        self.tok(ahead).map(|t| t.text(self.src)).unwrap_or("")
    }

    fn kind(&self, ahead: usize) -> Option<TokenKind> {
        self.tok(ahead).map(|t| t.kind)
    }

    fn at(&self, t: &str) -> bool {
        self.text(0) == t && self.kind(0).is_some()
    }

    fn at_eof(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn is_ident(&self, ahead: usize) -> bool {
        self.kind(ahead) == Some(TokenKind::Ident)
    }

    fn advance(&mut self) -> &'a str {
        let t = self.text(0);
        if !self.at_eof() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &str) -> bool {
        if self.at(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn here(&self) -> Span {
        match self.tok(0) {
            Some(t) => t.span,
            None => self.toks.last().map(|t| Span::new(t.span.line, t.span.column, t.span.end, t.span.end)).unwrap_or_default(),
        }
    }

    fn error<T>(&mut self, msg: impl Into<String>) -> PResult<T> {
        let span = self.here();
        let found = if self.at_eof() { "end of input".to_string() } else { format!("'{}'", self.text(0)) };
        self.diags.push(Diagnostic::error(span, format!("{}, found {}", msg.into(), found)));
        Err(Stall)
    }

    fn expect(&mut self, t: &str) -> PResult<()> {
        if self.eat(t) {
            Ok(())
        } else {
            self.error(format!("expected '{t}'"))
        }
    }

    fn expect_ident(&mut self) -> PResult<String> {
        if self.is_ident(0) {
            Ok(self.advance().to_string())
        } else {
            self.error("expected identifier")
        }
    }

    /// Span covering tokens from `start` up to the last consumed token.
    fn span_since(&self, start: usize) -> Span {
        let first = self.toks.get(start).map(|t| t.span).unwrap_or_else(|| self.here());
        if self.pos == 0 || self.pos <= start {
            return Span::new(first.line, first.column, first.start, first.start);
        }
        let last = self.toks[self.pos - 1].span;
        Span::new(first.line, first.column, first.start, last.end)
    }

    fn text_since(&self, start: usize) -> String {
        self.span_since(start).slice(self.src).to_string()
    }

    /// Index of the token matching the opener at `idx`.
    fn matching(&self, idx: usize) -> Option<usize> {
        let open = self.toks.get(idx)?.text(self.src);
        let close = match open {
            "(" => ")",
            "[" => "]",
            "{" => "}",
            _ => return None,
        };
        let mut depth = 0usize;
        for (i, t) in self.toks.iter().enumerate().skip(idx) {
            if t.kind != TokenKind::Punct {
                continue;
            }
            let s = t.text(self.src);
            if s == open {
                depth += 1;
            } else if s == close {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
        }
        None
    }

    fn skip_balanced(&mut self) {
        match self.matching(self.pos) {
            Some(end) => self.pos = end + 1,
            None => self.pos = self.toks.len(),
        }
    }

    /// Skip to the end of an item: past the next `;` at nesting level zero,
    /// or past the first balanced `{...}`.
    fn skip_item(&mut self) {
        let start = self.pos;
        while !self.at_eof() {
            match self.text(0) {
                ";" => {
                    self.pos += 1;
                    return;
                }
                "{" => {
                    self.skip_balanced();
                    return;
                }
                "(" | "[" => self.skip_balanced(),
                "}" if self.pos > start => return,
                "}" => {
                    self.pos += 1;
                    return;
                }
                _ => self.pos += 1,
            }
        }
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > self.max_depth {
            self.depth -= 1;
            let span = self.here();
            self.diags.push(Diagnostic::warning(span, format!("nesting deeper than {} levels treated as opaque", self.max_depth)));
            return Err(Stall);
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    // ---- declarations --------------------------------------------------

    fn source_unit(&mut self) -> (Option<String>, Vec<ContractDef>) {
        let mut pragma = None;
        let mut contracts: Vec<ContractDef> = Vec::new();
        while !self.at_eof() {
            match self.text(0) {
                "pragma" => {
                    self.advance();
                    let body_start = self.pos;
                    while !self.at_eof() && !self.at(";") {
                        self.pos += 1;
                    }
                    if pragma.is_none() && self.pos > body_start + 1 && self.toks[body_start].text(self.src) == "solidity" {
                        let from = self.toks[body_start + 1].span.start as usize;
                        let to = self.toks[self.pos - 1].span.end as usize;
                        pragma = Some(self.src[from..to].to_string());
                    }
                    self.eat(";");
                }
                "contract" | "interface" | "library" => self.push_contract(&mut contracts),
                "abstract" if self.text(1) == "contract" => self.push_contract(&mut contracts),
                _ => self.skip_item(),
            }
        }
        (pragma, contracts)
    }

    fn push_contract(&mut self, contracts: &mut Vec<ContractDef>) {
        let start = self.pos;
        match self.contract() {
            Ok(c) => {
                if contracts.iter().any(|d| d.name == c.name) {
                    self.diags.push(Diagnostic::error(c.span, format!("duplicate contract '{}' ignored", c.name)));
                } else {
                    contracts.push(c);
                }
            }
            Err(Stall) => {
                self.pos = start + 1;
                while !self.at_eof() && !self.at("{") {
                    self.pos += 1;
                }
                self.skip_balanced();
            }
        }
    }

    fn contract(&mut self) -> PResult<ContractDef> {
        let start = self.pos;
        let is_abstract = self.eat("abstract");
        let kind = match self.advance() {
            "interface" => ContractKind::Interface,
            "library" => ContractKind::Library,
            _ => ContractKind::Contract,
        };
        let name = self.expect_ident()?;
        let mut bases = Vec::new();
        if self.eat("is") {
            loop {
                let mut base = self.expect_ident()?;
                while self.at(".") && self.is_ident(1) {
                    self.advance();
                    base = self.advance().to_string();
                }
                if self.at("(") {
                    self.skip_balanced();
                }
                bases.push(base);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect("{")?;
        let mut c = ContractDef {
            name,
            kind,
            is_abstract,
            bases,
            state_vars: Vec::new(),
            functions: Vec::new(),
            modifiers: Vec::new(),
            using: Vec::new(),
            type_decls: Vec::new(),
            span: Span::default(),
        };
        while !self.at_eof() && !self.at("}") {
            let member_start = self.pos;
            if self.contract_member(&mut c).is_err() {
                self.pos = member_start;
                self.skip_item();
                if self.pos == member_start {
                    self.pos += 1;
                }
            }
        }
        self.expect("}")?;
        c.span = self.span_since(start);
        Ok(c)
    }

    fn contract_member(&mut self, c: &mut ContractDef) -> PResult<()> {
        match self.text(0) {
            "function" | "constructor" => {
                let f = self.function(&c.name)?;
                self.add_function(c, f);
            }
            "fallback" | "receive" if self.text(1) == "(" => {
                let f = self.function(&c.name)?;
                self.add_function(c, f);
            }
            "modifier" => {
                let m = self.modifier()?;
                c.modifiers.push(m);
            }
            "event" | "error" if self.is_ident(1) => self.skip_item(),
            "struct" | "enum" if self.is_ident(1) => {
                c.type_decls.push(self.text(1).to_string());
                self.skip_item();
            }
            "using" => {
                if let Some(u) = self.using()? {
                    c.using.push(u);
                }
            }
            "type" if self.text(2) == "is" => self.skip_item(),
            ";" => {
                self.advance();
            }
            _ => {
                let v = self.state_var()?;
                c.state_vars.push(v);
            }
        }
        Ok(())
    }

    fn add_function(&mut self, c: &mut ContractDef, f: FunctionDef) {
        if f.is_constructor && c.functions.iter().any(|g| g.is_constructor) {
            self.diags.push(Diagnostic::error(f.span, "second constructor ignored"));
            return;
        }
        c.functions.push(f);
    }

    fn using(&mut self) -> PResult<Option<UsingDirective>> {
        self.expect("using")?;
        if self.at("{") {
            self.skip_item();
            return Ok(None);
        }
        let mut library = self.expect_ident()?;
        while self.at(".") && self.is_ident(1) {
            self.advance();
            library = self.advance().to_string();
        }
        self.expect("for")?;
        let target_type = if self.eat("*") { None } else { Some(self.type_name()?) };
        self.eat("global");
        self.expect(";")?;
        Ok(Some(UsingDirective { library, target_type }))
    }

    fn state_var(&mut self) -> PResult<StateVarDef> {
        let start = self.pos;
        let type_name = self.type_name()?;
        let mut visibility = Visibility::Internal;
        let mut is_constant_or_immutable = false;
        loop {
            match self.text(0) {
                "public" => visibility = Visibility::Public,
                "private" => visibility = Visibility::Private,
                "internal" => visibility = Visibility::Internal,
                "constant" | "immutable" => is_constant_or_immutable = true,
                "transient" => {}
                "override" => {
                    self.advance();
                    if self.at("(") {
                        self.skip_balanced();
                    }
                    continue;
                }
                _ => break,
            }
            self.advance();
        }
        let name = self.expect_ident()?;
        let initializer = if self.eat("=") { Some(self.expr()?) } else { None };
        self.expect(";")?;
        Ok(StateVarDef { name, type_name, visibility, is_constant_or_immutable, initializer, span: self.span_since(start) })
    }

    /// Parses a type name and returns its compact text.
    fn type_name(&mut self) -> PResult<String> {
        let start = self.pos;
        match self.text(0) {
            "mapping" => {
                self.advance();
                self.expect("(")?;
                self.type_name()?;
                if self.is_ident(0) {
                    self.advance();
                }
                self.expect("=>")?;
                self.type_name()?;
                if self.is_ident(0) {
                    self.advance();
                }
                self.expect(")")?;
            }
            "function" => {
                self.advance();
                if !self.at("(") {
                    return self.error("expected '(' in function type");
                }
                self.skip_balanced();
                while matches!(self.text(0), "internal" | "external" | "pure" | "view" | "payable" | "constant") {
                    self.advance();
                }
                if self.eat("returns") {
                    if !self.at("(") {
                        return self.error("expected '(' after returns");
                    }
                    self.skip_balanced();
                }
            }
            "address" => {
                self.advance();
                self.eat("payable");
            }
            _ => {
                self.expect_ident()?;
                while self.at(".") && self.is_ident(1) {
                    self.advance();
                    self.advance();
                }
            }
        }
        while self.at("[") {
            self.skip_balanced();
        }
        let parts: Vec<&str> = self.toks[start..self.pos].iter().map(|t| t.text(self.src)).collect();
        Ok(join_compact(&parts))
    }

    fn param_list(&mut self) -> PResult<Vec<Param>> {
        self.expect("(")?;
        let mut params = Vec::new();
        if self.eat(")") {
            return Ok(params);
        }
        loop {
            let start = self.pos;
            let type_name = self.type_name()?;
            while matches!(self.text(0), "memory" | "storage" | "calldata" | "indexed") {
                self.advance();
            }
            let name = if self.is_ident(0) { Some(self.advance().to_string()) } else { None };
            params.push(Param { type_name, name, span: self.span_since(start) });
            if self.eat(")") {
                return Ok(params);
            }
            self.expect(",")?;
        }
    }

    fn function(&mut self, contract_name: &str) -> PResult<FunctionDef> {
        let start = self.pos;
        let kw = self.advance();
        let mut name = String::new();
        if kw == "function" && self.is_ident(0) {
            name = self.advance().to_string();
        }
        let kind = match kw {
            "constructor" => FunctionKind::Constructor,
            "fallback" => FunctionKind::Fallback,
            "receive" => FunctionKind::Receive,
            _ if name.is_empty() => FunctionKind::Fallback,
            _ if name == contract_name => FunctionKind::Constructor,
            _ => FunctionKind::Function,
        };
        let params = self.param_list()?;
        let mut visibility = None;
        let mut mutability = Mutability::NonPayable;
        let mut modifiers_invoked = Vec::new();
        let mut returns = Vec::new();
        loop {
            match self.text(0) {
                "{" | ";" => break,
                "public" => visibility = Some(Visibility::Public),
                "external" => visibility = Some(Visibility::External),
                "internal" => visibility = Some(Visibility::Internal),
                "private" => visibility = Some(Visibility::Private),
                "view" | "constant" => mutability = Mutability::View,
                "pure" => mutability = Mutability::Pure,
                "payable" => mutability = Mutability::Payable,
                "virtual" => {}
                "override" => {
                    self.advance();
                    if self.at("(") {
                        self.skip_balanced();
                    }
                    continue;
                }
                "returns" => {
                    self.advance();
                    returns = self.param_list()?;
                    continue;
                }
                _ if self.is_ident(0) => {
                    let m_start = self.pos;
                    let mut m_name = self.advance().to_string();
                    while self.at(".") && self.is_ident(1) {
                        self.advance();
                        m_name = self.advance().to_string();
                    }
                    let args = if self.at("(") { Some(self.positional_args()?) } else { None };
                    modifiers_invoked.push(ModifierInvocation { name: m_name, args, span: self.span_since(m_start) });
                    continue;
                }
                _ => return self.error("unexpected token in function header"),
            }
            self.advance();
        }
        let body = if self.eat(";") { None } else { Some(self.block()?) };
        let is_constructor = kind == FunctionKind::Constructor;
        let visibility = visibility.unwrap_or(match kind {
            FunctionKind::Fallback | FunctionKind::Receive => Visibility::External,
            _ => Visibility::Public,
        });
        Ok(FunctionDef {
            name,
            kind,
            visibility,
            mutability,
            modifiers_invoked,
            params,
            returns,
            body,
            is_constructor,
            span: self.span_since(start),
        })
    }

    fn modifier(&mut self) -> PResult<ModifierDef> {
        let start = self.pos;
        self.expect("modifier")?;
        let name = self.expect_ident()?;
        let params = if self.at("(") { self.param_list()? } else { Vec::new() };
        loop {
            match self.text(0) {
                "virtual" => {
                    self.advance();
                }
                "override" => {
                    self.advance();
                    if self.at("(") {
                        self.skip_balanced();
                    }
                }
                _ => break,
            }
        }
        let body = if self.at(";") {
            let span = self.here();
            self.advance();
            Block { stmts: Vec::new(), unchecked: false, span }
        } else {
            self.block()?
        };
        Ok(ModifierDef { name, params, body, span: self.span_since(start) })
    }

    // ---- statements ----------------------------------------------------

    fn block(&mut self) -> PResult<Block> {
        let start = self.pos;
        let unchecked = self.eat("unchecked");
        self.expect("{")?;
        let mut stmts = Vec::new();
        while !self.at_eof() && !self.at("}") {
            if let Some(s) = self.stmt_recovering() {
                stmts.push(s);
            }
        }
        self.expect("}")?;
        Ok(Block { stmts, unchecked, span: self.span_since(start) })
    }

    fn stmt_recovering(&mut self) -> Option<Stmt> {
        let start = self.pos;
        match self.stmt() {
            Ok(s) => Some(s),
            Err(Stall) => {
                self.pos = start;
                self.recover_stmt();
                if self.pos == start {
                    return None;
                }
                let span = self.span_since(start);
                Some(Stmt::new(
                    StmtKind::Opaque { reason: "unparsed statement".into(), text: self.text_since(start) },
                    span,
                ))
            }
        }
    }

    fn recover_stmt(&mut self) {
        let start = self.pos;
        while !self.at_eof() {
            match self.text(0) {
                ";" => {
                    self.pos += 1;
                    return;
                }
                "{" => {
                    self.skip_balanced();
                    if !matches!(self.text(0), "else" | "catch") {
                        return;
                    }
                }
                "(" | "[" => self.skip_balanced(),
                "}" => {
                    if self.pos == start {
                        self.pos += 1;
                    }
                    return;
                }
                _ => self.pos += 1,
            }
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        self.enter()?;
        let r = self.stmt_inner();
        self.leave();
        r
    }

    fn opaque_skip(&mut self, start: usize, reason: &str) -> Stmt {
        // braced call options (`t.f{value: v}()`) are not the body
        while !self.at_eof() && !(self.at("{") && !(self.is_ident(1) && self.text(2) == ":")) {
            if matches!(self.text(0), "(" | "[" | "{") {
                self.skip_balanced();
            } else {
                self.pos += 1;
            }
        }
        self.skip_balanced();
        while self.at("catch") {
            while !self.at_eof() && !self.at("{") {
                self.pos += 1;
            }
            self.skip_balanced();
        }
        let span = self.span_since(start);
        self.diags.push(Diagnostic::warning(span, format!("{reason} treated as opaque state write")));
        Stmt::new(StmtKind::Opaque { reason: reason.into(), text: self.text_since(start) }, span)
    }

    fn stmt_inner(&mut self) -> PResult<Stmt> {
        let start = self.pos;
        let kind = match self.text(0) {
            "{" => StmtKind::Block(self.block()?),
            "unchecked" if self.text(1) == "{" => StmtKind::Block(self.block()?),
            "if" => {
                self.advance();
                self.expect("(")?;
                let cond = self.expr()?;
                self.expect(")")?;
                let then_branch = Box::new(self.stmt()?);
                let else_branch = if self.eat("else") { Some(Box::new(self.stmt()?)) } else { None };
                StmtKind::If { cond, then_branch, else_branch }
            }
            "while" => {
                self.advance();
                self.expect("(")?;
                let cond = self.expr()?;
                self.expect(")")?;
                StmtKind::While { cond, body: Box::new(self.stmt()?) }
            }
            "do" => {
                self.advance();
                let body = Box::new(self.stmt()?);
                self.expect("while")?;
                self.expect("(")?;
                let cond = self.expr()?;
                self.expect(")")?;
                self.expect(";")?;
                StmtKind::DoWhile { body, cond }
            }
            "for" => {
                self.advance();
                self.expect("(")?;
                let init = if self.eat(";") { None } else { Some(Box::new(self.simple_stmt()?)) };
                let cond = if self.at(";") { None } else { Some(self.expr()?) };
                self.expect(";")?;
                let update = if self.at(")") { None } else { Some(self.expr()?) };
                self.expect(")")?;
                StmtKind::For { init, cond, update, body: Box::new(self.stmt()?) }
            }
            "return" => {
                self.advance();
                let value = if self.at(";") { None } else { Some(self.expr()?) };
                self.expect(";")?;
                StmtKind::Return(value)
            }
            "throw" if self.text(1) == ";" => {
                self.advance();
                self.advance();
                StmtKind::Revert(RevertKind::Throw)
            }
            "emit" => {
                self.advance();
                let e = self.expr()?;
                self.expect(";")?;
                StmtKind::Emit(e)
            }
            "break" if self.text(1) == ";" => {
                self.advance();
                self.advance();
                StmtKind::Break
            }
            "continue" if self.text(1) == ";" => {
                self.advance();
                self.advance();
                StmtKind::Continue
            }
            "_" if self.text(1) == ";" => {
                self.advance();
                self.advance();
                StmtKind::Placeholder
            }
            "revert" if self.is_ident(1) => {
                self.advance();
                let mut name = self.expect_ident()?;
                while self.at(".") && self.is_ident(1) {
                    self.advance();
                    name = format!("{name}.{}", self.advance());
                }
                let args = self.positional_args()?;
                self.expect(";")?;
                StmtKind::Revert(RevertKind::Error { name, args })
            }
            "assembly" => return Ok(self.opaque_skip(start, "inline assembly")),
            "try" => return Ok(self.opaque_skip(start, "try/catch")),
            _ => return self.simple_stmt(),
        };
        Ok(Stmt::new(kind, self.span_since(start)))
    }

    /// Local declaration or expression statement, including the `;`.
    fn simple_stmt(&mut self) -> PResult<Stmt> {
        let start = self.pos;
        if self.looks_like_decl() {
            return self.local_decl();
        }
        let e = self.expr()?;
        self.expect(";")?;
        let span = self.span_since(start);
        Ok(Stmt::new(classify_expr_stmt(e), span))
    }

    fn looks_like_decl(&self) -> bool {
        let t0 = self.text(0);
        if t0 == "var" || t0 == "mapping" {
            return true;
        }
        if t0 == "(" {
            let Some(end) = self.matching(self.pos) else { return false };
            let inner = &self.toks[self.pos + 1..end];
            return inner.windows(2).any(|w| w[0].kind == TokenKind::Ident && w[1].kind == TokenKind::Ident)
                && self.toks.get(end + 1).is_some_and(|t| t.text(self.src) == "=");
        }
        if !self.is_ident(0) {
            return false;
        }
        if types::is_elementary(t0) {
            return self.text(1) != "(" && self.text(1) != ".";
        }
        let mut i = self.pos;
        while self.toks.get(i + 1).is_some_and(|t| t.text(self.src) == ".")
            && self.toks.get(i + 2).is_some_and(|t| t.kind == TokenKind::Ident)
        {
            i += 2;
        }
        while self.toks.get(i + 1).is_some_and(|t| t.text(self.src) == "[") {
            match self.matching(i + 1) {
                Some(end) => i = end,
                None => return false,
            }
        }
        self.toks.get(i + 1).is_some_and(|t| t.kind == TokenKind::Ident)
    }

    fn local_var(&mut self) -> PResult<LocalVar> {
        let start = self.pos;
        let type_name = self.type_name()?;
        let location =
            if types::is_data_location(self.text(0)) { Some(self.advance().to_string()) } else { None };
        let name = self.expect_ident()?;
        Ok(LocalVar { type_name, location, name, span: self.span_since(start) })
    }

    fn local_decl(&mut self) -> PResult<Stmt> {
        let start = self.pos;
        let (vars, tuple) = if self.at("var") {
            if self.text(1) == "(" {
                return self.error("tuple 'var' declarations are not supported");
            }
            let v_start = self.pos;
            self.advance();
            let name = self.expect_ident()?;
            (vec![Some(LocalVar { type_name: "var".into(), location: None, name, span: self.span_since(v_start) })], false)
        } else if self.eat("(") {
            let mut vars = Vec::new();
            loop {
                if self.at(",") || self.at(")") {
                    vars.push(None);
                } else {
                    vars.push(Some(self.local_var()?));
                }
                if self.eat(")") {
                    break;
                }
                self.expect(",")?;
            }
            (vars, true)
        } else {
            (vec![Some(self.local_var()?)], false)
        };
        let init = if self.eat("=") { Some(self.expr()?) } else { None };
        self.expect(";")?;
        Ok(Stmt::new(StmtKind::LocalDecl { vars, tuple, init }, self.span_since(start)))
    }

    // ---- expressions ---------------------------------------------------

    fn expr(&mut self) -> PResult<Expr> {
        self.enter()?;
        let r = self.assignment();
        self.leave();
        r
    }

    fn assignment(&mut self) -> PResult<Expr> {
        let start = self.pos;
        let lhs = self.ternary()?;
        if let Some(op) = AssignOp::from_token(self.text(0)).filter(|_| self.kind(0) == Some(TokenKind::Punct)) {
            self.advance();
            let value = self.expr()?;
            return Ok(Expr::new(
                ExprKind::Assign { target: Box::new(lhs), op, value: Box::new(value) },
                self.span_since(start),
            ));
        }
        Ok(lhs)
    }

    fn ternary(&mut self) -> PResult<Expr> {
        let start = self.pos;
        let cond = self.binary(1)?;
        if self.eat("?") {
            let then_expr = self.expr()?;
            self.expect(":")?;
            self.enter()?;
            let else_expr = self.ternary();
            self.leave();
            return Ok(Expr::new(
                ExprKind::Ternary { cond: Box::new(cond), then_expr: Box::new(then_expr), else_expr: Box::new(else_expr?) },
                self.span_since(start),
            ));
        }
        Ok(cond)
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let start = self.pos;
        let mut lhs = self.unary()?;
        loop {
            if self.kind(0) != Some(TokenKind::Punct) {
                break;
            }
            let Some(op) = BinOp::from_token(self.text(0)) else { break };
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.advance();
            self.enter()?;
            let rhs = if op == BinOp::Pow { self.binary(prec) } else { self.binary(prec + 1) };
            self.leave();
            lhs = Expr::new(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs?) }, self.span_since(start));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let start = self.pos;
        let op = match self.text(0) {
            "!" => Some(UnOp::Not),
            "-" => Some(UnOp::Neg),
            "~" => Some(UnOp::BitNot),
            "++" => Some(UnOp::Inc),
            "--" => Some(UnOp::Dec),
            "delete" => Some(UnOp::Delete),
            _ => None,
        };
        if let Some(op) = op {
            self.advance();
            self.enter()?;
            let operand = self.unary();
            self.leave();
            return Ok(Expr::new(ExprKind::Unary { op, operand: Box::new(operand?), prefix: true }, self.span_since(start)));
        }
        self.postfix()
    }

    /// True when the `(` at token index `open` starts an argument list that is
    /// immediately followed by a call or another legacy option.
    fn legacy_option_follows(&self, open: usize) -> bool {
        let Some(close) = self.matching(open) else { return false };
        let after = |k: usize| self.toks.get(close + k).map(|t| t.text(self.src)).unwrap_or("");
        after(1) == "(" || (after(1) == "." && matches!(after(2), "value" | "gas") && after(3) == "(")
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let start = self.pos;
        let mut e = self.primary()?;
        let mut options: Vec<CallOption> = Vec::new();
        let mut style = OptionStyle::None;
        loop {
            match self.text(0) {
                "." if self.is_ident(1) => {
                    let member = self.text(1);
                    if matches!(member, "value" | "gas")
                        && self.text(2) == "("
                        && style != OptionStyle::Braced
                        && !matches!(e.kind, ExprKind::Ident(ref n) if n == "msg")
                        && self.legacy_option_follows(self.pos + 2)
                    {
                        self.advance();
                        self.advance();
                        self.advance();
                        let value = self.expr()?;
                        self.expect(")")?;
                        options.push(CallOption { name: member.to_string(), value });
                        style = OptionStyle::Legacy;
                        continue;
                    }
                    self.advance();
                    self.advance();
                    let kind = match (&e.kind, member) {
                        (ExprKind::Ident(n), "sender") if n == "msg" => ExprKind::MsgSender,
                        (ExprKind::Ident(n), "value") if n == "msg" => ExprKind::MsgValue,
                        _ => ExprKind::Member { base: Box::new(e), member: member.to_string() },
                    };
                    e = Expr::new(kind, self.span_since(start));
                }
                "[" => {
                    self.advance();
                    let index = if self.at("]") { None } else { Some(Box::new(self.expr()?)) };
                    self.expect("]")?;
                    e = Expr::new(ExprKind::Index { base: Box::new(e), index }, self.span_since(start));
                }
                "(" => {
                    let args = self.call_args()?;
                    let call = Call {
                        callee: Box::new(e),
                        args,
                        options: std::mem::take(&mut options),
                        option_style: std::mem::replace(&mut style, OptionStyle::None),
                        kind: CallKind::Unresolved,
                    };
                    e = Expr::new(ExprKind::Call(call), self.span_since(start));
                }
                "{" if self.is_ident(1) && self.text(2) == ":" && options.is_empty() => {
                    self.advance();
                    loop {
                        let name = self.expect_ident()?;
                        self.expect(":")?;
                        let value = self.expr()?;
                        options.push(CallOption { name, value });
                        if self.eat("}") {
                            break;
                        }
                        self.expect(",")?;
                    }
                    style = OptionStyle::Braced;
                    if !self.at("(") {
                        return self.error("expected call arguments after call options");
                    }
                }
                "++" | "--" => {
                    let op = if self.advance() == "++" { UnOp::Inc } else { UnOp::Dec };
                    e = Expr::new(ExprKind::Unary { op, operand: Box::new(e), prefix: false }, self.span_since(start));
                }
                _ => break,
            }
        }
        Ok(e)
    }

    fn positional_args(&mut self) -> PResult<Vec<Expr>> {
        self.expect("(")?;
        let mut args = Vec::new();
        if self.eat(")") {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat(")") {
                return Ok(args);
            }
            self.expect(",")?;
        }
    }

    fn call_args(&mut self) -> PResult<CallArgs> {
        if self.text(1) == "{" && ((self.is_ident(2) && self.text(3) == ":") || self.text(2) == "}") {
            self.advance();
            self.advance();
            let mut named = Vec::new();
            while !self.eat("}") {
                let name = self.expect_ident()?;
                self.expect(":")?;
                named.push((name, self.expr()?));
                if !self.at("}") {
                    self.expect(",")?;
                }
            }
            self.expect(")")?;
            return Ok(CallArgs::Named(named));
        }
        Ok(CallArgs::Positional(self.positional_args()?))
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.pos;
        let Some(tok) = self.tok(0).copied() else { return self.error("expected expression") };
        let text = tok.text(self.src);
        let kind = match tok.kind {
            TokenKind::Number | TokenKind::HexNumber => {
                self.advance();
                let is_address = tok.kind == TokenKind::HexNumber && text.len() == 42;
                let unit = if UNITS.contains(&self.text(0)) { Some(self.advance().to_string()) } else { None };
                ExprKind::Literal(Literal {
                    kind: if is_address { LitKind::Address } else { LitKind::Number },
                    text: text.to_string(),
                    unit,
                })
            }
            TokenKind::Str => {
                self.advance();
                while self.kind(0) == Some(TokenKind::Str) {
                    self.advance();
                }
                ExprKind::Literal(Literal { kind: LitKind::String, text: self.text_since(start), unit: None })
            }
            TokenKind::Punct if text == "(" => {
                self.advance();
                let mut items: Vec<Option<Expr>> = Vec::new();
                let mut saw_comma = false;
                if !self.at(")") {
                    loop {
                        if self.at(",") || self.at(")") {
                            items.push(None);
                        } else {
                            items.push(Some(self.expr()?));
                        }
                        if self.at(")") {
                            break;
                        }
                        self.expect(",")?;
                        saw_comma = true;
                    }
                }
                self.expect(")")?;
                if !saw_comma && items.len() == 1 && items[0].is_some() {
                    let inner = items.pop().flatten().expect("checked above");
                    ExprKind::Paren(Box::new(inner))
                } else {
                    ExprKind::Tuple(items)
                }
            }
            TokenKind::Punct if text == "[" => {
                self.advance();
                let mut items = Vec::new();
                if !self.at("]") {
                    loop {
                        items.push(self.expr()?);
                        if self.at("]") {
                            break;
                        }
                        self.expect(",")?;
                    }
                }
                self.expect("]")?;
                ExprKind::ArrayLit(items)
            }
            TokenKind::Ident => match text {
                "true" | "false" => {
                    self.advance();
                    ExprKind::Literal(Literal { kind: LitKind::Bool, text: text.to_string(), unit: None })
                }
                "this" => {
                    self.advance();
                    ExprKind::This
                }
                "new" => {
                    self.advance();
                    ExprKind::New(self.type_name()?)
                }
                _ if (types::is_elementary(text) || text == "payable") && self.text(1) == "(" => {
                    self.advance();
                    let args = self.positional_args()?;
                    if args.len() == 1 {
                        let arg = args.into_iter().next().expect("one argument");
                        ExprKind::TypeCast { type_name: text.to_string(), arg: Box::new(arg) }
                    } else {
                        let callee = Expr::new(ExprKind::Ident(text.to_string()), tok.span);
                        ExprKind::Call(Call {
                            callee: Box::new(callee),
                            args: CallArgs::Positional(args),
                            options: Vec::new(),
                            option_style: OptionStyle::None,
                            kind: CallKind::Unresolved,
                        })
                    }
                }
                _ if types::is_elementary(text) && self.text(1) == "[" => {
                    // element type of `abi.decode(data, (uint[]))`-style arguments
                    ExprKind::Ident(self.type_name()?)
                }
                _ => {
                    self.advance();
                    ExprKind::Ident(text.to_string())
                }
            },
            _ => return self.error("expected expression"),
        };
        Ok(Expr::new(kind, self.span_since(start)))
    }
}

fn classify_expr_stmt(e: Expr) -> StmtKind {
    match e.kind {
        ExprKind::Assign { target, op, value } => StmtKind::Assign { target: *target, op, value: *value },
        ExprKind::Call(call) => {
            let name = call.callee.as_ident().map(str::to_string);
            match (name.as_deref(), call.args) {
                (Some(n @ ("require" | "assert")), CallArgs::Positional(mut args))
                    if (1..=2).contains(&args.len()) && call.options.is_empty() =>
                {
                    let message = if args.len() == 2 { args.pop() } else { None };
                    let cond = args.pop().expect("one condition");
                    StmtKind::Require { cond, message, is_assert: n == "assert" }
                }
                (Some("revert"), CallArgs::Positional(args)) if call.options.is_empty() => {
                    StmtKind::Revert(RevertKind::Call(args))
                }
                (_, args) => StmtKind::Expr(Expr::new(
                    ExprKind::Call(Call {
                        callee: call.callee,
                        args,
                        options: call.options,
                        option_style: call.option_style,
                        kind: call.kind,
                    }),
                    e.span,
                )),
            }
        }
        kind => StmtKind::Expr(Expr::new(kind, e.span)),
    }
}
