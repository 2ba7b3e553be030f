//! Reconstruction of source text from syntax nodes.
//!
//! The output is whitespace-normalized: lexing it yields the same token
//! sequence as lexing the node's original span.

use super::ast::*;

pub fn expr_text(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, &mut out);
    out
}

pub fn stmt_text(s: &Stmt) -> String {
    let mut out = String::new();
    write_stmt(s, &mut out);
    out
}

fn push(out: &mut String, tok: &str) {
    if !out.is_empty() {
        out.push(' ');
    }
    out.push_str(tok);
}

fn write_list(items: &[Expr], out: &mut String) {
    for (i, a) in items.iter().enumerate() {
        if i > 0 {
            push(out, ",");
        }
        write_expr(a, out);
    }
}

fn write_args(args: &CallArgs, out: &mut String) {
    push(out, "(");
    match args {
        CallArgs::Positional(v) => write_list(v, out),
        CallArgs::Named(v) => {
            push(out, "{");
            for (i, (n, e)) in v.iter().enumerate() {
                if i > 0 {
                    push(out, ",");
                }
                push(out, n);
                push(out, ":");
                write_expr(e, out);
            }
            push(out, "}");
        }
    }
    push(out, ")");
}

pub fn write_expr(e: &Expr, out: &mut String) {
    match &e.kind {
        ExprKind::Ident(n) => push(out, n),
        ExprKind::Member { base, member } => {
            write_expr(base, out);
            push(out, ".");
            push(out, member);
        }
        ExprKind::Index { base, index } => {
            write_expr(base, out);
            push(out, "[");
            if let Some(i) = index {
                write_expr(i, out);
            }
            push(out, "]");
        }
        ExprKind::Call(call) => {
            write_expr(&call.callee, out);
            match call.option_style {
                OptionStyle::None => {}
                OptionStyle::Legacy => {
                    for o in &call.options {
                        push(out, ".");
                        push(out, &o.name);
                        push(out, "(");
                        write_expr(&o.value, out);
                        push(out, ")");
                    }
                }
                OptionStyle::Braced => {
                    push(out, "{");
                    for (i, o) in call.options.iter().enumerate() {
                        if i > 0 {
                            push(out, ",");
                        }
                        push(out, &o.name);
                        push(out, ":");
                        write_expr(&o.value, out);
                    }
                    push(out, "}");
                }
            }
            write_args(&call.args, out);
        }
        ExprKind::Literal(l) => {
            push(out, &l.text);
            if let Some(u) = &l.unit {
                push(out, u);
            }
        }
        ExprKind::Binary { op, lhs, rhs } => {
            write_expr(lhs, out);
            push(out, op.as_str());
            write_expr(rhs, out);
        }
        ExprKind::Unary { op, operand, prefix } => {
            if *prefix {
                push(out, op.as_str());
                write_expr(operand, out);
            } else {
                write_expr(operand, out);
                push(out, op.as_str());
            }
        }
        ExprKind::Ternary { cond, then_expr, else_expr } => {
            write_expr(cond, out);
            push(out, "?");
            write_expr(then_expr, out);
            push(out, ":");
            write_expr(else_expr, out);
        }
        ExprKind::Assign { target, op, value } => {
            write_expr(target, out);
            push(out, op.as_str());
            write_expr(value, out);
        }
        ExprKind::Tuple(items) => {
            push(out, "(");
            for (i, it) in items.iter().enumerate() {
                if i > 0 {
                    push(out, ",");
                }
                if let Some(it) = it {
                    write_expr(it, out);
                }
            }
            push(out, ")");
        }
        ExprKind::ArrayLit(items) => {
            push(out, "[");
            write_list(items, out);
            push(out, "]");
        }
        ExprKind::Paren(inner) => {
            push(out, "(");
            write_expr(inner, out);
            push(out, ")");
        }
        ExprKind::MsgSender => {
            push(out, "msg");
            push(out, ".");
            push(out, "sender");
        }
        ExprKind::MsgValue => {
            push(out, "msg");
            push(out, ".");
            push(out, "value");
        }
        ExprKind::This => push(out, "this"),
        ExprKind::TypeCast { type_name, arg } => {
            push(out, type_name);
            push(out, "(");
            write_expr(arg, out);
            push(out, ")");
        }
        ExprKind::New(t) => {
            push(out, "new");
            push(out, t);
        }
    }
}

fn write_block(b: &Block, out: &mut String) {
    if b.unchecked {
        push(out, "unchecked");
    }
    push(out, "{");
    for s in &b.stmts {
        write_stmt(s, out);
    }
    push(out, "}");
}

pub fn write_stmt(s: &Stmt, out: &mut String) {
    match &s.kind {
        StmtKind::Block(b) => write_block(b, out),
        StmtKind::If { cond, then_branch, else_branch } => {
            push(out, "if");
            push(out, "(");
            write_expr(cond, out);
            push(out, ")");
            write_stmt(then_branch, out);
            if let Some(e) = else_branch {
                push(out, "else");
                write_stmt(e, out);
            }
        }
        StmtKind::While { cond, body } => {
            push(out, "while");
            push(out, "(");
            write_expr(cond, out);
            push(out, ")");
            write_stmt(body, out);
        }
        StmtKind::DoWhile { body, cond } => {
            push(out, "do");
            write_stmt(body, out);
            push(out, "while");
            push(out, "(");
            write_expr(cond, out);
            push(out, ")");
            push(out, ";");
        }
        StmtKind::For { init, cond, update, body } => {
            push(out, "for");
            push(out, "(");
            match init {
                Some(i) => write_stmt(i, out),
                None => push(out, ";"),
            }
            if let Some(c) = cond {
                write_expr(c, out);
            }
            push(out, ";");
            if let Some(u) = update {
                write_expr(u, out);
            }
            push(out, ")");
            write_stmt(body, out);
        }
        StmtKind::Require { cond, message, is_assert } => {
            push(out, if *is_assert { "assert" } else { "require" });
            push(out, "(");
            write_expr(cond, out);
            if let Some(m) = message {
                push(out, ",");
                write_expr(m, out);
            }
            push(out, ")");
            push(out, ";");
        }
        StmtKind::Return(e) => {
            push(out, "return");
            if let Some(e) = e {
                write_expr(e, out);
            }
            push(out, ";");
        }
        StmtKind::Revert(kind) => {
            match kind {
                RevertKind::Throw => push(out, "throw"),
                RevertKind::Call(args) => {
                    push(out, "revert");
                    push(out, "(");
                    write_list(args, out);
                    push(out, ")");
                }
                RevertKind::Error { name, args } => {
                    push(out, "revert");
                    push(out, name);
                    push(out, "(");
                    write_list(args, out);
                    push(out, ")");
                }
            }
            push(out, ";");
        }
        StmtKind::LocalDecl { vars, tuple, init } => {
            let write_var = |v: &LocalVar, out: &mut String| {
                push(out, &v.type_name);
                if let Some(l) = &v.location {
                    push(out, l);
                }
                push(out, &v.name);
            };
            if *tuple {
                push(out, "(");
                for (i, v) in vars.iter().enumerate() {
                    if i > 0 {
                        push(out, ",");
                    }
                    if let Some(v) = v {
                        write_var(v, out);
                    }
                }
                push(out, ")");
            } else if let Some(Some(v)) = vars.first() {
                write_var(v, out);
            }
            if let Some(i) = init {
                push(out, "=");
                write_expr(i, out);
            }
            push(out, ";");
        }
        StmtKind::Assign { target, op, value } => {
            write_expr(target, out);
            push(out, op.as_str());
            write_expr(value, out);
            push(out, ";");
        }
        StmtKind::Expr(e) => {
            write_expr(e, out);
            push(out, ";");
        }
        StmtKind::Emit(e) => {
            push(out, "emit");
            write_expr(e, out);
            push(out, ";");
        }
        StmtKind::Placeholder => {
            push(out, "_");
            push(out, ";");
        }
        StmtKind::Break => {
            push(out, "break");
            push(out, ";");
        }
        StmtKind::Continue => {
            push(out, "continue");
            push(out, ";");
        }
        StmtKind::Opaque { text, .. } => push(out, text),
    }
}
