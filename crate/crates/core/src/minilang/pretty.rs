use alloc::string::String;
use core::fmt::Write;

use super::ast::*;

/// Canonical source text for `p`. Binary expressions are fully
/// parenthesized, so re-parsing yields the same sites in the same order.
pub fn pretty_print(p: &Program) -> String {
    let mut out = String::new();
    for d in &p.domains {
        out.push_str("domain ");
        if let Some(f) = &d.function {
            out.push_str(f);
            out.push('.');
        }
        let _ = writeln!(out, "{} : {}", d.variable, d.domain);
    }
    for g in &p.globals {
        let _ = writeln!(out, "global {} = {}", g.name, expr(&g.init));
    }
    for f in &p.functions {
        let params: alloc::vec::Vec<&str> = f.params.iter().map(|p| p.name.as_str()).collect();
        let _ = writeln!(out, "def {}({}) {{", f.name, params.join(", "));
        block(&mut out, &f.body, 1);
        out.push_str("}\n");
    }
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn block(out: &mut String, stmts: &[Stmt], depth: usize) {
    for s in stmts {
        indent(out, depth);
        match &s.kind {
            StmtKind::Assign { target, value, .. } => {
                let _ = writeln!(out, "{} = {}", target, expr(value));
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let _ = writeln!(out, "if ({}) {{", expr(&cond.expr));
                block(out, then_branch, depth + 1);
                indent(out, depth);
                match else_branch {
                    Some(e) => {
                        out.push_str("} else {\n");
                        block(out, e, depth + 1);
                        indent(out, depth);
                        out.push_str("}\n");
                    }
                    None => out.push_str("}\n"),
                }
            }
            StmtKind::While { cond, body } => {
                let _ = writeln!(out, "while ({}) {{", expr(&cond.expr));
                block(out, body, depth + 1);
                indent(out, depth);
                out.push_str("}\n");
            }
            StmtKind::Return { value: Some(v), .. } => {
                let _ = writeln!(out, "return {}", expr(v));
            }
            StmtKind::Return { value: None, .. } => out.push_str("return\n"),
            StmtKind::Print(e) => {
                let _ = writeln!(out, "print({})", expr(e));
            }
            StmtKind::Expr(e) => {
                let _ = writeln!(out, "{}", expr(e));
            }
        }
    }
}

fn expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Bool(b) => String::from(if *b { "true" } else { "false" }),
        ExprKind::Int(v) if *v < 0 => alloc::format!("({})", v),
        ExprKind::Int(v) => alloc::format!("{}", v),
        ExprKind::Float(v) => alloc::format!("{:?}", v),
        ExprKind::Str(s) => alloc::format!("{}", crate::value::Scalar::Str(s.clone())),
        ExprKind::Var(v) => v.clone(),
        ExprKind::Unary(UnOp::Neg, inner) => alloc::format!("(-{})", expr(inner)),
        ExprKind::Unary(UnOp::Not, inner) => alloc::format!("(!{})", expr(inner)),
        ExprKind::Binary(op, l, r) => alloc::format!("({} {} {})", expr(l), op.symbol(), expr(r)),
        ExprKind::Call(name, args) => {
            let args: alloc::vec::Vec<String> = args.iter().map(expr).collect();
            alloc::format!("{}({})", name, args.join(", "))
        }
        ExprKind::GetChar { target, .. } => alloc::format!("getChar({})", target),
    }
}
