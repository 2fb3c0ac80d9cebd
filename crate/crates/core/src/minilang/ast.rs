use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::value::Domain;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

/// Dense, 0-based id of an instrumentable site, allocated in source order by
/// the parser. Node index = site id + 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SiteId(pub u32);

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub domains: Vec<DomainDecl>,
    pub globals: Vec<GlobalDecl>,
    pub functions: Vec<FunctionDef>,
    /// Name of the entry function (always `main`).
    pub entry: String,
    /// Number of sites allocated while parsing.
    pub site_count: u32,
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn is_global(&self, name: &str) -> bool {
        self.globals.iter().any(|g| g.name == name)
    }
}

/// `domain [func.]var : <domain>` header line.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainDecl {
    pub function: Option<String>,
    pub variable: String,
    pub domain: Domain,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalDecl {
    pub name: String,
    pub init: Expr,
    pub pos: Pos,
    pub site: SiteId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<Param>,
    pub body: Vec<Stmt>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub pos: Pos,
    pub site: SiteId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Assign {
        target: String,
        value: Expr,
        site: SiteId,
    },
    If {
        cond: Cond,
        then_branch: Vec<Stmt>,
        else_branch: Option<Vec<Stmt>>,
    },
    While {
        cond: Cond,
        body: Vec<Stmt>,
    },
    Return {
        value: Option<Expr>,
        site: Option<SiteId>,
    },
    Print(Expr),
    Expr(Expr),
}

/// Branch or loop condition.
///
/// A condition that is a bare variable reuses the node that produced the
/// variable and gets no site of its own; any other condition is a predicate
/// node.
#[derive(Debug, Clone, PartialEq)]
pub struct Cond {
    pub expr: Expr,
    pub site: Option<SiteId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    Var(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
    /// `getChar(v)`: reads one input token into `v` (an assignment site) and
    /// evaluates to whether a token was available.
    GetChar { target: String, site: SiteId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }
}

/// Builtin functions callable from source. `print` and `getChar` have
/// dedicated syntax and are not listed here.
pub const BUILTINS: &[(&str, usize)] = &[
    ("read", 0),
    ("len", 1),
    ("strip", 1),
    ("lstrip", 1),
    ("rstrip", 1),
    ("endswith", 2),
    ("startswith", 2),
    ("abs", 1),
    ("min", 2),
    ("max", 2),
    ("int", 1),
    ("float", 1),
    ("str", 1),
];

pub fn builtin_arity(name: &str) -> Option<usize> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, a)| *a)
}

impl Expr {
    /// Visits this expression and all sub-expressions, parents first.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Unary(_, e) => e.walk(f),
            ExprKind::Binary(_, l, r) => {
                l.walk(f);
                r.walk(f);
            }
            ExprKind::Call(_, args) => {
                for a in args {
                    a.walk(f);
                }
            }
            _ => {}
        }
    }
}
