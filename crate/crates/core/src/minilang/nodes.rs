use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::ast::*;
use super::parser::{stmt_exprs, walk_stmts};
use crate::value::Domain;

/// 1-based dense node index.
pub type NodeIdx = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    AssignLhs,
    Parameter,
    Predicate,
    Return,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::AssignLhs => "assign-lhs",
            NodeKind::Parameter => "parameter",
            NodeKind::Predicate => "predicate",
            NodeKind::Return => "return",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where a node sits in the source. Global initializers use the function
/// name `<global>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Location {
    pub function: String,
    pub line: u32,
    pub column: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub index: NodeIdx,
    pub kind: NodeKind,
    pub variable: String,
    pub location: Location,
    /// Declared domain; synthetic predicates are always boolean. `None`
    /// means the domain is inferred from the first oracle value.
    pub domain: Option<Domain>,
}

pub const GLOBAL_SCOPE: &str = "<global>";

/// Per-node facts about the statement hosting the node's site, used by the
/// safe-parent filter.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeContext {
    /// User functions called directly by the hosting statement.
    pub callees: BTreeSet<String>,
    /// Globals read by the hosting statement.
    pub globals_read: BTreeSet<String>,
}

struct Site<'a> {
    id: SiteId,
    kind: NodeKind,
    /// Source variable, or `None` for a condition needing a synthetic name.
    variable: Option<String>,
    function: String,
    pos: Pos,
    host_exprs: Vec<&'a Expr>,
}

fn collect_sites(p: &Program) -> Vec<Site<'_>> {
    let mut sites = Vec::new();
    for g in &p.globals {
        sites.push(Site {
            id: g.site,
            kind: NodeKind::AssignLhs,
            variable: Some(g.name.clone()),
            function: GLOBAL_SCOPE.to_string(),
            pos: g.pos,
            host_exprs: alloc::vec![&g.init],
        });
        g.init.walk(&mut |e| push_getchar(&mut sites, e, GLOBAL_SCOPE, &[&g.init]));
    }
    for f in &p.functions {
        for param in &f.params {
            sites.push(Site {
                id: param.site,
                kind: NodeKind::Parameter,
                variable: Some(param.name.clone()),
                function: f.name.clone(),
                pos: param.pos,
                host_exprs: Vec::new(),
            });
        }
        walk_stmts(&f.body, &mut |s| {
            let exprs = stmt_exprs(s);
            match &s.kind {
                StmtKind::Assign { target, site, .. } => {
                    let kind = if target.starts_with("_pred") {
                        NodeKind::Predicate
                    } else {
                        NodeKind::AssignLhs
                    };
                    sites.push(Site {
                        id: *site,
                        kind,
                        variable: Some(target.clone()),
                        function: f.name.clone(),
                        pos: s.pos,
                        host_exprs: exprs.clone(),
                    });
                }
                StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => {
                    if let Some(site) = cond.site {
                        sites.push(Site {
                            id: site,
                            kind: NodeKind::Predicate,
                            variable: None,
                            function: f.name.clone(),
                            pos: cond.expr.pos,
                            host_exprs: exprs.clone(),
                        });
                    }
                }
                StmtKind::Return {
                    site: Some(site), ..
                } => {
                    sites.push(Site {
                        id: *site,
                        kind: NodeKind::Return,
                        variable: Some("_ret".to_string()),
                        function: f.name.clone(),
                        pos: s.pos,
                        host_exprs: exprs.clone(),
                    });
                }
                _ => {}
            }
            for e in &exprs {
                e.walk(&mut |sub| push_getchar(&mut sites, sub, &f.name, &exprs));
            }
        });
    }
    sites.sort_by_key(|s| s.id);
    sites
}

fn push_getchar<'a>(sites: &mut Vec<Site<'a>>, e: &Expr, function: &str, host: &[&'a Expr]) {
    if let ExprKind::GetChar { target, site } = &e.kind {
        sites.push(Site {
            id: *site,
            kind: NodeKind::AssignLhs,
            variable: Some(target.clone()),
            function: function.to_string(),
            pos: e.pos,
            host_exprs: host.to_vec(),
        });
    }
}

fn declared_domain(p: &Program, function: &str, variable: &str) -> Option<Domain> {
    let scoped = p
        .domains
        .iter()
        .find(|d| d.function.as_deref() == Some(function) && d.variable == variable);
    scoped
        .or_else(|| p.domains.iter().find(|d| d.function.is_none() && d.variable == variable))
        .map(|d| d.domain)
}

/// Indexes every node of `p` in source order with dense 1-based indices.
pub fn index_nodes(p: &Program) -> Vec<Node> {
    let sites = collect_sites(p);
    let mut used: BTreeSet<String> = sites.iter().filter_map(|s| s.variable.clone()).collect();
    let mut next_pred = 1usize;
    let mut nodes = Vec::with_capacity(sites.len());
    for (i, site) in sites.iter().enumerate() {
        debug_assert_eq!(site.id.0 as usize, i);
        let (variable, synthetic) = match &site.variable {
            Some(v) => (v.clone(), false),
            None => {
                let name = loop {
                    let candidate = format!("_pred{}", next_pred);
                    next_pred += 1;
                    if !used.contains(&candidate) {
                        break candidate;
                    }
                };
                used.insert(name.clone());
                (name, true)
            }
        };
        let domain = if synthetic {
            Some(Domain::Bool)
        } else {
            declared_domain(p, &site.function, &variable).or(match site.kind {
                NodeKind::Predicate => Some(Domain::Bool),
                _ => None,
            })
        };
        nodes.push(Node {
            index: i + 1,
            kind: site.kind,
            variable,
            location: Location {
                function: site.function.clone(),
                line: site.pos.line,
                column: site.pos.column,
            },
            domain,
        });
    }
    nodes
}

/// Hosting-statement facts for every node, aligned with [`index_nodes`].
pub fn node_contexts(p: &Program) -> Vec<NodeContext> {
    let functions: BTreeSet<&str> = p.functions.iter().map(|f| f.name.as_str()).collect();
    collect_sites(p)
        .iter()
        .map(|site| {
            let mut ctx = NodeContext::default();
            for e in &site.host_exprs {
                e.walk(&mut |sub| match &sub.kind {
                    ExprKind::Call(name, _) if functions.contains(name.as_str()) => {
                        ctx.callees.insert(name.clone());
                    }
                    ExprKind::Var(v) if p.is_global(v) => {
                        ctx.globals_read.insert(v.clone());
                    }
                    _ => {}
                });
            }
            ctx
        })
        .collect()
}
