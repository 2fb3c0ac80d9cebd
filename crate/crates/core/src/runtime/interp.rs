use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{builtins, MutationSpec, MutationValue, RunResult, RunStatus, TestInput, MAX_DEPTH};
use crate::minilang::{BinOp, Expr, ExprKind, FunctionDef, Program, SiteId, Stmt, StmtKind, UnOp};
use crate::value::Scalar;

enum Stop {
    Timeout,
    Error(String),
}

type Exec<T> = Result<T, Stop>;

enum Flow {
    Normal,
    Return(Option<Scalar>),
}

fn err<T>(msg: impl Into<String>) -> Exec<T> {
    Err(Stop::Error(msg.into()))
}

struct Interp<'a> {
    program: &'a Program,
    functions: BTreeMap<&'a str, &'a FunctionDef>,
    tokens: &'a [Scalar],
    cursor: usize,
    mutation: Option<&'a MutationSpec>,
    record_trace: bool,
    budget: u64,
    steps: u64,
    depth: usize,
    globals: BTreeMap<String, Scalar>,
    frames: Vec<BTreeMap<String, Scalar>>,
    trajectories: Vec<Vec<Scalar>>,
    output: Vec<Scalar>,
    trace: Vec<usize>,
}

pub fn run(
    p: &Program,
    t: &TestInput,
    mutation: Option<&MutationSpec>,
    record_trace: bool,
    budget: u64,
) -> RunResult {
    let mut it = Interp {
        program: p,
        functions: p.functions.iter().map(|f| (f.name.as_str(), f)).collect(),
        tokens: &t.tokens,
        cursor: 0,
        mutation,
        record_trace,
        budget,
        steps: 0,
        depth: 0,
        globals: BTreeMap::new(),
        frames: Vec::new(),
        trajectories: alloc::vec![Vec::new(); p.site_count as usize],
        output: Vec::new(),
        trace: Vec::new(),
    };
    let outcome = it.run_program();
    let (ret, status) = match outcome {
        Ok(ret) => (ret, RunStatus::Ok),
        Err(Stop::Timeout) => (None, RunStatus::Timeout),
        Err(Stop::Error(msg)) => (None, RunStatus::RuntimeError(msg)),
    };
    RunResult {
        trajectories: it.trajectories,
        output: it.output,
        ret,
        status,
        trace: it.trace,
        steps: it.steps,
    }
}

impl<'a> Interp<'a> {
    fn run_program(&mut self) -> Exec<Option<Scalar>> {
        for g in &self.program.globals {
            self.tick()?;
            let v = self.eval(&g.init)?;
            let v = self.record(g.site, v)?;
            self.globals.insert(g.name.clone(), v);
        }
        let entry = self.functions[self.program.entry.as_str()];
        self.call_user(entry, Vec::new())
    }

    fn tick(&mut self) -> Exec<()> {
        self.steps += 1;
        if self.steps > self.budget {
            Err(Stop::Timeout)
        } else {
            Ok(())
        }
    }

    /// Applies the active mutation (if it targets this site) and logs the
    /// resulting value.
    fn record(&mut self, site: SiteId, value: Scalar) -> Exec<Scalar> {
        let node = site.0 as usize + 1;
        let value = match self.mutation {
            Some(m) if m.target == node => match &m.value {
                MutationValue::Negate => match value {
                    Scalar::Bool(b) => Scalar::Bool(!b),
                    other => {
                        return err(format!(
                            "cannot negate {} value at node {}",
                            other.type_name(),
                            node
                        ))
                    }
                },
                MutationValue::Set(v) => v.clone(),
            },
            _ => value,
        };
        self.trajectories[site.0 as usize].push(value.clone());
        if self.record_trace {
            self.trace.push(node);
        }
        Ok(value)
    }

    fn lookup(&self, name: &str) -> Exec<Scalar> {
        if let Some(v) = self.frames.last().and_then(|f| f.get(name)) {
            return Ok(v.clone());
        }
        match self.globals.get(name) {
            Some(v) => Ok(v.clone()),
            None => err(format!("undefined variable '{}'", name)),
        }
    }

    fn store(&mut self, name: &str, value: Scalar) {
        if self.program.is_global(name) {
            self.globals.insert(name.to_string(), value);
        } else if let Some(frame) = self.frames.last_mut() {
            frame.insert(name.to_string(), value);
        } else {
            self.globals.insert(name.to_string(), value);
        }
    }

    fn next_token(&mut self) -> Option<Scalar> {
        let t = self.tokens.get(self.cursor).cloned();
        if t.is_some() {
            self.cursor += 1;
        }
        t
    }

    fn call_user(&mut self, f: &'a FunctionDef, args: Vec<Scalar>) -> Exec<Option<Scalar>> {
        if self.depth >= MAX_DEPTH {
            return err("maximum call depth exceeded");
        }
        self.depth += 1;
        let mut frame = BTreeMap::new();
        for (param, arg) in f.params.iter().zip(args) {
            let v = self.record(param.site, arg)?;
            frame.insert(param.name.clone(), v);
        }
        self.frames.push(frame);
        let flow = self.block(&f.body);
        self.frames.pop();
        self.depth -= 1;
        match flow? {
            Flow::Normal => Ok(None),
            Flow::Return(v) => Ok(v),
        }
    }

    fn block(&mut self, stmts: &'a [Stmt]) -> Exec<Flow> {
        for s in stmts {
            if let Flow::Return(v) = self.stmt(s)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn condition(&mut self, cond: &'a crate::minilang::Cond) -> Exec<bool> {
        let v = self.eval(&cond.expr)?;
        let v = match cond.site {
            Some(site) => self.record(site, v)?,
            None => v,
        };
        match v {
            Scalar::Bool(b) => Ok(b),
            other => err(format!("condition is {}, not bool", other.type_name())),
        }
    }

    fn stmt(&mut self, s: &'a Stmt) -> Exec<Flow> {
        self.tick()?;
        match &s.kind {
            StmtKind::Assign {
                target,
                value,
                site,
            } => {
                let v = self.eval(value)?;
                let v = self.record(*site, v)?;
                self.store(target, v);
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                if self.condition(cond)? {
                    return self.block(then_branch);
                } else if let Some(e) = else_branch {
                    return self.block(e);
                }
            }
            StmtKind::While { cond, body } => loop {
                if !self.condition(cond)? {
                    break;
                }
                if let Flow::Return(v) = self.block(body)? {
                    return Ok(Flow::Return(v));
                }
                self.tick()?;
            },
            StmtKind::Return { value, site } => {
                let v = match (value, site) {
                    (Some(e), Some(site)) => {
                        let v = self.eval(e)?;
                        Some(self.record(*site, v)?)
                    }
                    _ => None,
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::Print(e) => {
                let v = self.eval(e)?;
                self.output.push(v);
            }
            StmtKind::Expr(e) => {
                self.eval(e)?;
            }
        }
        Ok(Flow::Normal)
    }

    fn eval(&mut self, e: &'a Expr) -> Exec<Scalar> {
        match &e.kind {
            ExprKind::Bool(b) => Ok(Scalar::Bool(*b)),
            ExprKind::Int(v) => Ok(Scalar::Int(*v)),
            ExprKind::Float(v) => Ok(Scalar::Float(*v)),
            ExprKind::Str(s) => Ok(Scalar::Str(s.clone())),
            ExprKind::Var(name) => self.lookup(name),
            ExprKind::Unary(op, inner) => {
                let v = self.eval(inner)?;
                match (op, v) {
                    (UnOp::Neg, Scalar::Int(i)) => match i.checked_neg() {
                        Some(n) => Ok(Scalar::Int(n)),
                        None => err("integer overflow"),
                    },
                    (UnOp::Neg, Scalar::Float(f)) => Ok(Scalar::Float(-f)),
                    (UnOp::Not, Scalar::Bool(b)) => Ok(Scalar::Bool(!b)),
                    (_, v) => err(format!("bad operand type {} for unary operator", v.type_name())),
                }
            }
            ExprKind::Binary(BinOp::And, l, r) => {
                if self.truth(l)? {
                    Ok(Scalar::Bool(self.truth(r)?))
                } else {
                    Ok(Scalar::Bool(false))
                }
            }
            ExprKind::Binary(BinOp::Or, l, r) => {
                if self.truth(l)? {
                    Ok(Scalar::Bool(true))
                } else {
                    Ok(Scalar::Bool(self.truth(r)?))
                }
            }
            ExprKind::Binary(op, l, r) => {
                let a = self.eval(l)?;
                let b = self.eval(r)?;
                binary(*op, a, b).map_err(Stop::Error)
            }
            ExprKind::Call(name, args) => {
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.eval(a)?);
                }
                if name == "read" {
                    return match self.next_token() {
                        Some(v) => Ok(v),
                        None => err("input exhausted"),
                    };
                }
                match self.functions.get(name.as_str()).copied() {
                    Some(f) => {
                        self.tick()?;
                        match self.call_user(f, values)? {
                            Some(v) => Ok(v),
                            None => err(format!("function '{}' returned no value", name)),
                        }
                    }
                    None => builtins::call(name, &values).map_err(Stop::Error),
                }
            }
            ExprKind::GetChar { target, site } => {
                let (v, available) = match self.next_token() {
                    Some(v) => (v, true),
                    None => (Scalar::Int(-1), false),
                };
                let v = self.record(*site, v)?;
                self.store(target, v);
                Ok(Scalar::Bool(available))
            }
        }
    }

    fn truth(&mut self, e: &'a Expr) -> Exec<bool> {
        match self.eval(e)? {
            Scalar::Bool(b) => Ok(b),
            v => err(format!("expected bool operand, got {}", v.type_name())),
        }
    }
}

fn binary(op: BinOp, a: Scalar, b: Scalar) -> Result<Scalar, String> {
    use Scalar::*;
    let overflow = || "integer overflow".to_string();
    Ok(match (op, &a, &b) {
        (BinOp::Add, Int(x), Int(y)) => Int(x.checked_add(*y).ok_or_else(overflow)?),
        (BinOp::Sub, Int(x), Int(y)) => Int(x.checked_sub(*y).ok_or_else(overflow)?),
        (BinOp::Mul, Int(x), Int(y)) => Int(x.checked_mul(*y).ok_or_else(overflow)?),
        (BinOp::Div | BinOp::Rem, Int(_), Int(0)) => return Err("division by zero".into()),
        (BinOp::Div, Int(x), Int(y)) => Int(x.checked_div(*y).ok_or_else(overflow)?),
        (BinOp::Rem, Int(x), Int(y)) => Int(x.checked_rem(*y).ok_or_else(overflow)?),
        (BinOp::Add, Str(x), Str(y)) => {
            let mut s = x.clone();
            s.push_str(y);
            Str(s)
        }
        (BinOp::Eq, _, _) => Bool(equal(&a, &b)),
        (BinOp::Ne, _, _) => Bool(!equal(&a, &b)),
        (BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge, Str(x), Str(y)) => Bool(compare(op, x.cmp(y))),
        _ => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => match op {
                BinOp::Add => Float(x + y),
                BinOp::Sub => Float(x - y),
                BinOp::Mul => Float(x * y),
                BinOp::Div => Float(x / y),
                BinOp::Rem => Float(libm::fmod(x, y)),
                BinOp::Lt => Bool(x < y),
                BinOp::Le => Bool(x <= y),
                BinOp::Gt => Bool(x > y),
                BinOp::Ge => Bool(x >= y),
                _ => unreachable!("logical operators are short-circuited"),
            },
            _ => {
                return Err(format!(
                    "bad operand types {} {} {}",
                    a.type_name(),
                    op.symbol(),
                    b.type_name()
                ))
            }
        },
    })
}

fn equal(a: &Scalar, b: &Scalar) -> bool {
    match (a, b) {
        (Scalar::Int(x), Scalar::Float(y)) | (Scalar::Float(y), Scalar::Int(x)) => (*x as f64) == *y,
        (Scalar::Float(x), Scalar::Float(y)) => x == y,
        _ => a == b,
    }
}

fn compare(op: BinOp, ord: core::cmp::Ordering) -> bool {
    use core::cmp::Ordering::*;
    match op {
        BinOp::Lt => ord == Less,
        BinOp::Le => ord != Greater,
        BinOp::Gt => ord == Greater,
        _ => ord != Less,
    }
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use crate::minilang::parse;

    fn oracle(src: &str, tokens: Vec<Scalar>) -> RunResult {
        run_oracle(&parse(src).unwrap(), &TestInput::new("t", tokens))
    }

    #[test]
    fn single_assignment_trajectory() {
        let r = oracle("def main() { x = 1 }", alloc::vec![]);
        assert_eq!(r.status, RunStatus::Ok);
        assert_eq!(r.trajectories, alloc::vec![alloc::vec![Scalar::Int(1)]]);
    }

    #[test]
    fn infinite_loop_times_out_with_partial_trajectories() {
        let p = parse("def main() { x = 0\n while (true) { x = x + 1 } }").unwrap();
        let r = run_with_budget(&p, &TestInput::new("t", alloc::vec![]), None, 1000);
        assert_eq!(r.status, RunStatus::Timeout);
        assert!(r.trajectory(2).len() > 100);
    }

    #[test]
    fn exhausted_input_is_runtime_error() {
        let r = oracle("def main() { a = read()\n b = read() }", alloc::vec![Scalar::Int(1)]);
        assert!(matches!(r.status, RunStatus::RuntimeError(_)));
        assert_eq!(r.trajectory(1), [Scalar::Int(1)]);
        assert!(r.trajectory(2).is_empty());
    }

    #[test]
    fn remainder_is_truncating() {
        let r = oracle("def main() { x = -7 % 3\n return x }", alloc::vec![]);
        assert_eq!(r.ret, Some(Scalar::Int(-1)));
    }

    #[test]
    fn negation_flips_every_hit() {
        let p = parse("def main() { i = 0\n while (i < 3) { i = i + 1 } }").unwrap();
        let t = TestInput::new("t", alloc::vec![]);
        let m = MutationSpec {
            target: 2,
            value: MutationValue::Negate,
        };
        let r = run_mutant(&p, &t, &m);
        assert_eq!(r.trajectory(2), [Scalar::Bool(false)]);
        assert!(r.trajectory(3).is_empty());
    }

    #[test]
    fn getchar_at_end_of_input() {
        let r = oracle("def main() { p = getChar(c)\n return c }", alloc::vec![]);
        assert_eq!(r.trajectory(1), [Scalar::Bool(false)]);
        assert_eq!(r.trajectory(2), [Scalar::Int(-1)]);
        assert_eq!(r.ret, Some(Scalar::Int(-1)));
    }
}
