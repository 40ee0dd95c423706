//! Instrumented tree-walking evaluator.
//!
//! Every statement that starts executing marks its line; every `if`/`elif`
//! predicate evaluation is recorded with the operand values it compared.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use super::ast::{BinOp, Expr, Method, Program, Stmt, StmtKind, Target};
use crate::fitness::{CmpOp, CondTrace};

const MAX_CALL_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Real(f64),
    Bool(bool),
    Text(String),
    None,
}

impl Value {
    pub fn truthy(&self) -> bool {
        match self {
            Value::Int(v) => *v != 0,
            Value::Real(v) => *v != 0.0,
            Value::Bool(b) => *b,
            Value::Text(s) => !s.is_empty(),
            Value::None => false,
        }
    }

    fn as_number(&self) -> Option<f64> {
        match self {
            Value::Int(v) => Some(*v as f64),
            Value::Real(v) => Some(*v),
            Value::Bool(b) => Some(f64::from(u8::from(*b))),
            _ => None,
        }
    }

    fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            Value::Bool(b) => Some(i64::from(*b)),
            _ => None,
        }
    }

    fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Real(_) => "float",
            Value::Bool(_) => "bool",
            Value::Text(_) => "str",
            Value::None => "NoneType",
        }
    }
}

/// Renders like Python's `str()`.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Real(v) if v.is_nan() => f.write_str("nan"),
            Value::Real(v) if v.is_infinite() => f.write_str(if *v > 0.0 { "inf" } else { "-inf" }),
            Value::Real(v) if v.fract() == 0.0 && v.abs() < 1e16 => write!(f, "{v:.1}"),
            Value::Real(v) => write!(f, "{v}"),
            Value::Bool(b) => f.write_str(if *b { "True" } else { "False" }),
            Value::Text(s) => f.write_str(s),
            Value::None => f.write_str("None"),
        }
    }
}

/// An exception raised by the program under test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RaisedError {
    pub exception: String,
    pub message: String,
}

impl RaisedError {
    fn new(exception: &str, message: impl Into<String>) -> Self {
        Self {
            exception: exception.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for RaisedError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.exception, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CallOutcome {
    Returned(Value),
    Raised(RaisedError),
}

impl CallOutcome {
    /// Output text: the returned value, or the error message when raised.
    pub fn render(&self) -> String {
        match self {
            CallOutcome::Returned(v) => v.to_string(),
            CallOutcome::Raised(e) => e.message.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredicateEval {
    pub predicate_id: usize,
    pub trace: CondTrace,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExecutionTrace {
    pub covered_lines: BTreeSet<u32>,
    pub predicates: Vec<PredicateEval>,
    /// One entry per applied call, in order.
    pub outcomes: Vec<CallOutcome>,
}

/// Live instance of the program's class.
#[derive(Debug, Clone, Default)]
pub struct Object {
    attrs: HashMap<String, Value>,
}

impl Object {
    pub fn get(&self, attr: &str) -> Option<&Value> {
        self.attrs.get(attr)
    }
}

enum Flow {
    Normal,
    Return(Value),
}

type Exec<T> = Result<T, RaisedError>;

/// Executes calls against one program while accumulating a trace.
pub struct Machine<'p> {
    program: &'p Program,
    trace: ExecutionTrace,
    depth: usize,
}

impl<'p> Machine<'p> {
    pub fn new(program: &'p Program) -> Self {
        Self {
            program,
            trace: ExecutionTrace::default(),
            depth: 0,
        }
    }

    pub fn into_trace(self) -> ExecutionTrace {
        self.trace
    }

    pub fn trace(&self) -> &ExecutionTrace {
        &self.trace
    }

    pub fn construct(&mut self, args: Vec<Value>) -> Exec<Object> {
        let mut obj = Object::default();
        let ctor = &self.program.constructor;
        let result = self.invoke(&mut obj, ctor, args).map(|_| ());
        self.push_outcome(&result.clone().map(|_| Value::None));
        result.map(|_| obj)
    }

    /// Calls a method from outside the class, recording the outcome.
    pub fn call(&mut self, obj: &mut Object, method: &str, args: Vec<Value>) -> Exec<Value> {
        let result = self.call_inner(obj, method, args);
        self.push_outcome(&result);
        result
    }

    /// Assigns an attribute from outside the class, routing through
    /// `set_<attr>` when the class defines a one-parameter setter.
    pub fn assign(&mut self, obj: &mut Object, attr: &str, value: Value) -> Exec<()> {
        let setter = format!("set_{attr}");
        let result = match self.program.method(&setter) {
            Some(m) if m.params.len() == 1 => self.invoke(obj, m, vec![value]).map(|_| ()),
            _ => {
                obj.attrs.insert(attr.to_string(), value);
                Ok(())
            }
        };
        self.push_outcome(&result.clone().map(|_| Value::None));
        result
    }

    fn push_outcome(&mut self, result: &Exec<Value>) {
        self.trace.outcomes.push(match result {
            Ok(v) => CallOutcome::Returned(v.clone()),
            Err(e) => CallOutcome::Raised(e.clone()),
        });
    }

    fn call_inner(&mut self, obj: &mut Object, method: &str, args: Vec<Value>) -> Exec<Value> {
        let program = self.program;
        let m = program.method(method).ok_or_else(|| {
            RaisedError::new(
                "AttributeError",
                format!("'{}' object has no attribute '{method}'", program.class_name),
            )
        })?;
        self.invoke(obj, m, args)
    }

    fn invoke(&mut self, obj: &mut Object, method: &'p Method, args: Vec<Value>) -> Exec<Value> {
        if args.len() != method.params.len() {
            return Err(RaisedError::new(
                "TypeError",
                format!(
                    "{}() takes {} positional argument(s) but {} were given",
                    method.name,
                    method.params.len(),
                    args.len()
                ),
            ));
        }
        if self.depth >= MAX_CALL_DEPTH {
            return Err(RaisedError::new("RecursionError", "maximum recursion depth exceeded"));
        }
        self.depth += 1;
        let mut frame = Frame {
            locals: method.params.iter().cloned().zip(args).collect(),
        };
        let result = self.block(obj, &mut frame, &method.body);
        self.depth -= 1;
        Ok(match result? {
            Flow::Return(v) => v,
            Flow::Normal => Value::None,
        })
    }

    fn block(&mut self, obj: &mut Object, frame: &mut Frame, body: &'p [Stmt]) -> Exec<Flow> {
        for stmt in body {
            if let Flow::Return(v) = self.stmt(obj, frame, stmt)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn stmt(&mut self, obj: &mut Object, frame: &mut Frame, stmt: &'p Stmt) -> Exec<Flow> {
        self.trace.covered_lines.insert(stmt.line);
        match &stmt.kind {
            StmtKind::Assign { target, value } => {
                let v = self.eval(obj, frame, value)?;
                match target {
                    Target::Local(n) => frame.locals.insert(n.clone(), v),
                    Target::SelfAttr(n) => obj.attrs.insert(n.clone(), v),
                };
                Ok(Flow::Normal)
            }
            StmtKind::If { branches, orelse } => {
                for branch in branches {
                    self.trace.covered_lines.insert(branch.line);
                    let (taken, trace) = self.condition(obj, frame, &branch.cond)?;
                    self.trace.predicates.push(PredicateEval {
                        predicate_id: branch.predicate_id,
                        trace,
                    });
                    if taken {
                        return self.block(obj, frame, &branch.body);
                    }
                }
                match orelse {
                    Some(body) => self.block(obj, frame, body),
                    None => Ok(Flow::Normal),
                }
            }
            StmtKind::Return(value) => {
                let v = match value {
                    Some(e) => self.eval(obj, frame, e)?,
                    None => Value::None,
                };
                Ok(Flow::Return(v))
            }
            StmtKind::Raise { exception, message } => {
                let message = match message {
                    Some(e) => self.eval(obj, frame, e)?.to_string(),
                    None => String::new(),
                };
                Err(RaisedError::new(exception, message))
            }
            StmtKind::Expr(e) => {
                self.eval(obj, frame, e)?;
                Ok(Flow::Normal)
            }
            StmtKind::Pass => Ok(Flow::Normal),
        }
    }

    /// Evaluates a branch predicate, keeping the operands for distance computation.
    fn condition(&mut self, obj: &mut Object, frame: &mut Frame, expr: &'p Expr) -> Exec<(bool, CondTrace)> {
        match expr {
            Expr::Compare { op, lhs, rhs } => {
                let a = self.eval(obj, frame, lhs)?;
                let b = self.eval(obj, frame, rhs)?;
                let outcome = compare(*op, &a, &b)?;
                let trace = match (a.as_number(), b.as_number()) {
                    (Some(x), Some(y)) => CondTrace::Compare { op: *op, lhs: x, rhs: y },
                    _ => CondTrace::Opaque(outcome),
                };
                Ok((outcome, trace))
            }
            Expr::And(parts) | Expr::Or(parts) => {
                let is_and = matches!(expr, Expr::And(_));
                let mut traces = Vec::with_capacity(parts.len());
                let mut result = is_and;
                for part in parts {
                    if result != is_and {
                        traces.push(None);
                        continue;
                    }
                    let (b, t) = self.condition(obj, frame, part)?;
                    traces.push(Some(t));
                    result = b;
                }
                let trace = if is_and {
                    CondTrace::And(traces)
                } else {
                    CondTrace::Or(traces)
                };
                Ok((result, trace))
            }
            Expr::Not(inner) => {
                let (b, t) = self.condition(obj, frame, inner)?;
                Ok((!b, CondTrace::Not(Box::new(t))))
            }
            other => {
                let b = self.eval(obj, frame, other)?.truthy();
                Ok((b, CondTrace::Opaque(b)))
            }
        }
    }

    fn eval(&mut self, obj: &mut Object, frame: &mut Frame, expr: &'p Expr) -> Exec<Value> {
        Ok(match expr {
            Expr::Int(v) => Value::Int(*v),
            Expr::Real(v) => Value::Real(*v),
            Expr::Str(s) => Value::Text(s.clone()),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::None => Value::None,
            Expr::Local(n) => frame.locals.get(n).cloned().ok_or_else(|| {
                RaisedError::new("NameError", format!("name '{n}' is not defined"))
            })?,
            Expr::SelfAttr(n) => obj.attrs.get(n).cloned().ok_or_else(|| {
                RaisedError::new(
                    "AttributeError",
                    format!("'{}' object has no attribute '{n}'", self.program.class_name),
                )
            })?,
            Expr::Call { method, args } => {
                let values = args
                    .iter()
                    .map(|a| self.eval(obj, frame, a))
                    .collect::<Exec<Vec<_>>>()?;
                self.call_inner(obj, method, values)?
            }
            Expr::Binary { op, lhs, rhs } => {
                let a = self.eval(obj, frame, lhs)?;
                let b = self.eval(obj, frame, rhs)?;
                binary(*op, &a, &b)?
            }
            Expr::Compare { op, lhs, rhs } => {
                let a = self.eval(obj, frame, lhs)?;
                let b = self.eval(obj, frame, rhs)?;
                Value::Bool(compare(*op, &a, &b)?)
            }
            Expr::And(parts) => {
                let mut last = Value::Bool(true);
                for p in parts {
                    last = self.eval(obj, frame, p)?;
                    if !last.truthy() {
                        break;
                    }
                }
                last
            }
            Expr::Or(parts) => {
                let mut last = Value::Bool(false);
                for p in parts {
                    last = self.eval(obj, frame, p)?;
                    if last.truthy() {
                        break;
                    }
                }
                last
            }
            Expr::Not(inner) => Value::Bool(!self.eval(obj, frame, inner)?.truthy()),
            Expr::Neg(inner) => match self.eval(obj, frame, inner)? {
                Value::Real(v) => Value::Real(-v),
                v => match v.as_int() {
                    Some(i) => Value::Int(i.checked_neg().ok_or_else(overflow)?),
                    None => {
                        return Err(RaisedError::new(
                            "TypeError",
                            format!("bad operand type for unary -: '{}'", v.type_name()),
                        ))
                    }
                },
            },
        })
    }
}

struct Frame {
    locals: HashMap<String, Value>,
}

fn overflow() -> RaisedError {
    RaisedError::new("OverflowError", "integer overflow")
}

fn type_error(op: &str, a: &Value, b: &Value) -> RaisedError {
    RaisedError::new(
        "TypeError",
        format!(
            "unsupported operand type(s) for {op}: '{}' and '{}'",
            a.type_name(),
            b.type_name()
        ),
    )
}

fn binary(op: BinOp, a: &Value, b: &Value) -> Exec<Value> {
    let symbol = match op {
        BinOp::Add => "+",
        BinOp::Sub => "-",
        BinOp::Mul => "*",
        BinOp::Div => "/",
        BinOp::Pow => "**",
    };
    if let (BinOp::Add, Value::Text(x), Value::Text(y)) = (op, a, b) {
        return Ok(Value::Text(format!("{x}{y}")));
    }
    if let (Some(x), Some(y)) = (a.as_int(), b.as_int()) {
        return match op {
            BinOp::Add => x.checked_add(y).map(Value::Int).ok_or_else(overflow),
            BinOp::Sub => x.checked_sub(y).map(Value::Int).ok_or_else(overflow),
            BinOp::Mul => x.checked_mul(y).map(Value::Int).ok_or_else(overflow),
            BinOp::Div if y == 0 => Err(RaisedError::new("ZeroDivisionError", "division by zero")),
            BinOp::Div => Ok(Value::Real(x as f64 / y as f64)),
            BinOp::Pow if y >= 0 => u32::try_from(y)
                .ok()
                .and_then(|e| x.checked_pow(e))
                .map(Value::Int)
                .ok_or_else(overflow),
            BinOp::Pow if x == 0 => Err(RaisedError::new(
                "ZeroDivisionError",
                "0.0 cannot be raised to a negative power",
            )),
            BinOp::Pow => Ok(Value::Real((x as f64).powf(y as f64))),
        };
    }
    let (Some(x), Some(y)) = (a.as_number(), b.as_number()) else {
        return Err(type_error(symbol, a, b));
    };
    match op {
        BinOp::Add => Ok(Value::Real(x + y)),
        BinOp::Sub => Ok(Value::Real(x - y)),
        BinOp::Mul => Ok(Value::Real(x * y)),
        BinOp::Div if y == 0.0 => Err(RaisedError::new("ZeroDivisionError", "float division by zero")),
        BinOp::Div => Ok(Value::Real(x / y)),
        BinOp::Pow if x == 0.0 && y < 0.0 => Err(RaisedError::new(
            "ZeroDivisionError",
            "0.0 cannot be raised to a negative power",
        )),
        BinOp::Pow => {
            let r = x.powf(y);
            if r.is_nan() && !x.is_nan() && !y.is_nan() {
                // Negative base with a fractional exponent is complex in Python.
                Err(RaisedError::new("ValueError", "math domain error"))
            } else {
                Ok(Value::Real(r))
            }
        }
    }
}

fn compare(op: CmpOp, a: &Value, b: &Value) -> Exec<bool> {
    if let (Some(x), Some(y)) = (a.as_number(), b.as_number()) {
        return Ok(op.apply(x, y));
    }
    match (op, a, b) {
        (CmpOp::Eq, _, _) => Ok(a == b),
        (CmpOp::Ne, _, _) => Ok(a != b),
        (_, Value::Text(x), Value::Text(y)) => Ok(match op {
            CmpOp::Lt => x < y,
            CmpOp::Le => x <= y,
            CmpOp::Gt => x > y,
            CmpOp::Ge => x >= y,
            CmpOp::Eq | CmpOp::Ne => unreachable!("handled above"),
        }),
        _ => Err(RaisedError::new(
            "TypeError",
            format!(
                "'{}' not supported between instances of '{}' and '{}'",
                op.symbol(),
                a.type_name(),
                b.type_name()
            ),
        )),
    }
}
