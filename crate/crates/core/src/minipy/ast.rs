use std::collections::BTreeMap;

use crate::fitness::CmpOp;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(i64),
    Real(f64),
    Str(String),
    Bool(bool),
    None,
    Local(String),
    SelfAttr(String),
    /// `self.method(args)`
    Call { method: String, args: Vec<Expr> },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Compare { op: CmpOp, lhs: Box<Expr>, rhs: Box<Expr> },
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Not(Box<Expr>),
    Neg(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Local(String),
    SelfAttr(String),
}

/// One `if` or `elif` arm.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub line: u32,
    pub predicate_id: usize,
    pub cond: Expr,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Assign { target: Target, value: Expr },
    If { branches: Vec<Branch>, orelse: Option<Vec<Stmt>> },
    Return(Option<Expr>),
    Raise { exception: String, message: Option<Expr> },
    Expr(Expr),
    Pass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub line: u32,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Method {
    pub name: String,
    pub line: u32,
    /// Parameter names after `self`.
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub class_name: String,
    /// `__init__`, or an empty zero-argument body when the class has none.
    pub constructor: Method,
    pub methods: BTreeMap<String, Method>,
    pub num_predicates: usize,
}

impl Program {
    pub fn method(&self, name: &str) -> Option<&Method> {
        self.methods.get(name)
    }

    /// Constructor first, then methods in source order.
    pub fn bodies(&self) -> Vec<&Method> {
        let mut all: Vec<&Method> = self.methods.values().collect();
        all.sort_by_key(|m| m.line);
        all.insert(0, &self.constructor);
        all
    }
}
