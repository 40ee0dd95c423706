//! Recursive-descent parser producing a [`Program`].

use std::collections::BTreeMap;

use super::ast::{BinOp, Branch, Expr, Method, Program, Stmt, StmtKind, Target};
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;
use crate::fitness::CmpOp;

const UNSUPPORTED_KEYWORDS: [&str; 20] = [
    "while", "for", "import", "from", "try", "except", "finally", "with", "lambda", "yield",
    "global", "nonlocal", "del", "assert", "async", "await", "break", "continue", "in", "is",
];

const RESERVED: [&str; 13] = [
    "class", "def", "if", "elif", "else", "return", "raise", "pass", "and", "or", "not", "True",
    "False",
];

pub fn parse_program(source: &str) -> Result<Program, ParseError> {
    let tokens = tokenize(source)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        next_predicate: 0,
    };
    p.program()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    next_predicate: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let t = self.peek();
        Err(ParseError::syntax(t.line, t.col, msg))
    }

    fn is_op(&self, op: &str) -> bool {
        matches!(&self.peek().tok, Tok::Op(o) if *o == op)
    }

    fn is_name(&self, name: &str) -> bool {
        matches!(&self.peek().tok, Tok::Name(n) if n == name)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.is_op(op) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_name(&mut self, name: &str) -> bool {
        if self.is_name(name) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> Result<(), ParseError> {
        if self.eat_op(op) {
            Ok(())
        } else {
            self.error(format!("expected `{op}`, found {}", describe(&self.peek().tok)))
        }
    }

    fn expect_tok(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek().tok == tok {
            self.advance();
            Ok(())
        } else {
            self.error(format!("expected {what}, found {}", describe(&self.peek().tok)))
        }
    }

    /// Rejects out-of-subset keywords at the current position.
    fn check_supported(&self) -> Result<(), ParseError> {
        let t = self.peek();
        match &t.tok {
            Tok::Name(n) if UNSUPPORTED_KEYWORDS.contains(&n.as_str()) => {
                Err(ParseError::unsupported(t.line, t.col, n.clone()))
            }
            Tok::Op("@") => Err(ParseError::unsupported(t.line, t.col, "decorator")),
            Tok::Op("[") | Tok::Op("]") => Err(ParseError::unsupported(t.line, t.col, "list")),
            _ => Ok(()),
        }
    }

    fn identifier(&mut self) -> Result<String, ParseError> {
        self.check_supported()?;
        match &self.peek().tok {
            Tok::Name(n) if !RESERVED.contains(&n.as_str()) && n != "None" => {
                let n = n.clone();
                self.advance();
                Ok(n)
            }
            other => self.error(format!("expected identifier, found {}", describe(other))),
        }
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        while self.peek().tok == Tok::Newline {
            self.advance();
        }
        self.check_supported()?;
        if !self.is_name("class") {
            return self.error("expected a class definition");
        }
        let program = self.class_def()?;
        while self.peek().tok == Tok::Newline {
            self.advance();
        }
        let t = self.peek();
        match &t.tok {
            Tok::Eof => Ok(program),
            Tok::Name(n) if n == "class" => {
                Err(ParseError::unsupported(t.line, t.col, "multiple classes"))
            }
            _ => {
                self.check_supported()?;
                self.error("only one class definition is allowed at top level")
            }
        }
    }

    fn class_def(&mut self) -> Result<Program, ParseError> {
        self.advance(); // class
        let class_name = self.identifier()?;
        if self.eat_op("(") {
            let t = self.peek();
            if !self.is_op(")") {
                return Err(ParseError::unsupported(t.line, t.col, "inheritance"));
            }
            self.expect_op(")")?;
        }
        self.expect_op(":")?;
        self.expect_tok(Tok::Newline, "newline after class header")?;
        self.expect_tok(Tok::Indent, "indented class body")?;

        let mut constructor = None;
        let mut methods = BTreeMap::new();
        while self.peek().tok != Tok::Dedent && self.peek().tok != Tok::Eof {
            self.check_supported()?;
            if self.eat_name("pass") {
                self.expect_tok(Tok::Newline, "newline")?;
                continue;
            }
            if !self.is_name("def") {
                return self.error("class body may only contain method definitions");
            }
            let t = self.peek().clone();
            let method = self.method_def()?;
            if method.name == "__init__" {
                if constructor.replace(method).is_some() {
                    return Err(ParseError::syntax(t.line, t.col, "duplicate __init__"));
                }
            } else if methods.contains_key(&method.name) {
                return Err(ParseError::syntax(
                    t.line,
                    t.col,
                    format!("duplicate method {}", method.name),
                ));
            } else {
                methods.insert(method.name.clone(), method);
            }
        }
        self.advance(); // dedent
        let line = self.peek().line;
        Ok(Program {
            class_name,
            constructor: constructor.unwrap_or(Method {
                name: "__init__".into(),
                line,
                params: vec![],
                body: vec![],
            }),
            methods,
            num_predicates: self.next_predicate,
        })
    }

    fn method_def(&mut self) -> Result<Method, ParseError> {
        let line = self.advance().line; // def
        let name = self.identifier()?;
        self.expect_op("(")?;
        if !self.eat_name("self") {
            return self.error("methods must take `self` as their first parameter");
        }
        let mut params = Vec::new();
        while self.eat_op(",") {
            let p = self.identifier()?;
            if self.is_op("=") {
                let t = self.peek();
                return Err(ParseError::unsupported(t.line, t.col, "default argument"));
            }
            if params.contains(&p) {
                return self.error(format!("duplicate parameter {p}"));
            }
            params.push(p);
        }
        self.expect_op(")")?;
        self.expect_op(":")?;
        let body = self.block()?;
        Ok(Method {
            name,
            line,
            params,
            body,
        })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        if self.peek().tok != Tok::Newline {
            return self.error("block must start on a new line");
        }
        self.advance();
        self.expect_tok(Tok::Indent, "indented block")?;
        let mut body = Vec::new();
        while self.peek().tok != Tok::Dedent && self.peek().tok != Tok::Eof {
            body.push(self.statement()?);
        }
        self.advance();
        Ok(body)
    }

    fn end_of_statement(&mut self) -> Result<(), ParseError> {
        self.expect_tok(Tok::Newline, "end of statement")
    }

    fn statement(&mut self) -> Result<Stmt, ParseError> {
        self.check_supported()?;
        let line = self.peek().line;
        let kind = if self.is_name("def") || self.is_name("class") {
            let t = self.peek();
            return Err(ParseError::unsupported(t.line, t.col, "nested definition"));
        } else if self.is_name("if") {
            return self.if_statement();
        } else if self.eat_name("return") {
            let value = if self.peek().tok == Tok::Newline {
                None
            } else {
                Some(self.expr()?)
            };
            self.end_of_statement()?;
            StmtKind::Return(value)
        } else if self.eat_name("raise") {
            let exception = self.identifier()?;
            let mut message = None;
            if self.eat_op("(") {
                if !self.is_op(")") {
                    message = Some(self.expr()?);
                }
                self.expect_op(")")?;
            }
            self.end_of_statement()?;
            StmtKind::Raise { exception, message }
        } else if self.eat_name("pass") {
            self.end_of_statement()?;
            StmtKind::Pass
        } else {
            let expr = self.expr()?;
            if self.eat_op("=") {
                let target = match expr {
                    Expr::Local(n) => Target::Local(n),
                    Expr::SelfAttr(n) => Target::SelfAttr(n),
                    _ => return self.error("invalid assignment target"),
                };
                let value = self.expr()?;
                if self.is_op("=") {
                    let t = self.peek();
                    return Err(ParseError::unsupported(t.line, t.col, "chained assignment"));
                }
                self.end_of_statement()?;
                StmtKind::Assign { target, value }
            } else {
                self.end_of_statement()?;
                StmtKind::Expr(expr)
            }
        };
        Ok(Stmt { line, kind })
    }

    fn if_statement(&mut self) -> Result<Stmt, ParseError> {
        let line = self.peek().line;
        let mut branches = Vec::new();
        let mut orelse = None;
        self.advance(); // if
        loop {
            let branch_line = if branches.is_empty() {
                line
            } else {
                self.tokens[self.pos - 1].line
            };
            let predicate_id = self.next_predicate;
            self.next_predicate += 1;
            let cond = self.expr()?;
            self.expect_op(":")?;
            let body = self.block()?;
            branches.push(Branch {
                line: branch_line,
                predicate_id,
                cond,
                body,
            });
            if self.eat_name("elif") {
                continue;
            }
            if self.eat_name("else") {
                self.expect_op(":")?;
                orelse = Some(self.block()?);
            }
            break;
        }
        Ok(Stmt {
            line,
            kind: StmtKind::If { branches, orelse },
        })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Expr, ParseError> {
        let first = self.and_expr()?;
        if !self.is_name("or") {
            return Ok(first);
        }
        let mut parts = vec![first];
        while self.eat_name("or") {
            parts.push(self.and_expr()?);
        }
        Ok(Expr::Or(parts))
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let first = self.not_expr()?;
        if !self.is_name("and") {
            return Ok(first);
        }
        let mut parts = vec![first];
        while self.eat_name("and") {
            parts.push(self.not_expr()?);
        }
        Ok(Expr::And(parts))
    }

    fn not_expr(&mut self) -> Result<Expr, ParseError> {
        if self.eat_name("not") {
            return Ok(Expr::Not(Box::new(self.not_expr()?)));
        }
        self.comparison()
    }

    fn cmp_op(&self) -> Option<CmpOp> {
        match self.peek().tok {
            Tok::Op("==") => Some(CmpOp::Eq),
            Tok::Op("!=") => Some(CmpOp::Ne),
            Tok::Op("<") => Some(CmpOp::Lt),
            Tok::Op("<=") => Some(CmpOp::Le),
            Tok::Op(">") => Some(CmpOp::Gt),
            Tok::Op(">=") => Some(CmpOp::Ge),
            _ => None,
        }
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.arith()?;
        let Some(op) = self.cmp_op() else {
            return Ok(lhs);
        };
        self.advance();
        let rhs = self.arith()?;
        if self.cmp_op().is_some() {
            let t = self.peek();
            return Err(ParseError::unsupported(t.line, t.col, "chained comparison"));
        }
        self.check_supported()?;
        Ok(Expr::Compare {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        })
    }

    fn arith(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat_op("+") {
                BinOp::Add
            } else if self.eat_op("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = if self.eat_op("*") {
                BinOp::Mul
            } else if self.eat_op("/") {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.factor()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.eat_op("-") {
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        if self.eat_op("+") {
            return self.factor();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat_op("**") {
            // Right-associative and binds tighter than a unary minus on its left.
            let exp = self.factor()?;
            return Ok(Expr::Binary {
                op: BinOp::Pow,
                lhs: Box::new(base),
                rhs: Box::new(exp),
            });
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        self.check_supported()?;
        let t = self.peek().clone();
        match t.tok {
            Tok::Int(v) => {
                self.advance();
                Ok(Expr::Int(v))
            }
            Tok::Real(v) => {
                self.advance();
                Ok(Expr::Real(v))
            }
            Tok::Str(s) => {
                self.advance();
                let mut text = s;
                // Adjacent literals concatenate.
                while let Tok::Str(more) = &self.peek().tok {
                    text.push_str(more);
                    self.advance();
                }
                Ok(Expr::Str(text))
            }
            Tok::Op("(") => {
                self.advance();
                let e = self.expr()?;
                if self.is_op(",") {
                    let t = self.peek();
                    return Err(ParseError::unsupported(t.line, t.col, "tuple"));
                }
                self.expect_op(")")?;
                Ok(e)
            }
            Tok::Name(ref n) => match n.as_str() {
                "True" => {
                    self.advance();
                    Ok(Expr::Bool(true))
                }
                "False" => {
                    self.advance();
                    Ok(Expr::Bool(false))
                }
                "None" => {
                    self.advance();
                    Ok(Expr::None)
                }
                "self" => {
                    self.advance();
                    self.expect_op(".")?;
                    let name = self.identifier()?;
                    if self.eat_op("(") {
                        let args = self.call_args()?;
                        Ok(Expr::Call { method: name, args })
                    } else {
                        Ok(Expr::SelfAttr(name))
                    }
                }
                _ => {
                    let name = self.identifier()?;
                    if self.is_op("(") {
                        return Err(ParseError::unsupported(
                            t.line,
                            t.col,
                            format!("call to free function {name}"),
                        ));
                    }
                    if self.is_op(".") {
                        return Err(ParseError::unsupported(
                            t.line,
                            t.col,
                            format!("attribute access on {name}"),
                        ));
                    }
                    Ok(Expr::Local(name))
                }
            },
            ref other => self.error(format!("expected expression, found {}", describe(other))),
        }
    }

    fn call_args(&mut self) -> Result<Vec<Expr>, ParseError> {
        let mut args = Vec::new();
        if self.eat_op(")") {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat_op(")") {
                return Ok(args);
            }
            self.expect_op(",")?;
        }
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Name(n) => format!("`{n}`"),
        Tok::Int(v) => format!("`{v}`"),
        Tok::Real(v) => format!("`{v}`"),
        Tok::Str(_) => "string literal".into(),
        Tok::Op(o) => format!("`{o}`"),
        Tok::Newline => "end of line".into(),
        Tok::Indent => "indent".into(),
        Tok::Dedent => "dedent".into(),
        Tok::Eof => "end of input".into(),
    }
}
