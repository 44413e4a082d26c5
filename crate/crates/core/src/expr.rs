//! Scalar expression language used by spec files.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := "-" factor | power
//! power  := atom ("^" factor)?
//! atom   := number | ident | ident "(" expr ")" | "(" expr ")"
//! ```
//!
//! Functions are `sin cos exp log sqrt tanh`; `pi` is the only named constant.
//! Variables must come from the list handed to [`parse`], and are resolved to
//! coordinate indices at parse time.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::jet::{ArithOp, Jet2, JetError, UnaryFn};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("arity error at offset {offset}: {message}")]
    Arity { offset: usize, message: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::Arity { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("evaluating `{expr}`: {source}")]
pub struct EvalError {
    pub expr: String,
    #[source]
    pub source: JetError,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var { name: Arc<str>, index: usize },
    Call(UnaryFn, Box<Node>),
    Binary(ArithOp, Box<Node>, Box<Node>),
}

/// Parsed expression together with its source text and variable count.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprAst {
    root: Node,
    source: Arc<str>,
    nvars: usize,
}

/// Rectangular grid of expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<ExprAst>,
}

impl ExprMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<ExprAst>) -> Option<ExprMatrix> {
        (entries.len() == rows * cols).then_some(ExprMatrix { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize, nvars: usize) -> ExprMatrix {
        ExprMatrix { rows, cols, entries: vec![ExprAst::constant(0.0, nvars); rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &ExprAst {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, e: ExprAst) {
        self.entries[i * self.cols + j] = e;
    }

    pub fn entries(&self) -> &[ExprAst] {
        &self.entries
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Eof,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit = &text[start..i];
                let value: f64 = lit.parse().map_err(|_| ParseError::Syntax {
                    offset: start,
                    message: format!("malformed number `{lit}`"),
                })?;
                if !value.is_finite() {
                    return Err(ParseError::Syntax {
                        offset: start,
                        message: format!("number `{lit}` out of range"),
                    });
                }
                out.push((Tok::Num(value), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{}`", text[start..].chars().next().unwrap()),
                })
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::Eof, text.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        let found = match self.peek() {
            Tok::Eof => "end of input".to_string(),
            t => format!("{t:?}"),
        };
        ParseError::Syntax { offset: self.offset(), message: format!("expected {wanted}, found {found}") }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => ArithOp::Mul,
                Tok::Slash => ArithOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Node, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            let inner = self.factor()?;
            return Ok(Node::Call(UnaryFn::Neg, Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exponent = self.factor()?;
            return Ok(Node::Binary(ArithOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Node::Num(v))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                let called = *self.peek() == Tok::LParen;
                if let Some(func) = UnaryFn::from_name(&name) {
                    if !called {
                        return Err(ParseError::Arity {
                            offset,
                            message: format!("function `{name}` takes one argument in parentheses"),
                        });
                    }
                    self.bump();
                    if *self.peek() == Tok::RParen {
                        return Err(ParseError::Arity {
                            offset: self.offset(),
                            message: format!("function `{name}` takes exactly one argument, got none"),
                        });
                    }
                    let arg = self.expr()?;
                    if *self.peek() == Tok::Comma {
                        return Err(ParseError::Arity {
                            offset: self.offset(),
                            message: format!("function `{name}` takes exactly one argument"),
                        });
                    }
                    self.expect_rparen()?;
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                let node = if name == "pi" {
                    Node::Num(std::f64::consts::PI)
                } else if let Some(index) = self.vars.iter().position(|v| *v == name) {
                    Node::Var { name: Arc::from(name.as_str()), index }
                } else {
                    return Err(ParseError::UnknownIdentifier { name, offset });
                };
                if called {
                    return Err(ParseError::Arity {
                        offset: self.offset(),
                        message: format!("`{name}` is not a function"),
                    });
                }
                Ok(node)
            }
            _ => Err(self.unexpected("a number, identifier or `(`")),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected("`)`"))
        }
    }
}

/// Parses `text`, resolving identifiers against `variables`.
pub fn parse<S: AsRef<str>>(text: &str, variables: &[S]) -> Result<ExprAst, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::Syntax { offset: 0, message: "empty expression".into() });
    }
    let vars: Vec<&str> = variables.iter().map(|v| v.as_ref()).collect();
    let mut p = Parser { toks: lex(text)?, pos: 0, vars: &vars };
    let root = p.expr()?;
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("operator or end of input"));
    }
    Ok(ExprAst { root, source: Arc::from(text), nvars: vars.len() })
}

/// Chart variable names `prefix1..prefixN`.
pub fn chart_variables(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

impl ExprAst {
    pub fn constant(value: f64, nvars: usize) -> ExprAst {
        let root = Node::Num(value);
        ExprAst { source: Arc::from(print_node(&root).as_str()), root, nvars }
    }

    pub fn from_node(root: Node, nvars: usize) -> ExprAst {
        ExprAst { source: Arc::from(print_node(&root).as_str()), root, nvars }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Value of a literal-only expression.
    pub fn constant_value(&self) -> Option<f64> {
        match self.root {
            Node::Num(v) => Some(v),
            _ => None,
        }
    }

    /// Jet at `point`, skipping the tree walk for literals.
    pub fn jet_at(&self, point: &[f64]) -> Result<Jet2, EvalError> {
        match self.constant_value() {
            Some(v) => {
                self.check_len(point.len())?;
                Ok(Jet2::constant(v, point.len()))
            }
            None => self.eval_jet(point),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.root, Node::Num(v) if v == 0.0)
    }

    fn annotate(&self, source: JetError) -> EvalError {
        EvalError { expr: self.source.to_string(), source }
    }

    fn check_len(&self, len: usize) -> Result<(), EvalError> {
        if len != self.nvars {
            return Err(self.annotate(JetError::DimensionMismatch(self.nvars, len)));
        }
        Ok(())
    }

    /// Jet of the expression at `point`, differentiating in every variable.
    pub fn eval_jet(&self, point: &[f64]) -> Result<Jet2, EvalError> {
        self.check_len(point.len())?;
        self.eval_composed(&Jet2::variables(point))
    }

    /// Evaluates with arbitrary jets substituted for the variables, which
    /// composes the expression with whatever map produced those jets.
    pub fn eval_composed(&self, inputs: &[Jet2]) -> Result<Jet2, EvalError> {
        self.check_len(inputs.len())?;
        let dim = inputs.first().map_or(0, Jet2::dim);
        eval_node(&self.root, inputs, dim).map_err(|e| self.annotate(e))
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        self.check_len(point.len())?;
        eval_scalar(&self.root, point).map_err(|e| self.annotate(e))
    }

    /// Symbolic partial derivative with respect to variable `index`.
    ///
    /// Only constant folding around 0 and 1 is applied to the result.
    pub fn derivative(&self, index: usize) -> ExprAst {
        ExprAst::from_node(diff(&self.root, index), self.nvars)
    }
}

fn eval_node(node: &Node, inputs: &[Jet2], dim: usize) -> Result<Jet2, JetError> {
    match node {
        Node::Num(v) => Ok(Jet2::constant(*v, dim)),
        Node::Var { index, .. } => Ok(inputs[*index].clone()),
        Node::Call(f, arg) => eval_node(arg, inputs, dim)?.unary(*f),
        Node::Binary(op, a, b) => {
            let a = eval_node(a, inputs, dim)?;
            let b = eval_node(b, inputs, dim)?;
            Jet2::arith(*op, &a, &b)
        }
    }
}

fn eval_scalar(node: &Node, point: &[f64]) -> Result<f64, JetError> {
    match node {
        Node::Num(v) => Ok(*v),
        Node::Var { index, .. } => Ok(point[*index]),
        Node::Call(f, arg) => f.apply(eval_scalar(arg, point)?),
        Node::Binary(op, a, b) => {
            let a = eval_scalar(a, point)?;
            let b = eval_scalar(b, point)?;
            match op {
                ArithOp::Add => Ok(a + b),
                ArithOp::Sub => Ok(a - b),
                ArithOp::Mul => Ok(a * b),
                ArithOp::Div if b == 0.0 => Err(JetError::DivisionByZero),
                ArithOp::Div => Ok(a / b),
                ArithOp::Pow => {
                    if b.fract() == 0.0 {
                        if b < 0.0 && a == 0.0 {
                            return Err(JetError::DivisionByZero);
                        }
                        Ok(a.powi(b as i32))
                    } else if a <= 0.0 {
                        Err(JetError::NonIntegerPower { base: a })
                    } else {
                        Ok(a.powf(b))
                    }
                }
            }
        }
    }
}

fn num(v: f64) -> Node {
    // parsed trees never hold negative literals; keep folded ones in the same shape
    if v < 0.0 {
        Node::Call(UnaryFn::Neg, Box::new(Node::Num(-v)))
    } else {
        Node::Num(v)
    }
}

fn add(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Node::Num(x), _) if *x == 0.0 => b,
        (_, Node::Num(y)) if *y == 0.0 => a,
        (Node::Num(x), Node::Num(y)) => num(x + y),
        _ => Node::Binary(ArithOp::Add, Box::new(a), Box::new(b)),
    }
}

fn sub(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (_, Node::Num(y)) if *y == 0.0 => a,
        (Node::Num(x), _) if *x == 0.0 => neg(b),
        (Node::Num(x), Node::Num(y)) => num(x - y),
        _ => Node::Binary(ArithOp::Sub, Box::new(a), Box::new(b)),
    }
}

fn mul(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Node::Num(x), _) | (_, Node::Num(x)) if *x == 0.0 => num(0.0),
        (Node::Num(x), _) if *x == 1.0 => b,
        (_, Node::Num(y)) if *y == 1.0 => a,
        (Node::Num(x), Node::Num(y)) => num(x * y),
        _ => Node::Binary(ArithOp::Mul, Box::new(a), Box::new(b)),
    }
}

fn div(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Node::Num(x), _) if *x == 0.0 => num(0.0),
        (_, Node::Num(y)) if *y == 1.0 => a,
        _ => Node::Binary(ArithOp::Div, Box::new(a), Box::new(b)),
    }
}

fn neg(a: Node) -> Node {
    match a {
        Node::Num(x) if x == 0.0 => num(0.0),
        Node::Call(UnaryFn::Neg, inner) => *inner,
        other => Node::Call(UnaryFn::Neg, Box::new(other)),
    }
}

fn call(f: UnaryFn, a: Node) -> Node {
    Node::Call(f, Box::new(a))
}

fn pow(a: Node, b: Node) -> Node {
    match &b {
        Node::Num(y) if *y == 0.0 => num(1.0),
        Node::Num(y) if *y == 1.0 => a,
        _ => Node::Binary(ArithOp::Pow, Box::new(a), Box::new(b)),
    }
}

fn depends_on(node: &Node, index: usize) -> bool {
    match node {
        Node::Num(_) => false,
        Node::Var { index: i, .. } => *i == index,
        Node::Call(_, a) => depends_on(a, index),
        Node::Binary(_, a, b) => depends_on(a, index) || depends_on(b, index),
    }
}

fn diff(node: &Node, index: usize) -> Node {
    if !depends_on(node, index) {
        return num(0.0);
    }
    match node {
        Node::Num(_) => num(0.0),
        Node::Var { index: i, .. } => num(if *i == index { 1.0 } else { 0.0 }),
        Node::Call(f, a) => {
            let da = diff(a, index);
            let a = (**a).clone();
            let outer = match f {
                UnaryFn::Neg => return neg(da),
                UnaryFn::Sin => call(UnaryFn::Cos, a),
                UnaryFn::Cos => neg(call(UnaryFn::Sin, a)),
                UnaryFn::Exp => call(UnaryFn::Exp, a),
                UnaryFn::Log => div(num(1.0), a),
                UnaryFn::Sqrt => div(num(0.5), call(UnaryFn::Sqrt, a)),
                UnaryFn::Tanh => sub(num(1.0), pow(call(UnaryFn::Tanh, a), num(2.0))),
            };
            mul(outer, da)
        }
        Node::Binary(op, a, b) => {
            let (da, db) = (diff(a, index), diff(b, index));
            let (a, b) = ((**a).clone(), (**b).clone());
            match op {
                ArithOp::Add => add(da, db),
                ArithOp::Sub => sub(da, db),
                ArithOp::Mul => add(mul(da, b), mul(a, db)),
                ArithOp::Div => sub(div(da, b.clone()), div(mul(a, db), pow(b, num(2.0)))),
                ArithOp::Pow => {
                    if let Node::Num(e) = b {
                        mul(mul(num(e), pow(a, num(e - 1.0))), da)
                    } else {
                        // d(a^b) = a^b (db log a + b da / a)
                        let whole = pow(a.clone(), b.clone());
                        let t1 = mul(db, call(UnaryFn::Log, a.clone()));
                        let t2 = div(mul(b, da), a);
                        mul(whole, add(t1, t2))
                    }
                }
            }
        }
    }
}

fn print_node(node: &Node) -> String {
    match node {
        // `{:?}` is the shortest representation that round-trips.
        Node::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => format!("(-{:?})", -v),
        Node::Num(v) => format!("{v:?}"),
        Node::Var { name, .. } => name.to_string(),
        Node::Call(UnaryFn::Neg, a) => format!("(-{})", print_node(a)),
        Node::Call(f, a) => format!("{}({})", f.name(), print_node(a)),
        Node::Binary(op, a, b) => {
            let sym = match op {
                ArithOp::Add => "+",
                ArithOp::Sub => "-",
                ArithOp::Mul => "*",
                ArithOp::Div => "/",
                ArithOp::Pow => "^",
            };
            format!("({} {sym} {})", print_node(a), print_node(b))
        }
    }
}

impl fmt::Display for ExprAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_node(&self.root))
    }
}
