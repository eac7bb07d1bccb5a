//! A small arithmetic expression language for objectives and constraint
//! components, with evaluation and forward-mode gradients.
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = primary [ "^" unary ] ;          (* exponent must be constant *)
//! primary = number | "pi" | var | func "(" expr ")" | "(" expr ")" ;
//! var     = "x" digit { digit } ;            (* x1 .. xn *)
//! func    = "sin" | "cos" | "exp" | "sqrt" | "log" ;
//! ```
//!
//! `^` binds tighter than unary minus (`-x1^2` is `-(x1^2)`) and is
//! right-associative. Exponents are constant: integer exponents accept any
//! base, non-integer exponents require a positive base.

use crate::densela::Vector;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected one of {}", expected.join(", "))]
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
    },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("variable x{index} at byte {offset} is outside x1..x{dim}")]
    VariableOutOfRange {
        offset: usize,
        index: usize,
        dim: usize,
    },
    #[error("exponent at byte {offset} depends on a variable")]
    NonConstantExponent { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::VariableOutOfRange { offset, .. }
            | ParseError::NonConstantExponent { offset } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("point has dimension {found}, expression expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{function} is not defined (or not differentiable) at {argument}")]
    Domain {
        function: &'static str,
        argument: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Log,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "log" => Func::Log,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Log => "log",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Pi,
    /// Zero-based variable index.
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Pow(Box<Node>, f64),
    Call(Func, Box<Node>),
}

impl Node {
    fn has_variables(&self) -> bool {
        match self {
            Node::Num(_) | Node::Pi => false,
            Node::Var(_) => true,
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.has_variables(),
            Node::Bin(_, a, b) => a.has_variables() || b.has_variables(),
        }
    }
}

/// A parsed expression over `x1..xn`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    dim: usize,
}

impl Expr {
    pub fn parse(src: &str, dim: usize) -> Result<Self, ParseError> {
        parse(src, dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        self.check_dim(x)?;
        eval_node(&self.root, x, self.dim)
    }

    /// Exact first derivatives by forward-mode dual numbers.
    pub fn grad(&self, x: &[f64]) -> Result<Vector, EvalError> {
        Ok(self.value_and_grad(x)?.partials)
    }

    pub fn value_and_grad(&self, x: &[f64]) -> Result<DualVec, EvalError> {
        self.check_dim(x)?;
        let seeds: Vec<DualVec> = x
            .iter()
            .enumerate()
            .map(|(i, &v)| DualVec::variable(v, i, self.dim))
            .collect();
        eval_node(&self.root, &seeds, self.dim)
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), EvalError> {
        if x.len() != self.dim {
            return Err(EvalError::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, f)
    }
}

// Fully parenthesized so that printing then parsing reproduces the tree.
fn write_node(node: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match node {
        Node::Num(v) => write_number(*v, f),
        Node::Pi => f.write_str("pi"),
        Node::Var(i) => write!(f, "x{}", i + 1),
        Node::Neg(a) => {
            f.write_str("(-")?;
            write_node(a, f)?;
            f.write_str(")")
        }
        Node::Bin(op, a, b) => {
            f.write_str("(")?;
            write_node(a, f)?;
            write!(f, " {} ", op.symbol())?;
            write_node(b, f)?;
            f.write_str(")")
        }
        Node::Pow(a, p) => {
            f.write_str("(")?;
            write_node(a, f)?;
            f.write_str("^")?;
            write_number(*p, f)?;
            f.write_str(")")
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_node(a, f)?;
            f.write_str(")")
        }
    }
}

fn write_number(v: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if v < 0.0 || (v == 0.0 && v.is_sign_negative()) {
        write!(f, "(-{})", -v)
    } else {
        write!(f, "{v}")
    }
}

/// Value together with all first partial derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVec {
    pub value: f64,
    pub partials: Vector,
}

impl DualVec {
    pub fn constant(value: f64, dim: usize) -> Self {
        Self {
            value,
            partials: Vector::zeros(dim),
        }
    }

    pub fn variable(value: f64, index: usize, dim: usize) -> Self {
        let mut partials = Vector::zeros(dim);
        partials[index] = 1.0;
        Self { value, partials }
    }

    /// Chain rule for a scalar function with derivative `slope` at `value`.
    fn chain(&self, value: f64, slope: f64) -> Self {
        Self {
            value,
            partials: &self.partials * slope,
        }
    }
}

/// Arithmetic shared by plain evaluation and forward-mode differentiation.
trait Scalar: Clone {
    fn constant(value: f64, dim: usize) -> Self;
    fn value(&self) -> f64;
    fn add(self, rhs: Self) -> Self;
    fn sub(self, rhs: Self) -> Self;
    fn mul(self, rhs: Self) -> Self;
    fn div(self, rhs: Self) -> Self;
    fn neg(self) -> Self;
    fn powi(self, k: i32) -> Self;
    fn powf(self, p: f64) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn sqrt(self) -> Result<Self, EvalError>;
    fn ln(self) -> Result<Self, EvalError>;
}

impl Scalar for f64 {
    fn constant(value: f64, _dim: usize) -> Self {
        value
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add(self, rhs: Self) -> Self {
        self + rhs
    }
    fn sub(self, rhs: Self) -> Self {
        self - rhs
    }
    fn mul(self, rhs: Self) -> Self {
        self * rhs
    }
    fn div(self, rhs: Self) -> Self {
        self / rhs
    }
    fn neg(self) -> Self {
        -self
    }
    fn powi(self, k: i32) -> Self {
        f64::powi(self, k)
    }
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sqrt(self) -> Result<Self, EvalError> {
        if self < 0.0 {
            return Err(EvalError::Domain {
                function: "sqrt",
                argument: self,
            });
        }
        Ok(f64::sqrt(self))
    }
    fn ln(self) -> Result<Self, EvalError> {
        if self <= 0.0 {
            return Err(EvalError::Domain {
                function: "log",
                argument: self,
            });
        }
        Ok(f64::ln(self))
    }
}

impl Scalar for DualVec {
    fn constant(value: f64, dim: usize) -> Self {
        DualVec::constant(value, dim)
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn add(self, rhs: Self) -> Self {
        Self {
            value: self.value + rhs.value,
            partials: self.partials + rhs.partials,
        }
    }
    fn sub(self, rhs: Self) -> Self {
        Self {
            value: self.value - rhs.value,
            partials: self.partials - rhs.partials,
        }
    }
    fn mul(self, rhs: Self) -> Self {
        Self {
            value: self.value * rhs.value,
            partials: &self.partials * rhs.value + &rhs.partials * self.value,
        }
    }
    fn div(self, rhs: Self) -> Self {
        let value = self.value / rhs.value;
        Self {
            value,
            partials: (&self.partials - &rhs.partials * value) / rhs.value,
        }
    }
    fn neg(self) -> Self {
        Self {
            value: -self.value,
            partials: -self.partials,
        }
    }
    fn powi(self, k: i32) -> Self {
        if k == 0 {
            return DualVec::constant(1.0, self.partials.len());
        }
        let slope = k as f64 * self.value.powi(k - 1);
        self.chain(self.value.powi(k), slope)
    }
    fn powf(self, p: f64) -> Self {
        let slope = p * self.value.powf(p - 1.0);
        self.chain(self.value.powf(p), slope)
    }
    fn sin(self) -> Self {
        self.chain(self.value.sin(), self.value.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.value.cos(), -self.value.sin())
    }
    fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e)
    }
    fn sqrt(self) -> Result<Self, EvalError> {
        if self.value <= 0.0 {
            return Err(EvalError::Domain {
                function: "sqrt",
                argument: self.value,
            });
        }
        let r = self.value.sqrt();
        Ok(self.chain(r, 0.5 / r))
    }
    fn ln(self) -> Result<Self, EvalError> {
        if self.value <= 0.0 {
            return Err(EvalError::Domain {
                function: "log",
                argument: self.value,
            });
        }
        Ok(self.chain(self.value.ln(), 1.0 / self.value))
    }
}

fn eval_node<T: Scalar>(node: &Node, vars: &[T], dim: usize) -> Result<T, EvalError> {
    Ok(match node {
        Node::Num(v) => T::constant(*v, dim),
        Node::Pi => T::constant(std::f64::consts::PI, dim),
        Node::Var(i) => vars[*i].clone(),
        Node::Neg(a) => eval_node(a, vars, dim)?.neg(),
        Node::Bin(op, a, b) => {
            let a = eval_node(a, vars, dim)?;
            let b = eval_node(b, vars, dim)?;
            match op {
                BinOp::Add => a.add(b),
                BinOp::Sub => a.sub(b),
                BinOp::Mul => a.mul(b),
                BinOp::Div => a.div(b),
            }
        }
        Node::Pow(a, p) => {
            let base = eval_node(a, vars, dim)?;
            if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
                base.powi(*p as i32)
            } else if base.value() > 0.0 {
                base.powf(*p)
            } else {
                return Err(EvalError::Domain {
                    function: "^ (non-integer exponent)",
                    argument: base.value(),
                });
            }
        }
        Node::Call(func, a) => {
            let a = eval_node(a, vars, dim)?;
            match func {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Exp => a.exp(),
                Func::Sqrt => a.sqrt()?,
                Func::Log => a.ln()?,
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

const PRIMARY_START: &[&str] = &["number", "variable", "pi", "function", "(", "-"];

fn tokenize(src: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(Token::Plus),
            b'-' => Some(Token::Minus),
            b'*' => Some(Token::Star),
            b'/' => Some(Token::Slash),
            b'^' => Some(Token::Caret),
            b'(' => Some(Token::LParen),
            b')' => Some(Token::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            tokens.push((tok, start));
            i += 1;
        } else if c.is_ascii_digit() || c == b'.' {
            i = scan_number(bytes, i);
            let text = &src[start..i];
            match text.parse::<f64>() {
                Ok(v) if v.is_finite() => tokens.push((Token::Num(v), start)),
                _ => {
                    return Err(ParseError::Syntax {
                        offset: start,
                        expected: vec!["finite number"],
                    })
                }
            }
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            tokens.push((Token::Ident(src[start..i].to_string()), start));
        } else {
            return Err(ParseError::Syntax {
                offset: start,
                expected: vec!["number", "identifier", "operator", "parenthesis"],
            });
        }
    }
    tokens.push((Token::Eof, src.len()));
    Ok(tokens)
}

fn scan_number(bytes: &[u8], mut i: usize) -> usize {
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
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
    i
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) -> (Token, usize) {
        let tok = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn expect(&mut self, want: Token, label: &'static str) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(ParseError::Syntax {
                offset: self.offset(),
                expected: vec![label],
            })
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Token::Plus => BinOp::Add,
                Token::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Token::Star => BinOp::Mul,
                Token::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if *self.peek() == Token::Minus {
            self.bump();
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if *self.peek() != Token::Caret {
            return Ok(base);
        }
        self.bump();
        let exp_offset = self.offset();
        let exponent = self.unary()?;
        if exponent.has_variables() {
            return Err(ParseError::NonConstantExponent { offset: exp_offset });
        }
        // Variable-free, so evaluation only fails on a domain error.
        let value = eval_node::<f64>(&exponent, &[], 0)
            .ok()
            .filter(|v| v.is_finite())
            .ok_or(ParseError::Syntax {
                offset: exp_offset,
                expected: vec!["finite constant exponent"],
            })?;
        Ok(Node::Pow(Box::new(base), value))
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let (tok, offset) = self.bump();
        match tok {
            Token::Num(v) => Ok(Node::Num(v)),
            Token::LParen => {
                let inner = self.expr()?;
                self.expect(Token::RParen, ")")?;
                Ok(inner)
            }
            Token::Ident(name) => self.identifier(name, offset),
            _ => Err(ParseError::Syntax {
                offset,
                expected: PRIMARY_START.to_vec(),
            }),
        }
    }

    fn identifier(&mut self, name: String, offset: usize) -> Result<Node, ParseError> {
        if name == "pi" {
            return Ok(Node::Pi);
        }
        if let Some(func) = Func::from_name(&name) {
            self.expect(Token::LParen, "(")?;
            let arg = self.expr()?;
            self.expect(Token::RParen, ")")?;
            return Ok(Node::Call(func, Box::new(arg)));
        }
        let digits = name
            .strip_prefix('x')
            .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()));
        match digits {
            Some(d) => {
                let index: usize = d.parse().unwrap_or(usize::MAX);
                if index == 0 || index > self.dim {
                    Err(ParseError::VariableOutOfRange {
                        offset,
                        index,
                        dim: self.dim,
                    })
                } else {
                    Ok(Node::Var(index - 1))
                }
            }
            None => Err(ParseError::UnknownIdentifier { offset, name }),
        }
    }
}

/// Parses `src` as an expression over `x1..x{dim}`.
pub fn parse(src: &str, dim: usize) -> Result<Expr, ParseError> {
    let tokens = tokenize(src)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        dim,
    };
    let root = parser.expr()?;
    if *parser.peek() != Token::Eof {
        return Err(ParseError::Syntax {
            offset: parser.offset(),
            expected: vec!["operator", "end of input"],
        });
    }
    Ok(Expr { root, dim })
}
