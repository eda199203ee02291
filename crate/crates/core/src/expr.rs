//! A small expression language for nonlinearities `f(t, y)` and bracket
//! functions of `t`.
//!
//! Grammar, lowest precedence first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          right-associative
//! primary := number | 't' | 'y' | 'T' | func '(' sum ')' | '(' sum ')'
//! func    := exp | sin | cos | log | sqrt | abs
//! ```

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Variable {
    /// Grid point `t`.
    Time,
    /// State value `y`.
    State,
    /// Grid parameter `T`.
    GridSize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Function {
    Exp,
    Sin,
    Cos,
    Log,
    Sqrt,
    Abs,
}

impl Function {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Function::Exp,
            "sin" => Function::Sin,
            "cos" => Function::Cos,
            "log" => Function::Log,
            "sqrt" => Function::Sqrt,
            "abs" => Function::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Function::Exp => "exp",
            Function::Sin => "sin",
            Function::Cos => "cos",
            Function::Log => "log",
            Function::Sqrt => "sqrt",
            Function::Abs => "abs",
        }
    }
}

/// Parsed expression tree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Expr {
    Number(f64),
    Var(Variable),
    Neg(Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Call(Function, Box<Expr>),
}

/// Kind of arithmetic fault raised during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FaultKind {
    DivisionByZero,
    LogOfNonPositive,
    SqrtOfNegative,
    /// Overflow or an undefined power such as `(-1)^0.5`.
    NonFinite,
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FaultKind::DivisionByZero => "division by zero",
            FaultKind::LogOfNonPositive => "log of a nonpositive value",
            FaultKind::SqrtOfNegative => "sqrt of a negative value",
            FaultKind::NonFinite => "non-finite result",
        })
    }
}

/// An evaluation fault and the subexpression that raised it.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} in `{subexpression}`")]
pub struct EvalFault {
    pub kind: FaultKind,
    pub subexpression: String,
}

/// Values bound to `t`, `y` and `T` during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Bindings {
    pub t: f64,
    pub y: f64,
    pub grid_size: f64,
}

impl Bindings {
    pub fn new(t: f64, y: f64, grid_size: f64) -> Self {
        Self { t, y, grid_size }
    }
}

impl Expr {
    /// Evaluates recursively; every non-finite intermediate is a fault.
    pub fn evaluate(&self, env: &Bindings) -> std::result::Result<f64, EvalFault> {
        let fault = |kind| EvalFault {
            kind,
            subexpression: self.to_string(),
        };
        let value = match self {
            Expr::Number(v) => *v,
            Expr::Var(Variable::Time) => env.t,
            Expr::Var(Variable::State) => env.y,
            Expr::Var(Variable::GridSize) => env.grid_size,
            Expr::Neg(inner) => -inner.evaluate(env)?,
            Expr::Binary(op, lhs, rhs) => {
                let a = lhs.evaluate(env)?;
                let b = rhs.evaluate(env)?;
                match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => {
                        if b == 0.0 {
                            return Err(fault(FaultKind::DivisionByZero));
                        }
                        a / b
                    }
                    BinaryOp::Pow => {
                        if a == 0.0 && b < 0.0 {
                            return Err(fault(FaultKind::DivisionByZero));
                        }
                        a.powf(b)
                    }
                }
            }
            Expr::Call(func, arg) => {
                let x = arg.evaluate(env)?;
                match func {
                    Function::Exp => x.exp(),
                    Function::Sin => x.sin(),
                    Function::Cos => x.cos(),
                    Function::Abs => x.abs(),
                    Function::Log => {
                        if x <= 0.0 {
                            return Err(fault(FaultKind::LogOfNonPositive));
                        }
                        x.ln()
                    }
                    Function::Sqrt => {
                        if x < 0.0 {
                            return Err(fault(FaultKind::SqrtOfNegative));
                        }
                        x.sqrt()
                    }
                }
            }
        };
        if !value.is_finite() {
            return Err(fault(FaultKind::NonFinite));
        }
        Ok(value)
    }

    /// Evaluates at `(t, y, T)`, mapping faults to [`Error::Evaluation`].
    pub fn eval_at(&self, t: f64, y: f64, grid_size: f64) -> Result<f64> {
        self.evaluate(&Bindings::new(t, y, grid_size))
            .map_err(|fault| Error::Evaluation { t, y, fault })
    }

    pub fn references(&self, var: Variable) -> bool {
        match self {
            Expr::Number(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(e) | Expr::Call(_, e) => e.references(var),
            Expr::Binary(_, a, b) => a.references(var) || b.references(var),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 1,
            Expr::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Binary(BinaryOp::Pow, ..) => 4,
            Expr::Number(_) | Expr::Var(_) | Expr::Call(..) => 5,
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, parenthesize: bool) -> fmt::Result {
    if parenthesize {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Prints with the minimum parentheses needed to reparse to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(v) => write!(f, "{v}"),
            Expr::Var(Variable::Time) => f.write_str("t"),
            Expr::Var(Variable::State) => f.write_str("y"),
            Expr::Var(Variable::GridSize) => f.write_str("T"),
            Expr::Neg(inner) => {
                f.write_str("-")?;
                write_operand(f, inner, inner.precedence() < 3)
            }
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
            Expr::Binary(op, lhs, rhs) => {
                let prec = self.precedence();
                let symbol = match op {
                    BinaryOp::Add => " + ",
                    BinaryOp::Sub => " - ",
                    BinaryOp::Mul => " * ",
                    BinaryOp::Div => " / ",
                    BinaryOp::Pow => "^",
                };
                if *op == BinaryOp::Pow {
                    write_operand(f, lhs, lhs.precedence() <= prec)?;
                    f.write_str(symbol)?;
                    write_operand(f, rhs, rhs.precedence() < 3)
                } else {
                    write_operand(f, lhs, lhs.precedence() < prec)?;
                    f.write_str(symbol)?;
                    write_operand(f, rhs, rhs.precedence() <= prec)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(source: &str) -> Result<Vec<(usize, Token)>> {
    let bytes = source.as_bytes();
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
            tokens.push((start, tok));
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
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
                } else {
                    return Err(Error::Syntax {
                        position: j,
                        message: "malformed exponent in numeric literal".into(),
                    });
                }
            }
            let text = &source[start..i];
            let value: f64 = text.parse().map_err(|_| Error::Syntax {
                position: start,
                message: format!("malformed numeric literal `{text}`"),
            })?;
            tokens.push((start, Token::Number(value)));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            tokens.push((start, Token::Ident(source[start..i].to_string())));
            continue;
        }
        let ch = source[start..].chars().next().unwrap_or('?');
        return Err(Error::Syntax {
            position: start,
            message: format!("unexpected character `{ch}`"),
        });
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    source: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|(p, _)| *p)
            .unwrap_or(self.source.len())
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            position: self.offset(),
            message: message.into(),
        })
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Some(Token::Plus) => BinaryOp::Add,
                Some(Token::Minus) => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.product()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Token::Star) => BinaryOp::Mul,
                Some(Token::Slash) => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some(&Token::Minus) {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.peek() == Some(&Token::Caret) {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::Binary(BinaryOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        let Some(token) = self.peek().cloned() else {
            return self.error("unexpected end of input");
        };
        match token {
            Token::Number(v) => {
                self.pos += 1;
                Ok(Expr::Number(v))
            }
            Token::LParen => {
                self.pos += 1;
                let inner = self.sum()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Token::Ident(name) => {
                self.pos += 1;
                match name.as_str() {
                    "t" => return Ok(Expr::Var(Variable::Time)),
                    "y" => return Ok(Expr::Var(Variable::State)),
                    "T" => return Ok(Expr::Var(Variable::GridSize)),
                    _ => {}
                }
                let Some(func) = Function::from_name(&name) else {
                    return Err(Error::UnknownIdentifier(name));
                };
                if self.peek() != Some(&Token::LParen) {
                    return self.error(format!("expected `(` after function `{name}`"));
                }
                self.pos += 1;
                let arg = self.sum()?;
                self.expect_rparen()?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            other => self.error(format!("unexpected token {other:?}")),
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        if self.peek() == Some(&Token::RParen) {
            self.pos += 1;
            Ok(())
        } else {
            self.error("expected `)`")
        }
    }
}

/// Parses `source` into an expression tree.
pub fn parse(source: &str) -> Result<Expr> {
    let tokens = tokenize(source)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        source,
    };
    let expr = parser.sum()?;
    if parser.pos != parser.tokens.len() {
        return parser.error("unexpected trailing input");
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn eval(src: &str, t: f64, y: f64, n: f64) -> f64 {
        parse(src).unwrap().evaluate(&Bindings::new(t, y, n)).unwrap()
    }

    #[test]
    fn builtin_forms() {
        assert_relative_eq!(eval("exp(y)/exp((T+1)^2)", 1.0, 0.0, 3.0), (-16f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(eval("exp(t) - exp(y)", 1.0, 0.0, 3.0), 1f64.exp() - 1.0, max_relative = 1e-15);
        assert_eq!(eval("(T+1)*t - t^2/2", 2.0, 0.0, 3.0), 6.0);
    }

    #[test]
    fn literals_and_variables() {
        assert_eq!(eval("3.5", 9.0, 9.0, 9.0), 3.5);
        assert_eq!(eval("y", 0.0, -2.0, 3.0), -2.0);
        assert_eq!(eval("1.5e2 + .5 + 2E-1", 0.0, 0.0, 1.0), 150.7);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("-2^2", 0.0, 0.0, 1.0), -4.0);
        assert_eq!(eval("2^3^2", 0.0, 0.0, 1.0), 512.0);
        assert_eq!(eval("2^-1", 0.0, 0.0, 1.0), 0.5);
        assert_eq!(eval("8 - 3 - 2", 0.0, 0.0, 1.0), 3.0);
        assert_eq!(eval("8 / 4 / 2", 0.0, 0.0, 1.0), 1.0);
        assert_eq!(eval("1 + 2 * 3", 0.0, 0.0, 1.0), 7.0);
        assert_eq!(eval("--3", 0.0, 0.0, 1.0), 3.0);
        assert_eq!(eval(" ( 1+2 ) *3 ", 0.0, 0.0, 1.0), 9.0);
    }

    #[test]
    fn faults() {
        let fault = parse("1/(t-1)").unwrap().evaluate(&Bindings::new(1.0, 0.0, 3.0)).unwrap_err();
        assert_eq!(fault.kind, FaultKind::DivisionByZero);
        assert_eq!(fault.subexpression, "1 / (t - 1)");
        let fault = parse("2 + log(y)").unwrap().evaluate(&Bindings::new(0.0, -1.0, 3.0)).unwrap_err();
        assert_eq!(fault.kind, FaultKind::LogOfNonPositive);
        assert_eq!(fault.subexpression, "log(y)");
        let fault = parse("sqrt(y)").unwrap().evaluate(&Bindings::new(0.0, -1.0, 3.0)).unwrap_err();
        assert_eq!(fault.kind, FaultKind::SqrtOfNegative);
        let fault = parse("exp(y)").unwrap().evaluate(&Bindings::new(0.0, 1000.0, 3.0)).unwrap_err();
        assert_eq!(fault.kind, FaultKind::NonFinite);
        let fault = parse("y^0.5").unwrap().evaluate(&Bindings::new(0.0, -1.0, 3.0)).unwrap_err();
        assert_eq!(fault.kind, FaultKind::NonFinite);
        let err = parse("1/t").unwrap().eval_at(0.0, 2.0, 3.0).unwrap_err();
        assert!(matches!(err, Error::Evaluation { t, .. } if t == 0.0));
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(parse("1 +"), Err(Error::Syntax { position: 3, .. })));
        assert!(matches!(parse("(1 + 2"), Err(Error::Syntax { position: 6, .. })));
        assert!(matches!(parse("2 3"), Err(Error::Syntax { position: 2, .. })));
        assert!(matches!(parse("1 # 2"), Err(Error::Syntax { position: 2, .. })));
        assert!(matches!(parse("exp y"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("1e+"), Err(Error::Syntax { .. })));
        assert!(matches!(parse(""), Err(Error::Syntax { position: 0, .. })));
        assert_eq!(parse("x + 1"), Err(Error::UnknownIdentifier("x".into())));
        assert_eq!(parse("tan(t)"), Err(Error::UnknownIdentifier("tan".into())));
    }

    #[test]
    fn references() {
        let e = parse("exp(t) - exp(y)").unwrap();
        assert!(e.references(Variable::State));
        assert!(!parse("(T+1)*t").unwrap().references(Variable::State));
    }
}
