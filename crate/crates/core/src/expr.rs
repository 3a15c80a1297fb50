//! Potential expressions.
//!
//! A small recursive-descent grammar over one variable `x`:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?          (right-associative)
//! atom    := number | 'x' | 'pi' | func '(' sum ')' | '(' sum ')'
//! func    := sin | cos | exp | abs
//! ```
//!
//! `^` binds tighter than unary minus, so `-x^2` is `-(x^2)`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: expected {expected}")]
    Syntax { offset: usize, expected: &'static str },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("numeric literal `{text}` at byte {offset} is not finite")]
    BadNumber { text: String, offset: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero at x = {x}")]
    DivisionByZero { x: f64 },
    #[error("non-finite value at x = {x}")]
    NonFinite { x: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "abs" => Some(Func::Abs),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Abs => "abs",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Abs => v.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

/// Parsed expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Pi,
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    /// Evaluates at `x`. Division by an exact zero and any non-finite
    /// intermediate are reported as errors.
    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Var => x,
            Expr::Pi => std::f64::consts::PI,
            Expr::Neg(e) => -e.eval(x)?,
            Expr::Call(f, e) => f.apply(e.eval(x)?),
            Expr::Binary(op, a, b) => {
                let a = a.eval(x)?;
                let b = b.eval(x)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero { x });
                        }
                        a / b
                    }
                    BinOp::Pow => a.powf(b),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite { x })
        }
    }

    /// True when the tree is the literal zero.
    pub fn is_zero_literal(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }
}

/// Fully parenthesized output; parses back to an identical tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // `{:?}` prints the shortest representation that round-trips.
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var => f.write_str("x"),
            Expr::Pi => f.write_str("pi"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

pub fn parse_expression(source: &str) -> Result<Expr, ExprError> {
    let mut p = Parser { src: source.as_bytes(), pos: 0 };
    p.skip_ws();
    if p.at_end() {
        return Err(ExprError::Syntax { offset: 0, expected: "an expression" });
    }
    let e = p.sum()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(ExprError::Syntax { offset: p.pos, expected: "an operator or end of input" });
    }
    Ok(e)
}

impl std::str::FromStr for Expr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expression(s)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        loop {
            let op = if self.eat(b'+') {
                BinOp::Add
            } else if self.eat(b'-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.product()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat(b'*') {
                BinOp::Mul
            } else if self.eat(b'/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
                match name {
                    "x" => Ok(Expr::Var),
                    "pi" => Ok(Expr::Pi),
                    _ => match Func::from_name(name) {
                        Some(func) => {
                            if !self.eat(b'(') {
                                return Err(ExprError::Syntax { offset: self.pos, expected: "`(`" });
                            }
                            let arg = self.sum()?;
                            self.expect_close()?;
                            Ok(Expr::Call(func, Box::new(arg)))
                        }
                        None => Err(ExprError::UnknownIdentifier { name: name.to_string(), offset: start }),
                    },
                }
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect_close()?;
                Ok(e)
            }
            _ => Err(ExprError::Syntax { offset: self.pos, expected: "a number, `x`, `pi`, a function or `(`" }),
        }
    }

    fn expect_close(&mut self) -> Result<(), ExprError> {
        if self.eat(b')') {
            Ok(())
        } else {
            self.skip_ws();
            Err(ExprError::Syntax { offset: self.pos, expected: "`)`" })
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while matches!(p.peek(), Some(c) if c.is_ascii_digit()) {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.peek() == Some(b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            return Err(ExprError::Syntax { offset: start, expected: "a digit" });
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                return Err(ExprError::Syntax { offset: self.pos, expected: "exponent digits" });
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Expr::Num(v)),
            _ => Err(ExprError::BadNumber { text: text.to_string(), offset: start }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ev(s: &str, x: f64) -> f64 {
        parse_expression(s).unwrap().eval(x).unwrap()
    }

    #[test]
    fn sample_potentials() {
        assert_eq!(ev("cos(pi*x)", 0.0), 1.0);
        assert_eq!(ev("cos(pi*x)", 1.0), -1.0);
        assert!((ev("sin(pi*x) - 2/pi", 0.5) - (1.0 - 2.0 / PI)).abs() < 1e-15);
        assert!((ev("cos(pi*x)+x-0.5", 0.0) - 0.5).abs() < 1e-15);
        assert_eq!(ev("x^2", 0.5), 0.25);
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("-x^2", 3.0), -9.0);
        assert_eq!(ev("2^3^2", 0.0), 512.0);
        assert_eq!(ev("2^-1", 0.0), 0.5);
        assert_eq!(ev("1-2-3", 0.0), -4.0);
        assert_eq!(ev("8/4/2", 0.0), 1.0);
        assert_eq!(ev("1+2*3", 0.0), 7.0);
        assert_eq!(ev("-2*3", 0.0), -6.0);
        assert_eq!(ev("1.5e1 + .5", 0.0), 15.5);
        assert_eq!(ev("abs(-x) + exp(0)", 2.0), 3.0);
    }

    #[test]
    fn syntax_errors() {
        assert_eq!(
            parse_expression("cos("),
            Err(ExprError::Syntax { offset: 4, expected: "a number, `x`, `pi`, a function or `(`" })
        );
        assert!(matches!(parse_expression("(x"), Err(ExprError::Syntax { offset: 2, .. })));
        assert!(matches!(parse_expression("x x"), Err(ExprError::Syntax { offset: 2, .. })));
        assert!(matches!(parse_expression("cos x"), Err(ExprError::Syntax { offset: 4, .. })));
        assert!(matches!(parse_expression(""), Err(ExprError::Syntax { offset: 0, .. })));
        assert!(matches!(parse_expression("1e"), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse_expression("1e999"), Err(ExprError::BadNumber { .. })));
        assert_eq!(parse_expression("tan(x)"), Err(ExprError::UnknownIdentifier { name: "tan".into(), offset: 0 }));
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let e = parse_expression("1/(x-0.5)").unwrap();
        assert_eq!(e.eval(0.5), Err(EvalError::DivisionByZero { x: 0.5 }));
        assert!(e.eval(0.25).is_ok());
        let e = parse_expression("exp(1000*x)").unwrap();
        assert!(matches!(e.eval(1.0), Err(EvalError::NonFinite { .. })));
    }

    #[test]
    fn print_reparses_to_same_tree() {
        for s in ["cos(pi*x)", "-x^2+3.25e-3", "sin(pi*x) - 2/pi", "2^-x^2", "abs(x-0.1)/(1+x)"] {
            let a = parse_expression(s).unwrap();
            let b = parse_expression(&a.to_string()).unwrap();
            assert_eq!(a, b, "{s}");
        }
    }
}
