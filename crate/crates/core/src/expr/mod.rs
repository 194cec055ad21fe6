//! Model functions as data: a small arithmetic expression language over
//! features `x1..xn`.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' atom)*
//! atom  := number | 'x'<k> | 'pi' | func '(' expr ')' | '(' expr ')'
//! func  := sin | cos | exp | log | sqrt | abs
//! ```
//!
//! All binary operators are left-associative, so `2^3^2` is `(2^3)^2`.

mod parser;

use std::fmt;

use thiserror::Error;

pub use parser::parse_model;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => " + ",
            BinOp::Sub => " - ",
            BinOp::Mul => " * ",
            BinOp::Div => " / ",
            BinOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

/// Expression node. Feature indices are stored zero-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Pi,
    Feature(usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

const PREC_UNARY: u8 = 3;
const PREC_ATOM: u8 = 5;

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, _, _) => op.precedence(),
            Expr::Neg(_) => PREC_UNARY,
            _ => PREC_ATOM,
        }
    }

    /// Largest zero-based feature index referenced, if any.
    pub fn max_feature(&self) -> Option<usize> {
        match self {
            Expr::Const(_) | Expr::Pi => None,
            Expr::Feature(k) => Some(*k),
            Expr::Neg(e) | Expr::Call(_, e) => e.max_feature(),
            Expr::Binary(_, l, r) => match (l.max_feature(), r.max_feature()) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            },
        }
    }

    /// Whether feature `k` (zero-based) appears anywhere in the tree.
    pub fn references(&self, k: usize) -> bool {
        match self {
            Expr::Const(_) | Expr::Pi => false,
            Expr::Feature(i) => *i == k,
            Expr::Neg(e) | Expr::Call(_, e) => e.references(k),
            Expr::Binary(_, l, r) => l.references(k) || r.references(k),
        }
    }

    fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        let value = match self {
            Expr::Const(c) => *c,
            Expr::Pi => std::f64::consts::PI,
            Expr::Feature(k) => point[*k],
            Expr::Neg(e) => -e.eval(point)?,
            Expr::Binary(op, l, r) => {
                let a = l.eval(point)?;
                let b = r.eval(point)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(self.domain_error("division by zero"));
                        }
                        a / b
                    }
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(f, arg) => {
                let v = arg.eval(point)?;
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Abs => v.abs(),
                    Func::Log => {
                        if v <= 0.0 {
                            return Err(self.domain_error("logarithm of a non-positive value"));
                        }
                        v.ln()
                    }
                    Func::Sqrt => {
                        if v < 0.0 {
                            return Err(self.domain_error("square root of a negative value"));
                        }
                        v.sqrt()
                    }
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(self.domain_error("non-finite result"))
        }
    }

    fn domain_error(&self, reason: &'static str) -> EvalError {
        EvalError::Domain {
            node: self.to_string(),
            reason,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, parenthesize: bool) -> fmt::Result {
        if parenthesize {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Pi => f.write_str("pi"),
            Expr::Feature(k) => write!(f, "x{}", k + 1),
            Expr::Neg(e) => {
                f.write_str("-")?;
                e.fmt_child(f, e.precedence() < PREC_UNARY)
            }
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                l.fmt_child(f, l.precedence() < p)?;
                f.write_str(op.symbol())?;
                r.fmt_child(f, r.precedence() <= p)
            }
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("feature x{index} at byte {offset} is out of range (model has {n_features} features)")]
    FeatureOutOfRange {
        index: usize,
        n_features: usize,
        offset: usize,
    },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("feature count must be at least 1")]
    NoFeatures,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error in `{node}`: {reason}")]
    Domain { node: String, reason: &'static str },
    #[error("point has {got} coordinates, model expects {expected}")]
    Dimension { expected: usize, got: usize },
}

/// A parsed model function `f: R^n -> R`. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelExpr {
    root: Expr,
    n_features: usize,
}

impl ModelExpr {
    pub fn root(&self) -> &Expr {
        &self.root
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Evaluates the model at `point`. Any operation that would leave the
    /// real line (log or sqrt out of domain, division by zero, NaN or
    /// infinite intermediates) is reported instead of propagated.
    pub fn evaluate(&self, point: &[f64]) -> Result<f64, EvalError> {
        if point.len() != self.n_features {
            return Err(EvalError::Dimension {
                expected: self.n_features,
                got: point.len(),
            });
        }
        self.root.eval(point)
    }
}

impl fmt::Display for ModelExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

/// Text of the synthetic benchmark model with duplicated features 2 and 3.
pub const BENCHMARK_MODEL: &str = "sin(2*pi*x1) * sin(2*pi*(x2+x3)/2) + x4 + x5";
