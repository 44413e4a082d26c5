//! Second-order forward-mode differentiation.
//!
//! A [`Jet2`] carries a scalar value together with its gradient and Hessian
//! with respect to a fixed set of chart coordinates. Every metric entry,
//! connection coefficient and immersion component in the crate is evaluated
//! through this type, which is where all first and second partials come from.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("seed index {index} out of range for chart dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("{func} domain violation at value {value}")]
    Domain { func: &'static str, value: f64 },
    #[error("non-integer power of non-positive base {base}")]
    NonIntegerPower { base: f64 },
    #[error("jet dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryFn {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Tanh,
    Neg,
}

impl UnaryFn {
    pub fn name(self) -> &'static str {
        match self {
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Exp => "exp",
            UnaryFn::Log => "log",
            UnaryFn::Sqrt => "sqrt",
            UnaryFn::Tanh => "tanh",
            UnaryFn::Neg => "neg",
        }
    }

    pub fn from_name(name: &str) -> Option<UnaryFn> {
        Some(match name {
            "sin" => UnaryFn::Sin,
            "cos" => UnaryFn::Cos,
            "exp" => UnaryFn::Exp,
            "log" => UnaryFn::Log,
            "sqrt" => UnaryFn::Sqrt,
            "tanh" => UnaryFn::Tanh,
            _ => return None,
        })
    }

    /// Plain scalar evaluation with the same domain rules as the jet version.
    pub fn apply(self, x: f64) -> Result<f64, JetError> {
        Ok(self.derivatives(x)?.0)
    }

    /// `(f(x), f'(x), f''(x))`.
    fn derivatives(self, x: f64) -> Result<(f64, f64, f64), JetError> {
        Ok(match self {
            UnaryFn::Sin => (x.sin(), x.cos(), -x.sin()),
            UnaryFn::Cos => (x.cos(), -x.sin(), -x.cos()),
            UnaryFn::Exp => {
                let e = x.exp();
                (e, e, e)
            }
            UnaryFn::Log => {
                if x <= 0.0 {
                    return Err(JetError::Domain { func: "log", value: x });
                }
                (x.ln(), 1.0 / x, -1.0 / (x * x))
            }
            UnaryFn::Sqrt => {
                if x <= 0.0 {
                    return Err(JetError::Domain { func: "sqrt", value: x });
                }
                let s = x.sqrt();
                (s, 0.5 / s, -0.25 / (s * x))
            }
            UnaryFn::Tanh => {
                let t = x.tanh();
                let d = 1.0 - t * t;
                (t, d, -2.0 * t * d)
            }
            UnaryFn::Neg => (-x, -1.0, 0.0),
        })
    }
}

/// Value, gradient and Hessian of a scalar field at one chart point.
///
/// The Hessian is stored densely in row-major order and is kept exactly
/// symmetric: every operation writes `(i, j)` and `(j, i)` from the same
/// computed number.
#[derive(Clone, PartialEq)]
pub struct Jet2 {
    value: f64,
    grad: Vec<f64>,
    hess: Vec<f64>,
}

impl fmt::Debug for Jet2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet2")
            .field("value", &self.value)
            .field("grad", &self.grad)
            .field("hess", &self.hess)
            .finish()
    }
}

impl Jet2 {
    pub fn constant(value: f64, dim: usize) -> Jet2 {
        Jet2 { value, grad: vec![0.0; dim], hess: vec![0.0; dim * dim] }
    }

    /// Coordinate variable `x_index` at `point`.
    pub fn seed(point: &[f64], index: usize) -> Result<Jet2, JetError> {
        let dim = point.len();
        if index >= dim {
            return Err(JetError::IndexOutOfRange { index, dim });
        }
        let mut jet = Jet2::constant(point[index], dim);
        jet.grad[index] = 1.0;
        Ok(jet)
    }

    /// Seeds every coordinate of `point`.
    pub fn variables(point: &[f64]) -> Vec<Jet2> {
        (0..point.len()).map(|i| Jet2::seed(point, i).expect("index in range")).collect()
    }

    /// Builds a jet from raw parts, symmetrising the Hessian.
    pub fn from_parts(value: f64, grad: Vec<f64>, hess: Vec<f64>) -> Result<Jet2, JetError> {
        let dim = grad.len();
        if hess.len() != dim * dim {
            return Err(JetError::DimensionMismatch(dim * dim, hess.len()));
        }
        let mut jet = Jet2 { value, grad, hess };
        for i in 0..dim {
            for j in (i + 1)..dim {
                let s = 0.5 * (jet.hess[i * dim + j] + jet.hess[j * dim + i]);
                jet.hess[i * dim + j] = s;
                jet.hess[j * dim + i] = s;
            }
        }
        Ok(jet)
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    pub fn hess(&self) -> &[f64] {
        &self.hess
    }

    pub fn hess_at(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dim() + j]
    }

    pub fn is_constant(&self) -> bool {
        self.grad.iter().all(|&g| g == 0.0) && self.hess.iter().all(|&h| h == 0.0)
    }

    fn check_dim(&self, other: &Jet2) -> Result<(), JetError> {
        if self.dim() != other.dim() {
            return Err(JetError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(())
    }

    /// Chain rule through a scalar function with derivatives `d1`, `d2` at `self.value`.
    fn compose(&self, f: f64, d1: f64, d2: f64) -> Jet2 {
        let n = self.dim();
        let grad: Vec<f64> = self.grad.iter().map(|g| d1 * g).collect();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let h = d1 * self.hess[i * n + j] + d2 * self.grad[i] * self.grad[j];
                hess[i * n + j] = h;
                hess[j * n + i] = h;
            }
        }
        Jet2 { value: f, grad, hess }
    }

    pub fn unary(&self, func: UnaryFn) -> Result<Jet2, JetError> {
        let (f, d1, d2) = func.derivatives(self.value)?;
        Ok(self.compose(f, d1, d2))
    }

    pub fn scale(&self, k: f64) -> Jet2 {
        Jet2 {
            value: k * self.value,
            grad: self.grad.iter().map(|g| k * g).collect(),
            hess: self.hess.iter().map(|h| k * h).collect(),
        }
    }

    pub fn try_add(&self, other: &Jet2) -> Result<Jet2, JetError> {
        self.check_dim(other)?;
        Ok(Jet2 {
            value: self.value + other.value,
            grad: self.grad.iter().zip(&other.grad).map(|(a, b)| a + b).collect(),
            hess: self.hess.iter().zip(&other.hess).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn try_sub(&self, other: &Jet2) -> Result<Jet2, JetError> {
        self.check_dim(other)?;
        Ok(Jet2 {
            value: self.value - other.value,
            grad: self.grad.iter().zip(&other.grad).map(|(a, b)| a - b).collect(),
            hess: self.hess.iter().zip(&other.hess).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn try_mul(&self, other: &Jet2) -> Result<Jet2, JetError> {
        self.check_dim(other)?;
        let n = self.dim();
        let (a, b) = (self, other);
        let grad = (0..n).map(|i| a.grad[i] * b.value + a.value * b.grad[i]).collect();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let h = a.hess[i * n + j] * b.value
                    + a.value * b.hess[i * n + j]
                    + a.grad[i] * b.grad[j]
                    + a.grad[j] * b.grad[i];
                hess[i * n + j] = h;
                hess[j * n + i] = h;
            }
        }
        Ok(Jet2 { value: a.value * b.value, grad, hess })
    }

    pub fn recip(&self) -> Result<Jet2, JetError> {
        if self.value == 0.0 {
            return Err(JetError::DivisionByZero);
        }
        let v = self.value;
        Ok(self.compose(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v)))
    }

    pub fn try_div(&self, other: &Jet2) -> Result<Jet2, JetError> {
        self.check_dim(other)?;
        self.try_mul(&other.recip()?)
    }

    /// Integer power by repeated multiplication, so negative bases stay legal.
    pub fn powi(&self, exponent: i64) -> Result<Jet2, JetError> {
        let mut result = Jet2::constant(1.0, self.dim());
        let mut base = self.clone();
        let mut e = exponent.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                result = result.try_mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.try_mul(&base)?;
            }
        }
        if exponent < 0 {
            result.recip()
        } else {
            Ok(result)
        }
    }

    /// `self ^ exponent`. Constant integer exponents take the [`Jet2::powi`]
    /// route; anything else is `exp(exponent * log(self))` and needs a
    /// positive base.
    pub fn pow(&self, exponent: &Jet2) -> Result<Jet2, JetError> {
        self.check_dim(exponent)?;
        let e = exponent.value;
        if exponent.is_constant() && e.fract() == 0.0 && e.abs() <= i64::MAX as f64 {
            return self.powi(e as i64);
        }
        if self.value <= 0.0 {
            return Err(JetError::NonIntegerPower { base: self.value });
        }
        if exponent.is_constant() {
            let v = self.value;
            let f = v.powf(e);
            return Ok(self.compose(f, e * v.powf(e - 1.0), e * (e - 1.0) * v.powf(e - 2.0)));
        }
        exponent.try_mul(&self.unary(UnaryFn::Log)?)?.unary(UnaryFn::Exp)
    }

    pub fn arith(op: ArithOp, a: &Jet2, b: &Jet2) -> Result<Jet2, JetError> {
        match op {
            ArithOp::Add => a.try_add(b),
            ArithOp::Sub => a.try_sub(b),
            ArithOp::Mul => a.try_mul(b),
            ArithOp::Div => a.try_div(b),
            ArithOp::Pow => a.pow(b),
        }
    }
}

impl Add for &Jet2 {
    type Output = Jet2;
    fn add(self, rhs: &Jet2) -> Jet2 {
        self.try_add(rhs).expect("jet dimension mismatch")
    }
}

impl Sub for &Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: &Jet2) -> Jet2 {
        self.try_sub(rhs).expect("jet dimension mismatch")
    }
}

impl Mul for &Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: &Jet2) -> Jet2 {
        self.try_mul(rhs).expect("jet dimension mismatch")
    }
}

impl Neg for &Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}
