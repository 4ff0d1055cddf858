//! Compiled expression trees, evaluated per ε in any [`Value`] algebra.

use super::ast::{Ast, AstKind, BinOp, Func};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// An evaluation fault: the per-ε value is undefined (log of a
/// nonpositive number, division by zero, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fault(pub &'static str);

/// The algebra a compiled tree is evaluated in: plain scalars, or jets
/// carrying first and second derivatives.
pub trait Value<S: Scalar>: Clone + Send + Sync {
    type Shape: Clone + Send + Sync;

    fn constant(shape: &Self::Shape, c: S) -> Self;
    fn value(&self) -> &S;
    fn tracks_derivatives(&self) -> bool;

    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn times(&self, o: &Self) -> Self;
    fn negate(&self) -> Self;

    /// `g(self)` where `g(v) = f0` and `derivs()` yields `(g'(v), g''(v))`.
    /// Scalars never call `derivs`.
    fn chain(&self, f0: S, derivs: impl FnOnce() -> (S, S)) -> Self;

    /// Quotient; the caller has already rejected a zero divisor.
    fn over(&self, o: &Self) -> Self {
        let b = o.value().clone();
        let inv = o.chain(S::one() / b.clone(), || {
            let b2 = b.clone() * b.clone();
            let two = S::one() + S::one();
            (-(S::one() / b2.clone()), two / (b2 * b))
        });
        self.times(&inv)
    }
}

impl<S: Scalar> Value<S> for S {
    type Shape = ();

    fn constant(_: &(), c: S) -> Self {
        c
    }
    fn value(&self) -> &S {
        self
    }
    fn tracks_derivatives(&self) -> bool {
        false
    }
    fn plus(&self, o: &Self) -> Self {
        self.clone() + o.clone()
    }
    fn minus(&self, o: &Self) -> Self {
        self.clone() - o.clone()
    }
    fn times(&self, o: &Self) -> Self {
        self.clone() * o.clone()
    }
    fn negate(&self) -> Self {
        -self.clone()
    }
    fn chain(&self, f0: S, _: impl FnOnce() -> (S, S)) -> Self {
        f0
    }
    fn over(&self, o: &Self) -> Self {
        self.clone() / o.clone()
    }
}

#[derive(Debug, Clone)]
enum Node {
    Const(usize),
    Var(usize),
    Param(usize),
    Drho,
    Eps,
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    /// Power whose exponent does not depend on the variables.
    PowFixed(Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

/// Per-ε inputs other than the variables.
#[derive(Debug, Clone, Copy)]
pub struct EvalEnv<'a, S> {
    pub eps: f64,
    pub rho: &'a S,
    /// Values of the parameters, in [`Compiled::params`] order.
    pub params: &'a [S],
}

/// An [`Ast`] with names resolved and literals parsed at the working
/// precision of `S`.
#[derive(Debug, Clone)]
pub struct Compiled<S> {
    root: Node,
    consts: Vec<S>,
    params: Vec<String>,
    dim: usize,
    uses_drho: bool,
    source: String,
}

impl<S: Scalar> Compiled<S> {
    /// Compiles `ast` for a function of `dim` variables whose parameters
    /// may be any of `known_params`.
    pub fn new(ast: &Ast, dim: usize, known_params: &[String]) -> Result<Self> {
        let mut c = Self {
            root: Node::Eps,
            consts: Vec::new(),
            params: Vec::new(),
            dim,
            uses_drho: ast.uses_drho(),
            source: ast.to_string(),
        };
        c.root = c.lower(ast, known_params)?;
        Ok(c)
    }

    fn lower(&mut self, ast: &Ast, known: &[String]) -> Result<Node> {
        Ok(match &ast.kind {
            AstKind::Const(text) => {
                let v = S::parse_decimal(text).ok_or_else(|| Error::Parse {
                    position: ast.span.start,
                    expected: vec!["number".into()],
                })?;
                self.consts.push(v);
                Node::Const(self.consts.len() - 1)
            }
            AstKind::Var(i) => {
                if *i > self.dim {
                    return Err(Error::VariableOutOfRange {
                        index: *i,
                        dim: self.dim,
                    });
                }
                Node::Var(i - 1)
            }
            AstKind::Param(name) => {
                if !known.contains(name) {
                    return Err(Error::UnboundName(name.clone()));
                }
                let idx = match self.params.iter().position(|p| p == name) {
                    Some(i) => i,
                    None => {
                        self.params.push(name.clone());
                        self.params.len() - 1
                    }
                };
                Node::Param(idx)
            }
            AstKind::Drho => Node::Drho,
            AstKind::Eps => Node::Eps,
            AstKind::Neg(a) => Node::Neg(Box::new(self.lower(a, known)?)),
            AstKind::Binary(BinOp::Pow, base, exp) if exp.max_var() == 0 => Node::PowFixed(
                Box::new(self.lower(base, known)?),
                Box::new(self.lower(exp, known)?),
            ),
            AstKind::Binary(op, l, r) => Node::Bin(
                *op,
                Box::new(self.lower(l, known)?),
                Box::new(self.lower(r, known)?),
            ),
            AstKind::Call(f, args) => Node::Call(
                *f,
                args.iter()
                    .map(|a| self.lower(a, known))
                    .collect::<Result<_>>()?,
            ),
        })
    }

    /// Parameters actually referenced, in the order [`EvalEnv::params`]
    /// must supply them.
    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn uses_drho(&self) -> bool {
        self.uses_drho
    }

    /// Canonical text of the compiled expression.
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval<T: Value<S>>(
        &self,
        shape: &T::Shape,
        env: &EvalEnv<'_, S>,
        vars: &[T],
    ) -> std::result::Result<T, Fault> {
        debug_assert!(vars.len() >= self.dim);
        self.node(&self.root, shape, env, vars)
    }

    fn node<T: Value<S>>(
        &self,
        n: &Node,
        shape: &T::Shape,
        env: &EvalEnv<'_, S>,
        vars: &[T],
    ) -> std::result::Result<T, Fault> {
        Ok(match n {
            Node::Const(i) => T::constant(shape, self.consts[*i].clone()),
            Node::Var(i) => vars[*i].clone(),
            Node::Param(i) => T::constant(shape, env.params[*i].clone()),
            Node::Drho => T::constant(shape, env.rho.clone()),
            Node::Eps => T::constant(shape, S::from_f64(env.eps)),
            Node::Neg(a) => self.node(a, shape, env, vars)?.negate(),
            Node::Bin(op, l, r) => {
                let a = self.node(l, shape, env, vars)?;
                let b = self.node(r, shape, env, vars)?;
                match op {
                    BinOp::Add => a.plus(&b),
                    BinOp::Sub => a.minus(&b),
                    BinOp::Mul => a.times(&b),
                    BinOp::Div => divide(&a, &b)?,
                    BinOp::Pow => pow_general(&a, &b)?,
                }
            }
            Node::PowFixed(base, exp) => {
                let a = self.node(base, shape, env, vars)?;
                let q: S = self.node(exp, &(), env, &[])?;
                pow_fixed(&a, &q)?
            }
            Node::Call(f, args) => {
                let a = self.node(&args[0], shape, env, vars)?;
                match f {
                    Func::Min | Func::Max => {
                        let b = self.node(&args[1], shape, env, vars)?;
                        let take_b = match f {
                            Func::Min => b.value() < a.value(),
                            _ => b.value() > a.value(),
                        };
                        if take_b {
                            b
                        } else {
                            a
                        }
                    }
                    _ => unary(*f, &a)?,
                }
            }
        })
    }
}

pub(crate) fn divide<S: Scalar, T: Value<S>>(a: &T, b: &T) -> std::result::Result<T, Fault> {
    if b.value().is_zero() {
        return Err(Fault("division by zero"));
    }
    Ok(a.over(b))
}

/// Builtin one-argument functions.
pub(crate) fn unary<S: Scalar, T: Value<S>>(f: Func, a: &T) -> std::result::Result<T, Fault> {
    let v = a.value().clone();
    Ok(match f {
        Func::Sin => a.chain(v.sin(), || (v.cos(), -v.sin())),
        Func::Cos => a.chain(v.cos(), || (-v.sin(), -v.cos())),
        Func::Exp => {
            let e = v.exp();
            a.chain(e.clone(), || (e.clone(), e.clone()))
        }
        Func::Log => {
            if v <= S::zero() {
                return Err(Fault("log"));
            }
            a.chain(v.ln(), || {
                let inv = S::one() / v.clone();
                (inv.clone(), -(inv.clone() * inv))
            })
        }
        Func::Sqrt => {
            if v < S::zero() || (v.is_zero() && a.tracks_derivatives()) {
                return Err(Fault("sqrt"));
            }
            let s = v.sqrt();
            a.chain(s.clone(), || {
                let two = S::one() + S::one();
                let d1 = S::one() / (two.clone() * s.clone());
                let d2 = -(S::one() / (two.clone() * two * s * v.clone()));
                (d1, d2)
            })
        }
        Func::Abs => {
            let neg = v.is_sign_negative();
            a.chain(v.abs(), || {
                let sign = if neg { -S::one() } else { S::one() };
                (sign, S::zero())
            })
        }
        Func::Ramp => {
            if v > S::zero() {
                a.clone()
            } else {
                a.chain(S::zero(), || (S::zero(), S::zero()))
            }
        }
        Func::Min | Func::Max => unreachable!("binary builtins are handled by the caller"),
    })
}

/// `a^q` for an exponent that does not depend on the variables.
pub(crate) fn pow_fixed<S: Scalar, T: Value<S>>(a: &T, q: &S) -> std::result::Result<T, Fault> {
    let v = a.value().clone();
    if !q.is_finite() {
        return Err(Fault("pow"));
    }
    if q.is_integer() && q.abs() < S::from_f64(2_147_483_647.0) {
        let n = q.to_f64() as i32;
        if v.is_zero() && n < 0 {
            return Err(Fault("division by zero"));
        }
        let f0 = v.powi(n);
        return Ok(a.chain(f0, || {
            let nn = S::from_i64(n as i64);
            let d1 = if n == 0 {
                S::zero()
            } else {
                nn.clone() * v.powi(n - 1)
            };
            let d2 = if n == 0 || n == 1 {
                S::zero()
            } else {
                nn.clone() * S::from_i64(n as i64 - 1) * v.powi(n - 2)
            };
            (d1, d2)
        }));
    }
    if v.is_sign_negative() {
        return Err(Fault("pow of negative base"));
    }
    if v.is_zero() {
        if *q > S::zero() && !a.tracks_derivatives() {
            return Ok(a.chain(S::zero(), || (S::zero(), S::zero())));
        }
        return Err(Fault("pow at zero"));
    }
    let f0 = v.powf(q);
    Ok(a.chain(f0.clone(), || {
        let d1 = q.clone() * f0.clone() / v.clone();
        let d2 = d1.clone() * (q.clone() - S::one()) / v.clone();
        (d1, d2)
    }))
}

/// `a^b = exp(b·log a)` for a variable exponent.
fn pow_general<S: Scalar, T: Value<S>>(a: &T, b: &T) -> std::result::Result<T, Fault> {
    if *a.value() <= S::zero() {
        return Err(Fault("pow of nonpositive base with variable exponent"));
    }
    let l = unary(Func::Log, a)?;
    unary(Func::Exp, &b.times(&l))
}
