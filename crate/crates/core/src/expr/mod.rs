//! The problem-definition language: expressions in `u1..un`, named
//! parameters, `drho` (the gauge) and `eps`.

mod ast;
mod compile;
mod lexer;

use std::sync::Arc;

pub use ast::{parse, parse_tokens, print_ast, Ast, AstKind, BinOp, Func, Span};
pub use compile::{Compiled, EvalEnv, Fault, Value};
pub use lexer::{tokenize, Token, TokenKind};

use crate::error::{Error, Result};
use crate::linalg::GenVec;
use crate::net::GenNum;
use crate::ring::Ring;
use crate::scalar::Scalar;

/// Named parameter bindings for a function of `dim` variables.
#[derive(Debug, Clone)]
pub struct ParamEnv<S> {
    dim: usize,
    bindings: Vec<(String, GenNum<S>)>,
}

impl<S: Scalar> ParamEnv<S> {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            bindings: Vec::new(),
        }
    }

    /// Adds a binding. Names must be identifiers that the parser reads as
    /// parameters and may be bound only once.
    pub fn bind(&mut self, name: &str, value: GenNum<S>) -> Result<()> {
        let as_param =
            matches!(parse(name), Ok(Ast { kind: AstKind::Param(ref p), .. }) if p == name);
        if !as_param {
            return Err(Error::InvalidArgument(format!(
                "{name:?} cannot name a parameter"
            )));
        }
        if self.get(name).is_some() {
            return Err(Error::InvalidArgument(format!(
                "parameter {name:?} bound twice"
            )));
        }
        self.bindings.push((name.to_string(), value));
        Ok(())
    }

    pub fn with(mut self, name: &str, value: GenNum<S>) -> Result<Self> {
        self.bind(name, value)?;
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Option<&GenNum<S>> {
        self.bindings
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v)
    }

    pub fn names(&self) -> Vec<String> {
        self.bindings.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The nets of `names`, in order.
    pub fn resolve(&self, names: &[String]) -> Result<Vec<GenNum<S>>> {
        names
            .iter()
            .map(|n| {
                self.get(n)
                    .cloned()
                    .ok_or_else(|| Error::UnboundName(n.clone()))
            })
            .collect()
    }
}

/// Turns an expression into a generalized number: per ε, substitutes ε,
/// ρ_ε, the parameter nets and the point's component nets.
///
/// Undefined operations at tail samples are reported as
/// [`Error::DomainViolation`]; elsewhere they evaluate to NaN.
pub fn eval_ast<S: Scalar>(
    ring: &Ring<S>,
    ast: &Ast,
    env: &ParamEnv<S>,
    point: Option<&GenVec<S>>,
) -> Result<GenNum<S>> {
    let dim = point.map(|p| p.dim()).unwrap_or(0);
    let vars_needed = ast.max_var();
    if vars_needed > 0 && point.is_none() {
        return Err(Error::UnboundName(format!("u{vars_needed}")));
    }
    let compiled = Arc::new(Compiled::<S>::new(ast, dim, &env.names())?);
    let params = env.resolve(compiled.params())?;
    let point = point.cloned();
    let gauge = ring.gauge().clone();
    let try_eval = move |eps: f64| -> std::result::Result<S, Fault> {
        let rho = gauge.eval(eps);
        let pv: Vec<S> = params.iter().map(|p| p.eval(eps)).collect();
        let xv = point.as_ref().map(|p| p.eval(eps)).unwrap_or_default();
        compiled.eval::<S>(
            &(),
            &EvalEnv {
                eps,
                rho: &rho,
                params: &pv,
            },
            &xv,
        )
    };
    for &eps in ring.grid().tail() {
        if let Err(Fault(op)) = try_eval(eps) {
            return Err(Error::DomainViolation {
                op: op.to_string(),
                eps,
            });
        }
    }
    Ok(
        GenNum::from_fn(move |eps| try_eval(eps).unwrap_or_else(|_| S::from_f64(f64::NAN)))
            .with_label(ast.to_string()),
    )
}

/// Parses and evaluates `src` with no variables.
pub fn eval_str<S: Scalar>(ring: &Ring<S>, src: &str, env: &ParamEnv<S>) -> Result<GenNum<S>> {
    eval_ast(ring, &parse(src)?, env, None)
}
