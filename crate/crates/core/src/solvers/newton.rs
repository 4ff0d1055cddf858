use crate::error::{Error, Result};
use crate::gsf::GenFunc;
use crate::linalg::{self, GenVec};
use crate::net::GenNum;
use crate::order::OrderFit;
use crate::ring::{rho_pow, Certificate, Ring, Verdict};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct NewtonOptions {
    pub max_steps: usize,
    /// Stop once `|f(x_n)| < dρ^stop_q` on every tail sample.
    pub stop_q: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_steps: 12,
            stop_q: 12.0,
        }
    }
}

/// Invertibility of `df(x_n)`, via strict positivity of `|det|`.
#[derive(Debug, Clone)]
pub struct InvertibilityRecord {
    pub iterate: usize,
    pub certificate: Certificate,
}

#[derive(Debug, Clone)]
pub struct NewtonResult<S> {
    pub root: GenVec<S>,
    pub iterates: Vec<GenVec<S>>,
    /// `|f(x_n)|` per iterate.
    pub residuals: Vec<GenNum<S>>,
    /// Leading order of each residual; `None` when it vanishes on the tail.
    pub residual_orders: Vec<Option<OrderFit>>,
    pub invertibility_log: Vec<InvertibilityRecord>,
    pub converged: bool,
}

/// One Newton step `x − df(x)⁻¹ f(x)`, per ε.
fn newton_step<S: Scalar>(f: &GenFunc<S>, x: &GenVec<S>) -> GenVec<S> {
    let (f, x) = (f.clone(), x.clone());
    let d = x.dim();
    GenVec::from_shared(d, move |e| {
        let xe = x.eval(e);
        let step = f
            .jacobian_at(e, &xe)
            .ok()
            .and_then(|(v, jac)| linalg::solve(&jac, d, &v));
        match step {
            Some(s) => xe.into_iter().zip(s).map(|(a, b)| a - b).collect(),
            None => vec![S::from_f64(f64::NAN); d],
        }
    })
}

/// Newton's method on `f : K̃^d → K̃^d` from `x0`.
///
/// Each iterate's differential must pass the ring invertibility test;
/// a failure aborts with [`Error::DifferentialNotInvertible`].
pub fn newton_solve<S: Scalar>(
    ring: &Ring<S>,
    f: &GenFunc<S>,
    x0: &GenVec<S>,
    opts: &NewtonOptions,
) -> Result<NewtonResult<S>> {
    if f.dom_dim() != f.cod_dim() || f.dom_dim() != x0.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dom_dim(),
            found: x0.dim(),
        });
    }
    let bounds: Vec<S> = ring
        .tail()
        .iter()
        .map(|(_, r)| rho_pow(r, opts.stop_q))
        .collect();
    let mut iterates = vec![x0.clone()];
    let mut residuals = Vec::new();
    let mut residual_orders = Vec::new();
    let mut invertibility_log = Vec::new();
    let mut converged = false;
    for n in 0.. {
        let x = iterates[n].clone();
        let fx = f.eval(ring, &x, false)?;
        let res = fx.norm();
        residual_orders.push(ring.leading_order(&res).ok());
        residuals.push(res.clone());
        let small = ring
            .tail()
            .iter()
            .zip(&bounds)
            .all(|((e, _), b)| res.eval(*e) < *b);
        if small {
            converged = true;
            break;
        }
        if n == opts.max_steps {
            break;
        }
        let df = f.differential(ring, &x, false)?;
        let det = df.det()?;
        let certificate = ring.is_strictly_positive(&det.abs(), ring.settings().m_max);
        invertibility_log.push(InvertibilityRecord {
            iterate: n,
            certificate,
        });
        if certificate.verdict != Verdict::CertifiedYes {
            return Err(Error::DifferentialNotInvertible {
                iterate: n,
                eps: certificate.eps.unwrap_or(ring.grid().eps_min()),
            });
        }
        let next = newton_step(f, &x);
        for &(e, _) in ring.tail() {
            if next.eval(e).iter().any(|v| !v.is_finite()) {
                return Err(Error::DifferentialNotInvertible { iterate: n, eps: e });
            }
        }
        iterates.push(next);
    }
    Ok(NewtonResult {
        root: iterates.last().cloned().expect("at least x0"),
        iterates,
        residuals,
        residual_orders,
        invertibility_log,
        converged,
    })
}
