use std::fmt;

use super::contraction::{
    check_in_domain, orbit_step, verify_contraction_on_orbit, ContractionReport,
};
use crate::error::Error;
use crate::gsf::{DomainPredicate, GenFunc};
use crate::linalg::GenVec;
use crate::order::OrderFit;
use crate::ring::{Ring, SharpConvergence, Verdict};
use crate::scalar::Scalar;

/// Steps spent on the contraction check before iterating.
const VERIFY_STEPS: usize = 5;

#[derive(Debug, Clone)]
pub struct BanachOptions {
    /// Sharp-convergence exponents to report; the largest one is the
    /// stopping criterion.
    pub q_set: Vec<f64>,
    pub max_steps: usize,
    /// Iterate even when the contraction check does not certify.
    pub force: bool,
}

impl Default for BanachOptions {
    fn default() -> Self {
        Self {
            q_set: vec![1.0, 2.0, 3.0],
            max_steps: 50,
            force: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BanachResult<S> {
    pub fixed_point: GenVec<S>,
    pub orbit: Vec<GenVec<S>>,
    /// Sharp convergence of each orbit component to the fixed point, per `q`.
    pub cauchy_report: Vec<Vec<SharpConvergence>>,
    /// Leading order of `|g(x*) − x*|`; `None` when it vanishes on the tail.
    pub residual_order: Option<OrderFit>,
    /// `None` when `x0` was already a fixed point.
    pub contraction: Option<ContractionReport<S>>,
    pub forced: bool,
}

/// A failed solve, with the orbit computed so far.
#[derive(Debug, Clone)]
pub struct BanachFailure<S> {
    pub error: Error,
    pub orbit: Vec<GenVec<S>>,
}

impl<S> fmt::Display for BanachFailure<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (after {} iterates)", self.error, self.orbit.len())
    }
}

impl<S: fmt::Debug> std::error::Error for BanachFailure<S> {}

impl<S> From<BanachFailure<S>> for Error {
    fn from(f: BanachFailure<S>) -> Self {
        f.error
    }
}

/// Picard iteration `x_{n+1} = g(x_n)` until successive steps are below
/// `dρ^q` for the largest `q` in the set.
pub fn banach_solve<S: Scalar>(
    ring: &Ring<S>,
    g: &GenFunc<S>,
    x0: &GenVec<S>,
    opts: &BanachOptions,
    domain: Option<&DomainPredicate<S>>,
) -> Result<BanachResult<S>, BanachFailure<S>> {
    let fail = |error: Error, orbit: Vec<GenVec<S>>| BanachFailure { error, orbit };
    if opts.q_set.is_empty() || opts.q_set.iter().any(|q| !(*q > 0.0)) {
        return Err(fail(
            Error::InvalidArgument("q_set must hold positive exponents".into()),
            vec![],
        ));
    }
    let q_max = opts.q_set.iter().cloned().fold(f64::MIN, f64::max);

    let contraction = match verify_contraction_on_orbit(ring, g, x0, VERIFY_STEPS, domain) {
        Ok(report) => Some(report),
        Err(Error::DegenerateOrbit) => None,
        Err(e) => return Err(fail(e, vec![x0.clone()])),
    };
    let forced = match &contraction {
        Some(c) if c.strong_infinitesimal != Verdict::CertifiedYes => {
            if !opts.force {
                return Err(fail(Error::NotContraction, c.orbit.clone()));
            }
            true
        }
        _ => false,
    };

    let mut orbit = vec![x0.clone()];
    if contraction.is_some() {
        check_in_domain(ring, x0, 0, domain).map_err(|e| fail(e, orbit.clone()))?;
        let bounds: Vec<S> = ring
            .tail()
            .iter()
            .map(|(_, r)| crate::ring::rho_pow(r, q_max))
            .collect();
        let mut converged = false;
        for n in 0..opts.max_steps {
            let prefix = contraction
                .as_ref()
                .and_then(|c| c.orbit.get(n + 1).cloned());
            let next = match prefix {
                Some(x) => x,
                None => orbit_step(ring, g, &orbit[n], n + 1, domain)
                    .map_err(|e| fail(e, orbit.clone()))?,
            };
            let step = next
                .distance(&orbit[n])
                .map_err(|e| fail(e, orbit.clone()))?;
            orbit.push(next);
            let small = ring
                .tail()
                .iter()
                .zip(&bounds)
                .all(|((e, _), b)| step.eval(*e) < *b);
            if small {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(fail(
                Error::NoSharpConvergence {
                    steps: opts.max_steps,
                    q: q_max,
                },
                orbit,
            ));
        }
    }

    let fixed_point = orbit.last().cloned().expect("orbit is never empty");
    let cauchy_report = (0..fixed_point.dim())
        .map(|i| {
            let seq: Vec<_> = orbit.iter().map(|x| x.get(i).clone()).collect();
            ring.sharp_converges(&seq, fixed_point.get(i), &opts.q_set)
        })
        .collect();
    let image = g
        .eval(ring, &fixed_point, false)
        .map_err(|e| fail(e, orbit.clone()))?;
    let residual = image
        .distance(&fixed_point)
        .map_err(|e| fail(e, orbit.clone()))?;
    Ok(BanachResult {
        fixed_point,
        cauchy_report,
        residual_order: ring.leading_order(&residual).ok(),
        orbit,
        contraction,
        forced,
    })
}
