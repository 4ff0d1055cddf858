use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::GenVec;
use crate::net::GenNum;
use crate::order::{fit_line, OrderFit};
use crate::ring::Ring;
use crate::scalar::Scalar;

/// Pairs `(e_n, e_{n+1})` used per ε, counted from the end.
const PAIRS_USED: usize = 3;

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceOrder {
    /// Median over the tail of the per-ε estimates.
    pub order: f64,
    pub per_eps: Vec<(f64, f64)>,
    /// Leading order of `M_ε = e_{n+1} / e_n^p` at the last usable pair.
    pub constant_order: Option<OrderFit>,
}

/// Estimates `p` in `e_{n+1} ≈ M·e_n^p` from `e_n = |x_n − x*|`.
///
/// Errors below `1e3 · unit_roundoff · max(1, |x*|)` are discarded as
/// rounding noise.
pub fn estimate_convergence_order<S: Scalar>(
    ring: &Ring<S>,
    iterates: &[GenVec<S>],
    reference: &GenVec<S>,
) -> Result<ConvergenceOrder> {
    if iterates.len() < 4 {
        return Err(Error::InsufficientData {
            eps: ring.grid().eps_min(),
            usable: iterates.len(),
        });
    }
    let mut per_eps = Vec::new();
    let mut constants = Vec::new();
    for &(eps, _) in ring.tail() {
        let root = reference.eval(eps);
        let scale = crate::linalg::euclid(&root).to_f64().max(1.0);
        let floor = S::from_f64(1e3 * S::unit_roundoff() * scale);
        let errors: Vec<S> = iterates
            .iter()
            .map(|x| {
                let diff: Vec<S> = x
                    .eval(eps)
                    .into_iter()
                    .zip(&root)
                    .map(|(a, b)| a - b.clone())
                    .collect();
                crate::linalg::euclid(&diff)
            })
            .filter(|e| e.is_finite() && *e >= floor)
            .collect();
        if errors.len() < 3 {
            return Err(Error::InsufficientData {
                eps,
                usable: errors.len(),
            });
        }
        let start = errors.len().saturating_sub(PAIRS_USED + 1);
        let logs: Vec<f64> = errors[start..].iter().map(|e| e.ln_abs()).collect();
        let (xs, ys) = (&logs[..logs.len() - 1], &logs[1..]);
        let (p, _, _) = fit_line(xs, ys).ok_or(Error::InsufficientData {
            eps,
            usable: errors.len(),
        })?;
        let n = errors.len();
        let m = errors[n - 1].clone() / errors[n - 2].powf(&S::from_f64(p));
        per_eps.push((eps, p));
        constants.push((eps, m));
    }
    let mut ps: Vec<f64> = per_eps.iter().map(|(_, p)| *p).collect();
    ps.sort_by(f64::total_cmp);
    let mid = ps.len() / 2;
    let order = if ps.len() % 2 == 1 {
        ps[mid]
    } else {
        0.5 * (ps[mid - 1] + ps[mid])
    };
    let constant_order = ring.leading_order(&GenNum::tabulated(constants)).ok();
    Ok(ConvergenceOrder {
        order,
        per_eps,
        constant_order,
    })
}
