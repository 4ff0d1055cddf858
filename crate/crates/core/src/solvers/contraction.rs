use crate::error::{Error, Result};
use crate::gsf::{DomainPredicate, GenFunc};
use crate::linalg::GenVec;
use crate::net::GenNum;
use crate::order::OrderFit;
use crate::ring::{Ring, Verdict};
use crate::scalar::Scalar;

/// Smallest leading order accepted as evidence that `α` is strongly
/// infinitesimal (`α ≤ dρ^k` for some `k > 0`).
pub const MIN_K_WITNESS: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct ContractionReport<S> {
    /// `α̂_ε`: the largest quotient of successive step lengths.
    pub alpha: GenNum<S>,
    /// `None` when every tail value of `α̂` is exactly zero.
    pub alpha_order: Option<OrderFit>,
    /// `|x_{n+1} − x_n| / (α̂^n·|x_1 − x_0|)`, one per step.
    pub per_step_ratios: Vec<GenNum<S>>,
    pub strong_infinitesimal: Verdict,
    /// A `k` with `α̂_ε ≤ ρ_ε^k` on the whole tail.
    pub k_witness: Option<f64>,
    pub orbit: Vec<GenVec<S>>,
    pub step_lengths: Vec<GenNum<S>>,
}

/// One orbit step `g(x)`, with domain faults reported as leaving the domain.
pub(crate) fn orbit_step<S: Scalar>(
    ring: &Ring<S>,
    g: &GenFunc<S>,
    x: &GenVec<S>,
    step: usize,
    domain: Option<&DomainPredicate<S>>,
) -> Result<GenVec<S>> {
    let next = g.eval(ring, x, false).map_err(|e| match e {
        Error::DomainViolation { eps, .. } => Error::OrbitLeftDomain { step, eps },
        other => other,
    })?;
    check_in_domain(ring, &next, step, domain)?;
    Ok(next)
}

pub(crate) fn check_in_domain<S: Scalar>(
    ring: &Ring<S>,
    x: &GenVec<S>,
    step: usize,
    domain: Option<&DomainPredicate<S>>,
) -> Result<()> {
    if let Some(pred) = domain {
        for &(eps, _) in ring.tail() {
            if !pred(eps, &x.eval(eps)) {
                return Err(Error::OrbitLeftDomain { step, eps });
            }
        }
    }
    Ok(())
}

/// Checks that `g` contracts along the orbit of `x0` by a strongly
/// infinitesimal factor.
pub fn verify_contraction_on_orbit<S: Scalar>(
    ring: &Ring<S>,
    g: &GenFunc<S>,
    x0: &GenVec<S>,
    steps: usize,
    domain: Option<&DomainPredicate<S>>,
) -> Result<ContractionReport<S>> {
    if steps < 3 {
        return Err(Error::InvalidArgument(
            "contraction check needs steps >= 3".into(),
        ));
    }
    if g.dom_dim() != g.cod_dim() || g.dom_dim() != x0.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dom_dim(),
            found: x0.dim(),
        });
    }
    check_in_domain(ring, x0, 0, domain)?;
    let mut orbit = vec![x0.clone()];
    for n in 0..steps {
        let next = orbit_step(ring, g, &orbit[n], n + 1, domain)?;
        orbit.push(next);
    }
    let step_lengths: Vec<GenNum<S>> = orbit
        .windows(2)
        .map(|w| w[1].distance(&w[0]))
        .collect::<Result<_>>()?;
    if ring
        .tail()
        .iter()
        .all(|(e, _)| step_lengths[0].eval(*e).is_zero())
    {
        return Err(Error::DegenerateOrbit);
    }

    let lens = step_lengths.clone();
    let alpha = GenNum::from_fn(move |e| {
        let d: Vec<S> = lens.iter().map(|l| l.eval(e)).collect();
        d.windows(2).fold(S::zero(), |acc, w| {
            let q = if w[0].is_zero() {
                S::zero()
            } else {
                w[1].clone() / w[0].clone()
            };
            acc.max_of(&q)
        })
    })
    .with_label("alpha");

    let per_step_ratios = (0..step_lengths.len())
        .map(|n| {
            let (dn, d0, a) = (
                step_lengths[n].clone(),
                step_lengths[0].clone(),
                alpha.clone(),
            );
            GenNum::from_fn(move |e| {
                let denom = a.eval(e).powi(n as i32) * d0.eval(e);
                if denom.is_zero() {
                    S::zero()
                } else {
                    dn.eval(e) / denom
                }
            })
        })
        .collect();

    let tail_alpha: Vec<S> = ring.tail().iter().map(|(e, _)| alpha.eval(*e)).collect();
    let not_contracting = tail_alpha.iter().any(|a| a.is_nan() || *a >= S::one());
    let all_zero = tail_alpha.iter().all(|a| a.is_zero());
    let alpha_order = ring.leading_order(&alpha).ok();
    let pointwise_k = ring
        .tail()
        .iter()
        .zip(&tail_alpha)
        .filter(|(_, a)| !a.is_zero())
        .map(|((_, rho), a)| a.ln_abs() / rho.ln_abs())
        .fold(f64::INFINITY, f64::min);

    let (strong_infinitesimal, k_witness) = if not_contracting {
        (Verdict::CertifiedNo, None)
    } else if all_zero {
        (Verdict::CertifiedYes, None)
    } else {
        match alpha_order {
            Some(fit) => {
                let k = pointwise_k.min(fit.exponent);
                if k >= MIN_K_WITNESS {
                    (Verdict::CertifiedYes, Some(k))
                } else if fit.is_reliable(ring.settings().residual_limit) {
                    (Verdict::CertifiedNo, None)
                } else {
                    (Verdict::Undecided, None)
                }
            }
            None => (Verdict::Undecided, None),
        }
    };

    Ok(ContractionReport {
        alpha,
        alpha_order,
        per_step_ratios,
        strong_infinitesimal,
        k_witness,
        orbit,
        step_lengths,
    })
}
