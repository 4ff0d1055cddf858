use std::fmt;

use crate::error::{Error, Result};
use crate::expr::{parse, Compiled, EvalEnv};
use crate::grid::EpsGrid;
use crate::net::GenNum;
use crate::scalar::Scalar;

/// Gauges whose value at the smallest grid ε is not below this are
/// rejected: they do not visibly tend to 0 on the grid.
pub const VANISHING_THRESHOLD: f64 = 0.5;

/// The gauge net ε ↦ ρ_ε. Its class `dρ = [ρ_ε]` is the reference
/// infinitesimal every order and topology test is measured against.
#[derive(Clone)]
pub struct Gauge<S> {
    net: GenNum<S>,
    description: String,
}

impl<S> fmt::Debug for Gauge<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gauge({})", self.description)
    }
}

impl<S: Scalar> Gauge<S> {
    /// ρ_ε = ε.
    pub fn eps() -> Self {
        Self {
            net: GenNum::from_fn(S::from_f64).with_label("drho"),
            description: "eps".into(),
        }
    }

    /// ρ_ε = ε^p.
    pub fn power(p: f64) -> Self {
        let ps = S::from_f64(p);
        Self {
            net: GenNum::from_fn(move |e| {
                if p == 1.0 {
                    S::from_f64(e)
                } else {
                    S::from_f64(e).powf(&ps)
                }
            })
            .with_label("drho"),
            description: format!("eps^{p}"),
        }
    }

    /// Builds a gauge from `"eps"`, `"eps^p"` or any expression in `eps`
    /// and validates it on `grid`.
    pub fn parse(spec: &str, grid: &EpsGrid) -> Result<Self> {
        let malformed = |reason: String| Error::MalformedSpec {
            spec: spec.to_string(),
            reason,
        };
        let ast = parse(spec).map_err(|e| malformed(e.to_string()))?;
        if ast.uses_drho() {
            return Err(malformed("a gauge cannot refer to drho".into()));
        }
        if ast.max_var() > 0 {
            return Err(malformed("a gauge cannot refer to variables".into()));
        }
        if let Some(p) = ast.params().first() {
            return Err(malformed(format!("unknown name {p:?}")));
        }
        let compiled = Compiled::<S>::new(&ast, 0, &[]).map_err(|e| malformed(e.to_string()))?;
        let zero = S::zero();
        let net = GenNum::from_fn(move |eps| {
            let env = EvalEnv {
                eps,
                rho: &zero,
                params: &[],
            };
            compiled
                .eval::<S>(&(), &env, &[])
                .unwrap_or_else(|_| S::from_f64(f64::NAN))
        })
        .with_label("drho");
        let gauge = Self {
            net,
            description: spec.trim().to_string(),
        };
        gauge.validate(grid)?;
        Ok(gauge)
    }

    /// Checks ρ_ε ∈ (0,1], monotonicity along the grid and visible decay.
    pub fn validate(&self, grid: &EpsGrid) -> Result<()> {
        let mut prev: Option<S> = None;
        for &eps in grid.samples() {
            let v = self.net.eval(eps);
            if !(v > S::zero() && v <= S::one()) {
                return Err(Error::InvalidGauge {
                    eps,
                    value: v.to_f64(),
                });
            }
            if let Some(p) = &prev {
                if v > *p {
                    return Err(Error::InvalidGauge {
                        eps,
                        value: v.to_f64(),
                    });
                }
            }
            prev = Some(v);
        }
        let last = grid.eps_min();
        let v = self.net.eval(last);
        if v.to_f64() >= VANISHING_THRESHOLD {
            return Err(Error::InvalidGauge {
                eps: last,
                value: v.to_f64(),
            });
        }
        Ok(())
    }

    /// `dρ` as a generalized number.
    pub fn drho(&self) -> &GenNum<S> {
        &self.net
    }

    pub fn eval(&self, eps: f64) -> S {
        self.net.eval(eps)
    }

    pub fn description(&self) -> &str {
        &self.description
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_gauge() {
        let g = Gauge::<f64>::parse("eps", &EpsGrid::default()).unwrap();
        assert_eq!(g.eval(0.25), 0.25);
        assert_eq!(g.description(), "eps");
    }

    #[test]
    fn squared_gauge() {
        let g = Gauge::<f64>::parse("eps^2", &EpsGrid::default()).unwrap();
        assert!((g.eval(0.1) - 0.01).abs() < 1e-17);
    }

    #[test]
    fn shifted_gauge_rejected() {
        let err = Gauge::<f64>::parse("eps+1", &EpsGrid::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidGauge { .. }));
    }

    #[test]
    fn malformed_specs() {
        for s in ["eps^", "drho", "u1", "x*eps", "eps @"] {
            let err = Gauge::<f64>::parse(s, &EpsGrid::default()).unwrap_err();
            assert!(matches!(err, Error::MalformedSpec { .. }), "{s}: {err:?}");
        }
    }

    #[test]
    fn non_vanishing_gauge_rejected() {
        assert!(Gauge::<f64>::parse("0.9", &EpsGrid::default()).is_err());
        assert!(Gauge::<f64>::parse("sqrt(eps)", &EpsGrid::default()).is_ok());
    }
}
