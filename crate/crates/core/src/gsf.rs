//! Generalized smooth functions: nets `(f_ε)` of smooth maps acting on
//! generalized points representative-wise, `f([x_ε]) = [f_ε(x_ε)]`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{parse, Ast, Compiled, EvalEnv, Fault, ParamEnv, Value};
use crate::gauge::Gauge;
use crate::jet::{Jet, JetShape};
use crate::linalg::{spectral_norm, GenMat, GenVec};
use crate::net::GenNum;
use crate::ring::Ring;
use crate::scalar::Scalar;

/// Per-ε domain test: `(ε, x_ε) ↦ x_ε ∈ X_ε`.
pub type DomainPredicate<S> = Arc<dyn Fn(f64, &[S]) -> bool + Send + Sync>;

/// Names accepted by [`GenFunc::builtin`].
pub const BUILTINS: [&str; 3] = ["example1", "example2", "ramp_mollified"];

#[derive(Clone)]
enum Body<S> {
    Exprs {
        exprs: Vec<Arc<Compiled<S>>>,
        /// Parameter nets of each component, in the compiled order.
        params: Vec<Vec<GenNum<S>>>,
    },
    /// ramp ∗ μ_ε with μ(x) = ¾·max(0, 1 − x²), μ_ε(x) = μ(x/ρ_ε)/ρ_ε.
    RampMollified,
    Compose {
        outer: Arc<GenFunc<S>>,
        inner: Arc<GenFunc<S>>,
    },
    /// Componentwise `max(min(f, 1), 0)`.
    Clamp(Arc<GenFunc<S>>),
}

/// A generalized smooth function `ρℝ̃^n ⊇ X → ρℝ̃^d`.
#[derive(Clone)]
pub struct GenFunc<S> {
    dom_dim: usize,
    cod_dim: usize,
    body: Body<S>,
    gauge: Gauge<S>,
    label: String,
    domain: Option<DomainPredicate<S>>,
}

impl<S: Scalar> fmt::Debug for GenFunc<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "GenFunc({}: {} -> {})",
            self.label, self.dom_dim, self.cod_dim
        )
    }
}

/// Remainder bound of a Taylor expansion along a segment.
#[derive(Debug, Clone)]
pub struct TaylorBound<S> {
    pub order: u32,
    pub remainder_bound: GenNum<S>,
    pub segment: (GenVec<S>, GenVec<S>),
}

impl<S: Scalar> GenFunc<S> {
    /// A function with one DSL expression per output component.
    pub fn from_exprs(
        srcs: &[&str],
        dom_dim: usize,
        env: &ParamEnv<S>,
        gauge: &Gauge<S>,
    ) -> Result<Self> {
        let asts = srcs.iter().map(|s| parse(s)).collect::<Result<Vec<_>>>()?;
        Self::from_asts(&asts, dom_dim, env, gauge)
    }

    pub fn from_asts(
        asts: &[Ast],
        dom_dim: usize,
        env: &ParamEnv<S>,
        gauge: &Gauge<S>,
    ) -> Result<Self> {
        if asts.is_empty() || dom_dim == 0 {
            return Err(Error::InvalidArgument(
                "a function needs at least one input and one output".into(),
            ));
        }
        let names = env.names();
        let mut exprs = Vec::with_capacity(asts.len());
        let mut params = Vec::with_capacity(asts.len());
        for ast in asts {
            let c = Compiled::new(ast, dom_dim, &names)?;
            params.push(env.resolve(c.params())?);
            exprs.push(Arc::new(c));
        }
        let label = asts
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(", ");
        Ok(Self {
            dom_dim,
            cod_dim: asts.len(),
            body: Body::Exprs { exprs, params },
            gauge: gauge.clone(),
            label,
            domain: None,
        })
    }

    pub fn identity(dim: usize, gauge: &Gauge<S>) -> Self {
        let srcs: Vec<String> = (1..=dim).map(|i| format!("u{i}")).collect();
        let refs: Vec<&str> = srcs.iter().map(|s| s.as_str()).collect();
        Self::from_exprs(&refs, dim, &ParamEnv::new(dim), gauge)
            .expect("identity expressions are valid")
    }

    /// The worked-example functions: `example1` (`1 − u²`), `example2`
    /// (`H·a² − H·u²`, needs `a` and `H`) and `ramp_mollified`.
    pub fn builtin(id: &str, env: &ParamEnv<S>, gauge: &Gauge<S>) -> Result<Self> {
        match id {
            "example1" => Ok(Self::from_exprs(&["1 - u1^2"], 1, env, gauge)?.named(id)),
            "example2" => {
                for p in ["a", "H"] {
                    if env.get(p).is_none() {
                        return Err(Error::MissingParam {
                            builtin: id.into(),
                            param: p.into(),
                        });
                    }
                }
                Ok(Self::from_exprs(&["H*a^2 - H*u1^2"], 1, env, gauge)?.named(id))
            }
            "ramp_mollified" => Ok(Self {
                dom_dim: 1,
                cod_dim: 1,
                body: Body::RampMollified,
                gauge: gauge.clone(),
                label: id.into(),
                domain: None,
            }),
            _ => Err(Error::UnknownBuiltin(id.into())),
        }
    }

    pub fn named(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Restricts the function to a declared per-ε domain.
    pub fn with_domain(mut self, pred: DomainPredicate<S>) -> Self {
        self.domain = Some(pred);
        self
    }

    /// `f ∘ g`.
    pub fn compose(f: &Self, g: &Self) -> Result<Self> {
        if g.cod_dim != f.dom_dim {
            return Err(Error::DimensionMismatch {
                expected: f.dom_dim,
                found: g.cod_dim,
            });
        }
        Ok(Self {
            dom_dim: g.dom_dim,
            cod_dim: f.cod_dim,
            body: Body::Compose {
                outer: Arc::new(f.clone()),
                inner: Arc::new(g.clone()),
            },
            gauge: f.gauge.clone(),
            label: format!("({}) o ({})", f.label, g.label),
            domain: None,
        })
    }

    /// Representatives clamped componentwise into `[0, 1]`.
    pub fn clamped(&self) -> Self {
        Self {
            dom_dim: self.dom_dim,
            cod_dim: self.cod_dim,
            body: Body::Clamp(Arc::new(self.clone())),
            gauge: self.gauge.clone(),
            label: format!("clamp({})", self.label),
            domain: None,
        }
    }

    pub fn dom_dim(&self) -> usize {
        self.dom_dim
    }

    pub fn cod_dim(&self) -> usize {
        self.cod_dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn gauge(&self) -> &Gauge<S> {
        &self.gauge
    }

    /// `f_ε` at `x`, in any value algebra.
    pub fn apply<T: Value<S>>(
        &self,
        eps: f64,
        shape: &T::Shape,
        x: &[T],
    ) -> std::result::Result<Vec<T>, Fault> {
        if let Some(pred) = &self.domain {
            let xs: Vec<S> = x.iter().map(|t| t.value().clone()).collect();
            if !pred(eps, &xs) {
                return Err(Fault("outside domain"));
            }
        }
        match &self.body {
            Body::Exprs { exprs, params } => {
                let rho = self.gauge.eval(eps);
                exprs
                    .iter()
                    .zip(params)
                    .map(|(c, ps)| {
                        let pv: Vec<S> = ps.iter().map(|p| p.eval(eps)).collect();
                        let env = EvalEnv {
                            eps,
                            rho: &rho,
                            params: &pv,
                        };
                        c.eval(shape, &env, x)
                    })
                    .collect()
            }
            Body::RampMollified => Ok(vec![ramp_mollified(&self.gauge.eval(eps), &x[0])]),
            Body::Compose { outer, inner } => {
                let y = inner.apply(eps, shape, x)?;
                outer.apply(eps, shape, &y)
            }
            Body::Clamp(f) => Ok(f
                .apply(eps, shape, x)?
                .into_iter()
                .map(|y| {
                    if *y.value() > S::one() {
                        y.chain(S::one(), || (S::zero(), S::zero()))
                    } else if *y.value() < S::zero() {
                        y.chain(S::zero(), || (S::zero(), S::zero()))
                    } else {
                        y
                    }
                })
                .collect()),
        }
    }

    fn fault(eps: f64) -> impl Fn(Fault) -> Error {
        move |Fault(op)| Error::DomainViolation {
            op: op.to_string(),
            eps,
        }
    }

    fn check_input(&self, x: &[S]) -> Result<()> {
        if x.len() != self.dom_dim {
            return Err(Error::DimensionMismatch {
                expected: self.dom_dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// `f_ε(x)` at one ε.
    pub fn value_at(&self, eps: f64, x: &[S]) -> Result<Vec<S>> {
        self.check_input(x)?;
        self.apply::<S>(eps, &(), x).map_err(Self::fault(eps))
    }

    /// Values and row-major `d×n` Jacobian of `f_ε` at `x`.
    pub fn jacobian_at(&self, eps: f64, x: &[S]) -> Result<(Vec<S>, Vec<S>)> {
        self.check_input(x)?;
        let shape = JetShape {
            n: self.dom_dim,
            second: false,
        };
        let jets = self
            .apply(eps, &shape, &Jet::seeds(&shape, x))
            .map_err(Self::fault(eps))?;
        let mut values = Vec::with_capacity(self.cod_dim);
        let mut jac = Vec::with_capacity(self.cod_dim * self.dom_dim);
        for j in jets {
            values.push(j.value);
            jac.extend(j.first);
        }
        Ok((values, jac))
    }

    /// Values, Jacobian and one row-major `n×n` Hessian per output.
    #[allow(clippy::type_complexity)]
    pub fn second_at(&self, eps: f64, x: &[S]) -> Result<(Vec<S>, Vec<S>, Vec<Vec<S>>)> {
        self.check_input(x)?;
        let shape = JetShape {
            n: self.dom_dim,
            second: true,
        };
        let jets = self
            .apply(eps, &shape, &Jet::seeds(&shape, x))
            .map_err(Self::fault(eps))?;
        let mut values = Vec::new();
        let mut jac = Vec::new();
        let mut hess = Vec::new();
        for j in jets {
            values.push(j.value);
            jac.extend(j.first);
            hess.push(j.second.expect("second-order shape"));
        }
        Ok((values, jac, hess))
    }

    fn check_point(&self, x: &GenVec<S>) -> Result<()> {
        if x.dim() != self.dom_dim {
            return Err(Error::DimensionMismatch {
                expected: self.dom_dim,
                found: x.dim(),
            });
        }
        Ok(())
    }

    /// Runs `per_eps` on every tail sample to surface domain faults.
    fn validate<T>(ring: &Ring<S>, per_eps: impl Fn(f64) -> Result<T>) -> Result<()> {
        for &eps in ring.grid().tail() {
            per_eps(eps)?;
        }
        Ok(())
    }

    fn check_moderate_all(ring: &Ring<S>, nums: &[GenNum<S>]) -> Result<()> {
        nums.iter().try_for_each(|x| ring.check_moderate(x))
    }

    /// `f(x) = [f_ε(x_ε)]`.
    pub fn eval(&self, ring: &Ring<S>, x: &GenVec<S>, check_moderate: bool) -> Result<GenVec<S>> {
        self.check_point(x)?;
        Self::validate(ring, |e| self.value_at(e, &x.eval(e)))?;
        let (f, p) = (self.clone(), x.clone());
        let d = self.cod_dim;
        let out = GenVec::from_shared(d, move |e| {
            f.value_at(e, &p.eval(e))
                .unwrap_or_else(|_| vec![S::from_f64(f64::NAN); d])
        });
        if check_moderate {
            Self::check_moderate_all(ring, out.components())?;
        }
        Ok(out)
    }

    /// `df(x)` as a `d×n` matrix.
    pub fn differential(
        &self,
        ring: &Ring<S>,
        x: &GenVec<S>,
        check_moderate: bool,
    ) -> Result<GenMat<S>> {
        self.check_point(x)?;
        Self::validate(ring, |e| self.jacobian_at(e, &x.eval(e)))?;
        let (f, p) = (self.clone(), x.clone());
        let (d, n) = (self.cod_dim, self.dom_dim);
        let out = GenMat::from_shared(d, n, move |e| {
            f.jacobian_at(e, &p.eval(e))
                .map(|(_, j)| j)
                .unwrap_or_else(|_| vec![S::from_f64(f64::NAN); d * n])
        });
        if check_moderate {
            Self::check_moderate_all(ring, out.entries())?;
        }
        Ok(out)
    }

    /// `d²f(x)`: one symmetric `n×n` matrix per output component.
    pub fn second_differential(
        &self,
        ring: &Ring<S>,
        x: &GenVec<S>,
        check_moderate: bool,
    ) -> Result<Vec<GenMat<S>>> {
        self.check_point(x)?;
        Self::validate(ring, |e| self.second_at(e, &x.eval(e)))?;
        let (d, n) = (self.cod_dim, self.dom_dim);
        let (f, p) = (self.clone(), x.clone());
        let all = GenVec::from_shared(d * n * n, move |e| {
            f.second_at(e, &p.eval(e))
                .map(|(_, _, h)| h.concat())
                .unwrap_or_else(|_| vec![S::from_f64(f64::NAN); d * n * n])
        });
        let comps = all.components();
        let mats = (0..d)
            .map(|i| GenMat::new(n, n, comps[i * n * n..(i + 1) * n * n].to_vec()))
            .collect::<Result<Vec<_>>>()?;
        if check_moderate {
            Self::check_moderate_all(ring, comps)?;
        }
        Ok(mats)
    }

    /// `r(x, h)` with `f(x + h·v) = f(x) + h·r(x, h)`: the difference
    /// quotient for invertible `h`, `df(x)·v` for negligible `h`.
    pub fn incremental_ratio(
        &self,
        ring: &Ring<S>,
        x: &GenVec<S>,
        v: &GenVec<S>,
        h: &GenNum<S>,
    ) -> Result<GenVec<S>> {
        self.check_point(x)?;
        self.check_point(v)?;
        if ring.check_invertible(h).is_ok() {
            let moved = x.add(&v.scale(h))?;
            let fx = self.eval(ring, x, false)?;
            let fm = self.eval(ring, &moved, false)?;
            let diff = fm.sub(&fx)?;
            return Ok(GenVec::new(
                diff.components()
                    .iter()
                    .map(|c| c.div_unchecked(h))
                    .collect(),
            ));
        }
        if ring.is_negligible(h, ring.settings().n_max).is_yes() {
            return self.differential(ring, x, false)?.apply(v);
        }
        let c = ring.is_strictly_positive(&h.abs(), ring.settings().m_max);
        Err(Error::NotInvertible {
            eps: c.eps.unwrap_or(ring.grid().eps_min()),
            m_max: ring.settings().m_max,
        })
    }

    /// Remainder bound of the order-`order` Taylor expansion of `f` at `a`
    /// evaluated at `b`: the largest `‖d^{order+1} f(ξ)‖/(order+1)!·|b−a|^{order+1}`
    /// over `probes` equispaced `ξ` on the segment.
    pub fn taylor_remainder_bound(
        &self,
        ring: &Ring<S>,
        a: &GenVec<S>,
        b: &GenVec<S>,
        order: u32,
        probes: usize,
    ) -> Result<TaylorBound<S>> {
        self.check_point(a)?;
        self.check_point(b)?;
        if order > 1 {
            return Err(Error::InvalidArgument(
                "Taylor remainders need derivatives up to order 2".into(),
            ));
        }
        let probes = probes.max(2);
        let f = self.clone();
        let (pa, pb) = (a.clone(), b.clone());
        let per_eps = move |e: f64| -> Result<S> {
            let av = pa.eval(e);
            let bv = pb.eval(e);
            let h: Vec<S> = bv
                .iter()
                .zip(&av)
                .map(|(x, y)| x.clone() - y.clone())
                .collect();
            let hn = crate::linalg::euclid(&h);
            let mut worst = S::zero();
            for k in 0..probes {
                let t = S::from_f64(k as f64 / (probes - 1) as f64);
                let xi: Vec<S> = av
                    .iter()
                    .zip(&h)
                    .map(|(x, d)| x.clone() + t.clone() * d.clone())
                    .collect();
                let norm = if order == 0 {
                    let (_, jac) = f.jacobian_at(e, &xi)?;
                    spectral_norm(&jac, f.cod_dim, f.dom_dim)
                } else {
                    let (_, _, hs) = f.second_at(e, &xi)?;
                    let two = S::one() + S::one();
                    hs.iter()
                        .map(|h| spectral_norm(h, f.dom_dim, f.dom_dim))
                        .fold(S::zero(), |acc, s| acc + s.clone() * s)
                        .sqrt()
                        / two
                };
                worst = worst.max_of(&norm);
            }
            Ok(worst * hn.powi(order as i32 + 1))
        };
        Self::validate(ring, &per_eps)?;
        let remainder_bound =
            GenNum::from_fn(move |e| per_eps(e).unwrap_or_else(|_| S::from_f64(f64::NAN)));
        Ok(TaylorBound {
            order,
            remainder_bound,
            segment: (a.clone(), b.clone()),
        })
    }
}

/// The mollified ramp at one ε: 0 left of `−ρ`, the identity right of `ρ`,
/// and `(3ρ−x)(ρ+x)³/(16ρ³)` in between.
fn ramp_mollified<S: Scalar, T: Value<S>>(rho: &S, x: &T) -> T {
    let v = x.value().clone();
    if v <= -rho.clone() {
        return x.chain(S::zero(), || (S::zero(), S::zero()));
    }
    if v >= *rho {
        return x.clone();
    }
    let s = rho.clone() + v.clone();
    let rho3 = rho.powi(3);
    let three = S::from_f64(3.0);
    let f0 =
        (three.clone() * rho.clone() - v.clone()) * s.powi(3) / (S::from_f64(16.0) * rho3.clone());
    x.chain(f0, || {
        let two = S::one() + S::one();
        let four = two.clone() + two.clone();
        let f1 = (two * rho.clone() - v.clone()) * s.clone() * s / (four.clone() * rho3.clone());
        let f2 = three * (rho.clone() * rho.clone() - v.clone() * v) / (four * rho3);
        (f1, f2)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring() -> Ring<f64> {
        Ring::colombeau()
    }

    fn f(src: &str) -> GenFunc<f64> {
        GenFunc::from_exprs(&[src], 1, &ParamEnv::new(1), &Gauge::eps()).unwrap()
    }

    #[test]
    fn example1_at_shifted_point() {
        let r = ring();
        let g = GenFunc::builtin("example1", &ParamEnv::new(1), r.gauge()).unwrap();
        let x0 = GenVec::scalar(GenNum::one() - r.drho_pow(2.0));
        let y = g.eval(&r, &x0, true).unwrap();
        let e = 1e-3;
        let expect = 2.0 * e * e - e.powi(4);
        // doubles lose ~1e-16 absolute to cancellation in 1 - x0^2
        assert!((y.get(0).eval(e) - expect).abs() < 1e-15);
        let df = g.differential(&r, &x0, true).unwrap();
        assert!((df.get(0, 0).eval(e) - (-2.0 + 2.0 * e * e)).abs() < 1e-15);
    }

    #[test]
    fn ramp_values_and_slopes() {
        let r = ring();
        let g = GenFunc::builtin("ramp_mollified", &ParamEnv::new(1), r.gauge()).unwrap();
        let e = 1e-3;
        assert_eq!(g.value_at(e, &[-e]).unwrap()[0], 0.0);
        assert!((g.value_at(e, &[0.0]).unwrap()[0] - 3.0 * e / 16.0).abs() < 1e-18);
        assert_eq!(g.value_at(e, &[2.0 * e]).unwrap()[0], 2.0 * e);
        let (_, d) = g.jacobian_at(e, &[0.0]).unwrap();
        assert!((d[0] - 0.5).abs() < 1e-15);
        let (_, d) = g.jacobian_at(e, &[e]).unwrap();
        assert_eq!(d[0], 1.0);
        let (_, d) = g.jacobian_at(e, &[-e]).unwrap();
        assert_eq!(d[0], 0.0);
    }

    #[test]
    fn missing_and_unknown_builtins() {
        let g = Gauge::<f64>::eps();
        let env = ParamEnv::new(1).with("a", GenNum::one()).unwrap();
        assert!(matches!(
            GenFunc::builtin("example2", &env, &g),
            Err(Error::MissingParam { param, .. }) if param == "H"
        ));
        assert!(matches!(
            GenFunc::builtin("nope", &env, &g),
            Err(Error::UnknownBuiltin(_))
        ));
    }

    #[test]
    fn incremental_ratio_cases() {
        let r = ring();
        let sq = f("u1^2");
        let one = GenVec::from_f64s(&[1.0]);
        let q = sq.incremental_ratio(&r, &one, &one, &r.drho()).unwrap();
        let e = 1e-4;
        assert!((q.get(0).eval(e) - (2.0 + e)).abs() < 1e-10);
        let q0 = sq
            .incremental_ratio(&r, &one, &one, &GenNum::zero())
            .unwrap();
        assert_eq!(q0.get(0).eval(e), 2.0);
        let bad = GenNum::<f64>::from_fn(|e| (1.0 / e).sin());
        assert!(sq.incremental_ratio(&r, &one, &one, &bad).is_err());
    }

    #[test]
    fn taylor_bound_of_square() {
        let r = ring();
        let sq = f("u1^2");
        let a = GenVec::from_f64s(&[0.0]);
        let b = GenVec::scalar(r.drho());
        let tb = sq.taylor_remainder_bound(&r, &a, &b, 1, 5).unwrap();
        let e = 1e-3;
        assert!((tb.remainder_bound.eval(e) - e * e).abs() < 1e-18);
        let lin = f("3*u1 - 2");
        let tb = lin.taylor_remainder_bound(&r, &a, &b, 1, 5).unwrap();
        assert_eq!(tb.remainder_bound.eval(e), 0.0);
    }

    #[test]
    fn composition_and_chain_rule() {
        let r = ring();
        let sq = f("u1^2");
        let shift = f("u1 + drho");
        let c = GenFunc::compose(&sq, &shift).unwrap();
        let e = 1e-3;
        assert_eq!(c.value_at(e, &[1.0]).unwrap()[0], (1.0 + e) * (1.0 + e));
        let (_, d) = c.jacobian_at(e, &[1.0]).unwrap();
        assert!((d[0] - 2.0 * (1.0 + e)).abs() < 1e-15);
        let two = GenFunc::from_exprs(&["u1", "u2"], 2, &ParamEnv::new(2), r.gauge()).unwrap();
        assert!(GenFunc::compose(&sq, &two).is_err());
    }

    #[test]
    fn domain_declared() {
        let r = ring();
        let g = f("log(u1)").with_domain(Arc::new(|_, x: &[f64]| x[0] > 0.0));
        assert!(g.value_at(0.1, &[-1.0]).is_err());
        assert!(g.eval(&r, &GenVec::from_f64s(&[2.0]), true).is_ok());
    }
}
