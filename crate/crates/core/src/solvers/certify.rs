use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::newton::{newton_solve, NewtonOptions};
use crate::error::{Error, Result};
use crate::gsf::GenFunc;
use crate::linalg::{self, GenVec};
use crate::net::GenNum;
use crate::order::OrderFit;
use crate::ring::{rho_pow, Ring};
use crate::scalar::Scalar;

/// Sampled maxima understate suprema; estimated constants are inflated by
/// this factor.
pub const SAFETY_FACTOR: f64 = 1.1;
/// Tolerance on the fitted exponent of `k` in the `k ≤ dρ^R` test.
pub const K_FIT_TOLERANCE: f64 = 0.05;
/// Below this every sampled `|u − v|` counts as degenerate.
const DEGENERATE_SEPARATION: f64 = 1e-300;
const BISECTION_STEPS: usize = 2048;

/// Constants `M`, `N`, `k` of the Ben-Israel hypotheses.
#[derive(Debug, Clone)]
pub struct Constants<S> {
    pub m: GenNum<S>,
    pub n: GenNum<S>,
    pub k: GenNum<S>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularPolicy {
    /// Fail with [`Error::NotInvertibleInBall`].
    Abort,
    /// Record the singular point as a witness and keep checking the rest.
    Flag,
}

#[derive(Debug, Clone)]
pub struct CertifyOptions {
    pub big_r: f64,
    pub pairs: usize,
    pub seed: u64,
    pub singular_policy: SingularPolicy,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            big_r: 1.0,
            pairs: 256,
            seed: 0,
            singular_policy: SingularPolicy::Abort,
        }
    }
}

/// Where a sampled inequality `lhs ≤ rhs` failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub eps: f64,
    pub u: Option<Vec<f64>>,
    pub v: Option<Vec<f64>>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    /// Sampled pass: no violation among the checked instances.
    pub passed: bool,
    pub checked: usize,
    /// Instances skipped because `df` was singular there.
    pub skipped: usize,
    pub witness: Option<Witness>,
}

impl HypothesisCheck {
    fn new() -> Self {
        Self {
            passed: true,
            checked: 0,
            skipped: 0,
            witness: None,
        }
    }

    fn record<S: Scalar>(&mut self, lhs: &S, rhs: &S, at: impl FnOnce() -> Witness) {
        self.checked += 1;
        if !(*lhs <= *rhs) {
            if self.passed {
                let mut w = at();
                w.lhs = lhs.to_f64();
                w.rhs = rhs.to_f64();
                self.witness = Some(w);
            }
            self.passed = false;
        }
    }

    fn fail(&mut self, w: Witness) {
        if self.passed {
            self.witness = Some(w);
        }
        self.passed = false;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdicts {
    pub h8: HypothesisCheck,
    pub h9: HypothesisCheck,
    pub h10: HypothesisCheck,
    pub h10bis: HypothesisCheck,
    pub jacob: HypothesisCheck,
}

impl Verdicts {
    pub fn all_passed(&self) -> bool {
        [&self.h8, &self.h9, &self.h10, &self.h10bis, &self.jacob]
            .iter()
            .all(|h| h.passed)
    }

    pub fn named(&self) -> [(&'static str, &HypothesisCheck); 5] {
        [
            ("8BI", &self.h8),
            ("9BI", &self.h9),
            ("10BI", &self.h10),
            ("10bisBI", &self.h10bis),
            ("Jacob", &self.jacob),
        ]
    }
}

/// Newton run from `x0` once every hypothesis passed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallCheck {
    pub converged: bool,
    pub iterates: usize,
    /// Every iterate stayed in `B_r(x0)` at every tail sample.
    pub inside: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct BenIsraelCertificate<S> {
    pub x0: GenVec<S>,
    pub r: GenNum<S>,
    pub m: GenNum<S>,
    pub n: GenNum<S>,
    pub k: GenNum<S>,
    pub big_r: f64,
    pub estimated: bool,
    pub verdicts: Verdicts,
    /// `df` invertible at every sample and along every sampled segment.
    pub invertibility: HypothesisCheck,
    pub k_fit: Option<OrderFit>,
    pub pairs: usize,
    pub seed: u64,
    pub notes: Vec<String>,
    pub ball_check: Option<BallCheck>,
}

struct Probe<S> {
    x: Vec<S>,
    fx: Vec<S>,
    jac: Vec<S>,
    det: S,
    inv_norm: Option<S>,
}

impl<S: Scalar> Probe<S> {
    fn new(f: &GenFunc<S>, eps: f64, x: Vec<S>) -> Result<Self> {
        let d = x.len();
        let (fx, jac) = f.jacobian_at(eps, &x)?;
        let det = linalg::det(&jac, d);
        let inv_norm = if det.is_zero() {
            None
        } else {
            linalg::inverse(&jac, d).map(|m| linalg::spectral_norm(&m, d, d))
        };
        Ok(Self {
            x,
            fx,
            jac,
            det,
            inv_norm,
        })
    }

    fn singular(&self) -> bool {
        self.inv_norm.is_none()
    }

    /// `df(self)⁻¹ b`.
    fn solve(&self, b: &[S]) -> Option<Vec<S>> {
        linalg::solve(&self.jac, self.x.len(), b)
    }
}

fn to_f64s<S: Scalar>(x: &[S]) -> Vec<f64> {
    x.iter().map(|v| v.to_f64()).collect()
}

fn diff<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.clone() - y.clone())
        .collect()
}

/// Uniform sample of the open ball `B_r(x0)`.
fn sample_ball<S: Scalar>(rng: &mut ChaCha8Rng, x0: &[S], r: &S) -> Vec<S> {
    let d = x0.len();
    let dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let norm = dir
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let t = rng.random::<f64>().powf(1.0 / d as f64);
    x0.iter()
        .zip(dir)
        .map(|(c, u)| c.clone() + r.clone() * S::from_f64(t * u / norm))
        .collect()
}

/// Bisects `[a, b]` towards the boundary of `{x : det df(x)·det df(b) ≤ 0}`,
/// returning the endpoint on `a`'s side.
fn locate_singular<S: Scalar>(f: &GenFunc<S>, eps: f64, a: &[S], b: &Probe<S>) -> Vec<S> {
    let half = S::from_f64(0.5);
    let mut lo = a.to_vec();
    let mut hi = b.x.clone();
    for _ in 0..BISECTION_STEPS {
        let mid: Vec<S> = lo
            .iter()
            .zip(&hi)
            .map(|(p, q)| p.clone() + (q.clone() - p.clone()) * half.clone())
            .collect();
        if mid == lo || mid == hi {
            break;
        }
        let on_a_side = match Probe::new(f, eps, mid.clone()) {
            Ok(p) => !((p.det.clone() * b.det.clone()) > S::zero()),
            Err(_) => true,
        };
        if on_a_side {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// A point of the sampled ball where `df` is singular, if any.
fn find_singular<S: Scalar>(f: &GenFunc<S>, eps: f64, probes: &[&Probe<S>]) -> Option<Vec<S>> {
    let regular = probes.iter().copied().find(|p| !p.singular());
    if let Some(s) = probes.iter().copied().find(|p| p.singular()) {
        return Some(match regular {
            Some(t) => locate_singular(f, eps, &s.x, t),
            None => s.x.clone(),
        });
    }
    let reference = regular?;
    probes
        .iter()
        .find(|p| (p.det.clone() * reference.det.clone()) < S::zero())
        .map(|p| locate_singular(f, eps, &p.x, reference))
}

struct EpsSample<S> {
    eps: f64,
    r: S,
    center: Probe<S>,
    pairs: Vec<(Probe<S>, Probe<S>)>,
}

fn sample_at<S: Scalar>(
    f: &GenFunc<S>,
    x0: &GenVec<S>,
    r: &GenNum<S>,
    eps: f64,
    pairs: usize,
    seed: u64,
) -> Result<EpsSample<S>> {
    let x0e = x0.eval(eps);
    let re = r.eval(eps);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ eps.to_bits());
    let center = Probe::new(f, eps, x0e.clone())?;
    let mut out = Vec::with_capacity(pairs);
    let floor = S::from_f64(DEGENERATE_SEPARATION);
    let mut separated = false;
    for _ in 0..pairs {
        let u = Probe::new(f, eps, sample_ball(&mut rng, &x0e, &re))?;
        let v = Probe::new(f, eps, sample_ball(&mut rng, &x0e, &re))?;
        separated |= linalg::euclid(&diff(&u.x, &v.x)) >= floor;
        out.push((u, v));
    }
    if !separated {
        return Err(Error::SamplingDegenerate { eps });
    }
    Ok(EpsSample {
        eps,
        r: re,
        center,
        pairs: out,
    })
}

/// `|df(v)(u − v) − f(u) + f(v)|` and `|u − v|`.
fn lhs8<S: Scalar>(u: &Probe<S>, v: &Probe<S>) -> (S, S) {
    let d = u.x.len();
    let duv = diff(&u.x, &v.x);
    let lin = linalg::mat_vec(&v.jac, d, d, &duv);
    let w: Vec<S> = lin
        .into_iter()
        .zip(u.fx.iter().zip(&v.fx))
        .map(|(l, (fu, fv))| l - fu.clone() + fv.clone())
        .collect();
    (linalg::euclid(&w), linalg::euclid(&duv))
}

/// `|(df(v)⁻¹ − df(u)⁻¹) f(u)|`.
fn lhs9<S: Scalar>(u: &Probe<S>, v: &Probe<S>) -> Option<S> {
    let a = v.solve(&u.fx)?;
    let b = u.solve(&u.fx)?;
    Some(linalg::euclid(&diff(&a, &b)))
}

fn sign_notes<S: Scalar>(ring: &Ring<S>, c: &Constants<S>) -> Vec<String> {
    let mut notes = Vec::new();
    for (name, x) in [("M", &c.m), ("N", &c.n), ("k", &c.k)] {
        if let Some((e, _)) = ring
            .tail()
            .iter()
            .find(|(e, _)| x.eval(*e).is_sign_negative())
        {
            notes.push(format!(
                "{name} is negative at eps={e:e} ({:e}); checked as supplied",
                x.eval_f64(*e)
            ));
        }
    }
    notes
}

/// Estimates `M`, `N` from sampled ratios and `k` from the left side of
/// the third hypothesis, all inflated by [`SAFETY_FACTOR`].
fn estimate<S: Scalar>(samples: &[EpsSample<S>]) -> Constants<S> {
    let factor = S::from_f64(SAFETY_FACTOR);
    let mut ms = Vec::new();
    let mut ns = Vec::new();
    let mut ks = Vec::new();
    for s in samples {
        let mut m = S::zero();
        let mut n = S::zero();
        for (u, v) in &s.pairs {
            let (l8, sep) = lhs8(u, v);
            if sep.is_zero() {
                continue;
            }
            m = m.max_of(&(l8 / sep.clone()));
            if let Some(l9) = lhs9(u, v) {
                n = n.max_of(&(l9 / sep));
            }
        }
        let m = m * factor.clone();
        let n = n * factor.clone();
        let k = s
            .pairs
            .iter()
            .flat_map(|(u, v)| [u, v])
            .chain([&s.center])
            .filter_map(|p| p.inv_norm.clone())
            .map(|inv| m.clone() * inv + n.clone())
            .fold(S::zero(), |a, b| a.max_of(&b))
            * factor.clone();
        ms.push((s.eps, m));
        ns.push((s.eps, n));
        ks.push((s.eps, k));
    }
    Constants {
        m: GenNum::tabulated(ms).with_label("M"),
        n: GenNum::tabulated(ns).with_label("N"),
        k: GenNum::tabulated(ks).with_label("k"),
    }
}

/// Checks the five Ben-Israel hypotheses for `f` on `B_r(x0)` by sampling
/// `pairs` point pairs per tail ε.
///
/// Without `constants`, `M`, `N`, `k` are estimated from one sample set and
/// verified on an independent one. Passing verdicts are sampled passes.
pub fn certify_ben_israel<S: Scalar>(
    ring: &Ring<S>,
    f: &GenFunc<S>,
    x0: &GenVec<S>,
    r: &GenNum<S>,
    constants: Option<Constants<S>>,
    opts: &CertifyOptions,
) -> Result<BenIsraelCertificate<S>> {
    if f.dom_dim() != f.cod_dim() || f.dom_dim() != x0.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dom_dim(),
            found: x0.dim(),
        });
    }
    if opts.pairs == 0 {
        return Err(Error::InvalidArgument("pairs must be positive".into()));
    }
    if !(opts.big_r > 0.0) {
        return Err(Error::InvalidArgument("R must be positive".into()));
    }
    let sample_all = |seed: u64| -> Result<Vec<EpsSample<S>>> {
        ring.tail()
            .iter()
            .map(|(e, _)| sample_at(f, x0, r, *e, opts.pairs, seed))
            .collect()
    };
    let first = sample_all(opts.seed)?;

    let mut invertibility = HypothesisCheck::new();
    let mut notes = Vec::new();
    let mut singular_eps = 0;
    for s in &first {
        invertibility.checked += 1;
        let mut probes: Vec<&Probe<S>> = vec![&s.center];
        probes.extend(s.pairs.iter().flat_map(|(u, v)| [u, v]));
        if let Some(point) = find_singular(f, s.eps, &probes) {
            let point = to_f64s(&point);
            if opts.singular_policy == SingularPolicy::Abort {
                return Err(Error::NotInvertibleInBall { point, eps: s.eps });
            }
            singular_eps += 1;
            invertibility.fail(Witness {
                eps: s.eps,
                u: Some(point),
                v: None,
                lhs: s.center.det.to_f64(),
                rhs: 0.0,
            });
        }
    }
    if singular_eps > 0 {
        notes.push(format!(
            "df is singular inside the ball at {singular_eps} of {} tail samples",
            first.len()
        ));
    }

    let (consts, estimated, samples) = match constants {
        Some(c) => {
            notes.extend(sign_notes(ring, &c));
            (c, false, first)
        }
        None => {
            let c = estimate(&first);
            (c, true, sample_all(opts.seed.wrapping_add(1))?)
        }
    };

    let mut h8 = HypothesisCheck::new();
    let mut h9 = HypothesisCheck::new();
    let mut h10 = HypothesisCheck::new();
    let mut jacob = HypothesisCheck::new();
    for s in &samples {
        let eps = s.eps;
        let (m, n, k) = (consts.m.eval(eps), consts.n.eval(eps), consts.k.eval(eps));
        let pair_witness = |u: &Probe<S>, v: &Probe<S>| Witness {
            eps,
            u: Some(to_f64s(&u.x)),
            v: Some(to_f64s(&v.x)),
            lhs: 0.0,
            rhs: 0.0,
        };
        for (u, v) in &s.pairs {
            let (l8, sep) = lhs8(u, v);
            h8.record(&l8, &(m.clone() * sep.clone()), || pair_witness(u, v));
            match lhs9(u, v) {
                Some(l9) if !u.singular() && !v.singular() => {
                    h9.record(&l9, &(n.clone() * sep), || pair_witness(u, v))
                }
                _ => h9.skipped += 1,
            }
        }
        let points = s.pairs.iter().flat_map(|(u, v)| [u, v]).chain([&s.center]);
        for p in points {
            match &p.inv_norm {
                Some(inv) => h10.record(&(m.clone() * inv.clone() + n.clone()), &k, || Witness {
                    eps,
                    u: Some(to_f64s(&p.x)),
                    v: None,
                    lhs: 0.0,
                    rhs: 0.0,
                }),
                None => h10.skipped += 1,
            }
        }
        let rhs = (S::one() - k.clone()) * s.r.clone();
        let at_eps = || Witness {
            eps,
            u: None,
            v: None,
            lhs: 0.0,
            rhs: 0.0,
        };
        match &s.center.inv_norm {
            Some(inv) => {
                let lhs = inv.clone() * linalg::euclid(&s.center.fx);
                jacob.record(&lhs, &rhs, at_eps);
            }
            None => {
                jacob.checked += 1;
                jacob.fail(Witness {
                    lhs: f64::INFINITY,
                    rhs: rhs.to_f64(),
                    ..at_eps()
                });
            }
        }
    }
    if h9.skipped + h10.skipped > 0 {
        notes.push(format!(
            "skipped {} pair checks and {} point checks at singular samples",
            h9.skipped, h10.skipped
        ));
    }

    let mut h10bis = HypothesisCheck::new();
    h10bis.checked = 1;
    let k_fit = ring.leading_order(&consts.k).ok();
    let pointwise = ring.tail().iter().find(|(e, rho)| {
        let k = consts.k.eval(*e);
        !(k <= rho_pow(rho, opts.big_r))
    });
    let witness_at = |e: f64, rho: &S| Witness {
        eps: e,
        u: None,
        v: None,
        lhs: consts.k.eval_f64(e),
        rhs: rho_pow(rho, opts.big_r).to_f64(),
    };
    match k_fit {
        Some(fit) if fit.exponent < opts.big_r - K_FIT_TOLERANCE => {
            let (e, rho) = pointwise.unwrap_or(&ring.tail()[0]);
            h10bis.fail(witness_at(*e, rho));
        }
        Some(_) => {
            if let Some((e, _)) = pointwise {
                notes.push(format!(
                    "k exceeds drho^R pointwise at eps={e:e}; fitted exponent is within tolerance"
                ));
            }
        }
        None => {
            if ring
                .tail()
                .iter()
                .any(|(e, _)| !consts.k.eval(*e).is_zero())
            {
                let (e, rho) = &ring.tail()[0];
                h10bis.fail(witness_at(*e, rho));
            }
        }
    }
    if let Some((e, _)) = ring
        .tail()
        .iter()
        .find(|(e, _)| !(consts.k.eval(*e) < S::one()))
    {
        notes.push(format!("k_eps >= 1 at eps={e:e}"));
    }

    let verdicts = Verdicts {
        h8,
        h9,
        h10,
        h10bis,
        jacob,
    };
    let ball_check = verdicts
        .all_passed()
        .then(|| newton_ball_check(ring, f, x0, r));
    Ok(BenIsraelCertificate {
        x0: x0.clone(),
        r: r.clone(),
        m: consts.m,
        n: consts.n,
        k: consts.k,
        big_r: opts.big_r,
        estimated,
        verdicts,
        invertibility,
        k_fit,
        pairs: opts.pairs,
        seed: opts.seed,
        notes,
        ball_check,
    })
}

/// Runs Newton from `x0` and checks that every iterate stays in `B_r(x0)`.
pub fn newton_ball_check<S: Scalar>(
    ring: &Ring<S>,
    f: &GenFunc<S>,
    x0: &GenVec<S>,
    r: &GenNum<S>,
) -> BallCheck {
    match newton_solve(ring, f, x0, &NewtonOptions::default()) {
        Ok(res) => {
            let inside = ring.tail().iter().all(|(e, _)| {
                let (c, re) = (x0.eval(*e), r.eval(*e));
                res.iterates
                    .iter()
                    .all(|x| linalg::euclid(&diff(&x.eval(*e), &c)) < re)
            });
            BallCheck {
                converged: res.converged,
                iterates: res.iterates.len(),
                inside,
                error: None,
            }
        }
        Err(e) => BallCheck {
            converged: false,
            iterates: 0,
            inside: false,
            error: Some(e.to_string()),
        },
    }
}
