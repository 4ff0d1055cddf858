//! Arithmetic, order and topology of generalized numbers, decided on the
//! tail of an [`EpsGrid`].
//!
//! Every predicate here is a semi-decision: a finite grid can certify that
//! an inequality holds at all sampled small ε, never that it holds for all
//! small ε. Outcomes that the samples cannot settle come back as
//! [`Verdict::Undecided`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::Gauge;
use crate::grid::EpsGrid;
use crate::net::GenNum;
use crate::order::{fit_log_log, OrderFit};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    /// Highest power tried by the negligibility test.
    pub n_max: u32,
    /// Highest power tried by the strict-positivity test.
    pub m_max: u32,
    /// Highest `N` tried when certifying `|x| ≤ ρ^−N`.
    pub moderate_n_max: u32,
    /// `R` in the finite-nonzero band `[1/R, R]`.
    pub finite_bound: f64,
    /// Relative tolerance for reading off a near-standard value.
    pub near_standard_tol: f64,
    /// Fits with a larger RMS residual are not power laws.
    pub residual_limit: f64,
    /// Relative margin a failure must exceed to count as certified.
    pub margin: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            n_max: 10,
            m_max: 40,
            moderate_n_max: 60,
            finite_bound: 1e4,
            near_standard_tol: 1e-6,
            residual_limit: 0.1,
            margin: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    CertifiedYes,
    CertifiedNo,
    Undecided,
}

/// A verdict with the exponent and sample that decided it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub verdict: Verdict,
    /// The deciding power (`n` for negligibility, `m` for positivity, `N`
    /// for moderateness).
    pub power: Option<u32>,
    /// First tail sample at which the deciding inequality failed.
    pub eps: Option<f64>,
}

impl Certificate {
    pub fn is_yes(&self) -> bool {
        self.verdict == Verdict::CertifiedYes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RingOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Leq,
    Lt,
    Geq,
    Gt,
    ApproxEqual,
    Incomparable,
}

impl Relation {
    /// `x ≤ y` follows from this relation.
    pub fn implies_leq(self) -> bool {
        matches!(self, Relation::Leq | Relation::Lt | Relation::ApproxEqual)
    }

    pub fn implies_geq(self) -> bool {
        matches!(self, Relation::Geq | Relation::Gt | Relation::ApproxEqual)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub relation: Relation,
    /// Sign changes of `y_ε − x_ε` along the tail (zeros skipped).
    pub sign_changes: usize,
    /// Witness `m` for `lt`/`gt`.
    pub m: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Infinitesimal,
    FiniteNonzero,
    Infinite,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub kind: Kind,
    pub near_standard_value: Option<f64>,
    pub confidence: f64,
    pub fit: Option<OrderFit>,
    /// Every tail sample is exactly zero.
    pub exactly_negligible: bool,
}

/// Outcome of the sharp-convergence test for one `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpConvergence {
    pub q: f64,
    pub passed: bool,
    /// Last index whose distance to the limit is not below `dρ^q`;
    /// `None` when every term passes.
    pub last_failure: Option<usize>,
    /// `(n, ε)` of the last term's first failing sample when not passed.
    pub witness: Option<(usize, f64)>,
}

/// `ρ^q` at one ε, with integral `q` through exact integer powers.
pub fn rho_pow<S: Scalar>(rho: &S, q: f64) -> S {
    if q.fract() == 0.0 && q.abs() < i32::MAX as f64 {
        rho.powi(q as i32)
    } else {
        rho.powf(&S::from_f64(q))
    }
}

/// The ring `ρℝ̃` realized over one gauge and one grid.
#[derive(Debug, Clone)]
pub struct Ring<S: Scalar> {
    gauge: Gauge<S>,
    grid: EpsGrid,
    settings: Settings,
    tail: Vec<(f64, S)>,
}

impl<S: Scalar> Ring<S> {
    pub fn new(gauge: Gauge<S>, grid: EpsGrid) -> Self {
        Self::with_settings(gauge, grid, Settings::default())
    }

    pub fn with_settings(gauge: Gauge<S>, grid: EpsGrid, settings: Settings) -> Self {
        let tail = grid.tail().iter().map(|&e| (e, gauge.eval(e))).collect();
        Self {
            gauge,
            grid,
            settings,
            tail,
        }
    }

    /// Gauge ρ_ε = ε on the default grid.
    pub fn colombeau() -> Self {
        Self::new(Gauge::eps(), EpsGrid::default())
    }

    pub fn gauge(&self) -> &Gauge<S> {
        &self.gauge
    }

    pub fn grid(&self) -> &EpsGrid {
        &self.grid
    }

    pub fn settings(&self) -> &Settings {
        &self.settings
    }

    /// `(ε, ρ_ε)` over the tail.
    pub fn tail(&self) -> &[(f64, S)] {
        &self.tail
    }

    pub fn drho(&self) -> GenNum<S> {
        self.gauge.drho().clone()
    }

    /// `dρ^q`.
    pub fn drho_pow(&self, q: f64) -> GenNum<S> {
        let g = self.gauge.clone();
        GenNum::from_fn(move |e| rho_pow(&g.eval(e), q))
    }

    pub fn constant(&self, c: f64) -> GenNum<S> {
        GenNum::constant(c)
    }

    pub fn rho_at(&self, eps: f64) -> S {
        self.gauge.eval(eps)
    }

    pub fn ring_op(&self, x: &GenNum<S>, y: &GenNum<S>, op: RingOp) -> Result<GenNum<S>> {
        Ok(match op {
            RingOp::Add => x + y,
            RingOp::Sub => x - y,
            RingOp::Mul => x * y,
            RingOp::Div => {
                self.check_invertible(y)?;
                x.div_unchecked(y)
            }
        })
    }

    pub fn div(&self, x: &GenNum<S>, y: &GenNum<S>) -> Result<GenNum<S>> {
        self.ring_op(x, y, RingOp::Div)
    }

    pub fn recip(&self, y: &GenNum<S>) -> Result<GenNum<S>> {
        self.check_invertible(y)?;
        Ok(y.recip_unchecked())
    }

    /// Invertible iff `y > 0` or `−y > 0` is certified.
    pub fn check_invertible(&self, y: &GenNum<S>) -> Result<()> {
        let m_max = self.settings.m_max;
        let pos = self.is_strictly_positive(y, m_max);
        if pos.is_yes() || self.is_strictly_positive(&-y, m_max).is_yes() {
            return Ok(());
        }
        Err(Error::NotInvertible {
            eps: pos.eps.unwrap_or(self.grid.eps_min()),
            m_max,
        })
    }

    /// `(|x|, min(x,y), max(x,y))`.
    pub fn abs_min_max(&self, x: &GenNum<S>, y: &GenNum<S>) -> (GenNum<S>, GenNum<S>, GenNum<S>) {
        (x.abs(), x.min(y), x.max(y))
    }

    pub fn leading_order(&self, x: &GenNum<S>) -> Result<OrderFit> {
        let mut ln_rho = Vec::with_capacity(self.tail.len());
        let mut ln_x = Vec::with_capacity(self.tail.len());
        let mut zeros = 0;
        for (e, rho) in &self.tail {
            let v = x.eval(*e);
            if v.is_zero() {
                zeros += 1;
            }
            ln_rho.push(rho.ln_abs());
            ln_x.push(v.ln_abs());
        }
        if zeros == self.tail.len() {
            return Err(Error::AllZeroTail);
        }
        let usable = ln_x.iter().filter(|v| v.is_finite()).count();
        if usable < 2 {
            return Err(Error::TooFewSamples(usable));
        }
        fit_log_log(&ln_rho, &ln_x)
            .ok_or_else(|| Error::InvalidArgument("gauge is constant on the grid tail".into()))
    }

    /// `|x_ε| ≤ ρ_ε^n` for all `n ≤ n_max` at every tail sample.
    pub fn is_negligible(&self, x: &GenNum<S>, n_max: u32) -> Certificate {
        let abs: Vec<S> = self.tail.iter().map(|(e, _)| x.eval(*e).abs()).collect();
        let factor = S::from_f64(1.0 + self.settings.margin);
        let mut first_partial: Option<(u32, f64)> = None;
        for n in 1..=n_max {
            let mut all_fail = true;
            let mut first_fail = None;
            for ((e, rho), a) in self.tail.iter().zip(&abs) {
                let bound = rho_pow(rho, n as f64);
                if !(*a <= bound) {
                    first_fail.get_or_insert(*e);
                }
                if !(*a > bound * factor.clone()) {
                    all_fail = false;
                }
            }
            if all_fail {
                return Certificate {
                    verdict: Verdict::CertifiedNo,
                    power: Some(n),
                    eps: first_fail,
                };
            }
            if let Some(e) = first_fail {
                first_partial.get_or_insert((n, e));
            }
        }
        match first_partial {
            None => Certificate {
                verdict: Verdict::CertifiedYes,
                power: Some(n_max),
                eps: None,
            },
            Some((n, e)) => Certificate {
                verdict: Verdict::Undecided,
                power: Some(n),
                eps: Some(e),
            },
        }
    }

    /// Least `m ≤ m_max` with `x_ε > ρ_ε^m` on the whole tail.
    ///
    /// Certified no only when some tail sample is strictly negative; an
    /// exactly zero sample leaves the question undecided.
    pub fn is_strictly_positive(&self, x: &GenNum<S>, m_max: u32) -> Certificate {
        let vals: Vec<S> = self.tail.iter().map(|(e, _)| x.eval(*e)).collect();
        if let Some(((e, _), _)) = self
            .tail
            .iter()
            .zip(&vals)
            .find(|(_, v)| v.is_sign_negative())
        {
            return Certificate {
                verdict: Verdict::CertifiedNo,
                power: None,
                eps: Some(*e),
            };
        }
        let mut witness = None;
        for m in 1..=m_max {
            let fail = self
                .tail
                .iter()
                .zip(&vals)
                .find(|((_, rho), v)| !(**v > rho.powi(m as i32)));
            match fail {
                None => {
                    return Certificate {
                        verdict: Verdict::CertifiedYes,
                        power: Some(m),
                        eps: None,
                    }
                }
                Some(((e, _), _)) => witness = Some(*e),
            }
        }
        Certificate {
            verdict: Verdict::Undecided,
            power: Some(m_max),
            eps: witness,
        }
    }

    /// `∃N ≤ moderate_n_max: |x_ε| ≤ ρ_ε^−N` on the tail.
    pub fn is_moderate(&self, x: &GenNum<S>) -> Certificate {
        let abs: Vec<S> = self.tail.iter().map(|(e, _)| x.eval(*e).abs()).collect();
        let n_max = self.settings.moderate_n_max;
        let mut witness = None;
        for n in 0..=n_max {
            let fail = self
                .tail
                .iter()
                .zip(&abs)
                .find(|((_, rho), a)| !(a.is_finite() && **a <= rho.powi(-(n as i32))));
            match fail {
                None => {
                    return Certificate {
                        verdict: Verdict::CertifiedYes,
                        power: Some(n),
                        eps: None,
                    }
                }
                Some(((e, _), _)) => witness = Some(*e),
            }
        }
        Certificate {
            verdict: Verdict::CertifiedNo,
            power: Some(n_max),
            eps: witness,
        }
    }

    pub fn check_moderate(&self, x: &GenNum<S>) -> Result<()> {
        let c = self.is_moderate(x);
        if c.is_yes() {
            return Ok(());
        }
        Err(Error::ModerationFailure {
            eps: c.eps.unwrap_or(self.grid.eps_min()),
            n_max: self.settings.moderate_n_max,
        })
    }

    pub fn compare(&self, x: &GenNum<S>, y: &GenNum<S>) -> Comparison {
        let d = y - x;
        let sign_changes = self.sign_changes(&d);
        let n_max = self.settings.n_max;
        let m_max = self.settings.m_max;
        let make = |relation, m| Comparison {
            relation,
            sign_changes,
            m,
        };
        if self.is_negligible(&d, n_max).is_yes() {
            return make(Relation::ApproxEqual, None);
        }
        let pos = self.is_strictly_positive(&d, m_max);
        if pos.is_yes() {
            return make(Relation::Lt, pos.power);
        }
        let neg = self.is_strictly_positive(&-&d, m_max);
        if neg.is_yes() {
            return make(Relation::Gt, neg.power);
        }
        // x ≤ y up to a negligible slack: the negative part of y − x is negligible
        let zero = GenNum::zero();
        if self.is_negligible(&d.min(&zero), n_max).is_yes() {
            return make(Relation::Leq, None);
        }
        if self.is_negligible(&d.max(&zero), n_max).is_yes() {
            return make(Relation::Geq, None);
        }
        make(Relation::Incomparable, None)
    }

    fn sign_changes(&self, d: &GenNum<S>) -> usize {
        let mut last: Option<bool> = None;
        let mut changes = 0;
        for (e, _) in &self.tail {
            let v = d.eval(*e);
            if v.is_zero() || v.is_nan() {
                continue;
            }
            let neg = v.is_sign_negative();
            if let Some(prev) = last {
                if prev != neg {
                    changes += 1;
                }
            }
            last = Some(neg);
        }
        changes
    }

    pub fn classify(&self, x: &GenNum<S>) -> Classification {
        let s = &self.settings;
        let rho_min = self.gauge.eval(self.grid.eps_min()).to_f64();
        let thr = rho_min.sqrt();
        let vals: Vec<S> = self.tail.iter().map(|(e, _)| x.eval(*e)).collect();
        if vals.iter().all(|v| v.is_zero()) {
            return Classification {
                kind: Kind::Infinitesimal,
                near_standard_value: Some(0.0),
                confidence: 1.0,
                fit: None,
                exactly_negligible: true,
            };
        }
        let abs: Vec<f64> = vals.iter().map(|v| v.abs().to_f64()).collect();
        let max = abs.iter().cloned().fold(f64::NAN, f64::max);
        let min = abs.iter().cloned().fold(f64::NAN, f64::min);
        let fit = self.leading_order(x).ok();
        let confidence = fit
            .map(|f| (-f.residual / s.residual_limit).exp())
            .unwrap_or(0.0);
        let exponent = fit.map(|f| f.exponent);
        let kind = if vals.iter().any(|v| v.is_nan()) {
            Kind::Indeterminate
        } else if max <= thr && exponent.is_some_and(|a| a > 0.05) {
            Kind::Infinitesimal
        } else if min >= 1.0 / thr && exponent.is_some_and(|a| a < -0.05) {
            Kind::Infinite
        } else if min >= 1.0 / s.finite_bound && max <= s.finite_bound {
            Kind::FiniteNonzero
        } else {
            Kind::Indeterminate
        };
        let near_standard_value = match kind {
            Kind::Infinitesimal => Some(0.0),
            Kind::FiniteNonzero => self.tail_limit(&vals),
            _ => None,
        };
        Classification {
            kind,
            near_standard_value,
            confidence: if kind == Kind::Indeterminate {
                0.0
            } else {
                confidence
            },
            fit,
            exactly_negligible: false,
        }
    }

    /// The value at the smallest ε when the last three tail samples agree
    /// within the near-standard tolerance.
    fn tail_limit(&self, vals: &[S]) -> Option<f64> {
        let tol = self.settings.near_standard_tol;
        let last = vals.last()?.to_f64();
        let scale = last.abs().max(1.0);
        let k = vals.len().min(3);
        let settled = vals[vals.len() - k..]
            .iter()
            .all(|v| (v.to_f64() - last).abs() <= tol * scale);
        settled.then_some(last)
    }

    /// Sharp convergence `|x_n − l| < dρ^q` of the listed terms
    /// (`seq[n]` is `x_n`).
    pub fn sharp_converges(
        &self,
        seq: &[GenNum<S>],
        limit: &GenNum<S>,
        qs: &[f64],
    ) -> Vec<SharpConvergence> {
        let dist: Vec<Vec<S>> = seq
            .iter()
            .map(|x| {
                self.tail
                    .iter()
                    .map(|(e, _)| (x.eval(*e) - limit.eval(*e)).abs())
                    .collect()
            })
            .collect();
        qs.iter()
            .map(|&q| {
                let bounds: Vec<S> = self.tail.iter().map(|(_, r)| rho_pow(r, q)).collect();
                let first_fail = |d: &[S]| {
                    d.iter()
                        .zip(&bounds)
                        .zip(&self.tail)
                        .find(|((v, b), _)| !(*v < *b))
                        .map(|(_, (e, _))| *e)
                };
                let fails: Vec<Option<f64>> = dist.iter().map(|d| first_fail(d)).collect();
                let last_failure = fails.iter().rposition(|f| f.is_some());
                let passed = !seq.is_empty() && fails.last().is_some_and(|f| f.is_none());
                let witness = if passed || seq.is_empty() {
                    None
                } else {
                    fails.last().and_then(|f| f.map(|e| (seq.len() - 1, e)))
                };
                SharpConvergence {
                    q,
                    passed,
                    last_failure,
                    witness,
                }
            })
            .collect()
    }
}
