use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gsf::GenFunc;
use crate::linalg::{self, GenVec};
use crate::ring::Ring;
use crate::scalar::Scalar;

/// Damping factors tried in order for `x ← (1−λ)x + λ f̄(x)`.
pub const DAMPING_SCHEDULE: [f64; 4] = [1.0, 0.5, 0.25, 0.1];
/// Points per axis of the fallback grid scan.
pub const GRID_POINTS: usize = 33;
const NEWTON_STEPS: usize = 60;
const ZOOM_ROUNDS: usize = 40;
const ZOOM_POINTS: usize = 9;

#[derive(Debug, Clone)]
pub struct BrouwerOptions {
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
    /// Iterations per damping factor and start.
    pub max_iter: usize,
}

impl Default for BrouwerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_restarts: 8,
            seed: 0,
            max_iter: 200,
        }
    }
}

/// How the fixed point at one ε was found.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Method {
    /// The centre of the cube already was one.
    Probe,
    Damped {
        lambda: f64,
        restart: usize,
    },
    GridScan,
}

#[derive(Debug, Clone)]
pub struct BrouwerResult<S> {
    pub fixed_point: GenVec<S>,
    /// Max over the tail of `|f̄_ε(x_ε) − x_ε|`.
    pub per_eps_residual: f64,
    /// Clamping changed `f` at the fixed point on some tail sample.
    pub clamped: bool,
    pub methods: Vec<(f64, Method)>,
}

struct Search<'a, S> {
    f: &'a GenFunc<S>,
    eps: f64,
    d: usize,
    tol: S,
}

impl<S: Scalar> Search<'_, S> {
    fn residual(&self, x: &[S]) -> Option<S> {
        let y = self.f.value_at(self.eps, x).ok()?;
        let r: Vec<S> = y.into_iter().zip(x).map(|(a, b)| a - b.clone()).collect();
        let r = linalg::euclid(&r);
        r.is_finite().then_some(r)
    }

    fn damped(&self, start: &[S], lambda: f64, iters: usize, best: &mut (Vec<S>, S)) -> bool {
        let lam = S::from_f64(lambda);
        let keep = S::one() - lam.clone();
        let mut x = start.to_vec();
        for _ in 0..iters {
            let Ok(y) = self.f.value_at(self.eps, &x) else {
                return false;
            };
            x = x
                .iter()
                .zip(y)
                .map(|(a, b)| keep.clone() * a.clone() + lam.clone() * b)
                .collect();
            if let Some(r) = self.residual(&x) {
                if r < best.1 {
                    *best = (x.clone(), r.clone());
                }
                if r <= self.tol {
                    return true;
                }
            }
        }
        false
    }

    /// Newton on `f̄(x) − x` with backtracking, projected onto the cube.
    fn polish(&self, best: &mut (Vec<S>, S)) -> bool {
        let d = self.d;
        for _ in 0..NEWTON_STEPS {
            if best.1 <= self.tol {
                return true;
            }
            let Ok((y, mut jac)) = self.f.jacobian_at(self.eps, &best.0) else {
                return false;
            };
            for i in 0..d {
                jac[i * d + i] = jac[i * d + i].clone() - S::one();
            }
            let rhs: Vec<S> = best.0.iter().zip(y).map(|(a, b)| a.clone() - b).collect();
            let Some(step) = linalg::solve(&jac, d, &rhs) else {
                return false;
            };
            let mut t = S::one();
            let mut improved = false;
            for _ in 0..30 {
                let cand: Vec<S> = best
                    .0
                    .iter()
                    .zip(&step)
                    .map(|(a, s)| clip(a.clone() + t.clone() * s.clone()))
                    .collect();
                if let Some(r) = self.residual(&cand) {
                    if r < best.1 {
                        *best = (cand, r);
                        improved = true;
                        break;
                    }
                }
                t = t * S::from_f64(0.5);
            }
            if !improved {
                return best.1 <= self.tol;
            }
        }
        best.1 <= self.tol
    }

    fn grid_scan(&self, best: &mut (Vec<S>, S)) {
        let n = GRID_POINTS;
        let h = 1.0 / (n - 1) as f64;
        for idx in 0..n.pow(self.d as u32) {
            let x: Vec<S> = (0..self.d)
                .map(|k| S::from_f64(((idx / n.pow(k as u32)) % n) as f64 * h))
                .collect();
            if let Some(r) = self.residual(&x) {
                if r < best.1 {
                    *best = (x, r);
                }
            }
        }
    }

    /// Repeated local grids around the best point, shrinking each round.
    fn zoom(&self, best: &mut (Vec<S>, S)) {
        let n = ZOOM_POINTS;
        let mut h = S::from_f64(1.0 / (GRID_POINTS - 1) as f64);
        for _ in 0..ZOOM_ROUNDS {
            if best.1 <= self.tol {
                return;
            }
            let centre = best.0.clone();
            for idx in 0..n.pow(self.d as u32) {
                let x: Vec<S> = (0..self.d)
                    .map(|k| {
                        let j = ((idx / n.pow(k as u32)) % n) as f64;
                        let off = S::from_f64(2.0 * j / (n - 1) as f64 - 1.0);
                        clip(centre[k].clone() + off * h.clone())
                    })
                    .collect();
                if let Some(r) = self.residual(&x) {
                    if r < best.1 {
                        *best = (x, r);
                    }
                }
            }
            h = h * S::from_f64(0.25);
        }
    }

    fn run(&self, opts: &BrouwerOptions) -> std::result::Result<(Vec<S>, S, Method), f64> {
        let centre = vec![S::from_f64(0.5); self.d];
        let inf = S::from_f64(f64::INFINITY);
        let mut best = (
            centre.clone(),
            self.residual(&centre).unwrap_or(inf.clone()),
        );
        if best.1 <= self.tol {
            return Ok((best.0, best.1, Method::Probe));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ self.eps.to_bits());
        for restart in 0..=opts.max_restarts {
            let start: Vec<S> = if restart == 0 {
                centre.clone()
            } else {
                (0..self.d)
                    .map(|_| S::from_f64(rng.random::<f64>()))
                    .collect()
            };
            for lambda in DAMPING_SCHEDULE {
                let mut local = (start.clone(), inf.clone());
                let done = self.damped(&start, lambda, opts.max_iter, &mut local)
                    || (local.1 < S::from_f64(1e-3) && self.polish(&mut local));
                if local.1 < best.1 {
                    best = local.clone();
                }
                if done {
                    return Ok((local.0, local.1, Method::Damped { lambda, restart }));
                }
            }
        }
        self.grid_scan(&mut best);
        if self.polish(&mut best) {
            return Ok((best.0, best.1, Method::GridScan));
        }
        self.zoom(&mut best);
        if self.polish(&mut best) || best.1 <= self.tol {
            return Ok((best.0, best.1, Method::GridScan));
        }
        Err(best.1.to_f64())
    }
}

fn clip<S: Scalar>(x: S) -> S {
    x.max_of(&S::zero()).min_of(&S::one())
}

/// Finds a fixed point of the clamped representatives `f̄_ε` on `[0,1]^d`
/// at every tail ε (and lazily at any other ε the result is evaluated at).
pub fn brouwer_fixed_point<S: Scalar>(
    ring: &Ring<S>,
    f: &GenFunc<S>,
    opts: &BrouwerOptions,
) -> Result<BrouwerResult<S>> {
    let d = f.dom_dim();
    if d == 0 || d > 3 {
        return Err(Error::InvalidArgument(format!(
            "fixed-point search supports 1 to 3 dimensions, got {d}"
        )));
    }
    if f.cod_dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: f.cod_dim(),
        });
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    let fbar = f.clamped();
    let mut solved = HashMap::new();
    let mut methods = Vec::new();
    let mut worst = 0.0f64;
    let mut clamped = false;
    for &(eps, _) in ring.tail() {
        let search = Search {
            f: &fbar,
            eps,
            d,
            tol: S::from_f64(opts.tol),
        };
        let (x, r, method) = search
            .run(opts)
            .map_err(|best_residual| Error::NoFixedPointFound { eps, best_residual })?;
        worst = worst.max(r.to_f64());
        if let Ok(raw) = f.value_at(eps, &x) {
            clamped |= raw.iter().any(|v| *v < S::zero() || *v > S::one());
        }
        methods.push((eps, method));
        solved.insert(eps.to_bits(), x);
    }
    let solved = Arc::new(solved);
    let opts_lazy = opts.clone();
    let fixed_point = GenVec::from_shared(d, move |eps| {
        if let Some(x) = solved.get(&eps.to_bits()) {
            return x.clone();
        }
        let search = Search {
            f: &fbar,
            eps,
            d,
            tol: S::from_f64(opts_lazy.tol),
        };
        search
            .run(&opts_lazy)
            .map(|(x, _, _)| x)
            .unwrap_or_else(|_| vec![S::from_f64(f64::NAN); d])
    });
    Ok(BrouwerResult {
        fixed_point,
        per_eps_residual: worst,
        clamped,
        methods,
    })
}
