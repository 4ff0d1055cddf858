//! Vectors and matrices over the ring, evaluated entry by entry per ε.

use crate::error::{Error, Result};
use crate::net::{GenNum, SharedNet};
use crate::ring::Ring;
use crate::scalar::Scalar;

/// A point of `ρℝ̃^d`.
#[derive(Debug, Clone)]
pub struct GenVec<S> {
    comps: Vec<GenNum<S>>,
}

impl<S: Scalar> GenVec<S> {
    pub fn new(comps: Vec<GenNum<S>>) -> Self {
        Self { comps }
    }

    pub fn from_f64s(values: &[f64]) -> Self {
        Self::new(values.iter().map(|&v| GenNum::constant(v)).collect())
    }

    pub fn scalar(x: GenNum<S>) -> Self {
        Self::new(vec![x])
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new((0..dim).map(|_| GenNum::zero()).collect())
    }

    /// Vector whose components are computed together per ε.
    pub fn from_shared<F>(dim: usize, f: F) -> Self
    where
        F: Fn(f64) -> Vec<S> + Send + Sync + 'static,
    {
        let shared = SharedNet::new(f);
        Self::new((0..dim).map(|i| shared.component(i)).collect())
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn components(&self) -> &[GenNum<S>] {
        &self.comps
    }

    pub fn get(&self, i: usize) -> &GenNum<S> {
        &self.comps[i]
    }

    pub fn eval(&self, eps: f64) -> Vec<S> {
        self.comps.iter().map(|c| c.eval(eps)).collect()
    }

    pub fn eval_f64(&self, eps: f64) -> Vec<f64> {
        self.comps.iter().map(|c| c.eval_f64(eps)).collect()
    }

    /// Euclidean norm per ε.
    pub fn norm(&self) -> GenNum<S> {
        let v = self.clone();
        GenNum::from_fn(move |e| euclid(&v.eval(e)))
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self::new(
            self.comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self::new(
            self.comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    pub fn scale(&self, c: &GenNum<S>) -> Self {
        Self::new(self.comps.iter().map(|a| a * c).collect())
    }

    /// `|self − other|` per ε.
    pub fn distance(&self, other: &Self) -> Result<GenNum<S>> {
        Ok(self.sub(other)?.norm())
    }
}

/// A `rows×cols` matrix of generalized numbers, row-major.
#[derive(Debug, Clone)]
pub struct GenMat<S> {
    rows: usize,
    cols: usize,
    entries: Vec<GenNum<S>>,
}

impl<S: Scalar> GenMat<S> {
    pub fn new(rows: usize, cols: usize, entries: Vec<GenNum<S>>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: entries.len(),
            });
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_f64s(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            values.iter().map(|&v| GenNum::constant(v)).collect(),
        )
    }

    pub fn identity(n: usize) -> Self {
        let entries = (0..n * n)
            .map(|k| {
                if k / n == k % n {
                    GenNum::one()
                } else {
                    GenNum::zero()
                }
            })
            .collect();
        Self {
            rows: n,
            cols: n,
            entries,
        }
    }

    pub fn diag(d: Vec<GenNum<S>>) -> Self {
        let n = d.len();
        let mut entries: Vec<GenNum<S>> = (0..n * n).map(|_| GenNum::zero()).collect();
        for (i, x) in d.into_iter().enumerate() {
            entries[i * n + i] = x;
        }
        Self {
            rows: n,
            cols: n,
            entries,
        }
    }

    /// Matrix whose entries are computed together per ε (row-major).
    pub fn from_shared<F>(rows: usize, cols: usize, f: F) -> Self
    where
        F: Fn(f64) -> Vec<S> + Send + Sync + 'static,
    {
        let shared = SharedNet::new(f);
        Self {
            rows,
            cols,
            entries: (0..rows * cols).map(|i| shared.component(i)).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &GenNum<S> {
        &self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[GenNum<S>] {
        &self.entries
    }

    /// Row-major entry values at `eps`.
    pub fn eval(&self, eps: f64) -> Vec<S> {
        self.entries.iter().map(|x| x.eval(eps)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                entries.push(self.get(i, j).clone());
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            entries,
        }
    }

    pub fn apply(&self, v: &GenVec<S>) -> Result<GenVec<S>> {
        if v.dim() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: v.dim(),
            });
        }
        let (a, x) = (self.clone(), v.clone());
        let (rows, cols) = (self.rows, self.cols);
        Ok(GenVec::from_shared(rows, move |e| {
            mat_vec(&a.eval(e), rows, cols, &x.eval(e))
        }))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let (a, b) = (self.clone(), other.clone());
        let (n, k, m) = (self.rows, self.cols, other.cols);
        Ok(Self::from_shared(n, m, move |e| {
            mat_mat(&a.eval(e), &b.eval(e), n, k, m)
        }))
    }

    pub fn det(&self) -> Result<GenNum<S>> {
        self.check_square()?;
        let (a, n) = (self.clone(), self.rows);
        Ok(GenNum::from_fn(move |e| det(&a.eval(e), n)))
    }

    fn check_square(&self) -> Result<()> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: self.cols,
            });
        }
        Ok(())
    }

    /// Checks ring invertibility of the matrix: `|det A|` strictly positive
    /// on the tail and a usable pivot at every grid sample.
    pub fn check_invertible(&self, ring: &Ring<S>) -> Result<()> {
        self.check_square()?;
        let m_max = ring.settings().m_max;
        let det = self.det()?.abs();
        let cert = ring.is_strictly_positive(&det, m_max);
        if !cert.is_yes() {
            return Err(Error::NotInvertibleInRing {
                eps: cert.eps.unwrap_or(ring.grid().eps_min()),
                m_max,
            });
        }
        for &e in ring.grid().tail() {
            if inverse(&self.eval(e), self.rows).is_none() {
                return Err(Error::NotInvertibleInRing { eps: e, m_max });
            }
        }
        Ok(())
    }

    /// Per-ε inverse after the ring invertibility check. Off-grid samples
    /// where elimination breaks down evaluate to NaN.
    pub fn inverse(&self, ring: &Ring<S>) -> Result<Self> {
        self.check_invertible(ring)?;
        let (a, n) = (self.clone(), self.rows);
        Ok(Self::from_shared(n, n, move |e| {
            inverse(&a.eval(e), n).unwrap_or_else(|| vec![S::from_f64(f64::NAN); n * n])
        }))
    }

    /// Spectral norm per ε.
    pub fn operator_norm(&self) -> GenNum<S> {
        let (a, r, c) = (self.clone(), self.rows, self.cols);
        GenNum::from_fn(move |e| spectral_norm(&a.eval(e), r, c))
    }
}

pub fn euclid<S: Scalar>(v: &[S]) -> S {
    v.iter()
        .fold(S::zero(), |acc, x| acc + x.clone() * x.clone())
        .sqrt()
}

pub fn mat_vec<S: Scalar>(a: &[S], rows: usize, cols: usize, x: &[S]) -> Vec<S> {
    (0..rows)
        .map(|i| {
            (0..cols).fold(S::zero(), |acc, j| {
                acc + a[i * cols + j].clone() * x[j].clone()
            })
        })
        .collect()
}

pub fn mat_mat<S: Scalar>(a: &[S], b: &[S], n: usize, k: usize, m: usize) -> Vec<S> {
    let mut out = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            out.push((0..k).fold(S::zero(), |acc, l| {
                acc + a[i * k + l].clone() * b[l * m + j].clone()
            }));
        }
    }
    out
}

/// LU factorization with partial pivoting. Returns the packed factors, the
/// row permutation and the permutation sign; `None` when a pivot falls to
/// or below [`Scalar::pivot_floor`].
fn lu<S: Scalar>(a: &[S], n: usize) -> Option<(Vec<S>, Vec<usize>, bool)> {
    let mut m = a.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut odd = false;
    let floor = S::pivot_floor();
    for k in 0..n {
        let mut p = k;
        let mut best = m[k * n + k].abs();
        for i in k + 1..n {
            let v = m[i * n + k].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if !(best > floor) {
            return None;
        }
        if p != k {
            for j in 0..n {
                m.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
            odd = !odd;
        }
        let pivot = m[k * n + k].clone();
        for i in k + 1..n {
            let f = m[i * n + k].clone() / pivot.clone();
            for j in k + 1..n {
                let t = m[k * n + j].clone();
                m[i * n + j] = m[i * n + j].clone() - f.clone() * t;
            }
            m[i * n + k] = f;
        }
    }
    Some((m, perm, odd))
}

/// Determinant by elimination; exactly zero when a pivot vanishes.
pub fn det<S: Scalar>(a: &[S], n: usize) -> S {
    match n {
        0 => S::one(),
        1 => a[0].clone(),
        2 => a[0].clone() * a[3].clone() - a[1].clone() * a[2].clone(),
        _ => match lu(a, n) {
            None => S::zero(),
            Some((m, _, odd)) => {
                let d = (0..n).fold(S::one(), |acc, i| acc * m[i * n + i].clone());
                if odd {
                    -d
                } else {
                    d
                }
            }
        },
    }
}

/// Solves `A x = b`; `None` for a numerically singular `A`.
pub fn solve<S: Scalar>(a: &[S], n: usize, b: &[S]) -> Option<Vec<S>> {
    let (m, perm, _) = lu(a, n)?;
    Some(lu_solve(&m, &perm, n, b))
}

fn lu_solve<S: Scalar>(m: &[S], perm: &[usize], n: usize, b: &[S]) -> Vec<S> {
    let mut y: Vec<S> = perm.iter().map(|&p| b[p].clone()).collect();
    for i in 0..n {
        for j in 0..i {
            let t = m[i * n + j].clone() * y[j].clone();
            y[i] = y[i].clone() - t;
        }
    }
    for i in (0..n).rev() {
        for j in i + 1..n {
            let t = m[i * n + j].clone() * y[j].clone();
            y[i] = y[i].clone() - t;
        }
        y[i] = y[i].clone() / m[i * n + i].clone();
    }
    y
}

/// Inverse by elimination with partial pivoting.
pub fn inverse<S: Scalar>(a: &[S], n: usize) -> Option<Vec<S>> {
    let (m, perm, _) = lu(a, n)?;
    let mut out = vec![S::zero(); n * n];
    for j in 0..n {
        let mut e = vec![S::zero(); n];
        e[j] = S::one();
        let col = lu_solve(&m, &perm, n, &e);
        for (i, v) in col.into_iter().enumerate() {
            out[i * n + j] = v;
        }
    }
    Some(out)
}

/// Largest singular value: closed form for `AᵀA` up to 2×2, cyclic Jacobi
/// beyond.
pub fn spectral_norm<S: Scalar>(a: &[S], rows: usize, cols: usize) -> S {
    if rows == 0 || cols == 0 {
        return S::zero();
    }
    let mut g = vec![S::zero(); cols * cols];
    for i in 0..cols {
        for j in 0..cols {
            g[i * cols + j] = (0..rows).fold(S::zero(), |acc, k| {
                acc + a[k * cols + i].clone() * a[k * cols + j].clone()
            });
        }
    }
    let lambda = match cols {
        1 => g[0].clone(),
        2 => {
            let two = S::one() + S::one();
            let (p, q, r) = (g[0].clone(), g[1].clone(), g[3].clone());
            let mean = (p.clone() + r.clone()) / two.clone();
            let half = (p - r) / two;
            mean + (half.clone() * half + q.clone() * q).sqrt()
        }
        _ => jacobi_eigenvalues(g, cols)
            .into_iter()
            .fold(S::zero(), |m, v| m.max_of(&v)),
    };
    lambda.max_of(&S::zero()).sqrt()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues<S: Scalar>(mut g: Vec<S>, n: usize) -> Vec<S> {
    let tol = S::from_f64(S::unit_roundoff().max(1e-300));
    for _sweep in 0..100 {
        let off = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .fold(S::zero(), |acc, (i, j)| {
                acc + g[i * n + j].clone() * g[i * n + j].clone()
            });
        let diag = (0..n).fold(S::zero(), |acc, i| {
            acc + g[i * n + i].clone() * g[i * n + i].clone()
        });
        if off <= tol.clone() * tol.clone() * diag || off.is_zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = g[p * n + q].clone();
                if apq.is_zero() {
                    continue;
                }
                let two = S::one() + S::one();
                let theta = (g[q * n + q].clone() - g[p * n + p].clone()) / (two * apq);
                let sign = if theta.is_sign_negative() {
                    -S::one()
                } else {
                    S::one()
                };
                let t = sign / (theta.abs() + (theta.clone() * theta + S::one()).sqrt());
                let c = S::one() / (t.clone() * t.clone() + S::one()).sqrt();
                let s = t * c.clone();
                for k in 0..n {
                    let gkp = g[k * n + p].clone();
                    let gkq = g[k * n + q].clone();
                    g[k * n + p] = c.clone() * gkp.clone() - s.clone() * gkq.clone();
                    g[k * n + q] = s.clone() * gkp + c.clone() * gkq;
                }
                for k in 0..n {
                    let gpk = g[p * n + k].clone();
                    let gqk = g[q * n + k].clone();
                    g[p * n + k] = c.clone() * gpk.clone() - s.clone() * gqk.clone();
                    g[q * n + k] = s.clone() * gpk + c.clone() * gqk;
                }
            }
        }
    }
    (0..n).map(|i| g[i * n + i].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring() -> Ring<f64> {
        Ring::colombeau()
    }

    #[test]
    fn norms() {
        let v = GenVec::<f64>::from_f64s(&[3.0, 4.0]);
        assert_eq!(v.norm().eval(0.1), 5.0);
        let r = ring();
        let w = GenVec::new(vec![r.drho(), GenNum::zero()]);
        assert_eq!(w.norm().eval(0.01), 0.01);
    }

    #[test]
    fn apply_and_mismatch() {
        let a = GenMat::<f64>::from_f64s(2, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let v = GenVec::from_f64s(&[1.0, 1.0]);
        assert_eq!(a.apply(&v).unwrap().eval(0.1), vec![3.0, 7.0]);
        assert!(matches!(
            a.apply(&GenVec::from_f64s(&[1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn diagonal_inverse() {
        let r = ring();
        let a = GenMat::diag(vec![r.drho(), r.drho_pow(-1.0)]);
        let inv = a.inverse(&r).unwrap();
        let e = 1e-6;
        assert!((inv.get(0, 0).eval(e) - 1e6).abs() < 1e-4);
        assert!((inv.get(1, 1).eval(e) - 1e-6).abs() < 1e-18);
    }

    #[test]
    fn singular_rejected() {
        let r = ring();
        let a = GenMat::<f64>::from_f64s(2, 2, &[1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(
            a.inverse(&r),
            Err(Error::NotInvertibleInRing { .. })
        ));
    }

    #[test]
    fn spectral_norm_examples() {
        assert_eq!(spectral_norm(&[2.0, 0.0, 0.0, 3.0], 2, 2), 3.0);
        assert_eq!(spectral_norm(&[0.0; 4], 2, 2), 0.0);
        let s = spectral_norm(&[1.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 2.0], 3, 3);
        assert!((s - 5.0).abs() < 1e-12);
    }

    #[test]
    fn lu_det_matches_closed_form() {
        let a = [2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0];
        // 2(12-1) - 1(4-0) = 18
        assert!((det(&a, 3) - 18.0).abs() < 1e-12);
        let x = solve(&a, 3, &[1.0, 2.0, 3.0]).unwrap();
        let back = mat_vec(&a, 3, 3, &x);
        for (b, t) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((b - t).abs() < 1e-12);
        }
    }
}
