//! Truncated forward-mode jets: value, gradient and (optionally) Hessian.

use crate::expr::Value;
use crate::scalar::Scalar;

/// Number of variables and whether second derivatives are carried.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JetShape {
    pub n: usize,
    pub second: bool,
}

/// A second-order Taylor jet in `n` variables at one ε.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet<S> {
    pub value: S,
    pub first: Vec<S>,
    /// Row-major `n×n`, present when the shape asks for second order.
    pub second: Option<Vec<S>>,
}

impl<S: Scalar> Jet<S> {
    /// The seed jet of variable `i` taking value `x`.
    pub fn variable(shape: &JetShape, x: S, i: usize) -> Self {
        let mut first = vec![S::zero(); shape.n];
        first[i] = S::one();
        Self {
            value: x,
            first,
            second: shape.second.then(|| vec![S::zero(); shape.n * shape.n]),
        }
    }

    /// Seed jets for a point.
    pub fn seeds(shape: &JetShape, x: &[S]) -> Vec<Self> {
        x.iter()
            .enumerate()
            .map(|(i, v)| Self::variable(shape, v.clone(), i))
            .collect()
    }

    pub fn n(&self) -> usize {
        self.first.len()
    }

    fn zip(a: &[S], b: &[S], f: impl Fn(&S, &S) -> S) -> Vec<S> {
        a.iter().zip(b).map(|(x, y)| f(x, y)).collect()
    }
}

impl<S: Scalar> Value<S> for Jet<S> {
    type Shape = JetShape;

    fn constant(shape: &JetShape, c: S) -> Self {
        Self {
            value: c,
            first: vec![S::zero(); shape.n],
            second: shape.second.then(|| vec![S::zero(); shape.n * shape.n]),
        }
    }

    fn value(&self) -> &S {
        &self.value
    }

    fn tracks_derivatives(&self) -> bool {
        true
    }

    fn plus(&self, o: &Self) -> Self {
        Self {
            value: self.value.clone() + o.value.clone(),
            first: Self::zip(&self.first, &o.first, |a, b| a.clone() + b.clone()),
            second: match (&self.second, &o.second) {
                (Some(a), Some(b)) => Some(Self::zip(a, b, |x, y| x.clone() + y.clone())),
                _ => None,
            },
        }
    }

    fn minus(&self, o: &Self) -> Self {
        Self {
            value: self.value.clone() - o.value.clone(),
            first: Self::zip(&self.first, &o.first, |a, b| a.clone() - b.clone()),
            second: match (&self.second, &o.second) {
                (Some(a), Some(b)) => Some(Self::zip(a, b, |x, y| x.clone() - y.clone())),
                _ => None,
            },
        }
    }

    fn times(&self, o: &Self) -> Self {
        let (a, b) = (&self.value, &o.value);
        let n = self.n();
        let first = Self::zip(&self.first, &o.first, |ga, gb| {
            a.clone() * gb.clone() + b.clone() * ga.clone()
        });
        let second = match (&self.second, &o.second) {
            (Some(ha), Some(hb)) => {
                let mut h = Vec::with_capacity(n * n);
                for i in 0..n {
                    for j in 0..n {
                        let k = i * n + j;
                        h.push(
                            a.clone() * hb[k].clone()
                                + b.clone() * ha[k].clone()
                                + self.first[i].clone() * o.first[j].clone()
                                + o.first[i].clone() * self.first[j].clone(),
                        );
                    }
                }
                Some(h)
            }
            _ => None,
        };
        Self {
            value: a.clone() * b.clone(),
            first,
            second,
        }
    }

    fn negate(&self) -> Self {
        Self {
            value: -self.value.clone(),
            first: self.first.iter().map(|g| -g.clone()).collect(),
            second: self
                .second
                .as_ref()
                .map(|h| h.iter().map(|x| -x.clone()).collect()),
        }
    }

    fn chain(&self, f0: S, derivs: impl FnOnce() -> (S, S)) -> Self {
        let (f1, f2) = derivs();
        let n = self.n();
        let first = self.first.iter().map(|g| f1.clone() * g.clone()).collect();
        let second = self.second.as_ref().map(|h| {
            let mut out = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    out.push(
                        f2.clone() * self.first[i].clone() * self.first[j].clone()
                            + f1.clone() * h[i * n + j].clone(),
                    );
                }
            }
            out
        });
        Self {
            value: f0,
            first,
            second,
        }
    }
}
