//! Generalized numbers as memoized ε-nets.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, RwLock};

use crate::scalar::Scalar;

type NetFn<S> = dyn Fn(f64) -> S + Send + Sync;

struct Inner<S> {
    net: Box<NetFn<S>>,
    cache: RwLock<HashMap<u64, S>>,
    label: Option<String>,
}

/// A generalized number `[x_ε]`: a deterministic net ε ↦ x_ε together with
/// a cache of the samples already evaluated.
///
/// Cloning is cheap and shares the cache. The cache is keyed by the bit
/// pattern of ε, so repeated evaluation at the same ε is bitwise stable.
pub struct GenNum<S> {
    inner: Arc<Inner<S>>,
}

impl<S> Clone for GenNum<S> {
    fn clone(&self) -> Self {
        Self {
            inner: Arc::clone(&self.inner),
        }
    }
}

impl<S> fmt::Debug for GenNum<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.inner.label {
            Some(l) => write!(f, "GenNum({l})"),
            None => f.write_str("GenNum(<net>)"),
        }
    }
}

impl<S: Scalar> GenNum<S> {
    pub fn from_fn<F>(net: F) -> Self
    where
        F: Fn(f64) -> S + Send + Sync + 'static,
    {
        Self {
            inner: Arc::new(Inner {
                net: Box::new(net),
                cache: RwLock::new(HashMap::new()),
                label: None,
            }),
        }
    }

    /// Same net, new label, fresh cache.
    pub fn with_label(self, label: impl Into<String>) -> Self {
        let src = self.clone();
        Self {
            inner: Arc::new(Inner {
                net: Box::new(move |e| src.eval(e)),
                cache: RwLock::new(HashMap::new()),
                label: Some(label.into()),
            }),
        }
    }

    pub fn label(&self) -> Option<&str> {
        self.inner.label.as_deref()
    }

    pub fn constant(c: f64) -> Self {
        Self::from_scalar(S::from_f64(c))
    }

    pub fn from_scalar(c: S) -> Self {
        Self::from_fn(move |_| c.clone())
    }

    pub fn zero() -> Self {
        Self::from_scalar(S::zero())
    }

    pub fn one() -> Self {
        Self::from_scalar(S::one())
    }

    /// The raw ε net.
    pub fn eps() -> Self {
        Self::from_fn(S::from_f64)
    }

    /// A net known only at the listed ε; NaN elsewhere.
    pub fn tabulated(values: Vec<(f64, S)>) -> Self {
        let table: HashMap<u64, S> = values.into_iter().map(|(e, v)| (e.to_bits(), v)).collect();
        Self::from_fn(move |e| {
            table
                .get(&e.to_bits())
                .cloned()
                .unwrap_or_else(|| S::from_f64(f64::NAN))
        })
    }

    pub fn eval(&self, eps: f64) -> S {
        let key = eps.to_bits();
        if let Some(v) = self.inner.cache.read().unwrap().get(&key) {
            return v.clone();
        }
        let v = (self.inner.net)(eps);
        self.inner
            .cache
            .write()
            .unwrap()
            .entry(key)
            .or_insert(v)
            .clone()
    }

    pub fn eval_f64(&self, eps: f64) -> f64 {
        self.eval(eps).to_f64()
    }

    pub fn samples(&self, eps: &[f64]) -> Vec<S> {
        eps.iter().map(|&e| self.eval(e)).collect()
    }

    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(S) -> S + Send + Sync + 'static,
    {
        let x = self.clone();
        Self::from_fn(move |e| f(x.eval(e)))
    }

    pub fn zip_with<F>(&self, other: &Self, f: F) -> Self
    where
        F: Fn(S, S) -> S + Send + Sync + 'static,
    {
        let x = self.clone();
        let y = other.clone();
        Self::from_fn(move |e| f(x.eval(e), y.eval(e)))
    }

    pub fn abs(&self) -> Self {
        self.map(|v| v.abs())
    }

    pub fn min(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a.min_of(&b))
    }

    pub fn max(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a.max_of(&b))
    }

    pub fn powi(&self, n: i32) -> Self {
        self.map(move |v| v.powi(n))
    }

    /// Real power per ε. Integral exponents go through `powi` so negative
    /// bases stay defined.
    pub fn powf(&self, q: f64) -> Self {
        if q.fract() == 0.0 && q.abs() < i32::MAX as f64 {
            return self.powi(q as i32);
        }
        let qs = S::from_f64(q);
        self.map(move |v| v.powf(&qs))
    }

    pub fn sqrt(&self) -> Self {
        self.map(|v| v.sqrt())
    }

    /// Pointwise quotient with no invertibility check; see
    /// [`crate::Ring::ring_op`] for the certified version.
    pub fn div_unchecked(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a / b)
    }

    pub fn recip_unchecked(&self) -> Self {
        self.map(|v| S::one() / v)
    }

    pub fn scale(&self, c: f64) -> Self {
        let cs = S::from_f64(c);
        self.map(move |v| v * cs.clone())
    }
}

macro_rules! genum_binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl<S: Scalar> $tr<&GenNum<S>> for &GenNum<S> {
            type Output = GenNum<S>;
            fn $method(self, rhs: &GenNum<S>) -> GenNum<S> {
                self.zip_with(rhs, |a, b| a $op b)
            }
        }
        impl<S: Scalar> $tr<GenNum<S>> for GenNum<S> {
            type Output = GenNum<S>;
            fn $method(self, rhs: GenNum<S>) -> GenNum<S> {
                (&self).$method(&rhs)
            }
        }
        impl<S: Scalar> $tr<&GenNum<S>> for GenNum<S> {
            type Output = GenNum<S>;
            fn $method(self, rhs: &GenNum<S>) -> GenNum<S> {
                (&self).$method(rhs)
            }
        }
        impl<S: Scalar> $tr<GenNum<S>> for &GenNum<S> {
            type Output = GenNum<S>;
            fn $method(self, rhs: GenNum<S>) -> GenNum<S> {
                self.$method(&rhs)
            }
        }
    };
}

genum_binop!(Add, add, +);
genum_binop!(Sub, sub, -);
genum_binop!(Mul, mul, *);

impl<S: Scalar> Neg for &GenNum<S> {
    type Output = GenNum<S>;
    fn neg(self) -> GenNum<S> {
        self.map(|v| -v)
    }
}

impl<S: Scalar> Neg for GenNum<S> {
    type Output = GenNum<S>;
    fn neg(self) -> GenNum<S> {
        -&self
    }
}

/// A memoized net producing several values per ε at once (a vector-valued
/// evaluation shared by the components of a [`crate::GenVec`]).
pub(crate) struct SharedNet<S> {
    net: Box<dyn Fn(f64) -> Arc<Vec<S>> + Send + Sync>,
    cache: RwLock<HashMap<u64, Arc<Vec<S>>>>,
}

impl<S: Scalar> SharedNet<S> {
    pub(crate) fn new<F>(f: F) -> Arc<Self>
    where
        F: Fn(f64) -> Vec<S> + Send + Sync + 'static,
    {
        Arc::new(Self {
            net: Box::new(move |e| Arc::new(f(e))),
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub(crate) fn eval(&self, eps: f64) -> Arc<Vec<S>> {
        let key = eps.to_bits();
        if let Some(v) = self.cache.read().unwrap().get(&key) {
            return Arc::clone(v);
        }
        let v = (self.net)(eps);
        Arc::clone(self.cache.write().unwrap().entry(key).or_insert(v))
    }

    pub(crate) fn component(self: &Arc<Self>, i: usize) -> GenNum<S> {
        let shared = Arc::clone(self);
        GenNum::from_fn(move |e| shared.eval(e)[i].clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn cache_evaluates_once() {
        let calls = Arc::new(AtomicUsize::new(0));
        let c = Arc::clone(&calls);
        let x = GenNum::<f64>::from_fn(move |e| {
            c.fetch_add(1, Ordering::SeqCst);
            e * 2.0
        });
        assert_eq!(x.eval(0.25), 0.5);
        assert_eq!(x.eval(0.25), 0.5);
        assert_eq!(calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn pointwise_ops() {
        let e = GenNum::<f64>::eps();
        let s = &e + &e;
        assert_eq!(s.eval(0.1), 0.2);
        let p = &e * &e.recip_unchecked();
        assert_eq!(p.eval(0.3), 1.0);
        assert_eq!((-&e).eval(0.5), -0.5);
        assert_eq!(e.min(&e.powi(2)).eval(0.5), 0.25);
        assert_eq!(e.max(&e.powi(2)).eval(0.5), 0.5);
    }

    #[test]
    fn tabulated_is_nan_off_table() {
        let t = GenNum::<f64>::tabulated(vec![(0.1, 3.0)]);
        assert_eq!(t.eval(0.1), 3.0);
        assert!(t.eval(0.2).is_nan());
    }

    #[test]
    fn shared_components() {
        let shared = SharedNet::<f64>::new(|e| vec![e, 2.0 * e]);
        let a = shared.component(0);
        let b = shared.component(1);
        assert_eq!(a.eval(0.5), 0.5);
        assert_eq!(b.eval(0.5), 1.0);
    }
}
