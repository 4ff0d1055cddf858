//! Generalized numbers over a gauge, generalized smooth functions, and
//! fixed-point / Newton solvers that work with infinitesimal and infinite
//! quantities.
//!
//! A generalized number is an ε-net `[x_ε]` (moderate nets modulo
//! negligible ones). Everything is realized by evaluating nets on a
//! geometric grid of ε values ([`EpsGrid`]) and deciding order relations
//! on its tail, the smallest samples.
//!
//! ```
//! use gennum::{Ring, Kind};
//!
//! let ring = gennum::Ring::<f64>::colombeau();
//! let c = ring.classify(&ring.drho());
//! assert_eq!(c.kind, Kind::Infinitesimal);
//! ```

// `!(a < b)` is used on purpose so that NaN samples fail the test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod expr;
pub mod gauge;
pub mod grid;
pub mod gsf;
pub mod jet;
pub mod linalg;
pub mod net;
pub mod order;
pub mod ring;
pub mod scalar;
pub mod solvers;

pub use error::{Error, GridError, Result};
pub use expr::{eval_ast, parse, print_ast, tokenize, Ast, ParamEnv};
pub use gauge::Gauge;
pub use grid::EpsGrid;
pub use gsf::{GenFunc, TaylorBound};
pub use jet::{Jet, JetShape};
pub use linalg::{GenMat, GenVec};
pub use net::GenNum;
pub use order::OrderFit;
pub use ring::{
    Certificate, Classification, Comparison, Kind, Relation, Ring, RingOp, Settings,
    SharpConvergence, Verdict,
};
pub use scalar::{Mp, Scalar};

/// Default working precision: 512-bit MPFR floats.
pub type Real = Mp<512>;
/// Generalized number at the default precision.
pub type Num = GenNum<Real>;
pub type Vector = GenVec<Real>;
pub type Matrix = GenMat<Real>;
pub type Function = GenFunc<Real>;
pub type RealRing = Ring<Real>;

/// Double-precision variants, for quick experiments.
pub type Num64 = GenNum<f64>;
pub type Vector64 = GenVec<f64>;
pub type Ring64 = Ring<f64>;
pub type Function64 = GenFunc<f64>;
