//! Fixed-point and root-finding machinery.

mod banach;
mod brouwer;
mod certify;
mod contraction;
mod convergence;
mod newton;

pub use banach::{banach_solve, BanachFailure, BanachOptions, BanachResult};
pub use brouwer::{brouwer_fixed_point, BrouwerOptions, BrouwerResult, Method, DAMPING_SCHEDULE};
pub use certify::{
    certify_ben_israel, newton_ball_check, BallCheck, BenIsraelCertificate, CertifyOptions,
    Constants, HypothesisCheck, SingularPolicy, Verdicts, Witness, K_FIT_TOLERANCE, SAFETY_FACTOR,
};
pub use contraction::{verify_contraction_on_orbit, ContractionReport, MIN_K_WITNESS};
pub use convergence::{estimate_convergence_order, ConvergenceOrder};
pub use newton::{newton_solve, InvertibilityRecord, NewtonOptions, NewtonResult};
