//! Builds the ring, problem and start point from a config and dispatches to
//! the solver.

use std::sync::Arc;
use std::time::Instant;

use gennum::expr::eval_str;
use gennum::gsf::DomainPredicate;
use gennum::solvers::{
    banach_solve, brouwer_fixed_point, certify_ben_israel, estimate_convergence_order,
    newton_solve, verify_contraction_on_orbit, BanachOptions, BrouwerOptions, CertifyOptions,
    Constants, NewtonOptions, SingularPolicy,
};
use gennum::{
    EpsGrid, Error, Gauge, GenFunc, GenNum, GenVec, Kind, Mp, ParamEnv, Ring, Scalar, Verdict,
};
use serde_json::{json, Value};

use crate::config::{Precision, RunConfig, SingularMode, SolverKind};
use crate::error::CliError;
use crate::report::{
    CertificateTable, ConstantsRow, IterateRow, SolveReport, TraceRow, VerdictEntry, VerdictStatus,
};

/// Orbit length of the contraction check when the config gives none.
const DEFAULT_CONTRACTION_STEPS: usize = 5;

/// Runs `cfg` at its configured precision.
pub fn run(cfg: &RunConfig) -> Result<SolveReport, CliError> {
    let start = Instant::now();
    let mut report = match cfg.solver.precision {
        Precision::F32 => run_typed::<f32>(cfg),
        Precision::F64 => run_typed::<f64>(cfg),
        Precision::Mp128 => run_typed::<Mp<128>>(cfg),
        Precision::Mp256 => run_typed::<Mp<256>>(cfg),
        Precision::Mp512 => run_typed::<Mp<512>>(cfg),
        Precision::Mp1024 => run_typed::<Mp<1024>>(cfg),
    }?;
    report.wall_time = start.elapsed();
    Ok(report)
}

pub fn build_ring<S: Scalar>(cfg: &RunConfig) -> Result<Ring<S>, CliError> {
    let g = &cfg.grid;
    let grid = EpsGrid::new(g.eps_max, g.eps_min, g.count, g.tail_fraction)
        .map_err(|e| CliError::Validation(format!("grid: {e}")))?;
    let gauge = Gauge::parse(&cfg.gauge, &grid)?;
    Ok(Ring::new(gauge, grid))
}

/// Binds the config parameters, in dependency order.
pub fn build_env<S: Scalar>(
    ring: &Ring<S>,
    cfg: &RunConfig,
    dim: usize,
) -> Result<ParamEnv<S>, CliError> {
    let mut env = ParamEnv::new(dim);
    let Some(p) = &cfg.problem else {
        return Ok(env);
    };
    let mut pending: Vec<(&String, &String)> = p.params.iter().collect();
    while !pending.is_empty() {
        let before = pending.len();
        let mut rest = Vec::new();
        for (name, src) in pending {
            match eval_str(ring, src, &env) {
                Ok(v) => env.bind(name, v.with_label(name.as_str()))?,
                Err(Error::UnboundName(_)) => rest.push((name, src)),
                Err(e) => return Err(CliError::Validation(format!("problem.params.{name}: {e}"))),
            }
        }
        if rest.len() == before {
            let names: Vec<&str> = rest.iter().map(|(n, _)| n.as_str()).collect();
            return Err(CliError::Validation(format!(
                "parameters refer to unknown or circular names: {}",
                names.join(", ")
            )));
        }
        pending = rest;
    }
    Ok(env)
}

fn build_function<S: Scalar>(
    ring: &Ring<S>,
    cfg: &RunConfig,
    env: &ParamEnv<S>,
) -> Result<GenFunc<S>, CliError> {
    let p = cfg.problem.as_ref().expect("validated");
    let gauge = ring.gauge();
    Ok(match (&p.builtin, &p.exprs) {
        (Some(id), _) => GenFunc::builtin(id, env, gauge)?,
        (None, Some(e)) => {
            let refs: Vec<&str> = e.iter().map(|s| s.as_str()).collect();
            GenFunc::from_exprs(&refs, p.dom_dim(), env, gauge)?
        }
        (None, None) => unreachable!("validated"),
    })
}

fn eval_point<S: Scalar>(
    ring: &Ring<S>,
    srcs: &[String],
    env: &ParamEnv<S>,
    what: &str,
) -> Result<GenVec<S>, CliError> {
    let comps = srcs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            eval_str(ring, s, env).map_err(|e| CliError::Validation(format!("{what}[{i}]: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GenVec::new(comps))
}

fn domain_box<S: Scalar>(cfg: &RunConfig) -> Option<DomainPredicate<S>> {
    let b = cfg.solver.domain.clone()?;
    Some(Arc::new(move |_eps: f64, x: &[S]| {
        x.iter().zip(&b).all(|(v, [lo, hi])| {
            let v = v.to_f64();
            *lo <= v && v <= *hi
        })
    }))
}

fn verdict_status(v: Verdict) -> VerdictStatus {
    match v {
        Verdict::CertifiedYes => VerdictStatus::Pass,
        Verdict::CertifiedNo => VerdictStatus::Fail,
        Verdict::Undecided => VerdictStatus::Undecided,
    }
}

fn residual_net<S: Scalar>(ring: &Ring<S>, f: &dyn Fn(f64) -> f64) -> GenNum<S> {
    GenNum::tabulated(
        ring.tail()
            .iter()
            .map(|(e, _)| (*e, S::from_f64(f(*e))))
            .collect(),
    )
}

/// Fills the iterate table and CSV trace. `resid(eps, x)` is the residual
/// norm of the point `x` at `eps`.
fn record_sequence<S: Scalar>(
    report: &mut SolveReport,
    ring: &Ring<S>,
    seq: &[GenVec<S>],
    resid: &dyn Fn(f64, &[S]) -> f64,
) {
    let grid = ring.grid();
    let reps: Vec<f64> = grid
        .representative_indices()
        .iter()
        .map(|&i| grid.samples()[i])
        .collect();
    report.representative_eps = reps.clone();
    for (n, x) in seq.iter().enumerate() {
        let tail_resid = residual_net(ring, &|e| resid(e, &x.eval(e)));
        let order = ring.leading_order(&tail_resid).ok();
        for &eps in grid.samples() {
            let xe = x.eval(eps);
            report.trace.push(TraceRow {
                n,
                eps,
                rho: ring.rho_at(eps).to_f64(),
                x: xe.iter().map(|v| v.to_f64()).collect(),
                residual: resid(eps, &xe),
                residual_order: order.map(|o| o.exponent),
            });
        }
        report.iterates.push(IterateRow {
            n,
            values: reps.iter().map(|&e| x.eval_f64(e)).collect(),
            residual: reps.iter().map(|&e| resid(e, &x.eval(e))).collect(),
            residual_order: order,
        });
    }
}

fn norm_f64<S: Scalar>(v: &[S]) -> f64 {
    gennum::linalg::euclid(v).to_f64()
}

fn abs_f<S: Scalar>(f: &GenFunc<S>) -> impl Fn(f64, &[S]) -> f64 + '_ {
    move |eps, x| f.value_at(eps, x).map_or(f64::NAN, |v| norm_f64(&v))
}

fn abs_g_minus_x<S: Scalar>(g: &GenFunc<S>) -> impl Fn(f64, &[S]) -> f64 + '_ {
    move |eps, x| {
        g.value_at(eps, x).map_or(f64::NAN, |v| {
            let d: Vec<S> = v
                .iter()
                .zip(x)
                .map(|(a, b)| a.clone() - b.clone())
                .collect();
            norm_f64(&d)
        })
    }
}

pub fn run_typed<S: Scalar>(cfg: &RunConfig) -> Result<SolveReport, CliError> {
    cfg.validate()?;
    let ring = build_ring::<S>(cfg)?;
    let dim = cfg.problem.as_ref().map_or(0, |p| p.dom_dim());
    let mut report = SolveReport::new(cfg.clone(), dim);
    report.summary.insert("precision".into(), json!(S::NAME));
    let env = build_env(&ring, cfg, dim)?;
    if cfg.solver.kind == SolverKind::Classify {
        run_classify(&mut report, &ring, cfg, &env)?;
        report.finish();
        return Ok(report);
    }
    let f = build_function(&ring, cfg, &env)?;
    match cfg.solver.kind {
        SolverKind::Newton => run_newton(&mut report, &ring, cfg, &env, &f)?,
        SolverKind::Banach | SolverKind::Contraction => {
            run_fixed_point(&mut report, &ring, cfg, &env, &f)?
        }
        SolverKind::Brouwer => run_brouwer(&mut report, &ring, cfg, &f)?,
        SolverKind::Certify => run_certify(&mut report, &ring, cfg, &env, &f)?,
        SolverKind::Classify => unreachable!(),
    }
    report.finish();
    Ok(report)
}

fn run_classify<S: Scalar>(
    report: &mut SolveReport,
    ring: &Ring<S>,
    cfg: &RunConfig,
    env: &ParamEnv<S>,
) -> Result<(), CliError> {
    let exprs = cfg.solver.exprs.as_deref().unwrap_or_default();
    let mut out = Vec::new();
    for (i, src) in exprs.iter().enumerate() {
        let x = eval_str(ring, src, env)?;
        let c = ring.classify(&x);
        let status = if c.kind == Kind::Indeterminate {
            VerdictStatus::Undecided
        } else {
            VerdictStatus::Pass
        };
        report.verdict(&format!("expr[{i}]"), VerdictEntry::new(status));
        for &eps in ring.grid().samples() {
            report.trace.push(TraceRow {
                n: i,
                eps,
                rho: ring.rho_at(eps).to_f64(),
                x: vec![x.eval_f64(eps)],
                residual: f64::NAN,
                residual_order: None,
            });
        }
        out.push(json!({ "expr": src, "classification": c }));
    }
    report
        .summary
        .insert("classifications".into(), Value::Array(out));
    Ok(())
}

fn run_newton<S: Scalar>(
    report: &mut SolveReport,
    ring: &Ring<S>,
    cfg: &RunConfig,
    env: &ParamEnv<S>,
    f: &GenFunc<S>,
) -> Result<(), CliError> {
    let x0 = eval_point(ring, &cfg.start.x0, env, "start.x0")?;
    let mut opts = NewtonOptions::default();
    if let Some(m) = cfg.solver.max_steps {
        opts.max_steps = m;
    }
    if let Some(q) = cfg.solver.stop_q {
        opts.stop_q = q;
    }
    let res = match newton_solve(ring, f, &x0, &opts) {
        Ok(r) => r,
        Err(e @ Error::DifferentialNotInvertible { .. }) => {
            report.verdict(
                "differential_invertible",
                VerdictEntry::new(VerdictStatus::Fail).detail(e.to_string()),
            );
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    record_sequence(report, ring, &res.iterates, &abs_f(f));
    report.verdict(
        "converged",
        VerdictEntry::new(if res.converged {
            VerdictStatus::Pass
        } else {
            VerdictStatus::Fail
        }),
    );
    let all_invertible = res.invertibility_log.iter().all(|r| r.certificate.is_yes());
    report.verdict(
        "differential_invertible",
        VerdictEntry::new(if all_invertible {
            VerdictStatus::Pass
        } else {
            VerdictStatus::Undecided
        }),
    );
    report
        .summary
        .insert("iterations".into(), json!(res.iterates.len() - 1));
    let reference = match &cfg.solver.reference_root {
        Some(srcs) => eval_point(ring, srcs, env, "solver.reference_root")?,
        None => res.root.clone(),
    };
    match estimate_convergence_order(ring, &res.iterates, &reference) {
        Ok(o) => {
            report.summary.insert("convergence_order".into(), json!(o));
        }
        Err(e) => report.notes.push(format!("convergence order: {e}")),
    }
    if let Ok(d) = res.root.distance(&x0) {
        if let Ok(o) = ring.leading_order(&d) {
            report
                .summary
                .insert("root_minus_x0_order".into(), json!(o));
        }
    }
    Ok(())
}

fn run_fixed_point<S: Scalar>(
    report: &mut SolveReport,
    ring: &Ring<S>,
    cfg: &RunConfig,
    env: &ParamEnv<S>,
    g: &GenFunc<S>,
) -> Result<(), CliError> {
    let x0 = eval_point(ring, &cfg.start.x0, env, "start.x0")?;
    let domain = domain_box::<S>(cfg);
    let steps = cfg.solver.steps.unwrap_or(DEFAULT_CONTRACTION_STEPS);
    let resid = abs_g_minus_x(g);
    let contraction = match verify_contraction_on_orbit(ring, g, &x0, steps, domain.as_ref()) {
        Ok(c) => {
            report.verdict(
                "strong_infinitesimal",
                VerdictEntry::new(verdict_status(c.strong_infinitesimal)),
            );
            report
                .summary
                .insert("alpha_order".into(), json!(c.alpha_order));
            report
                .summary
                .insert("k_witness".into(), json!(c.k_witness));
            Some(c)
        }
        Err(Error::DegenerateOrbit) => {
            report.verdict(
                "strong_infinitesimal",
                VerdictEntry::new(VerdictStatus::Pass).detail("x0 is a fixed point"),
            );
            None
        }
        Err(e @ Error::OrbitLeftDomain { .. }) => {
            report.verdict(
                "strong_infinitesimal",
                VerdictEntry::new(VerdictStatus::Fail).detail(e.to_string()),
            );
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    if cfg.solver.kind == SolverKind::Contraction {
        let orbit = contraction.map_or_else(|| vec![x0.clone()], |c| c.orbit);
        record_sequence(report, ring, &orbit, &resid);
        return Ok(());
    }
    let mut opts = BanachOptions {
        force: cfg.solver.force,
        ..BanachOptions::default()
    };
    if let Some(q) = &cfg.solver.q_set {
        opts.q_set = q.clone();
    }
    if let Some(m) = cfg.solver.max_steps {
        opts.max_steps = m;
    }
    match banach_solve(ring, g, &x0, &opts, domain.as_ref()) {
        Ok(res) => {
            record_sequence(report, ring, &res.orbit, &resid);
            let q_max = opts.q_set.iter().cloned().fold(f64::MIN, f64::max);
            report.verdict(
                "sharp_convergence",
                VerdictEntry::new(VerdictStatus::Pass).detail(format!("steps below drho^{q_max}")),
            );
            report
                .summary
                .insert("residual_order".into(), json!(res.residual_order));
            report
                .summary
                .insert("cauchy_report".into(), json!(res.cauchy_report));
            if res.forced {
                report
                    .notes
                    .push("iteration forced without a contraction certificate".into());
            }
        }
        Err(fail) => match fail.error {
            Error::NotContraction => {
                record_sequence(report, ring, &fail.orbit, &resid);
                report.notes.push(
                    "iteration not run: no contraction certificate (set force = true)".into(),
                );
            }
            Error::NoSharpConvergence { .. } | Error::OrbitLeftDomain { .. } => {
                record_sequence(report, ring, &fail.orbit, &resid);
                report.verdict(
                    "sharp_convergence",
                    VerdictEntry::new(VerdictStatus::Fail).detail(fail.error.to_string()),
                );
            }
            e => return Err(e.into()),
        },
    }
    Ok(())
}

fn run_brouwer<S: Scalar>(
    report: &mut SolveReport,
    ring: &Ring<S>,
    cfg: &RunConfig,
    f: &GenFunc<S>,
) -> Result<(), CliError> {
    let mut opts = BrouwerOptions {
        seed: cfg.solver.seed,
        ..BrouwerOptions::default()
    };
    if let Some(t) = cfg.solver.tol {
        opts.tol = t;
    }
    if let Some(m) = cfg.solver.max_restarts {
        opts.max_restarts = m;
    }
    if let Some(m) = cfg.solver.max_steps {
        opts.max_iter = m;
    }
    match brouwer_fixed_point(ring, f, &opts) {
        Ok(res) => {
            let fbar = f.clamped();
            record_sequence(
                report,
                ring,
                std::slice::from_ref(&res.fixed_point),
                &abs_g_minus_x(&fbar),
            );
            report.verdict("fixed_point_found", VerdictEntry::new(VerdictStatus::Pass));
            report
                .summary
                .insert("per_eps_residual".into(), json!(res.per_eps_residual));
            report.summary.insert("clamped".into(), json!(res.clamped));
            report.summary.insert("methods".into(), json!(res.methods));
        }
        Err(e @ Error::NoFixedPointFound { .. }) => {
            report.verdict(
                "fixed_point_found",
                VerdictEntry::new(VerdictStatus::Fail).detail(e.to_string()),
            );
        }
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

fn run_certify<S: Scalar>(
    report: &mut SolveReport,
    ring: &Ring<S>,
    cfg: &RunConfig,
    env: &ParamEnv<S>,
    f: &GenFunc<S>,
) -> Result<(), CliError> {
    let x0 = eval_point(ring, &cfg.start.x0, env, "start.x0")?;
    let r_src = cfg.start.r.as_deref().expect("validated");
    let r =
        eval_str(ring, r_src, env).map_err(|e| CliError::Validation(format!("start.r: {e}")))?;
    let constants = match &cfg.solver.constants {
        Some(c) => {
            let mut cenv = env.clone();
            for (i, comp) in x0.components().iter().enumerate() {
                cenv.bind(&format!("x0_{}", i + 1), comp.clone())?;
            }
            if x0.dim() == 1 {
                cenv.bind("x0", x0.get(0).clone())?;
            }
            cenv.bind("r", r.clone())?;
            let ev = |name: &str, src: &str| {
                eval_str(ring, src, &cenv)
                    .map_err(|e| CliError::Validation(format!("solver.constants.{name}: {e}")))
            };
            Some(Constants {
                m: ev("M", &c.m)?,
                n: ev("N", &c.n)?,
                k: ev("k", &c.k)?,
            })
        }
        None => None,
    };
    let s = &cfg.solver;
    let defaults = CertifyOptions::default();
    let opts = CertifyOptions {
        big_r: s.big_r.unwrap_or(defaults.big_r),
        pairs: s.pairs.unwrap_or(defaults.pairs),
        seed: s.seed,
        singular_policy: match s.singular {
            SingularMode::Abort => SingularPolicy::Abort,
            SingularMode::Flag => SingularPolicy::Flag,
        },
    };
    let cert = match certify_ben_israel(ring, f, &x0, &r, constants, &opts) {
        Ok(c) => c,
        Err(e @ Error::NotInvertibleInBall { .. }) => {
            report.verdict(
                "df_invertible",
                VerdictEntry::new(VerdictStatus::Fail).detail(e.to_string()),
            );
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    let pass_or_fail = |passed: bool| {
        if passed {
            VerdictStatus::SampledPass
        } else {
            VerdictStatus::Fail
        }
    };
    for (name, check) in cert.verdicts.named() {
        report.verdict(
            name,
            VerdictEntry {
                status: pass_or_fail(check.passed),
                witness: check.witness.clone(),
                detail: (check.skipped > 0).then(|| {
                    format!(
                        "{} checked, {} skipped as singular",
                        check.checked, check.skipped
                    )
                }),
            },
        );
    }
    report.verdict(
        "df_invertible",
        VerdictEntry {
            status: pass_or_fail(cert.invertibility.passed),
            witness: cert.invertibility.witness.clone(),
            detail: None,
        },
    );
    report.certificate = Some(CertificateTable {
        big_r: cert.big_r,
        estimated: cert.estimated,
        pairs: cert.pairs,
        seed: cert.seed,
        k_fit: cert.k_fit,
        tail: ring
            .tail()
            .iter()
            .map(|(e, rho)| ConstantsRow {
                eps: *e,
                rho: rho.to_f64(),
                x0: cert.x0.eval_f64(*e),
                r: cert.r.eval_f64(*e),
                m: cert.m.eval_f64(*e),
                n: cert.n.eval_f64(*e),
                k: cert.k.eval_f64(*e),
            })
            .collect(),
        ball_check: cert.ball_check.clone(),
        notes: cert.notes.clone(),
    });
    let newton_opts = NewtonOptions {
        max_steps: s.max_steps.unwrap_or(NewtonOptions::default().max_steps),
        ..NewtonOptions::default()
    };
    match newton_solve(ring, f, &x0, &newton_opts) {
        Ok(res) => record_sequence(report, ring, &res.iterates, &abs_f(f)),
        Err(e) => {
            record_sequence(report, ring, std::slice::from_ref(&x0), &abs_f(f));
            report.notes.push(format!("newton trace stopped: {e}"));
        }
    }
    Ok(())
}
