use std::sync::Arc;

use gennum::solvers::*;
use gennum::{
    eval_ast, parse, Error, GenFunc, GenNum, GenVec, ParamEnv, Real, RealRing, Ring, Scalar,
    Verdict,
};

fn num(ring: &Ring<Real>, src: &str, env: &ParamEnv<Real>) -> GenNum<Real> {
    eval_ast(ring, &parse(src).unwrap(), env, None).unwrap()
}

fn func(ring: &Ring<Real>, src: &[&str]) -> GenFunc<Real> {
    GenFunc::from_exprs(src, src.len(), &ParamEnv::new(src.len()), ring.gauge()).unwrap()
}

fn scalar_vec(x: GenNum<Real>) -> GenVec<Real> {
    GenVec::scalar(x)
}

fn order_of(ring: &RealRing, x: &GenNum<Real>) -> f64 {
    ring.leading_order(x).unwrap().exponent
}

fn interval(lo: f64, hi: f64) -> gennum::gsf::DomainPredicate<Real> {
    Arc::new(move |_, x: &[Real]| x.iter().all(|v| v.to_f64() >= lo && v.to_f64() <= hi))
}

#[test]
fn contraction_accepts_drho_cos() {
    let ring = RealRing::colombeau();
    let g = func(&ring, &["drho*cos(u1)"]);
    let x0 = GenVec::from_f64s(&[0.0]);
    let dom = interval(-2.0, 2.0);
    let rep = verify_contraction_on_orbit(&ring, &g, &x0, 5, Some(&dom)).unwrap();
    assert_eq!(rep.strong_infinitesimal, Verdict::CertifiedYes);
    let k = rep.k_witness.unwrap();
    assert!(k >= 1.0, "k = {k}");
    assert!(rep.alpha_order.unwrap().exponent >= k);

    // Oracle: the same orbit in doubles at a coarse ε, where f64 resolves
    // the step lengths.
    let eps: f64 = 0.05;
    let mut xs = vec![0.0f64];
    for n in 0..5 {
        xs.push(eps * xs[n].cos());
    }
    let d: Vec<f64> = xs.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let alpha = d.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    let got = rep.alpha.eval_f64(eps);
    assert!((got - alpha).abs() <= 1e-6 * alpha, "{got} vs {alpha}");
    for ratio in &rep.per_step_ratios {
        assert!(ratio.eval_f64(eps) <= 1.0 + 1e-12);
    }
}

#[test]
fn contraction_rejects_standard_half() {
    let ring = RealRing::colombeau();
    let g = func(&ring, &["u1/2"]);
    let rep = verify_contraction_on_orbit(&ring, &g, &GenVec::from_f64s(&[1.0]), 5, None).unwrap();
    assert_eq!(rep.strong_infinitesimal, Verdict::CertifiedNo);
    assert!(rep.alpha_order.unwrap().exponent.abs() < 1e-9);
}

#[test]
fn constant_map_is_certified() {
    let ring = RealRing::colombeau();
    let g = func(&ring, &["3 + 0*u1"]);
    let x0 = GenVec::from_f64s(&[0.0]);
    let rep = verify_contraction_on_orbit(&ring, &g, &x0, 3, None).unwrap();
    assert_eq!(rep.strong_infinitesimal, Verdict::CertifiedYes);
    let res = banach_solve(&ring, &g, &x0, &BanachOptions::default(), None).unwrap();
    for &(e, _) in ring.tail() {
        assert_eq!(res.fixed_point.eval_f64(e), vec![3.0]);
    }
}

#[test]
fn degenerate_orbit() {
    let ring = RealRing::colombeau();
    let g = func(&ring, &["u1^2"]);
    let x0 = GenVec::from_f64s(&[1.0]);
    assert_eq!(
        verify_contraction_on_orbit(&ring, &g, &x0, 3, None).unwrap_err(),
        Error::DegenerateOrbit
    );
    let res = banach_solve(&ring, &g, &x0, &BanachOptions::default(), None).unwrap();
    assert!(res.contraction.is_none());
    assert_eq!(res.orbit.len(), 1);
}

#[test]
fn orbit_leaving_domain() {
    let ring = RealRing::colombeau();
    let g = func(&ring, &["u1 + 1"]);
    let dom = interval(-2.0, 2.0);
    let err = verify_contraction_on_orbit(&ring, &g, &GenVec::from_f64s(&[0.0]), 4, Some(&dom))
        .unwrap_err();
    assert!(
        matches!(err, Error::OrbitLeftDomain { step: 3, .. }),
        "{err:?}"
    );
}

#[test]
fn banach_drho_sin() {
    let ring = RealRing::colombeau();
    let g = func(&ring, &["drho*sin(u1)"]);
    let x0 = GenVec::from_f64s(&[1.0]);
    let res = banach_solve(&ring, &g, &x0, &BanachOptions::default(), None).unwrap();
    assert!(order_of(&ring, res.fixed_point.get(0)) >= 1.0 - 1e-9);
    assert!(res.cauchy_report[0].iter().all(|c| c.passed));

    // Oracle: classical iteration at ε = 1e-3.
    let eps = 1e-3;
    let mut x = 1.0f64;
    for (n, it) in res.orbit.iter().enumerate() {
        let got = it.eval_f64(eps)[0];
        assert!((got - x).abs() <= 1e-12 * x.abs(), "step {n}: {got} vs {x}");
        x = eps * x.sin();
    }
}

#[test]
fn banach_affine_geometric_series() {
    let ring = RealRing::colombeau();
    let g = func(&ring, &["drho*u1 + 1"]);
    let opts = BanachOptions::default();
    let res = banach_solve(&ring, &g, &GenVec::from_f64s(&[0.0]), &opts, None).unwrap();
    assert!(res.residual_order.unwrap().exponent >= 3.0);
    let exact = num(&ring, "1/(1 - drho)", &ParamEnv::new(0));
    let err = res.fixed_point.get(0).clone() - exact;
    assert!(order_of(&ring, &err) >= 3.0);
}

#[test]
fn banach_forced_half_does_not_converge_sharply() {
    let ring = RealRing::colombeau();
    let g = func(&ring, &["u1/2"]);
    let x0 = GenVec::from_f64s(&[1.0]);
    let mut opts = BanachOptions {
        q_set: vec![1.0],
        max_steps: 20,
        force: false,
    };
    let err = banach_solve(&ring, &g, &x0, &opts, None).unwrap_err();
    assert_eq!(err.error, Error::NotContraction);
    opts.force = true;
    let err = banach_solve(&ring, &g, &x0, &opts, None).unwrap_err();
    assert!(matches!(
        err.error,
        Error::NoSharpConvergence { steps: 20, .. }
    ));
    assert_eq!(err.orbit.len(), 21);
}

#[test]
fn banach_fixed_points_agree_from_distinct_starts() {
    let ring = RealRing::colombeau();
    let g = func(&ring, &["drho*cos(u1) + 1/4"]);
    let dom = interval(-2.0, 2.0);
    let opts = BanachOptions {
        q_set: vec![1.0, 3.0, 6.0],
        ..Default::default()
    };
    let a = banach_solve(&ring, &g, &GenVec::from_f64s(&[-1.0]), &opts, Some(&dom)).unwrap();
    let b = banach_solve(&ring, &g, &GenVec::from_f64s(&[1.5]), &opts, Some(&dom)).unwrap();
    let diff = a.fixed_point.distance(&b.fixed_point).unwrap();
    assert!(ring.is_negligible(&diff, 5).is_yes() || order_of(&ring, &diff) >= 5.0);
}

fn newton_oracle(x0: f64, steps: usize, f: impl Fn(f64) -> (f64, f64)) -> Vec<f64> {
    let mut xs = vec![x0];
    for n in 0..steps {
        let (v, d) = f(xs[n]);
        xs.push(xs[n] - v / d);
    }
    xs
}

#[test]
fn newton_example1() {
    let ring = RealRing::colombeau();
    let env = ParamEnv::new(1);
    let f = GenFunc::builtin("example1", &env, ring.gauge()).unwrap();
    let x0 = scalar_vec(num(&ring, "1 - drho^2", &ParamEnv::new(0)));
    let res = newton_solve(&ring, &f, &x0, &NewtonOptions::default()).unwrap();
    assert!(res.converged);
    let k = res
        .residual_orders
        .iter()
        .position(|o| o.is_some_and(|o| o.exponent >= 4.0))
        .unwrap();
    assert!(k <= 4);
    let err = res.root.get(0).clone() - GenNum::one();
    assert!(ring.is_negligible(&err, 4).is_yes() || order_of(&ring, &err) >= 4.0);
    assert!(res.invertibility_log.iter().all(|c| c.certificate.is_yes()));

    for eps in [1e-2, 1e-3, 1e-4] {
        let oracle = newton_oracle(1.0 - eps * eps, res.iterates.len() - 1, |x| {
            (1.0 - x * x, -2.0 * x)
        });
        for (it, want) in res.iterates.iter().zip(oracle) {
            let got = it.eval_f64(eps)[0];
            assert!((got - want).abs() <= 1e-9 * want.abs());
        }
    }
}

#[test]
fn newton_linear_is_one_step() {
    let ring = RealRing::colombeau();
    let f = func(&ring, &["u1"]);
    let x0 = scalar_vec(num(&ring, "drho + 3", &ParamEnv::new(0)));
    let res = newton_solve(&ring, &f, &x0, &NewtonOptions::default()).unwrap();
    assert_eq!(res.iterates.len(), 2);
    for &(e, _) in ring.tail() {
        assert_eq!(res.root.eval(e)[0].to_f64(), 0.0);
    }
}

fn example2_env(ring: &RealRing) -> ParamEnv<Real> {
    ParamEnv::new(1)
        .with("a", ring.drho())
        .unwrap()
        .with("H", ring.drho_pow(-3.0))
        .unwrap()
}

#[test]
fn newton_example2() {
    let ring = RealRing::colombeau();
    let env = example2_env(&ring);
    let f = GenFunc::builtin("example2", &env, ring.gauge()).unwrap();
    let x0 = scalar_vec(num(&ring, "a + a^2*drho^3", &env));
    let opts = NewtonOptions {
        max_steps: 12,
        stop_q: 20.0,
    };
    let res = newton_solve(&ring, &f, &x0, &opts).unwrap();
    assert!(res.converged);
    let err = res.root.get(0).clone() - ring.drho();
    assert!(ring.is_negligible(&err, 3).is_yes() || order_of(&ring, &err) >= 3.0);

    let eps: f64 = 1e-2;
    let oracle = newton_oracle(eps + eps.powi(5), 3, |x| {
        (eps.powi(-1) - x * x / eps.powi(3), -2.0 * x / eps.powi(3))
    });
    for (it, want) in res.iterates.iter().zip(oracle) {
        assert!((it.eval_f64(eps)[0] - want).abs() <= 1e-9 * want);
    }
}

#[test]
fn newton_singular_differential() {
    let ring = RealRing::colombeau();
    let f = func(&ring, &["u1^2 + 1"]);
    let err = newton_solve(
        &ring,
        &f,
        &GenVec::from_f64s(&[0.0]),
        &NewtonOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(
        err,
        Error::DifferentialNotInvertible { iterate: 0, .. }
    ));
}

#[test]
fn fixed_point_and_root_orders_agree() {
    let ring = RealRing::colombeau();
    let f = GenFunc::builtin("example1", &ParamEnv::new(1), ring.gauge()).unwrap();
    let x0 = scalar_vec(num(&ring, "1 - drho^2", &ParamEnv::new(0)));
    let opts = NewtonOptions {
        max_steps: 2,
        stop_q: 40.0,
    };
    let res = newton_solve(&ring, &f, &x0, &opts).unwrap();
    let x = &res.root;
    let fx = f.eval(&ring, x, true).unwrap();
    let df = f.differential(&ring, x, true).unwrap();
    let inv = df.inverse(&ring).unwrap();
    let g = x.sub(&inv.apply(&fx).unwrap()).unwrap();
    let lhs = g.distance(x).unwrap();
    let rhs = inv.operator_norm() * fx.norm();
    assert!((order_of(&ring, &lhs) - order_of(&ring, &rhs)).abs() < 0.2);
}

fn synthetic(errors: impl Fn(i32) -> f64, n: i32) -> Vec<GenVec<f64>> {
    (0..n).map(|k| GenVec::from_f64s(&[errors(k)])).collect()
}

#[test]
fn convergence_order_synthetic() {
    let ring = Ring::<f64>::colombeau();
    let zero = GenVec::from_f64s(&[0.0]);
    for (p, seq) in [
        (2.0, synthetic(|n| 0.1f64.powf(2f64.powi(n)), 6)),
        (1.0, synthetic(|n| 0.5f64.powi(n), 12)),
        (1.5, synthetic(|n| 0.1f64.powf(1.5f64.powi(n)), 8)),
    ] {
        let est = estimate_convergence_order(&ring, &seq, &zero).unwrap();
        assert!((est.order - p).abs() <= 0.05, "{p}: {}", est.order);
    }
    let short = synthetic(|n| 0.5f64.powi(n), 3);
    assert!(matches!(
        estimate_convergence_order(&ring, &short, &zero),
        Err(Error::InsufficientData { .. })
    ));
    let stalls = synthetic(|n| if n < 2 { 0.1 } else { 0.0 }, 5);
    assert!(matches!(
        estimate_convergence_order(&ring, &stalls, &zero),
        Err(Error::InsufficientData { usable: 2, .. })
    ));
}

#[test]
fn convergence_order_of_newton_example1() {
    let ring = RealRing::colombeau();
    let f = GenFunc::builtin("example1", &ParamEnv::new(1), ring.gauge()).unwrap();
    let x0 = scalar_vec(num(&ring, "1 - drho^2", &ParamEnv::new(0)));
    let res = newton_solve(&ring, &f, &x0, &NewtonOptions::default()).unwrap();
    let est = estimate_convergence_order(&ring, &res.iterates, &GenVec::from_f64s(&[1.0])).unwrap();
    assert!((1.7..=2.3).contains(&est.order), "{}", est.order);

    // Oracle: e_{n+1} = e_n²/(2 x_n) exactly for 1 − u², so p = 2 and the
    // implied constant is ≈ 1/2, of order 0.
    let m = est.constant_order.unwrap();
    assert!(m.exponent.abs() < 0.1, "{m:?}");
}

#[test]
fn certify_detects_singular_point_in_ball() {
    let ring = RealRing::colombeau();
    let f = func(&ring, &["u1^2 - 1"]);
    let x0 = GenVec::from_f64s(&[0.5]);
    let r = GenNum::constant(1.0);
    let err = certify_ben_israel(&ring, &f, &x0, &r, None, &CertifyOptions::default()).unwrap_err();
    match err {
        Error::NotInvertibleInBall { point, .. } => assert!(point[0].abs() < 1e-12, "{point:?}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn certify_rejects_degenerate_radius() {
    let ring = RealRing::colombeau();
    let f = func(&ring, &["u1^2 - 1"]);
    let err = certify_ben_israel(
        &ring,
        &f,
        &GenVec::from_f64s(&[1.0]),
        &GenNum::zero(),
        None,
        &CertifyOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::SamplingDegenerate { .. }));
}

/// Example 1 with `N` and `k` bounded using the far end `x0 − r` of the
/// ball, where `|u² − 1|` is largest: all hypotheses hold and Newton stays
/// in the ball.
#[test]
fn certify_example1_with_mirrored_constants() {
    let ring = RealRing::colombeau();
    let env = ParamEnv::new(0);
    let f = GenFunc::builtin("example1", &ParamEnv::new(1), ring.gauge()).unwrap();
    let x0 = num(&ring, "1 - drho^2", &env);
    let r = ring.drho();
    let env = env
        .with("x0", x0.clone())
        .unwrap()
        .with("r", r.clone())
        .unwrap();
    let consts = Constants {
        m: num(&ring, "2*r", &env),
        n: num(&ring, "(1 - (x0 - r)^2)/(2*(x0 - r)^2)", &env),
        k: num(&ring, "(2*r + 1 - (x0 - r)^2)/(2*(x0 - r)^2)", &env),
    };
    let opts = CertifyOptions {
        pairs: 64,
        ..Default::default()
    };
    let cert = certify_ben_israel(&ring, &f, &scalar_vec(x0), &r, Some(consts), &opts).unwrap();
    for (name, h) in cert.verdicts.named() {
        assert!(h.passed, "{name}: {:?}", h.witness);
    }
    let ball = cert.ball_check.unwrap();
    assert!(ball.inside && ball.converged, "{ball:?}");
}

#[test]
fn certify_estimates_constants() {
    let ring = RealRing::colombeau();
    let f = GenFunc::builtin("example1", &ParamEnv::new(1), ring.gauge()).unwrap();
    let x0 = scalar_vec(num(&ring, "1 - drho^2", &ParamEnv::new(0)));
    let opts = CertifyOptions {
        seed: 7,
        ..Default::default()
    };
    let cert = certify_ben_israel(&ring, &f, &x0, &ring.drho(), None, &opts).unwrap();
    assert!(cert.estimated);
    assert!(cert.verdicts.h9.passed && cert.verdicts.h10.passed);
    // Sampled maxima of |u − v| sit a few percent below 2r, so fresh pairs
    // may beat the inflated M, but only narrowly.
    if let Some(w) = &cert.verdicts.h8.witness {
        assert!(w.lhs <= 1.05 * w.rhs, "{w:?}");
    }
    // M ≈ 2·1.1·|u − v| ≤ 4.4 r: order 1.
    assert!((order_of(&ring, &cert.m) - 1.0).abs() < 0.1);
}

#[test]
fn brouwer_identity_and_reflection() {
    let ring = Ring::<f64>::colombeau();
    let id = GenFunc::identity(1, ring.gauge());
    let res = brouwer_fixed_point(&ring, &id, &BrouwerOptions::default()).unwrap();
    assert_eq!(res.per_eps_residual, 0.0);
    assert!(res.methods.iter().all(|(_, m)| *m == Method::Probe));

    let refl = GenFunc::from_exprs(&["1 - u1"], 1, &ParamEnv::new(1), ring.gauge()).unwrap();
    let res = brouwer_fixed_point(&ring, &refl, &BrouwerOptions::default()).unwrap();
    for &(e, _) in ring.tail() {
        assert_eq!(res.fixed_point.eval(e), vec![0.5]);
    }
}

#[test]
fn brouwer_perturbed_planar_map() {
    let ring = Ring::<f64>::colombeau();
    let f = GenFunc::from_exprs(
        &["u1^2*u2 + drho", "1/2 + drho*sin(u1)"],
        2,
        &ParamEnv::new(2),
        ring.gauge(),
    )
    .unwrap();
    let res = brouwer_fixed_point(&ring, &f, &BrouwerOptions::default()).unwrap();
    assert!(res.per_eps_residual <= 1e-10);

    // Oracle: plain iteration in doubles at ε = 1e-3.
    let eps = 1e-3;
    let (mut x, mut y) = (0.5f64, 0.5f64);
    for _ in 0..200 {
        (x, y) = (x * x * y + eps, 0.5 + eps * x.sin());
    }
    let got = res.fixed_point.eval(eps);
    assert!(
        (got[0] - x).abs() < 1e-9 && (got[1] - y).abs() < 1e-9,
        "{got:?}"
    );
    for &(e, _) in ring.tail() {
        assert!(res
            .fixed_point
            .eval(e)
            .iter()
            .all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn brouwer_clamps_escaping_map() {
    let ring = Ring::<f64>::colombeau();
    let f = GenFunc::from_exprs(&["2*u1 + 1/4"], 1, &ParamEnv::new(1), ring.gauge()).unwrap();
    let res = brouwer_fixed_point(&ring, &f, &BrouwerOptions::default()).unwrap();
    assert!(res.clamped);
    for &(e, _) in ring.tail() {
        assert_eq!(res.fixed_point.eval(e), vec![1.0]);
    }
}

#[test]
fn brouwer_rejects_high_dimension() {
    let ring = Ring::<f64>::colombeau();
    let id = GenFunc::identity(4, ring.gauge());
    assert!(matches!(
        brouwer_fixed_point(&ring, &id, &BrouwerOptions::default()),
        Err(Error::InvalidArgument(_))
    ));
}
