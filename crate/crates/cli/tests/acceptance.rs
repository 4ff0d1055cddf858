//! Acceptance checks: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` print FAIL with their reason but do
//! not fail the run; any other failure exits nonzero.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use gennum::expr::eval_str;
use gennum::solvers::{
    brouwer_fixed_point, estimate_convergence_order, newton_solve, verify_contraction_on_orbit,
    BrouwerOptions, NewtonOptions,
};
use gennum::{
    parse, print_ast, GenFunc, GenNum, GenVec, ParamEnv, Real, RealRing, Ring, Scalar, Verdict,
};
use gennum_cli::report::VerdictStatus;
use gennum_cli::{load_config, run, SolveReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria expected to fail, with the reason.
const KNOWN_FAILURES: &[(u32, &str)] = &[(
    1,
    "the supplied N = (1-(x0+r)^2)/(2(x0-r)^2) is negative on the ball, so 9BI cannot hold",
)];

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("examples")
        .join(name)
}

fn run_example(name: &str) -> Result<SolveReport, String> {
    let cfg = load_config(&example(name)).map_err(|e| e.to_string())?;
    run(&cfg).map_err(|e| e.to_string())
}

fn env1() -> ParamEnv<Real> {
    ParamEnv::new(1)
}

fn scalar(ring: &RealRing, src: &str, env: &ParamEnv<Real>) -> GenNum<Real> {
    eval_str(ring, src, env).unwrap()
}

const HYPOTHESES: [&str; 5] = ["8BI", "9BI", "10BI", "10bisBI", "Jacob"];

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let report = run_example("example1.toml")?;
    let secs = start.elapsed().as_secs_f64();
    let failing: Vec<String> = HYPOTHESES
        .iter()
        .filter(|h| report.verdicts[**h].status != VerdictStatus::SampledPass)
        .map(|h| {
            let v = &report.verdicts[*h];
            match &v.witness {
                Some(w) => format!("{h} at eps={:e} (lhs {:e} > rhs {:e})", w.eps, w.lhs, w.rhs),
                None => h.to_string(),
            }
        })
        .collect();
    check(secs < 5.0, format!("runtime {secs:.2} s"))?;
    check(
        failing.is_empty(),
        format!("not sampled-pass: {}", failing.join("; ")),
    )?;
    Ok(format!("all five sampled-pass in {secs:.2} s"))
}

fn criterion_2() -> Outcome {
    let ring = RealRing::colombeau();
    let env = env1();
    let f = GenFunc::builtin("example1", &env, ring.gauge()).map_err(|e| e.to_string())?;
    let x0 = GenVec::scalar(scalar(&ring, "1 - drho^2", &env));
    let res = newton_solve(&ring, &f, &x0, &NewtonOptions::default()).map_err(|e| e.to_string())?;
    let hit = res
        .residual_orders
        .iter()
        .enumerate()
        .take(7)
        .find(|(_, o)| o.is_some_and(|o| o.exponent >= 5.0))
        .map(|(n, _)| n);
    check(
        hit.is_some(),
        "residual order never reached 5 within 6 iterations",
    )?;
    let order = estimate_convergence_order(&ring, &res.iterates, &GenVec::from_f64s(&[1.0]))
        .map_err(|e| e.to_string())?
        .order;
    check(
        (1.7..=2.3).contains(&order),
        format!("convergence order {order}"),
    )?;
    let mut worst = 0.0f64;
    for eps in [1e-2, 1e-3, 1e-4] {
        let mut x = 1.0 - eps * eps;
        for (n, it) in res.iterates.iter().enumerate() {
            if n > 0 {
                x -= (1.0 - x * x) / (-2.0 * x);
            }
            let got = it.eval_f64(eps)[0];
            worst = worst.max((got - x).abs() / x.abs());
        }
    }
    check(worst <= 1e-9, format!("oracle mismatch {worst:e}"))?;
    Ok(format!(
        "residual order >= 5 at n={}, order {order:.3}, oracle rel {worst:.1e}",
        hit.unwrap()
    ))
}

fn criterion_3() -> Outcome {
    let report = run_example("example2.toml")?;
    let cert = report.certificate.as_ref().ok_or("no certificate")?;
    let k_exp = cert.k_fit.ok_or("k has no power-law fit")?.exponent;
    check(k_exp >= 1.0 - 0.05, format!("k exponent {k_exp}"))?;
    check(
        report.verdicts["10bisBI"].status == VerdictStatus::SampledPass,
        "10bisBI not sampled-pass",
    )?;

    let ring = RealRing::colombeau();
    let env = env1()
        .with("a", ring.drho())
        .and_then(|e| e.with("H", ring.drho_pow(-3.0)))
        .map_err(|e| e.to_string())?;
    let f = GenFunc::builtin("example2", &env, ring.gauge()).map_err(|e| e.to_string())?;
    let x0 = GenVec::scalar(scalar(&ring, "a + a^2*drho^3", &env));
    let res = newton_solve(&ring, &f, &x0, &NewtonOptions::default()).map_err(|e| e.to_string())?;
    let err = res.root.get(0) - &ring.drho();
    let err = err.abs();
    let root_order = if ring.tail().iter().all(|(e, _)| err.eval_f64(*e) == 0.0) {
        f64::INFINITY
    } else {
        ring.leading_order(&err)
            .map_err(|e| e.to_string())?
            .exponent
    };
    check(root_order >= 3.0, format!("|x* - a| order {root_order}"))?;
    Ok(format!(
        "k exponent {k_exp:.4}, |x* - a| order {root_order:.2}"
    ))
}

/// Trapezoid rule for `(ramp ∗ μ_ε)(x)` over the support `[−ε, min(x, ε)]`
/// of the integrand `y ↦ (x − y)·μ_ε(y)`.
fn convolution_oracle(x: f64, eps: f64, nodes: usize) -> f64 {
    let mu = |y: f64| {
        let t = y / eps;
        0.75 * (1.0 - t * t).max(0.0) / eps
    };
    let (a, b) = (-eps, x.min(eps));
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / (nodes - 1) as f64;
    let g = |y: f64| (x - y).max(0.0) * mu(y);
    let mut s = 0.5 * (g(a) + g(b));
    for i in 1..nodes - 1 {
        s += g(a + i as f64 * h);
    }
    s * h
}

fn criterion_4() -> Outcome {
    let ring = Ring::<f64>::colombeau();
    let f = GenFunc::builtin("ramp_mollified", &ParamEnv::new(1), ring.gauge())
        .map_err(|e| e.to_string())?;
    let eps = 1e-3;
    let mut worst = 0.0f64;
    for j in 1..=11 {
        let x = -eps + 2.0 * eps * j as f64 / 12.0;
        let got = f.value_at(eps, &[x]).map_err(|e| e.to_string())?[0];
        let want = convolution_oracle(x, eps, 10_000);
        worst = worst.max((got - want).abs() / want.abs());
    }
    check(worst <= 1e-6, format!("convolution mismatch {worst:e}"))?;

    let report = run_example("example3.toml")?;
    let cert = report.certificate.as_ref().ok_or("no certificate")?;
    let k_exp = cert.k_fit.ok_or("k has no power-law fit")?.exponent;
    check(
        report.verdicts["10bisBI"].status == VerdictStatus::SampledPass,
        format!("10bisBI failed, k exponent {k_exp}"),
    )?;
    let inv = &report.verdicts["df_invertible"];
    check(
        inv.status == VerdictStatus::Fail,
        "df singularity not reported",
    )?;
    let w = inv
        .witness
        .as_ref()
        .ok_or("no witness for the singular differential")?;
    let u = w.u.as_ref().ok_or("witness without a point")?[0];
    let rho = w.eps;
    check(
        (u + rho).abs() <= 1e-6 * rho,
        format!("witness u={u:e} not at -drho={:e}", -rho),
    )?;
    Ok(format!(
        "oracle rel {worst:.1e}, k exponent {k_exp:.3}, singular witness u={u:.6e} at eps={rho:.3e}"
    ))
}

fn random_net(rng: &mut ChaCha8Rng) -> GenNum<Real> {
    let c = Real::from_f64(rng.random_range(-10.0..10.0));
    let a = Real::from_f64(rng.random_range(-3.0..3.0));
    let d = Real::from_f64(rng.random_range(-10.0..10.0));
    let b = Real::from_f64(rng.random_range(-3.0..3.0));
    GenNum::from_fn(move |e| {
        let r = Real::from_f64(e);
        c.clone() * r.powf(&a) + d.clone() * r.powf(&b)
    })
}

fn leq_2ulp(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + 2.0 * f64::EPSILON * lhs.abs().max(rhs.abs())
}

fn criterion_5() -> Outcome {
    let ring = RealRing::colombeau();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut violations = Vec::new();
    for pair in 0..1000 {
        let dim = 1 + pair % 3;
        let x = if pair % 50 == 0 {
            GenVec::zeros(dim)
        } else {
            GenVec::new((0..dim).map(|_| random_net(&mut rng)).collect())
        };
        let y = GenVec::new((0..dim).map(|_| random_net(&mut rng)).collect());
        let s = random_net(&mut rng);
        let sx = GenVec::new(x.components().iter().map(|c| &s * c).collect());
        let sum = x.add(&y).unwrap();
        let diff = x.sub(&y).unwrap();
        let c = x.get(0);
        for &(eps, _) in ring.tail() {
            let nx = x.norm().eval_f64(eps);
            let ny = y.norm().eval_f64(eps);
            let ns = s.abs().eval_f64(eps);
            let nsx = sx.norm().eval_f64(eps);
            let mut bad = |prop: &str, ok: bool| {
                if !ok {
                    violations.push(format!("pair {pair} eps {eps:e}: {prop}"));
                }
            };
            bad(
                "|x| = max(x,-x)",
                c.abs().eval_f64(eps) == c.max(&-c).eval_f64(eps),
            );
            bad("|x| >= 0", nx >= 0.0);
            bad(
                "|x| = 0 => x = 0",
                nx != 0.0 || x.eval_f64(eps).iter().all(|v| *v == 0.0),
            );
            bad(
                "|yx| = |y||x|",
                leq_2ulp(nsx, ns * nx) && leq_2ulp(ns * nx, nsx),
            );
            bad(
                "|x+y| <= |x|+|y|",
                leq_2ulp(sum.norm().eval_f64(eps), nx + ny),
            );
            bad(
                "||x|-|y|| <= |x-y|",
                leq_2ulp((nx - ny).abs(), diff.norm().eval_f64(eps)),
            );
        }
    }
    check(
        violations.is_empty(),
        format!(
            "{} violations, first: {}",
            violations.len(),
            violations.first().cloned().unwrap_or_default()
        ),
    )?;

    let mut worst_q = 0.0f64;
    for i in -10..=10 {
        let q = i as f64 * 0.5;
        let fit = ring
            .leading_order(&ring.drho_pow(q))
            .map_err(|e| e.to_string())?;
        worst_q = worst_q.max((fit.exponent - q).abs());
    }
    check(worst_q <= 1e-9, format!("leading order off by {worst_q:e}"))?;

    let mut positive = 0;
    for case in 0..100 {
        let x = random_net(&mut rng);
        if ring.is_strictly_positive(&x, ring.settings().m_max).verdict == Verdict::CertifiedYes {
            positive += 1;
            ring.div(&GenNum::one(), &x)
                .map_err(|e| format!("case {case}: positive but division failed: {e}"))?;
        }
    }
    check(positive > 0, "no strictly positive case drawn")?;
    Ok(format!(
        "0 norm violations on 1000 pairs, leading order within {worst_q:.1e}, {positive}/100 positive cases all divisible"
    ))
}

fn criterion_6() -> Outcome {
    let ring = RealRing::colombeau();
    let powers: Vec<GenNum<Real>> = (0..8).map(|n| ring.drho_pow(n as f64)).collect();
    for c in ring.sharp_converges(&powers, &GenNum::zero(), &[1.0, 2.0, 3.0]) {
        check(c.passed, format!("drho^n fails q={}", c.q))?;
    }
    let harmonic: Vec<GenNum<Real>> = (1..=100)
        .map(|n| GenNum::constant(1.0 / n as f64))
        .collect();
    let h = ring.sharp_converges(&harmonic, &GenNum::zero(), &[1.0]);
    check(!h[0].passed, "1/n passes q=1")?;

    let env = env1();
    let half = GenFunc::from_exprs(&["u1/2"], 1, &env, ring.gauge()).map_err(|e| e.to_string())?;
    let x0 = GenVec::from_f64s(&[1.0]);
    let rep = verify_contraction_on_orbit(&ring, &half, &x0, 5, None).map_err(|e| e.to_string())?;
    check(
        rep.strong_infinitesimal == Verdict::CertifiedNo,
        format!("x/2: {:?}", rep.strong_infinitesimal),
    )?;
    let cosine =
        GenFunc::from_exprs(&["drho*cos(u1)"], 1, &env, ring.gauge()).map_err(|e| e.to_string())?;
    let x0 = GenVec::from_f64s(&[0.0]);
    let rep =
        verify_contraction_on_orbit(&ring, &cosine, &x0, 5, None).map_err(|e| e.to_string())?;
    check(
        rep.strong_infinitesimal == Verdict::CertifiedYes,
        format!("drho*cos: {:?}", rep.strong_infinitesimal),
    )?;
    Ok("drho^n converges for q<=3, 1/n rejected at q=1, x/2 rejected, drho*cos accepted".into())
}

fn criterion_7() -> Outcome {
    let ring = RealRing::colombeau();
    let env = ParamEnv::new(2);
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = || rng.random_range(-1.0..1.0f64);
        let f1 = format!(
            "({}) + ({})*u1^2 + ({})*u1*u2 + ({})*u2 + drho*({})*sin(u1)",
            c(),
            c(),
            c(),
            c(),
            c()
        );
        let f2 = format!(
            "({}) + ({})*u2^2 + ({})*u1 + ({})*u1*u2^2 + drho*({})*cos(u2)",
            c(),
            c(),
            c(),
            c(),
            c()
        );
        let f =
            GenFunc::from_exprs(&[&f1, &f2], 2, &env, ring.gauge()).map_err(|e| e.to_string())?;
        let opts = BrouwerOptions {
            seed,
            ..BrouwerOptions::default()
        };
        let res = brouwer_fixed_point(&ring, &f, &opts).map_err(|e| format!("map {seed}: {e}"))?;
        check(
            res.per_eps_residual <= 1e-10,
            format!("map {seed}: residual {:e}", res.per_eps_residual),
        )?;
        worst = worst.max(res.per_eps_residual);
    }

    let valid = GenFunc::from_exprs(
        &[
            "0.5 + 0.25*sin(3*u1)*cos(u2)",
            "0.5 - 0.4*u1*u2 + drho*0.01",
        ],
        2,
        &env,
        ring.gauge(),
    )
    .map_err(|e| e.to_string())?;
    let clamped = valid.clamped();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..200 {
        let x = [Real::from_f64(rng.random()), Real::from_f64(rng.random())];
        for &(eps, _) in ring.tail() {
            let a = valid.value_at(eps, &x).map_err(|e| e.to_string())?;
            let b = clamped.value_at(eps, &x).map_err(|e| e.to_string())?;
            check(
                a == b,
                format!("clamping changed a valid map at eps {eps:e}"),
            )?;
        }
    }
    Ok(format!(
        "20/20 maps solved, worst residual {worst:.1e}; clamping idempotent on valid map"
    ))
}

/// Expressions that must survive print-then-parse, including every
/// constant used by the worked examples.
const CORPUS: [&str; 50] = [
    "1 - drho^2",
    "drho",
    "2*r",
    "(1 - (x0 + r)^2)/(2*(x0 - r)^2)",
    "(2*r + 1 - (x0 + r)^2)/(2*(x0 - r)^2)",
    "(drho^2 + 2*drho^3 - drho^4)/(2*(1 - drho - drho^2)^2)",
    "(2*drho^2 - drho^4)/(2*(1 - drho^2))",
    "1 - u1^2",
    "H*a^2 - H*u1^2",
    "a + a^2*drho^(R + 2)",
    "a^2*drho^(R + 1)",
    "2*r*abs(H)",
    "(a^2 - (x0 + r)^2)/(2*(x0 - r)^2)",
    "(2*r + a^2 - (x0 + r)^2)/(2*(x0 - r)^2)",
    "drho^(R + 1)*(2 - 2*a - 2*a*drho - a^2*drho^(R + 1) - 2*a^2*drho^(R + 1) - a^2*drho^(R + 3))/(2*(1 + a*drho^(R + 2) - a*drho^(R + 1))^2)",
    "a^2*drho^(R + 2)*(2 + a*drho^(R + 2))/(2*(1 + a*drho^(R + 2)))",
    "-drho + drho^2",
    "drho + sqrt(drho)",
    "3/(4*drho)*(3*drho - u1)*(drho + u1)^3/(12*drho^2)",
    "(2*drho - u1)*(drho + u1)^2/(4*drho^3)",
    "abs(64*drho - 3)/(192*drho^3)*abs((x0 + r + drho)^2*(x0 + r - 2*drho))",
    "16*drho*(3*drho - x0 - r)*(drho - x0 - r)*(drho + x0 + r)^2/((2*drho - x0 + r)^2*(drho + x0 - r)^2)",
    "(x0 + r + drho)^2/(3*(2*drho - x0 + r)^2*(x0 - r + drho)^2)*(abs(64*drho - 3)*abs((x0 + r - 2*drho)*(2*drho - x0 + r)) + 48*drho*abs((3*drho - x0 - r)*(drho - x0 - r)))",
    "drho*cos(u1)",
    "u1/2",
    "drho^(-3)",
    "-2^2",
    "2^-1",
    "2^3^2",
    "a - b - c",
    "a/b/c",
    "-u1*u2",
    "-(u1 + u2)",
    "--u1",
    "u1^-u2^2",
    "max(u1, min(u2, 0))",
    "ramp(u1 - drho)",
    "exp(-u1^2/(2*drho^2))/(drho*sqrt(2*3.141592653589793))",
    "log(1 + eps)",
    "sin(u1)^2 + cos(u1)^2",
    "1e-3*u1 + 2.5E+2",
    "0.5*u1^2 + 0.25*u2 + drho*sin(u1)",
    "0.3 + 0.4*u1*u2 - drho*u2",
    "eps^0.5",
    "((((u1))))",
    "u1*u2*u3 - u3/u2/u1",
    "abs(u1) - max(u1, -u1)",
    "(u1 - 1)^2 + (u2 + 1)^2 - drho^4",
    "x0_1 + x0_2*r",
    "H*(a - u1)*(a + u1)",
];

fn criterion_8() -> Outcome {
    for src in CORPUS {
        let ast = parse(src).map_err(|e| format!("{src}: {e}"))?;
        let printed = print_ast(&ast);
        let again = parse(&printed).map_err(|e| format!("{printed}: {e}"))?;
        check(
            ast.same_structure(&again),
            format!("round trip changed {src} -> {printed}"),
        )?;
    }
    let ring = Ring::<f64>::colombeau();
    let env = ParamEnv::new(0);
    let cases = [
        ("-2^2", -4.0),
        ("2^-1", 0.5),
        ("2^3^2", 512.0),
        ("1 - 2 - 3", -4.0),
        ("8/4/2", 1.0),
        ("2*3^2", 18.0),
        ("-3*2", -6.0),
        ("1 - -1", 2.0),
        ("-(1 - 3)^2", -4.0),
        ("2 + 3*4 - 6/2", 11.0),
    ];
    for (src, want) in cases {
        let got = eval_str(&ring, src, &env)
            .map_err(|e| format!("{src}: {e}"))?
            .eval_f64(0.1);
        check(got == want, format!("{src} = {got}, want {want}"))?;
    }
    Ok(format!(
        "{} expressions round-trip, {} precedence cases",
        CORPUS.len(),
        cases.len()
    ))
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = example("example1.toml");
    let mut outputs = Vec::new();
    for i in 0..2 {
        let csv = dir.path().join(format!("run{i}.csv"));
        let json = dir.path().join(format!("run{i}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_gennum"))
            .arg("run")
            .arg(&cfg)
            .arg("--csv")
            .arg(&csv)
            .arg("--json")
            .arg(&json)
            .arg("--quiet")
            .status()
            .map_err(|e| e.to_string())?;
        check(
            matches!(status.code(), Some(0 | 2 | 3)),
            format!("exit {status}"),
        )?;
        outputs.push((
            std::fs::read(&csv).map_err(|e| e.to_string())?,
            std::fs::read(&json).map_err(|e| e.to_string())?,
        ));
    }
    check(outputs[0].0 == outputs[1].0, "CSV differs between runs")?;
    check(outputs[0].1 == outputs[1].1, "JSON differs between runs")?;
    Ok(format!(
        "CSV ({} bytes) and JSON ({} bytes) identical",
        outputs[0].0.len(),
        outputs[0].1.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "example 1 certificate", criterion_1),
        (2, "newton on example 1", criterion_2),
        (3, "example 2", criterion_3),
        (4, "example 3", criterion_4),
        (5, "invariant suites", criterion_5),
        (6, "sharp topology", criterion_6),
        (7, "brouwer", criterion_7),
        (8, "parser", criterion_8),
        (9, "cli determinism", criterion_9),
    ];
    let mut unexpected = 0;
    for (n, name, f) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let known = KNOWN_FAILURES.iter().find(|(k, _)| *k == n);
        match (&outcome, known) {
            (Ok(d), None) => println!("criterion {n} ({name}): PASS: {d}"),
            (Ok(d), Some(_)) => {
                println!("criterion {n} ({name}): PASS (listed as known failure): {d}")
            }
            (Err(d), Some((_, why))) => {
                println!("criterion {n} ({name}): FAIL (known: {why}): {d}")
            }
            (Err(d), None) => {
                unexpected += 1;
                println!("criterion {n} ({name}): FAIL: {d}");
            }
        }
    }
    if unexpected > 0 {
        std::process::exit(1);
    }
}
