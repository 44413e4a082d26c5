//! Acceptance suite: one PASS/FAIL line per criterion.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use chenverify::ambient::{
    constant_type_fit, euclidean, flat_quaternionic, normal_family, round_sphere, standard_j, validate_model,
    validate_statistical, AmbientModel, ConnectionSpec,
};
use chenverify::chen::lemmas::{LemmaConstant, LemmaKind};
use chenverify::chen::{
    chen_first_constant, chen_first_report, delta22_constant, equality_pattern, mean_curvature_coefficient, Case,
    InequalityKind,
};
use chenverify::expr::{chart_variables, parse, ExprAst, ExprMatrix};
use chenverify::families::{linear_real, product_torus, random_totally_real, skewed_graph, sphere};
use chenverify::geom::{sectional, Plane};
use chenverify::harness::{run_chen, run_lemmas, Format, LemmaConfig, Report, RunConfig, DEFAULT_SEED};
use chenverify::specfile::emit_spec;
use chenverify::subman::{classify, ClassLabel, ImmersedSubmanifold, CLASSIFY_TOL};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn gaussian<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

fn lemma_suite() -> Outcome {
    let report = run_lemmas(&LemmaConfig::default(), DEFAULT_SEED);
    let entries = report.lemmas.as_ref().ok_or("no lemma entries")?;
    ensure(report.exit_code() == 0, || format!("exit {} {:?}", report.exit_code(), report.findings))?;
    ensure(entries.len() == 11, || format!("{} entries", entries.len()))?;
    let mut worst = f64::INFINITY;
    let mut pattern = 0.0f64;
    for e in entries {
        worst = worst.min(e.worst_margin.ok_or("no trials")?);
        pattern = pattern.max(e.maximization.pattern_residual);
        ensure(e.trials == 100_000, || "trial count".into())?;
        ensure(e.sharp, || format!("{} n={} not sharp, gap {:e}", e.kind.as_str(), e.n, e.gap))?;
    }
    ensure(worst >= -1e-12, || format!("worst margin {worst:e}"))?;
    ensure(pattern < 1e-6, || format!("maximizer pattern residual {pattern:e}"))?;

    let printed = LemmaConfig { constant: LemmaConstant::Printed, trials: 10_000, restarts: 50, ..LemmaConfig::default() };
    let report = run_lemmas(&printed, DEFAULT_SEED);
    ensure(report.exit_code() == 0, || "printed bound violated".into())?;
    let first: Vec<_> =
        report.lemmas.iter().flatten().filter(|e| e.kind == LemmaKind::ChenFirst).collect();
    let min_gap = first.iter().map(|e| e.gap).fold(f64::INFINITY, f64::min);
    ensure(first.iter().all(|e| !e.sharp) && min_gap > 1e-3, || format!("printed bound sharp? min gap {min_gap:e}"))?;
    Ok(format!(
        "n=3..8, 1e5 tuples each: worst margin {worst:.2e}, maximizer pattern residual {pattern:.1e}; printed 1/2 bound holds with gap >= {min_gap:.4}"
    ))
}

/// Random expression source over `x1..x3` that stays finite on `[-1, 1]^3`.
fn random_expr<R: Rng>(rng: &mut R, depth: usize) -> String {
    if depth == 0 || rng.gen_bool(0.2) {
        return match rng.gen_range(0..3) {
            0 => format!("{:.3}", rng.gen_range(-2.0..2.0)),
            _ => format!("x{}", rng.gen_range(1..=3)),
        };
    }
    let a = random_expr(rng, depth - 1);
    match rng.gen_range(0..11) {
        0 => format!("({a} + {})", random_expr(rng, depth - 1)),
        1 => format!("({a} - {})", random_expr(rng, depth - 1)),
        2 | 3 => format!("({a} * {})", random_expr(rng, depth - 1)),
        4 => format!("({a} / (2.5 + cos({})))", random_expr(rng, depth - 1)),
        5 => format!("({a})^{}", rng.gen_range(2..4)),
        6 => format!("sin({a})"),
        7 => format!("exp(sin({a}))"),
        8 => format!("log(1 + ({a})^2)"),
        9 => format!("sqrt(2 + cos({a}))"),
        _ => format!("-tanh({a})"),
    }
}

fn ad_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let vars = chart_variables("x", 3);
    let (h1, h2) = (1e-5, 1e-4);
    let mut worst = 0.0f64;
    for t in 0..200 {
        let src = random_expr(&mut rng, 4);
        let e = parse(&src, &vars).map_err(|e| format!("{src}: {e}"))?;
        let p: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let jet = e.eval_jet(&p).map_err(|err| format!("{src}: {err}"))?;
        let f = |d: &[(usize, f64)]| {
            let mut q = p.clone();
            for &(i, s) in d {
                q[i] += s;
            }
            e.eval(&q).unwrap()
        };
        for i in 0..3 {
            let fd = (f(&[(i, h1)]) - f(&[(i, -h1)])) / (2.0 * h1);
            let err = (fd - jet.grad()[i]).abs() / (1.0 + fd.abs());
            worst = worst.max(err);
            ensure(err < 1e-6, || format!("ast {t} `{src}` d{i}: jet {} vs fd {fd}", jet.grad()[i]))?;
            for j in 0..3 {
                let fd = (f(&[(i, h2), (j, h2)]) - f(&[(i, h2), (j, -h2)]) - f(&[(i, -h2), (j, h2)])
                    + f(&[(i, -h2), (j, -h2)]))
                    / (4.0 * h2 * h2);
                let err = (fd - jet.hess_at(i, j)).abs() / (1.0 + fd.abs());
                worst = worst.max(err);
                ensure(err < 1e-6, || format!("ast {t} `{src}` d{i}d{j}: jet {} vs fd {fd}", jet.hess_at(i, j)))?;
            }
        }
    }
    Ok(format!("200 random ASTs, worst gradient/Hessian deviation {worst:.1e}"))
}

fn constant_matrix(m: &DMatrix<f64>) -> ExprMatrix {
    let d = m.nrows();
    let mut out = ExprMatrix::zeros(d, d, d);
    for i in 0..d {
        for j in 0..d {
            out.set(i, j, ExprAst::constant(m[(i, j)], d));
        }
    }
    out
}

fn structure_validators() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut worst = 0.0f64;
    for m in 1..=4 {
        let model = flat_quaternionic(m).map_err(|e| e.to_string())?;
        let r = validate_model(&model, &model.sample_points(10, &mut rng), 1e-12);
        ensure(r.passed(), || format!("flat_quaternionic({m}) fails {:?}", r.failing()))?;
        ensure(r.checks.iter().all(|c| !c.skipped), || "skipped checks".into())?;
        worst = worst.max(r.checks.iter().map(|c| c.residual).fold(0.0, f64::max));
    }
    let tol = 1e-9;
    let base = flat_quaternionic(1).map_err(|e| e.to_string())?;
    let pts = |m: &AmbientModel, rng: &mut ChaCha8Rng| m.sample_points(5, rng);
    let expect = |name: &str, r: Vec<&str>| ensure(r == vec![name], || format!("{name} injection fails {r:?}"));

    let eps = 1e-3;
    let vars3 = chart_variables("x", 3);
    let mut gam = BTreeMap::new();
    for (k, i, j, s) in [(0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 0, 1, 1.0), (0, 2, 1, -1.0), (1, 0, 2, -1.0), (2, 1, 0, -1.0)] {
        gam.insert((k, i, j), parse(&format!("{}", s * eps), &vars3).unwrap());
    }
    let e3 = euclidean(3).unwrap();
    let twisted =
        AmbientModel::new("twisted", 3, e3.domain().to_vec(), e3.metric_exprs().clone(), ConnectionSpec::Explicit(gam), None)
            .map_err(|e| e.to_string())?;
    let r = validate_statistical(&twisted, &pts(&twisted, &mut rng), tol);
    expect("torsion_free", r.failing())?;
    let torsion = r.check("torsion_free").unwrap().residual;
    ensure((torsion - 2.0 * eps).abs() < 1e-15, || format!("torsion residual {torsion}"))?;

    let mut q = base.quaternionic().unwrap().clone();
    q.j.swap(1, 2);
    let swapped = base.clone().with_quaternionic(Some(q)).unwrap();
    expect("quaternion_relations", validate_model(&swapped, &pts(&swapped, &mut rng), tol).failing())?;

    let mut q = base.quaternionic().unwrap().clone();
    q.omega[0][2] = ExprAst::constant(0.25, 4);
    let omega = base.clone().with_quaternionic(Some(q)).unwrap();
    expect("kaehler_like", validate_model(&omega, &pts(&omega, &mut rng), tol).failing())?;

    let mut s = DMatrix::<f64>::identity(4, 4);
    s[(0, 1)] = 0.1;
    let s_inv = s.clone().try_inverse().unwrap();
    let mut q = base.quaternionic().unwrap().clone();
    for (a, j) in standard_j(1).iter().enumerate() {
        q.j[a] = constant_matrix(&(&s * j * &s_inv));
    }
    let sheared = base.clone().with_quaternionic(Some(q)).unwrap();
    expect("metric_adapted", validate_model(&sheared, &pts(&sheared, &mut rng), tol).failing())?;

    let mut q = base.quaternionic().unwrap().clone();
    q.c = Some(1.0);
    let declared = base.clone().with_quaternionic(Some(q)).unwrap();
    expect("declared_c", validate_model(&declared, &pts(&declared, &mut rng), tol).failing())?;

    // Non-constant-type curvature also breaks ∇J = 0, so the fit is run directly.
    let vars4 = chart_variables("x", 4);
    let mut k = BTreeMap::new();
    k.insert((0, 0, 0), parse("x2", &vars4).unwrap());
    let perturbed = AmbientModel::new(
        "perturbed",
        4,
        base.domain().to_vec(),
        base.metric_exprs().clone(),
        ConnectionSpec::Skewness(k),
        base.quaternionic().cloned(),
    )
    .map_err(|e| e.to_string())?;
    let ppts = pts(&perturbed, &mut rng);
    let stat = validate_statistical(&perturbed, &ppts, tol);
    ensure(stat.passed(), || format!("perturbation breaks {:?}", stat.failing()))?;
    let fit = constant_type_fit(&perturbed, &ppts).map_err(|e| e.to_string())?;
    ensure(fit.residual == 1.0 && fit.residual_star == 1.0, || format!("constant-type residual {}", fit.residual))?;
    Ok(format!(
        "flat_quaternionic(1..4) worst residual {worst:.1e}; 6 injections fail torsion_free, quaternion_relations, kaehler_like, metric_adapted, declared_c, constant_type"
    ))
}

fn curvature_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let s2 = round_sphere(2, 1.0).map_err(|e| e.to_string())?;
    let mut worst_k = 0.0f64;
    for p in s2.sample_points(50, &mut rng) {
        let ap = s2.eval_point(&p).map_err(|e| e.to_string())?;
        let g = ap.metric.g().clone();
        let x = DVector::from_vec(vec![1.0 / g[(0, 0)].sqrt(), 0.0]);
        let y = DVector::from_vec(vec![0.0, 1.0 / g[(1, 1)].sqrt()]);
        let k = sectional(&g, &ap.curvatures().r, &Plane::new(&g, x, y).map_err(|e| e.to_string())?);
        worst_k = worst_k.max((k - 1.0).abs());
    }
    ensure(worst_k < 1e-8, || format!("round sphere sectional deviation {worst_k:e}"))?;

    let mut flat = 0.0f64;
    for alpha in [1.0, -1.0] {
        let m = normal_family(alpha).map_err(|e| e.to_string())?;
        for p in m.sample_points(20, &mut rng) {
            let c = m.eval_point(&p).map_err(|e| e.to_string())?.curvatures();
            flat = flat.max(c.r.components().max_abs()).max(c.r_star.components().max_abs());
        }
    }
    ensure(flat < 1e-8, || format!("normal_family(±1) curvature {flat:e}"))?;

    let m = normal_family(0.7).map_err(|e| e.to_string())?;
    let mut dual = 0.0f64;
    for p in m.sample_points(100, &mut rng) {
        let ap = m.eval_point(&p).map_err(|e| e.to_string())?;
        let c = ap.curvatures();
        let g = ap.metric.g();
        let [x, y, z, w] = [0; 4].map(|_| gaussian(&mut rng, 2));
        let lhs = c.r.lowered_value(g, &x, &y, &z, &w);
        let rhs = -c.r_star.lowered_value(g, &x, &y, &w, &z);
        dual = dual.max((lhs - rhs).abs());
    }
    ensure(dual < 1e-8, || format!("duality identity {dual:e}"))?;
    Ok(format!("S^2 |K - 1| <= {worst_k:.1e}; normal_family(±1) |R|,|R*| <= {flat:.1e}; duality <= {dual:.1e}"))
}

fn gauss_ricci() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let cases: [(&str, ImmersedSubmanifold); 3] = [
        ("S^2 in R^3", sphere(2).map_err(|e| e.to_string())?),
        ("torus in H^2", product_torus(2, &[1.0, 0.7]).map_err(|e| e.to_string())?),
        ("skewed graph", skewed_graph().map_err(|e| e.to_string())?),
    ];
    let mut lines = Vec::new();
    for (name, sub) in &cases {
        let mut worst = chenverify::subman::GaussRicciResiduals::default();
        for u in sub.sample_points(20, &mut rng) {
            let r = sub.gauss_ricci_residuals(&u, 50, &mut rng).map_err(|e| format!("{name}: {e}"))?;
            worst.merge(&r);
        }
        ensure(worst.max() < 1e-8, || format!("{name}: {worst:?}"))?;
        lines.push(format!(
            "{name} max {:.1e} (exchanged-bracket reading {:.1e})",
            worst.max(),
            worst.ricci_exchanged.max(worst.ricci_star_exchanged)
        ));
    }
    Ok(lines.join("; "))
}

struct Suite {
    reports: Vec<Report>,
}

impl Suite {
    fn contradictions(&self) -> usize {
        self.reports.iter().filter_map(|r| r.summary.as_ref()).map(|s| s.contradictions).sum()
    }
}

fn spec_of(sub: &ImmersedSubmanifold) -> String {
    emit_spec(sub.ambient(), Some(&sub.spec()))
}

fn cfg(seed: u64, samples: usize, planes: usize) -> RunConfig {
    RunConfig { seed, samples, planes, ..RunConfig::default() }
}

fn chen_first(suite: &mut Suite) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut reports = 0;
    let mut min_margin = f64::INFINITY;
    for i in 0..30 {
        let m = 3 + i % 2;
        let n = rng.gen_range(3..=m);
        let sub = random_totally_real(&mut rng, m, n).map_err(|e| e.to_string())?;
        let r = run_chen(&spec_of(&sub), &cfg(DEFAULT_SEED + i as u64, 3, 3), InequalityKind::ChenFirst);
        let s = r.summary.as_ref().ok_or_else(|| format!("instance {i}: {:?}", r.errors))?;
        ensure(r.exit_code() == 0 && s.violations == 0, || format!("instance {i}: exit {} {:?}", r.exit_code(), r.findings))?;
        ensure(r.samples.iter().all(|s| s.report.holds && s.report.case == Case::TotallyReal), || "case".into())?;
        reports += r.samples.len();
        min_margin = min_margin.min(s.min_margin.unwrap());
        suite.reports.push(r);
    }
    let mut geodesic = 0.0f64;
    for (m, n) in [(3, 3), (4, 3), (4, 4)] {
        let sub = linear_real(m, n).map_err(|e| e.to_string())?;
        let r = run_chen(&spec_of(&sub), &cfg(DEFAULT_SEED, 4, 3), InequalityKind::ChenFirst);
        ensure(r.exit_code() == 0, || format!("slice {m},{n}: {:?}", r.errors))?;
        for s in &r.samples {
            geodesic = geodesic.max(s.report.margin.abs());
            ensure(s.report.equality.equality, || format!("slice {m},{n}: equality diagnostics fail"))?;
        }
        suite.reports.push(r);
    }
    ensure(geodesic < 1e-9, || format!("totally geodesic margin {geodesic:e}"))?;

    let torus = product_torus(3, &[1.0, 1.0, 1.0]).map_err(|e| e.to_string())?;
    let u = [0.3, 1.1, 2.0];
    let class = classify(&torus, &[u.to_vec()], CLASSIFY_TOL).map_err(|e| e.to_string())?.label;
    let g = torus.induced_metric(&u).map_err(|e| e.to_string())?;
    let x = DVector::from_fn(3, |k, _| if k == 0 { 1.0 / g[(0, 0)].sqrt() } else { 0.0 });
    let y = DVector::from_fn(3, |k, _| if k == 1 { 1.0 / g[(1, 1)].sqrt() } else { 0.0 });
    let probe = chen_first_report(&torus, &u, &x, &y, Case::TotallyReal, 1.0, class).map_err(|e| e.to_string())?;
    for n in 3..=12i64 {
        let nu = n as usize;
        ensure(chen_first_constant(Case::TotallyReal, nu) == Rational64::new((n - 2) * (n - 1), 8), || "constant".into())?;
        ensure(mean_curvature_coefficient(nu) == Rational64::new(n * n * (n - 2), 4 * (n - 1)), || "mean".into())?;
        ensure(delta22_constant(nu) == Rational64::new(n * n - n - 4, 8), || "delta22 constant".into())?;
    }
    ensure(probe.term("constant") == Some(0.25), || format!("probe constant {:?}", probe.term("constant")))?;
    Ok(format!(
        "30 instances, {reports} (point, plane) reports, min margin {min_margin:.3e}; totally geodesic |margin| <= {geodesic:.1e}; coefficients exact for n=3..12"
    ))
}

fn delta22(suite: &mut Suite) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED ^ 0x22);
    let mut reports = 0;
    let mut min_margin = f64::INFINITY;
    for i in 0..10 {
        let sub = random_totally_real(&mut rng, 4, 4).map_err(|e| e.to_string())?;
        let r = run_chen(&spec_of(&sub), &cfg(DEFAULT_SEED + i as u64, 3, 3), InequalityKind::Delta22);
        let s = r.summary.as_ref().ok_or_else(|| format!("instance {i}: {:?}", r.errors))?;
        ensure(r.exit_code() == 0 && s.violations == 0, || format!("instance {i}: exit {} {:?}", r.exit_code(), r.findings))?;
        reports += r.samples.len();
        min_margin = min_margin.min(s.min_margin.unwrap());
        suite.reports.push(r);
    }
    let slice = linear_real(4, 4).map_err(|e| e.to_string())?;
    let r = run_chen(&spec_of(&slice), &cfg(DEFAULT_SEED, 3, 3), InequalityKind::Delta22);
    ensure(r.exit_code() == 0 && r.samples.iter().all(|s| s.report.is_equality()), || "slice equality".into())?;
    suite.reports.push(r);

    let n = 6;
    let diag = |d: [f64; 6]| DMatrix::from_fn(n, n, |i, j| if i == j { d[i] } else { 0.0 });
    let good = vec![diag([0.5, 1.5, 1.2, 0.8, 2.0, 2.0]), diag([0.0; 6])];
    let d = equality_pattern(&good, &good, InequalityKind::Delta22, 1e-12);
    ensure(d.equality && d.max_residual() < 1e-15, || format!("{d:?}"))?;
    let mut off = good.clone();
    off[1][(2, 4)] = 1e-3;
    off[1][(4, 2)] = 1e-3;
    let d = equality_pattern(&good, &off, InequalityKind::Delta22, 1e-8);
    ensure(!d.equality && (d.sigma_star[1] - 1e-3).abs() < 1e-15, || format!("{d:?}"))?;
    let bad = vec![diag([0.5, 1.5, 1.2, 0.8, 2.1, 2.0])];
    let d = equality_pattern(&bad, &bad, InequalityKind::Delta22, 1e-8);
    ensure(!d.equality, || "pattern break undetected".into())?;
    Ok(format!("10 instances (n=4), {reports} plane-pair reports, min margin {min_margin:.3e}; synthetic σ patterns classified"))
}

fn minimality(suite: &Suite) -> Outcome {
    let mut checked = 0;
    let mut worst = 0.0f64;
    for r in &suite.reports {
        let lagrangian = r.classification.as_ref().is_some_and(|c| c.label == ClassLabel::LagrangianLike);
        for s in &r.samples {
            if lagrangian && s.report.margin.abs() < 1e-8 {
                let h = s.report.h_norm2.max(0.0).sqrt().max(s.report.h_star_norm2.max(0.0).sqrt());
                worst = worst.max(h);
                checked += 1;
            }
        }
    }
    ensure(checked > 0, || "no equality samples on Lagrangian-like instances".into())?;
    ensure(worst < 1e-6, || format!("equality with ‖H‖ = {worst:e}"))?;
    let contradictions = suite.contradictions();
    ensure(contradictions == 0, || format!("{contradictions} contradiction findings"))?;
    Ok(format!("{checked} equality samples, max ‖H‖,‖H*‖ {worst:.1e}; 0 contradictions over {} runs", suite.reports.len()))
}

fn determinism() -> Outcome {
    let sub = random_totally_real(&mut ChaCha8Rng::seed_from_u64(9), 3, 3).map_err(|e| e.to_string())?;
    let spec = spec_of(&sub);
    let c = cfg(DEFAULT_SEED, 4, 3);
    let a = run_chen(&spec, &c, InequalityKind::ChenFirst).render(Format::Json);
    let b = run_chen(&spec, &c, InequalityKind::ChenFirst).render(Format::Json);
    ensure(a == b, || "chen reports differ".into())?;
    let l = LemmaConfig { trials: 1000, restarts: 10, ..LemmaConfig::default() };
    let la = run_lemmas(&l, DEFAULT_SEED).render(Format::Json);
    ensure(la == run_lemmas(&l, DEFAULT_SEED).render(Format::Json), || "lemma reports differ".into())?;
    Ok(format!("chen report {} bytes and lemma report {} bytes identical across runs", a.len(), la.len()))
}

fn main() {
    let start = Instant::now();
    let mut suite = Suite { reports: Vec::new() };
    let results: Vec<(&str, Outcome)> = vec![
        ("lemma suite", lemma_suite()),
        ("AD correctness", ad_correctness()),
        ("structure validators", structure_validators()),
        ("curvature oracles", curvature_oracles()),
        ("Gauss/Ricci residuals", gauss_ricci()),
        ("first inequality, totally real case", chen_first(&mut suite)),
        ("delta(2,2) inequality", delta22(&mut suite)),
        ("minimality", minimality(&suite)),
        ("determinism", determinism()),
    ];
    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} passed in {:.1}s", results.len() - failed, results.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
