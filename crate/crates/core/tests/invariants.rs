use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use chenverify::ambient::{normal_family, round_sphere, validate_statistical};
use chenverify::chen::lemmas::LemmaConstant;
use chenverify::chen::{chen_first_report, Case, InequalityKind};
use chenverify::families::product_torus;
use chenverify::geom::{gram_schmidt, inner, sectional_k, KCurvatureWeight, Plane};
use chenverify::harness::{generate, run_chen, run_lemmas, Format, GenerateParams, LemmaConfig, RunConfig};
use chenverify::subman::ClassLabel;

fn vec_of(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dual_curvatures_pair_antisymmetrically(
        alpha in -3.0f64..3.0,
        mu in -0.9f64..0.9,
        sigma in 0.6f64..1.9,
        v in prop::collection::vec(-1.0f64..1.0, 8),
    ) {
        let model = normal_family(alpha).unwrap();
        let p = model.eval_point(&[mu, sigma]).unwrap();
        let c = p.curvatures();
        let g = p.metric.g();
        let (x, y, z, w) = (vec_of(&v[0..2]), vec_of(&v[2..4]), vec_of(&v[4..6]), vec_of(&v[6..8]));
        let lhs = inner(g, &c.r.apply(&x, &y, &z), &w);
        let rhs = inner(g, &c.r_star.apply(&x, &y, &w), &z);
        prop_assert!((lhs + rhs).abs() < 1e-9, "{lhs} vs {rhs}");
    }

    #[test]
    fn normal_family_is_statistical(alpha in -3.0f64..3.0, seed in any::<u64>()) {
        let model = normal_family(alpha).unwrap();
        let points = model.sample_points(4, &mut ChaCha8Rng::seed_from_u64(seed));
        let v = validate_statistical(&model, &points, 1e-8);
        prop_assert!(v.passed(), "{:?}", v.failing());
    }

    #[test]
    fn k_curvature_vanishes_without_skewness(
        radius in 0.5f64..3.0,
        x in prop::collection::vec(-0.8f64..0.8, 2),
        a in prop::collection::vec(-1.0f64..1.0, 4),
    ) {
        let model = round_sphere(2, radius).unwrap();
        let p = model.eval_point(&x).unwrap();
        let c = p.curvatures();
        let g = p.metric.g();
        let frame = gram_schmidt(g, &[vec_of(&a[0..2]), vec_of(&a[2..4])]);
        prop_assume!(frame.is_ok());
        let v = frame.unwrap().vectors().to_vec();
        let plane = Plane::new(g, v[0].clone(), v[1].clone()).unwrap();
        let k = sectional_k(g, &c.r, &c.r_star, &c.r_lc, &plane, KCurvatureWeight::Full).unwrap();
        prop_assert!(k.abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn torus_satisfies_gauss_and_ricci(
        radii in prop::collection::vec(0.5f64..2.0, 3),
        u in prop::collection::vec(0.0f64..6.28, 3),
        seed in any::<u64>(),
    ) {
        let torus = product_torus(3, &radii).unwrap();
        let r = torus.gauss_ricci_residuals(&u, 4, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!(r.max() < 1e-8, "{r:?}");
    }

    #[test]
    fn first_inequality_holds_on_tori(
        radii in prop::collection::vec(0.5f64..2.0, 3),
        u in prop::collection::vec(0.0f64..6.28, 3),
        a in prop::collection::vec(-1.0f64..1.0, 6),
    ) {
        let torus = product_torus(3, &radii).unwrap();
        let g = torus.induced_metric(&u).unwrap();
        let frame = gram_schmidt(&g, &[vec_of(&a[0..3]), vec_of(&a[3..6])]);
        prop_assume!(frame.is_ok());
        let v = frame.unwrap().vectors().to_vec();
        let r = chen_first_report(&torus, &u, &v[0], &v[1], Case::TotallyReal, 0.0, ClassLabel::LagrangianLike)
            .unwrap();
        prop_assert!(r.holds, "margin {}", r.margin);
    }

    #[test]
    fn harness_runs_are_reproducible(seed in any::<u64>()) {
        let params = GenerateParams { m: Some(3), sub: Some("torus".into()), ..Default::default() };
        let spec = generate("flat_quaternionic", &params).unwrap();
        let cfg = RunConfig { seed, samples: 2, planes: 2, tol: None, case: None };
        let a = run_chen(&spec, &cfg, InequalityKind::ChenFirst);
        let b = run_chen(&spec, &cfg, InequalityKind::ChenFirst);
        prop_assert_eq!(a.exit_code(), 0);
        prop_assert_eq!(a.render(Format::Json), b.render(Format::Json));
        let lc = LemmaConfig { n_min: 3, n_max: 4, trials: 200, constant: LemmaConstant::Corrected, restarts: 4 };
        prop_assert_eq!(run_lemmas(&lc, seed).render(Format::Json), run_lemmas(&lc, seed).render(Format::Json));
    }
}
