use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{AmbientModel, ConnectionSpec, ModelError, QuaternionicSpec};
use crate::expr::{chart_variables, parse, ExprAst, ExprMatrix};

fn numeric_matrix(m: &DMatrix<f64>, nvars: usize) -> ExprMatrix {
    let entries = m.transpose().iter().map(|&v| ExprAst::constant(v, nvars)).collect();
    ExprMatrix::new(m.nrows(), m.ncols(), entries).expect("square")
}

fn diagonal_metric(dim: usize, diag: &str) -> Result<ExprMatrix, ModelError> {
    let vars = chart_variables("x", dim);
    let e = parse(diag, &vars).map_err(|e| ModelError::Invalid(e.to_string()))?;
    let mut m = ExprMatrix::zeros(dim, dim, dim);
    for i in 0..dim {
        m.set(i, i, e.clone());
    }
    Ok(m)
}

/// Left multiplication by `i`, `j`, `k` on each block `(1, i, j, k)` of `H^m`.
pub fn standard_j(m: usize) -> [DMatrix<f64>; 3] {
    let blocks: [&[(usize, usize, f64)]; 3] = [
        &[(0, 1, -1.0), (1, 0, 1.0), (2, 3, -1.0), (3, 2, 1.0)],
        &[(0, 2, -1.0), (1, 3, 1.0), (2, 0, 1.0), (3, 1, -1.0)],
        &[(0, 3, -1.0), (1, 2, -1.0), (2, 1, 1.0), (3, 0, 1.0)],
    ];
    blocks.map(|entries| {
        let mut j = DMatrix::zeros(4 * m, 4 * m);
        for b in 0..m {
            for &(r, c, v) in entries {
                j[(4 * b + r, 4 * b + c)] = v;
            }
        }
        j
    })
}

/// Flat `H^m` with the trivial statistical structure, `ω = 0` and `c = 0`.
pub fn flat_quaternionic(m: usize) -> Result<AmbientModel, ModelError> {
    if m == 0 {
        return Err(ModelError::Invalid("flat_quaternionic needs m >= 1".into()));
    }
    let d = 4 * m;
    let js = standard_j(m);
    let q = QuaternionicSpec {
        j: [numeric_matrix(&js[0], d), numeric_matrix(&js[1], d), numeric_matrix(&js[2], d)],
        omega: [0, 1, 2].map(|_| vec![ExprAst::constant(0.0, d); d]),
        c: Some(0.0),
    };
    AmbientModel::new(
        format!("flat_quaternionic({m})"),
        d,
        vec![(-1.0, 1.0); d],
        numeric_matrix(&DMatrix::identity(d, d), d),
        ConnectionSpec::trivial(),
        Some(q),
    )
}

/// Flat `R^d` with the trivial statistical structure.
pub fn euclidean(d: usize) -> Result<AmbientModel, ModelError> {
    if d == 0 {
        return Err(ModelError::Invalid("euclidean needs d >= 1".into()));
    }
    AmbientModel::new(
        format!("euclidean({d})"),
        d,
        vec![(-1.0, 1.0); d],
        numeric_matrix(&DMatrix::identity(d, d), d),
        ConnectionSpec::trivial(),
        None,
    )
}

/// Hessian metric `g = ∂²φ` with the flat connection `Γ = 0` and its dual.
pub fn hessian(potential: &str, dim: usize, domain: Vec<(f64, f64)>) -> Result<AmbientModel, ModelError> {
    let vars = chart_variables("x", dim);
    let phi = parse(potential, &vars).map_err(|e| ModelError::Invalid(e.to_string()))?;
    let mut metric = ExprMatrix::zeros(dim, dim, dim);
    for i in 0..dim {
        let di = phi.derivative(i);
        for j in 0..dim {
            metric.set(i, j, di.derivative(j));
        }
    }
    let model = AmbientModel::new(
        format!("hessian({potential})"),
        dim,
        domain,
        metric,
        ConnectionSpec::Explicit(BTreeMap::new()),
        None,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x4E55);
    let mut points = model.sample_points(64, &mut rng);
    points.push(model.domain().iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect());
    for p in points {
        let mut vals = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                vals[(i, j)] = model.metric_exprs().get(i, j).eval(&p)?;
            }
        }
        let eigenvalue = SymmetricEigen::new(vals).eigenvalues.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        if !(eigenvalue > crate::geom::MIN_METRIC_EIGENVALUE) {
            return Err(ModelError::NotConvex { point: p, eigenvalue });
        }
    }
    Ok(model)
}

/// Univariate normal family on `(μ, σ)` with the Amari α-structure:
/// Fisher metric `diag(1/σ², 2/σ²)` and skewness `K = −(α/2)T`.
pub fn normal_family(alpha: f64) -> Result<AmbientModel, ModelError> {
    if !alpha.is_finite() {
        return Err(ModelError::Invalid("alpha must be finite".into()));
    }
    let vars = chart_variables("x", 2);
    let p = |s: String| parse(&s, &vars).map_err(|e| ModelError::Invalid(e.to_string()));
    let mut metric = ExprMatrix::zeros(2, 2, 2);
    metric.set(0, 0, p("1/x2^2".into())?);
    metric.set(1, 1, p("2/x2^2".into())?);
    let mut k = BTreeMap::new();
    if alpha != 0.0 {
        k.insert((0, 0, 1), p(format!("{}/x2^3", -alpha))?);
        k.insert((1, 1, 1), p(format!("{}/x2^3", -4.0 * alpha))?);
    }
    AmbientModel::new(
        format!("normal_family({alpha})"),
        2,
        vec![(-1.0, 1.0), (0.5, 2.0)],
        metric,
        ConnectionSpec::Skewness(k),
        None,
    )
}

/// Round sphere of radius `r` in the stereographic chart,
/// `g = 4r²δ/(1 + |x|²)²`, with the trivial statistical structure.
pub fn round_sphere(n: usize, radius: f64) -> Result<AmbientModel, ModelError> {
    if n == 0 || !(radius > 0.0) || !radius.is_finite() {
        return Err(ModelError::Invalid("round_sphere needs n >= 1 and radius > 0".into()));
    }
    let r2 = (1..=n).map(|i| format!("x{i}^2")).collect::<Vec<_>>().join(" + ");
    let metric = diagonal_metric(n, &format!("{}/(1 + {r2})^2", 4.0 * radius * radius))?;
    AmbientModel::new(
        format!("round_sphere({n}, {radius})"),
        n,
        vec![(-1.0, 1.0); n],
        metric,
        ConnectionSpec::trivial(),
        None,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{gram_schmidt, sectional, Plane};
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;

    #[test]
    fn standard_j_is_a_quaternion_triple() {
        for m in 1..=3 {
            let [j1, j2, j3] = standard_j(m);
            let id = DMatrix::<f64>::identity(4 * m, 4 * m);
            for j in [&j1, &j2, &j3] {
                assert_eq!(j * j, -&id);
                assert_eq!(j.transpose(), -j);
            }
            assert_eq!(&j1 * &j2, j3);
            assert_eq!(&j2 * &j3, j1);
            assert_eq!(&j3 * &j1, j2);
            assert_eq!(&j2 * &j1, -&j3);
        }
    }

    #[test]
    fn flat_quaternionic_data() {
        let m = flat_quaternionic(1).unwrap();
        assert_eq!(m.dim(), 4);
        let p = m.eval_point(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(p.metric.g(), &DMatrix::identity(4, 4));
        assert_eq!(p.conn.gamma().max_abs(), 0.0);
        assert_eq!(p.dual.gamma().max_abs(), 0.0);
        let q = p.quat.unwrap();
        assert_eq!(q.j, standard_j(1));
        assert_eq!(q.j_star, standard_j(1));
        assert!(q.omega.iter().all(|w| w.iter().all(|&v| v == 0.0)));
        assert!(flat_quaternionic(0).is_err());
    }

    #[test]
    fn normal_family_zero_is_self_dual() {
        let m = normal_family(0.0).unwrap();
        let p = m.eval_point(&[0.0, 1.3]).unwrap();
        assert!(p.conn.gamma().max_abs_diff(p.dual.gamma()) < 1e-15);
        assert!(p.conn.gamma().max_abs_diff(p.lc.gamma()) < 1e-15);
    }

    #[test]
    fn round_sphere_has_curvature_inverse_radius_squared() {
        let r = 2.0;
        let m = round_sphere(3, r).unwrap();
        let p = m.eval_point(&[0.2, -0.3, 0.5]).unwrap();
        let c = p.curvatures();
        let f = gram_schmidt(
            p.metric.g(),
            &[DVector::from_vec(vec![1.0, 2.0, 0.0]), DVector::from_vec(vec![0.0, 1.0, -1.0])],
        )
        .unwrap();
        let pl = Plane::new(p.metric.g(), f.vectors()[0].clone(), f.vectors()[1].clone()).unwrap();
        assert_abs_diff_eq!(sectional(p.metric.g(), &c.r_lc, &pl), 1.0 / (r * r), epsilon = 1e-10);
        assert!(round_sphere(2, 0.0).is_err());
    }

    #[test]
    fn hessian_models() {
        let m = hessian("x1^2 + x1*x2 + x2^2 + exp(x1)", 2, vec![(-1.0, 1.0); 2]).unwrap();
        let p = m.eval_point(&[0.5, 0.0]).unwrap();
        assert_abs_diff_eq!(p.metric.g()[(0, 0)], 2.0 + 0.5f64.exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(p.metric.g()[(0, 1)], 1.0);
        assert_eq!(p.conn.gamma().max_abs(), 0.0);
        // Hessian structures: Γ* lowered is ∂³φ
        assert_abs_diff_eq!(p.dual.gamma()[(0, 0, 0)] * p.metric.g()[(0, 0)] + p.dual.gamma()[(1, 0, 0)] * p.metric.g()[(1, 0)], 0.5f64.exp(), epsilon = 1e-13);
        let err = hessian("x1^2 - x2^2", 2, vec![(-1.0, 1.0); 2]).unwrap_err();
        assert!(matches!(err, ModelError::NotConvex { .. }));
    }
}
