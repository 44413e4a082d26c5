//! Ready-made ambient/submanifold pairs.

use rand::Rng;

use crate::ambient::{euclidean, flat_quaternionic, AmbientModel, ConnectionSpec, ModelError};
use crate::expr::{chart_variables, parse, ExprAst};
use crate::specfile::SubmanifoldSpec;
use crate::subman::{ImmersedSubmanifold, SubmanError};

use std::collections::BTreeMap;
use std::f64::consts::TAU;

fn exprs(n: usize, f: &[String]) -> Result<Vec<ExprAst>, ModelError> {
    let us = chart_variables("u", n);
    f.iter().map(|s| parse(s, &us).map_err(|e| ModelError::Invalid(format!("{s}: {e}")))).collect()
}

fn build(ambient: AmbientModel, n: usize, domain: Vec<(f64, f64)>, f: &[String]) -> Result<ImmersedSubmanifold, SubmanError> {
    let f = exprs(n, f)?;
    ImmersedSubmanifold::new(ambient, SubmanifoldSpec { n, domain, f })
}

fn zeros(d: usize) -> Vec<String> {
    vec!["0".to_string(); d]
}

/// Product of circles of the given radii, circle `k` in the `(1, i)` plane of
/// block `k` of `H^m`. Totally real; Lagrangian-like when `n = m`.
pub fn product_torus(m: usize, radii: &[f64]) -> Result<ImmersedSubmanifold, SubmanError> {
    let n = radii.len();
    if n == 0 || n > m {
        return Err(SubmanError::Invalid(format!("torus needs 1 <= n <= m, got n = {n}, m = {m}")));
    }
    if radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(SubmanError::Invalid("torus radii must be positive".into()));
    }
    let mut f = zeros(4 * m);
    for (k, r) in radii.iter().enumerate() {
        f[4 * k] = format!("{r}*cos(u{})", k + 1);
        f[4 * k + 1] = format!("{r}*sin(u{})", k + 1);
    }
    build(flat_quaternionic(m)?, n, vec![(0.0, TAU); n], &f)
}

/// `u ↦ (u_1, 0, 0, 0, u_2, 0, 0, 0, …)`, a totally geodesic real slice.
pub fn linear_real(m: usize, n: usize) -> Result<ImmersedSubmanifold, SubmanError> {
    if n == 0 || n > m {
        return Err(SubmanError::Invalid(format!("real slice needs 1 <= n <= m, got n = {n}, m = {m}")));
    }
    let mut f = zeros(4 * m);
    for k in 0..n {
        f[4 * k] = format!("u{}", k + 1);
    }
    build(flat_quaternionic(m)?, n, vec![(-1.0, 1.0); n], &f)
}

/// The first `k` quaternionic lines of `H^m`, an invariant subspace.
pub fn linear_quaternionic(m: usize, k: usize) -> Result<ImmersedSubmanifold, SubmanError> {
    if k == 0 || k > m {
        return Err(SubmanError::Invalid(format!("quaternionic slice needs 1 <= k <= m, got k = {k}, m = {m}")));
    }
    let mut f = zeros(4 * m);
    for (i, slot) in f.iter_mut().take(4 * k).enumerate() {
        *slot = format!("u{}", i + 1);
    }
    build(flat_quaternionic(m)?, 4 * k, vec![(-1.0, 1.0); 4 * k], &f)
}

/// Graph `u ↦ (u_k, ∂_k ψ(u), 0, 0)_k` of a gradient in `H^m`, which is
/// totally real for any potential `ψ(u_1, …, u_m)`.
pub fn gradient_graph(m: usize, psi: &str) -> Result<ImmersedSubmanifold, SubmanError> {
    if m == 0 {
        return Err(SubmanError::Invalid("graph needs m >= 1".into()));
    }
    let us = chart_variables("u", m);
    let psi = parse(psi, &us).map_err(|e| ModelError::Invalid(e.to_string()))?;
    let mut f = zeros(4 * m);
    for k in 0..m {
        f[4 * k] = format!("u{}", k + 1);
        f[4 * k + 1] = psi.derivative(k).source().to_string();
    }
    build(flat_quaternionic(m)?, m, vec![(-0.5, 0.5); m], &f)
}

/// Round unit sphere `S^n ⊂ R^{n+1}` in hyperspherical coordinates.
pub fn sphere(n: usize) -> Result<ImmersedSubmanifold, SubmanError> {
    if n == 0 {
        return Err(SubmanError::Invalid("sphere needs n >= 1".into()));
    }
    let mut f = Vec::with_capacity(n + 1);
    let mut prefix = String::new();
    for k in 1..=n {
        f.push(format!("{prefix}cos(u{k})"));
        prefix.push_str(&format!("sin(u{k})*"));
    }
    f.push(format!("{prefix}1"));
    let mut domain = vec![(0.3, 2.8); n];
    domain[n - 1] = (0.0, TAU);
    build(euclidean(n + 1)?, n, domain, &f)
}

/// A plane in `H^2` whose second axis is rotated by `angle` from the real
/// into the `i` direction of the first block.
pub fn tilted_plane(angle: f64) -> Result<ImmersedSubmanifold, SubmanError> {
    let (s, c) = angle.sin_cos();
    let mut f = zeros(8);
    f[0] = "u1".into();
    f[1] = format!("{s}*u2");
    f[4] = format!("{c}*u2");
    build(flat_quaternionic(2)?, 2, vec![(-1.0, 1.0); 2], &f)
}

/// Flat `R^4` with a non-trivial skewness tensor, and a curved graph surface.
pub fn skewed_graph() -> Result<ImmersedSubmanifold, SubmanError> {
    let xs = chart_variables("x", 4);
    let p = |s: &str| parse(s, &xs).map_err(|e| ModelError::Invalid(e.to_string()));
    let base = euclidean(4)?;
    let mut k = BTreeMap::new();
    k.insert((0, 0, 2), p("0.3*x2")?);
    k.insert((0, 1, 3), p("0.2 + 0.1*x1*x3")?);
    k.insert((1, 1, 1), p("0.15*x3")?);
    k.insert((2, 2, 3), p("0.25*sin(x4)")?);
    let ambient = AmbientModel::new(
        "skewed_flat(4)",
        4,
        base.domain().to_vec(),
        base.metric_exprs().clone(),
        ConnectionSpec::Skewness(k),
        None,
    )?;
    let f = ["u1", "u2", "0.5*u1^2 - 0.3*u1*u2", "sin(u2) + 0.2*u1^2*u2"].map(String::from);
    build(ambient, 2, vec![(-0.8, 0.8); 2], &f)
}

/// A seeded totally real instance in `H^m`: a product torus with random
/// radii or a gradient graph with a random potential.
pub fn random_totally_real<R: Rng>(rng: &mut R, m: usize, n: usize) -> Result<ImmersedSubmanifold, SubmanError> {
    if rng.gen_bool(0.5) || n != m {
        let radii: Vec<f64> = (0..n).map(|_| (rng.gen_range(0.5..2.0f64) * 1000.0).round() / 1000.0).collect();
        product_torus(m, &radii)
    } else {
        let mut terms = Vec::new();
        for i in 1..=m {
            for j in i..=m {
                let a = (rng.gen_range(-0.5..0.5f64) * 100.0).round() / 100.0;
                terms.push(format!("{a}*u{i}*u{j}"));
            }
            let b = (rng.gen_range(-0.3..0.3f64) * 100.0).round() / 100.0;
            terms.push(format!("{b}*sin(u{i})^2*u{}", i % m + 1));
            let c = (rng.gen_range(-0.2..0.2f64) * 100.0).round() / 100.0;
            terms.push(format!("{c}*u{i}^3"));
        }
        gradient_graph(m, &terms.join(" + "))
    }
}
