use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::{AmbientModel, AmbientPoint, ModelError};
use crate::geom::Tensor4;

pub const STATISTICAL_CHECKS: [&str; 5] =
    ["metric_symmetric", "torsion_free", "codazzi", "duality", "levi_civita_average"];
pub const QUATERNIONIC_CHECKS: [&str; 4] = ["quaternion_relations", "metric_adapted", "hermite_like", "kaehler_like"];
pub const CONSTANT_TYPE_CHECKS: [&str; 2] = ["constant_type", "declared_c"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
    pub passed: bool,
    pub skipped: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckResult {
    pub fn measured(name: &str, residual: f64, tol: f64) -> CheckResult {
        CheckResult { name: name.into(), residual, tol, passed: residual <= tol, skipped: false, note: None }
    }

    pub fn skipped(name: &str, tol: f64, note: impl Into<String>) -> CheckResult {
        CheckResult { name: name.into(), residual: 0.0, tol, passed: true, skipped: true, note: Some(note.into()) }
    }

    fn with_note(mut self, note: impl Into<String>) -> CheckResult {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointFailure {
    pub index: usize,
    pub point: Vec<f64>,
    pub message: String,
}

/// Per-check maxima over the sampled points.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
    pub points: Vec<Vec<f64>>,
    pub failures: Vec<PointFailure>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Names of the measured checks that failed.
    pub fn failing(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }

    fn merge(&mut self, other: ValidationReport) {
        self.checks.extend(other.checks);
        for f in other.failures {
            if !self.failures.iter().any(|g| g.index == f.index && g.message == f.message) {
                self.failures.push(f);
            }
        }
    }
}

fn eval_all(model: &AmbientModel, points: &[Vec<f64>]) -> (Vec<(usize, AmbientPoint)>, Vec<PointFailure>) {
    let results: Vec<_> = points.par_iter().map(|p| model.eval_point(p)).collect();
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (index, r) in results.into_iter().enumerate() {
        match r {
            Ok(p) => ok.push((index, p)),
            Err(e) => failures.push(PointFailure { index, point: points[index].clone(), message: e.to_string() }),
        }
    }
    (ok, failures)
}

fn max_over<F: Fn(&AmbientPoint) -> f64 + Sync>(pts: &[(usize, AmbientPoint)], f: F) -> f64 {
    pts.par_iter().map(|(_, p)| f(p)).collect::<Vec<_>>().into_iter().fold(0.0, f64::max)
}

fn nabla_g(p: &AmbientPoint, i: usize, j: usize, k: usize) -> f64 {
    let (g, dg, gam) = (p.metric.g(), p.metric.dg(), p.conn.gamma());
    let d = g.nrows();
    dg[(i, j, k)] - (0..d).map(|m| gam[(m, i, j)] * g[(m, k)] + gam[(m, i, k)] * g[(j, m)]).sum::<f64>()
}

fn codazzi_residual(p: &AmbientPoint) -> f64 {
    let d = p.metric.dim();
    let mut r: f64 = 0.0;
    for i in 0..d {
        for j in (i + 1)..d {
            for k in 0..d {
                r = r.max((nabla_g(p, i, j, k) - nabla_g(p, j, i, k)).abs());
            }
        }
    }
    r
}

fn duality_residual(p: &AmbientPoint) -> f64 {
    let (g, dg, gam, gs) = (p.metric.g(), p.metric.dg(), p.conn.gamma(), p.dual.gamma());
    let d = g.nrows();
    let mut r: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let v = dg[(i, j, k)]
                    - (0..d).map(|m| gam[(m, i, j)] * g[(m, k)] + gs[(m, i, k)] * g[(j, m)]).sum::<f64>();
                r = r.max(v.abs());
            }
        }
    }
    r
}

/// Compares the lower-index-symmetric part of `(Γ + Γ*)/2` with `Γ°`;
/// antisymmetric parts are the torsion check's business.
fn average_residual(p: &AmbientPoint) -> f64 {
    let (a, b, lc) = (p.conn.gamma(), p.dual.gamma(), p.lc.gamma());
    let d = p.metric.dim();
    let mut r: f64 = 0.0;
    for k in 0..d {
        for i in 0..d {
            for j in i..d {
                let avg = 0.25 * (a[(k, i, j)] + a[(k, j, i)] + b[(k, i, j)] + b[(k, j, i)]);
                r = r.max((avg - lc[(k, i, j)]).abs());
            }
        }
    }
    r
}

/// Torsion, Codazzi symmetry of `∇g`, the duality identity and the
/// Levi-Civita average, each maximised over `points`.
pub fn validate_statistical(model: &AmbientModel, points: &[Vec<f64>], tol: f64) -> ValidationReport {
    let (pts, failures) = eval_all(model, points);
    let checks = vec![
        CheckResult::measured(STATISTICAL_CHECKS[0], max_over(&pts, |p| p.metric_asymmetry), tol),
        CheckResult::measured(STATISTICAL_CHECKS[1], max_over(&pts, |p| p.conn.torsion().max(p.dual.torsion())), tol),
        CheckResult::measured(STATISTICAL_CHECKS[2], max_over(&pts, codazzi_residual), tol),
        CheckResult::measured(STATISTICAL_CHECKS[3], max_over(&pts, duality_residual), tol),
        CheckResult::measured(STATISTICAL_CHECKS[4], max_over(&pts, average_residual), tol),
    ];
    ValidationReport { checks, points: points.to_vec(), failures }
}

fn quaternion_residual(p: &AmbientPoint) -> f64 {
    let q = p.quat.as_ref().expect("quaternionic point");
    let d = p.metric.dim();
    let id = DMatrix::<f64>::identity(d, d);
    let mut r: f64 = 0.0;
    for a in 0..3 {
        let (j, j1, j2) = (&q.j[a], &q.j[(a + 1) % 3], &q.j[(a + 2) % 3]);
        r = r.max((j * j + &id).abs().max());
        r = r.max((j * j1 - j2).abs().max());
        r = r.max((j1 * j + j2).abs().max());
    }
    r
}

fn adapted_residual(p: &AmbientPoint) -> f64 {
    let q = p.quat.as_ref().expect("quaternionic point");
    let g = p.metric.g();
    q.j.iter().map(|j| (j.transpose() * g * j - g).abs().max()).fold(0.0, f64::max)
}

fn hermite_residual(p: &AmbientPoint) -> f64 {
    let q = p.quat.as_ref().expect("quaternionic point");
    let g = p.metric.g();
    let mut r: f64 = 0.0;
    for (j, js) in q.j.iter().zip(&q.j_star) {
        r = r.max((j.transpose() * g + g * js).abs().max());
        let jss = super::compute_dual_j(g, js).expect("metric already inverted");
        r = r.max((jss - j).abs().max());
        r = r.max((j.transpose() * g * js - g).abs().max());
    }
    r
}

fn kaehler_residual(p: &AmbientPoint) -> f64 {
    let q = p.quat.as_ref().expect("quaternionic point");
    let gam = p.conn.gamma();
    let d = p.metric.dim();
    let mut r: f64 = 0.0;
    for a in 0..3 {
        let (j, dj) = (&q.j[a], &q.dj[a]);
        let (wa2, ja1) = (&q.omega[(a + 2) % 3], &q.j[(a + 1) % 3]);
        let (wa1, ja2) = (&q.omega[(a + 1) % 3], &q.j[(a + 2) % 3]);
        for i in 0..d {
            for k in 0..d {
                for c in 0..d {
                    let mut lhs = dj[(i, k, c)];
                    for m in 0..d {
                        lhs += gam[(k, i, m)] * j[(m, c)] - gam[(m, i, c)] * j[(k, m)];
                    }
                    let rhs = wa2[i] * ja1[(k, c)] - wa1[i] * ja2[(k, c)];
                    r = r.max((lhs - rhs).abs());
                }
            }
        }
    }
    r
}

/// Quaternion relations, metric adaptedness, Hermite-like identities and
/// the Kaehler-like derivative condition.
pub fn validate_quaternionic(
    model: &AmbientModel,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<ValidationReport, ModelError> {
    if model.quaternionic().is_none() {
        return Err(ModelError::MissingQuaternionic);
    }
    let (pts, failures) = eval_all(model, points);
    let checks = vec![
        CheckResult::measured(QUATERNIONIC_CHECKS[0], max_over(&pts, quaternion_residual), tol),
        CheckResult::measured(QUATERNIONIC_CHECKS[1], max_over(&pts, adapted_residual), tol),
        CheckResult::measured(QUATERNIONIC_CHECKS[2], max_over(&pts, hermite_residual), tol),
        CheckResult::measured(QUATERNIONIC_CHECKS[3], max_over(&pts, kaehler_residual), tol),
    ];
    Ok(ValidationReport { checks, points: points.to_vec(), failures })
}

/// Components `B^l_ijk` of the constant-type form with `c = 1`:
/// `¼{g(Y,Z)X − g(X,Z)Y + Σ[g(Z,J_αY)J_αX − g(Z,J_αX)J_αY]
///    + Σ[g(X,J_αY) − g(J_αX,Y)]J_αZ}`.
pub fn constant_type_tensor(g: &DMatrix<f64>, j: &[DMatrix<f64>; 3]) -> Tensor4 {
    let d = g.nrows();
    let gj: Vec<DMatrix<f64>> = j.iter().map(|ja| g * ja).collect();
    Tensor4::from_fn(d, |l, i, jj, k| {
        let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let mut v = g[(jj, k)] * delta(l, i) - g[(i, k)] * delta(l, jj);
        for a in 0..3 {
            let (ja, gja) = (&j[a], &gj[a]);
            v += gja[(k, jj)] * ja[(l, i)] - gja[(k, i)] * ja[(l, jj)];
            v += (gja[(i, jj)] - gja[(jj, i)]) * ja[(l, k)];
        }
        0.25 * v
    })
}

/// Least-squares fit of `R = cB`, `R* = cB*` over all sampled components.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantTypeFit {
    /// `None` when every `B` component vanishes.
    pub c_fit: Option<f64>,
    pub residual: f64,
    pub residual_star: f64,
    /// Residual with the declared constant, when one is declared.
    pub residual_declared: Option<f64>,
}

pub fn constant_type_fit(model: &AmbientModel, points: &[Vec<f64>]) -> Result<ConstantTypeFit, ModelError> {
    if model.quaternionic().is_none() {
        return Err(ModelError::MissingQuaternionic);
    }
    let data: Vec<(Tensor4, Tensor4, Tensor4, Tensor4)> = points
        .par_iter()
        .map(|pt| {
            let p = model.eval_point(pt)?;
            let q = p.quat.as_ref().expect("quaternionic point");
            let c = p.curvatures();
            let b = constant_type_tensor(p.metric.g(), &q.j);
            let bs = constant_type_tensor(p.metric.g(), &q.j_star);
            Ok((c.r.components().clone(), b, c.r_star.components().clone(), bs))
        })
        .collect::<Result<_, ModelError>>()?;
    let (mut num, mut den) = (0.0, 0.0);
    for (r, b, rs, bs) in &data {
        for (x, y) in r.as_slice().iter().zip(b.as_slice()).chain(rs.as_slice().iter().zip(bs.as_slice())) {
            num += x * y;
            den += y * y;
        }
    }
    let c_fit = (den > 1e-300).then(|| num / den);
    let resid = |c: f64| {
        let mut m: (f64, f64) = (0.0, 0.0);
        for (r, b, rs, bs) in &data {
            for (x, y) in r.as_slice().iter().zip(b.as_slice()) {
                m.0 = m.0.max((x - c * y).abs());
            }
            for (x, y) in rs.as_slice().iter().zip(bs.as_slice()) {
                m.1 = m.1.max((x - c * y).abs());
            }
        }
        m
    };
    let (residual, residual_star) = resid(c_fit.unwrap_or(0.0));
    let residual_declared = model.declared_c().map(|c| {
        let (a, b) = resid(c);
        a.max(b)
    });
    Ok(ConstantTypeFit { c_fit, residual, residual_star, residual_declared })
}

/// Full validator suite: statistical checks, then quaternionic checks when
/// `J` is present, then the constant-type fit when those pass.
pub fn validate_model(model: &AmbientModel, points: &[Vec<f64>], tol: f64) -> ValidationReport {
    let mut report = validate_statistical(model, points, tol);
    if model.quaternionic().is_none() {
        return report;
    }
    let quat = validate_quaternionic(model, points, tol).expect("quaternionic model");
    let quat_ok = quat.passed();
    report.merge(quat);
    if !quat_ok {
        for name in CONSTANT_TYPE_CHECKS {
            report.checks.push(CheckResult::skipped(name, tol, "quaternionic checks failed"));
        }
        return report;
    }
    match constant_type_fit(model, points) {
        Ok(fit) => {
            let note = match fit.c_fit {
                Some(c) => format!("c_fit = {c}"),
                None => "degenerate fit".to_string(),
            };
            report.checks.push(
                CheckResult::measured(CONSTANT_TYPE_CHECKS[0], fit.residual.max(fit.residual_star), tol).with_note(note),
            );
            match model.declared_c() {
                Some(c) => {
                    let gap = (fit.c_fit.unwrap_or(0.0) - c).abs();
                    report.checks.push(
                        CheckResult::measured(CONSTANT_TYPE_CHECKS[1], gap, tol).with_note(format!("declared c = {c}")),
                    );
                }
                None => report.checks.push(CheckResult::skipped(CONSTANT_TYPE_CHECKS[1], tol, "c unknown")),
            }
        }
        Err(e) => {
            report.failures.push(PointFailure { index: 0, point: vec![], message: e.to_string() });
            for name in CONSTANT_TYPE_CHECKS {
                report.checks.push(CheckResult::skipped(name, tol, "evaluation failed"));
            }
        }
    }
    report
}
