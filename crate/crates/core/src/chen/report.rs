use nalgebra::{DMatrix, DVector};
use num_rational::Rational64;
use serde::Serialize;
use thiserror::Error;

use crate::geom::{
    gram_residual, scalar_of, scalar_tau, sectional, sectional_k, Frame, FrameKind, GeomError, KCurvatureWeight,
    Plane, ORTHONORMAL_TOL,
};
use crate::subman::{ClassLabel, ImmersedSubmanifold, InducedData, PointCurvatures, SubmanError};

/// Relative slack in [`InequalityReport::holds`].
pub const INEQUALITY_TOL: f64 = 1e-8;
/// Default tolerance for [`equality_case_check`].
pub const EQUALITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChenError {
    #[error(transparent)]
    Submanifold(#[from] SubmanError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("case {case} does not apply to a {class} submanifold")]
    ClassificationMismatch { case: &'static str, class: &'static str },
    #[error("inequality needs n >= {min}, got {got}")]
    DimensionTooSmall { min: usize, got: usize },
    #[error("planes are not orthonormal and mutually orthogonal (residual {residual:e})")]
    PlanesNotOrthogonal { residual: f64 },
    #[error("holomorphic case needs a quaternionic ambient")]
    MissingQuaternionic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityKind {
    ChenFirst,
    Delta22,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    /// Holomorphic bound as stated, with `½(tr P_α)²`.
    HolomorphicPrinted,
    /// Holomorphic bound with `(tr P_α)²`, as it appears in the derivation.
    HolomorphicProofVariant,
    TotallyReal,
}

impl Case {
    pub fn as_str(self) -> &'static str {
        match self {
            Case::HolomorphicPrinted => "holomorphic_printed",
            Case::HolomorphicProofVariant => "holomorphic_proof_variant",
            Case::TotallyReal => "totally_real",
        }
    }

    pub fn is_holomorphic(self) -> bool {
        !matches!(self, Case::TotallyReal)
    }

    pub fn applies_to(self, class: ClassLabel) -> bool {
        if self.is_holomorphic() {
            class == ClassLabel::Invariant
        } else {
            class.is_totally_real()
        }
    }
}

/// Coefficient of `c` in the constant term of the first inequality.
pub fn chen_first_constant(case: Case, n: usize) -> Rational64 {
    let n = n as i64;
    match case {
        Case::TotallyReal => Rational64::new((n - 2) * (n - 1), 8),
        _ => Rational64::new((n - 2) * (n + 1), 8),
    }
}

/// Coefficient of `c` in the constant term of the δ(2,2) inequality.
pub fn delta22_constant(n: usize) -> Rational64 {
    let n = n as i64;
    Rational64::new(n * n - n - 4, 8)
}

/// Coefficient of `‖H‖² + ‖H*‖²` in both inequalities as stated.
pub fn mean_curvature_coefficient(n: usize) -> Rational64 {
    let n = n as i64;
    Rational64::new(n * n * (n - 2), 4 * (n - 1))
}

/// Coefficient of `‖H‖² + ‖H*‖²` that the second lemma yields for δ(2,2).
pub fn delta22_mean_curvature_coefficient_derived(n: usize) -> Rational64 {
    let n = n as i64;
    Rational64::new(n * n * (n - 3), 4 * (n - 2))
}

fn to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub name: String,
    pub value: f64,
}

fn term(name: &str, value: f64) -> Term {
    Term { name: name.to_string(), value }
}

fn sum(terms: &[Term]) -> f64 {
    terms.iter().map(|t| t.value).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EqualityDiagnostics {
    /// Residual of the σ pattern per normal direction.
    pub sigma: Vec<f64>,
    /// Residual of the σ* pattern per normal direction.
    pub sigma_star: Vec<f64>,
    pub tol: f64,
    pub equality: bool,
}

impl EqualityDiagnostics {
    pub fn max_residual(&self) -> f64 {
        self.sigma.iter().chain(&self.sigma_star).fold(0.0, |m, &v| m.max(v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub kind: InequalityKind,
    pub case: Case,
    pub classification: ClassLabel,
    pub point: Vec<f64>,
    /// Chart coordinates of the spanning vectors, two per plane.
    pub planes: Vec<Vec<f64>>,
    pub c: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
    pub lhs_terms: Vec<Term>,
    pub rhs_terms: Vec<Term>,
    /// Alternative readings of individual terms; not part of `rhs`.
    pub alternatives: Vec<Term>,
    pub h_norm2: f64,
    pub h_star_norm2: f64,
    pub equality: EqualityDiagnostics,
}

impl InequalityReport {
    fn assemble(
        kind: InequalityKind,
        case: Case,
        classification: ClassLabel,
        data: &InducedData,
        planes: Vec<Vec<f64>>,
        c: f64,
        lhs_terms: Vec<Term>,
        rhs_terms: Vec<Term>,
        alternatives: Vec<Term>,
    ) -> InequalityReport {
        let lhs = sum(&lhs_terms);
        let rhs = sum(&rhs_terms);
        InequalityReport {
            kind,
            case,
            classification,
            point: data.u.clone(),
            planes,
            c,
            lhs,
            rhs,
            margin: lhs - rhs,
            holds: lhs >= rhs - INEQUALITY_TOL * (1.0 + rhs.abs()),
            lhs_terms,
            rhs_terms,
            alternatives,
            h_norm2: data.h_norm2(),
            h_star_norm2: data.h_star_norm2(),
            equality: equality_case_check(data, kind, EQUALITY_TOL),
        }
    }

    /// Whether the margin vanishes at the inequality tolerance.
    pub fn is_equality(&self) -> bool {
        self.margin.abs() <= INEQUALITY_TOL * (1.0 + self.rhs.abs())
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.lhs_terms.iter().chain(&self.rhs_terms).chain(&self.alternatives).find(|t| t.name == name).map(|t| t.value)
    }
}

/// Curvature data at a point with a tangent frame adapted to given planes.
struct Setting {
    data: InducedData,
    /// Chart coordinates of the frame.
    chart: Vec<DVector<f64>>,
    g: DMatrix<f64>,
    induced: crate::ambient::CurvatureSet,
    ambient: crate::ambient::CurvatureSet,
}

impl Setting {
    fn new(sub: &ImmersedSubmanifold, curv: &PointCurvatures, leading: &[DVector<f64>]) -> Result<Setting, ChenError> {
        let u = &curv.u;
        let residual = gram_residual(&sub.induced_metric(u)?, leading);
        if residual > ORTHONORMAL_TOL {
            return Err(ChenError::PlanesNotOrthogonal { residual });
        }
        let data = sub.induced_data(u, leading)?;
        let g = data.induced_metric.clone();
        let chart = (0..data.n()).map(|i| data.chart_vector(i)).collect();
        Ok(Setting { induced: curv.induced.clone(), ambient: curv.ambient.clone(), data, chart, g })
    }

    fn plane(&self, i: usize, j: usize) -> Result<Plane, GeomError> {
        Plane::new(&self.g, self.chart[i].clone(), self.chart[j].clone())
    }

    fn tau(&self) -> Result<f64, GeomError> {
        let c = &self.induced;
        let frame = Frame::new(&self.g, self.chart.clone(), FrameKind::Tangent)?;
        scalar_tau(&self.g, &c.r, &c.r_star, &c.r_lc, &frame, KCurvatureWeight::Full)
    }

    fn k(&self, i: usize, j: usize) -> Result<f64, GeomError> {
        let c = &self.induced;
        sectional_k(&self.g, &c.r, &c.r_star, &c.r_lc, &self.plane(i, j)?, KCurvatureWeight::Full)
    }

    fn tau_lc(&self) -> f64 {
        scalar_of(&self.g, &self.induced.r_lc, &self.chart)
    }

    fn k_lc(&self, i: usize, j: usize) -> Result<f64, GeomError> {
        Ok(sectional(&self.g, &self.induced.r_lc, &self.plane(i, j)?))
    }

    fn ambient_plane(&self, r: &crate::geom::CurvatureAtPoint, i: usize, j: usize) -> f64 {
        let e = &self.data.tangent;
        r.lowered_value(&self.data.g_hat, &e[i], &e[j], &e[j], &e[i])
    }

    fn ambient_tau_lc(&self) -> f64 {
        scalar_of(&self.data.g_hat, &self.ambient.r_lc, &self.data.tangent)
    }

    /// `½ Σ (R̂ + R̂*)(e_i, e_j, e_j, e_i)` over pairs `i < j` not excluded.
    fn ambient_mixed_sum(&self, excluded: &[(usize, usize)]) -> f64 {
        let n = self.data.n();
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                if !excluded.contains(&(i, j)) {
                    s += 0.5 * (self.ambient_plane(&self.ambient.r, i, j) + self.ambient_plane(&self.ambient.r_star, i, j));
                }
            }
        }
        s
    }

    fn p(&self) -> Result<(&[DMatrix<f64>], &[DMatrix<f64>]), ChenError> {
        match (&self.data.p_alpha, &self.data.p_alpha_star) {
            (Some(p), Some(ps)) => Ok((p, ps)),
            _ => Err(ChenError::MissingQuaternionic),
        }
    }

    /// `g(e_i, J_α e_j)` for each α.
    fn pairing(&self, i: usize, j: usize) -> Result<[f64; 3], ChenError> {
        let (p, _) = self.p()?;
        // (P_α)_{ji} = ĝ(J_α e_i, e_j)
        Ok([0, 1, 2].map(|a| p[a][(i, j)]))
    }

    /// The three J-pairing terms attached to the plane `(e_i, e_j)`, as
    /// stated, plus the alternative last term `−½ Σ g(J e_i, e_j) g(J e_j, e_i)`.
    fn j_terms(&self, i: usize, j: usize, label: &str, last: LastPairing) -> Result<(Vec<Term>, Term), ChenError> {
        let e_i_je_j = self.pairing(i, j)?;
        let je_i_e_j = self.pairing(j, i)?;
        let sq = |v: [f64; 3]| v.iter().map(|x| x * x).sum::<f64>();
        let last_value: f64 = match last {
            // g(e_1, J e_2) g(e_2, J e_2)
            LastPairing::FirstPlane => {
                let e_j_je_j = self.pairing(j, j)?;
                (0..3).map(|a| e_i_je_j[a] * e_j_je_j[a]).sum()
            }
            // g(e_3, J e_3) g(e_4, J e_3)
            LastPairing::SecondPlane => {
                let e_i_je_i = self.pairing(i, i)?;
                let e_j_je_i = self.pairing(j, i)?;
                (0..3).map(|a| e_i_je_i[a] * e_j_je_i[a]).sum()
            }
        };
        let alt: f64 = (0..3).map(|a| je_i_e_j[a] * e_i_je_j[a]).sum();
        Ok((
            vec![
                term(&format!("j_pairing_{label}_a"), -0.5 * sq(e_i_je_j)),
                term(&format!("j_pairing_{label}_b"), -0.5 * sq(je_i_e_j)),
                term(&format!("j_pairing_{label}_c"), -0.5 * last_value),
            ],
            term(&format!("j_pairing_{label}_c_alt"), -0.5 * alt),
        ))
    }

    /// `c/4 Σ_α [w (tr P_α)² + ‖P_α‖² − 2⟨P_α, P*_α⟩]`.
    fn p_block(&self, c: f64, trace_weight: f64) -> Result<f64, ChenError> {
        let (p, ps) = self.p()?;
        Ok(c / 4.0
            * (0..3)
                .map(|a| trace_weight * p[a].trace().powi(2) + p[a].norm_squared() - 2.0 * p[a].component_mul(&ps[a]).sum())
                .sum::<f64>())
    }

    fn trace_squares(&self) -> Result<f64, ChenError> {
        let (p, _) = self.p()?;
        Ok(p.iter().map(|m| m.trace().powi(2)).sum())
    }
}

#[derive(Clone, Copy)]
enum LastPairing {
    FirstPlane,
    SecondPlane,
}

fn guard(case: Case, class: ClassLabel, n: usize, min: usize) -> Result<(), ChenError> {
    if n < min {
        return Err(ChenError::DimensionTooSmall { min, got: n });
    }
    if !case.applies_to(class) {
        return Err(ChenError::ClassificationMismatch { case: case.as_str(), class: class.as_str() });
    }
    Ok(())
}

fn flatten(planes: &[&DVector<f64>]) -> Vec<Vec<f64>> {
    planes.iter().map(|v| v.iter().copied().collect()).collect()
}

/// First inequality at chart point `u` for the plane spanned by the
/// induced-orthonormal chart vectors `x, y`.
pub fn chen_first_report(
    sub: &ImmersedSubmanifold,
    u: &[f64],
    x: &DVector<f64>,
    y: &DVector<f64>,
    case: Case,
    c: f64,
    class: ClassLabel,
) -> Result<InequalityReport, ChenError> {
    guard(case, class, sub.n(), 3)?;
    chen_first_report_at(sub, &sub.point_curvatures(u)?, x, y, case, c, class)
}

/// [`chen_first_report`] with curvatures computed once per point.
pub fn chen_first_report_at(
    sub: &ImmersedSubmanifold,
    curv: &PointCurvatures,
    x: &DVector<f64>,
    y: &DVector<f64>,
    case: Case,
    c: f64,
    class: ClassLabel,
) -> Result<InequalityReport, ChenError> {
    let n = sub.n();
    guard(case, class, n, 3)?;
    let s = Setting::new(sub, curv, &[x.clone(), y.clone()])?;
    let lhs_terms = vec![
        term("tau", s.tau()?),
        term("tau_lc", -s.tau_lc()),
        term("k_pi", -s.k(0, 1)?),
        term("k_lc_pi", s.k_lc(0, 1)?),
    ];
    let hn = s.data.h_norm2() + s.data.h_star_norm2();
    let coef = to_f64(mean_curvature_coefficient(n));
    let ambient = 2.0 * s.ambient_plane(&s.ambient.r_lc, 0, 1) - 2.0 * s.ambient_tau_lc();
    let mut rhs_terms = vec![term("constant", c * to_f64(chen_first_constant(case, n)))];
    let mut alternatives = vec![term("constant_derived", c * to_f64(chen_first_constant(Case::HolomorphicPrinted, n)))];
    if case.is_holomorphic() {
        let w = if case == Case::HolomorphicPrinted { 0.5 } else { 1.0 };
        rhs_terms.push(term("p_block", s.p_block(c, w)?));
        let (j, alt) = s.j_terms(0, 1, "pi", LastPairing::FirstPlane)?;
        rhs_terms.extend(j);
        alternatives.push(alt);
    }
    rhs_terms.push(term("mean_curvature", -coef * hn));
    rhs_terms.push(term("ambient_lc", ambient));
    let exact = s.ambient_mixed_sum(&[(0, 1)]);
    alternatives.push(term("ambient_mixed_exact", exact));
    alternatives.push(term("derived_bound", exact + ambient - coef * hn));
    Ok(InequalityReport::assemble(
        InequalityKind::ChenFirst,
        case,
        class,
        &s.data,
        flatten(&[x, y]),
        c,
        lhs_terms,
        rhs_terms,
        alternatives,
    ))
}

/// δ(2,2) inequality for the mutually orthogonal planes `(x1, y1)`, `(x2, y2)`.
pub fn delta22_report(
    sub: &ImmersedSubmanifold,
    u: &[f64],
    pi1: (&DVector<f64>, &DVector<f64>),
    pi2: (&DVector<f64>, &DVector<f64>),
    case: Case,
    c: f64,
    class: ClassLabel,
) -> Result<InequalityReport, ChenError> {
    guard(case, class, sub.n(), 4)?;
    delta22_report_at(sub, &sub.point_curvatures(u)?, pi1, pi2, case, c, class)
}

/// [`delta22_report`] with curvatures computed once per point.
pub fn delta22_report_at(
    sub: &ImmersedSubmanifold,
    curv: &PointCurvatures,
    pi1: (&DVector<f64>, &DVector<f64>),
    pi2: (&DVector<f64>, &DVector<f64>),
    case: Case,
    c: f64,
    class: ClassLabel,
) -> Result<InequalityReport, ChenError> {
    let n = sub.n();
    guard(case, class, n, 4)?;
    let s = Setting::new(sub, curv, &[pi1.0.clone(), pi1.1.clone(), pi2.0.clone(), pi2.1.clone()])?;
    let lhs_terms = vec![
        term("tau", s.tau()?),
        term("k_pi1", -s.k(0, 1)?),
        term("k_pi2", -s.k(2, 3)?),
        term("tau_lc", -s.tau_lc()),
        term("k_lc_pi1", s.k_lc(0, 1)?),
        term("k_lc_pi2", s.k_lc(2, 3)?),
    ];
    let hn = s.data.h_norm2() + s.data.h_star_norm2();
    let coef = to_f64(mean_curvature_coefficient(n));
    let (tau_hat, k1_hat, k2_hat) =
        (s.ambient_tau_lc(), s.ambient_plane(&s.ambient.r_lc, 0, 1), s.ambient_plane(&s.ambient.r_lc, 2, 3));
    let constant = c * to_f64(delta22_constant(n));
    let mut rhs_terms = vec![term("constant", constant)];
    let mut alternatives = Vec::new();
    match case {
        Case::HolomorphicPrinted => {
            rhs_terms.push(term("trace_block", c / 8.0 * s.trace_squares()?));
            // ambient trace of the standard J_α vanishes
            alternatives.push(term("trace_block_ambient", 0.0));
        }
        Case::HolomorphicProofVariant => rhs_terms.push(term("p_block", s.p_block(c, 1.0)?)),
        Case::TotallyReal => {}
    }
    if case.is_holomorphic() {
        let (j1, alt1) = s.j_terms(0, 1, "pi1", LastPairing::FirstPlane)?;
        let (j2, alt2) = s.j_terms(2, 3, "pi2", LastPairing::SecondPlane)?;
        rhs_terms.extend(j1);
        rhs_terms.extend(j2);
        alternatives.push(alt1);
        alternatives.push(alt2);
    }
    rhs_terms.push(term("mean_curvature", -coef * hn));
    rhs_terms.push(term("ambient_lc", -2.0 * (tau_hat - 2.0 * k1_hat - 2.0 * k2_hat)));
    let exact = s.ambient_mixed_sum(&[(0, 1), (2, 3)]);
    let derived_ambient = -2.0 * (tau_hat - k1_hat - k2_hat);
    let derived_coef = to_f64(delta22_mean_curvature_coefficient_derived(n));
    alternatives.push(term("ambient_lc_derived", derived_ambient));
    alternatives.push(term("mean_curvature_derived", -derived_coef * hn));
    alternatives.push(term("ambient_mixed_exact", exact));
    alternatives.push(term("derived_bound", exact + derived_ambient - derived_coef * hn));
    Ok(InequalityReport::assemble(
        InequalityKind::Delta22,
        case,
        class,
        &s.data,
        flatten(&[pi1.0, pi1.1, pi2.0, pi2.1]),
        c,
        lhs_terms,
        rhs_terms,
        alternatives,
    ))
}

fn pattern_residual(m: &DMatrix<f64>, kind: InequalityKind) -> f64 {
    let n = m.nrows();
    let mut values = Vec::with_capacity(n);
    let mut start = 0;
    let pairs: &[(usize, usize)] = match kind {
        InequalityKind::ChenFirst => &[(0, 1)],
        InequalityKind::Delta22 => &[(0, 1), (2, 3)],
    };
    for &(i, j) in pairs {
        if j < n {
            values.push(m[(i, i)] + m[(j, j)]);
            start = j + 1;
        }
    }
    values.extend((start..n).map(|k| m[(k, k)]));
    let mut r = values.iter().map(|v| (v - values[0]).abs()).fold(0.0, f64::max);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                r = r.max(m[(i, j)].abs());
            }
        }
    }
    r
}

/// Residuals of the σ, σ* patterns that characterize equality, with all
/// off-diagonal entries required to vanish.
pub fn equality_case_check(data: &InducedData, kind: InequalityKind, tol: f64) -> EqualityDiagnostics {
    equality_pattern(&data.sigma, &data.sigma_star, kind, tol)
}

/// [`equality_case_check`] on raw `σ^γ`, `σ*^γ` arrays.
pub fn equality_pattern(
    sigma: &[DMatrix<f64>],
    sigma_star: &[DMatrix<f64>],
    kind: InequalityKind,
    tol: f64,
) -> EqualityDiagnostics {
    let sigma: Vec<f64> = sigma.iter().map(|m| pattern_residual(m, kind)).collect();
    let sigma_star: Vec<f64> = sigma_star.iter().map(|m| pattern_residual(m, kind)).collect();
    let equality = sigma.iter().chain(&sigma_star).all(|&r| r < tol);
    EqualityDiagnostics { sigma, sigma_star, tol, equality }
}

/// `‖H‖ < tol` and `‖H*‖ < tol`.
pub fn minimality_check(data: &InducedData, tol: f64) -> bool {
    data.h_norm2().max(0.0).sqrt() < tol && data.h_star_norm2().max(0.0).sqrt() < tol
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "diagnosis", rename_all = "snake_case")]
pub enum NonMinimality {
    /// The left side falls below the threshold and `H ≠ 0` is confirmed.
    CriterionFires { threshold: f64, h_norm: f64, h_star_norm: f64 },
    CriterionSilent { threshold: f64 },
    /// The criterion fires on a minimal submanifold.
    Contradiction { threshold: f64, h_norm: f64, h_star_norm: f64 },
}

/// Non-minimality test: `lhs < constant + ambient term` forces `H ≠ 0`.
pub fn nonminimality_criterion(report: &InequalityReport, data: &InducedData, tol: f64) -> NonMinimality {
    diagnose(report, data.h_norm2(), data.h_star_norm2(), tol)
}

/// [`nonminimality_criterion`] from the mean curvature norms stored in the report.
pub fn nonminimality_of(report: &InequalityReport, tol: f64) -> NonMinimality {
    diagnose(report, report.h_norm2, report.h_star_norm2, tol)
}

fn diagnose(report: &InequalityReport, h2: f64, h2_star: f64, tol: f64) -> NonMinimality {
    let ambient = match report.kind {
        InequalityKind::ChenFirst => report.term("ambient_lc"),
        InequalityKind::Delta22 => report.term("ambient_lc_derived"),
    }
    .unwrap_or(0.0);
    let threshold = report.term("constant").unwrap_or(0.0) + ambient;
    let (h_norm, h_star_norm) = (h2.max(0.0).sqrt(), h2_star.max(0.0).sqrt());
    if report.lhs < threshold - INEQUALITY_TOL * (1.0 + threshold.abs()) {
        if h_norm < tol && h_star_norm < tol {
            NonMinimality::Contradiction { threshold, h_norm, h_star_norm }
        } else {
            NonMinimality::CriterionFires { threshold, h_norm, h_star_norm }
        }
    } else {
        NonMinimality::CriterionSilent { threshold }
    }
}

/// Chart vectors of the induced frame at `u`, handy for building planes.
pub fn frame_chart_vectors(data: &InducedData) -> Vec<DVector<f64>> {
    (0..data.n()).map(|i| data.chart_vector(i)).collect()
}
