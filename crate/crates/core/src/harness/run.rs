use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{
    CaseSummary, ExitStatus, Finding, FindingKind, Report, RunConfig, Sample, Summary, GAUSS_TRIALS, MINIMAL_TOL,
};
use crate::ambient::{validate_model, CheckResult};
use crate::chen::{
    chen_first_report_at, delta22_report_at, nonminimality_of, Case, ChenError, InequalityKind, InequalityReport,
    NonMinimality,
};
use crate::geom::gram_schmidt;
use crate::specfile::{parse_spec, SpecError, SpecFile};
use crate::subman::{classify, ClassLabel, GaussRicciResiduals, ImmersedSubmanifold, CLASSIFY_TOL};

fn spec_error(e: &SpecError) -> String {
    match e.expr_offset() {
        Some(offset) => format!("parse error at byte offset {offset}: {e}"),
        None => format!("spec error: {e}"),
    }
}

fn load(report: Report, spec: &str) -> Result<(Report, SpecFile), Report> {
    match parse_spec(spec) {
        Ok(file) => Ok((report, file)),
        Err(e) => Err(report.fail(ExitStatus::InputError, spec_error(&e))),
    }
}

/// Runs every applicable validator on the spec. With a submanifold section
/// the Gauss and Ricci equations are checked and the submanifold classified.
pub fn run_validate(spec: &str, cfg: &RunConfig) -> Report {
    let (mut report, file) = match load(Report::new("validate", cfg.seed, Some(spec)), spec) {
        Ok(v) => v,
        Err(r) => return r,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let tol = cfg.tol();
    let samples = cfg.samples.max(1);
    let points = file.ambient.sample_points(samples, &mut rng);
    let v = validate_model(&file.ambient, &points, tol);
    report.checks = v.checks;
    report.errors.extend(v.failures.iter().map(|f| format!("point {}: {}", f.index, f.message)));
    let Some(sub_spec) = file.submanifold else {
        return report.settle();
    };
    let quaternionic = file.ambient.quaternionic().is_some();
    let sub = match ImmersedSubmanifold::new(file.ambient, sub_spec) {
        Ok(s) => s,
        Err(e) => return report.fail(ExitStatus::InputError, e),
    };
    let upoints = sub.sample_points(samples, &mut rng);
    let seeds: Vec<u64> = upoints.iter().map(|_| rng.gen()).collect();
    let results: Vec<_> = upoints
        .par_iter()
        .zip(&seeds)
        .map(|(u, &s)| sub.gauss_ricci_residuals(u, GAUSS_TRIALS, &mut ChaCha8Rng::seed_from_u64(s)))
        .collect();
    let mut gr = GaussRicciResiduals::default();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(r) => gr.merge(&r),
            Err(e) => report.errors.push(format!("submanifold point {i}: {e}")),
        }
    }
    for (name, residual) in
        [("gauss", gr.gauss), ("gauss_star", gr.gauss_star), ("ricci", gr.ricci), ("ricci_star", gr.ricci_star)]
    {
        report.checks.push(CheckResult::measured(name, residual, tol));
    }
    report.gauss_ricci = Some(gr);
    if quaternionic {
        match classify(&sub, &upoints, CLASSIFY_TOL) {
            Ok(c) => report.classification = Some(c),
            Err(e) => report.errors.push(format!("classification: {e}")),
        }
    }
    report.settle()
}

fn default_cases(label: ClassLabel) -> Option<Vec<Case>> {
    match label {
        ClassLabel::Invariant => Some(vec![Case::HolomorphicPrinted, Case::HolomorphicProofVariant]),
        l if l.is_totally_real() => Some(vec![Case::TotallyReal]),
        _ => None,
    }
}

fn gaussian_vectors<R: Rng>(rng: &mut R, count: usize, n: usize) -> Vec<DVector<f64>> {
    (0..count).map(|_| DVector::from_fn(n, |_, _| rng.sample(StandardNormal))).collect()
}

fn evaluate_point(
    sub: &ImmersedSubmanifold,
    u: &[f64],
    planes: &[Vec<DVector<f64>>],
    cases: &[Case],
    c: f64,
    label: ClassLabel,
    kind: InequalityKind,
) -> Result<Vec<(usize, InequalityReport)>, ChenError> {
    let curv = sub.point_curvatures(u)?;
    let g = sub.induced_metric(u)?;
    let mut out = Vec::with_capacity(planes.len() * cases.len());
    for (k, raw) in planes.iter().enumerate() {
        let frame = gram_schmidt(&g, raw)?;
        let v = frame.vectors();
        for &case in cases {
            let r = match kind {
                InequalityKind::ChenFirst => chen_first_report_at(sub, &curv, &v[0], &v[1], case, c, label)?,
                InequalityKind::Delta22 => {
                    delta22_report_at(sub, &curv, (&v[0], &v[1]), (&v[2], &v[3]), case, c, label)?
                }
            };
            out.push((k, r));
        }
    }
    Ok(out)
}

fn summarize(kind: InequalityKind, points: usize, planes: usize, cases: &[Case], samples: &[Sample]) -> Summary {
    let min = |it: &mut dyn Iterator<Item = f64>| it.fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.min(x))));
    let per_case = cases
        .iter()
        .map(|&case| {
            let rs: Vec<&InequalityReport> = samples.iter().map(|s| &s.report).filter(|r| r.case == case).collect();
            CaseSummary {
                case,
                reports: rs.len(),
                min_margin: min(&mut rs.iter().map(|r| r.margin)),
                violations: rs.iter().filter(|r| !r.holds).count(),
                equality_hits: rs.iter().filter(|r| r.is_equality()).count(),
            }
        })
        .collect::<Vec<_>>();
    let violations_in = |variant: bool| {
        per_case
            .iter()
            .filter(|c| (c.case == Case::HolomorphicProofVariant) == variant)
            .map(|c| c.violations)
            .sum()
    };
    Summary {
        kind,
        points,
        planes,
        min_margin: min(&mut samples.iter().map(|s| s.report.margin)),
        violations: violations_in(false),
        variant_violations: violations_in(true),
        equality_hits: samples.iter().filter(|s| s.report.is_equality()).count(),
        contradictions: samples
            .iter()
            .filter(|s| matches!(s.nonminimality, NonMinimality::Contradiction { .. }))
            .count(),
        cases: per_case,
    }
}

/// Evaluates an inequality at `cfg.samples` points and `cfg.planes` random
/// induced-orthonormal planes (pairs of planes for δ(2,2)) per point.
pub fn run_chen(spec: &str, cfg: &RunConfig, kind: InequalityKind) -> Report {
    let command = match kind {
        InequalityKind::ChenFirst => "chen",
        InequalityKind::Delta22 => "delta22",
    };
    let (mut report, file) = match load(Report::new(command, cfg.seed, Some(spec)), spec) {
        Ok(v) => v,
        Err(r) => return r,
    };
    let Some(sub_spec) = file.submanifold else {
        return report.fail(ExitStatus::InputError, "spec has no [submanifold] section");
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ambient_points = file.ambient.sample_points(cfg.samples.max(1), &mut rng);
    let v = validate_model(&file.ambient, &ambient_points, cfg.tol());
    let valid = v.passed();
    report.checks = v.checks;
    report.errors.extend(v.failures.iter().map(|f| format!("point {}: {}", f.index, f.message)));
    if !valid {
        return report.fail(ExitStatus::Failure, "ambient model failed validation");
    }
    let Some(c) = file.ambient.declared_c() else {
        return report.fail(ExitStatus::Failure, "the constant c is unknown; declare it in the spec");
    };
    let sub = match ImmersedSubmanifold::new(file.ambient, sub_spec) {
        Ok(s) => s,
        Err(e) => return report.fail(ExitStatus::InputError, e),
    };
    let points = sub.sample_points(cfg.samples, &mut rng);
    let class = match classify(&sub, &points, CLASSIFY_TOL) {
        Ok(c) => c,
        Err(e) => return report.fail(ExitStatus::Failure, format!("classification: {e}")),
    };
    let label = class.label;
    report.classification = Some(class);
    let cases = match cfg.case {
        Some(sel) => sel.cases().to_vec(),
        None => match default_cases(label) {
            Some(c) => c,
            None => {
                return report.fail(ExitStatus::Failure, format!("no case applies to a {} submanifold", label.as_str()))
            }
        },
    };
    if let Some(case) = cases.iter().find(|c| !c.applies_to(label)) {
        let e = ChenError::ClassificationMismatch { case: case.as_str(), class: label.as_str() };
        return report.fail(ExitStatus::Failure, e);
    }
    let (min, per_plane) = match kind {
        InequalityKind::ChenFirst => (3, 2),
        InequalityKind::Delta22 => (4, 4),
    };
    let n = sub.n();
    if n < min {
        return report.fail(ExitStatus::Failure, ChenError::DimensionTooSmall { min, got: n });
    }
    let raw: Vec<Vec<Vec<DVector<f64>>>> = points
        .iter()
        .map(|_| (0..cfg.planes).map(|_| gaussian_vectors(&mut rng, per_plane, n)).collect())
        .collect();
    let evaluated: Vec<_> = points
        .par_iter()
        .zip(&raw)
        .map(|(u, planes)| evaluate_point(&sub, u, planes, &cases, c, label, kind))
        .collect();
    let mut samples = Vec::new();
    for (point_index, result) in evaluated.into_iter().enumerate() {
        let reports = match result {
            Ok(r) => r,
            Err(e) => {
                report.errors.push(format!("point {point_index}: {e}"));
                continue;
            }
        };
        for (plane_index, r) in reports {
            let index = samples.len();
            let nonminimality = nonminimality_of(&r, MINIMAL_TOL);
            if !r.holds && r.case != Case::HolomorphicProofVariant {
                report.findings.push(Finding {
                    kind: FindingKind::Violation,
                    message: format!(
                        "{} {} fails at sample {index}: lhs {:e} < rhs {:e}",
                        command,
                        r.case.as_str(),
                        r.lhs,
                        r.rhs
                    ),
                    sample: Some(index),
                    report: Some(r.clone()),
                    tuple: None,
                });
            }
            if let NonMinimality::Contradiction { threshold, .. } = nonminimality {
                report.findings.push(Finding {
                    kind: FindingKind::Contradiction,
                    message: format!(
                        "non-minimality criterion fires on a minimal point at sample {index}: lhs {:e} < threshold {threshold:e}",
                        r.lhs
                    ),
                    sample: Some(index),
                    report: Some(r.clone()),
                    tuple: None,
                });
            }
            samples.push(Sample { index, point_index, plane_index, report: r, nonminimality });
        }
    }
    report.summary = Some(summarize(kind, points.len(), cfg.planes, &cases, &samples));
    report.samples = samples;
    report.settle()
}
