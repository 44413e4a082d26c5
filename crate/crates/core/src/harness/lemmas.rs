use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{ExitStatus, Finding, FindingKind, Report};
use crate::ambient::CheckResult;
use crate::chen::lemmas::{bound_coefficient, evaluate, maximize, LemmaConstant, LemmaKind, Maximization, HOLDS_TOL};

/// Largest amount by which a constrained maximum may exceed the bound.
pub const MAXIMIZATION_TOL: f64 = 1e-9;
/// Pattern and attainment tolerance for the maximizers.
pub const PATTERN_TOL: f64 = 1e-6;
pub const TUPLE_RANGE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub trials: usize,
    pub constant: LemmaConstant,
    pub restarts: usize,
}

impl Default for LemmaConfig {
    fn default() -> LemmaConfig {
        LemmaConfig { n_min: 3, n_max: 8, trials: 100_000, constant: LemmaConstant::Corrected, restarts: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaEntry {
    pub kind: LemmaKind,
    pub n: usize,
    pub constant: LemmaConstant,
    pub trials: usize,
    /// Smallest `rhs − lhs` over the random tuples.
    pub worst_margin: Option<f64>,
    pub worst_tuple: Option<Vec<f64>>,
    pub violations: usize,
    pub maximization: Maximization,
    /// Bound at `Σ a_i = 1` for the configured constant.
    pub bound: f64,
    pub gap: f64,
    /// Whether the maximum reaches the bound.
    pub sharp: bool,
    pub note: String,
}

fn entry(kind: LemmaKind, n: usize, cfg: &LemmaConfig, seed: u64) -> LemmaEntry {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((n as u64) << 1) | (kind == LemmaKind::Delta22) as u64);
    let mut worst: Option<(f64, Vec<f64>)> = None;
    let mut violations = 0;
    for _ in 0..cfg.trials {
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-TUPLE_RANGE..TUPLE_RANGE)).collect();
        let o = evaluate(kind, cfg.constant, &a).expect("n checked");
        if !o.holds {
            violations += 1;
        }
        if worst.as_ref().map_or(true, |(m, _)| o.margin() < *m) {
            worst = Some((o.margin(), a));
        }
    }
    let maximization = maximize(kind, n, cfg.restarts, &mut rng).expect("n checked");
    let c = bound_coefficient(kind, cfg.constant, n);
    let bound = *c.numer() as f64 / *c.denom() as f64;
    let gap = maximization.gap(cfg.constant);
    let sharp = gap.abs() < PATTERN_TOL;
    let note = if sharp {
        format!("bound attained, maximizer pattern residual {:.1e}", maximization.pattern_residual)
    } else {
        format!("bound not attained, gap {gap:.6}")
    };
    let (worst_margin, worst_tuple) = worst.map_or((None, None), |(m, a)| (Some(m), Some(a)));
    LemmaEntry {
        kind,
        n,
        constant: cfg.constant,
        trials: cfg.trials,
        worst_margin,
        worst_tuple,
        violations,
        maximization,
        bound,
        gap,
        sharp,
        note,
    }
}

/// Random-tuple and maximization checks of both algebraic lemmas over a range of `n`.
pub fn run_lemmas(cfg: &LemmaConfig, seed: u64) -> Report {
    let mut report = Report::new("lemmas", seed, None);
    if cfg.n_min > cfg.n_max {
        return report.fail(ExitStatus::InputError, format!("empty n range {}..{}", cfg.n_min, cfg.n_max));
    }
    if cfg.trials == 0 {
        report.lemmas = Some(Vec::new());
        return report.settle();
    }
    let jobs: Vec<(LemmaKind, usize)> = (cfg.n_min..=cfg.n_max)
        .flat_map(|n| [LemmaKind::ChenFirst, LemmaKind::Delta22].map(|k| (k, n)))
        .filter(|&(k, n)| n >= k.min_n())
        .collect();
    let entries: Vec<LemmaEntry> = jobs.par_iter().map(|&(k, n)| entry(k, n, cfg, seed)).collect();
    let worst = entries.iter().filter_map(|e| e.worst_margin).fold(f64::INFINITY, f64::min);
    let excess = entries.iter().map(|e| -e.gap).fold(0.0, f64::max);
    let pattern = entries.iter().map(|e| e.maximization.pattern_residual).fold(0.0, f64::max);
    report.checks.push(CheckResult::measured("lemma_margin", (-worst).max(0.0), HOLDS_TOL));
    report.checks.push(CheckResult::measured("maximization_bound", excess, MAXIMIZATION_TOL));
    report.checks.push(CheckResult::measured("maximizer_pattern", pattern, PATTERN_TOL));
    for e in &entries {
        if e.violations > 0 {
            report.findings.push(Finding {
                kind: FindingKind::LemmaViolation,
                message: format!("{} n={}: {} of {} tuples violate the bound", e.kind.as_str(), e.n, e.violations, e.trials),
                sample: None,
                report: None,
                tuple: e.worst_tuple.clone(),
            });
        }
        if -e.gap > MAXIMIZATION_TOL {
            report.findings.push(Finding {
                kind: FindingKind::LemmaExceeded,
                message: format!("{} n={}: constrained maximum exceeds the bound by {:e}", e.kind.as_str(), e.n, -e.gap),
                sample: None,
                report: None,
                tuple: Some(e.maximization.maximizer.clone()),
            });
        }
    }
    report.lemmas = Some(entries);
    report.settle()
}
