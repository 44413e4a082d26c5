use std::fmt::Write;

use super::Report;

pub(super) fn json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

fn coords(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ")
}

/// Summary table only: one row per sample, lemma entry or check.
pub(super) fn csv(report: &Report) -> String {
    let mut out = String::new();
    if !report.samples.is_empty() {
        out.push_str("sample,case,point,margin,holds\n");
        for s in &report.samples {
            let r = &s.report;
            let _ = writeln!(out, "{},{},{},{:e},{}", s.index, r.case.as_str(), coords(&r.point), r.margin, r.holds);
        }
    } else if let Some(entries) = &report.lemmas {
        out.push_str("kind,n,trials,worst_margin,violations,max_lhs,bound,sharp\n");
        for e in entries {
            let worst = e.worst_margin.map(|m| format!("{m:e}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:e},{:e},{}",
                e.kind.as_str(),
                e.n,
                e.trials,
                worst,
                e.violations,
                e.maximization.max_lhs,
                e.bound,
                e.sharp
            );
        }
    } else {
        out.push_str("check,residual,tol,passed\n");
        for c in &report.checks {
            let _ = writeln!(out, "{},{:e},{:e},{}", c.name, c.residual, c.tol, c.passed);
        }
    }
    out
}

pub(super) fn text(report: &Report) -> String {
    let mut out = String::new();
    let m = &report.meta;
    let _ = writeln!(out, "chenverify {} seed={:#x} version={}", m.command, m.seed, m.version);
    for c in &report.checks {
        let state = if c.skipped {
            "SKIP"
        } else if c.passed {
            "PASS"
        } else {
            "FAIL"
        };
        let _ = write!(out, "{state} {:<22} residual={:.3e} tol={:.1e}", c.name, c.residual, c.tol);
        if let Some(note) = &c.note {
            let _ = write!(out, " ({note})");
        }
        out.push('\n');
    }
    if let Some(c) = &report.classification {
        let _ = writeln!(out, "classification: {}", c.label.as_str());
    }
    if let Some(s) = &report.summary {
        let min = s.min_margin.map(|m| format!("{m:.6e}")).unwrap_or_else(|| "n/a".into());
        let _ = writeln!(
            out,
            "summary: {} points x {} planes, min margin {min}, violations {}, variant violations {}, equality hits {}, contradictions {}",
            s.points, s.planes, s.violations, s.variant_violations, s.equality_hits, s.contradictions
        );
        for c in &s.cases {
            let min = c.min_margin.map(|m| format!("{m:.6e}")).unwrap_or_else(|| "n/a".into());
            let _ = writeln!(
                out,
                "  {}: {} reports, min margin {min}, violations {}, equality hits {}",
                c.case.as_str(),
                c.reports,
                c.violations,
                c.equality_hits
            );
        }
    }
    if let Some(entries) = &report.lemmas {
        for e in entries {
            let worst = e.worst_margin.map(|m| format!("{m:.3e}")).unwrap_or_else(|| "n/a".into());
            let _ = writeln!(
                out,
                "{} n={} worst margin {worst}, max lhs {:.9} vs bound {:.9}, {}",
                e.kind.as_str(),
                e.n,
                e.maximization.max_lhs,
                e.bound,
                e.note
            );
        }
    }
    for f in &report.findings {
        let _ = writeln!(out, "FINDING {:?}: {}", f.kind, f.message);
    }
    for e in &report.errors {
        let _ = writeln!(out, "error: {e}");
    }
    let _ = writeln!(out, "exit {}", report.exit_code());
    out
}
