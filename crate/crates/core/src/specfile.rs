//! Text format for ambient models and immersed submanifolds.
//!
//! ```text
//! [manifold]
//! dim=4
//! domain=-1,1
//! [metric]
//! g_1_1=1
//! [connection]
//! mode=skewness
//! K_1_1_2=x2
//! [quaternionic]
//! J1_1_2=-1
//! omega1_3=0
//! c=0
//! [submanifold]
//! n=2
//! domain=0,1
//! f_1=u1
//! ```
//!
//! Indices are 1-based, unspecified entries are zero, `#` starts a comment.
//! `domain` is either one `lo,hi` pair for every coordinate or one pair per
//! coordinate.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ambient::{AmbientModel, ConnectionSpec, ModelError, QuaternionicSpec};
use crate::expr::{chart_variables, parse, ExprAst, ExprMatrix, ParseError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: `{key}`: {source}")]
    Expr {
        line: usize,
        key: String,
        #[source]
        source: ParseError,
    },
    #[error("{0}")]
    Model(#[from] ModelError),
}

impl SpecError {
    /// Byte offset inside the offending expression, when there is one.
    pub fn expr_offset(&self) -> Option<usize> {
        match self {
            SpecError::Expr { source, .. } => Some(source.offset()),
            _ => None,
        }
    }
}

/// Immersion `u ↦ f(u)` over a box in the submanifold chart.
#[derive(Debug, Clone, PartialEq)]
pub struct SubmanifoldSpec {
    pub n: usize,
    pub domain: Vec<(f64, f64)>,
    pub f: Vec<ExprAst>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecFile {
    pub ambient: AmbientModel,
    pub submanifold: Option<SubmanifoldSpec>,
}

struct Entry {
    line: usize,
    key: String,
    value: String,
}

fn syntax(line: usize, message: impl Into<String>) -> SpecError {
    SpecError::Syntax { line, message: message.into() }
}

/// Parses `prefix_i_j_k` style keys into 0-based indices.
fn indices(key: &str, prefix: &str, count: usize, bound: usize, line: usize) -> Result<Vec<usize>, SpecError> {
    let rest = key.strip_prefix(prefix).ok_or_else(|| syntax(line, format!("unknown key `{key}`")))?;
    let parts: Vec<&str> = rest.split('_').collect();
    if parts.len() != count || parts.iter().any(|p| p.is_empty()) {
        return Err(syntax(line, format!("`{key}` needs {count} indices")));
    }
    parts
        .iter()
        .map(|p| match p.parse::<usize>() {
            Ok(i) if (1..=bound).contains(&i) => Ok(i - 1),
            _ => Err(syntax(line, format!("index `{p}` in `{key}` must be in 1..={bound}"))),
        })
        .collect()
}

fn parse_domain(e: &Entry, dim: usize) -> Result<Vec<(f64, f64)>, SpecError> {
    let vals: Vec<f64> = e
        .value
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| syntax(e.line, format!("bad number `{}` in domain", s.trim()))))
        .collect::<Result<_, _>>()?;
    let pairs: Vec<(f64, f64)> = match vals.len() {
        2 => vec![(vals[0], vals[1]); dim],
        n if n == 2 * dim => vals.chunks(2).map(|c| (c[0], c[1])).collect(),
        n => return Err(syntax(e.line, format!("domain needs 2 or {} numbers, got {n}", 2 * dim))),
    };
    if pairs.iter().any(|(lo, hi)| !(lo <= hi) || !lo.is_finite() || !hi.is_finite()) {
        return Err(syntax(e.line, "domain intervals must satisfy lo <= hi"));
    }
    Ok(pairs)
}

fn parse_usize(e: &Entry) -> Result<usize, SpecError> {
    e.value.trim().parse().map_err(|_| syntax(e.line, format!("`{}` expects an integer", e.key)))
}

fn expr(e: &Entry, vars: &[String]) -> Result<ExprAst, SpecError> {
    parse(e.value.trim(), vars).map_err(|source| SpecError::Expr { line: e.line, key: e.key.clone(), source })
}

fn insert_once<K: Ord + Copy>(
    map: &mut BTreeMap<K, (usize, ExprAst)>,
    k: K,
    line: usize,
    e: ExprAst,
    what: &str,
) -> Result<(), SpecError> {
    if let Some((prev, old)) = map.get(&k) {
        if old.source() != e.source() {
            return Err(syntax(line, format!("{what} conflicts with line {prev}")));
        }
        return Ok(());
    }
    map.insert(k, (line, e));
    Ok(())
}

pub fn parse_spec(text: &str) -> Result<SpecFile, SpecError> {
    let mut sections: BTreeMap<String, Vec<Entry>> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim().to_string();
            if !["manifold", "metric", "connection", "quaternionic", "submanifold"].contains(&name.as_str()) {
                return Err(syntax(line, format!("unknown section `[{name}]`")));
            }
            if sections.contains_key(&name) {
                return Err(syntax(line, format!("section `[{name}]` repeated")));
            }
            sections.insert(name.clone(), Vec::new());
            current = Some(name);
            continue;
        }
        let section = current.as_ref().ok_or_else(|| syntax(line, "entry outside of any section"))?;
        let (key, value) = content.split_once('=').ok_or_else(|| syntax(line, "expected key=value"))?;
        let key = key.trim().to_string();
        if value.trim().is_empty() {
            return Err(syntax(line, format!("`{key}` has an empty value")));
        }
        sections.get_mut(section).expect("section registered").push(Entry { line, key, value: value.to_string() });
    }

    let manifold = sections.remove("manifold").ok_or_else(|| syntax(0, "missing [manifold] section"))?;
    let mut dim = None;
    let mut domain_entry = None;
    let mut name = None;
    for e in &manifold {
        match e.key.as_str() {
            "dim" => dim = Some(parse_usize(e)?),
            "domain" => domain_entry = Some(e),
            "name" => name = Some(e.value.trim().to_string()),
            k => return Err(syntax(e.line, format!("unknown key `{k}` in [manifold]"))),
        }
    }
    let dim = dim.filter(|&d| d > 0).ok_or_else(|| syntax(0, "[manifold] needs dim >= 1"))?;
    let domain = match domain_entry {
        Some(e) => parse_domain(e, dim)?,
        None => vec![(-1.0, 1.0); dim],
    };
    let xs = chart_variables("x", dim);

    let mut metric_map = BTreeMap::new();
    for e in sections.remove("metric").unwrap_or_default() {
        let ix = indices(&e.key, "g_", 2, dim, e.line)?;
        let k = (ix[0].min(ix[1]), ix[0].max(ix[1]));
        insert_once(&mut metric_map, k, e.line, expr(&e, &xs)?, "metric entry")?;
    }
    let mut metric = ExprMatrix::zeros(dim, dim, dim);
    for i in 0..dim {
        if !metric_map.contains_key(&(i, i)) {
            return Err(syntax(0, format!("metric diagonal entry g_{0}_{0} is required", i + 1)));
        }
    }
    for (&(i, j), (_, e)) in &metric_map {
        metric.set(i, j, e.clone());
        metric.set(j, i, e.clone());
    }

    let mut mode = None;
    let mut k_map = BTreeMap::new();
    let mut gamma_map = BTreeMap::new();
    for e in sections.remove("connection").unwrap_or_default() {
        if e.key == "mode" {
            mode = Some(match e.value.trim() {
                "skewness" => true,
                "explicit" => false,
                other => return Err(syntax(e.line, format!("unknown connection mode `{other}`"))),
            });
        } else if e.key.starts_with("K_") {
            let mut ix = indices(&e.key, "K_", 3, dim, e.line)?;
            ix.sort_unstable();
            insert_once(&mut k_map, (ix[0], ix[1], ix[2]), e.line, expr(&e, &xs)?, "skewness component")?;
        } else if e.key.starts_with("Gamma_") {
            let ix = indices(&e.key, "Gamma_", 3, dim, e.line)?;
            insert_once(&mut gamma_map, (ix[0], ix[1], ix[2]), e.line, expr(&e, &xs)?, "connection component")?;
        } else {
            return Err(syntax(e.line, format!("unknown key `{}` in [connection]", e.key)));
        }
    }
    let skew = mode.unwrap_or(gamma_map.is_empty());
    if skew && !gamma_map.is_empty() {
        return Err(syntax(0, "Gamma entries need mode=explicit"));
    }
    if !skew && !k_map.is_empty() {
        return Err(syntax(0, "K entries need mode=skewness"));
    }
    let strip = |m: BTreeMap<(usize, usize, usize), (usize, ExprAst)>| m.into_iter().map(|(k, (_, e))| (k, e)).collect();
    let connection =
        if skew { ConnectionSpec::Skewness(strip(k_map)) } else { ConnectionSpec::Explicit(strip(gamma_map)) };

    let quaternionic = match sections.remove("quaternionic") {
        None => None,
        Some(entries) => {
            let mut j = [0, 1, 2].map(|_| ExprMatrix::zeros(dim, dim, dim));
            let mut omega = [0, 1, 2].map(|_| vec![ExprAst::constant(0.0, dim); dim]);
            let mut seen = BTreeMap::new();
            let mut c = None;
            for e in entries {
                let which = |rest: &str| rest.chars().next().and_then(|ch| ch.to_digit(10)).filter(|a| (1..=3).contains(a));
                if e.key == "c" {
                    c = match e.value.trim() {
                        "unknown" => None,
                        v => Some(v.parse::<f64>().map_err(|_| syntax(e.line, "c must be a number or `unknown`"))?),
                    };
                } else if let Some(rest) = e.key.strip_prefix("omega") {
                    let a = which(rest).ok_or_else(|| syntax(e.line, format!("unknown key `{}`", e.key)))? as usize;
                    let ix = indices(&rest[1..], "_", 1, dim, e.line)?;
                    let ex = expr(&e, &xs)?;
                    insert_once(&mut seen, (a, usize::MAX, ix[0]), e.line, ex.clone(), "omega component")?;
                    omega[a - 1][ix[0]] = ex;
                } else if let Some(rest) = e.key.strip_prefix('J') {
                    let a = which(rest).ok_or_else(|| syntax(e.line, format!("unknown key `{}`", e.key)))? as usize;
                    let ix = indices(&rest[1..], "_", 2, dim, e.line)?;
                    let ex = expr(&e, &xs)?;
                    insert_once(&mut seen, (a, ix[0], ix[1]), e.line, ex.clone(), "J entry")?;
                    j[a - 1].set(ix[0], ix[1], ex);
                } else {
                    return Err(syntax(e.line, format!("unknown key `{}` in [quaternionic]", e.key)));
                }
            }
            Some(QuaternionicSpec { j, omega, c })
        }
    };

    let submanifold = match sections.remove("submanifold") {
        None => None,
        Some(entries) => {
            let n = entries
                .iter()
                .find(|e| e.key == "n")
                .map(parse_usize)
                .transpose()?
                .filter(|&n| n > 0)
                .ok_or_else(|| syntax(0, "[submanifold] needs n >= 1"))?;
            let us = chart_variables("u", n);
            let mut domain = vec![(0.0, 1.0); n];
            let mut f_map = BTreeMap::new();
            for e in &entries {
                match e.key.as_str() {
                    "n" => {}
                    "domain" => domain = parse_domain(e, n)?,
                    k if k.starts_with("f_") => {
                        let ix = indices(k, "f_", 1, dim, e.line)?;
                        insert_once(&mut f_map, ix[0], e.line, expr(e, &us)?, "immersion component")?;
                    }
                    k => return Err(syntax(e.line, format!("unknown key `{k}` in [submanifold]"))),
                }
            }
            let mut f = vec![ExprAst::constant(0.0, n); dim];
            for (k, (_, e)) in f_map {
                f[k] = e;
            }
            Some(SubmanifoldSpec { n, domain, f })
        }
    };

    let ambient = AmbientModel::new(name.unwrap_or_else(|| "spec".into()), dim, domain, metric, connection, quaternionic)?;
    Ok(SpecFile { ambient, submanifold })
}

fn fmt_domain(domain: &[(f64, f64)]) -> String {
    let first = domain[0];
    if domain.iter().all(|&p| p == first) {
        format!("{},{}", first.0, first.1)
    } else {
        domain.iter().map(|(lo, hi)| format!("{lo},{hi}")).collect::<Vec<_>>().join(",")
    }
}

/// Writes a spec that [`parse_spec`] reads back to an equivalent model.
/// Only the upper triangle of the metric is written.
pub fn emit_spec(ambient: &AmbientModel, submanifold: Option<&SubmanifoldSpec>) -> String {
    let mut out = String::new();
    let d = ambient.dim();
    out.push_str("[manifold]\n");
    out.push_str(&format!("name={}\n", ambient.name()));
    out.push_str(&format!("dim={d}\n"));
    out.push_str(&format!("domain={}\n", fmt_domain(ambient.domain())));
    out.push_str("\n[metric]\n");
    for i in 0..d {
        for j in i..d {
            let e = ambient.metric_exprs().get(i, j);
            if i == j || !e.is_zero() {
                out.push_str(&format!("g_{}_{}={}\n", i + 1, j + 1, e.source()));
            }
        }
    }
    out.push_str("\n[connection]\n");
    match ambient.connection() {
        ConnectionSpec::Skewness(map) => {
            out.push_str("mode=skewness\n");
            for (&(a, b, c), e) in map {
                out.push_str(&format!("K_{}_{}_{}={}\n", a + 1, b + 1, c + 1, e.source()));
            }
        }
        ConnectionSpec::Explicit(map) => {
            out.push_str("mode=explicit\n");
            for (&(k, i, j), e) in map {
                out.push_str(&format!("Gamma_{}_{}_{}={}\n", k + 1, i + 1, j + 1, e.source()));
            }
        }
    }
    if let Some(q) = ambient.quaternionic() {
        out.push_str("\n[quaternionic]\n");
        for (a, m) in q.j.iter().enumerate() {
            for i in 0..d {
                for j in 0..d {
                    let e = m.get(i, j);
                    if !e.is_zero() {
                        out.push_str(&format!("J{}_{}_{}={}\n", a + 1, i + 1, j + 1, e.source()));
                    }
                }
            }
        }
        for (a, w) in q.omega.iter().enumerate() {
            for (i, e) in w.iter().enumerate() {
                if !e.is_zero() {
                    out.push_str(&format!("omega{}_{}={}\n", a + 1, i + 1, e.source()));
                }
            }
        }
        match q.c {
            Some(c) => out.push_str(&format!("c={c}\n")),
            None => out.push_str("c=unknown\n"),
        }
    }
    if let Some(s) = submanifold {
        out.push_str("\n[submanifold]\n");
        out.push_str(&format!("n={}\n", s.n));
        out.push_str(&format!("domain={}\n", fmt_domain(&s.domain)));
        for (k, e) in s.f.iter().enumerate() {
            if !e.is_zero() {
                out.push_str(&format!("f_{}={}\n", k + 1, e.source()));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::{flat_quaternionic, normal_family};

    const SAMPLE: &str = "\
# statistical structure on a Fisher chart
[manifold]
dim=2
domain=-1,1,0.5,2

[metric]
g_1_1=1/x2^2
g_2_2=2/x2^2   # diagonal

[connection]
mode=skewness
K_1_1_2=-0.5/x2^3
K_2_1_1=-0.5/x2^3
K_2_2_2=-2/x2^3
";

    #[test]
    fn parses_sections_and_symmetrises_skewness() {
        let s = parse_spec(SAMPLE).unwrap();
        assert_eq!(s.ambient.dim(), 2);
        assert_eq!(s.ambient.domain(), &[(-1.0, 1.0), (0.5, 2.0)]);
        let ConnectionSpec::Skewness(k) = s.ambient.connection() else { panic!() };
        assert_eq!(k.len(), 2);
        assert!(k.contains_key(&(0, 0, 1)));
        let reference = normal_family(0.5).unwrap();
        let a = s.ambient.eval_point(&[0.1, 0.9]).unwrap();
        let b = reference.eval_point(&[0.1, 0.9]).unwrap();
        assert!(a.conn.gamma().max_abs_diff(b.conn.gamma()) < 1e-14);
    }

    #[test]
    fn round_trips_builtins() {
        let m = flat_quaternionic(2).unwrap();
        let sub = SubmanifoldSpec {
            n: 2,
            domain: vec![(0.0, 6.0); 2],
            f: (0..8)
                .map(|k| match k {
                    0 => parse("cos(u1)", &["u1", "u2"]).unwrap(),
                    1 => parse("sin(u1)", &["u1", "u2"]).unwrap(),
                    _ => ExprAst::constant(0.0, 2),
                })
                .collect(),
        };
        let text = emit_spec(&m, Some(&sub));
        let back = parse_spec(&text).unwrap();
        assert_eq!(emit_spec(&back.ambient, back.submanifold.as_ref()), text);
        let p = [0.1, 0.2, -0.3, 0.4, 0.0, 0.5, 0.6, -0.7];
        let (a, b) = (m.eval_point(&p).unwrap(), back.ambient.eval_point(&p).unwrap());
        assert_eq!(a.quat.unwrap().j, b.quat.unwrap().j);
        assert_eq!(back.ambient.declared_c(), Some(0.0));
        assert_eq!(back.submanifold.unwrap().f[1].eval(&[0.3, 0.0]).unwrap(), 0.3f64.sin());

        let nf = normal_family(-1.0).unwrap();
        let back = parse_spec(&emit_spec(&nf, None)).unwrap();
        let p = [0.2, 1.1];
        assert!(
            nf.eval_point(&p).unwrap().conn.gamma().max_abs_diff(back.ambient.eval_point(&p).unwrap().conn.gamma())
                < 1e-15
        );
    }

    #[test]
    fn reports_errors() {
        let bad_expr = "[manifold]\ndim=1\n[metric]\ng_1_1=x1*(\n";
        let err = parse_spec(bad_expr).unwrap_err();
        assert_eq!(err.expr_offset(), Some(4));
        assert!(matches!(err, SpecError::Expr { line: 4, .. }));

        let unknown_var = "[manifold]\ndim=1\n[metric]\ng_1_1=y\n";
        assert!(matches!(parse_spec(unknown_var), Err(SpecError::Expr { .. })));

        let missing_diag = "[manifold]\ndim=2\n[metric]\ng_1_1=1\n";
        assert!(matches!(parse_spec(missing_diag), Err(SpecError::Syntax { .. })));

        let conflict = "[manifold]\ndim=2\n[metric]\ng_1_1=1\ng_2_2=1\n[connection]\nK_1_1_2=1\nK_1_2_1=2\n";
        assert!(parse_spec(conflict).unwrap_err().to_string().contains("conflicts"));

        let index = "[manifold]\ndim=2\n[metric]\ng_1_3=1\n";
        assert!(matches!(parse_spec(index), Err(SpecError::Syntax { line: 4, .. })));

        let quat_dim = "[manifold]\ndim=2\n[metric]\ng_1_1=1\ng_2_2=1\n[quaternionic]\nc=0\n";
        assert!(matches!(parse_spec(quat_dim), Err(SpecError::Model(_))));

        assert!(parse_spec("g_1_1=1\n").is_err());
        assert!(parse_spec("[manifold]\ndim=1\n[metric]\ng_1_1=1\n[bogus]\n").is_err());
    }

    #[test]
    fn submanifold_variables_are_u() {
        let text = "[manifold]\ndim=2\n[metric]\ng_1_1=1\ng_2_2=1\n[submanifold]\nn=1\nf_1=u1\nf_2=x1\n";
        assert!(matches!(parse_spec(text), Err(SpecError::Expr { line: 9, .. })));
    }
}
