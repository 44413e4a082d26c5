use thiserror::Error;

use crate::ambient::{euclidean, flat_quaternionic, normal_family, round_sphere, ModelError};
use crate::families::{gradient_graph, linear_quaternionic, linear_real, product_torus, skewed_graph, sphere, tilted_plane};
use crate::specfile::emit_spec;
use crate::subman::{ImmersedSubmanifold, SubmanError};

pub const FAMILIES: [&str; 6] = ["flat_quaternionic", "sphere", "euclidean", "round_sphere", "normal_family", "skewed_graph"];
pub const SUBMANIFOLDS: [&str; 6] = ["none", "torus", "linear_real", "linear_quaternionic", "graph", "tilted"];

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("unknown family `{0}` (expected one of: {list})", list = FAMILIES.join(", "))]
    UnknownFamily(String),
    #[error("unknown submanifold `{0}` (expected one of: {list})", list = SUBMANIFOLDS.join(", "))]
    UnknownSubmanifold(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Submanifold(#[from] SubmanError),
}

/// Family parameters; unset fields take per-family defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GenerateParams {
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub ambient_dim: Option<usize>,
    pub sub: Option<String>,
    pub radii: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub alpha: Option<f64>,
    pub psi: Option<String>,
    pub angle: Option<f64>,
}

fn emit_sub(s: ImmersedSubmanifold) -> String {
    emit_spec(s.ambient(), Some(&s.spec()))
}

fn default_potential(m: usize) -> String {
    let mut terms: Vec<String> = (1..=m).map(|i| format!("0.{i}*u{i}^2")).collect();
    terms.push("0.05*u1^3".into());
    terms.join(" + ")
}

fn quaternionic(p: &GenerateParams) -> Result<String, GenerateError> {
    let m = p.m.unwrap_or(1);
    if m == 0 {
        return Err(GenerateError::Invalid("m must be at least 1".into()));
    }
    let sub = p.sub.as_deref().unwrap_or("none");
    Ok(match sub {
        "none" => emit_spec(&flat_quaternionic(m)?, None),
        "torus" => {
            let radii = match &p.radii {
                Some(r) => r.clone(),
                None => vec![1.0; p.n.unwrap_or(m)],
            };
            emit_sub(product_torus(m, &radii)?)
        }
        "linear_real" => emit_sub(linear_real(m, p.n.unwrap_or(m))?),
        "linear_quaternionic" => emit_sub(linear_quaternionic(m, p.k.unwrap_or(1))?),
        "graph" => {
            let psi = p.psi.clone().unwrap_or_else(|| default_potential(m));
            emit_sub(gradient_graph(m, &psi)?)
        }
        "tilted" => {
            if m != 2 {
                return Err(GenerateError::Invalid("tilted plane lives in m = 2".into()));
            }
            emit_sub(tilted_plane(p.angle.unwrap_or(0.3))?)
        }
        other => return Err(GenerateError::UnknownSubmanifold(other.into())),
    })
}

/// Spec-file text for a named family.
pub fn generate(family: &str, p: &GenerateParams) -> Result<String, GenerateError> {
    match family {
        "flat_quaternionic" => quaternionic(p),
        "sphere" => {
            let n = p.n.unwrap_or(2);
            if let Some(d) = p.ambient_dim {
                if d != n + 1 {
                    return Err(GenerateError::Invalid(format!("sphere S^{n} needs ambient dimension {}, got {d}", n + 1)));
                }
            }
            Ok(emit_sub(sphere(n)?))
        }
        "euclidean" => {
            let d = p.ambient_dim.or(p.n).unwrap_or(3);
            Ok(emit_spec(&euclidean(d)?, None))
        }
        "round_sphere" => Ok(emit_spec(&round_sphere(p.n.unwrap_or(2), p.radius.unwrap_or(1.0))?, None)),
        "normal_family" => Ok(emit_spec(&normal_family(p.alpha.unwrap_or(0.0))?, None)),
        "skewed_graph" => Ok(emit_sub(skewed_graph()?)),
        other => Err(GenerateError::UnknownFamily(other.into())),
    }
}
