//! Ambient statistical manifolds given by chart expressions, optionally
//! carrying an almost quaternionic structure.

mod builtin;
mod validate;

pub use builtin::{euclidean, flat_quaternionic, hessian, normal_family, round_sphere, standard_j};
pub use validate::{
    constant_type_fit, constant_type_tensor, validate_model, validate_quaternionic, validate_statistical, CheckResult,
    ConstantTypeFit, PointFailure, ValidationReport,
};

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use thiserror::Error;

use crate::expr::{EvalError, ExprAst, ExprMatrix};
use crate::geom::{
    curvature, dual_connection, levi_civita, ConnectionAtPoint, CurvatureAtPoint, GeomError, MetricAtPoint,
    Tensor3, Tensor4,
};
use crate::jet::Jet2;

/// Largest lower-index asymmetry accepted by [`AmbientModel::connection_at`].
pub const TORSION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("explicit connection is not torsion-free (asymmetry {residual:e})")]
    AsymmetricConnection { residual: f64 },
    #[error("model has no quaternionic structure")]
    MissingQuaternionic,
    #[error("potential is not strictly convex at {point:?} (smallest Hessian eigenvalue {eigenvalue:e})")]
    NotConvex { point: Vec<f64>, eigenvalue: f64 },
}

/// How the primal connection is specified.
#[derive(Debug, Clone, PartialEq)]
pub enum ConnectionSpec {
    /// Totally symmetric cubic form `K_ijk`, keyed by sorted index triples.
    /// `Γ = Γ° + K♯`, `Γ* = Γ° − K♯` with `K♯^k_ij = g^{kl} K_lij`.
    Skewness(BTreeMap<(usize, usize, usize), ExprAst>),
    /// Coefficients `Γ^k_ij`, keyed by `(k, i, j)`; the dual is solved for.
    Explicit(BTreeMap<(usize, usize, usize), ExprAst>),
}

impl ConnectionSpec {
    pub fn trivial() -> ConnectionSpec {
        ConnectionSpec::Skewness(BTreeMap::new())
    }

    pub fn is_skewness(&self) -> bool {
        matches!(self, ConnectionSpec::Skewness(_))
    }
}

/// Expressions for `J_α` and `ω_α`, plus the constant `c` when declared.
#[derive(Debug, Clone, PartialEq)]
pub struct QuaternionicSpec {
    pub j: [ExprMatrix; 3],
    pub omega: [Vec<ExprAst>; 3],
    pub c: Option<f64>,
}

/// Chart-level ambient manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientModel {
    name: String,
    dim: usize,
    domain: Vec<(f64, f64)>,
    metric: ExprMatrix,
    connection: ConnectionSpec,
    quaternionic: Option<QuaternionicSpec>,
}

impl AmbientModel {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        domain: Vec<(f64, f64)>,
        metric: ExprMatrix,
        connection: ConnectionSpec,
        quaternionic: Option<QuaternionicSpec>,
    ) -> Result<AmbientModel, ModelError> {
        if dim == 0 {
            return Err(ModelError::Invalid("dimension must be positive".into()));
        }
        if domain.len() != dim {
            return Err(ModelError::Invalid(format!("domain has {} intervals for dimension {dim}", domain.len())));
        }
        if let Some((i, _)) = domain.iter().enumerate().find(|(_, (lo, hi))| !(lo <= hi) || !lo.is_finite() || !hi.is_finite()) {
            return Err(ModelError::Invalid(format!("domain interval {} is empty or unbounded", i + 1)));
        }
        if metric.rows() != dim || metric.cols() != dim {
            return Err(ModelError::Invalid(format!("metric must be {dim}x{dim}")));
        }
        let mut exprs: Vec<&ExprAst> = metric.entries().iter().collect();
        match &connection {
            ConnectionSpec::Skewness(map) | ConnectionSpec::Explicit(map) => {
                for (&(a, b, c), e) in map {
                    if a >= dim || b >= dim || c >= dim {
                        return Err(ModelError::Invalid(format!("connection index ({a},{b},{c}) out of range")));
                    }
                    if let ConnectionSpec::Skewness(_) = connection {
                        if !(a <= b && b <= c) {
                            return Err(ModelError::Invalid("skewness keys must be sorted".into()));
                        }
                    }
                    exprs.push(e);
                }
            }
        }
        if let Some(q) = &quaternionic {
            if dim % 4 != 0 {
                return Err(ModelError::Invalid(format!("quaternionic structure needs dimension divisible by 4, got {dim}")));
            }
            for j in &q.j {
                if j.rows() != dim || j.cols() != dim {
                    return Err(ModelError::Invalid(format!("J matrices must be {dim}x{dim}")));
                }
                exprs.extend(j.entries());
            }
            for w in &q.omega {
                if w.len() != dim {
                    return Err(ModelError::Invalid(format!("omega rows must have length {dim}")));
                }
                exprs.extend(w);
            }
        }
        if let Some(e) = exprs.iter().find(|e| e.nvars() != dim) {
            return Err(ModelError::Invalid(format!("expression `{}` is not in the ambient chart", e.source())));
        }
        Ok(AmbientModel { name: name.into(), dim, domain, metric, connection, quaternionic })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn metric_exprs(&self) -> &ExprMatrix {
        &self.metric
    }

    pub fn connection(&self) -> &ConnectionSpec {
        &self.connection
    }

    pub fn quaternionic(&self) -> Option<&QuaternionicSpec> {
        self.quaternionic.as_ref()
    }

    pub fn declared_c(&self) -> Option<f64> {
        self.quaternionic.as_ref().and_then(|q| q.c)
    }

    pub fn with_quaternionic(mut self, q: Option<QuaternionicSpec>) -> Result<AmbientModel, ModelError> {
        self.quaternionic = q;
        AmbientModel::new(self.name, self.dim, self.domain, self.metric, self.connection, self.quaternionic)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> AmbientModel {
        self.name = name.into();
        self
    }

    /// Uniform sample from the domain box.
    pub fn sample_points<R: Rng>(&self, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| {
                self.domain
                    .iter()
                    .map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..hi) } else { lo })
                    .collect()
            })
            .collect()
    }

    /// Everything the validators need at one point. Asymmetric explicit
    /// coefficients are accepted here so that torsion can be measured.
    pub fn eval_point(&self, point: &[f64]) -> Result<AmbientPoint, ModelError> {
        let d = self.dim;
        if point.len() != d {
            return Err(ModelError::Invalid(format!("point has {} coordinates, expected {d}", point.len())));
        }
        let jets: Vec<Jet2> = self.metric.entries().iter().map(|e| e.jet_at(point)).collect::<Result<_, _>>()?;
        let mut asym: f64 = 0.0;
        for i in 0..d {
            for j in (i + 1)..d {
                asym = asym.max((jets[i * d + j].value() - jets[j * d + i].value()).abs());
            }
        }
        let metric = MetricAtPoint::from_jets(&jets)?;
        let lc = levi_civita(&metric);
        let (conn, dual) = match &self.connection {
            ConnectionSpec::Skewness(map) => {
                let sharp = skewness_sharp(&metric, map, point)?;
                (lc.combine(1.0, &sharp, 1.0), lc.combine(1.0, &sharp, -1.0))
            }
            ConnectionSpec::Explicit(map) => {
                let mut gamma = Tensor3::zeros(d);
                let mut dgamma = Tensor4::zeros(d);
                for (&(k, i, j), e) in map {
                    let jet = e.jet_at(point)?;
                    gamma[(k, i, j)] = jet.value();
                    for l in 0..d {
                        dgamma[(l, k, i, j)] = jet.grad()[l];
                    }
                }
                let conn = ConnectionAtPoint::new(gamma, dgamma)?;
                let dual = dual_connection(&metric, &conn)?;
                (conn, dual)
            }
        };
        let quat = match &self.quaternionic {
            Some(q) => Some(QuatAtPoint::eval(q, &metric, point)?),
            None => None,
        };
        Ok(AmbientPoint { point: point.to_vec(), metric, metric_asymmetry: asym, conn, dual, lc, quat })
    }

    /// Primal and dual connections, rejecting torsion.
    pub fn connection_at(&self, point: &[f64]) -> Result<(ConnectionAtPoint, ConnectionAtPoint), ModelError> {
        let p = self.eval_point(point)?;
        let residual = p.conn.torsion().max(p.dual.torsion());
        if residual > TORSION_TOL {
            return Err(ModelError::AsymmetricConnection { residual });
        }
        Ok((p.conn, p.dual))
    }
}

fn skewness_sharp(
    metric: &MetricAtPoint,
    map: &BTreeMap<(usize, usize, usize), ExprAst>,
    point: &[f64],
) -> Result<ConnectionAtPoint, ModelError> {
    let d = metric.dim();
    if map.is_empty() {
        return Ok(ConnectionAtPoint::zero(d));
    }
    let mut k = Tensor3::zeros(d);
    let mut dk = Tensor4::zeros(d);
    for (&(a, b, c), e) in map {
        let jet = e.jet_at(point)?;
        for (x, y, z) in [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
            k[(x, y, z)] = jet.value();
            for m in 0..d {
                dk[(m, x, y, z)] = jet.grad()[m];
            }
        }
    }
    let gi = metric.g_inv();
    let dgi = metric.d_inv();
    let gamma = Tensor3::from_fn(d, |r, i, j| (0..d).map(|l| gi[(r, l)] * k[(l, i, j)]).sum());
    let dgamma = Tensor4::from_fn(d, |m, r, i, j| {
        (0..d).map(|l| dgi[(m, r, l)] * k[(l, i, j)] + gi[(r, l)] * dk[(m, l, i, j)]).sum()
    });
    Ok(ConnectionAtPoint::new(gamma, dgamma)?)
}

/// Quaternionic data at a point: `J_α`, their partials `∂_l (J_α)^k_i`,
/// Hermite-like duals and the connection forms.
#[derive(Debug, Clone, PartialEq)]
pub struct QuatAtPoint {
    pub j: [DMatrix<f64>; 3],
    pub dj: [Tensor3; 3],
    pub j_star: [DMatrix<f64>; 3],
    pub omega: [DVector<f64>; 3],
}

impl QuatAtPoint {
    fn eval(q: &QuaternionicSpec, metric: &MetricAtPoint, point: &[f64]) -> Result<QuatAtPoint, ModelError> {
        let d = metric.dim();
        let mut j = Vec::with_capacity(3);
        let mut dj = Vec::with_capacity(3);
        for m in &q.j {
            let jets: Vec<Jet2> = m.entries().iter().map(|e| e.jet_at(point)).collect::<Result<_, _>>()?;
            j.push(DMatrix::from_fn(d, d, |k, i| jets[k * d + i].value()));
            dj.push(Tensor3::from_fn(d, |l, k, i| jets[k * d + i].grad()[l]));
        }
        let mut omega = Vec::with_capacity(3);
        for w in &q.omega {
            let vals: Vec<f64> = w.iter().map(|e| e.eval(point)).collect::<Result<_, _>>()?;
            omega.push(DVector::from_vec(vals));
        }
        let j: [DMatrix<f64>; 3] = j.try_into().expect("three matrices");
        let g = metric.g();
        let j_star = [compute_dual_j(g, &j[0])?, compute_dual_j(g, &j[1])?, compute_dual_j(g, &j[2])?];
        Ok(QuatAtPoint {
            j,
            dj: dj.try_into().expect("three tensors"),
            j_star,
            omega: omega.try_into().expect("three covectors"),
        })
    }
}

/// `J* = −g⁻¹ Jᵀ g`, the endomorphism with `g(JX, Y) + g(X, J*Y) = 0`.
pub fn compute_dual_j(g: &DMatrix<f64>, j: &DMatrix<f64>) -> Result<DMatrix<f64>, GeomError> {
    let gi = g.clone().try_inverse().ok_or(GeomError::SingularMetric { min_eigenvalue: 0.0 })?;
    Ok(-(gi * j.transpose() * g))
}

/// Curvatures of the primal, dual and Levi-Civita connections.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureSet {
    pub r: CurvatureAtPoint,
    pub r_star: CurvatureAtPoint,
    pub r_lc: CurvatureAtPoint,
}

/// Ambient geometry evaluated at one chart point.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientPoint {
    pub point: Vec<f64>,
    pub metric: MetricAtPoint,
    /// `max |g_ij − g_ji|` of the raw entries before symmetrisation.
    pub metric_asymmetry: f64,
    pub conn: ConnectionAtPoint,
    pub dual: ConnectionAtPoint,
    pub lc: ConnectionAtPoint,
    pub quat: Option<QuatAtPoint>,
}

impl AmbientPoint {
    pub fn curvatures(&self) -> CurvatureSet {
        CurvatureSet { r: curvature(&self.conn), r_star: curvature(&self.dual), r_lc: curvature(&self.lc) }
    }
}
