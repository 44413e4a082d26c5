//! Pointwise multilinear algebra: metrics, connection coefficients,
//! curvature tensors and the sectional K-curvature built from a dual pair.
//!
//! Index conventions used throughout the crate:
//!
//! * `dg[(k, i, j)] = ∂_k g_ij`, `d2g[(l, k, i, j)] = ∂_l ∂_k g_ij`
//! * `gamma[(k, i, j)] = Γ^k_ij`, so `∇_∂i ∂j = Γ^k_ij ∂k`
//! * `dgamma[(l, k, i, j)] = ∂_l Γ^k_ij`
//! * `r[(l, i, j, k)] = R^l_ijk` with `R(∂i, ∂j)∂k = R^l_ijk ∂l` and
//!   `R^l_ijk = ∂_i Γ^l_jk − ∂_j Γ^l_ik + Γ^l_im Γ^m_jk − Γ^l_jm Γ^m_ik`
//!
//! With this sign the unit sphere has `g(R(X,Y)Y,X) = 1` on orthonormal pairs.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::jet::Jet2;

/// Smallest eigenvalue a metric may have.
pub const MIN_METRIC_EIGENVALUE: f64 = 1e-10;
/// Orthonormality tolerance for planes and frames.
pub const ORTHONORMAL_TOL: f64 = 1e-10;
/// Pivot norm below which Gram-Schmidt declares rank deficiency.
pub const PIVOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("metric is singular or not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    SingularMetric { min_eigenvalue: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("vectors are not orthonormal (residual {residual:e})")]
    NotOrthonormal { residual: f64 },
    #[error("rank deficiency at vector {index} (pivot norm {norm:e})")]
    RankDeficient { index: usize, norm: f64 },
    #[error("frame does not span the space: {got} of {expected} vectors")]
    IncompleteFrame { expected: usize, got: usize },
}

/// Dense cube `d×d×d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dim: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dim: usize) -> Tensor3 {
        Tensor3 { dim, data: vec![0.0; dim * dim * dim] }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Tensor3 {
        let mut t = Tensor3::zeros(dim);
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    t.data[(a * dim + b) * dim + c] = f(a, b, c);
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Tensor3) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl std::ops::Index<(usize, usize, usize)> for Tensor3 {
    type Output = f64;
    fn index(&self, (a, b, c): (usize, usize, usize)) -> &f64 {
        &self.data[(a * self.dim + b) * self.dim + c]
    }
}

impl std::ops::IndexMut<(usize, usize, usize)> for Tensor3 {
    fn index_mut(&mut self, (a, b, c): (usize, usize, usize)) -> &mut f64 {
        &mut self.data[(a * self.dim + b) * self.dim + c]
    }
}

/// Dense `d×d×d×d` array.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    dim: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(dim: usize) -> Tensor4 {
        Tensor4 { dim, data: vec![0.0; dim * dim * dim * dim] }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Tensor4 {
        let mut t = Tensor4::zeros(dim);
        let mut n = 0;
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    for e in 0..dim {
                        t.data[n] = f(a, b, c, e);
                        n += 1;
                    }
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Tensor4) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

impl std::ops::Index<(usize, usize, usize, usize)> for Tensor4 {
    type Output = f64;
    fn index(&self, (a, b, c, e): (usize, usize, usize, usize)) -> &f64 {
        let d = self.dim;
        &self.data[((a * d + b) * d + c) * d + e]
    }
}

impl std::ops::IndexMut<(usize, usize, usize, usize)> for Tensor4 {
    fn index_mut(&mut self, (a, b, c, e): (usize, usize, usize, usize)) -> &mut f64 {
        let d = self.dim;
        &mut self.data[((a * d + b) * d + c) * d + e]
    }
}

/// `xᵀ g y`.
pub fn inner(g: &DMatrix<f64>, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for i in 0..n {
        if x[i] == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for j in 0..n {
            row += g[(i, j)] * y[j];
        }
        s += x[i] * row;
    }
    s
}

pub fn norm(g: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    inner(g, x, x).max(0.0).sqrt()
}

/// Metric with its inverse and first and second partials at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricAtPoint {
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
    dg: Tensor3,
    d2g: Tensor4,
}

impl MetricAtPoint {
    /// Symmetrises `g` and its partials, then checks positive definiteness.
    pub fn new(g: DMatrix<f64>, dg: Tensor3, d2g: Tensor4) -> Result<MetricAtPoint, GeomError> {
        let d = g.nrows();
        if g.ncols() != d {
            return Err(GeomError::Dimension { expected: d, got: g.ncols() });
        }
        if dg.dim() != d || d2g.dim() != d {
            return Err(GeomError::Dimension { expected: d, got: dg.dim().min(d2g.dim()) });
        }
        let g = (&g + g.transpose()) * 0.5;
        let dg = Tensor3::from_fn(d, |k, i, j| 0.5 * (dg[(k, i, j)] + dg[(k, j, i)]));
        let d2g = Tensor4::from_fn(d, |l, k, i, j| {
            0.25 * (d2g[(l, k, i, j)] + d2g[(l, k, j, i)] + d2g[(k, l, i, j)] + d2g[(k, l, j, i)])
        });
        let min_eigenvalue = SymmetricEigen::new(g.clone())
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, &v| m.min(v));
        if !(min_eigenvalue > MIN_METRIC_EIGENVALUE) {
            return Err(GeomError::SingularMetric { min_eigenvalue });
        }
        let g_inv = g.clone().try_inverse().ok_or(GeomError::SingularMetric { min_eigenvalue })?;
        Ok(MetricAtPoint { g, g_inv, dg, d2g })
    }

    pub fn constant(g: DMatrix<f64>) -> Result<MetricAtPoint, GeomError> {
        let d = g.nrows();
        MetricAtPoint::new(g, Tensor3::zeros(d), Tensor4::zeros(d))
    }

    pub fn euclidean(d: usize) -> MetricAtPoint {
        MetricAtPoint::constant(DMatrix::identity(d, d)).expect("identity is positive definite")
    }

    /// Builds the metric from row-major jets of its entries.
    pub fn from_jets(entries: &[Jet2]) -> Result<MetricAtPoint, GeomError> {
        let d = (entries.len() as f64).sqrt() as usize;
        if d * d != entries.len() {
            return Err(GeomError::Dimension { expected: d * d, got: entries.len() });
        }
        let g = DMatrix::from_fn(d, d, |i, j| entries[i * d + j].value());
        let dg = Tensor3::from_fn(d, |k, i, j| entries[i * d + j].grad()[k]);
        let d2g = Tensor4::from_fn(d, |l, k, i, j| entries[i * d + j].hess_at(l, k));
        MetricAtPoint::new(g, dg, d2g)
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn g_inv(&self) -> &DMatrix<f64> {
        &self.g_inv
    }

    pub fn dg(&self) -> &Tensor3 {
        &self.dg
    }

    pub fn d2g(&self) -> &Tensor4 {
        &self.d2g
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        inner(&self.g, x, y)
    }

    /// `∂_l g^{ki} = −g^{ka} ∂_l g_ab g^{bi}`.
    pub fn d_inv(&self) -> Tensor3 {
        let d = self.dim();
        let mut out = Tensor3::zeros(d);
        for l in 0..d {
            let dgl = DMatrix::from_fn(d, d, |a, b| self.dg[(l, a, b)]);
            let m = -(&self.g_inv * dgl * &self.g_inv);
            for k in 0..d {
                for i in 0..d {
                    out[(l, k, i)] = m[(k, i)];
                }
            }
        }
        out
    }
}

/// Connection coefficients and their first partials.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionAtPoint {
    gamma: Tensor3,
    dgamma: Tensor4,
}

impl ConnectionAtPoint {
    pub fn new(gamma: Tensor3, dgamma: Tensor4) -> Result<ConnectionAtPoint, GeomError> {
        if gamma.dim() != dgamma.dim() {
            return Err(GeomError::Dimension { expected: gamma.dim(), got: dgamma.dim() });
        }
        Ok(ConnectionAtPoint { gamma, dgamma })
    }

    pub fn zero(dim: usize) -> ConnectionAtPoint {
        ConnectionAtPoint { gamma: Tensor3::zeros(dim), dgamma: Tensor4::zeros(dim) }
    }

    pub fn dim(&self) -> usize {
        self.gamma.dim()
    }

    pub fn gamma(&self) -> &Tensor3 {
        &self.gamma
    }

    pub fn dgamma(&self) -> &Tensor4 {
        &self.dgamma
    }

    /// `max |Γ^k_ij − Γ^k_ji|`.
    pub fn torsion(&self) -> f64 {
        let d = self.dim();
        let mut m: f64 = 0.0;
        for k in 0..d {
            for i in 0..d {
                for j in (i + 1)..d {
                    m = m.max((self.gamma[(k, i, j)] - self.gamma[(k, j, i)]).abs());
                }
            }
        }
        m
    }

    /// `∇_X Y` for constant-coefficient fields: only the `Γ(X, Y)` part.
    pub fn contract(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let d = self.dim();
        DVector::from_fn(d, |k, _| {
            let mut s = 0.0;
            for i in 0..d {
                if x[i] == 0.0 {
                    continue;
                }
                for j in 0..d {
                    s += self.gamma[(k, i, j)] * x[i] * y[j];
                }
            }
            s
        })
    }

    /// Componentwise `(a·self + b·other)`.
    pub fn combine(&self, a: f64, other: &ConnectionAtPoint, b: f64) -> ConnectionAtPoint {
        let d = self.dim();
        ConnectionAtPoint {
            gamma: Tensor3::from_fn(d, |k, i, j| a * self.gamma[(k, i, j)] + b * other.gamma[(k, i, j)]),
            dgamma: Tensor4::from_fn(d, |l, k, i, j| {
                a * self.dgamma[(l, k, i, j)] + b * other.dgamma[(l, k, i, j)]
            }),
        }
    }
}

/// Levi-Civita connection of `metric` via the Christoffel formula.
pub fn levi_civita(metric: &MetricAtPoint) -> ConnectionAtPoint {
    let d = metric.dim();
    let dg = metric.dg();
    let d2g = metric.d2g();
    if dg.max_abs() == 0.0 && d2g.max_abs() == 0.0 {
        return ConnectionAtPoint::zero(d);
    }
    let gi = metric.g_inv();
    let dgi = metric.d_inv();
    // lowered Γ_{l,ij} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij) and its partials
    let low = Tensor3::from_fn(d, |l, i, j| 0.5 * (dg[(i, j, l)] + dg[(j, i, l)] - dg[(l, i, j)]));
    let dlow = Tensor4::from_fn(d, |m, l, i, j| {
        0.5 * (d2g[(m, i, j, l)] + d2g[(m, j, i, l)] - d2g[(m, l, i, j)])
    });
    let gamma = Tensor3::from_fn(d, |k, i, j| (0..d).map(|l| gi[(k, l)] * low[(l, i, j)]).sum());
    let dgamma = Tensor4::from_fn(d, |m, k, i, j| {
        (0..d).map(|l| dgi[(m, k, l)] * low[(l, i, j)] + gi[(k, l)] * dlow[(m, l, i, j)]).sum()
    });
    ConnectionAtPoint { gamma, dgamma }
}

/// Solves `∂_i g_jk = Γ^m_ij g_mk + Γ*^m_ik g_jm` for the dual coefficients.
pub fn dual_connection(metric: &MetricAtPoint, conn: &ConnectionAtPoint) -> Result<ConnectionAtPoint, GeomError> {
    let d = metric.dim();
    if conn.dim() != d {
        return Err(GeomError::Dimension { expected: d, got: conn.dim() });
    }
    let g = metric.g();
    let gi = metric.g_inv();
    let dg = metric.dg();
    let d2g = metric.d2g();
    let dgi = metric.d_inv();
    let (gam, dgam) = (conn.gamma(), conn.dgamma());
    if dg.max_abs() == 0.0 && d2g.max_abs() == 0.0 && gam.max_abs() == 0.0 && dgam.max_abs() == 0.0 {
        return Ok(ConnectionAtPoint::zero(d));
    }
    // X_{j,ik} = ∂_i g_jk − g_kl Γ^l_ij, so that Γ*^m_ik = g^{mj} X_{j,ik}
    let x = Tensor3::from_fn(d, |j, i, k| {
        dg[(i, j, k)] - (0..d).map(|l| g[(k, l)] * gam[(l, i, j)]).sum::<f64>()
    });
    let dx = Tensor4::from_fn(d, |p, j, i, k| {
        d2g[(p, i, j, k)]
            - (0..d)
                .map(|l| dg[(p, k, l)] * gam[(l, i, j)] + g[(k, l)] * dgam[(p, l, i, j)])
                .sum::<f64>()
    });
    let gamma = Tensor3::from_fn(d, |m, i, k| (0..d).map(|j| gi[(m, j)] * x[(j, i, k)]).sum());
    let dgamma = Tensor4::from_fn(d, |p, m, i, k| {
        (0..d).map(|j| dgi[(p, m, j)] * x[(j, i, k)] + gi[(m, j)] * dx[(p, j, i, k)]).sum()
    });
    Ok(ConnectionAtPoint { gamma, dgamma })
}

/// Curvature components `R^l_ijk`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureAtPoint {
    r: Tensor4,
}

impl CurvatureAtPoint {
    pub fn from_components(r: Tensor4) -> CurvatureAtPoint {
        CurvatureAtPoint { r }
    }

    pub fn dim(&self) -> usize {
        self.r.dim()
    }

    pub fn components(&self) -> &Tensor4 {
        &self.r
    }

    /// `R(X, Y)Z`.
    pub fn apply(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        let d = self.dim();
        let mut out = DVector::zeros(d);
        for i in 0..d {
            for j in 0..d {
                let xy = x[i] * y[j];
                if xy == 0.0 {
                    continue;
                }
                for k in 0..d {
                    let w = xy * z[k];
                    if w == 0.0 {
                        continue;
                    }
                    for l in 0..d {
                        out[l] += self.r[(l, i, j, k)] * w;
                    }
                }
            }
        }
        out
    }

    /// `g(R(X, Y)Z, W)`.
    pub fn lowered_value(
        &self,
        g: &DMatrix<f64>,
        x: &DVector<f64>,
        y: &DVector<f64>,
        z: &DVector<f64>,
        w: &DVector<f64>,
    ) -> f64 {
        inner(g, &self.apply(x, y, z), w)
    }

    /// `R_ijkl = g_lm R^m_ijk`.
    pub fn lowered(&self, g: &DMatrix<f64>) -> Tensor4 {
        let d = self.dim();
        Tensor4::from_fn(d, |i, j, k, l| (0..d).map(|m| g[(l, m)] * self.r[(m, i, j, k)]).sum())
    }
}

/// Curvature of a connection from its coefficients and their partials.
pub fn curvature(conn: &ConnectionAtPoint) -> CurvatureAtPoint {
    let d = conn.dim();
    let (g, dg) = (conn.gamma(), conn.dgamma());
    let mut r = Tensor4::zeros(d);
    if g.max_abs() == 0.0 && dg.max_abs() == 0.0 {
        return CurvatureAtPoint { r };
    }
    for l in 0..d {
        for i in 0..d {
            for j in (i + 1)..d {
                for k in 0..d {
                    let mut v = dg[(i, l, j, k)] - dg[(j, l, i, k)];
                    for m in 0..d {
                        v += g[(l, i, m)] * g[(m, j, k)] - g[(l, j, m)] * g[(m, i, k)];
                    }
                    r[(l, i, j, k)] = v;
                    r[(l, j, i, k)] = -v;
                }
            }
        }
    }
    CurvatureAtPoint { r }
}

/// Weight on the Levi-Civita term inside the K-curvature bracket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KCurvatureWeight {
    /// `½[R + R* − 2R°]`, used by every inequality computation.
    #[default]
    Full,
    /// `½[R + R* − R°]`, kept for comparison reports only.
    Single,
}

impl KCurvatureWeight {
    fn coefficient(self) -> f64 {
        match self {
            KCurvatureWeight::Full => 2.0,
            KCurvatureWeight::Single => 1.0,
        }
    }
}

/// Two orthonormal tangent vectors spanning a plane section.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    x: DVector<f64>,
    y: DVector<f64>,
}

impl Plane {
    pub fn new(g: &DMatrix<f64>, x: DVector<f64>, y: DVector<f64>) -> Result<Plane, GeomError> {
        if x.len() != g.nrows() || y.len() != g.nrows() {
            return Err(GeomError::Dimension { expected: g.nrows(), got: x.len().min(y.len()) });
        }
        let residual = (inner(g, &x, &x) - 1.0)
            .abs()
            .max((inner(g, &y, &y) - 1.0).abs())
            .max(inner(g, &x, &y).abs());
        if residual > ORTHONORMAL_TOL {
            return Err(GeomError::NotOrthonormal { residual });
        }
        Ok(Plane { x, y })
    }

    pub fn x(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    Tangent,
    Normal,
}

/// Ordered orthonormal vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    vectors: Vec<DVector<f64>>,
    kind: FrameKind,
}

impl Frame {
    /// Wraps vectors after checking orthonormality against `g`.
    pub fn new(g: &DMatrix<f64>, vectors: Vec<DVector<f64>>, kind: FrameKind) -> Result<Frame, GeomError> {
        let residual = gram_residual(g, &vectors);
        if residual > ORTHONORMAL_TOL {
            return Err(GeomError::NotOrthonormal { residual });
        }
        Ok(Frame { vectors, kind })
    }

    pub fn standard(dim: usize) -> Frame {
        Frame {
            vectors: (0..dim).map(|i| DVector::from_fn(dim, |k, _| if k == i { 1.0 } else { 0.0 })).collect(),
            kind: FrameKind::Tangent,
        }
    }

    pub fn vectors(&self) -> &[DVector<f64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn kind(&self) -> FrameKind {
        self.kind
    }

    pub fn with_kind(mut self, kind: FrameKind) -> Frame {
        self.kind = kind;
        self
    }
}

/// `max |⟨v_a, v_b⟩ − δ_ab|`.
pub fn gram_residual(g: &DMatrix<f64>, vectors: &[DVector<f64>]) -> f64 {
    let mut m: f64 = 0.0;
    for (a, va) in vectors.iter().enumerate() {
        for (b, vb) in vectors.iter().enumerate().skip(a) {
            let target = if a == b { 1.0 } else { 0.0 };
            m = m.max((inner(g, va, vb) - target).abs());
        }
    }
    m
}

/// Modified Gram-Schmidt in the `g` inner product.
pub fn gram_schmidt(g: &DMatrix<f64>, vectors: &[DVector<f64>]) -> Result<Frame, GeomError> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(vectors.len());
    for (index, v) in vectors.iter().enumerate() {
        if v.len() != g.nrows() {
            return Err(GeomError::Dimension { expected: g.nrows(), got: v.len() });
        }
        let w = orthogonalize(g, v, &out);
        let n = norm(g, &w);
        if n < PIVOT_TOL {
            return Err(GeomError::RankDeficient { index, norm: n });
        }
        out.push(w / n);
    }
    Ok(Frame { vectors: out, kind: FrameKind::Tangent })
}

/// Extends an orthonormal set with candidates, skipping those whose residual
/// norm falls below `skip_below`, until `target` vectors are collected.
pub fn extend_orthonormal(
    g: &DMatrix<f64>,
    base: &[DVector<f64>],
    candidates: impl IntoIterator<Item = DVector<f64>>,
    target: usize,
    skip_below: f64,
) -> Vec<DVector<f64>> {
    let mut all: Vec<DVector<f64>> = base.to_vec();
    let mut added = Vec::new();
    for c in candidates {
        if added.len() == target {
            break;
        }
        let w = orthogonalize(g, &c, &all);
        let n = norm(g, &w);
        if n < skip_below {
            continue;
        }
        let u = w / n;
        all.push(u.clone());
        added.push(u);
    }
    added
}

fn orthogonalize(g: &DMatrix<f64>, v: &DVector<f64>, basis: &[DVector<f64>]) -> DVector<f64> {
    let mut w = v.clone();
    // two passes keep the result orthogonal to working precision
    for _ in 0..2 {
        for e in basis {
            let c = inner(g, &w, e);
            w -= e * c;
        }
    }
    w
}

fn plane_curvature(r: &CurvatureAtPoint, g: &DMatrix<f64>, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    r.lowered_value(g, x, y, y, x)
}

/// `½[g(R(X,Y)Y,X) + g(R*(X,Y)Y,X) − w·g(R°(X,Y)Y,X)]` for an orthonormal plane.
pub fn sectional_k(
    g: &DMatrix<f64>,
    r: &CurvatureAtPoint,
    r_star: &CurvatureAtPoint,
    r_lc: &CurvatureAtPoint,
    plane: &Plane,
    weight: KCurvatureWeight,
) -> Result<f64, GeomError> {
    Plane::new(g, plane.x.clone(), plane.y.clone())?;
    let (x, y) = (&plane.x, &plane.y);
    Ok(0.5
        * (plane_curvature(r, g, x, y) + plane_curvature(r_star, g, x, y)
            - weight.coefficient() * plane_curvature(r_lc, g, x, y)))
}

/// Ordinary sectional curvature `g(R(X,Y)Y,X)` of an orthonormal pair.
pub fn sectional(g: &DMatrix<f64>, r: &CurvatureAtPoint, plane: &Plane) -> f64 {
    plane_curvature(r, g, &plane.x, &plane.y)
}

/// Sum of [`sectional_k`] over all frame pairs `i < j`.
pub fn scalar_tau(
    g: &DMatrix<f64>,
    r: &CurvatureAtPoint,
    r_star: &CurvatureAtPoint,
    r_lc: &CurvatureAtPoint,
    frame: &Frame,
    weight: KCurvatureWeight,
) -> Result<f64, GeomError> {
    let residual = gram_residual(g, frame.vectors());
    if residual > ORTHONORMAL_TOL {
        return Err(GeomError::NotOrthonormal { residual });
    }
    if frame.len() != g.nrows() {
        return Err(GeomError::IncompleteFrame { expected: g.nrows(), got: frame.len() });
    }
    let e = frame.vectors();
    let mut tau = 0.0;
    for i in 0..e.len() {
        for j in (i + 1)..e.len() {
            tau += 0.5
                * (plane_curvature(r, g, &e[i], &e[j]) + plane_curvature(r_star, g, &e[i], &e[j])
                    - weight.coefficient() * plane_curvature(r_lc, g, &e[i], &e[j]));
        }
    }
    Ok(tau)
}

/// Ordinary scalar curvature `Σ_{i<j} g(R(e_i,e_j)e_j,e_i)` over a frame.
pub fn scalar_of(g: &DMatrix<f64>, r: &CurvatureAtPoint, frame: &[DVector<f64>]) -> f64 {
    let mut tau = 0.0;
    for i in 0..frame.len() {
        for j in (i + 1)..frame.len() {
            tau += plane_curvature(r, g, &frame[i], &frame[j]);
        }
    }
    tau
}
