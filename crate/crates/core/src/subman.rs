//! Immersed submanifolds of an ambient model.
//!
//! Everything is evaluated from the immersion jets `f(u)`, `∂f`, `∂²f` and the
//! ambient data at `f(u)`. Induced curvature and normal curvature are
//! obtained by five-point differences of induced coefficients along the
//! submanifold chart, never from the Gauss or Ricci equations.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use crate::ambient::{AmbientModel, AmbientPoint, CurvatureSet, ModelError};
use crate::expr::{EvalError, ExprAst};
use crate::geom::{
    curvature, extend_orthonormal, gram_schmidt, inner, ConnectionAtPoint, GeomError, Tensor3,
    Tensor4,
};
use crate::specfile::SubmanifoldSpec;

/// Step of the five-point difference stencil.
pub const FD_STEP: f64 = 1e-3;
/// Smallest admissible singular value of the immersion differential.
pub const RANK_TOL: f64 = 1e-8;
/// Default alignment tolerance for [`classify`].
pub const CLASSIFY_TOL: f64 = 1e-6;
const NORMAL_SKIP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SubmanError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("immersion is not of full rank at {u:?} (smallest singular value {singular:e})")]
    RankDeficient { u: Vec<f64>, singular: f64 },
    #[error("invalid submanifold: {0}")]
    Invalid(String),
    #[error("ambient model has no quaternionic structure")]
    MissingQuaternionic,
}

/// Which ambient connection to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Primal,
    Dual,
    LeviCivita,
}

impl Which {
    fn pick(self, amb: &AmbientPoint) -> &ConnectionAtPoint {
        match self {
            Which::Primal => &amb.conn,
            Which::Dual => &amb.dual,
            Which::LeviCivita => &amb.lc,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImmersedSubmanifold {
    ambient: AmbientModel,
    n: usize,
    domain: Vec<(f64, f64)>,
    f: Vec<ExprAst>,
}

/// Immersion data at one chart point, shared by everything else.
struct Local {
    p: Vec<f64>,
    /// Columns `∂_a f`.
    df: DMatrix<f64>,
    /// `∂_a ∂_b f` at index `a * n + b`.
    d2f: Vec<DVector<f64>>,
    amb: AmbientPoint,
    gram_inv: DMatrix<f64>,
    gram: DMatrix<f64>,
    /// `P = F G⁻¹ Fᵀ ĝ`, the ĝ-orthogonal tangential projector.
    proj: DMatrix<f64>,
    /// `∂_a P`.
    dproj: Vec<DMatrix<f64>>,
}

impl Local {
    fn normal_proj(&self) -> DMatrix<f64> {
        DMatrix::identity(self.proj.nrows(), self.proj.ncols()) - &self.proj
    }

    /// Chart coordinates of the tangential part of an ambient vector.
    fn to_chart(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.gram_inv * (self.df.transpose() * (self.amb.metric.g() * v))
    }

    /// `∇̂_{∂a} ∂b f` along the immersion.
    fn second(&self, which: Which, a: usize, b: usize) -> DVector<f64> {
        let n = self.df.ncols();
        &self.d2f[a * n + b] + which.pick(&self.amb).contract(&self.df.column(a).into(), &self.df.column(b).into())
    }

    /// `∇̂_{∂b} (N ξ₀)` for the extension `ξ̃(u) = N(u) ξ₀`.
    fn normal_derivative(&self, which: Which, b: usize, xi0: &DVector<f64>) -> DVector<f64> {
        let ext = self.normal_proj() * xi0;
        -(&self.dproj[b] * xi0) + which.pick(&self.amb).contract(&self.df.column(b).into(), &ext)
    }

    /// Christoffel symbols of the induced connection in the chart.
    fn chart_christoffel(&self, which: Which) -> Tensor3 {
        let n = self.df.ncols();
        let mut t = Tensor3::zeros(n);
        for a in 0..n {
            for b in 0..n {
                let c = self.to_chart(&self.second(which, a, b));
                for k in 0..n {
                    t[(k, a, b)] = c[k];
                }
            }
        }
        t
    }

    /// `∇⊥_{∂b} ξ̃`, the normal part of [`Local::normal_derivative`].
    fn normal_connection_field(&self, which: Which, b: usize, xi0: &DVector<f64>) -> DVector<f64> {
        self.normal_proj() * self.normal_derivative(which, b, xi0)
    }
}

impl ImmersedSubmanifold {
    pub fn new(ambient: AmbientModel, spec: SubmanifoldSpec) -> Result<ImmersedSubmanifold, SubmanError> {
        let SubmanifoldSpec { n, domain, f } = spec;
        if n == 0 || n > ambient.dim() {
            return Err(SubmanError::Invalid(format!("dimension {n} does not fit in ambient dimension {}", ambient.dim())));
        }
        if f.len() != ambient.dim() {
            return Err(SubmanError::Invalid(format!("immersion has {} components, expected {}", f.len(), ambient.dim())));
        }
        if domain.len() != n {
            return Err(SubmanError::Invalid("domain does not match n".into()));
        }
        if let Some(e) = f.iter().find(|e| e.nvars() != n) {
            return Err(SubmanError::Invalid(format!("`{}` is not in the submanifold chart", e.source())));
        }
        Ok(ImmersedSubmanifold { ambient, n, domain, f })
    }

    pub fn ambient(&self) -> &AmbientModel {
        &self.ambient
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient.dim()
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn spec(&self) -> SubmanifoldSpec {
        SubmanifoldSpec { n: self.n, domain: self.domain.clone(), f: self.f.clone() }
    }

    pub fn sample_points<R: Rng>(&self, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| self.domain.iter().map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..hi) } else { lo }).collect())
            .collect()
    }

    pub fn position(&self, u: &[f64]) -> Result<Vec<f64>, SubmanError> {
        Ok(self.f.iter().map(|e| e.eval(u)).collect::<Result<_, _>>()?)
    }

    /// `G_ab = ĝ(∂_a f, ∂_b f)` at `u`.
    pub fn induced_metric(&self, u: &[f64]) -> Result<DMatrix<f64>, SubmanError> {
        Ok(self.local(u)?.gram)
    }

    fn local(&self, u: &[f64]) -> Result<Local, SubmanError> {
        let (n, d) = (self.n, self.ambient.dim());
        if u.len() != n {
            return Err(SubmanError::Invalid(format!("chart point has {} coordinates, expected {n}", u.len())));
        }
        let jets = self.f.iter().map(|e| e.jet_at(u)).collect::<Result<Vec<_>, _>>()?;
        let p: Vec<f64> = jets.iter().map(|j| j.value()).collect();
        let df = DMatrix::from_fn(d, n, |k, a| jets[k].grad()[a]);
        let d2f = (0..n * n).map(|ab| DVector::from_fn(d, |k, _| jets[k].hess_at(ab / n, ab % n))).collect();
        let amb = self.ambient.eval_point(&p)?;
        let g = amb.metric.g().clone();
        let gram = df.transpose() * &g * &df;
        let singular = nalgebra::SymmetricEigen::new(gram.clone())
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, &v| m.min(v))
            .max(0.0)
            .sqrt();
        if !(singular > RANK_TOL) {
            return Err(SubmanError::RankDeficient { u: u.to_vec(), singular });
        }
        let gram_inv = gram.clone().try_inverse().ok_or(SubmanError::RankDeficient { u: u.to_vec(), singular })?;
        let m = df.transpose() * &g;
        let proj = &df * &gram_inv * &m;
        let dg = amb.metric.dg();
        let mut dproj = Vec::with_capacity(n);
        for a in 0..n {
            let dfa = DMatrix::from_fn(d, n, |k, b| jets[k].hess_at(b, a));
            let dghat = DMatrix::from_fn(d, d, |i, j| (0..d).map(|k| dg[(k, i, j)] * df[(k, a)]).sum());
            let dgram = dfa.transpose() * &g * &df + df.transpose() * &dghat * &df + df.transpose() * &g * &dfa;
            let dgram_inv = -(&gram_inv * dgram * &gram_inv);
            let dm = dfa.transpose() * &g + df.transpose() * &dghat;
            dproj.push(&dfa * &gram_inv * &m + &df * dgram_inv * &m + &df * &gram_inv * dm);
        }
        Ok(Local { p, df, d2f, amb, gram_inv, gram, proj, dproj })
    }

    fn stencil(&self, u: &[f64]) -> Result<Vec<[Local; 4]>, SubmanError> {
        let h = FD_STEP;
        (0..self.n)
            .map(|e| {
                let at = |s: f64| {
                    let mut v = u.to_vec();
                    v[e] += s * h;
                    self.local(&v)
                };
                Ok([at(-2.0)?, at(-1.0)?, at(1.0)?, at(2.0)?])
            })
            .collect()
    }

    /// Frame, second fundamental forms, shape operators, normal connection,
    /// mean curvatures and `P_α` at `u`. The tangent frame starts with the
    /// given chart vectors (if any) and continues with `∂_1 f, ∂_2 f, …`.
    pub fn induced_data(&self, u: &[f64], leading: &[DVector<f64>]) -> Result<InducedData, SubmanError> {
        let loc = self.local(u)?;
        self.induced_from_local(u, &loc, leading)
    }

    fn induced_from_local(&self, u: &[f64], loc: &Local, leading: &[DVector<f64>]) -> Result<InducedData, SubmanError> {
        let (n, d) = (self.n, self.ambient.dim());
        let g = loc.amb.metric.g();
        let mut candidates: Vec<DVector<f64>> = leading.iter().map(|c| &loc.df * c).collect();
        candidates.extend((0..n).map(|a| loc.df.column(a).into_owned()));
        let first = gram_schmidt(g, &candidates[..leading.len()])?;
        let mut tangent = first.vectors().to_vec();
        tangent.extend(extend_orthonormal(g, &tangent, candidates[leading.len()..].iter().cloned(), n - tangent.len(), NORMAL_SKIP));
        if tangent.len() != n {
            return Err(SubmanError::RankDeficient { u: u.to_vec(), singular: 0.0 });
        }
        let nproj = loc.normal_proj();
        let coords = (0..d).map(|k| &nproj * DVector::from_fn(d, |i, _| if i == k { 1.0 } else { 0.0 }));
        let normal = extend_orthonormal(g, &tangent, coords, d - n, NORMAL_SKIP);
        if normal.len() != d - n {
            return Err(SubmanError::Invalid(format!("normal frame has {} of {} vectors", normal.len(), d - n)));
        }
        let coeffs = DMatrix::from_columns(&tangent.iter().map(|e| loc.to_chart(e)).collect::<Vec<_>>());

        let sigma_of = |which: Which| -> Vec<DMatrix<f64>> {
            // σ(∂a, ∂b) then contract into the frame
            let mut chart = vec![vec![DVector::zeros(d); n]; n];
            for (a, row) in chart.iter_mut().enumerate() {
                for (b, slot) in row.iter_mut().enumerate() {
                    *slot = &nproj * loc.second(which, a, b);
                }
            }
            normal
                .iter()
                .map(|xi| {
                    let s = DMatrix::from_fn(n, n, |a, b| inner(g, &chart[a][b], xi));
                    coeffs.transpose() * s * &coeffs
                })
                .collect()
        };
        let sigma = sigma_of(Which::Primal);
        let sigma_star = sigma_of(Which::Dual);
        let sigma_lc = sigma_of(Which::LeviCivita);

        // Weingarten: A_ξ X = −tan(∇̂_X ξ̃); stored as (A_γ)_{ji} = g(A_γ e_i, e_j)
        let shape_of = |which: Which| -> Vec<DMatrix<f64>> {
            normal
                .iter()
                .map(|xi| {
                    let cols: Vec<DVector<f64>> =
                        (0..n).map(|a| -(&loc.proj * loc.normal_derivative(which, a, xi))).collect();
                    DMatrix::from_fn(n, n, |j, i| {
                        let v: DVector<f64> = (0..n).map(|a| &cols[a] * coeffs[(a, i)]).sum();
                        inner(g, &v, &tangent[j])
                    })
                })
                .collect()
        };
        let shape = shape_of(Which::Primal);
        let shape_star = shape_of(Which::Dual);

        // ω^γ_{iβ} = ĝ(∇⊥_{e_i} ξ_β, ξ_γ)
        let normal_conn_of = |which: Which| -> Vec<DMatrix<f64>> {
            (0..n)
                .map(|i| {
                    let fields: Vec<DVector<f64>> = normal
                        .iter()
                        .map(|xi| (0..n).map(|a| loc.normal_connection_field(which, a, xi) * coeffs[(a, i)]).sum())
                        .collect();
                    DMatrix::from_fn(d - n, d - n, |gm, b| inner(g, &fields[b], &normal[gm]))
                })
                .collect()
        };
        let normal_conn = normal_conn_of(Which::Primal);
        let normal_conn_star = normal_conn_of(Which::Dual);

        let mean = |s: &[DMatrix<f64>]| -> DVector<f64> {
            let mut h = DVector::zeros(d);
            for (xi, sg) in normal.iter().zip(s) {
                h += xi * (sg.trace() / n as f64);
            }
            h
        };
        let h = mean(&sigma);
        let h_star = mean(&sigma_star);

        let (p_alpha, p_alpha_star) = match &loc.amb.quat {
            Some(q) => {
                let pm = |js: &[DMatrix<f64>; 3]| -> Vec<DMatrix<f64>> {
                    js.iter()
                        .map(|j| DMatrix::from_fn(n, n, |r, i| inner(g, &(j * &tangent[i]), &tangent[r])))
                        .collect()
                };
                (Some(pm(&q.j)), Some(pm(&q.j_star)))
            }
            None => (None, None),
        };

        Ok(InducedData {
            u: u.to_vec(),
            p: loc.p.clone(),
            g_hat: g.clone(),
            induced_metric: loc.gram.clone(),
            tangent,
            coeffs,
            normal,
            sigma,
            sigma_star,
            sigma_lc,
            shape,
            shape_star,
            normal_conn,
            normal_conn_star,
            h,
            h_star,
            p_alpha,
            p_alpha_star,
        })
    }

    /// Curvatures `R, R*, R°` of the induced connections in chart coordinates.
    pub fn induced_curvatures(&self, u: &[f64]) -> Result<CurvatureSet, SubmanError> {
        let center = self.local(u)?;
        let stencil = self.stencil(u)?;
        Ok(self.curvatures_from(&center, &stencil))
    }

    fn curvatures_from(&self, center: &Local, stencil: &[[Local; 4]]) -> CurvatureSet {
        let n = self.n;
        let h = FD_STEP;
        let conn = |which: Which| {
            let gamma = center.chart_christoffel(which);
            let shifted: Vec<[Tensor3; 4]> =
                stencil.iter().map(|s| [0, 1, 2, 3].map(|i| s[i].chart_christoffel(which))).collect();
            let dgamma = Tensor4::from_fn(n, |l, k, i, j| {
                let v = &shifted[l];
                (v[0][(k, i, j)] - 8.0 * v[1][(k, i, j)] + 8.0 * v[2][(k, i, j)] - v[3][(k, i, j)]) / (12.0 * h)
            });
            curvature(&ConnectionAtPoint::new(gamma, dgamma).expect("matching dimensions"))
        };
        CurvatureSet { r: conn(Which::Primal), r_star: conn(Which::Dual), r_lc: conn(Which::LeviCivita) }
    }

    /// Induced and ambient curvatures at `u`, for reuse across planes.
    pub fn point_curvatures(&self, u: &[f64]) -> Result<PointCurvatures, SubmanError> {
        let center = self.local(u)?;
        let stencil = self.stencil(u)?;
        Ok(PointCurvatures {
            u: u.to_vec(),
            induced: self.curvatures_from(&center, &stencil),
            ambient: center.amb.curvatures(),
        })
    }

    /// Ambient curvatures at `f(u)`.
    pub fn ambient_curvatures(&self, u: &[f64]) -> Result<CurvatureSet, SubmanError> {
        Ok(self.ambient.eval_point(&self.position(u)?)?.curvatures())
    }

    /// `R⊥(∂a, ∂b) ξ₀` as ambient vectors, indexed `[a][b]`.
    fn normal_curvature(&self, which: Which, center: &Local, stencil: &[[Local; 4]], xi0: &DVector<f64>) -> Vec<Vec<DVector<f64>>> {
        let n = self.n;
        let h = FD_STEP;
        let nproj = center.normal_proj();
        let fields: Vec<DVector<f64>> = (0..n).map(|b| center.normal_connection_field(which, b, xi0)).collect();
        // ∂_a V_b by differences
        let dv = |a: usize, b: usize| -> DVector<f64> {
            let s = &stencil[a];
            let v: Vec<DVector<f64>> = s.iter().map(|l| l.normal_connection_field(which, b, xi0)).collect();
            (&v[0] - &v[1] * 8.0 + &v[2] * 8.0 - &v[3]) / (12.0 * h)
        };
        let conn = which.pick(&center.amb);
        let outer: Vec<Vec<DVector<f64>>> = (0..n)
            .map(|a| {
                let fa: DVector<f64> = center.df.column(a).into();
                (0..n).map(|b| &nproj * (dv(a, b) + conn.contract(&fa, &fields[b]))).collect()
            })
            .collect();
        (0..n).map(|a| (0..n).map(|b| &outer[a][b] - &outer[b][a]).collect()).collect()
    }

    /// Residuals of the Gauss equations for `R`, `R*` and of the normal
    /// curvature equations, each maximised over `trials` random unit tuples.
    pub fn gauss_ricci_residuals<R: Rng>(&self, u: &[f64], trials: usize, rng: &mut R) -> Result<GaussRicciResiduals, SubmanError> {
        let (n, d) = (self.n, self.ambient.dim());
        let center = self.local(u)?;
        let stencil = self.stencil(u)?;
        let data = self.induced_from_local(u, &center, &[])?;
        let induced = self.curvatures_from(&center, &stencil);
        let amb = center.amb.curvatures();
        let g = center.amb.metric.g();
        let q = d - n;

        let perp: Vec<[Vec<Vec<DVector<f64>>>; 2]> = data
            .normal
            .iter()
            .map(|xi| {
                [
                    self.normal_curvature(Which::Primal, &center, &stencil, xi),
                    self.normal_curvature(Which::Dual, &center, &stencil, xi),
                ]
            })
            .collect();
        // chart shape matrices: column a is A_ξ ∂a in chart coordinates
        let chart_shape = |which: Which, xi: &DVector<f64>| -> DMatrix<f64> {
            DMatrix::from_columns(
                &(0..n).map(|a| -center.to_chart(&center.normal_derivative(which, a, xi))).collect::<Vec<_>>(),
            )
        };
        let shape: Vec<[DMatrix<f64>; 2]> =
            data.normal.iter().map(|xi| [chart_shape(Which::Primal, xi), chart_shape(Which::Dual, xi)]).collect();

        let nproj = center.normal_proj();
        let sigma = |which: Which, x: &DVector<f64>, y: &DVector<f64>| -> DVector<f64> {
            let mut v = DVector::zeros(d);
            for a in 0..n {
                for b in 0..n {
                    v += center.second(which, a, b) * (x[a] * y[b]);
                }
            }
            &nproj * v
        };
        let push = |x: &DVector<f64>| &center.df * x;
        let gram = &center.gram;
        let chart_inner = |x: &DVector<f64>, y: &DVector<f64>| (x.transpose() * gram * y)[0];

        let unit_tangent = |rng: &mut R| -> DVector<f64> {
            let c = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let v = &data.coeffs * c;
            let norm = chart_inner(&v, &v).sqrt();
            v / norm
        };
        let unit_normal = |rng: &mut R| -> DVector<f64> {
            let c = DVector::from_fn(q, |_, _| rng.sample::<f64, _>(StandardNormal));
            c.normalize()
        };

        let mut out = GaussRicciResiduals::default();
        if q == 0 {
            return Ok(out);
        }
        for _ in 0..trials {
            let (x, y, z, w) = (unit_tangent(rng), unit_tangent(rng), unit_tangent(rng), unit_tangent(rng));
            let (px, py, pz, pw) = (push(&x), push(&y), push(&z), push(&w));
            for (star, (r_hat, r_ind)) in [(&amb.r, &induced.r), (&amb.r_star, &induced.r_star)].into_iter().enumerate() {
                let (s1, s2) = if star == 0 { (Which::Primal, Which::Dual) } else { (Which::Dual, Which::Primal) };
                let lhs = r_hat.lowered_value(g, &px, &py, &pz, &pw);
                let rhs = inner(gram, &r_ind.apply(&x, &y, &z), &w) + inner(g, &sigma(s1, &x, &z), &sigma(s2, &y, &w))
                    - inner(g, &sigma(s2, &x, &w), &sigma(s1, &y, &z));
                let slot = if star == 0 { &mut out.gauss } else { &mut out.gauss_star };
                *slot = slot.max((lhs - rhs).abs());
            }

            let (cx, cy) = (unit_normal(rng), unit_normal(rng));
            let xi: DVector<f64> = data.normal.iter().zip(cx.iter()).map(|(v, &c)| v * c).sum();
            let eta: DVector<f64> = data.normal.iter().zip(cy.iter()).map(|(v, &c)| v * c).sum();
            let combo = |k: usize| -> DVector<f64> {
                let mut v = DVector::zeros(d);
                for (beta, c) in cx.iter().enumerate() {
                    for a in 0..n {
                        for b in 0..n {
                            v += &perp[beta][k][a][b] * (c * x[a] * y[b]);
                        }
                    }
                }
                v
            };
            let shape_combo = |k: usize, coeff: &DVector<f64>| -> DMatrix<f64> {
                shape.iter().zip(coeff.iter()).map(|(m, &c)| &m[k] * c).fold(DMatrix::zeros(n, n), |acc, m| acc + m)
            };
            let (a_xi, as_xi) = (shape_combo(0, &cx), shape_combo(1, &cx));
            let (a_eta, as_eta) = (shape_combo(0, &cy), shape_combo(1, &cy));
            let bracket = |l: &DMatrix<f64>, r: &DMatrix<f64>| chart_inner(&((l * r - r * l) * &x), &y);
            for (k, r_hat) in [&amb.r, &amb.r_star].into_iter().enumerate() {
                let lhs = inner(g, &combo(k), &eta);
                let base = r_hat.lowered_value(g, &px, &py, &xi, &eta);
                // derived pairing and the pairing with ξ and η exchanged
                let (derived, exchanged) = if k == 0 {
                    (bracket(&a_xi, &as_eta), bracket(&as_xi, &a_eta))
                } else {
                    (bracket(&as_xi, &a_eta), bracket(&a_xi, &as_eta))
                };
                let (slot, alt) = if k == 0 {
                    (&mut out.ricci, &mut out.ricci_exchanged)
                } else {
                    (&mut out.ricci_star, &mut out.ricci_star_exchanged)
                };
                *slot = slot.max((lhs - base - derived).abs());
                *alt = alt.max((lhs - base - exchanged).abs());
            }
        }
        Ok(out)
    }
}

/// Curvatures at one submanifold point: induced ones in chart coordinates,
/// ambient ones in ambient coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCurvatures {
    pub u: Vec<f64>,
    pub induced: CurvatureSet,
    pub ambient: CurvatureSet,
}

/// Max residuals of the Gauss and normal-curvature equations.
///
/// `ricci` uses `[A_ξ, A*_η]` for `R⊥` and `ricci_star` uses `[A*_ξ, A_η]`
/// for `R*⊥`; the `_exchanged` fields use the other pairing.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct GaussRicciResiduals {
    pub gauss: f64,
    pub gauss_star: f64,
    pub ricci: f64,
    pub ricci_star: f64,
    pub ricci_exchanged: f64,
    pub ricci_star_exchanged: f64,
}

impl GaussRicciResiduals {
    pub fn max(&self) -> f64 {
        self.gauss.max(self.gauss_star).max(self.ricci).max(self.ricci_star)
    }

    pub fn merge(&mut self, o: &GaussRicciResiduals) {
        self.gauss = self.gauss.max(o.gauss);
        self.gauss_star = self.gauss_star.max(o.gauss_star);
        self.ricci = self.ricci.max(o.ricci);
        self.ricci_star = self.ricci_star.max(o.ricci_star);
        self.ricci_exchanged = self.ricci_exchanged.max(o.ricci_exchanged);
        self.ricci_star_exchanged = self.ricci_star_exchanged.max(o.ricci_star_exchanged);
    }
}

/// Extrinsic data at one point, in orthonormal tangent and normal frames.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedData {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub g_hat: DMatrix<f64>,
    /// `G_ab = ĝ(∂_a f, ∂_b f)`.
    pub induced_metric: DMatrix<f64>,
    /// `e_1 … e_n` as ambient vectors.
    pub tangent: Vec<DVector<f64>>,
    /// Column `i` holds the chart coordinates of `e_i`.
    pub coeffs: DMatrix<f64>,
    pub normal: Vec<DVector<f64>>,
    /// `σ^γ_ij`, one matrix per normal frame vector.
    pub sigma: Vec<DMatrix<f64>>,
    pub sigma_star: Vec<DMatrix<f64>>,
    pub sigma_lc: Vec<DMatrix<f64>>,
    /// `(A_γ)_ji = g(A_{ξγ} e_i, e_j)`.
    pub shape: Vec<DMatrix<f64>>,
    pub shape_star: Vec<DMatrix<f64>>,
    /// Entry `(γ, β)` of matrix `i` is `ĝ(∇⊥_{e_i} ξ_β, ξ_γ)`.
    pub normal_conn: Vec<DMatrix<f64>>,
    pub normal_conn_star: Vec<DMatrix<f64>>,
    pub h: DVector<f64>,
    pub h_star: DVector<f64>,
    /// `(P_α)_ji = ĝ(J_α e_i, e_j)`.
    pub p_alpha: Option<Vec<DMatrix<f64>>>,
    pub p_alpha_star: Option<Vec<DMatrix<f64>>>,
}

impl InducedData {
    pub fn n(&self) -> usize {
        self.tangent.len()
    }

    pub fn h_norm2(&self) -> f64 {
        inner(&self.g_hat, &self.h, &self.h)
    }

    pub fn h_star_norm2(&self) -> f64 {
        inner(&self.g_hat, &self.h_star, &self.h_star)
    }

    /// Chart coordinates of frame vector `i`.
    pub fn chart_vector(&self, i: usize) -> DVector<f64> {
        self.coeffs.column(i).into_owned()
    }
}

/// `(tr P_α, ‖P_α‖², ⟨P_α, P*_α⟩)` for α = 1, 2, 3, where the last pairing
/// is `Σ_ij (P_α)_ij (P*_α)_ij`.
pub fn p_alpha_invariants(data: &InducedData) -> Result<[(f64, f64, f64); 3], SubmanError> {
    let (p, ps) = match (&data.p_alpha, &data.p_alpha_star) {
        (Some(p), Some(ps)) => (p, ps),
        _ => return Err(SubmanError::MissingQuaternionic),
    };
    Ok([0, 1, 2].map(|a| (p[a].trace(), p[a].norm_squared(), p[a].component_mul(&ps[a]).sum())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassLabel {
    Invariant,
    TotallyReal,
    LagrangianLike,
    Generic,
}

impl ClassLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Invariant => "invariant",
            ClassLabel::TotallyReal => "totally_real",
            ClassLabel::LagrangianLike => "lagrangian_like",
            ClassLabel::Generic => "generic",
        }
    }

    /// Lagrangian-like submanifolds are in particular totally real.
    pub fn is_totally_real(self) -> bool {
        matches!(self, ClassLabel::TotallyReal | ClassLabel::LagrangianLike)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubmanifoldClass {
    pub label: ClassLabel,
    /// Per α, the largest `‖nor(J_α e_i)‖` over frames and points.
    pub max_normal_part: [f64; 3],
    /// Per α, the largest `‖tan(J_α e_i)‖`.
    pub max_tangent_part: [f64; 3],
    /// Smallest rank of `{nor(J_α e_i)}` in the normal space over the points.
    pub normal_span_rank: usize,
    pub normal_dim: usize,
}

/// Classifies by the alignment of `J_α T M` with `TM` and `T⊥M`.
pub fn classify(sub: &ImmersedSubmanifold, points: &[Vec<f64>], tol: f64) -> Result<SubmanifoldClass, SubmanError> {
    if sub.ambient().quaternionic().is_none() {
        return Err(SubmanError::MissingQuaternionic);
    }
    let (n, d) = (sub.n(), sub.ambient_dim());
    let mut nor = [0.0f64; 3];
    let mut tan = [0.0f64; 3];
    let mut rank = d - n;
    for u in points {
        let loc = sub.local(u)?;
        let data = sub.induced_from_local(u, &loc, &[])?;
        let q = loc.amb.quat.as_ref().expect("quaternionic ambient");
        let g = &data.g_hat;
        let mut images = Vec::new();
        for a in 0..3 {
            for e in &data.tangent {
                let je = &q.j[a] * e;
                let t: DVector<f64> = data.tangent.iter().map(|t| t * inner(g, &je, t)).sum();
                let nv = &je - &t;
                tan[a] = tan[a].max(inner(g, &t, &t).max(0.0).sqrt());
                nor[a] = nor[a].max(inner(g, &nv, &nv).max(0.0).sqrt());
                images.push(DVector::from_iterator(d - n, data.normal.iter().map(|xi| inner(g, &nv, xi))));
            }
        }
        let r = if d == n {
            0
        } else {
            let m = DMatrix::from_columns(&images);
            m.singular_values().iter().filter(|&&s| s > tol).count()
        };
        rank = rank.min(r);
    }
    let invariant = nor.iter().all(|&v| v < tol);
    let real = tan.iter().all(|&v| v < tol);
    let label = if invariant {
        ClassLabel::Invariant
    } else if real && rank == d - n {
        ClassLabel::LagrangianLike
    } else if real {
        ClassLabel::TotallyReal
    } else {
        ClassLabel::Generic
    };
    Ok(SubmanifoldClass { label, max_normal_part: nor, max_tangent_part: tan, normal_span_rank: rank, normal_dim: d - n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::{euclidean, flat_quaternionic, ConnectionSpec};
    use crate::expr::{chart_variables, parse};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn sub(ambient: AmbientModel, n: usize, domain: (f64, f64), f: &[&str]) -> ImmersedSubmanifold {
        let us = chart_variables("u", n);
        let f = f.iter().map(|s| parse(s, &us).unwrap()).collect();
        ImmersedSubmanifold::new(ambient, SubmanifoldSpec { n, domain: vec![domain; n], f }).unwrap()
    }

    fn sphere() -> ImmersedSubmanifold {
        sub(euclidean(3).unwrap(), 2, (0.3, 2.8), &["sin(u1)*cos(u2)", "sin(u1)*sin(u2)", "cos(u1)"])
    }

    fn torus() -> ImmersedSubmanifold {
        sub(flat_quaternionic(2).unwrap(), 2, (0.0, 6.28), &["cos(u1)", "sin(u1)", "0", "0", "cos(u2)", "sin(u2)", "0", "0"])
    }

    fn skewed_graph() -> ImmersedSubmanifold {
        let xs = chart_variables("x", 4);
        let base = euclidean(4).unwrap();
        let mut k = BTreeMap::new();
        k.insert((0, 0, 2), parse("0.3*x2", &xs).unwrap());
        k.insert((0, 1, 3), parse("0.2 + 0.1*x1*x3", &xs).unwrap());
        k.insert((2, 2, 3), parse("0.25*sin(x4)", &xs).unwrap());
        k.insert((1, 1, 1), parse("0.15*x3", &xs).unwrap());
        let amb = AmbientModel::new("skewed", 4, base.domain().to_vec(), base.metric_exprs().clone(), ConnectionSpec::Skewness(k), None)
            .unwrap();
        sub(amb, 2, (-0.8, 0.8), &["u1", "u2", "0.5*u1^2 - 0.3*u1*u2", "sin(u2) + 0.2*u1^2*u2"])
    }

    #[test]
    fn linear_subspace_is_totally_geodesic() {
        let s = sub(flat_quaternionic(1).unwrap(), 2, (-1.0, 1.0), &["u1", "u2", "0", "0"]);
        let d = s.induced_data(&[0.2, -0.4], &[]).unwrap();
        for m in d.sigma.iter().chain(&d.sigma_star) {
            assert_eq!(m.abs().max(), 0.0);
        }
        assert_eq!(d.h_norm2(), 0.0);
        assert_eq!(d.h_star_norm2(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = s.gauss_ricci_residuals(&[0.2, -0.4], 10, &mut rng).unwrap();
        assert!(r.max() < 1e-12);
    }

    #[test]
    fn round_sphere_second_fundamental_form() {
        let s = sphere();
        for u in [[0.7, 0.4], [1.4, 2.0], [2.1, -1.0]] {
            let d = s.induced_data(&u, &[]).unwrap();
            assert_abs_diff_eq!(d.h_norm2().sqrt(), 1.0, epsilon = 1e-12);
            // unit normal is ±(position); σ^γ_ij = ∓δ_ij
            let sg = &d.sigma[0];
            let sign = sg[(0, 0)].signum();
            assert!((sg - DMatrix::identity(2, 2) * sign).abs().max() < 1e-12);
            assert!((&d.sigma[0] - &d.sigma_star[0]).abs().max() < 1e-14);
        }
    }

    #[test]
    fn product_torus_mean_curvature() {
        let s = torus();
        let d = s.induced_data(&[0.4, 2.2], &[]).unwrap();
        // H = ½(ν1 + ν2) with orthogonal unit ν's
        assert_abs_diff_eq!(d.h_norm2(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d.h_star_norm2(), 0.5, epsilon = 1e-12);
        let expected = DVector::from_vec(vec![-0.4f64.cos(), -0.4f64.sin(), 0.0, 0.0, -2.2f64.cos(), -2.2f64.sin(), 0.0, 0.0]) * 0.5;
        assert!((&d.h - expected).abs().max() < 1e-12);
    }

    #[test]
    fn shape_operators_pair_with_second_fundamental_forms() {
        for s in [sphere(), torus(), skewed_graph()] {
            let u: Vec<f64> = s.domain().iter().map(|(lo, hi)| 0.3 * lo + 0.7 * hi).collect();
            let d = s.induced_data(&u, &[]).unwrap();
            for g in 0..d.normal.len() {
                // ĝ(σ(e_i,e_j), ξ) = g(A*_ξ e_i, e_j) and the starred counterpart
                assert!((&d.sigma[g] - &d.shape_star[g]).abs().max() < 1e-9);
                assert!((&d.sigma_star[g] - &d.shape[g]).abs().max() < 1e-9);
                assert!((&d.sigma[g] + &d.sigma_star[g] - &d.sigma_lc[g] * 2.0).abs().max() < 1e-9);
                assert!((&d.sigma[g] - d.sigma[g].transpose()).abs().max() < 1e-12);
            }
        }
    }

    #[test]
    fn mean_curvature_is_frame_independent() {
        let s = skewed_graph();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = [0.3, -0.2];
        let base = s.induced_data(&u, &[]).unwrap();
        for _ in 0..5 {
            let v = DVector::from_fn(2, |_, _| rng.sample::<f64, _>(StandardNormal));
            let d = s.induced_data(&u, &[v]).unwrap();
            assert!((&d.h - &base.h).abs().max() < 1e-9);
            assert!((&d.h_star - &base.h_star).abs().max() < 1e-9);
        }
    }

    #[test]
    fn induced_connections_are_dual() {
        // X g(Y,Z) = g(∇_X Y, Z) + g(Y, ∇*_X Z) on coordinate fields
        let s = skewed_graph();
        let u = [0.1, 0.25];
        let loc = s.local(&u).unwrap();
        let (c, cs) = (loc.chart_christoffel(Which::Primal), loc.chart_christoffel(Which::Dual));
        let h = 1e-4;
        for a in 0..2 {
            let mut up = u;
            up[a] += h;
            let mut dn = u;
            dn[a] -= h;
            let dg = (s.local(&up).unwrap().gram - s.local(&dn).unwrap().gram) / (2.0 * h);
            for b in 0..2 {
                for e in 0..2 {
                    let rhs: f64 = (0..2).map(|m| c[(m, a, b)] * loc.gram[(m, e)] + cs[(m, a, e)] * loc.gram[(b, m)]).sum();
                    assert!((dg[(b, e)] - rhs).abs() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn gauss_equations_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for s in [sphere(), torus(), skewed_graph()] {
            let pts = s.sample_points(3, &mut rng);
            for u in pts {
                let r = s.gauss_ricci_residuals(&u, 20, &mut rng).unwrap();
                assert!(r.gauss < 1e-8 && r.gauss_star < 1e-8, "{r:?}");
                assert!(r.ricci < 1e-8 && r.ricci_star < 1e-8, "{r:?}");
            }
        }
    }

    #[test]
    fn exchanged_bracket_pairing_fails_off_the_trivial_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = skewed_graph();
        let r = s.gauss_ricci_residuals(&[0.2, -0.3], 20, &mut rng).unwrap();
        assert!(r.ricci < 1e-8 && r.ricci_star < 1e-8);
        assert!(r.ricci_exchanged > 1e-2 && r.ricci_star_exchanged > 1e-2);
        let t = torus();
        let r = t.gauss_ricci_residuals(&[0.2, 1.3], 20, &mut rng).unwrap();
        assert!(r.ricci_exchanged < 1e-8);
    }

    #[test]
    fn induced_curvature_of_the_round_sphere() {
        let s = sphere();
        let u = [1.1, 0.3];
        let c = s.induced_curvatures(&u).unwrap();
        let d = s.induced_data(&u, &[]).unwrap();
        let k = c.r_lc.lowered_value(&d.induced_metric, &d.chart_vector(0), &d.chart_vector(1), &d.chart_vector(1), &d.chart_vector(0));
        assert_abs_diff_eq!(k, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn p_alpha_examples() {
        let s = torus();
        let d = s.induced_data(&[0.3, 1.0], &[]).unwrap();
        for (tr, nn, pp) in p_alpha_invariants(&d).unwrap() {
            assert!(tr.abs() < 1e-12 && nn < 1e-12 && pp.abs() < 1e-12);
        }
        let h1 = sub(flat_quaternionic(2).unwrap(), 4, (-1.0, 1.0), &["u1", "u2", "u3", "u4", "0", "0", "0", "0"]);
        let d = h1.induced_data(&[0.0, 0.1, 0.2, 0.3], &[]).unwrap();
        for (tr, nn, pp) in p_alpha_invariants(&d).unwrap() {
            assert_abs_diff_eq!(nn, 4.0, epsilon = 1e-12);
            assert_abs_diff_eq!(tr, 0.0, epsilon = 1e-12);
            // J* = J on the flat model, so the pairing is the squared norm
            assert_abs_diff_eq!(pp, nn, epsilon = 1e-12);
        }
        assert!(matches!(p_alpha_invariants(&sphere().induced_data(&[1.0, 1.0], &[]).unwrap()), Err(SubmanError::MissingQuaternionic)));
    }

    #[test]
    fn classification_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h1 = sub(flat_quaternionic(2).unwrap(), 4, (-1.0, 1.0), &["u1", "u2", "u3", "u4", "0", "0", "0", "0"]);
        let pts = h1.sample_points(3, &mut rng);
        assert_eq!(classify(&h1, &pts, CLASSIFY_TOL).unwrap().label, ClassLabel::Invariant);

        let t = torus();
        let c = classify(&t, &t.sample_points(3, &mut rng), CLASSIFY_TOL).unwrap();
        assert!(c.label.is_totally_real());
        assert_eq!(c.label, ClassLabel::LagrangianLike);

        let real_plane = sub(flat_quaternionic(2).unwrap(), 2, (-1.0, 1.0), &["u1", "0", "0", "0", "u2", "0", "0", "0"]);
        let c = classify(&real_plane, &real_plane.sample_points(2, &mut rng), CLASSIFY_TOL).unwrap();
        assert_eq!(c.label, ClassLabel::LagrangianLike);

        let real_line = sub(flat_quaternionic(2).unwrap(), 1, (-1.0, 1.0), &["u1", "0", "0", "0", "0", "0", "0", "0"]);
        let c = classify(&real_line, &real_line.sample_points(2, &mut rng), CLASSIFY_TOL).unwrap();
        assert_eq!(c.label, ClassLabel::TotallyReal);

        // plane spanned by (1,0,0,0) and (cos t, sin t, 0, 0)-tilted second axis
        let t0 = 0.4f64;
        let e2 = format!("{}*u2", t0.cos());
        let e2i = format!("{}*u2", t0.sin());
        let tilted = sub(flat_quaternionic(2).unwrap(), 2, (-1.0, 1.0), &["u1", &e2i, "0", "0", &e2, "0", "0", "0"]);
        let c = classify(&tilted, &tilted.sample_points(2, &mut rng), CLASSIFY_TOL).unwrap();
        assert_eq!(c.label, ClassLabel::Generic);
        // ‖tan(J_1 e_1)‖ = |g(J_1 e_1, e_2)| = sin t
        assert_abs_diff_eq!(c.max_tangent_part[0], t0.sin(), epsilon = 1e-12);
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let s = sub(euclidean(3).unwrap(), 2, (-1.0, 1.0), &["u1", "u1", "0"]);
        assert!(matches!(s.induced_data(&[0.1, 0.2], &[]), Err(SubmanError::RankDeficient { .. })));
    }
}
