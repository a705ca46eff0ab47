//! Single-chart manifolds ("generalized surfaces").
//!
//! A surface is the image `S = F(B)` of a base space `B ⊂ R^d` under a chart
//! `F: B → R^D`. Lengths on `S` are measured with a constant ambient metric
//! `G`, which need not be positive definite (the hyperboloid uses the
//! Lorentzian signature).

use std::fmt;
use std::sync::Arc;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Constant ambient inner product `⟨u, v⟩ = uᵀ G v`.
#[derive(Clone, Debug, PartialEq)]
pub enum AmbientMetric {
    /// `G = I`.
    Euclidean,
    /// `G = diag(1, …, 1, −1)`.
    Lorentzian,
    /// Arbitrary symmetric `G`.
    General(Array2<f64>),
}

impl AmbientMetric {
    pub fn matrix(&self, dim: usize) -> Array2<f64> {
        match self {
            AmbientMetric::Euclidean => Array2::eye(dim),
            AmbientMetric::Lorentzian => {
                let mut g = Array2::eye(dim);
                g[[dim - 1, dim - 1]] = -1.0;
                g
            }
            AmbientMetric::General(g) => g.clone(),
        }
    }

    /// `uᵀ G v`
    #[inline]
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        match self {
            AmbientMetric::Euclidean => dot(u, v),
            AmbientMetric::Lorentzian => {
                let n = u.len();
                dot(&u[..n - 1], &v[..n - 1]) - u[n - 1] * v[n - 1]
            }
            AmbientMetric::General(g) => {
                let mut acc = 0.0;
                for (i, ui) in u.iter().enumerate() {
                    for (j, vj) in v.iter().enumerate() {
                        acc += ui * g[[i, j]] * vj;
                    }
                }
                acc
            }
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match self {
            AmbientMetric::General(g) => {
                g.is_square() && g.indexed_iter().all(|((i, j), v)| *v == g[[j, i]])
            }
            _ => true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SurfaceKind {
    Euclidean,
    Hyperboloid,
    Helicoid,
    Monge,
}

/// A chart `F: B → R^D` together with the ambient metric used for lengths.
///
/// Only `map`, `inverse_map` and the dimensions are mandatory; the Jacobian
/// falls back to central finite differences.
pub trait Surface: Send + Sync + fmt::Debug {
    /// Registry key, e.g. `hyperboloid:2`.
    fn name(&self) -> String;
    fn kind(&self) -> SurfaceKind;
    fn base_dim(&self) -> usize;
    fn ambient_dim(&self) -> usize;
    fn metric(&self) -> &AmbientMetric;

    fn map(&self, b: &[f64]) -> Vec<f64>;
    fn inverse_map(&self, s: &[f64]) -> Vec<f64>;

    /// `D × d` matrix `dF/db`.
    fn jacobian(&self, b: &[f64]) -> Array2<f64> {
        finite_difference_jacobian(|x| self.map(x), b)
    }

    /// Writes `J(b)·v` into `out` (length `D`).
    fn push_forward(&self, b: &[f64], v: &[f64], out: &mut [f64]) {
        let jac = self.jacobian(b);
        for (r, o) in out.iter_mut().enumerate() {
            *o = (0..v.len()).map(|c| jac[[r, c]] * v[c]).sum();
        }
    }

    /// Whether `b` lies in the base space `B`.
    fn contains(&self, b: &[f64]) -> bool {
        b.len() == self.base_dim() && b.iter().all(|x| x.is_finite())
    }

    fn has_closed_form(&self) -> bool {
        false
    }

    /// Exact geodesic distance between surface points, when known.
    fn closed_form_distance(&self, _s1: &[f64], _s2: &[f64]) -> Option<f64> {
        None
    }

    /// Closed-form distance between `F(u)` and `F(w)` with its gradients
    /// with respect to the base points `u` and `w`.
    fn closed_form_base_grad(&self, _u: &[f64], _w: &[f64]) -> Option<(f64, Vec<f64>, Vec<f64>)> {
        None
    }

    /// Squared speed `vᵀ Jᵀ G J v` of the curve through `b` with base velocity
    /// `v`. `scratch` must have length `D`.
    #[inline]
    fn speed_squared(&self, b: &[f64], v: &[f64], scratch: &mut [f64]) -> f64 {
        self.push_forward(b, v, scratch);
        self.metric().inner(scratch, scratch)
    }
}

pub type SharedSurface = Arc<dyn Surface>;

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Central-difference Jacobian with per-coordinate step `1e-6·(1+|b_k|)`.
pub fn finite_difference_jacobian<F>(map: F, b: &[f64]) -> Array2<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let d = b.len();
    let mut probe = b.to_vec();
    let mut columns = Vec::with_capacity(d);
    for k in 0..d {
        let h = 1e-6 * (1.0 + b[k].abs());
        probe[k] = b[k] + h;
        let fp = map(&probe);
        probe[k] = b[k] - h;
        let fm = map(&probe);
        probe[k] = b[k];
        columns.push(fp.iter().zip(&fm).map(|(p, m)| (p - m) / (2.0 * h)).collect::<Vec<_>>());
    }
    let rows = columns.first().map_or(0, Vec::len);
    Array2::from_shape_fn((rows, d), |(r, c)| columns[c][r])
}

/// Flat `R^d` with the identity chart.
#[derive(Clone, Debug)]
pub struct Euclidean {
    dim: usize,
}

pub fn euclidean_surface(d: usize) -> Result<Euclidean> {
    if d == 0 {
        return Err(Error::InvalidArgument("base dimension must be positive".into()));
    }
    Ok(Euclidean { dim: d })
}

impl Surface for Euclidean {
    fn name(&self) -> String {
        format!("euclidean:{}", self.dim)
    }
    fn kind(&self) -> SurfaceKind {
        SurfaceKind::Euclidean
    }
    fn base_dim(&self) -> usize {
        self.dim
    }
    fn ambient_dim(&self) -> usize {
        self.dim
    }
    fn metric(&self) -> &AmbientMetric {
        &AmbientMetric::Euclidean
    }
    fn map(&self, b: &[f64]) -> Vec<f64> {
        b.to_vec()
    }
    fn inverse_map(&self, s: &[f64]) -> Vec<f64> {
        s.to_vec()
    }
    fn jacobian(&self, _b: &[f64]) -> Array2<f64> {
        Array2::eye(self.dim)
    }
    fn push_forward(&self, _b: &[f64], v: &[f64], out: &mut [f64]) {
        out.copy_from_slice(v);
    }
    fn has_closed_form(&self) -> bool {
        true
    }
    fn closed_form_distance(&self, s1: &[f64], s2: &[f64]) -> Option<f64> {
        Some(norm(&sub(s1, s2)))
    }
    fn closed_form_base_grad(&self, u: &[f64], w: &[f64]) -> Option<(f64, Vec<f64>, Vec<f64>)> {
        let diff = sub(u, w);
        let rho = norm(&diff);
        if rho == 0.0 {
            return Some((0.0, vec![0.0; u.len()], vec![0.0; u.len()]));
        }
        let gu: Vec<f64> = diff.iter().map(|x| x / rho).collect();
        let gw = gu.iter().map(|x| -x).collect();
        Some((rho, gu, gw))
    }
}

/// Upper sheet of the two-sheeted hyperboloid, `x ↦ (x, √(1 + xᵀx))`, with
/// the Lorentzian ambient metric.
#[derive(Clone, Debug)]
pub struct Hyperboloid {
    dim: usize,
}

pub fn hyperboloid_surface(d: usize) -> Result<Hyperboloid> {
    if d == 0 {
        return Err(Error::InvalidArgument("base dimension must be positive".into()));
    }
    Ok(Hyperboloid { dim: d })
}

/// `arccosh` with its argument clamped to `[1, ∞)`.
#[inline]
pub fn clamped_arccosh(z: f64) -> f64 {
    z.max(1.0).acosh()
}

impl Surface for Hyperboloid {
    fn name(&self) -> String {
        format!("hyperboloid:{}", self.dim)
    }
    fn kind(&self) -> SurfaceKind {
        SurfaceKind::Hyperboloid
    }
    fn base_dim(&self) -> usize {
        self.dim
    }
    fn ambient_dim(&self) -> usize {
        self.dim + 1
    }
    fn metric(&self) -> &AmbientMetric {
        &AmbientMetric::Lorentzian
    }
    fn map(&self, b: &[f64]) -> Vec<f64> {
        let mut s = b.to_vec();
        s.push((1.0 + dot(b, b)).sqrt());
        s
    }
    fn inverse_map(&self, s: &[f64]) -> Vec<f64> {
        s[..self.dim].to_vec()
    }
    fn jacobian(&self, b: &[f64]) -> Array2<f64> {
        let h = (1.0 + dot(b, b)).sqrt();
        let mut jac = Array2::zeros((self.dim + 1, self.dim));
        for k in 0..self.dim {
            jac[[k, k]] = 1.0;
            jac[[self.dim, k]] = b[k] / h;
        }
        jac
    }
    fn push_forward(&self, b: &[f64], v: &[f64], out: &mut [f64]) {
        out[..self.dim].copy_from_slice(v);
        out[self.dim] = dot(b, v) / (1.0 + dot(b, b)).sqrt();
    }
    fn speed_squared(&self, b: &[f64], v: &[f64], _scratch: &mut [f64]) -> f64 {
        dot(v, v) - dot(b, v).powi(2) / (1.0 + dot(b, b))
    }
    fn has_closed_form(&self) -> bool {
        true
    }
    fn closed_form_distance(&self, s1: &[f64], s2: &[f64]) -> Option<f64> {
        Some(hyperboloid_excess(&s1[..self.dim], &s2[..self.dim]).0)
    }
    fn closed_form_base_grad(&self, u: &[f64], w: &[f64]) -> Option<(f64, Vec<f64>, Vec<f64>)> {
        let hu = (1.0 + dot(u, u)).sqrt();
        let hw = (1.0 + dot(w, w)).sqrt();
        let (rho, t) = hyperboloid_excess(u, w);
        let denom = (t * (t + 2.0)).sqrt();
        if !(denom > 1e-12) {
            // coincident points: distance is at its minimum, gradient set to zero
            return Some((rho, vec![0.0; u.len()], vec![0.0; u.len()]));
        }
        let gu = u.iter().zip(w).map(|(ui, wi)| (hw / hu * ui - wi) / denom).collect();
        let gw = w.iter().zip(u).map(|(wi, ui)| (hu / hw * wi - ui) / denom).collect();
        Some((rho, gu, gw))
    }
}

/// Distance between `F(u)` and `F(w)` together with `t = z − 1`, where
/// `z = −⟨F(u), F(w)⟩_G`. `t` is assembled from differences so that nearby
/// points keep full relative precision.
fn hyperboloid_excess(u: &[f64], w: &[f64]) -> (f64, f64) {
    let (nu, nw) = (dot(u, u), dot(w, w));
    let diff: f64 = u.iter().zip(w).map(|(a, b)| (a - b) * (a - b)).sum();
    let height = (nu - nw) / ((1.0 + nu).sqrt() + (1.0 + nw).sqrt());
    let t = (0.5 * (diff - height * height)).max(0.0);
    ((t + (t * (t + 2.0)).sqrt()).ln_1p(), t)
}

/// Hyperboloid distance between `F(L b1)` and `F(L b2)` written in terms of
/// the Gram entries `Δ_ij = b_iᵀ LᵀL b_j`.
pub fn hyperboloid_transformed_distance(l: &Array2<f64>, b1: &[f64], b2: &[f64]) -> f64 {
    let m = l.t().dot(l);
    let quad = |a: &[f64], b: &[f64]| -> f64 {
        let mut acc = 0.0;
        for i in 0..a.len() {
            for j in 0..b.len() {
                acc += a[i] * m[[i, j]] * b[j];
            }
        }
        acc
    };
    let d11 = quad(b1, b1);
    let d22 = quad(b2, b2);
    let d12 = quad(b1, b2);
    clamped_arccosh(((1.0 + d11) * (1.0 + d22)).sqrt() - d12)
}

/// Arc-length integrand on the hyperboloid written out in base coordinates:
/// `√(κ̇ᵀκ̇ − (κᵀκ̇)² / (1 + κᵀκ))`.
pub fn hyperboloid_integrand(kappa: &[f64], kappa_dot: &[f64]) -> f64 {
    let v = dot(kappa_dot, kappa_dot) - dot(kappa, kappa_dot).powi(2) / (1.0 + dot(kappa, kappa));
    v.max(0.0).sqrt()
}

/// Integrand `√(κ̇ᵀ Dᵀ G D κ̇)` assembled from the explicit Jacobian and metric
/// matrices of `surface`.
pub fn generic_integrand(surface: &dyn Surface, kappa: &[f64], kappa_dot: &[f64]) -> f64 {
    let jac = surface.jacobian(kappa);
    let g = surface.metric().matrix(surface.ambient_dim());
    let pulled = jac.t().dot(&g).dot(&jac);
    let v = ndarray::ArrayView1::from(kappa_dot);
    v.dot(&pulled.dot(&v)).max(0.0).sqrt()
}

/// The helicoid `(x1, x2) ↦ (x1 cos x2, x1 sin x2, x2)` with the Euclidean
/// ambient metric. Base space is all of `R²`.
#[derive(Clone, Debug, Default)]
pub struct Helicoid;

pub fn helicoid_surface() -> Helicoid {
    Helicoid
}

impl Surface for Helicoid {
    fn name(&self) -> String {
        "helicoid".into()
    }
    fn kind(&self) -> SurfaceKind {
        SurfaceKind::Helicoid
    }
    fn base_dim(&self) -> usize {
        2
    }
    fn ambient_dim(&self) -> usize {
        3
    }
    fn metric(&self) -> &AmbientMetric {
        &AmbientMetric::Euclidean
    }
    fn map(&self, b: &[f64]) -> Vec<f64> {
        let (s, c) = b[1].sin_cos();
        vec![b[0] * c, b[0] * s, b[1]]
    }
    fn inverse_map(&self, s: &[f64]) -> Vec<f64> {
        let (sn, cs) = s[2].sin_cos();
        vec![s[0] * cs + s[1] * sn, s[2]]
    }
    fn jacobian(&self, b: &[f64]) -> Array2<f64> {
        let (s, c) = b[1].sin_cos();
        ndarray::array![[c, -b[0] * s], [s, b[0] * c], [0.0, 1.0]]
    }
    fn push_forward(&self, b: &[f64], v: &[f64], out: &mut [f64]) {
        let (s, c) = b[1].sin_cos();
        out[0] = c * v[0] - b[0] * s * v[1];
        out[1] = s * v[0] + b[0] * c * v[1];
        out[2] = v[1];
    }
    fn speed_squared(&self, b: &[f64], v: &[f64], _scratch: &mut [f64]) -> f64 {
        // the helicoid's first fundamental form is dr² + (1 + r²) dθ²
        v[0] * v[0] + (1.0 + b[0] * b[0]) * v[1] * v[1]
    }
}

type HeightFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradientFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type DomainFn = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Monge patch `x ↦ (x, h(x))` with the Euclidean ambient metric.
#[derive(Clone)]
pub struct MongePatch {
    label: String,
    dim: usize,
    height: HeightFn,
    gradient: Option<GradientFn>,
    domain: Option<DomainFn>,
}

impl fmt::Debug for MongePatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MongePatch")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("analytic_gradient", &self.gradient.is_some())
            .finish()
    }
}

pub fn monge_patch_surface<H>(label: &str, d: usize, h: H) -> Result<MongePatch>
where
    H: Fn(&[f64]) -> f64 + Send + Sync + 'static,
{
    if d == 0 {
        return Err(Error::InvalidArgument("base dimension must be positive".into()));
    }
    Ok(MongePatch {
        label: label.to_string(),
        dim: d,
        height: Arc::new(h),
        gradient: None,
        domain: None,
    })
}

impl MongePatch {
    pub fn with_gradient<G>(mut self, grad: G) -> Self
    where
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(grad));
        self
    }

    /// Restricts the base space to points accepted by `pred`.
    pub fn with_domain<P>(mut self, pred: P) -> Self
    where
        P: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        self.domain = Some(Arc::new(pred));
        self
    }

    fn height_gradient(&self, b: &[f64]) -> Vec<f64> {
        match &self.gradient {
            Some(g) => g(b),
            None => {
                let jac = finite_difference_jacobian(|x| vec![(self.height)(x)], b);
                jac.row(0).to_vec()
            }
        }
    }
}

impl Surface for MongePatch {
    fn name(&self) -> String {
        if self.dim == 2 {
            format!("monge:{}", self.label)
        } else {
            format!("monge:{}:{}", self.label, self.dim)
        }
    }
    fn kind(&self) -> SurfaceKind {
        SurfaceKind::Monge
    }
    fn base_dim(&self) -> usize {
        self.dim
    }
    fn ambient_dim(&self) -> usize {
        self.dim + 1
    }
    fn metric(&self) -> &AmbientMetric {
        &AmbientMetric::Euclidean
    }
    fn map(&self, b: &[f64]) -> Vec<f64> {
        let mut s = b.to_vec();
        s.push((self.height)(b));
        s
    }
    fn inverse_map(&self, s: &[f64]) -> Vec<f64> {
        s[..self.dim].to_vec()
    }
    fn jacobian(&self, b: &[f64]) -> Array2<f64> {
        let grad = self.height_gradient(b);
        let mut jac = Array2::zeros((self.dim + 1, self.dim));
        for k in 0..self.dim {
            jac[[k, k]] = 1.0;
            jac[[self.dim, k]] = grad[k];
        }
        jac
    }
    fn push_forward(&self, b: &[f64], v: &[f64], out: &mut [f64]) {
        out[..self.dim].copy_from_slice(v);
        out[self.dim] = dot(&self.height_gradient(b), v);
    }
    fn contains(&self, b: &[f64]) -> bool {
        b.len() == self.dim
            && b.iter().all(|x| x.is_finite())
            && self.domain.as_ref().map_or(true, |p| p(b))
    }
}

/// Named Monge patches: `flat`, `paraboloid` (`h = xᵀx`) and `sinusoid`
/// (`h = Σ sin x_k`).
pub fn named_monge_patch(name: &str, d: usize) -> Result<MongePatch> {
    match name {
        "flat" => Ok(monge_patch_surface("flat", d, |_| 0.0)?.with_gradient(|x| vec![0.0; x.len()])),
        "paraboloid" => Ok(monge_patch_surface("paraboloid", d, |x| dot(x, x))?
            .with_gradient(|x| x.iter().map(|v| 2.0 * v).collect())),
        "sinusoid" => Ok(monge_patch_surface("sinusoid", d, |x| x.iter().map(|v| v.sin()).sum())?
            .with_gradient(|x| x.iter().map(|v| v.cos()).collect())),
        other => Err(Error::UnknownSurface(format!("monge:{other}"))),
    }
}

/// Resolves a registry key: `euclidean:<d>`, `hyperboloid:<d>`, `helicoid`,
/// `monge:<name>` or `monge:<name>:<d>`.
pub fn surface_from_spec(spec: &str) -> Result<SharedSurface> {
    let parts: Vec<&str> = spec.trim().split(':').collect();
    let dim = |s: &str| -> Result<usize> {
        s.parse::<usize>()
            .ok()
            .filter(|d| *d > 0)
            .ok_or_else(|| Error::UnknownSurface(spec.to_string()))
    };
    let surface: SharedSurface = match parts.as_slice() {
        ["euclidean", d] => Arc::new(euclidean_surface(dim(d)?)?),
        ["hyperboloid", d] => Arc::new(hyperboloid_surface(dim(d)?)?),
        ["helicoid"] => Arc::new(helicoid_surface()),
        ["monge", name] => Arc::new(named_monge_patch(name, 2)?),
        ["monge", name, d] => Arc::new(named_monge_patch(name, dim(d)?)?),
        _ => return Err(Error::UnknownSurface(spec.to_string())),
    };
    Ok(surface)
}

/// Points in the base space with optional class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct BasePointSet {
    points: Vec<Vec<f64>>,
    labels: Option<Vec<usize>>,
}

impl BasePointSet {
    pub fn new(points: Vec<Vec<f64>>, labels: Option<Vec<usize>>) -> Result<Self> {
        if let Some(first) = points.first() {
            if points.iter().any(|p| p.len() != first.len()) {
                return Err(Error::InvalidArgument("points have mixed dimensions".into()));
            }
        }
        if let Some(l) = &labels {
            if l.len() != points.len() {
                return Err(Error::InvalidArgument(format!(
                    "{} labels for {} points",
                    l.len(),
                    points.len()
                )));
            }
        }
        Ok(Self { points, labels })
    }

    /// Like [`BasePointSet::new`], additionally checking every point against
    /// the surface's base space.
    pub fn on_surface(surface: &dyn Surface, points: Vec<Vec<f64>>, labels: Option<Vec<usize>>) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !surface.contains(p)) {
            return Err(Error::OutOfDomain(p.clone()));
        }
        Self::new(points, labels)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            points: idx.iter().map(|&i| self.points[i].clone()).collect(),
            labels: self.labels.as_ref().map(|l| idx.iter().map(|&i| l[i]).collect()),
        }
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.points.len() {
            return Err(Error::InvalidArgument("label count mismatch".into()));
        }
        self.labels = Some(labels);
        Ok(self)
    }
}
