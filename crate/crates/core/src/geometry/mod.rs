//! Manifold models carrying a free S¹-action with an invariant metric.
//!
//! Two bundles ship:
//!
//! * `Trivial { k }`: `M = S¹ × Rᵏ` with coordinates `(φ, x₁..x_k)`, the
//!   product metric `dφ² + Σ dxᵢ²`, action `φ ↦ φ + θ`, orbit space `Rᵏ`.
//! * `Hopf`: `M = S³ ⊂ R⁴ = C²` with `(z₁, z₂) = (a + ib, c + id)`, the round
//!   metric, action `(z₁, z₂) ↦ (e^{iθ}z₁, e^{iθ}z₂)`, orbit space the sphere
//!   of radius 1/2 in R³ via `ρ = (Re z₁z̄₂, Im z₁z̄₂, (|z₁|² − |z₂|²)/2)`.
//!
//! In both cases the infinitesimal generator Υ of the action is a Killing
//! field of unit length, the horizontal space is `Υ^⊥`, and `ρ` is a
//! Riemannian submersion.

pub(crate) mod connection;
pub(crate) mod lift;

pub use connection::{covariant_derivative, lie_bracket, nabla_op_norm, nabla_matrix};
pub use lift::{fiber_phase, horizontal_lift_curve, OrbitCurve};

use std::f64::consts::{PI, TAU};
use std::fmt;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::linalg::{dot, norm};

/// Slack allowed on `arccos` arguments before a domain error is raised.
const ACOS_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Trivial { k: usize },
    Hopf,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Trivial { k } => write!(f, "S1xR^{k}"),
            ModelKind::Hopf => write!(f, "Hopf(S3->S2)"),
        }
    }
}

impl ModelKind {
    /// Number of coordinates of a point on `M`.
    pub fn dim(self) -> usize {
        match self {
            ModelKind::Trivial { k } => k + 1,
            ModelKind::Hopf => 4,
        }
    }

    /// Number of coordinates of an orbit point.
    pub fn orbit_dim(self) -> usize {
        match self {
            ModelKind::Trivial { k } => k,
            ModelKind::Hopf => 3,
        }
    }

    /// Intrinsic dimension of `M`.
    pub fn manifold_dim(self) -> usize {
        match self {
            ModelKind::Trivial { k } => k + 1,
            ModelKind::Hopf => 3,
        }
    }

    pub(crate) fn check_model(self, other: ModelKind) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::ModelMismatch {
                expected: self.to_string(),
                got: other.to_string(),
            })
        }
    }

    pub(crate) fn check_dim(self, got: usize) -> Result<()> {
        if got == self.dim() {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected: self.dim(),
                got,
            })
        }
    }

    /// Radial normalization on S³; identity on the trivial bundle (the angle
    /// is left unwrapped so that difference quotients stay smooth).
    #[inline]
    pub fn normalized(self, p: &[f64]) -> Vec<f64> {
        match self {
            ModelKind::Trivial { .. } => p.to_vec(),
            ModelKind::Hopf => {
                let n = norm(p);
                p.iter().map(|x| x / n).collect()
            }
        }
    }

    /// Canonical representative: unit norm on S³, `φ ∈ [0, 2π)` otherwise.
    pub fn canonical(self, p: &[f64]) -> Vec<f64> {
        match self {
            ModelKind::Trivial { .. } => {
                let mut q = p.to_vec();
                q[0] = wrap_angle(q[0]);
                q
            }
            ModelKind::Hopf => self.normalized(p),
        }
    }

    /// In-place projection of an ambient vector onto `T_p M`.
    #[inline]
    pub fn tangent_project(self, p: &[f64], v: &mut [f64]) {
        if let ModelKind::Hopf = self {
            let pp = dot(p, p);
            let s = dot(p, v) / pp;
            v.iter_mut().zip(p).for_each(|(x, y)| *x -= s * y);
        }
    }

    /// The infinitesimal generator Υ at `p`.
    #[inline]
    pub fn upsilon(self, p: &[f64]) -> Vec<f64> {
        match self {
            ModelKind::Trivial { k } => {
                let mut v = vec![0.0; k + 1];
                v[0] = 1.0;
                v
            }
            ModelKind::Hopf => vec![-p[1], p[0], -p[3], p[2]],
        }
    }

    /// `Fl_Υ^θ(p)`.
    #[inline]
    pub fn s1_flow(self, p: &[f64], theta: f64) -> Vec<f64> {
        match self {
            ModelKind::Trivial { .. } => {
                let mut q = p.to_vec();
                q[0] += theta;
                q
            }
            ModelKind::Hopf => rotate4(p, theta),
        }
    }

    /// `d Fl_Υ^θ (v)`; the differential does not depend on the base point
    /// for either model.
    #[inline]
    pub fn s1_push(self, theta: f64, v: &[f64]) -> Vec<f64> {
        match self {
            ModelKind::Trivial { .. } => v.to_vec(),
            ModelKind::Hopf => rotate4(v, theta),
        }
    }

    /// Metric `g_p(u, v)`; both models use the ambient Euclidean product.
    #[inline]
    pub fn inner(self, _p: &[f64], u: &[f64], v: &[f64]) -> f64 {
        dot(u, v)
    }

    #[inline]
    pub fn norm_at(self, p: &[f64], v: &[f64]) -> f64 {
        self.inner(p, v, v).sqrt()
    }

    /// `ρ(p)`.
    pub fn project(self, p: &[f64]) -> Vec<f64> {
        match self {
            ModelKind::Trivial { .. } => p[1..].to_vec(),
            ModelKind::Hopf => {
                let q = self.normalized(p);
                let (a, b, c, d) = (q[0], q[1], q[2], q[3]);
                vec![
                    a * c + b * d,
                    b * c - a * d,
                    0.5 * (a * a + b * b - c * c - d * d),
                ]
            }
        }
    }

    /// `dρ_p(v)`.
    pub fn project_vector(self, p: &[f64], v: &[f64]) -> Vec<f64> {
        match self {
            ModelKind::Trivial { .. } => v[1..].to_vec(),
            ModelKind::Hopf => {
                let (a, b, c, d) = (p[0], p[1], p[2], p[3]);
                vec![
                    c * v[0] + d * v[1] + a * v[2] + b * v[3],
                    -d * v[0] + c * v[1] + b * v[2] - a * v[3],
                    a * v[0] + b * v[1] - c * v[2] - d * v[3],
                ]
            }
        }
    }

    /// Orthonormal frame of `T_p M`. On S³ the first vector is Υ and the
    /// remaining two span the horizontal space.
    pub fn frame(self, p: &[f64]) -> Vec<Vec<f64>> {
        match self {
            ModelKind::Trivial { k } => (0..=k)
                .map(|i| {
                    let mut e = vec![0.0; k + 1];
                    e[i] = 1.0;
                    e
                })
                .collect(),
            ModelKind::Hopf => {
                let q = self.normalized(p);
                let (a, b, c, d) = (q[0], q[1], q[2], q[3]);
                vec![
                    vec![-b, a, -d, c],
                    vec![-c, d, a, -b],
                    vec![-d, -c, b, a],
                ]
            }
        }
    }

    /// Orthogonal decomposition `v = v_hor + v_vert` with
    /// `v_vert = g(v, Υ)/g(Υ, Υ) Υ`.
    pub fn split(self, p: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let u = self.upsilon(p);
        let s = self.inner(p, v, &u) / self.inner(p, &u, &u);
        let vert: Vec<f64> = u.iter().map(|x| s * x).collect();
        let hor = v.iter().zip(&vert).map(|(x, y)| x - y).collect();
        (hor, vert)
    }

    /// The unique horizontal vector at `p` projecting to the orbit vector `w`.
    pub fn lift_vector(self, p: &[f64], w: &[f64]) -> Vec<f64> {
        match self {
            ModelKind::Trivial { k } => {
                let mut u = vec![0.0; k + 1];
                u[1..].copy_from_slice(&w[..k]);
                u
            }
            ModelKind::Hopf => {
                let q = self.normalized(p);
                let frame = self.frame(&q);
                let mut u = vec![0.0; 4];
                for e in &frame[1..] {
                    let c = dot(w, &self.project_vector(&q, e));
                    u.iter_mut().zip(e).for_each(|(x, y)| *x += c * y);
                }
                u
            }
        }
    }

    /// A point of the fiber over `z`.
    pub fn section(self, z: &[f64]) -> Vec<f64> {
        match self {
            ModelKind::Trivial { k } => {
                let mut p = vec![0.0; k + 1];
                p[1..].copy_from_slice(&z[..k]);
                p
            }
            ModelKind::Hopf => {
                let z = self.orbit_normalized(z);
                let (x, y, w) = (z[0], z[1], z[2]);
                if w >= 0.0 {
                    let s = (0.5 + w).sqrt();
                    vec![s, 0.0, x / s, -y / s]
                } else {
                    let s = (0.5 - w).sqrt();
                    vec![x / s, y / s, s, 0.0]
                }
            }
        }
    }

    /// Radial normalization onto the radius-1/2 sphere (Hopf); identity otherwise.
    pub fn orbit_normalized(self, z: &[f64]) -> Vec<f64> {
        match self {
            ModelKind::Trivial { .. } => z.to_vec(),
            ModelKind::Hopf => {
                let n = norm(z);
                z.iter().map(|x| 0.5 * x / n).collect()
            }
        }
    }

    pub fn orbit_tangent_project(self, z: &[f64], w: &mut [f64]) {
        if let ModelKind::Hopf = self {
            let s = dot(z, w) / dot(z, z);
            w.iter_mut().zip(z).for_each(|(x, y)| *x -= s * y);
        }
    }

    /// Riemannian distance on `M`.
    pub fn manifold_distance(self, p: &[f64], q: &[f64]) -> Result<f64> {
        match self {
            ModelKind::Trivial { .. } => {
                let da = angle_gap(p[0], q[0]);
                let dx2: f64 = p[1..].iter().zip(&q[1..]).map(|(a, b)| (a - b).powi(2)).sum();
                Ok((da * da + dx2).sqrt())
            }
            ModelKind::Hopf => sphere_angle(p, q, 1.0),
        }
    }

    /// Distance on the orbit space for the metric making `ρ` a Riemannian
    /// submersion.
    pub fn orbit_distance(self, z1: &[f64], z2: &[f64]) -> Result<f64> {
        match self {
            ModelKind::Trivial { .. } => Ok(norm(&crate::linalg::sub(z1, z2))),
            ModelKind::Hopf => Ok(0.5 * sphere_angle(z1, z2, 0.25)?),
        }
    }
}

/// Angle between `u` and `v` on a sphere whose squared radius is `r2`,
/// computed with the `atan2` form for accuracy near 0 and π.
fn sphere_angle(u: &[f64], v: &[f64], r2: f64) -> Result<f64> {
    let cos = dot(u, v) / r2;
    if !(-1.0 - ACOS_SLACK..=1.0 + ACOS_SLACK).contains(&cos) {
        return Err(Error::Domain(format!(
            "arccos argument {cos} outside [-1, 1]"
        )));
    }
    let (nu, nv) = (norm(u), norm(v));
    let (mut d, mut s) = (0.0, 0.0);
    for (x, y) in u.iter().zip(v) {
        let (a, b) = (x / nu, y / nv);
        d += (a - b) * (a - b);
        s += (a + b) * (a + b);
    }
    Ok(2.0 * d.sqrt().atan2(s.sqrt()))
}

#[inline]
fn rotate4(p: &[f64], theta: f64) -> Vec<f64> {
    let (s, c) = theta.sin_cos();
    vec![
        c * p[0] - s * p[1],
        s * p[0] + c * p[1],
        c * p[2] - s * p[3],
        s * p[2] + c * p[3],
    ]
}

pub fn wrap_angle(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Length of the shorter arc between two angles.
pub fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub model: ModelKind,
    pub coords: Vec<f64>,
}

impl Point {
    /// Builds a point in canonical form (unit norm on S³, wrapped angle on
    /// the trivial bundle).
    pub fn new(model: ModelKind, coords: Vec<f64>) -> Result<Self> {
        model.check_dim(coords.len())?;
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidPoint(format!("non-finite coordinates {coords:?}")));
        }
        if model == ModelKind::Hopf && norm(&coords) < 1e-12 {
            return Err(Error::InvalidPoint("zero vector is not on S3".into()));
        }
        Ok(Self {
            model,
            coords: model.canonical(&coords),
        })
    }

    /// Canonicalizes raw integrator output.
    pub(crate) fn from_raw(model: ModelKind, coords: &[f64]) -> Self {
        Self {
            model,
            coords: model.canonical(coords),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    pub base: Point,
    pub components: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: Point, mut components: Vec<f64>) -> Result<Self> {
        base.model.check_dim(components.len())?;
        base.model.tangent_project(&base.coords, &mut components);
        Ok(Self { base, components })
    }

    pub fn norm(&self) -> f64 {
        self.base.model.norm_at(&self.base.coords, &self.components)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitPoint {
    pub model: ModelKind,
    pub coords: Vec<f64>,
}

impl OrbitPoint {
    pub fn new(model: ModelKind, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != model.orbit_dim() {
            return Err(Error::Dimension {
                expected: model.orbit_dim(),
                got: coords.len(),
            });
        }
        Ok(Self {
            model,
            coords: model.orbit_normalized(&coords),
        })
    }
}

/// A bundle together with its frequency function `ω` (S¹-invariant, positive).
#[derive(Clone, Debug)]
pub struct ManifoldModel {
    pub kind: ModelKind,
    pub omega: ScalarField,
}

impl ManifoldModel {
    pub fn new(kind: ModelKind, omega: ScalarField) -> Result<Self> {
        kind.check_model(omega.model())?;
        Ok(Self { kind, omega })
    }

    /// Model with `ω ≡ 1`, i.e. `X₀ = Υ`.
    pub fn unit(kind: ModelKind) -> Self {
        Self {
            kind,
            omega: ScalarField::constant(kind, 1.0),
        }
    }

    pub fn upsilon_field(&self) -> VectorField {
        let kind = self.kind;
        VectorField::new(kind, move |p| kind.upsilon(p))
    }

    /// `X₀ = ω Υ`.
    pub fn x0(&self) -> VectorField {
        self.upsilon_field().mul_scalar(&self.omega)
    }

    pub fn frequency(&self, p: &Point) -> f64 {
        self.omega.eval(&p.coords)
    }

    /// Period `T(p) = 2π / ω(p)` of the `X₀`-orbit through `p`.
    pub fn period(&self, p: &Point) -> f64 {
        TAU / self.frequency(p)
    }

    /// Largest `|ω(Fl_Υ^θ p) − ω(p)|` over `thetas`.
    pub fn omega_invariance_defect(&self, p: &Point, thetas: &[f64]) -> f64 {
        let w0 = self.omega.eval(&p.coords);
        thetas
            .iter()
            .map(|&t| (self.omega.eval(&self.kind.s1_flow(&p.coords, t)) - w0).abs())
            .fold(0.0, f64::max)
    }
}

pub fn s1_flow(model: &ManifoldModel, p: &Point, theta: f64) -> Result<Point> {
    model.kind.check_model(p.model)?;
    Ok(Point::from_raw(model.kind, &model.kind.s1_flow(&p.coords, theta)))
}

pub fn project_to_orbit(model: &ManifoldModel, p: &Point) -> Result<OrbitPoint> {
    model.kind.check_model(p.model)?;
    Ok(OrbitPoint {
        model: model.kind,
        coords: model.kind.project(&p.coords),
    })
}

pub fn split_vector(
    model: &ManifoldModel,
    v: &TangentVector,
) -> Result<(TangentVector, TangentVector)> {
    model.kind.check_model(v.base.model)?;
    let (hor, vert) = model.kind.split(&v.base.coords, &v.components);
    Ok((
        TangentVector {
            base: v.base.clone(),
            components: hor,
        },
        TangentVector {
            base: v.base.clone(),
            components: vert,
        },
    ))
}

pub fn orbit_distance(model: &ManifoldModel, z1: &OrbitPoint, z2: &OrbitPoint) -> Result<f64> {
    model.kind.check_model(z1.model)?;
    model.kind.check_model(z2.model)?;
    model.kind.orbit_distance(&z1.coords, &z2.coords)
}

pub fn manifold_distance(model: &ManifoldModel, p: &Point, q: &Point) -> Result<f64> {
    model.kind.check_model(p.model)?;
    model.kind.check_model(q.model)?;
    model.kind.manifold_distance(&p.coords, &q.coords)
}

/// Half the circumference of the orbit sphere; the Hopf orbit-space diameter.
pub const HOPF_ORBIT_DIAMETER: f64 = PI / 2.0;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    fn hopf() -> ManifoldModel {
        ManifoldModel::unit(ModelKind::Hopf)
    }

    #[test]
    fn trivial_flow_is_periodic() {
        let m = ManifoldModel::unit(ModelKind::Trivial { k: 1 });
        let p = Point::new(m.kind, vec![0.3, 1.0]).unwrap();
        let q = s1_flow(&m, &p, TAU).unwrap();
        assert!(max_abs_diff(&p.coords, &q.coords) < 1e-12);
        let r = s1_flow(&m, &p, 0.0).unwrap();
        assert_eq!(p, r);
    }

    #[test]
    fn hopf_quarter_turn_matches_complex_multiplication() {
        // i * (1 + 0i, 0) = (0 + 1i, 0)
        let p = Point::new(ModelKind::Hopf, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let q = s1_flow(&hopf(), &p, PI / 2.0).unwrap();
        assert!(max_abs_diff(&q.coords, &[0.0, 1.0, 0.0, 0.0]) < 1e-15);
    }

    #[test]
    fn hopf_projection_of_north_pole() {
        let p = Point::new(ModelKind::Hopf, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let z = project_to_orbit(&hopf(), &p).unwrap();
        assert!(max_abs_diff(&z.coords, &[0.0, 0.0, 0.5]) < 1e-15);
    }

    #[test]
    fn trivial_projection_drops_angle() {
        let m = ManifoldModel::unit(ModelKind::Trivial { k: 2 });
        let p = Point::new(m.kind, vec![1.1, 1.5, -2.0]).unwrap();
        assert_eq!(project_to_orbit(&m, &p).unwrap().coords, vec![1.5, -2.0]);
    }

    #[test]
    fn vertical_input_splits_to_zero_horizontal() {
        let m = hopf();
        let p = Point::new(m.kind, vec![0.1, 0.7, -0.3, 0.2]).unwrap();
        let u = m.kind.upsilon(&p.coords);
        let v = TangentVector::new(p, u.clone()).unwrap();
        let (h, w) = split_vector(&m, &v).unwrap();
        assert!(norm(&h.components) < 1e-15);
        assert!(max_abs_diff(&w.components, &u) < 1e-15);
    }

    #[test]
    fn trivial_dx_is_horizontal() {
        let m = ManifoldModel::unit(ModelKind::Trivial { k: 1 });
        let p = Point::new(m.kind, vec![2.0, -1.0]).unwrap();
        let v = TangentVector::new(p, vec![0.0, 1.0]).unwrap();
        let (h, w) = split_vector(&m, &v).unwrap();
        assert_eq!(h.components, vec![0.0, 1.0]);
        assert_eq!(w.components, vec![0.0, 0.0]);
    }

    #[test]
    fn antipodal_orbit_points() {
        let m = hopf();
        let z1 = OrbitPoint::new(m.kind, vec![0.0, 0.0, 0.5]).unwrap();
        let z2 = OrbitPoint::new(m.kind, vec![0.0, 0.0, -0.5]).unwrap();
        let d = orbit_distance(&m, &z1, &z2).unwrap();
        assert!((d - HOPF_ORBIT_DIAMETER).abs() < 1e-15);
        assert_eq!(orbit_distance(&m, &z1, &z1).unwrap(), 0.0);
    }

    #[test]
    fn half_circle_on_trivial_bundle() {
        let m = ManifoldModel::unit(ModelKind::Trivial { k: 1 });
        let p = Point::new(m.kind, vec![0.0, 0.0]).unwrap();
        let q = Point::new(m.kind, vec![PI, 0.0]).unwrap();
        assert!((manifold_distance(&m, &p, &q).unwrap() - PI).abs() < 1e-15);
        assert_eq!(manifold_distance(&m, &p, &p).unwrap(), 0.0);
    }

    #[test]
    fn arccos_domain_error() {
        let e = ModelKind::Hopf.orbit_distance(&[0.0, 0.0, 1.0], &[0.0, 0.0, 1.0]);
        assert!(matches!(e, Err(Error::Domain(_))));
    }

    #[test]
    fn section_lands_in_fiber() {
        for z in [[0.3, 0.1, 0.2], [0.1, -0.2, -0.4], [0.0, 0.0, -0.5], [0.0, 0.0, 0.5]] {
            let z = ModelKind::Hopf.orbit_normalized(&z);
            let p = ModelKind::Hopf.section(&z);
            assert!((norm(&p) - 1.0).abs() < 1e-14);
            assert!(max_abs_diff(&ModelKind::Hopf.project(&p), &z) < 1e-14);
        }
    }

    #[test]
    fn hopf_frame_is_orthonormal_and_tangent() {
        let p = ModelKind::Hopf.normalized(&[0.2, -0.4, 0.7, 0.1]);
        let f = ModelKind::Hopf.frame(&p);
        for (i, e) in f.iter().enumerate() {
            assert!(dot(e, &p).abs() < 1e-15);
            for (j, g) in f.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(e, g) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_wrong_arity_and_zero_vector() {
        assert!(Point::new(ModelKind::Hopf, vec![1.0, 0.0]).is_err());
        assert!(Point::new(ModelKind::Hopf, vec![0.0; 4]).is_err());
        assert!(Point::new(ModelKind::Trivial { k: 1 }, vec![f64::NAN, 0.0]).is_err());
    }
}
