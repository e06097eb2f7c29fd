//! Averaging and integrating operators along the S¹-action.
//!
//! For a tensor `R` the operators are weighted means of the pullbacks
//! `(Fl_Υ^t)^* R` over one period:
//!
//! ```text
//! ⟨R⟩  = (1/2π) ∫ (Fl_Υ^t)^* R dt
//! S(R) = (1/2π) ∫ (t − π) (Fl_Υ^t)^* R dt
//! ```
//!
//! All operators sample the orbit at `t_j = 2πj/n`. The mean uses the
//! trapezoid weights `1/n`, which are spectrally accurate for periodic
//! integrands. The weight `t − π` is not periodic, so the plain trapezoid
//! would only be second order for `S`. Its Fourier series
//! `t − π = −2 Σ_{k≥1} sin(kt)/k` is truncated at `k < n/2` instead, giving
//! `c_j = −(2/n) Σ_k sin(k t_j)/k`; this rule inverts `L_Υ` exactly on every
//! resolved mode. `S²` uses the kernel `−2 Σ cos(kt)/k²`, the circular
//! convolution of the `S` kernel with itself, so one pass over the orbit
//! suffices.

use std::f64::consts::TAU;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{directional_derivative, ScalarField, VectorField};
use crate::geometry::{lie_bracket, ManifoldModel, ModelKind, OrbitCurve, OrbitPoint, Point};
use crate::linalg::{max_abs_diff, norm};
use crate::ode::{self, SolverOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuadratureRule {
    pub n_nodes: usize,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self { n_nodes: 64 }
    }
}

impl QuadratureRule {
    pub fn new(n_nodes: usize) -> Result<Self> {
        if n_nodes < 8 {
            return Err(Error::Domain(format!("quadrature needs at least 8 nodes, got {n_nodes}")));
        }
        Ok(Self { n_nodes })
    }

    pub fn nodes(&self) -> Vec<f64> {
        let n = self.n_nodes;
        (0..n).map(|j| TAU * j as f64 / n as f64).collect()
    }

    fn highest_mode(&self) -> usize {
        (self.n_nodes - 1) / 2
    }

    pub fn mean_weights(&self) -> Vec<f64> {
        vec![1.0 / self.n_nodes as f64; self.n_nodes]
    }

    pub fn integrating_weights(&self) -> Vec<f64> {
        let n = self.n_nodes as f64;
        let kmax = self.highest_mode();
        self.nodes()
            .iter()
            .map(|&t| {
                let s: f64 = (1..=kmax).map(|k| (k as f64 * t).sin() / k as f64).sum();
                -2.0 * s / n
            })
            .collect()
    }

    pub fn integrating_sq_weights(&self) -> Vec<f64> {
        let n = self.n_nodes as f64;
        let kmax = self.highest_mode();
        self.nodes()
            .iter()
            .map(|&t| {
                let s: f64 = (1..=kmax)
                    .map(|k| (k as f64 * t).cos() / (k * k) as f64)
                    .sum();
                -2.0 * s / n
            })
            .collect()
    }
}

/// Tensors that can be pulled back along the S¹-action and combined over
/// an orbit sample.
pub trait OrbitTensor: Sized {
    /// `m ↦ Σ_j w_j (Fl_Υ^{t_j})^* self (m)`.
    fn orbit_combination(&self, nodes: Vec<f64>, weights: Vec<f64>) -> Self;
}

impl OrbitTensor for VectorField {
    fn orbit_combination(&self, nodes: Vec<f64>, weights: Vec<f64>) -> Self {
        let kind = self.model();
        let r = self.clone();
        let terms: Arc<Vec<(f64, f64)>> = Arc::new(
            nodes
                .into_iter()
                .zip(weights)
                .filter(|(_, w)| *w != 0.0)
                .collect(),
        );
        VectorField::from_tangent(kind, move |p| {
            let mut acc = vec![0.0; p.len()];
            for &(t, w) in terms.iter() {
                let v = kind.s1_push(-t, &r.eval(&kind.s1_flow(p, t)));
                acc.iter_mut().zip(&v).for_each(|(a, x)| *a += w * x);
            }
            acc
        })
    }
}

impl OrbitTensor for ScalarField {
    fn orbit_combination(&self, nodes: Vec<f64>, weights: Vec<f64>) -> Self {
        let kind = self.model();
        let f = self.clone();
        let terms: Arc<Vec<(f64, f64)>> = Arc::new(nodes.into_iter().zip(weights).collect());
        ScalarField::from_raw(kind, move |p| {
            terms
                .iter()
                .map(|&(t, w)| w * f.eval(&kind.s1_flow(p, t)))
                .sum()
        })
    }
}

/// `⟨R⟩`.
pub fn average<T: OrbitTensor>(quad: &QuadratureRule, r: &T) -> T {
    r.orbit_combination(quad.nodes(), quad.mean_weights())
}

/// `S(R)`.
pub fn integrating_op<T: OrbitTensor>(quad: &QuadratureRule, r: &T) -> T {
    r.orbit_combination(quad.nodes(), quad.integrating_weights())
}

/// `S²(R) = S(S(R))`, evaluated in a single pass.
pub fn integrating_op_sq<T: OrbitTensor>(quad: &QuadratureRule, r: &T) -> T {
    r.orbit_combination(quad.nodes(), quad.integrating_sq_weights())
}

pub fn average_field(model: &ManifoldModel, r: &VectorField, quad: &QuadratureRule) -> Result<VectorField> {
    model.kind.check_model(r.model())?;
    Ok(average(quad, r))
}

pub fn average_function(model: &ManifoldModel, f: &ScalarField, quad: &QuadratureRule) -> Result<ScalarField> {
    model.kind.check_model(f.model())?;
    Ok(average(quad, f))
}

/// `Z = (1/ω) S(X₁) + (1/ω³) S²(L_{X₁} ω) X₀`, the solution of
/// `L_{X₀} Z = X₁ − ⟨X₁⟩`. Both orbit sums share one pass over the nodes.
pub fn homological_z(
    model: &ManifoldModel,
    x0: &VectorField,
    x1: &VectorField,
    quad: &QuadratureRule,
) -> Result<VectorField> {
    model.kind.check_model(x0.model())?;
    model.kind.check_model(x1.model())?;
    let kind = model.kind;
    let terms: Arc<Vec<(f64, f64, f64)>> = Arc::new(
        quad.nodes()
            .into_iter()
            .zip(quad.integrating_weights())
            .zip(quad.integrating_sq_weights())
            .map(|((t, c), d)| (t, c, d))
            .collect(),
    );
    let (w, x0, x1) = (model.omega.clone(), x0.clone(), x1.clone());
    Ok(VectorField::from_tangent(kind, move |p| {
        let mut a = vec![0.0; p.len()];
        let mut s2 = 0.0;
        for &(t, c, d) in terms.iter() {
            let q = kind.s1_flow(p, t);
            let xq = x1.eval(&q);
            s2 += d * directional_derivative(&w, &q, &xq);
            let v = kind.s1_push(-t, &xq);
            a.iter_mut().zip(&v).for_each(|(acc, x)| *acc += c * x);
        }
        let wp = w.eval(p);
        let k = s2 / (wp * wp * wp);
        let x = x0.eval(p);
        a.iter().zip(&x).map(|(ai, xi)| ai / wp + k * xi).collect()
    }))
}

/// `L_Υ R` by central differences in the group parameter,
/// `(Fl_Υ^h)^*R − (Fl_Υ^{−h})^*R` over `2h` with `h = 1e-5`.
pub fn lie_derivative_upsilon(r: &VectorField) -> VectorField {
    const H: f64 = 1e-5;
    let (kind, r) = (r.model(), r.clone());
    VectorField::from_tangent(kind, move |p| {
        let a = kind.s1_push(-H, &r.eval(&kind.s1_flow(p, H)));
        let b = kind.s1_push(H, &r.eval(&kind.s1_flow(p, -H)));
        a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * H)).collect()
    })
}

/// `L_Υ f`, same stencil as [`lie_derivative_upsilon`].
pub fn lie_derivative_upsilon_fn(f: &ScalarField) -> ScalarField {
    const H: f64 = 1e-5;
    let (kind, f) = (f.model(), f.clone());
    ScalarField::from_raw(kind, move |p| {
        (f.eval(&kind.s1_flow(p, H)) - f.eval(&kind.s1_flow(p, -H))) / (2.0 * H)
    })
}

/// `L_X Y = [X, Y]` via the connection.
pub fn lie_derivative(x: &VectorField, y: &VectorField) -> VectorField {
    let (kind, x, y) = (x.model(), x.clone(), y.clone());
    VectorField::from_tangent(kind, move |p| lie_bracket(kind, &x, &y, p))
}

/// Pointwise `‖L_{X₀}Z − (X₁ − ⟨X₁⟩)‖` at `p`.
pub fn homological_residual(
    model: &ManifoldModel,
    x0: &VectorField,
    x1: &VectorField,
    z: &VectorField,
    quad: &QuadratureRule,
    p: &[f64],
) -> f64 {
    let lz = lie_bracket(model.kind, x0, z, p);
    let avg = average(quad, x1).eval(p);
    let x = x1.eval(p);
    let d: Vec<f64> = (0..p.len()).map(|i| lz[i] - (x[i] - avg[i])).collect();
    norm(&d)
}

/// `Y_O = ρ_* Y` for an S¹-invariant `Y`, evaluated at a section point.
#[derive(Clone, Debug)]
pub struct ReducedField {
    pub kind: ModelKind,
    field: VectorField,
}

impl ReducedField {
    pub fn eval(&self, z: &[f64]) -> Vec<f64> {
        let kind = self.kind;
        let z = kind.orbit_normalized(z);
        let p = kind.section(&z);
        let mut w = kind.project_vector(&p, &self.field.eval(&p));
        kind.orbit_tangent_project(&z, &mut w);
        w
    }

    pub fn at(&self, z: &OrbitPoint) -> Vec<f64> {
        self.eval(&z.coords)
    }

    /// Invariant field upstairs that this field reduces.
    pub fn source(&self) -> &VectorField {
        &self.field
    }

    /// `t ↦ Fl^t(z₀)` on `[0, t_end]`. On S² the ambient system is
    /// renormalized onto the radius-1/2 sphere after each step.
    pub fn integrate(&self, z0: &OrbitPoint, t_end: f64, opts: &SolverOptions) -> Result<OrbitCurve> {
        self.kind.check_model(z0.model)?;
        let kind = self.kind;
        let me = self.clone();
        let project = move |y: &mut [f64]| {
            if kind == ModelKind::Hopf {
                let r = norm(y);
                y.iter_mut().for_each(|x| *x *= 0.5 / r);
            }
        };
        let traj = ode::solve(move |_, z| me.eval(z), project, 0.0, &z0.coords, t_end, opts)?;
        let (t1, t2) = (Arc::new(traj), self.clone());
        let t3 = t1.clone();
        Ok(OrbitCurve::new(
            kind,
            0.0,
            t_end,
            move |t| kind.orbit_normalized(&t1.state(t)),
            move |t| t2.eval(&t3.state(t)),
        ))
    }
}

/// Reduces an S¹-invariant field to the orbit space. Invariance is checked
/// at `probes` by comparing `Y` with `⟨Y⟩` (relative tolerance `1e-6`).
pub fn reduce_field(
    model: &ManifoldModel,
    y: &VectorField,
    quad: &QuadratureRule,
    probes: &[Point],
) -> Result<ReducedField> {
    let kind = model.kind;
    kind.check_model(y.model())?;
    let avg = average(quad, y);
    for p in probes {
        kind.check_model(p.model)?;
        let a = y.eval(&p.coords);
        let b = avg.eval(&p.coords);
        let defect = max_abs_diff(&a, &b);
        if defect > 1e-6 * (1.0 + norm(&a)) {
            return Err(Error::NotInvariant {
                defect,
                at: p.coords.clone(),
            });
        }
    }
    Ok(ReducedField {
        kind,
        field: y.clone(),
    })
}

/// The reduction `⟨X⟩_O`, with the invariance holding by construction.
pub fn reduce_average(x: &VectorField, quad: &QuadratureRule) -> ReducedField {
    ReducedField {
        kind: x.model(),
        field: average(quad, x),
    }
}
