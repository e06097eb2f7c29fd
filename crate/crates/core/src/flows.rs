//! Flows of vector fields on the manifold models, their differentials and
//! pullbacks of vector fields.
//!
//! Differentials are central differences of two neighbouring trajectories
//! with offset `h = 1e-6 (1 + |p|) / |v|`. The base trajectory and both
//! offset trajectories are integrated as one augmented system so that they
//! share a step sequence; the difference quotient is then a smooth function
//! of the data and its error is `O(h²)` plus integrator tolerance over `h`.

use crate::error::{Error, Result};
use crate::field::{TimeField, VectorField};
use crate::geometry::{ModelKind, Point, TangentVector};
use crate::linalg::{axpy, norm};
use crate::ode::{self, DenseTrajectory, SolverOptions};

/// A flow problem: a (possibly time-dependent) field integrated over
/// `[t_start, t_end]` with the given solver options.
#[derive(Clone)]
pub struct FlowSpec {
    pub field: TimeField,
    pub t_start: f64,
    pub t_end: f64,
    pub options: SolverOptions,
}

impl FlowSpec {
    /// Autonomous field on `[0, t_end]` with tolerances `1e-10`.
    pub fn new(field: &VectorField, t_end: f64) -> Self {
        Self {
            field: field.as_time_field(),
            t_start: 0.0,
            t_end,
            options: SolverOptions::default(),
        }
    }

    pub fn time_dependent(field: TimeField, t_start: f64, t_end: f64) -> Self {
        Self {
            field,
            t_start,
            t_end,
            options: SolverOptions::default(),
        }
    }

    pub fn with_options(mut self, options: SolverOptions) -> Self {
        self.options = options;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.options.rel_tol = tol;
        self.options.abs_tol = tol;
        self
    }

    pub fn model(&self) -> ModelKind {
        self.field.model()
    }

    fn validate(&self) -> Result<()> {
        let o = &self.options;
        if !(o.rel_tol > 0.0 && o.abs_tol > 0.0) {
            return Err(Error::Domain("tolerances must be positive".into()));
        }
        if !(self.t_start.is_finite() && self.t_end.is_finite()) {
            return Err(Error::Domain("time span must be finite".into()));
        }
        Ok(())
    }
}

/// Dense-output trajectory on one of the manifold models.
#[derive(Clone, Debug)]
pub struct PointCurve {
    model: ModelKind,
    traj: DenseTrajectory,
}

impl PointCurve {
    pub(crate) fn from_trajectory(model: ModelKind, traj: DenseTrajectory) -> Self {
        Self { model, traj }
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn t_start(&self) -> f64 {
        self.traj.t_start()
    }

    pub fn t_end(&self) -> f64 {
        self.traj.t_end()
    }

    pub fn steps(&self) -> usize {
        self.traj.steps()
    }

    /// Coordinates at `t` (unit norm on S³; the angle on the trivial bundle
    /// is not wrapped, so the result is continuous in `t`).
    pub fn coords(&self, t: f64) -> Vec<f64> {
        self.model.normalized(&self.traj.state(t))
    }

    /// Canonical point at `t`.
    pub fn point(&self, t: f64) -> Point {
        Point::from_raw(self.model, &self.traj.state(t))
    }

    pub fn velocity(&self, t: f64) -> Vec<f64> {
        let p = self.coords(t);
        let mut v = self.traj.derivative(t);
        self.model.tangent_project(&p, &mut v);
        v
    }

    pub fn end_coords(&self) -> Vec<f64> {
        self.model.normalized(self.traj.final_state())
    }

    /// Accepted step times.
    pub fn nodes(&self) -> &[f64] {
        self.traj.times()
    }
}

pub(crate) fn projector(kind: ModelKind, blocks: usize) -> impl Fn(&mut [f64]) {
    let n = kind.dim();
    move |y: &mut [f64]| {
        if kind == ModelKind::Hopf {
            for b in 0..blocks {
                let s = &mut y[b * n..(b + 1) * n];
                let r = norm(s);
                s.iter_mut().for_each(|x| *x /= r);
            }
        }
    }
}

pub(crate) fn solve_field(
    field: &TimeField,
    t0: f64,
    y0: &[f64],
    t1: f64,
    opts: &SolverOptions,
) -> Result<DenseTrajectory> {
    let kind = field.model();
    kind.check_dim(y0.len())?;
    let f = field.clone();
    ode::solve(move |t, y| f.eval(t, y), projector(kind, 1), t0, y0, t1, opts)
}

/// Endpoint of the flow from `(t0, y0)` to `t1`.
pub(crate) fn flow_point(
    field: &TimeField,
    t0: f64,
    y0: &[f64],
    t1: f64,
    opts: &SolverOptions,
) -> Result<Vec<f64>> {
    let traj = solve_field(field, t0, y0, t1, opts)?;
    Ok(field.model().normalized(traj.final_state()))
}

/// Endpoint and pushed-forward vector `d Fl_{t0→t1}(v)`.
pub(crate) fn flow_push(
    field: &TimeField,
    t0: f64,
    p: &[f64],
    v: &[f64],
    t1: f64,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let kind = field.model();
    let n = kind.dim();
    let vn = norm(v);
    if vn == 0.0 || t1 == t0 {
        let q = flow_point(field, t0, p, t1, opts)?;
        return Ok((q, if vn == 0.0 { vec![0.0; n] } else { v.to_vec() }));
    }
    let h = 1e-6 * (1.0 + norm(p)) / vn;
    let mut y0 = Vec::with_capacity(3 * n);
    y0.extend_from_slice(p);
    y0.extend(axpy(p, h, v));
    y0.extend(axpy(p, -h, v));
    let f = field.clone();
    let rhs = move |t: f64, y: &[f64]| {
        let mut out = Vec::with_capacity(3 * n);
        for b in 0..3 {
            out.extend(f.eval(t, &y[b * n..(b + 1) * n]));
        }
        out
    };
    let traj = ode::solve(rhs, projector(kind, 3), t0, &y0, t1, opts)?;
    let y = traj.final_state();
    let q = kind.normalized(&y[..n]);
    let mut d: Vec<f64> = (0..n).map(|i| (y[n + i] - y[2 * n + i]) / (2.0 * h)).collect();
    kind.tangent_project(&q, &mut d);
    Ok((q, d))
}

pub fn integrate_flow(spec: &FlowSpec, p: &Point) -> Result<PointCurve> {
    spec.validate()?;
    spec.model().check_model(p.model)?;
    let traj = solve_field(&spec.field, spec.t_start, &p.coords, spec.t_end, &spec.options)?;
    Ok(PointCurve::from_trajectory(spec.model(), traj))
}

/// `Fl^t(p)` for `t` measured from `spec.t_start`.
pub fn flow_map(spec: &FlowSpec, p: &Point, t: f64) -> Result<Point> {
    spec.validate()?;
    spec.model().check_model(p.model)?;
    let q = flow_point(&spec.field, spec.t_start, &p.coords, spec.t_start + t, &spec.options)?;
    Ok(Point::from_raw(spec.model(), &q))
}

/// `d_p Fl^t (v)`.
pub fn flow_differential(spec: &FlowSpec, p: &Point, v: &TangentVector, t: f64) -> Result<TangentVector> {
    spec.validate()?;
    spec.model().check_model(p.model)?;
    spec.model().check_model(v.base.model)?;
    let (q, d) = flow_push(
        &spec.field,
        spec.t_start,
        &p.coords,
        &v.components,
        spec.t_start + t,
        &spec.options,
    )?;
    Ok(TangentVector {
        base: Point::from_raw(spec.model(), &q),
        components: d,
    })
}

/// `(Fl^t)^* Y : m ↦ (d_m Fl^t)⁻¹ Y(Fl^t(m))` for the autonomous field of
/// `spec`; the inverse differential is the differential of the time-`(−t)`
/// flow. Evaluations whose flow fails return NaN components.
pub fn pullback_field(spec: &FlowSpec, t: f64, y: &VectorField) -> Result<VectorField> {
    spec.validate()?;
    spec.model().check_model(y.model())?;
    let field = spec.field.clone();
    let opts = spec.options;
    let y = y.clone();
    let kind = spec.model();
    Ok(VectorField::from_tangent(kind, move |m| {
        let nan = || vec![f64::NAN; kind.dim()];
        let Ok(q) = flow_point(&field, 0.0, m, t, &opts) else {
            return nan();
        };
        let w = y.eval(&q);
        match flow_push(&field, t, &q, &w, 0.0, &opts) {
            Ok((_, d)) => d,
            Err(_) => nan(),
        }
    }))
}
