//! Curves in the orbit space and their horizontal lifts.

use std::fmt;
use std::sync::Arc;

use super::{wrap_angle, ManifoldModel, ModelKind, Point};
use crate::error::{Error, Result};
use crate::flows::{projector, PointCurve};
use crate::linalg::{dot, max_abs_diff, norm};
use crate::ode::{self, SolverOptions};

type CurveFn = dyn Fn(f64) -> Vec<f64> + Send + Sync;

/// Smooth curve `α : [a, b] → O` with its velocity.
#[derive(Clone)]
pub struct OrbitCurve {
    pub model: ModelKind,
    pub a: f64,
    pub b: f64,
    pos: Arc<CurveFn>,
    vel: Arc<CurveFn>,
}

impl fmt::Debug for OrbitCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OrbitCurve")
            .field("model", &self.model)
            .field("a", &self.a)
            .field("b", &self.b)
            .finish_non_exhaustive()
    }
}

impl OrbitCurve {
    pub fn new<P, V>(model: ModelKind, a: f64, b: f64, pos: P, vel: V) -> Self
    where
        P: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
        V: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            model,
            a,
            b,
            pos: Arc::new(pos),
            vel: Arc::new(vel),
        }
    }

    /// `ρ ∘ γ` for a curve `γ` on `M`.
    pub fn projection_of(curve: &PointCurve) -> Self {
        let kind = curve.model();
        let (c1, c2) = (curve.clone(), curve.clone());
        Self::new(
            kind,
            curve.t_start(),
            curve.t_end(),
            move |t| kind.project(&c1.coords(t)),
            move |t| {
                let p = c2.coords(t);
                kind.project_vector(&p, &c2.velocity(t))
            },
        )
    }

    pub fn position(&self, t: f64) -> Vec<f64> {
        (self.pos)(t)
    }

    pub fn velocity(&self, t: f64) -> Vec<f64> {
        (self.vel)(t)
    }

    /// Arc length by composite Simpson on `n` (rounded up to even) panels.
    pub fn length(&self, n: usize) -> f64 {
        simpson(|t| norm(&self.velocity(t)), self.a, self.b, n)
    }
}

pub(crate) fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Horizontal lift of `α` starting at `m0`, integrated with at least
/// `n_steps` steps; the trajectory is renormalized onto S³ after each step.
pub fn horizontal_lift_curve(
    model: &ManifoldModel,
    alpha: &OrbitCurve,
    m0: &Point,
    n_steps: usize,
) -> Result<PointCurve> {
    let kind = model.kind;
    kind.check_model(m0.model)?;
    kind.check_model(alpha.model)?;
    let gap = max_abs_diff(&kind.project(&m0.coords), &alpha.position(alpha.a));
    if gap > 1e-7 {
        return Err(Error::NotSameFiber { gap });
    }
    let a = alpha.clone();
    let opts = SolverOptions {
        max_step: (alpha.b - alpha.a).abs() / n_steps.max(1) as f64,
        ..SolverOptions::with_tol(1e-11)
    };
    let traj = ode::solve(
        move |t, y| kind.lift_vector(y, &a.velocity(t)),
        projector(kind, 1),
        alpha.a,
        &m0.coords,
        alpha.b,
        &opts,
    )?;
    Ok(PointCurve::from_trajectory(kind, traj))
}

/// The angle `τ ∈ [0, 2π)` with `Fl_Υ^τ(p) = q`.
pub fn fiber_phase(model: &ManifoldModel, p: &Point, q: &Point) -> Result<f64> {
    let kind = model.kind;
    kind.check_model(p.model)?;
    kind.check_model(q.model)?;
    phase_raw(kind, &p.coords, &q.coords)
}

pub(crate) fn phase_raw(kind: ModelKind, p: &[f64], q: &[f64]) -> Result<f64> {
    let gap = max_abs_diff(&kind.project(p), &kind.project(q));
    if gap > 1e-7 {
        return Err(Error::NotSameFiber { gap });
    }
    let tau = match kind {
        ModelKind::Trivial { .. } => q[0] - p[0],
        ModelKind::Hopf => {
            let (p, q) = (kind.normalized(p), kind.normalized(q));
            let s = p[0] * q[1] - p[1] * q[0] + p[2] * q[3] - p[3] * q[2];
            s.atan2(dot(&p, &q))
        }
    };
    Ok(wrap_angle(tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::s1_flow;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn phase_inverts_the_action() {
        for kind in [ModelKind::Trivial { k: 2 }, ModelKind::Hopf] {
            let m = ManifoldModel::unit(kind);
            let coords = match kind {
                ModelKind::Hopf => vec![0.1, 0.5, -0.7, 0.3],
                _ => vec![5.9, 0.4, -1.0],
            };
            let p = Point::new(kind, coords).unwrap();
            assert_eq!(fiber_phase(&m, &p, &p).unwrap(), 0.0);
            let q = s1_flow(&m, &p, 1.3).unwrap();
            assert!((fiber_phase(&m, &p, &q).unwrap() - 1.3).abs() < 1e-9);
        }
    }

    #[test]
    fn different_fibers_are_rejected() {
        let m = ManifoldModel::unit(ModelKind::Hopf);
        let p = Point::new(m.kind, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let q = Point::new(m.kind, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        assert!(matches!(fiber_phase(&m, &p, &q), Err(Error::NotSameFiber { .. })));
    }

    #[test]
    fn trivial_lift_keeps_angle() {
        let kind = ModelKind::Trivial { k: 1 };
        let m = ManifoldModel::unit(kind);
        let alpha = OrbitCurve::new(kind, 0.0, 2.0, |t| vec![t * t], |t| vec![2.0 * t]);
        let m0 = Point::new(kind, vec![0.7, 0.0]).unwrap();
        let lift = horizontal_lift_curve(&m, &alpha, &m0, 50).unwrap();
        for t in [0.3, 1.1, 2.0] {
            let q = lift.coords(t);
            assert!((q[0] - 0.7).abs() < 1e-12 && (q[1] - t * t).abs() < 1e-9);
        }
    }

    #[test]
    fn hopf_loop_lift_ends_in_start_fiber() {
        // A latitude circle at height w on S²(1/2).
        let kind = ModelKind::Hopf;
        let m = ManifoldModel::unit(kind);
        let (w, r) = (0.3, (0.25f64 - 0.09).sqrt());
        let alpha = OrbitCurve::new(
            kind,
            0.0,
            TAU,
            move |t| vec![r * t.cos(), r * t.sin(), w],
            move |t| vec![-r * t.sin(), r * t.cos(), 0.0],
        );
        let m0 = Point::new(kind, kind.section(&alpha.position(0.0))).unwrap();
        let lift = horizontal_lift_curve(&m, &alpha, &m0, 200).unwrap();
        let end = lift.end_coords();
        assert!(max_abs_diff(&kind.project(&end), &alpha.position(TAU)) < 1e-7);
        // Holonomy equals half the enclosed solid angle, so the loop does not close.
        let tau = phase_raw(kind, &m0.coords, &end).unwrap();
        let gap = tau.min(TAU - tau);
        assert!(gap > 0.1, "holonomy {tau}");
        let solid = TAU * (1.0 - 2.0 * w);
        let expected = wrap_angle(solid / 2.0);
        let d = (tau - expected).abs();
        assert!(d.min(TAU - d) < 1e-6 || (d - PI).abs() < 1e-6 || (TAU - d - PI).abs() < 1e-6, "τ={tau}");
    }
}
