//! First-order S¹-invariant normal forms.
//!
//! `Φ_ε = Fl_Z^ε` is integrated with a fixed number of Dormand–Prince steps,
//! `max(8, ⌈64|ε|⌉)`, so that `Φ_ε` is a smooth map of the initial point
//! and difference quotients of it carry no step-control noise.

use crate::averaging::{average, QuadratureRule};
use crate::error::{Error, Result};
use crate::field::{TimeField, VectorField};
use crate::flows::{flow_point, flow_push};
use crate::geometry::{ManifoldModel, Point, TangentVector};
use crate::linalg::{loglog_slope, norm};
use crate::ode::SolverOptions;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// `Φ_ε = Fl_Z^ε`.
#[derive(Clone, Debug)]
pub struct NearIdentityMap {
    pub generator: VectorField,
    pub epsilon: f64,
}

pub(crate) fn steps_for(eps: f64) -> usize {
    ((eps.abs() * 64.0).ceil() as usize).max(8)
}

impl NearIdentityMap {
    pub fn new(generator: VectorField, epsilon: f64) -> Self {
        Self { generator, epsilon }
    }

    fn options(&self) -> SolverOptions {
        SolverOptions::fixed(steps_for(self.epsilon))
    }

    fn time_field(&self) -> TimeField {
        self.generator.as_time_field()
    }

    fn signed(&self, direction: Direction) -> f64 {
        match direction {
            Direction::Forward => self.epsilon,
            Direction::Inverse => -self.epsilon,
        }
    }

    pub(crate) fn apply_raw(&self, p: &[f64], direction: Direction) -> Result<Vec<f64>> {
        if self.epsilon == 0.0 {
            return Ok(self.generator.model().normalized(p));
        }
        flow_point(&self.time_field(), 0.0, p, self.signed(direction), &self.options())
    }

    /// `(q, dΦ^{±1}_p(v))`.
    pub(crate) fn push_raw(&self, p: &[f64], v: &[f64], direction: Direction) -> Result<(Vec<f64>, Vec<f64>)> {
        if self.epsilon == 0.0 {
            return Ok((p.to_vec(), v.to_vec()));
        }
        flow_push(&self.time_field(), 0.0, p, v, self.signed(direction), &self.options())
    }
}

pub fn near_identity_apply(map: &NearIdentityMap, p: &Point, direction: Direction) -> Result<Point> {
    map.generator.model().check_model(p.model)?;
    let q = map.apply_raw(&p.coords, direction)?;
    Ok(Point::from_raw(p.model, &q))
}

/// `Φ_ε^* X_ε : m ↦ (dΦ_ε)⁻¹ X_ε(Φ_ε(m))` with `X_ε = X₀ + εX₁`.
/// Evaluations whose flow fails return NaN components.
pub fn pullback_perturbed(
    model: &ManifoldModel,
    x0: &VectorField,
    x1: &VectorField,
    z: &VectorField,
    eps: f64,
) -> Result<VectorField> {
    let kind = model.kind;
    kind.check_model(x0.model())?;
    kind.check_model(x1.model())?;
    kind.check_model(z.model())?;
    let map = NearIdentityMap::new(z.clone(), eps);
    let xe = x0.add_scaled(eps, x1);
    Ok(VectorField::from_tangent(kind, move |m| {
        let nan = || vec![f64::NAN; kind.dim()];
        let Ok(q) = map.apply_raw(m, Direction::Forward) else {
            return nan();
        };
        let w = xe.eval(&q);
        match map.push_raw(&q, &w, Direction::Inverse) {
            Ok((_, v)) => v,
            Err(_) => nan(),
        }
    }))
}

/// Below this ε the `1/ε²` quotient amplifies integrator noise.
pub const REMAINDER_EPS_FLOOR: f64 = 1e-4;

/// `R_ε(m) = (Φ_ε^*X_ε(m) − X₀(m) − ε⟨X₁⟩(m)) / ε²`.
pub fn extract_remainder(
    model: &ManifoldModel,
    x0: &VectorField,
    x1: &VectorField,
    z: &VectorField,
    eps: f64,
    m: &Point,
    quad: &QuadratureRule,
) -> Result<TangentVector> {
    model.kind.check_model(m.model)?;
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("remainder needs eps > 0, got {eps}")));
    }
    if eps < REMAINDER_EPS_FLOOR {
        log::warn!("remainder at eps = {eps:e} is dominated by cancellation error");
    }
    let pb = pullback_perturbed(model, x0, x1, z, eps)?;
    let avg = average(quad, x1);
    let v = remainder_from(&pb, x0, &avg, eps, &m.coords);
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { t: eps });
    }
    Ok(TangentVector {
        base: m.clone(),
        components: v,
    })
}

fn remainder_from(pb: &VectorField, x0: &VectorField, avg: &VectorField, eps: f64, p: &[f64]) -> Vec<f64> {
    let a = pb.eval(p);
    let b = x0.eval(p);
    let c = avg.eval(p);
    (0..p.len())
        .map(|i| (a[i] - b[i] - eps * c[i]) / (eps * eps))
        .collect()
}

/// `R_ε` as a field (NaN where the flow of `Z` fails).
pub fn remainder_field(
    model: &ManifoldModel,
    x0: &VectorField,
    x1: &VectorField,
    z: &VectorField,
    eps: f64,
    quad: &QuadratureRule,
) -> Result<VectorField> {
    let pb = pullback_perturbed(model, x0, x1, z, eps)?;
    let avg = average(quad, x1);
    let x0 = x0.clone();
    Ok(VectorField::from_tangent(model.kind, move |p| remainder_from(&pb, &x0, &avg, eps, p)))
}

/// Outcome of a normal-form defect sweep.
#[derive(Clone, Debug)]
pub struct NormalFormResult {
    /// `⟨X₁⟩`.
    pub averaged: VectorField,
    /// `(ε, max_m ‖Φ_ε^*X_ε − X₀ − ε⟨X₁⟩‖)` over the probe points.
    pub defects: Vec<(f64, f64)>,
    /// `(ε, max_m ‖R_ε(m)‖)`.
    pub remainder_norms: Vec<(f64, f64)>,
    /// Log–log slope of the defects against ε.
    pub order2_slope: f64,
}

pub fn normal_form(
    model: &ManifoldModel,
    x0: &VectorField,
    x1: &VectorField,
    z: &VectorField,
    quad: &QuadratureRule,
    eps_list: &[f64],
    probes: &[Point],
) -> Result<NormalFormResult> {
    let avg = average(quad, x1);
    let mut defects = Vec::with_capacity(eps_list.len());
    let mut rems = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        if !(eps > 0.0) {
            return Err(Error::Domain(format!("sweep needs eps > 0, got {eps}")));
        }
        let pb = pullback_perturbed(model, x0, x1, z, eps)?;
        let mut worst: f64 = 0.0;
        for p in probes {
            model.kind.check_model(p.model)?;
            let r = remainder_from(&pb, x0, &avg, eps, &p.coords);
            let n = norm(&r);
            if !n.is_finite() {
                return Err(Error::NonFinite { t: eps });
            }
            worst = worst.max(n);
        }
        defects.push((eps, worst * eps * eps));
        rems.push((eps, worst));
    }
    let xs: Vec<f64> = defects.iter().map(|d| d.0).collect();
    let ys: Vec<f64> = defects.iter().map(|d| d.1).collect();
    let order2_slope = if xs.len() >= 2 && ys.iter().all(|&y| y > 0.0) {
        loglog_slope(&xs, &ys)
    } else {
        f64::NAN
    };
    Ok(NormalFormResult {
        averaged: avg,
        defects,
        remainder_norms: rems,
        order2_slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averaging::homological_z;
    use crate::geometry::ModelKind;
    use crate::linalg::max_abs_diff;

    #[test]
    fn zero_epsilon_is_identity() {
        let kind = ModelKind::Trivial { k: 1 };
        let z = VectorField::new(kind, |p| vec![0.0, -p[0].cos()]);
        let p = Point::new(kind, vec![1.0, 2.0]).unwrap();
        let map = NearIdentityMap::new(z, 0.0);
        assert_eq!(near_identity_apply(&map, &p, Direction::Forward).unwrap(), p);
    }

    #[test]
    fn round_trip() {
        let kind = ModelKind::Hopf;
        let z = VectorField::new(kind, |p| vec![p[2], p[3] * p[0], -p[0], 0.3]);
        let map = NearIdentityMap::new(z, 0.2);
        let p = Point::new(kind, vec![0.3, 0.4, -0.5, 0.2]).unwrap();
        let q = near_identity_apply(&map, &p, Direction::Forward).unwrap();
        let r = near_identity_apply(&map, &q, Direction::Inverse).unwrap();
        assert!(max_abs_diff(&p.coords, &r.coords) < 1e-10);
    }

    #[test]
    fn pullback_at_zero_is_x0_and_consistency() {
        let m = ManifoldModel::unit(ModelKind::Trivial { k: 1 });
        let x0 = m.x0();
        let x1 = VectorField::new(m.kind, |p| vec![p[0].cos(), p[0].sin() + p[1]]);
        let q = QuadratureRule::default();
        let z = homological_z(&m, &x0, &x1, &q).unwrap();
        let pb0 = pullback_perturbed(&m, &x0, &x1, &z, 0.0).unwrap();
        assert!(max_abs_diff(&pb0.eval(&[0.3, 0.1]), &x0.eval(&[0.3, 0.1])) < 1e-9);
        let eps = 0.05;
        let p = Point::new(m.kind, vec![0.3, 0.1]).unwrap();
        let r = extract_remainder(&m, &x0, &x1, &z, eps, &p, &q).unwrap();
        let pb = pullback_perturbed(&m, &x0, &x1, &z, eps).unwrap().eval(&p.coords);
        let avg = average(&q, &x1).eval(&p.coords);
        let x = x0.eval(&p.coords);
        for i in 0..2 {
            let rebuilt = x[i] + eps * avg[i] + eps * eps * r.components[i];
            assert!((rebuilt - pb[i]).abs() < 1e-12);
        }
    }
}
