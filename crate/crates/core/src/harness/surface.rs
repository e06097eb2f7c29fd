use std::sync::Arc;

use super::verify::Experiment;
use crate::averaging::average;
use crate::bounds::{length_bound_eps, surface_sweep, SurfaceFamily, SurfaceSweep, TheoremConstants};
use crate::error::{Error, Result};
use crate::field::TimeField;
use crate::flows::flow_point;
use crate::geometry::ModelKind;
use crate::normalform::{remainder_field, steps_for, Direction, NearIdentityMap};
use crate::ode::SolverOptions;

/// `τ(t)`, the fiber phase carrying `Fl^t_{X̃_{ε,1}}(m_ε)` to the horizontal
/// lift of its projection, as a piecewise cubic Hermite interpolant.
#[derive(Clone, Debug)]
pub struct PhaseCurve {
    ts: Vec<f64>,
    tau: Vec<f64>,
    dtau: Vec<f64>,
}

impl PhaseCurve {
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.ts.len();
        let i = self.ts.partition_point(|&s| s <= t).clamp(1, n - 1) - 1;
        let h = self.ts[i + 1] - self.ts[i];
        let s = ((t - self.ts[i]) / h).clamp(0.0, 1.0);
        let (s2, s3) = (s * s, s * s * s);
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.tau[i]
            + (s3 - 2.0 * s2 + s) * h * self.dtau[i]
            + (-2.0 * s3 + 3.0 * s2) * self.tau[i + 1]
            + (s3 - s2) * h * self.dtau[i + 1]
    }
}

/// Builds `τ` on `[0, L₀/ε]` from `τ' = −g(γ', Υ)/g(Υ, Υ)` along
/// `γ = Φ_ε⁻¹ ∘ Fl^t_{X_ε}(m⁰)`, with Simpson's rule on `intervals` panels.
pub fn phase_curve(exp: &Experiment, eps: f64, intervals: usize) -> Result<PhaseCurve> {
    let kind = exp.kind();
    let curve = exp.trajectory(eps)?;
    let xe = exp.x0.add_scaled(eps, &exp.x1);
    let map = NearIdentityMap::new(exp.z.clone(), eps);
    let rate = |t: f64| -> Result<f64> {
        let q = curve.coords(t);
        let (g, dg) = map.push_raw(&q, &xe.eval(&q), Direction::Inverse)?;
        let u = kind.upsilon(&g);
        Ok(-kind.inner(&g, &dg, &u) / kind.inner(&g, &u, &u))
    };
    let n = intervals.max(2);
    let t_end = curve.t_end();
    let ts: Vec<f64> = (0..=n).map(|i| t_end * i as f64 / n as f64).collect();
    let dtau = ts.iter().map(|&t| rate(t)).collect::<Result<Vec<_>>>()?;
    let mut tau = vec![0.0; n + 1];
    for i in 0..n {
        let mid = rate(0.5 * (ts[i] + ts[i + 1]))?;
        tau[i + 1] = tau[i] + (ts[i + 1] - ts[i]) / 6.0 * (dtau[i] + 4.0 * mid + dtau[i + 1]);
    }
    Ok(PhaseCurve { ts, tau, dtau })
}

/// The surface `Σ_ε(t, s) = Fl^t_{Y_t}(m_{εs})` with
/// `Y_t = ε⟨X₁⟩^hor + sε² (ϱ^t)_* R_ε^hor` and `ϱ^t = Fl_Υ^{τ(t)}`.
pub fn sigma_family(exp: &Experiment, eps: f64, phase: PhaseCurve) -> Result<SurfaceFamily> {
    let kind = exp.kind();
    let a = average(&exp.quad, &exp.x1).horizontal();
    let b = remainder_field(&exp.model, &exp.x0, &exp.x1, &exp.z, eps, &exp.quad)?.horizontal();
    let phase = Arc::new(phase);
    let family = move |s: f64| {
        let (a, b, phase) = (a.clone(), b.clone(), phase.clone());
        TimeField::new(kind, move |t, m| {
            let mut y: Vec<f64> = a.eval(m).iter().map(|v| eps * v).collect();
            if s != 0.0 {
                let tau = phase.eval(t);
                let r = kind.s1_push(tau, &b.eval(&kind.s1_flow(m, -tau)));
                y.iter_mut().zip(&r).for_each(|(v, w)| *v += s * eps * eps * w);
            }
            y
        })
    };
    let z = exp.z.as_time_field();
    let m0 = exp.cfg.m0.clone();
    let opts = SolverOptions::fixed(steps_for(eps));
    let beta = move |s: f64| flow_point(&z, 0.0, &m0, -eps * s, &opts);
    Ok(SurfaceFamily::new(kind, family, beta).affine())
}

/// The surface sweep of `Σ_ε` together with the comparison of `L_ε(t)`
/// against `ε[(κ₂/κ₁ + κ₀)e^{εκ₁t} − κ₂/κ₁]`.
#[derive(Clone, Debug)]
pub struct SigmaCheck {
    pub epsilon: f64,
    pub sweep: SurfaceSweep,
    pub mmn_bounds: Vec<f64>,
    /// Times at which `L_ε(t)` exceeds the constant-based bound.
    pub mmn_violations: Vec<f64>,
    /// `sup_t dist^O(ρ Σ(t,1), ρ Φ_ε⁻¹ Fl^t_{X_ε}(m⁰))`.
    pub edge1_defect: f64,
    /// `sup_t dist^O(ρ Σ(t,0), Fl^{εt}_{⟨X₁⟩_O}(z⁰))`.
    pub edge0_defect: f64,
}

impl SigmaCheck {
    pub fn passed(&self) -> bool {
        self.sweep.passed() && self.mmn_violations.is_empty()
    }
}

pub fn sigma_check(
    exp: &Experiment,
    k: &TheoremConstants,
    eps: f64,
    n_s: usize,
    n_t: usize,
) -> Result<SigmaCheck> {
    if !(eps > 0.0 && eps <= k.epsilon0) {
        return Err(Error::Domain(format!("eps = {eps} outside (0, eps0 = {}]", k.epsilon0)));
    }
    let kind = exp.kind();
    let t_end = exp.cfg.l0 / eps;
    let phase = phase_curve(exp, eps, ((4.0 * t_end).ceil() as usize).max(64))?;
    let fam = sigma_family(exp, eps, phase)?;
    let opts = SolverOptions::with_tol(exp.cfg.tol.max(1e-9));
    let sweep = surface_sweep(&fam, t_end, n_s, n_t, &opts)?;
    let mmn_bounds: Vec<f64> = sweep.times.iter().map(|&t| length_bound_eps(k, eps, t)).collect();
    let slack = exp.slack();
    let mmn_violations = sweep
        .times
        .iter()
        .zip(sweep.lengths.iter().zip(&mmn_bounds))
        .filter(|(_, (l, b))| **l > **b + slack)
        .map(|(t, _)| *t)
        .collect();

    let curve = exp.trajectory(eps)?;
    let map = NearIdentityMap::new(exp.z.clone(), eps);
    let (mut d0, mut d1) = (0.0f64, 0.0f64);
    for (i, &t) in sweep.times.iter().enumerate() {
        let h = map.apply_raw(&curve.coords(t), Direction::Inverse)?;
        d1 = d1.max(kind.orbit_distance(&kind.project(&sweep.edge1[i]), &kind.project(&h))?);
        let zbar = exp.averaged.position((eps * t).min(exp.cfg.l0));
        d0 = d0.max(kind.orbit_distance(&kind.project(&sweep.edge0[i]), &zbar)?);
    }
    Ok(SigmaCheck {
        epsilon: eps,
        sweep,
        mmn_bounds,
        mmn_violations,
        edge1_defect: d1,
        edge0_defect: d0,
    })
}

/// `X_s ≡ X`, `β ≡ p`: every `s`-curve is a point.
pub fn constant_family(kind: ModelKind, x: TimeField, p: Vec<f64>) -> SurfaceFamily {
    SurfaceFamily::new(kind, move |_| x.clone(), move |_| Ok(p.clone())).affine()
}

/// `X_s = (1 + s)∂_x` on `S¹ × R`, `β(s) = (0, s)`: `L(t) = 1 + t`.
pub fn shear_family() -> SurfaceFamily {
    let kind = ModelKind::Trivial { k: 1 };
    SurfaceFamily::new(
        kind,
        move |s| TimeField::new(kind, move |_, _| vec![0.0, 1.0 + s]),
        |s| Ok(vec![0.0, s]),
    )
    .affine()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shear_length_is_one_plus_t() {
        let sw = surface_sweep(&shear_family(), 2.0, 4, 5, &SolverOptions::default()).unwrap();
        for (t, l) in sw.times.iter().zip(&sw.lengths) {
            assert!((l - (1.0 + t)).abs() < 1e-9, "{t} {l}");
        }
        assert!(sw.c1.abs() < 1e-6 && (sw.c2 - 1.0).abs() < 1e-8);
        assert!(sw.passed());
    }

    #[test]
    fn constant_family_has_zero_length() {
        let kind = ModelKind::Hopf;
        let x = TimeField::new(kind, |_, p| vec![-p[2], -p[3], p[0], p[1]]);
        let sw = surface_sweep(&constant_family(kind, x, vec![1.0, 0.0, 0.0, 0.0]), 3.0, 4, 4, &SolverOptions::default())
            .unwrap();
        assert!(sw.lengths.iter().all(|&l| l == 0.0));
        assert!(sw.passed());
    }
}
