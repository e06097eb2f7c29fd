use std::time::Instant;

use super::verify::{golden_max, slope_of, Experiment, HasEpsilon, MIN_TIME_SAMPLES};
use crate::averaging::average;
use crate::bounds::{sample_sup_raw, TheoremConstants};
use crate::error::{Error, Result};
use crate::field::{directional_derivative, ScalarField};
use crate::linalg::norm;
use crate::vfdsl::SystemConfig;

/// Number of orbit samples on which the first-integral condition is checked.
pub const FIRST_INTEGRAL_SAMPLES: usize = 100;
/// Largest accepted `|L_{⟨X₁⟩_O} J_O|`.
pub const FIRST_INTEGRAL_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct AdiabaticRow {
    pub epsilon: f64,
    /// `max_t |J(Fl^t_{X_ε}(m⁰)) − J(m⁰)|` over `[0, L₀/ε]`.
    pub drift: f64,
    /// `λ_J c ε`.
    pub bound: f64,
    pub wall_ms: f64,
}

impl HasEpsilon for AdiabaticRow {
    fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

#[derive(Clone, Debug)]
pub struct AdiabaticResult {
    pub name: String,
    pub rows: Vec<AdiabaticRow>,
    pub slope: f64,
    /// Sampled Lipschitz constant of `J_O` on `D̄`.
    pub lambda_j: f64,
    /// Largest sampled `|L_{⟨X₁⟩_O} J_O|`.
    pub first_integral_defect: f64,
    pub constants: TheoremConstants,
    pub slack: f64,
}

impl AdiabaticResult {
    pub fn violations(&self) -> Vec<String> {
        self.rows
            .iter()
            .filter(|r| r.drift > r.bound + self.slack)
            .map(|r| format!("eps={:e}: drift {:e} > lambda_J*c*eps {:e}", r.epsilon, r.drift, r.bound))
            .collect()
    }

    pub fn passed(&self) -> bool {
        self.violations().is_empty()
    }

    pub fn without_timings(mut self) -> Self {
        self.rows.iter_mut().for_each(|r| r.wall_ms = 0.0);
        self
    }
}

fn configured_j(cfg: &SystemConfig) -> Result<ScalarField> {
    cfg.j_field()
        .ok_or_else(|| Error::config("system.j_orbit", "the adiabatic experiment needs a first integral"))
}

/// Checks that `J` is S¹-invariant and that `L_{⟨X₁⟩} J` vanishes on
/// `FIRST_INTEGRAL_SAMPLES` points of `ρ⁻¹(D)`; returns the largest defect.
pub fn check_first_integral(exp: &Experiment) -> Result<f64> {
    let j = configured_j(&exp.cfg)?;
    let kind = exp.kind();
    let avg = average(&exp.quad, &exp.x1);
    let mut worst: f64 = 0.0;
    for p in exp.cfg.sampler().low_discrepancy_points(FIRST_INTEGRAL_SAMPLES) {
        let jp = j.eval(&p);
        for theta in [1.1, 3.7] {
            let d = (j.eval(&kind.s1_flow(&p, theta)) - jp).abs();
            if d > 1e-10 * (1.0 + jp.abs()) {
                return Err(Error::NotInvariant { defect: d, at: p });
            }
        }
        let d = directional_derivative(&j, &p, &avg.eval(&p)).abs();
        if !(d <= FIRST_INTEGRAL_TOL) {
            return Err(Error::FirstIntegralViolated {
                defect: d,
                at: kind.project(&p),
            });
        }
        worst = worst.max(d);
    }
    Ok(worst)
}

/// `sup_{ρ⁻¹(D̄)} ‖grad J‖`, which equals the sup of `‖grad J_O‖` on `D̄`
/// because `ρ` is a Riemannian submersion and `J` is invariant.
pub fn lipschitz_j(exp: &Experiment) -> Result<f64> {
    let j = configured_j(&exp.cfg)?;
    let kind = exp.kind();
    let r = sample_sup_raw(&exp.cfg.sampler(), |p| {
        let g: Vec<f64> = kind
            .frame(p)
            .iter()
            .map(|e| directional_derivative(&j, p, e))
            .collect();
        norm(&g)
    });
    if !r.value.is_finite() {
        return Err(Error::NonFinite { t: 0.0 });
    }
    Ok(r.value)
}

pub fn adiabatic_drift(cfg: &SystemConfig) -> Result<AdiabaticResult> {
    let exp = Experiment::new(cfg)?;
    let defect = check_first_integral(&exp)?;
    let k = exp.constants()?;
    adiabatic_with(&exp, &k, defect)
}

/// Drift sweep with precomputed constants and first-integral defect.
pub fn adiabatic_with(exp: &Experiment, k: &TheoremConstants, defect: f64) -> Result<AdiabaticResult> {
    let j = configured_j(&exp.cfg)?;
    let lambda_j = lipschitz_j(exp)?;
    let j0 = j.eval(&exp.cfg.m0);
    let mut rows = Vec::new();
    for &eps in &exp.cfg.sweep.eps {
        let start = Instant::now();
        let curve = exp.trajectory(eps)?;
        let t_end = curve.t_end();
        let mut times: Vec<f64> = (0..=MIN_TIME_SAMPLES)
            .map(|i| t_end * i as f64 / MIN_TIME_SAMPLES as f64)
            .collect();
        times.extend_from_slice(curve.nodes());
        times.sort_by(f64::total_cmp);
        times.dedup();
        let f = |t: f64| (j.eval(&curve.coords(t)) - j0).abs();
        let vals: Vec<f64> = times.iter().map(|&t| f(t)).collect();
        let (i, best) = vals
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        let a = times[i.saturating_sub(1)];
        let b = times[(i + 1).min(times.len() - 1)];
        let drift = golden_max(f, a, b).1.max(best);
        if !drift.is_finite() {
            return Err(Error::NonFinite { t: times[i] });
        }
        rows.push(AdiabaticRow {
            epsilon: eps,
            drift,
            bound: lambda_j * k.c * eps,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    rows.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    let slope = slope_of(&rows, |r| r.drift);
    Ok(AdiabaticResult {
        name: exp.cfg.name.clone(),
        rows,
        slope,
        lambda_j,
        first_integral_defect: defect,
        constants: k.clone(),
        slack: exp.slack(),
    })
}
