use std::time::Instant;

use crate::averaging::{homological_z, reduce_average, QuadratureRule, ReducedField};
use crate::bounds::{compute_constants, length_bound_eps, ConstantsProblem, TheoremConstants};
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::flows::{integrate_flow, FlowSpec, PointCurve};
use crate::geometry::{ManifoldModel, ModelKind, OrbitCurve, OrbitPoint};
use crate::linalg::loglog_slope;
use crate::normalform::{Direction, NearIdentityMap};
use crate::ode::SolverOptions;
use crate::vfdsl::SystemConfig;

/// Absolute slack on every asserted inequality, as a multiple of the
/// integrator tolerance.
pub(crate) const SLACK_PER_TOL: f64 = 1e3;

/// Minimum number of uniform samples of `[0, L₀/ε]`.
pub const MIN_TIME_SAMPLES: usize = 200;

/// One `ε` row of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    pub sup_error: f64,
    /// Time at which `sup_error` is attained.
    pub argmax_t: f64,
    pub c_eps_bound: f64,
    pub term1: f64,
    pub term2: f64,
    pub term1_bound: f64,
    pub term2_bound: f64,
    pub wall_ms: f64,
}

impl SweepRow {
    /// Inequalities that failed, as readable messages.
    pub fn violations(&self, slack: f64) -> Vec<String> {
        let mut out = Vec::new();
        if self.sup_error > self.c_eps_bound + slack {
            out.push(format!(
                "eps={:e}: sup_error {:e} > c*eps {:e}",
                self.epsilon, self.sup_error, self.c_eps_bound
            ));
        }
        if self.term1 > self.term1_bound + slack {
            out.push(format!(
                "eps={:e}: term1 {:e} > kappa0*eps {:e}",
                self.epsilon, self.term1, self.term1_bound
            ));
        }
        if self.term2 > self.term2_bound + slack {
            out.push(format!(
                "eps={:e}: term2 {:e} exceeds its Gronwall bound {:e}",
                self.epsilon, self.term2, self.term2_bound
            ));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub name: String,
    /// Rows sorted by ascending `ε`.
    pub rows: Vec<SweepRow>,
    /// Log–log slope of `sup_error` against `ε`.
    pub slope: f64,
    pub constants: TheoremConstants,
    pub slack: f64,
}

impl SweepResult {
    pub fn violations(&self) -> Vec<String> {
        self.rows.iter().flat_map(|r| r.violations(self.slack)).collect()
    }

    pub fn passed(&self) -> bool {
        self.violations().is_empty()
    }

    /// Same result with every `wall_ms` set to zero, for byte-stable output.
    pub fn without_timings(mut self) -> Self {
        self.rows.iter_mut().for_each(|r| r.wall_ms = 0.0);
        self
    }
}

/// Shared data of the experiments on one configured system.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub cfg: SystemConfig,
    pub model: ManifoldModel,
    pub x0: VectorField,
    pub x1: VectorField,
    pub z: VectorField,
    pub quad: QuadratureRule,
    pub reduced: ReducedField,
    /// `τ ↦ Fl^τ_{⟨X₁⟩_O}(z⁰)` on `[0, L₀]`.
    pub averaged: OrbitCurve,
}

impl Experiment {
    /// Builds `Z` and the reduced averaged trajectory, checking that the
    /// latter stays in `D₀` on `[0, L₀]`.
    pub fn new(cfg: &SystemConfig) -> Result<Self> {
        let model = cfg.manifold();
        let (x0, x1) = (cfg.x0_field(), cfg.x1_field());
        let quad = QuadratureRule::new(cfg.nodes)?;
        let z = homological_z(&model, &x0, &x1, &quad)?;
        let reduced = reduce_average(&x1, &quad);
        let kind = model.kind;
        let z0 = OrbitPoint::new(kind, kind.project(&cfg.m0))?;
        let averaged = reduced.integrate(&z0, cfg.l0, &SolverOptions::with_tol(cfg.tol))?;
        let n = 1000;
        for i in 0..=n {
            let tau = cfg.l0 * i as f64 / n as f64;
            if !cfg.domain0.contains(&averaged.position(tau), 1e-12) {
                return Err(Error::DomainExit {
                    t: tau,
                    domain: format!("D0 ({})", cfg.domain0),
                });
            }
        }
        Ok(Self {
            cfg: cfg.clone(),
            model,
            x0,
            x1,
            z,
            quad,
            reduced,
            averaged,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.model.kind
    }

    pub fn slack(&self) -> f64 {
        SLACK_PER_TOL * self.cfg.tol
    }

    pub fn constants(&self) -> Result<TheoremConstants> {
        let (sampler, sampler0) = (self.cfg.sampler(), self.cfg.sampler0());
        compute_constants(&ConstantsProblem {
            model: &self.model,
            x0: &self.x0,
            x1: &self.x1,
            z: &self.z,
            sampler: &sampler,
            sampler0: &sampler0,
            eps0: self.cfg.eps0,
            l0: self.cfg.l0,
            quad: &self.quad,
        })
    }

    pub fn options(&self) -> SolverOptions {
        SolverOptions::with_tol(self.cfg.tol)
    }

    /// `t ↦ Fl^t_{X_ε}(m⁰)` on `[0, L₀/ε]`.
    pub fn trajectory(&self, eps: f64) -> Result<PointCurve> {
        let xe = self.x0.add_scaled(eps, &self.x1);
        let spec = FlowSpec::new(&xe, self.cfg.l0 / eps).with_options(self.options());
        integrate_flow(&spec, &self.cfg.m0_point())
    }

    fn check_in_domain(&self, curve: &PointCurve, times: &[f64]) -> Result<()> {
        let kind = self.kind();
        for &t in times {
            if !self.cfg.domain.contains(&kind.project(&curve.coords(t)), 1e-9) {
                return Err(Error::DomainExit {
                    t,
                    domain: format!("D ({})", self.cfg.domain),
                });
            }
        }
        Ok(())
    }

    /// `dist^O(ρ∘Fl^t_{X_ε}(m⁰), Fl^{εt}_{⟨X₁⟩_O}(z⁰))`.
    pub fn error_at(&self, curve: &PointCurve, eps: f64, t: f64) -> Result<f64> {
        let kind = self.kind();
        let tau = (eps * t).min(self.cfg.l0);
        kind.orbit_distance(&kind.project(&curve.coords(t)), &self.averaged.position(tau))
    }

    /// Sup of the averaging error over `[0, L₀/ε]`: uniform samples and the
    /// accepted integrator nodes, then golden-section refinement around the
    /// best sample. Returns `(sup, argmax)`.
    pub fn sup_error(&self, curve: &PointCurve, eps: f64) -> Result<(f64, f64)> {
        let t_end = curve.t_end();
        let mut times = uniform(t_end, MIN_TIME_SAMPLES);
        times.extend_from_slice(curve.nodes());
        times.sort_by(f64::total_cmp);
        times.dedup();
        self.check_in_domain(curve, &times)?;
        let vals = times
            .iter()
            .map(|&t| self.error_at(curve, eps, t))
            .collect::<Result<Vec<_>>>()?;
        let (i, _) = vals
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        let a = times[i.saturating_sub(1)];
        let b = times[(i + 1).min(times.len() - 1)];
        let (t_ref, v_ref) = golden_max(|t| self.error_at(curve, eps, t).unwrap_or(f64::NAN), a, b);
        Ok(if v_ref > vals[i] { (v_ref, t_ref) } else { (vals[i], times[i]) })
    }

    /// `(term1, term2)` of the triangle decomposition as functions sampled
    /// on `times`, with `Fl^t_{X̃_{ε,1}}(m_ε) = Φ_ε⁻¹(Fl^t_{X_ε}(m⁰))`.
    pub fn triangle_terms(&self, curve: &PointCurve, eps: f64, times: &[f64]) -> Result<Vec<(f64, f64)>> {
        let kind = self.kind();
        let map = NearIdentityMap::new(self.z.clone(), eps);
        times
            .iter()
            .map(|&t| {
                let g = curve.coords(t);
                let h = map.apply_raw(&g, Direction::Inverse)?;
                let (zg, zh) = (kind.project(&g), kind.project(&h));
                let tau = (eps * t).min(self.cfg.l0);
                Ok((
                    kind.orbit_distance(&zg, &zh)?,
                    kind.orbit_distance(&zh, &self.averaged.position(tau))?,
                ))
            })
            .collect()
    }

    /// Evaluates one `ε` row against the given constants.
    pub fn row(&self, eps: f64, k: &TheoremConstants) -> Result<SweepRow> {
        let start = Instant::now();
        let curve = self.trajectory(eps)?;
        let (sup_error, argmax_t) = self.sup_error(&curve, eps)?;
        let times = term_times(&curve);
        let terms = self.triangle_terms(&curve, eps, &times)?;
        let mut term1: f64 = 0.0;
        let mut term2: f64 = 0.0;
        let mut worst2 = f64::NEG_INFINITY;
        let mut term2_bound = 0.0;
        for (&t, &(a, b)) in times.iter().zip(&terms) {
            term1 = term1.max(a);
            term2 = term2.max(b);
            let bound = length_bound_eps(k, eps, t);
            if b - bound > worst2 {
                worst2 = b - bound;
                term2_bound = bound;
            }
        }
        if worst2 < 0.0 {
            term2_bound = length_bound_eps(k, eps, curve.t_end());
        }
        Ok(SweepRow {
            epsilon: eps,
            sup_error,
            argmax_t,
            c_eps_bound: k.c * eps,
            term1,
            term2,
            term1_bound: k.kappa0 * eps,
            term2_bound,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    }
}

fn uniform(t_end: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| t_end * i as f64 / n as f64).collect()
}

/// Samples for the triangle terms: at least `MIN_TIME_SAMPLES`, and about
/// one per two accepted steps of the trajectory.
fn term_times(curve: &PointCurve) -> Vec<f64> {
    uniform(curve.t_end(), MIN_TIME_SAMPLES.max(curve.steps() / 2))
}

/// Golden-section search for a maximum of `f` on `[a, b]`.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if (b - a).abs() <= 1e-12 * (1.0 + a.abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Sweep over the configured `ε` values.
pub fn verify_theorem(cfg: &SystemConfig) -> Result<SweepResult> {
    let exp = Experiment::new(cfg)?;
    let k = exp.constants()?;
    verify_with(&exp, &k)
}

/// Sweep with precomputed constants.
pub fn verify_with(exp: &Experiment, k: &TheoremConstants) -> Result<SweepResult> {
    let mut rows = exp
        .cfg
        .sweep
        .eps
        .iter()
        .map(|&eps| {
            log::info!("verify: eps = {eps:e}");
            exp.row(eps, k)
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    let slope = slope_of(&rows, |r| r.sup_error);
    Ok(SweepResult {
        name: exp.cfg.name.clone(),
        rows,
        slope,
        constants: k.clone(),
        slack: exp.slack(),
    })
}

pub(crate) fn slope_of<R>(rows: &[R], y: impl Fn(&R) -> f64) -> f64
where
    R: HasEpsilon,
{
    let xs: Vec<f64> = rows.iter().map(|r| r.epsilon()).collect();
    let ys: Vec<f64> = rows.iter().map(y).collect();
    if xs.len() >= 2 && ys.iter().all(|&v| v > 0.0 && v.is_finite()) {
        loglog_slope(&xs, &ys)
    } else {
        f64::NAN
    }
}

pub(crate) trait HasEpsilon {
    fn epsilon(&self) -> f64;
}

impl HasEpsilon for SweepRow {
    fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Terms of the triangle decomposition at one `ε`.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleTerms {
    pub epsilon: f64,
    pub term1: f64,
    pub term2: f64,
    pub sup_error: f64,
    pub term1_bound: f64,
    pub term2_bound: f64,
}

pub fn triangle_decomposition(cfg: &SystemConfig, eps: f64) -> Result<TriangleTerms> {
    let exp = Experiment::new(cfg)?;
    let k = exp.constants()?;
    let r = exp.row(eps, &k)?;
    Ok(TriangleTerms {
        epsilon: eps,
        term1: r.term1,
        term2: r.term2,
        sup_error: r.sup_error,
        term1_bound: r.term1_bound,
        term2_bound: r.term2_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_interior_max() {
        let (t, v) = golden_max(|t| -(t - 0.3f64).powi(2) + 2.0, 0.0, 1.0);
        assert!((t - 0.3).abs() < 1e-6 && (v - 2.0).abs() < 1e-12);
    }
}
