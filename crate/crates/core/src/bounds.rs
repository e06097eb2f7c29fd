//! Gronwall estimates, sampled suprema and the constants `κ₀, κ₁, κ₂, c`.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::averaging::{average, QuadratureRule};
use crate::error::{Error, Result};
use crate::field::{TimeField, VectorField};
use crate::flows::projector;
use crate::geometry::connection::nabla_op_norm_raw;
use crate::geometry::lift::simpson;
use crate::geometry::{ManifoldModel, ModelKind, Point};
use crate::linalg::norm;
use crate::normalform::remainder_field;
use crate::ode::{self, SolverOptions};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GronwallParams {
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub t0: f64,
}

/// `y ↦ (δ₂/δ₁ + δ₃) e^{δ₁τ} − δ₂/δ₁`, written as `δ₃e^{δ₁τ} + δ₂(e^{δ₁τ} − 1)/δ₁`
/// so that it stays accurate as `δ₁τ → 0` and continues to `δ₃ + δ₂τ` at `δ₁ = 0`.
fn envelope(d1: f64, d2: f64, d3: f64, tau: f64) -> f64 {
    let x = d1 * tau;
    let growth = if x == 0.0 { tau } else { x.exp_m1() / d1 };
    d3 * x.exp() + d2 * growth
}

/// Solution bound of `y(t) ≤ δ₃ + ∫_{t₀}^t (δ₁y + δ₂)`.
pub fn gronwall_bound(params: &GronwallParams, t: f64) -> Result<f64> {
    let GronwallParams { delta1, delta2, delta3, t0 } = *params;
    if !(delta1 > 0.0) {
        return Err(Error::Domain(format!("delta1 must be positive, got {delta1}")));
    }
    if !(delta2 >= 0.0 && delta3 >= 0.0) {
        return Err(Error::Domain("delta2 and delta3 must be nonnegative".into()));
    }
    if !(t >= t0) {
        return Err(Error::Domain(format!("t = {t} precedes t0 = {t0}")));
    }
    Ok(envelope(delta1, delta2, delta3, t - t0))
}

/// `(C₂/C₁ + L(0)) e^{C₁t} − C₂/C₁`.
pub fn surface_length_bound(c1: f64, c2: f64, l_init: f64, t: f64) -> Result<f64> {
    if !(c1 > 0.0) {
        return Err(Error::Domain(format!("C1 must be positive, got {c1}")));
    }
    if !(c2 >= 0.0 && l_init >= 0.0 && t >= 0.0) {
        return Err(Error::Domain("C2, L(0) and t must be nonnegative".into()));
    }
    Ok(envelope(c1, c2, l_init, t))
}

/// `[(κ₂/κ₁ + κ₀) e^{εκ₁t} − κ₂/κ₁] ε`, with its `κ₁ → 0` limit.
pub fn length_bound_eps(k: &TheoremConstants, eps: f64, t: f64) -> f64 {
    eps * envelope(eps * k.kappa1, eps * k.kappa2, k.kappa0, t)
}

/// `c = κ₀ + (κ₂/κ₁ + κ₀) e^{κ₁L₀} − κ₂/κ₁`, with its `κ₁ → 0` limit.
pub fn constant_c(kappa0: f64, kappa1: f64, kappa2: f64, l0: f64) -> f64 {
    kappa0 + envelope(kappa1, kappa2, kappa0, l0)
}

/// A compact region of the orbit space.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    /// Coordinate box in `Rᵏ`.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// `{ z ∈ S²(1/2) : w_min ≤ z₃ ≤ w_max }`.
    Band { w_min: f64, w_max: f64 },
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Box { lower, upper } => {
                write!(f, "box")?;
                for (a, b) in lower.iter().zip(upper) {
                    write!(f, " [{a}, {b}]")?;
                }
                Ok(())
            }
            Domain::Band { w_min, w_max } => write!(f, "band w in [{w_min}, {w_max}]"),
        }
    }
}

impl Domain {
    pub fn whole_sphere() -> Self {
        Domain::Band { w_min: -0.5, w_max: 0.5 }
    }

    pub fn contains(&self, z: &[f64], slack: f64) -> bool {
        match self {
            Domain::Box { lower, upper } => z
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(x, (a, b))| *x >= a - slack && *x <= b + slack),
            Domain::Band { w_min, w_max } => {
                let w = 0.5 * z[2] / norm(z);
                w >= w_min - slack && w <= w_max + slack
            }
        }
    }

    pub fn contains_domain(&self, other: &Domain) -> bool {
        match (self, other) {
            (Domain::Box { lower: a, upper: b }, Domain::Box { lower: c, upper: d }) => {
                a.len() == c.len() && a.iter().zip(c).all(|(x, y)| x <= y) && b.iter().zip(d).all(|(x, y)| x >= y)
            }
            (Domain::Band { w_min: a, w_max: b }, Domain::Band { w_min: c, w_max: d }) => a <= c && b >= d,
            _ => false,
        }
    }

    fn dims(&self) -> usize {
        match self {
            Domain::Box { lower, .. } => lower.len(),
            Domain::Band { .. } => 2,
        }
    }

    /// Maps `u ∈ [0,1]^dims` into the domain (area-uniform on bands).
    fn embed(&self, u: &[f64]) -> Vec<f64> {
        match self {
            Domain::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .zip(u)
                .map(|((a, b), t)| a + (b - a) * t)
                .collect(),
            Domain::Band { w_min, w_max } => {
                let w = w_min + (w_max - w_min) * u[0];
                let r = (0.25 - w * w).max(0.0).sqrt();
                let lon = TAU * u[1];
                vec![r * lon.cos(), r * lon.sin(), w]
            }
        }
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Deterministic samples of `ρ⁻¹(D̄)`: a tensor grid on `D̄` plus a seeded,
/// randomly shifted Halton top-up, each orbit point carried around its
/// fiber at `theta` equally spaced angles. Refinement produces a superset.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainSampler {
    pub kind: ModelKind,
    pub domain: Domain,
    pub grid: usize,
    pub halton: usize,
    pub theta: usize,
    pub seed: u64,
}

/// Outcome of a sampled supremum.
#[derive(Clone, Debug, PartialEq)]
pub struct SupResult {
    pub value: f64,
    pub at: Vec<f64>,
    pub samples: usize,
}

impl DomainSampler {
    pub fn new(kind: ModelKind, domain: Domain, grid: usize, halton: usize, theta: usize, seed: u64) -> Self {
        Self {
            kind,
            domain,
            grid: grid.max(2),
            halton,
            theta: theta.max(1),
            seed,
        }
    }

    /// Grid `2g − 1`, twice the Halton points and fiber angles.
    pub fn refine(&self) -> Self {
        Self {
            grid: 2 * self.grid - 1,
            halton: 2 * self.halton,
            theta: 2 * self.theta,
            ..self.clone()
        }
    }

    pub fn resolution(&self) -> String {
        format!(
            "grid {} per axis, {} Halton points, {} fiber angles",
            self.grid, self.halton, self.theta
        )
    }

    fn shift(&self, dims: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..dims).map(|_| rng.random::<f64>()).collect()
    }

    fn halton_unit(&self, count: usize, dims: usize) -> Vec<Vec<f64>> {
        let shift = self.shift(dims);
        (1..=count as u64)
            .map(|i| {
                (0..dims)
                    .map(|d| (radical_inverse(i, PRIMES[d % PRIMES.len()]) + shift[d]).fract())
                    .collect()
            })
            .collect()
    }

    /// Sample points of the orbit domain.
    pub fn orbit_points(&self) -> Vec<Vec<f64>> {
        let g = self.grid;
        let mut out = Vec::new();
        match &self.domain {
            Domain::Box { lower, .. } => {
                let k = lower.len();
                let total = g.pow(k as u32);
                for idx in 0..total {
                    let mut rem = idx;
                    let u: Vec<f64> = (0..k)
                        .map(|_| {
                            let i = rem % g;
                            rem /= g;
                            i as f64 / (g - 1) as f64
                        })
                        .collect();
                    out.push(self.domain.embed(&u));
                }
            }
            Domain::Band { .. } => {
                let lons = 2 * (g - 1);
                for i in 0..g {
                    for j in 0..lons {
                        let u = [i as f64 / (g - 1) as f64, j as f64 / lons as f64];
                        out.push(self.domain.embed(&u));
                    }
                }
            }
        }
        let dims = self.domain.dims();
        out.extend(self.halton_unit(self.halton, dims).iter().map(|u| self.domain.embed(u)));
        out
    }

    /// Sample points of `ρ⁻¹(D̄) ⊂ M`.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let kind = self.kind;
        let n = self.theta;
        self.orbit_points()
            .iter()
            .flat_map(|z| {
                let base = kind.section(z);
                (0..n)
                    .map(move |j| kind.s1_flow(&base, TAU * j as f64 / n as f64))
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    /// `count` shifted-Halton points of `ρ⁻¹(D̄)`, the fiber angle being
    /// one more low-discrepancy coordinate.
    pub fn low_discrepancy_points(&self, count: usize) -> Vec<Vec<f64>> {
        let dims = self.domain.dims();
        self.halton_unit(count, dims + 1)
            .iter()
            .map(|u| {
                let z = self.domain.embed(&u[..dims]);
                self.kind.s1_flow(&self.kind.section(&z), TAU * u[dims])
            })
            .collect()
    }
}

pub(crate) fn sample_sup_raw(sampler: &DomainSampler, f: impl Fn(&[f64]) -> f64) -> SupResult {
    let pts = sampler.points();
    let mut best = SupResult {
        value: f64::NEG_INFINITY,
        at: Vec::new(),
        samples: pts.len(),
    };
    for p in &pts {
        let v = f(p);
        if v.is_nan() {
            return SupResult {
                value: f64::NAN,
                at: p.clone(),
                samples: pts.len(),
            };
        }
        if v > best.value {
            best.value = v;
            best.at = p.clone();
        }
    }
    best
}

/// Maximum of `f` over the sample set (NaN if `f` is NaN anywhere).
pub fn sample_sup(sampler: &DomainSampler, f: impl Fn(&Point) -> f64) -> SupResult {
    let kind = sampler.kind;
    sample_sup_raw(sampler, |p| f(&Point::from_raw(kind, p)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TheoremConstants {
    pub kappa0: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub c: f64,
    pub epsilon0: f64,
    pub l0: f64,
    pub kappa0_at: Vec<f64>,
    /// `(ε, point)` attaining `κ₁`.
    pub kappa1_at: (f64, Vec<f64>),
    /// `(ε, point)` attaining `κ₂`.
    pub kappa2_at: (f64, Vec<f64>),
    pub eps_grid: Vec<f64>,
    pub samples: usize,
}

/// Everything `compute_constants` needs.
#[derive(Clone, Debug)]
pub struct ConstantsProblem<'a> {
    pub model: &'a ManifoldModel,
    pub x0: &'a VectorField,
    pub x1: &'a VectorField,
    pub z: &'a VectorField,
    /// Samples of `N̄`.
    pub sampler: &'a DomainSampler,
    /// Samples of `N₀`.
    pub sampler0: &'a DomainSampler,
    pub eps0: f64,
    pub l0: f64,
    pub quad: &'a QuadratureRule,
}

/// `ε₀ 2^{−j/2}`, `j = 0..7`.
pub fn kappa_eps_grid(eps0: f64) -> Vec<f64> {
    (0..8).map(|j| eps0 * 0.5f64.powf(j as f64 / 2.0)).collect()
}

pub fn compute_constants(pb: &ConstantsProblem<'_>) -> Result<TheoremConstants> {
    let kind = pb.model.kind;
    if !(pb.eps0 > 0.0 && pb.l0 > 0.0) {
        return Err(Error::Domain("eps0 and L0 must be positive".into()));
    }
    let k0 = sample_sup_raw(pb.sampler0, |p| norm(&pb.z.eval(p)));
    let avg_hor = average(pb.quad, pb.x1).horizontal();
    let pts = pb.sampler.points();
    let grad_avg: Vec<f64> = pts.iter().map(|p| nabla_op_norm_raw(kind, &avg_hor, p)).collect();

    let eps_grid = kappa_eps_grid(pb.eps0);
    let (mut k1, mut k1_at) = (f64::NEG_INFINITY, (0.0, Vec::new()));
    let (mut k2, mut k2_at) = (f64::NEG_INFINITY, (0.0, Vec::new()));
    for &eps in &eps_grid {
        let r_hor = remainder_field(pb.model, pb.x0, pb.x1, pb.z, eps, pb.quad)?.horizontal();
        for (p, ga) in pts.iter().zip(&grad_avg) {
            let v1 = ga + eps * nabla_op_norm_raw(kind, &r_hor, p);
            let v2 = norm(&r_hor.eval(p));
            if !(v1.is_finite() && v2.is_finite()) {
                return Err(Error::NonFinite { t: eps });
            }
            if v1 > k1 {
                k1 = v1;
                k1_at = (eps, p.to_vec());
            }
            if v2 > k2 {
                k2 = v2;
                k2_at = (eps, p.to_vec());
            }
        }
    }
    if !k0.value.is_finite() {
        return Err(Error::NonFinite { t: 0.0 });
    }
    let (k0v, k1, k2) = (k0.value.max(0.0), k1.max(0.0), k2.max(0.0));
    Ok(TheoremConstants {
        kappa0: k0v,
        kappa1: k1,
        kappa2: k2,
        c: constant_c(k0v, k1, k2, pb.l0),
        epsilon0: pb.eps0,
        l0: pb.l0,
        kappa0_at: k0.at,
        kappa1_at: k1_at,
        kappa2_at: k2_at,
        eps_grid,
        samples: pts.len(),
    })
}

type FamilyFn = dyn Fn(f64) -> TimeField + Send + Sync;
type CurveFn = dyn Fn(f64) -> Result<Vec<f64>> + Send + Sync;

/// A surface `γ(t, s) = Fl_{X_s}^t(β(s))`, `s ∈ [0, 1]`.
#[derive(Clone)]
pub struct SurfaceFamily {
    pub kind: ModelKind,
    family: Arc<FamilyFn>,
    beta: Arc<CurveFn>,
    affine: bool,
}

impl fmt::Debug for SurfaceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SurfaceFamily").field("kind", &self.kind).finish_non_exhaustive()
    }
}

impl SurfaceFamily {
    pub fn new<F, B>(kind: ModelKind, family: F, beta: B) -> Self
    where
        F: Fn(f64) -> TimeField + Send + Sync + 'static,
        B: Fn(f64) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        Self {
            kind,
            family: Arc::new(family),
            beta: Arc::new(beta),
            affine: false,
        }
    }

    /// Declares `X_s = X₀ + s(X₁ − X₀)`. Then `s ↦ ‖∇X_s‖` is convex and
    /// its sup over `[0, 1]` is attained at an endpoint.
    pub fn affine(mut self) -> Self {
        self.affine = true;
        self
    }

    pub fn field(&self, s: f64) -> TimeField {
        (self.family)(s)
    }

    pub fn beta(&self, s: f64) -> Result<Vec<f64>> {
        (self.beta)(s)
    }
}

#[derive(Clone, Debug)]
pub struct SurfaceSweep {
    pub times: Vec<f64>,
    pub lengths: Vec<f64>,
    pub bounds: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
    /// Times at which `L(t)` exceeds the bound.
    pub violations: Vec<f64>,
    /// `γ(t, 0)` and `γ(t, 1)` on the time grid.
    pub edge0: Vec<Vec<f64>>,
    pub edge1: Vec<Vec<f64>>,
}

impl SurfaceSweep {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Offset in `s` for difference quotients along the family.
const S_STEP: f64 = 1e-5;

/// Builds the surface on an `n_t × (n_s + 1)` grid, measures the `s`-curve
/// lengths by Simpson's rule, samples `C₁ = sup‖∇X_s‖` (at each grid point,
/// over `s ∈ {0, s_j, 1}`, or `{0, 1}` for affine families) and
/// `C₂ = sup‖dX_s/ds‖`, and compares
/// `L(t)` with the Gronwall envelope (relative slack `1e-8`).
pub fn surface_sweep(
    fam: &SurfaceFamily,
    t_end: f64,
    n_s: usize,
    n_t: usize,
    opts: &SolverOptions,
) -> Result<SurfaceSweep> {
    let kind = fam.kind;
    let n = kind.dim();
    let n_s = (n_s.max(2) + 1) & !1;
    let n_t = n_t.max(2);
    let ss: Vec<f64> = (0..=n_s).map(|j| j as f64 / n_s as f64).collect();
    let times: Vec<f64> = (0..n_t).map(|i| t_end * i as f64 / (n_t - 1) as f64).collect();

    let mut speed = vec![vec![0.0; n_s + 1]; n_t];
    let mut points = vec![vec![Vec::new(); n_s + 1]; n_t];
    for (j, &s) in ss.iter().enumerate() {
        let fields = [fam.field(s), fam.field(s + S_STEP), fam.field(s - S_STEP)];
        let mut y0 = fam.beta(s)?;
        y0.extend(fam.beta(s + S_STEP)?);
        y0.extend(fam.beta(s - S_STEP)?);
        let rhs = move |t: f64, y: &[f64]| {
            let mut out = Vec::with_capacity(3 * n);
            for (b, f) in fields.iter().enumerate() {
                out.extend(f.eval(t, &y[b * n..(b + 1) * n]));
            }
            out
        };
        let traj = ode::solve(rhs, projector(kind, 3), 0.0, &y0, t_end, opts)?;
        for (i, &t) in times.iter().enumerate() {
            let y = traj.state(t);
            let p = kind.normalized(&y[..n]);
            let mut d: Vec<f64> = (0..n).map(|k| (y[n + k] - y[2 * n + k]) / (2.0 * S_STEP)).collect();
            kind.tangent_project(&p, &mut d);
            speed[i][j] = norm(&d);
            points[i][j] = p;
        }
    }
    let h = 1.0 / n_s as f64;
    let lengths: Vec<f64> = speed
        .iter()
        .map(|row| {
            let mut acc = row[0] + row[n_s];
            for (j, v) in row.iter().enumerate().take(n_s).skip(1) {
                acc += if j % 2 == 1 { 4.0 } else { 2.0 } * v;
            }
            acc * h / 3.0
        })
        .collect();

    let (mut c1, mut c2) = (0.0f64, 0.0f64);
    for (i, &t) in times.iter().enumerate() {
        for (j, &s) in ss.iter().enumerate() {
            let p = &points[i][j];
            let probe: &[f64] = if fam.affine { &[0.0, 1.0] } else { &[0.0, s, 1.0] };
            for &s2 in probe {
                let x = fam.field(s2).at_time(t);
                c1 = c1.max(nabla_op_norm_raw(kind, &x, p));
            }
            let a = fam.field(s + S_STEP).eval(t, p);
            let b = fam.field(s - S_STEP).eval(t, p);
            let d: Vec<f64> = a.iter().zip(&b).map(|(u, v)| (u - v) / (2.0 * S_STEP)).collect();
            c2 = c2.max(norm(&d));
        }
    }
    if !(c1.is_finite() && c2.is_finite()) {
        return Err(Error::NonFinite { t: t_end });
    }
    let edge0 = points.iter().map(|row| row[0].clone()).collect();
    let edge1 = points.iter().map(|row| row[n_s].clone()).collect();
    let l0 = lengths[0];
    let bounds: Vec<f64> = times.iter().map(|&t| envelope(c1, c2, l0, t)).collect();
    let violations = times
        .iter()
        .zip(lengths.iter().zip(&bounds))
        .filter(|(_, (l, b))| **l > **b * (1.0 + 1e-8) + 1e-10)
        .map(|(t, _)| *t)
        .collect();
    Ok(SurfaceSweep {
        times,
        lengths,
        bounds,
        c1,
        c2,
        violations,
        edge0,
        edge1,
    })
}

/// Composite Simpson quadrature (re-exported for curve lengths).
pub fn simpson_rule(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    simpson(f, a, b, n)
}
