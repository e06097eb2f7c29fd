//! System configuration files.
//!
//! The format is sectioned `key = value` text (TOML syntax); expressions are
//! quoted strings. A complete example:
//!
//! ```toml
//! name = "one-frequency"
//!
//! [model]
//! kind = "trivial"       # or "hopf"
//! k = 1
//!
//! [system]
//! omega = "1 + 0.5*cos(x1)"
//! x1 = ["cos(phi)", "sin(phi) + x1"]
//! m0 = [0.0, 0.5]
//! L0 = 1.0
//!
//! [domain]               # D, in orbit coordinates
//! lower = [-1.0]
//! upper = [2.5]
//!
//! [domain0]              # D0 (defaults to D)
//! lower = [0.0]
//! upper = [1.6]
//!
//! [sweep]
//! eps_min = 1e-3
//! eps_max = 1e-1
//! eps_count = 8
//!
//! [numerics]
//! nodes = 64
//! tol = 1e-10
//! seed = 1
//! ```

use std::path::Path;

use serde::Deserialize;

use super::{parse_expr, CompiledExpr, Expr};
use crate::bounds::{Domain, DomainSampler};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::geometry::{ManifoldModel, ModelKind, Point};
use crate::linalg::norm;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    model: RawModel,
    system: RawSystem,
    domain: Option<RawDomain>,
    domain0: Option<RawDomain>,
    sweep: Option<RawSweep>,
    numerics: Option<RawNumerics>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    kind: String,
    k: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    omega: String,
    x0: Option<Vec<String>>,
    x1: Vec<String>,
    j_orbit: Option<String>,
    m0: Vec<f64>,
    #[serde(rename = "L0")]
    l0: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    lower: Option<Vec<f64>>,
    upper: Option<Vec<f64>>,
    w_min: Option<f64>,
    w_max: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    eps: Option<Vec<f64>>,
    eps_min: Option<f64>,
    eps_max: Option<f64>,
    eps_count: Option<usize>,
    eps0: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNumerics {
    nodes: Option<usize>,
    tol: Option<f64>,
    seed: Option<u64>,
    grid: Option<usize>,
    halton: Option<usize>,
    theta: Option<usize>,
}

/// Values of ε to sweep, in ascending order.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub eps: Vec<f64>,
}

impl SweepSpec {
    /// `count` points geometric between `min` and `max`.
    pub fn geometric(min: f64, max: f64, count: usize) -> Result<Self> {
        if !(min > 0.0 && max >= min && count >= 1) {
            return Err(Error::config(
                "sweep",
                format!("need 0 < eps_min <= eps_max and eps_count >= 1 (got {min}, {max}, {count})"),
            ));
        }
        let eps = if count == 1 {
            vec![max]
        } else {
            let r = (min.ln() - max.ln()) / (count - 1) as f64;
            let mut v: Vec<f64> = (0..count).map(|i| (max.ln() + r * i as f64).exp()).collect();
            v[0] = max;
            v[count - 1] = min;
            v.reverse();
            v
        };
        Ok(Self { eps })
    }
}

#[derive(Clone, Debug)]
pub struct SystemConfig {
    pub name: String,
    pub kind: ModelKind,
    pub omega: Expr,
    pub x0: Option<Vec<Expr>>,
    pub x1: Vec<Expr>,
    pub j_orbit: Option<Expr>,
    pub m0: Vec<f64>,
    pub l0: f64,
    /// `D`, the working domain in the orbit space.
    pub domain: Domain,
    /// `D₀ ⊂ D`.
    pub domain0: Domain,
    pub sweep: SweepSpec,
    pub eps0: f64,
    pub nodes: usize,
    pub tol: f64,
    pub seed: u64,
    pub grid: usize,
    pub halton: usize,
    pub theta: usize,
    omega_field: ScalarField,
    x0_field: VectorField,
    x1_field: VectorField,
    j_field: Option<ScalarField>,
}

/// Variable names of a model, in coordinate order.
pub fn model_variables(kind: ModelKind) -> Vec<String> {
    match kind {
        ModelKind::Trivial { k } => std::iter::once("phi".to_string())
            .chain((1..=k).map(|i| format!("x{i}")))
            .collect(),
        ModelKind::Hopf => ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect(),
    }
}

fn compile_raw(kind: ModelKind, e: &Expr) -> std::result::Result<CompiledExpr, super::DslError> {
    let vars = model_variables(kind);
    let refs: Vec<&str> = vars.iter().map(|s| s.as_str()).collect();
    CompiledExpr::new(e, &refs)
}

fn compile(kind: ModelKind, e: &Expr, field: &str) -> Result<CompiledExpr> {
    compile_raw(kind, e).map_err(|err| Error::config(field, err.to_string()))
}

fn parse(src: &str, field: &str) -> Result<Expr> {
    parse_expr(src).map_err(|err| Error::config(field, err.to_string()))
}

/// Vector field whose components are the given expressions.
pub fn vector_field(kind: ModelKind, exprs: &[Expr]) -> Result<VectorField> {
    if exprs.len() != kind.dim() {
        return Err(Error::Dimension {
            expected: kind.dim(),
            got: exprs.len(),
        });
    }
    let comps = exprs
        .iter()
        .map(|e| compile_raw(kind, e).map_err(Error::from))
        .collect::<Result<Vec<_>>>()?;
    Ok(VectorField::new(kind, move |p| comps.iter().map(|c| c.eval(p)).collect()))
}

pub fn scalar_field(kind: ModelKind, e: &Expr) -> Result<ScalarField> {
    let c = compile_raw(kind, e)?;
    Ok(ScalarField::new(kind, move |p| c.eval(p)))
}

fn domain_from(kind: ModelKind, raw: Option<&RawDomain>, field: &str) -> Result<Domain> {
    match kind {
        ModelKind::Trivial { k } => {
            let raw = raw.ok_or_else(|| Error::config(field, "a box with `lower` and `upper` is required"))?;
            if raw.w_min.is_some() || raw.w_max.is_some() {
                return Err(Error::config(field, "`w_min`/`w_max` apply to the Hopf model only"));
            }
            let (lo, hi) = match (&raw.lower, &raw.upper) {
                (Some(l), Some(u)) => (l.clone(), u.clone()),
                _ => return Err(Error::config(field, "both `lower` and `upper` are required")),
            };
            if lo.len() != k || hi.len() != k {
                return Err(Error::config(
                    field,
                    format!("dimension mismatch: box needs {k} bounds, got {} and {}", lo.len(), hi.len()),
                ));
            }
            if lo.iter().zip(&hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
                return Err(Error::config(field, "need finite lower < upper on every axis"));
            }
            Ok(Domain::Box { lower: lo, upper: hi })
        }
        ModelKind::Hopf => {
            let Some(raw) = raw else {
                return Ok(Domain::whole_sphere());
            };
            if raw.lower.is_some() || raw.upper.is_some() {
                return Err(Error::config(field, "Hopf domains are bands given by `w_min`/`w_max`"));
            }
            let w_min = raw.w_min.unwrap_or(-0.5);
            let w_max = raw.w_max.unwrap_or(0.5);
            if !(-0.5..=0.5).contains(&w_min) || !(-0.5..=0.5).contains(&w_max) || w_min >= w_max {
                return Err(Error::config(field, "need -0.5 <= w_min < w_max <= 0.5"));
            }
            Ok(Domain::Band { w_min, w_max })
        }
    }
}

fn check_positive(x: f64, field: &str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be positive and finite, got {x}")))
    }
}

pub fn parse_config(text: &str) -> Result<SystemConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::config("<file>", e.message().to_string()))?;
    let kind = match (raw.model.kind.as_str(), raw.model.k) {
        ("trivial", Some(k)) if k >= 1 => ModelKind::Trivial { k },
        ("trivial", _) => return Err(Error::config("model.k", "trivial bundles need k >= 1")),
        ("hopf", None) => ModelKind::Hopf,
        ("hopf", Some(_)) => return Err(Error::config("model.k", "not used by the Hopf model")),
        (other, _) => {
            return Err(Error::config(
                "model.kind",
                format!("unknown model `{other}` (expected `trivial` or `hopf`)"),
            ))
        }
    };
    let dim = kind.dim();
    let sys = &raw.system;

    let omega = parse(&sys.omega, "system.omega")?;
    compile(kind, &omega, "system.omega")?;
    if sys.x1.len() != dim {
        return Err(Error::config(
            "system.x1",
            format!("dimension mismatch: {kind} needs {dim} components, got {}", sys.x1.len()),
        ));
    }
    let x1 = parse_list(kind, &sys.x1, "system.x1")?;
    let x0 = match &sys.x0 {
        Some(list) if list.len() != dim => {
            return Err(Error::config(
                "system.x0",
                format!("dimension mismatch: {kind} needs {dim} components, got {}", list.len()),
            ))
        }
        Some(list) => Some(parse_list(kind, list, "system.x0")?),
        None => None,
    };
    let j_orbit = match &sys.j_orbit {
        Some(s) => {
            let e = parse(s, "system.j_orbit")?;
            compile(kind, &e, "system.j_orbit")?;
            Some(e)
        }
        None => None,
    };

    if sys.m0.len() != dim {
        return Err(Error::config(
            "system.m0",
            format!("dimension mismatch: {kind} needs {dim} coordinates, got {}", sys.m0.len()),
        ));
    }
    let m0 = Point::new(kind, sys.m0.clone()).map_err(|e| Error::config("system.m0", e.to_string()))?;
    check_positive(sys.l0, "system.L0")?;

    let domain = domain_from(kind, raw.domain.as_ref(), "domain")?;
    let domain0 = match raw.domain0.as_ref() {
        Some(d) => domain_from(kind, Some(d), "domain0")?,
        None => domain.clone(),
    };
    if !domain.contains_domain(&domain0) {
        return Err(Error::config("domain0", "D0 must be contained in D"));
    }
    if !domain0.contains(&kind.project(&m0.coords), 0.0) {
        return Err(Error::config("system.m0", "rho(m0) must lie in D0"));
    }

    let sw = raw.sweep.unwrap_or_default();
    let sweep = match &sw.eps {
        Some(list) => {
            if list.is_empty() {
                return Err(Error::config("sweep.eps", "empty list"));
            }
            for &e in list {
                check_positive(e, "sweep.eps")?;
            }
            let mut eps = list.clone();
            eps.sort_by(f64::total_cmp);
            eps.dedup();
            SweepSpec { eps }
        }
        None => SweepSpec::geometric(
            sw.eps_min.unwrap_or(1e-3),
            sw.eps_max.unwrap_or(1e-1),
            sw.eps_count.unwrap_or(8),
        )?,
    };
    let eps_top = *sweep.eps.last().unwrap();
    let eps0 = sw.eps0.unwrap_or(eps_top);
    check_positive(eps0, "sweep.eps0")?;
    if eps0 < eps_top {
        return Err(Error::config("sweep.eps0", "must be at least the largest swept epsilon"));
    }

    let num = raw.numerics.unwrap_or_default();
    let nodes = num.nodes.unwrap_or(64);
    if nodes < 8 {
        return Err(Error::config("numerics.nodes", "need at least 8 quadrature nodes"));
    }
    let tol = num.tol.unwrap_or(1e-10);
    check_positive(tol, "numerics.tol")?;
    let grid = num.grid.unwrap_or(9);
    if grid < 2 {
        return Err(Error::config("numerics.grid", "need at least 2 grid points per axis"));
    }
    let theta = num.theta.unwrap_or(16);
    if theta < 1 {
        return Err(Error::config("numerics.theta", "need at least one fiber sample"));
    }

    let omega_field = scalar_field(kind, &omega)?;
    let x1_field = vector_field(kind, &x1)?;
    let j_field = j_orbit.as_ref().map(|e| scalar_field(kind, e)).transpose()?;
    let model = ManifoldModel::new(kind, omega_field.clone())?;
    let x0_field = match &x0 {
        Some(list) => vector_field(kind, list)?,
        None => model.x0(),
    };

    let cfg = SystemConfig {
        name: raw.name.unwrap_or_else(|| "system".into()),
        kind,
        omega,
        x0,
        x1,
        j_orbit,
        m0: m0.coords,
        l0: sys.l0,
        domain,
        domain0,
        sweep,
        eps0,
        nodes,
        tol,
        seed: num.seed.unwrap_or(1),
        grid,
        halton: num.halton.unwrap_or(64),
        theta,
        omega_field,
        x0_field,
        x1_field,
        j_field,
    };
    cfg.check_omega()?;
    Ok(cfg)
}

fn parse_list(kind: ModelKind, srcs: &[String], field: &str) -> Result<Vec<Expr>> {
    srcs.iter()
        .enumerate()
        .map(|(i, s)| {
            let name = format!("{field}[{i}]");
            let e = parse(s, &name)?;
            compile(kind, &e, &name)?;
            Ok(e)
        })
        .collect()
}

pub fn load_config(path: impl AsRef<Path>) -> Result<SystemConfig> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_config(&text)
}

/// Number of domain samples used to validate `ω`.
const OMEGA_SAMPLES: usize = 1000;

impl SystemConfig {
    /// `ω > 0`, S¹-invariance of `ω` and, if given, `X₀ = ω Υ` on
    /// `OMEGA_SAMPLES` points of `ρ⁻¹(D)`.
    fn check_omega(&self) -> Result<()> {
        let kind = self.kind;
        let pts = self.sampler().low_discrepancy_points(OMEGA_SAMPLES);
        for p in &pts {
            let w = self.omega_field.eval(p);
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::config(
                    "system.omega",
                    format!("omega = {w} is not positive at sample {p:?}"),
                ));
            }
            for theta in [0.7, 2.9, 4.4] {
                let w2 = self.omega_field.eval(&kind.s1_flow(p, theta));
                if (w2 - w).abs() > 1e-10 * (1.0 + w.abs()) {
                    return Err(Error::config(
                        "system.omega",
                        format!("omega is not S1-invariant at sample {p:?} (defect {:e})", (w2 - w).abs()),
                    ));
                }
            }
            if self.x0.is_some() {
                let want: Vec<f64> = kind.upsilon(p).iter().map(|u| u * w).collect();
                let got = self.x0_field.eval(p);
                let d = norm(&crate::linalg::sub(&want, &got));
                if d > 1e-9 * (1.0 + norm(&want)) {
                    return Err(Error::config(
                        "system.x0",
                        format!("x0 must equal omega * Upsilon (defect {d:e} at sample {p:?})"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn variables(&self) -> Vec<String> {
        model_variables(self.kind)
    }

    pub fn manifold(&self) -> ManifoldModel {
        ManifoldModel {
            kind: self.kind,
            omega: self.omega_field.clone(),
        }
    }

    pub fn x0_field(&self) -> VectorField {
        self.x0_field.clone()
    }

    pub fn x1_field(&self) -> VectorField {
        self.x1_field.clone()
    }

    /// `J = J_O ∘ ρ`, when configured.
    pub fn j_field(&self) -> Option<ScalarField> {
        self.j_field.clone()
    }

    pub fn m0_point(&self) -> Point {
        Point::from_raw(self.kind, &self.m0)
    }

    /// Sampler of `N̄ = ρ⁻¹(D̄)`.
    pub fn sampler(&self) -> DomainSampler {
        DomainSampler::new(self.kind, self.domain.clone(), self.grid, self.halton, self.theta, self.seed)
    }

    /// Sampler of `N₀ = ρ⁻¹(D₀)`.
    pub fn sampler0(&self) -> DomainSampler {
        DomainSampler::new(self.kind, self.domain0.clone(), self.grid, self.halton, self.theta, self.seed)
    }

    /// Replaces the perturbation field, keeping everything else.
    pub fn with_x1(&self, x1: Vec<Expr>) -> Result<Self> {
        if x1.len() != self.kind.dim() {
            return Err(Error::Dimension {
                expected: self.kind.dim(),
                got: x1.len(),
            });
        }
        let mut out = self.clone();
        out.x1_field = vector_field(self.kind, &x1)?;
        out.x1 = x1;
        Ok(out)
    }

    /// Command-line overrides of the sweep and numerics.
    pub fn apply_overrides(
        &mut self,
        eps_min: Option<f64>,
        eps_max: Option<f64>,
        eps_count: Option<usize>,
        nodes: Option<usize>,
        tol: Option<f64>,
        seed: Option<u64>,
    ) -> Result<()> {
        if eps_min.is_some() || eps_max.is_some() || eps_count.is_some() {
            let cur = &self.sweep.eps;
            self.sweep = SweepSpec::geometric(
                eps_min.unwrap_or(cur[0]),
                eps_max.unwrap_or(*cur.last().unwrap()),
                eps_count.unwrap_or(cur.len()),
            )?;
            self.eps0 = self.eps0.max(*self.sweep.eps.last().unwrap());
        }
        if let Some(n) = nodes {
            if n < 8 {
                return Err(Error::config("--nodes", "need at least 8 quadrature nodes"));
            }
            self.nodes = n;
        }
        if let Some(t) = tol {
            check_positive(t, "--tol")?;
            self.tol = t;
        }
        if let Some(s) = seed {
            self.seed = s;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_FREQ: &str = r#"
name = "t"
[model]
kind = "trivial"
k = 1
[system]
omega = "1 + 0.5*cos(x1)"
x1 = ["cos(phi)", "sin(phi) + x1"]
m0 = [0.0, 0.5]
L0 = 1.0
[domain]
lower = [-1.0]
upper = [2.5]
"#;

    #[test]
    fn loads_and_defaults() {
        let c = parse_config(ONE_FREQ).unwrap();
        assert_eq!(c.kind, ModelKind::Trivial { k: 1 });
        assert_eq!(c.sweep.eps.len(), 8);
        assert!((c.sweep.eps[0] - 1e-3).abs() < 1e-18 && (c.sweep.eps[7] - 0.1).abs() < 1e-17);
        assert_eq!(c.nodes, 64);
        assert_eq!(c.x1_field().eval(&[0.0, 2.0]), vec![1.0, 2.0]);
    }

    #[test]
    fn wrong_component_count() {
        let text = ONE_FREQ
            .replace("k = 1", "k = 3")
            .replace("m0 = [0.0, 0.5]", "m0 = [0.0, 0.5, 0.0, 0.0]");
        match parse_config(&text) {
            Err(Error::Config { field, message }) => {
                assert_eq!(field, "system.x1");
                assert!(message.contains("dimension"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nonpositive_omega() {
        let text = ONE_FREQ
            .replace("1 + 0.5*cos(x1)", "cos(x1)")
            .replace("lower = [-1.0]", "lower = [0.0]")
            .replace("upper = [2.5]", "upper = [3.141592653589793]");
        match parse_config(&text) {
            Err(Error::Config { field, message }) => {
                assert_eq!(field, "system.omega");
                assert!(message.contains("not positive"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn noninvariant_omega_and_bad_names() {
        let text = ONE_FREQ.replace("1 + 0.5*cos(x1)", "2 + cos(phi)");
        assert!(matches!(parse_config(&text), Err(Error::Config { field, .. }) if field == "system.omega"));
        let text = ONE_FREQ.replace("sin(phi) + x1", "sin(phi) + x2");
        assert!(matches!(parse_config(&text), Err(Error::Config { field, .. }) if field == "system.x1[1]"));
        let text = ONE_FREQ.replace("[domain]", "[domian]");
        assert!(parse_config(&text).is_err());
    }
}
