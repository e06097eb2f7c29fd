//! Vector and scalar fields as shareable closures over coordinates.
//!
//! Fields on the Hopf model are extended radially off the unit sphere: the
//! argument is normalized before evaluation and the result is projected onto
//! the tangent space. Finite differences taken in ambient coordinates then
//! see a smooth extension whose tangential derivatives are those of the
//! field on S³.

use std::fmt;
use std::sync::Arc;

use crate::geometry::{ModelKind, Point, TangentVector};

type RawVector = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type RawScalar = dyn Fn(&[f64]) -> f64 + Send + Sync;
type RawTimeVector = dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync;

#[derive(Clone)]
pub struct VectorField {
    model: ModelKind,
    eval: Arc<RawVector>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("model", &self.model)
            .finish_non_exhaustive()
    }
}

impl VectorField {
    /// Wraps a raw coordinate closure, enforcing tangency on curved models.
    pub fn new<F>(model: ModelKind, raw: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        match model {
            ModelKind::Trivial { .. } => Self::from_tangent(model, raw),
            ModelKind::Hopf => Self::from_tangent(model, move |p: &[f64]| {
                let q = model.normalized(p);
                let mut v = raw(&q);
                model.tangent_project(&q, &mut v);
                v
            }),
        }
    }

    /// Wraps a closure already known to return tangent vectors (used by the
    /// combinators, which preserve tangency).
    pub(crate) fn from_tangent<F>(model: ModelKind, raw: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            model,
            eval: Arc::new(raw),
        }
    }

    pub fn zero(model: ModelKind) -> Self {
        let n = model.dim();
        Self::from_tangent(model, move |_| vec![0.0; n])
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    #[inline]
    pub fn eval(&self, p: &[f64]) -> Vec<f64> {
        (self.eval)(p)
    }

    pub fn at(&self, p: &Point) -> TangentVector {
        TangentVector {
            base: p.clone(),
            components: self.eval(&p.coords),
        }
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        let (a, b) = (self.clone(), other.clone());
        Self::from_tangent(self.model, move |p| {
            let mut u = a.eval(p);
            for (x, y) in u.iter_mut().zip(b.eval(p)) {
                *x += y;
            }
            u
        })
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> VectorField {
        let a = self.clone();
        Self::from_tangent(self.model, move |p| {
            let mut u = a.eval(p);
            u.iter_mut().for_each(|x| *x *= s);
            u
        })
    }

    /// Pointwise product with a scalar field.
    pub fn mul_scalar(&self, f: &ScalarField) -> VectorField {
        let (a, f) = (self.clone(), f.clone());
        Self::from_tangent(self.model, move |p| {
            let s = f.eval(p);
            let mut u = a.eval(p);
            u.iter_mut().for_each(|x| *x *= s);
            u
        })
    }

    /// `self + s * other`
    pub fn add_scaled(&self, s: f64, other: &VectorField) -> VectorField {
        if s == 0.0 {
            return self.clone();
        }
        self.add(&other.scale(s))
    }

    /// Horizontal part, pointwise.
    pub fn horizontal(&self) -> VectorField {
        let (a, model) = (self.clone(), self.model);
        Self::from_tangent(model, move |p| {
            let v = a.eval(p);
            model.split(p, &v).0
        })
    }

    pub fn as_time_field(&self) -> TimeField {
        let a = self.clone();
        TimeField::new(self.model, move |_, p| a.eval(p))
    }
}

#[derive(Clone)]
pub struct ScalarField {
    model: ModelKind,
    eval: Arc<RawScalar>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("model", &self.model)
            .finish_non_exhaustive()
    }
}

impl ScalarField {
    pub fn new<F>(model: ModelKind, raw: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        match model {
            ModelKind::Trivial { .. } => Self::from_raw(model, raw),
            ModelKind::Hopf => Self::from_raw(model, move |p: &[f64]| raw(&model.normalized(p))),
        }
    }

    pub(crate) fn from_raw<F>(model: ModelKind, raw: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            model,
            eval: Arc::new(raw),
        }
    }

    pub fn constant(model: ModelKind, c: f64) -> Self {
        Self::from_raw(model, move |_| c)
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    #[inline]
    pub fn eval(&self, p: &[f64]) -> f64 {
        (self.eval)(p)
    }

    pub fn compose(&self, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> ScalarField {
        let a = self.clone();
        Self::from_raw(self.model, move |p| g(a.eval(p)))
    }

    pub fn mul(&self, other: &ScalarField) -> ScalarField {
        let (a, b) = (self.clone(), other.clone());
        Self::from_raw(self.model, move |p| a.eval(p) * b.eval(p))
    }

    /// Directional derivative `L_X f` by central differences along `X`,
    /// step `1e-6 (1 + |p|) / |X(p)|`.
    pub fn lie_derivative(&self, x: &VectorField) -> ScalarField {
        let (f, x) = (self.clone(), x.clone());
        Self::from_raw(self.model, move |p| directional_derivative(&f, p, &x.eval(p)))
    }
}

pub(crate) fn directional_derivative(f: &ScalarField, p: &[f64], v: &[f64]) -> f64 {
    let vn = crate::linalg::norm(v);
    if vn == 0.0 {
        return 0.0;
    }
    let h = 1e-6 * (1.0 + crate::linalg::norm(p)) / vn;
    let plus = crate::linalg::axpy(p, h, v);
    let minus = crate::linalg::axpy(p, -h, v);
    (f.eval(&plus) - f.eval(&minus)) / (2.0 * h)
}

/// Time-dependent vector field `(t, p) -> X_t(p)`.
#[derive(Clone)]
pub struct TimeField {
    model: ModelKind,
    eval: Arc<RawTimeVector>,
}

impl TimeField {
    pub fn new<F>(model: ModelKind, raw: F) -> Self
    where
        F: Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            model,
            eval: Arc::new(raw),
        }
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    #[inline]
    pub fn eval(&self, t: f64, p: &[f64]) -> Vec<f64> {
        (self.eval)(t, p)
    }

    /// Freezes the time argument.
    pub fn at_time(&self, t: f64) -> VectorField {
        let a = self.clone();
        VectorField::from_tangent(self.model, move |p| a.eval(t, p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hopf_fields_are_tangent() {
        let model = ModelKind::Hopf;
        let x = VectorField::new(model, |_| vec![1.0, 2.0, 3.0, 4.0]);
        let p = [0.5, 0.5, 0.5, 0.5];
        let v = x.eval(&p);
        assert!(crate::linalg::dot(&v, &p).abs() < 1e-14);
    }

    #[test]
    fn lie_derivative_of_linear_function() {
        let model = ModelKind::Trivial { k: 2 };
        let f = ScalarField::new(model, |p| 3.0 * p[1] - p[2]);
        let x = VectorField::new(model, |_| vec![7.0, 1.0, 2.0]);
        let df = f.lie_derivative(&x);
        assert!((df.eval(&[0.1, 0.4, -2.0]) - 1.0).abs() < 1e-8);
    }
}
