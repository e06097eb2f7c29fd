//! Levi-Civita connection by central differences.
//!
//! On the flat trivial bundle `∇_v X` is the directional derivative of the
//! components. On S³ it is the ambient directional derivative followed by
//! tangential projection (Gauss formula). The step is
//! `h = 1e-5 (1 + |p|)`, giving `O(h²)` truncation and roughly `1e-11`
//! relative round-off.

use nalgebra::DMatrix;

use super::{ManifoldModel, ModelKind, Point, TangentVector};
use crate::error::Result;
use crate::field::VectorField;
use crate::linalg::{axpy, dot, norm};

pub(crate) fn covariant_raw(kind: ModelKind, x: &VectorField, p: &[f64], v: &[f64]) -> Vec<f64> {
    let vn = norm(v);
    if vn == 0.0 {
        return vec![0.0; p.len()];
    }
    let h = 1e-5 * (1.0 + norm(p));
    let step = h / vn;
    let plus = x.eval(&axpy(p, step, v));
    let minus = x.eval(&axpy(p, -step, v));
    let mut d: Vec<f64> = plus
        .iter()
        .zip(&minus)
        .map(|(a, b)| (a - b) / (2.0 * step))
        .collect();
    kind.tangent_project(p, &mut d);
    d
}

/// `∇_v X` at the base point of `v`.
pub fn covariant_derivative(
    model: &ManifoldModel,
    x: &VectorField,
    v: &TangentVector,
) -> Result<TangentVector> {
    model.kind.check_model(v.base.model)?;
    model.kind.check_model(x.model())?;
    Ok(TangentVector {
        base: v.base.clone(),
        components: covariant_raw(model.kind, x, &v.base.coords, &v.components),
    })
}

/// Matrix of `v ↦ ∇_v X` in the orthonormal frame at `p`.
pub fn nabla_matrix(kind: ModelKind, x: &VectorField, p: &[f64]) -> DMatrix<f64> {
    let frame = kind.frame(p);
    let n = frame.len();
    let mut a = DMatrix::zeros(n, n);
    for (j, ej) in frame.iter().enumerate() {
        let col = covariant_raw(kind, x, p, ej);
        for (i, ei) in frame.iter().enumerate() {
            a[(i, j)] = dot(ei, &col);
        }
    }
    a
}

pub(crate) fn nabla_op_norm_raw(kind: ModelKind, x: &VectorField, p: &[f64]) -> f64 {
    let a = nabla_matrix(kind, x, p);
    a.singular_values().max()
}

/// Operator norm `‖(∇X)_m‖`.
pub fn nabla_op_norm(model: &ManifoldModel, x: &VectorField, m: &Point) -> Result<f64> {
    model.kind.check_model(m.model)?;
    Ok(nabla_op_norm_raw(model.kind, x, &m.coords))
}

/// `[X, Y](p) = ∇_X Y − ∇_Y X`.
pub fn lie_bracket(kind: ModelKind, x: &VectorField, y: &VectorField, p: &[f64]) -> Vec<f64> {
    let a = covariant_raw(kind, y, p, &x.eval(p));
    let b = covariant_raw(kind, x, p, &y.eval(p));
    a.iter().zip(&b).map(|(u, v)| u - v).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ManifoldModel;

    #[test]
    fn constant_field_has_zero_derivative() {
        let m = ManifoldModel::unit(ModelKind::Trivial { k: 2 });
        let x = VectorField::new(m.kind, |_| vec![1.0, -2.0, 3.0]);
        let p = Point::new(m.kind, vec![0.4, 1.0, 2.0]).unwrap();
        let v = TangentVector::new(p.clone(), vec![0.3, 0.2, -0.5]).unwrap();
        let d = covariant_derivative(&m, &x, &v).unwrap();
        assert!(norm(&d.components) < 1e-8);
        assert!(nabla_op_norm(&m, &x, &p).unwrap() < 1e-8);
    }

    #[test]
    fn x_dx_derivative_along_dx() {
        // X = x ∂x  ⇒  ∇_{∂x} X = ∂x
        let m = ManifoldModel::unit(ModelKind::Trivial { k: 1 });
        let x = VectorField::new(m.kind, |p| vec![0.0, p[1]]);
        let p = Point::new(m.kind, vec![1.0, 0.7]).unwrap();
        let v = TangentVector::new(p, vec![0.0, 1.0]).unwrap();
        let d = covariant_derivative(&m, &x, &v).unwrap();
        assert!((d.components[0]).abs() < 1e-9 && (d.components[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn scalar_jacobian_norm() {
        let m = ManifoldModel::unit(ModelKind::Trivial { k: 1 });
        let x = VectorField::new(m.kind, |p| vec![0.0, 2.0 * p[1]]);
        let p = Point::new(m.kind, vec![0.2, -1.3]).unwrap();
        assert!((nabla_op_norm(&m, &x, &p).unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn killing_field_is_skew() {
        // Υ is Killing on S³, so ∇Υ is skew-symmetric in an orthonormal frame.
        let kind = ModelKind::Hopf;
        let u = ManifoldModel::unit(kind).upsilon_field();
        let p = kind.normalized(&[0.3, -0.2, 0.5, 0.4]);
        let a = nabla_matrix(kind, &u, &p);
        let s = &a + a.transpose();
        assert!(s.norm() < 1e-8);
    }
}
