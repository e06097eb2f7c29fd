//! Periodic averaging for perturbed vector fields on S¹-principal bundles.
//!
//! A perturbed field `X_ε = X₀ + εX₁`, where `X₀ = ωΥ` generates a free
//! S¹-action, is compared with the averaged field `⟨X₁⟩` on the orbit space.
//! The crate computes averages, homological generators and first-order
//! normal forms, the explicit constants of the `O(ε)` error estimate, and
//! runs the resulting experiments from text configurations.

pub mod averaging;
pub mod bounds;
pub mod error;
pub mod field;
pub mod flows;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod normalform;
pub mod ode;
pub mod vfdsl;

pub use error::{Error, Result};
