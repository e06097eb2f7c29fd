//! End-to-end experiments: the averaging-error sweep with its triangle
//! decomposition, adiabatic drift, the Gronwall surface checks, and CSV
//! output.

mod adiabatic;
mod csv;
mod surface;
mod verify;

pub use adiabatic::{
    adiabatic_drift, adiabatic_with, check_first_integral, lipschitz_j, AdiabaticResult, AdiabaticRow,
    FIRST_INTEGRAL_SAMPLES, FIRST_INTEGRAL_TOL,
};
pub use csv::{
    adiabatic_csv, emit_csv, format_float, normal_form_csv, parse_table, sweep_csv, write_table, Table,
    ADIABATIC_HEADER, NORMAL_FORM_HEADER, VERIFY_HEADER,
};
pub use surface::{constant_family, phase_curve, shear_family, sigma_check, sigma_family, PhaseCurve, SigmaCheck};
pub use verify::{
    triangle_decomposition, verify_theorem, verify_with, Experiment, SweepResult, SweepRow, TriangleTerms,
    MIN_TIME_SAMPLES,
};
