#![allow(dead_code)]

use std::path::PathBuf;

use s1avg::vfdsl::{parse_config, SystemConfig};

/// The one-frequency system with coarse samplers and a two-point sweep.
pub const SMALL: &str = r#"
name = "small"

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

[domain0]
lower = [0.0]
upper = [1.6]

[sweep]
eps = [0.1, 0.05]

[numerics]
nodes = 32
tol = 1e-10
seed = 3
grid = 3
halton = 2
theta = 2
"#;

/// The planar adiabatic system with coarse samplers.
pub const SMALL_ADIABATIC: &str = r#"
name = "small-adiabatic"

[model]
kind = "trivial"
k = 2

[system]
omega = "1 + 0.25*(x1^2 + x2^2)"
x1 = ["0", "-x2 + sin(phi)", "x1 + cos(phi)*x1"]
j_orbit = "x1^2 + x2^2"
m0 = [0.0, 1.0, 0.0]
L0 = 1.0

[domain]
lower = [-1.6, -1.6]
upper = [1.6, 1.6]

[domain0]
lower = [-1.3, -1.3]
upper = [1.3, 1.3]

[sweep]
eps = [0.1, 0.05]

[numerics]
nodes = 32
tol = 1e-10
seed = 3
grid = 3
halton = 2
theta = 2
"#;

pub fn small() -> SystemConfig {
    parse_config(SMALL).unwrap()
}

/// `SMALL` with the perturbation switched off.
pub fn unperturbed() -> String {
    SMALL.replace(r#"x1 = ["cos(phi)", "sin(phi) + x1"]"#, r#"x1 = ["0", "0"]"#)
}

pub fn shipped(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.cfg"))
}

pub fn write_temp(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

pub mod strategies;
