//! Embedded Runge–Kutta 5(4) pair of Dormand and Prince with its
//! fourth-order continuous extension between accepted steps.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// 5th-order weights minus embedded 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

// Continuous extension (Shampine) weights.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stepping {
    Adaptive,
    /// A fixed number of equal Dormand–Prince steps. The resulting map is a
    /// smooth function of the initial state, which keeps difference
    /// quotients across neighbouring trajectories free of step-selection
    /// noise.
    Fixed { steps: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_steps: usize,
    /// Any state component exceeding this magnitude aborts with `BlowUp`.
    pub blowup: f64,
    pub stepping: Stepping,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-10,
            max_step: f64::INFINITY,
            max_steps: 5_000_000,
            blowup: 1e6,
            stepping: Stepping::Adaptive,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rel_tol: tol,
            abs_tol: tol,
            ..Self::default()
        }
    }

    pub fn fixed(steps: usize) -> Self {
        Self {
            stepping: Stepping::Fixed { steps },
            ..Self::default()
        }
    }
}

/// Accepted nodes of a solution with values, slopes and interpolation
/// data; immutable once built.
#[derive(Clone, Debug)]
pub struct DenseTrajectory {
    dim: usize,
    ts: Vec<f64>,
    ys: Vec<f64>,
    fs: Vec<f64>,
    // One vector per step: `h Σ dᵢ kᵢ`.
    ds: Vec<f64>,
}

impl DenseTrajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t_start(&self) -> f64 {
        self.ts[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.ts.last().unwrap()
    }

    /// Number of accepted steps.
    pub fn steps(&self) -> usize {
        self.ts.len() - 1
    }

    pub fn times(&self) -> &[f64] {
        &self.ts
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.ys[i * self.dim..(i + 1) * self.dim]
    }

    pub fn final_state(&self) -> &[f64] {
        self.node(self.ts.len() - 1)
    }

    fn slope(&self, i: usize) -> &[f64] {
        &self.fs[i * self.dim..(i + 1) * self.dim]
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let n = self.ts.len();
        if n == 1 {
            return (0, 0.0);
        }
        let forward = self.t_end() >= self.t_start();
        let i = if forward {
            self.ts.partition_point(|&s| s <= t)
        } else {
            self.ts.partition_point(|&s| s >= t)
        };
        let i = i.clamp(1, n - 1) - 1;
        let h = self.ts[i + 1] - self.ts[i];
        let s = ((t - self.ts[i]) / h).clamp(0.0, 1.0);
        (i, s)
    }

    /// State at `t`, clamped to the integration interval.
    pub fn state(&self, t: f64) -> Vec<f64> {
        if self.ts.len() == 1 {
            return self.node(0).to_vec();
        }
        let (i, s) = self.locate(t);
        let h = self.ts[i + 1] - self.ts[i];
        let (y0, y1) = (self.node(i), self.node(i + 1));
        let (f0, f1) = (self.slope(i), self.slope(i + 1));
        let d = &self.ds[i * self.dim..(i + 1) * self.dim];
        let s1 = 1.0 - s;
        (0..self.dim)
            .map(|k| {
                let r2 = y1[k] - y0[k];
                let r3 = h * f0[k] - r2;
                let r4 = r2 - h * f1[k] - r3;
                y0[k] + s * (r2 + s1 * (r3 + s * (r4 + s1 * d[k])))
            })
            .collect()
    }

    /// Time derivative of the interpolant at `t`.
    pub fn derivative(&self, t: f64) -> Vec<f64> {
        if self.ts.len() == 1 {
            return self.slope(0).to_vec();
        }
        let (i, s) = self.locate(t);
        let h = self.ts[i + 1] - self.ts[i];
        let (y0, y1) = (self.node(i), self.node(i + 1));
        let (f0, f1) = (self.slope(i), self.slope(i + 1));
        let d = &self.ds[i * self.dim..(i + 1) * self.dim];
        let s1 = 1.0 - s;
        (0..self.dim)
            .map(|k| {
                let r2 = y1[k] - y0[k];
                let r3 = h * f0[k] - r2;
                let r4 = r2 - h * f1[k] - r3;
                (r2 + (1.0 - 2.0 * s) * r3 + s * (2.0 - 3.0 * s) * r4 + 2.0 * s * s1 * (1.0 - 2.0 * s) * d[k]) / h
            })
            .collect()
    }
}

fn check_finite(t: f64, k: &[f64]) -> Result<()> {
    if k.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { t })
    }
}

fn stage_state(y: &[f64], h: f64, row: &[f64; 6], ks: &[Vec<f64>]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (j, kj) in ks.iter().enumerate() {
        let a = row[j];
        if a != 0.0 {
            for (o, kv) in out.iter_mut().zip(kj) {
                *o += h * a * kv;
            }
        }
    }
    out
}

/// One Dormand–Prince step from `(t, y)` with first stage `f0`.
/// Returns the 5th-order state, its slope (FSAL), the error vector and the
/// dense-output vector.
fn dp_step<F>(rhs: &F, t: f64, y: &[f64], f0: &[f64], h: f64) -> Result<Step>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let mut ks: Vec<Vec<f64>> = Vec::with_capacity(7);
    ks.push(f0.to_vec());
    for s in 1..7 {
        let ys = stage_state(y, h, &A[s], &ks);
        let k = rhs(t + C[s] * h, &ys);
        check_finite(t + C[s] * h, &k)?;
        ks.push(k);
    }
    // Stage 7 is evaluated at the 5th-order solution.
    let y5 = stage_state(y, h, &A[6], &ks[..6]);
    let err: Vec<f64> = (0..y.len())
        .map(|i| h * E.iter().zip(&ks).map(|(e, k)| e * k[i]).sum::<f64>())
        .collect();
    let dense: Vec<f64> = (0..y.len())
        .map(|i| h * D.iter().zip(&ks).map(|(d, k)| d * k[i]).sum::<f64>())
        .collect();
    let f5 = ks.pop().unwrap();
    Ok(Step { y: y5, f: f5, err, dense })
}

struct Step {
    y: Vec<f64>,
    f: Vec<f64>,
    err: Vec<f64>,
    dense: Vec<f64>,
}

fn weighted_rms(err: &[f64], y0: &[f64], y1: &[f64], opts: &SolverOptions) -> f64 {
    let n = err.len() as f64;
    let s: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = opts.abs_tol + opts.rel_tol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

fn initial_step<F>(rhs: &F, t0: f64, y0: &[f64], f0: &[f64], span: f64, opts: &SolverOptions) -> Result<f64>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let scaled = |v: &[f64]| {
        let n = v.len() as f64;
        (v.iter()
            .zip(y0)
            .map(|(x, y)| (x / (opts.abs_tol + opts.rel_tol * y.abs())).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
    };
    let d0 = scaled(y0);
    let d1 = scaled(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span.abs());
    let dir = span.signum();
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + dir * h0 * f).collect();
    let f1 = rhs(t0 + dir * h0, &y1);
    check_finite(t0, &f1)?;
    let df: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = scaled(&df) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(opts.max_step).min(span.abs()))
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t1` (either direction).
/// `project` is applied to every accepted state (renormalization onto a
/// constraint manifold).
pub fn solve<F, P>(
    rhs: F,
    project: P,
    t0: f64,
    y0: &[f64],
    t1: f64,
    opts: &SolverOptions,
) -> Result<DenseTrajectory>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
    P: Fn(&mut [f64]),
{
    let dim = y0.len();
    let mut y = y0.to_vec();
    project(&mut y);
    let mut f = rhs(t0, &y);
    check_finite(t0, &f)?;
    let mut traj = DenseTrajectory {
        dim,
        ts: vec![t0],
        ys: y.clone(),
        fs: f.clone(),
        ds: Vec::new(),
    };
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(traj);
    }
    let dir = span.signum();
    let mut t = t0;

    let accept = |traj: &mut DenseTrajectory, t: f64, y: &[f64], f: &[f64], d: &[f64]| -> Result<()> {
        let big = y.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if big > opts.blowup || !big.is_finite() {
            return Err(Error::BlowUp { t, norm: big });
        }
        traj.ts.push(t);
        traj.ys.extend_from_slice(y);
        traj.fs.extend_from_slice(f);
        traj.ds.extend_from_slice(d);
        Ok(())
    };

    match opts.stepping {
        Stepping::Fixed { steps } => {
            let steps = steps.max(1);
            let h = span / steps as f64;
            for i in 0..steps {
                let Step { y: mut yn, f: fnew, dense, .. } = dp_step(&rhs, t, &y, &f, h)?;
                let tn = if i + 1 == steps { t1 } else { t0 + (i + 1) as f64 * h };
                project(&mut yn);
                accept(&mut traj, tn, &yn, &fnew, &dense)?;
                t = tn;
                y = yn;
                f = fnew;
            }
        }
        Stepping::Adaptive => {
            let mut h = initial_step(&rhs, t0, &y, &f, span, opts)?;
            let mut rejected = false;
            let mut n_steps = 0usize;
            while dir * (t1 - t) > 0.0 {
                n_steps += 1;
                if n_steps > opts.max_steps {
                    return Err(Error::StepLimit { t, steps: opts.max_steps });
                }
                if h < 16.0 * f64::EPSILON * t.abs().max(1.0) {
                    return Err(Error::StepUnderflow { t, h });
                }
                let last = dir * (t + dir * h - t1) >= 0.0
                    || (t1 - (t + dir * h)).abs() < 1e-12 * (1.0 + t1.abs());
                let hs = if last { t1 - t } else { dir * h };
                let Step { y: mut yn, f: fnew, err, dense } = dp_step(&rhs, t, &y, &f, hs)?;
                let e = weighted_rms(&err, &y, &yn, opts);
                if !e.is_finite() {
                    return Err(Error::NonFinite { t });
                }
                if e <= 1.0 {
                    let tn = if last { t1 } else { t + hs };
                    project(&mut yn);
                    accept(&mut traj, tn, &yn, &fnew, &dense)?;
                    t = tn;
                    y = yn;
                    f = fnew;
                    let mut fac = if e == 0.0 { 5.0 } else { 0.9 * e.powf(-0.2) };
                    fac = fac.clamp(0.2, if rejected { 1.0 } else { 5.0 });
                    h = (hs.abs() * fac).min(opts.max_step);
                    rejected = false;
                } else {
                    let fac = (0.9 * e.powf(-0.2)).clamp(0.2, 1.0);
                    h = hs.abs() * fac;
                    rejected = true;
                }
            }
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_projection(_: &mut [f64]) {}

    #[test]
    fn exponential_decay() {
        let traj = solve(
            |_, y| vec![-y[0]],
            no_projection,
            0.0,
            &[1.0],
            5.0,
            &SolverOptions::default(),
        )
        .unwrap();
        assert!((traj.final_state()[0] - (-5.0f64).exp()).abs() < 1e-10);
        for &t in &[0.123, 1.7, 3.33, 4.99] {
            assert!((traj.state(t)[0] - (-t).exp()).abs() < 1e-9, "t={t}");
            assert!((traj.derivative(t)[0] + (-t).exp()).abs() < 1e-6);
        }
    }

    #[test]
    fn backward_integration() {
        let traj = solve(
            |_, y| vec![y[1], -y[0]],
            no_projection,
            0.0,
            &[0.0, 1.0],
            -2.0,
            &SolverOptions::default(),
        )
        .unwrap();
        let s = traj.final_state();
        assert!((s[0] - (-2.0f64).sin()).abs() < 1e-9);
        assert!((traj.state(-1.0)[0] - (-1.0f64).sin()).abs() < 1e-9);
    }

    #[test]
    fn fixed_steps_converge_at_fifth_order() {
        let run = |n| {
            let tr = solve(|_, y| vec![y[0]], no_projection, 0.0, &[1.0], 1.0, &SolverOptions::fixed(n))
                .unwrap();
            (tr.final_state()[0] - 1f64.exp()).abs()
        };
        let ratio = run(4) / run(8);
        assert!(ratio > 25.0, "ratio {ratio}");
    }

    #[test]
    fn blow_up_is_reported() {
        let r = solve(
            |_, y| vec![y[0] * y[0]],
            no_projection,
            0.0,
            &[1.0],
            2.0,
            &SolverOptions::default(),
        );
        assert!(matches!(r, Err(Error::BlowUp { .. }) | Err(Error::StepUnderflow { .. })));
    }

    #[test]
    fn nan_field_is_reported() {
        let r = solve(
            |t, _| vec![if t > 0.5 { f64::NAN } else { 1.0 }],
            no_projection,
            0.0,
            &[0.0],
            1.0,
            &SolverOptions::default(),
        );
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }
}
