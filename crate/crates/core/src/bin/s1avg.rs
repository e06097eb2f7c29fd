use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use s1avg::bounds::surface_sweep;
use s1avg::error::Result;
use s1avg::geometry::Point;
use s1avg::harness::{
    adiabatic_csv, adiabatic_with, check_first_integral, format_float, normal_form_csv, shear_family, sigma_check,
    sweep_csv, verify_with, write_table, Experiment,
};
use s1avg::normalform::normal_form;
use s1avg::ode::SolverOptions;
use s1avg::vfdsl::{load_config, SystemConfig};

#[derive(Parser)]
#[command(name = "s1avg", version, about = "Periodic averaging on S1-principal bundles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// System configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output CSV (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Smallest epsilon of the sweep
    #[arg(long)]
    eps_min: Option<f64>,
    /// Largest epsilon of the sweep
    #[arg(long)]
    eps_max: Option<f64>,
    /// Number of geometrically spaced epsilons
    #[arg(long)]
    eps_count: Option<usize>,
    /// Quadrature nodes on each orbit.
    #[arg(long)]
    nodes: Option<usize>,
    /// Integrator tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Seed of the low-discrepancy sample shift.
    #[arg(long)]
    seed: Option<u64>,
    /// Record wall-clock times (output is no longer byte-reproducible).
    #[arg(long)]
    timings: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Trajectory of the reduced averaged field on [0, L0].
    Average(Common),
    /// First-order normal-form defects over the sweep.
    NormalForm(Common),
    /// Averaging error, triangle terms and the bound c*eps.
    Verify(Common),
    /// Drift of the configured first integral.
    Adiabatic(Common),
    /// The constants kappa0, kappa1, kappa2 and c.
    Bounds(Common),
    /// Surface-length estimates, including the normal-form surface.
    Gronwall {
        #[command(flatten)]
        common: Common,
        /// Perturbation size for the normal-form surface (default eps0).
        #[arg(long)]
        eps: Option<f64>,
        /// Panels in s.
        #[arg(long, default_value_t = 6)]
        ns: usize,
        /// Time samples.
        #[arg(long, default_value_t = 11)]
        nt: usize,
    },
}

fn load(c: &Common) -> Result<SystemConfig> {
    let mut cfg = load_config(&c.config)?;
    cfg.apply_overrides(c.eps_min, c.eps_max, c.eps_count, c.nodes, c.tol, c.seed)?;
    Ok(cfg)
}

fn emit(c: &Common, text: &str) -> Result<()> {
    match &c.out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn verdict(ok: bool, failures: &[String]) -> bool {
    for f in failures {
        eprintln!("violation: {f}");
    }
    eprintln!("verdict: {}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Average(c) => {
            let cfg = load(&c)?;
            let exp = Experiment::new(&cfg)?;
            let n = 100;
            let dim = exp.kind().orbit_dim();
            let header = std::iter::once("tau".to_string())
                .chain((1..=dim).map(|i| format!("z{i}")))
                .collect::<Vec<_>>()
                .join(",");
            let rows: Vec<Vec<f64>> = (0..=n)
                .map(|i| {
                    let tau = cfg.l0 * i as f64 / n as f64;
                    std::iter::once(tau).chain(exp.averaged.position(tau)).collect()
                })
                .collect();
            let mut buf = Vec::new();
            write_table(&mut buf, &header, &rows, None)?;
            emit(&c, &String::from_utf8_lossy(&buf))?;
            Ok(true)
        }
        Command::NormalForm(c) => {
            let cfg = load(&c)?;
            let exp = Experiment::new(&cfg)?;
            let probes: Vec<Point> = cfg
                .sampler()
                .low_discrepancy_points(16)
                .iter()
                .map(|p| Point::new(cfg.kind, p.clone()))
                .collect::<Result<_>>()?;
            let res = normal_form(&exp.model, &exp.x0, &exp.x1, &exp.z, &exp.quad, &cfg.sweep.eps, &probes)?;
            emit(&c, &normal_form_csv(&res))?;
            eprintln!("defect slope: {:.4}", res.order2_slope);
            let ok = (1.8..=2.2).contains(&res.order2_slope);
            let msg = format!("defect slope {:.4} outside [1.8, 2.2]", res.order2_slope);
            Ok(verdict(ok, if ok { &[] } else { std::slice::from_ref(&msg) }))
        }
        Command::Verify(c) => {
            let cfg = load(&c)?;
            let exp = Experiment::new(&cfg)?;
            let k = exp.constants()?;
            let mut res = verify_with(&exp, &k)?;
            if !c.timings {
                res = res.without_timings();
            }
            emit(&c, &sweep_csv(&res))?;
            eprintln!("sup_error slope: {:.4}; c = {:.6}", res.slope, k.c);
            Ok(verdict(res.passed(), &res.violations()))
        }
        Command::Adiabatic(c) => {
            let cfg = load(&c)?;
            let exp = Experiment::new(&cfg)?;
            let defect = check_first_integral(&exp)?;
            let k = exp.constants()?;
            let mut res = adiabatic_with(&exp, &k, defect)?;
            if !c.timings {
                res = res.without_timings();
            }
            emit(&c, &adiabatic_csv(&res))?;
            eprintln!("drift slope: {:.4}; lambda_J = {:.6}", res.slope, res.lambda_j);
            Ok(verdict(res.passed(), &res.violations()))
        }
        Command::Bounds(c) => {
            let cfg = load(&c)?;
            let exp = Experiment::new(&cfg)?;
            let k = exp.constants()?;
            let at = |v: &[f64]| v.iter().map(|x| format_float(*x)).collect::<Vec<_>>().join(";");
            let mut text = String::from("quantity,value,eps,at\n");
            text += &format!("kappa0,{},,{}\n", format_float(k.kappa0), at(&k.kappa0_at));
            text += &format!(
                "kappa1,{},{},{}\n",
                format_float(k.kappa1),
                format_float(k.kappa1_at.0),
                at(&k.kappa1_at.1)
            );
            text += &format!(
                "kappa2,{},{},{}\n",
                format_float(k.kappa2),
                format_float(k.kappa2_at.0),
                at(&k.kappa2_at.1)
            );
            text += &format!("c,{},,\n", format_float(k.c));
            text += &format!("epsilon0,{},,\n", format_float(k.epsilon0));
            text += &format!("L0,{},,\n", format_float(k.l0));
            text += &format!("# samples={} ({})\n", k.samples, cfg.sampler().resolution());
            emit(&c, &text)?;
            Ok(verdict(k.c >= k.kappa0, &[]))
        }
        Command::Gronwall { common: c, eps, ns, nt } => {
            let cfg = load(&c)?;
            let exp = Experiment::new(&cfg)?;
            let k = exp.constants()?;
            let eps = eps.unwrap_or(cfg.eps0);
            let sigma = sigma_check(&exp, &k, eps, ns, nt)?;
            let shear = surface_sweep(&shear_family(), 2.0, ns, nt, &SolverOptions::with_tol(cfg.tol))?;
            let rows: Vec<Vec<f64>> = (0..sigma.sweep.times.len())
                .map(|i| {
                    vec![
                        sigma.sweep.times[i],
                        sigma.sweep.lengths[i],
                        sigma.sweep.bounds[i],
                        sigma.mmn_bounds[i],
                    ]
                })
                .collect();
            let mut buf = Vec::new();
            write_table(&mut buf, "t,length,gronwall_bound,mmn_bound", &rows, None)?;
            emit(&c, &String::from_utf8_lossy(&buf))?;
            eprintln!(
                "surface at eps = {eps:e}: C1 = {:.6}, C2 = {:.6e}; edge defects {:.2e}, {:.2e}",
                sigma.sweep.c1, sigma.sweep.c2, sigma.edge0_defect, sigma.edge1_defect
            );
            let mut fails: Vec<String> = sigma
                .sweep
                .violations
                .iter()
                .map(|t| format!("surface length above its Gronwall bound at t = {t}"))
                .collect();
            fails.extend(sigma.mmn_violations.iter().map(|t| format!("surface length above the kappa bound at t = {t}")));
            fails.extend(shear.violations.iter().map(|t| format!("shear family above its bound at t = {t}")));
            Ok(verdict(fails.is_empty(), &fails))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
