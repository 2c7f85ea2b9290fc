//! Subcommand implementations.

use crate::config::Context;
use anyhow::{anyhow, bail, Context as _, Result};
use clap::Args;
use kvn_forms::dynamics::{lyapunov, lyapunov_ensemble, parse_hamiltonian, HamiltonianModel};
use kvn_forms::grassmann::{Algebra, Multivector};
use kvn_forms::identities::{run_identity_suite, ProductName};
use kvn_forms::lie::{
    evolve_fiber, ferm_matrix, ring_liouvillian_spectrum, spectrum_json,
};
use kvn_forms::linalg::{c, cr};
use kvn_forms::metrics::{
    gauge_metric, general_metric, hermiticity_residual, signature, svh_metric, symplectic_metric,
    GeneralFamily, Metric,
};
use kvn_forms::nogo::{nogo_sweep, RESIDUAL_TOL};
use kvn_forms::physical::{
    ferm_kernel, random_hessians, subspace_json, svh_physical_basis,
};
use kvn_forms::canonical::{hermiticity_invariance, pushforward_metric, scaling_transform};
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;


fn merged_metric<'a>(args_metric: &'a Option<String>, ctx: &'a Context) -> Option<&'a str> {
    args_metric.as_deref().or(ctx.file.metric.as_deref())
}

fn merged_metric_params<'a>(args_params: &'a Option<String>, ctx: &'a Context) -> Option<&'a str> {
    args_params.as_deref().or(ctx.file.metric_params.as_deref())
}

fn merged_mass(flag: f64, ctx: &Context) -> f64 {
    if flag != 1.0 { flag } else { ctx.file.mass.unwrap_or(flag) }
}

fn merged_lambda4(flag: f64, ctx: &Context) -> f64 {
    if flag != 1.0 { flag } else { ctx.file.lambda4.unwrap_or(flag) }
}

pub enum Outcome {
    Pass,
    AssertionFailed(String),
}

fn parse_metric(
    algebra: &Algebra,
    name: Option<&str>,
    params: Option<&str>,
) -> Result<Metric> {
    let name = name.unwrap_or("svh");
    if let Some(path) = name.strip_prefix("file:") {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
        let metric = Metric::from_json(&text)?;
        if metric.algebra() != algebra {
            bail!(
                "metric file is for n = {}, expected n = {}",
                metric.algebra().n_pairs(),
                algebra.n_pairs()
            );
        }
        return Ok(metric);
    }
    let kv = parse_params(params)?;
    let get = |key: &str| -> Option<f64> { kv.iter().find(|(k, _)| k == key).map(|(_, v)| *v) };
    let get_c = |key: &str| -> Option<C64> {
        kv.iter().find(|(k, _)| k == key).map(|(_, v)| cr(*v)).or_else(|| {
            params.and_then(|p| {
                p.split(',').find_map(|pair| {
                    let (k, v) = pair.split_once('=')?;
                    if k.trim() != key {
                        return None;
                    }
                    match v.trim() {
                        "i" => Some(c(0.0, 1.0)),
                        "-i" => Some(c(0.0, -1.0)),
                        _ => None,
                    }
                })
            })
        })
    };
    let metric = match name {
        "svh" => svh_metric(algebra),
        "gauge" => gauge_metric(algebra)?,
        "symplectic" => symplectic_metric(algebra),
        "generalA" => {
            let b = get("b").ok_or_else(|| anyhow!("generalA needs b=<real>"))?;
            general_metric(algebra, GeneralFamily::A { b })?
        }
        "generalB" => {
            let theta = get("theta").unwrap_or(0.0);
            let gamma_i = get("gammaI").unwrap_or(0.0);
            let g03 = get_c("g03").ok_or_else(|| anyhow!("generalB needs g03=<i|-i|real>"))?;
            general_metric(algebra, GeneralFamily::B { theta_alpha: theta, gamma_i, g03 })?
        }
        "generalC" => {
            let theta = get("theta").unwrap_or(0.0);
            let b = get("b").unwrap_or(0.0);
            let g03 = get_c("g03").ok_or_else(|| anyhow!("generalC needs g03=<i|-i|real>"))?;
            general_metric(algebra, GeneralFamily::C { theta_alpha: theta, b, g03 })?
        }
        other => bail!("unknown metric '{other}'"),
    };
    Ok(metric)
}

fn parse_params(params: Option<&str>) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    if let Some(text) = params {
        for pair in text.split(',') {
            let pair = pair.trim();
            if pair.is_empty() {
                continue;
            }
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| anyhow!("metric params expect k=v pairs, got '{pair}'"))?;
            if let Ok(x) = v.trim().parse::<f64>() {
                out.push((k.trim().to_string(), x));
            }
        }
    }
    Ok(out)
}

fn parse_model(
    potential: Option<&str>,
    n: usize,
    mass: f64,
    omega: f64,
    lambda4: f64,
) -> Result<HamiltonianModel> {
    let text = potential.unwrap_or("harmonic");
    let model = match text {
        "harmonic" => HamiltonianModel::harmonic(mass, omega),
        "inverted" => HamiltonianModel::inverted(),
        "free" => HamiltonianModel::free(),
        "quartic" => HamiltonianModel::quartic(lambda4),
        expr => parse_hamiltonian(expr, n)?,
    };
    Ok(model)
}

fn parse_fiber(algebra: &Algebra, spec: &str) -> Result<Multivector> {
    match spec {
        "1" => return Ok(Multivector::one(algebra)),
        "q" => return Ok(Multivector::state_monomial(algebra, &[0])?),
        "p" => return Ok(Multivector::state_monomial(algebra, &[algebra.n_pairs()])?),
        "qp" => {
            return Ok(Multivector::state_monomial(algebra, &[0, algebra.n_pairs()])?);
        }
        "q+ip" => {
            let q = Multivector::state_monomial(algebra, &[0])?;
            let p = Multivector::state_monomial(algebra, &[algebra.n_pairs()])?;
            return Ok(q.add(&p.scale(c(0.0, 1.0))));
        }
        _ => {}
    }
    // JSON triples [[mask, re, im], ...]
    let triples: Vec<(u64, f64, f64)> = serde_json::from_str(spec)
        .map_err(|e| anyhow!("fiber spec '{spec}' is neither a shorthand nor JSON triples: {e}"))?;
    let mut mv = Multivector::zero(algebra);
    for (mask, re, im) in triples {
        if mask as usize >= algebra.state_dim() {
            bail!("fiber monomial mask {mask} out of range");
        }
        mv = mv.add(&Multivector::monomial(algebra, algebra.join_mask(0, mask)).scale(c(re, im)));
    }
    Ok(mv)
}

#[derive(Args)]
pub struct IdentitiesArgs {
    /// Degrees of freedom covered by the suite (1 or 2).
    #[arg(long)]
    pub n: Option<usize>,
    /// Replace a named product's fiber matrix from a metric JSON file.
    #[arg(long)]
    pub metric_file: Option<String>,
    /// Which product the replacement applies to.
    #[arg(long, value_parser = ["svh", "gauge", "symplectic"])]
    pub metric_name: Option<String>,
}

pub fn run_identities(args: &IdentitiesArgs, ctx: &Context) -> Result<Outcome> {
    let n = args.n.or(ctx.file.n).unwrap_or(1);
    if n == 0 || n > 2 {
        bail!("identity suite covers n = 1 and n = 2");
    }
    let override_metric = match (&args.metric_file, &args.metric_name) {
        (Some(path), name) => {
            let text = std::fs::read_to_string(path)?;
            let metric = Metric::from_json(&text)?;
            let which = match name.as_deref().unwrap_or("svh") {
                "gauge" => ProductName::Gauge,
                "symplectic" => ProductName::Symplectic,
                _ => ProductName::Svh,
            };
            Some((which, metric.matrix().clone()))
        }
        (None, Some(_)) => bail!("--metric-name needs --metric-file"),
        (None, None) => None,
    };
    let checks = run_identity_suite(n, override_metric)?;
    let rows: Vec<_> = checks
        .iter()
        .map(|c| {
            json!({
                "name": c.name,
                "max_deviation": c.deviation,
                "tolerance": c.tolerance,
                "pass": c.passed(),
            })
        })
        .collect();
    let failures: Vec<_> = checks.iter().filter(|c| !c.passed()).collect();
    let report = json!({
        "n": n,
        "checks": rows,
        "failed": failures.len(),
    });
    ctx.emit(&serde_json::to_string_pretty(&report)?)?;
    if let Some(first) = failures.first() {
        return Ok(Outcome::AssertionFailed(format!(
            "{} identities failed, first: {} (deviation {:.3e})",
            failures.len(),
            first.name,
            first.deviation
        )));
    }
    Ok(Outcome::Pass)
}

#[derive(Args)]
pub struct HermiticityArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long)]
    pub metric_params: Option<String>,
    /// Potential whose Hessian is evaluated at the sampled points.
    #[arg(long)]
    pub potential: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda4: f64,
    /// Number of random Hessians (or sample points when a potential is set).
    #[arg(long)]
    pub samples: Option<usize>,
}

pub fn run_hermiticity(args: &HermiticityArgs, ctx: &Context) -> Result<Outcome> {
    let n = args.n.or(ctx.file.n).unwrap_or(1);
    let algebra = Algebra::new(n);
    let metric = parse_metric(&algebra, merged_metric(&args.metric, ctx), merged_metric_params(&args.metric_params, ctx))?;
    let samples = args.samples.or(ctx.file.samples).unwrap_or(5);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed());
    let mut rows = Vec::new();
    match &args.potential {
        Some(text) => {
            let model = parse_model(
                Some(text),
                n,
                merged_mass(args.mass, ctx),
                args.omega,
                merged_lambda4(args.lambda4, ctx),
            )?;
            use rand::Rng;
            for k in 0..samples {
                let phi = Array1::from_shape_fn(2 * n, |_| rng.gen_range(-1.0..1.0_f64));
                let hess = model.hessian(&phi)?;
                let f = ferm_matrix(&algebra, &hess)?;
                rows.push(json!({
                    "sample": k,
                    "phi": phi.to_vec(),
                    "residual": hermiticity_residual(&metric, &f),
                }));
            }
        }
        None => {
            for (k, hess) in random_hessians(&mut rng, 2 * n, samples).iter().enumerate() {
                let f = ferm_matrix(&algebra, hess)?;
                rows.push(json!({
                    "sample": k,
                    "residual": hermiticity_residual(&metric, &f),
                }));
            }
        }
    }
    let sig = signature(&metric)?;
    let report = json!({
        "n": n,
        "metric": format!("{:?}", metric.family()),
        "signature": {"plus": sig.0, "minus": sig.1, "zero": sig.2},
        "rows": rows,
    });
    ctx.emit(&serde_json::to_string_pretty(&report)?)?;
    Ok(Outcome::Pass)
}

#[derive(Args)]
pub struct NogoArgs {
    /// Random Hessian samples per metric.
    #[arg(long)]
    pub samples: Option<usize>,
}

pub fn run_nogo(args: &NogoArgs, ctx: &Context) -> Result<Outcome> {
    let samples = args.samples.or(ctx.file.samples).unwrap_or(5);
    let rows = nogo_sweep(ctx.seed(), samples)?;
    let payload: Vec<_> = rows
        .iter()
        .map(|r| {
            json!({
                "family": r.family,
                "params": r.params,
                "consistent": r.consistent,
                "residual": if r.residual.is_nan() { serde_json::Value::Null } else { json!(r.residual) },
                "signature": r.signature.map(|s| json!({"plus": s.0, "minus": s.1, "zero": s.2})),
                "dichotomy_holds": r.dichotomy_holds,
            })
        })
        .collect();
    let report = json!({
        "residual_tolerance": RESIDUAL_TOL,
        "rows": payload,
    });
    ctx.emit(&serde_json::to_string_pretty(&report)?)?;
    if let Some(bad) = rows.iter().find(|r| !r.dichotomy_holds) {
        return Ok(Outcome::AssertionFailed(format!(
            "dichotomy violated at {} {}",
            bad.family, bad.params
        )));
    }
    Ok(Outcome::Pass)
}

#[derive(Args)]
pub struct KernelArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of random Hessians realizing the generic potential.
    #[arg(long)]
    pub samples: Option<usize>,
}

pub fn run_kernel(args: &KernelArgs, ctx: &Context) -> Result<Outcome> {
    let n = args.n.or(ctx.file.n).unwrap_or(1);
    let algebra = Algebra::new(n);
    let samples = args.samples.or(ctx.file.samples).unwrap_or(3).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed());
    let hessians = random_hessians(&mut rng, 2 * n, samples);
    let kernel = ferm_kernel(&algebra, &hessians)?;
    let basis = svh_physical_basis(&algebra)?;
    let d = algebra.state_dim();
    let mut family = Array2::<C64>::zeros((d, basis.len()));
    for (k, mv) in basis.iter().enumerate() {
        family.column_mut(k).assign(&mv.to_state_vector()?);
    }
    let family = kvn_forms::linalg::orthonormalize(&family, 1e-12);
    let cosines = kvn_forms::linalg::principal_angle_cosines(&kernel, &family)?;
    let worst_angle = cosines.iter().map(|c| (1.0 - c).abs()).fold(0.0, f64::max);
    let report = json!({
        "n": n,
        "hessian_samples": samples,
        "kernel_dimension": kernel.ncols(),
        "expected_dimension": n + 1,
        "principal_angle_defect": worst_angle,
        "kernel_basis": serde_json::from_str::<serde_json::Value>(&subspace_json(&kernel))?,
    });
    ctx.emit(&serde_json::to_string_pretty(&report)?)?;
    if kernel.ncols() != n + 1 {
        return Ok(Outcome::AssertionFailed(format!(
            "kernel dimension {} differs from the paired-family count {} (degenerate draw?)",
            kernel.ncols(),
            n + 1
        )));
    }
    if worst_angle > 1e-8 {
        return Ok(Outcome::AssertionFailed(format!(
            "kernel span deviates from the paired family (angle defect {worst_angle:.3e})"
        )));
    }
    Ok(Outcome::Pass)
}

#[derive(Args)]
pub struct EvolveArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long)]
    pub metric_params: Option<String>,
    #[arg(long)]
    pub potential: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda4: f64,
    /// Initial fiber: 1 | q | p | qp | q+ip | JSON [[mask, re, im], ..].
    #[arg(long)]
    pub fiber: Option<String>,
    /// Initial phase point, comma-separated.
    #[arg(long)]
    pub phi0: Option<String>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Keep every k-th sample in the output.
    #[arg(long, default_value_t = 100)]
    pub stride: usize,
}

pub fn run_evolve(args: &EvolveArgs, ctx: &Context) -> Result<Outcome> {
    let n = args.n.or(ctx.file.n).unwrap_or(1);
    let algebra = Algebra::new(n);
    let metric = parse_metric(&algebra, merged_metric(&args.metric, ctx), merged_metric_params(&args.metric_params, ctx))?;
    let model = parse_model(
        args.potential.as_deref().or(ctx.file.potential.as_deref()),
        n,
        merged_mass(args.mass, ctx),
        args.omega,
        merged_lambda4(args.lambda4, ctx),
    )?;
    let fiber_spec = args.fiber.as_deref().or(ctx.file.fiber.as_deref()).unwrap_or("q");
    let fiber0 = parse_fiber(&algebra, fiber_spec)?;
    let phi0 = match &args.phi0 {
        Some(text) => {
            let vals: std::result::Result<Vec<f64>, _> =
                text.split(',').map(|x| x.trim().parse::<f64>()).collect();
            Array1::from_vec(vals.map_err(|e| anyhow!("bad phi0: {e}"))?)
        }
        None => {
            let mut v = Array1::zeros(2 * n);
            v[0] = 1.0;
            v
        }
    };
    if phi0.len() != 2 * n {
        bail!("phi0 needs {} components", 2 * n);
    }
    let t = args.t.or(ctx.file.t).unwrap_or(5.0);
    let dt = args.dt.or(ctx.file.dt).unwrap_or(1e-3);
    let traj = evolve_fiber(&model, &metric, &phi0, &fiber0, t, dt, args.stride)?;
    match ctx.format() {
        "csv" => ctx.emit(&traj.to_csv())?,
        _ => {
            let samples: Vec<_> = traj
                .samples
                .iter()
                .map(|s| {
                    json!({
                        "t": s.t,
                        "phi": s.phi.to_vec(),
                        "norm_sq": s.norm_sq,
                        "fiber": s.fiber.iter().map(|z| vec![z.re, z.im]).collect::<Vec<_>>(),
                    })
                })
                .collect();
            let report = json!({
                "model": model.kind().to_string(),
                "metric": format!("{:?}", metric.family()),
                "energy_drift": traj.energy_drift,
                "samples": samples,
            });
            ctx.emit(&serde_json::to_string_pretty(&report)?)?;
        }
    }
    Ok(Outcome::Pass)
}

#[derive(Args)]
pub struct LyapunovArgs {
    #[arg(long)]
    pub potential: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda4: f64,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub renorm: Option<f64>,
    /// Monte-Carlo orbit count; 0 runs only the single provided orbit.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub phi0: Option<String>,
    /// Half-width of the sampling box for initial conditions.
    #[arg(long)]
    pub box_half: Option<f64>,
}

pub fn run_lyapunov(args: &LyapunovArgs, ctx: &Context) -> Result<Outcome> {
    let model = parse_model(
        args.potential.as_deref().or(ctx.file.potential.as_deref()),
        1,
        merged_mass(args.mass, ctx),
        args.omega,
        merged_lambda4(args.lambda4, ctx),
    )?;
    let t = args.t.or(ctx.file.t).unwrap_or(20.0);
    let dt = args.dt.or(ctx.file.dt).unwrap_or(1e-3);
    let renorm = args.renorm.or(ctx.file.renorm).unwrap_or(1.0);
    let samples = args.samples.or(ctx.file.samples).unwrap_or(0);
    let box_half = args.box_half.or(ctx.file.box_half).unwrap_or(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed());

    let phi0 = match &args.phi0 {
        Some(text) => {
            let vals: std::result::Result<Vec<f64>, _> =
                text.split(',').map(|x| x.trim().parse::<f64>()).collect();
            Array1::from_vec(vals.map_err(|e| anyhow!("bad phi0: {e}"))?)
        }
        None => Array1::from_vec(vec![0.1, 0.0]),
    };
    use rand::Rng;
    let tangent = Array1::from_shape_fn(model.dim(), |_| rng.gen_range(-1.0..1.0_f64));
    let single = lyapunov(&model, &phi0, t, dt, renorm, &tangent)?;
    let ensemble = if samples > 0 {
        lyapunov_ensemble(&model, &mut rng, samples, box_half, t, dt, renorm)?
    } else {
        Vec::new()
    };
    let mean = if ensemble.is_empty() {
        serde_json::Value::Null
    } else {
        json!(ensemble.iter().sum::<f64>() / ensemble.len() as f64)
    };
    let report = json!({
        "model": model.kind().to_string(),
        "t": t,
        "dt": dt,
        "renorm_interval": renorm,
        "single_orbit": {"phi0": phi0.to_vec(), "exponent": single},
        "ensemble": ensemble,
        "ensemble_mean": mean,
    });
    ctx.emit(&serde_json::to_string_pretty(&report)?)?;
    Ok(Outcome::Pass)
}

#[derive(Args)]
pub struct CanonicalArgs {
    /// Scaling parameter of q' = alpha q, p' = p / alpha.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long)]
    pub metric_params: Option<String>,
    #[arg(long)]
    pub potential: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda4: f64,
    /// Evaluation point, comma-separated.
    #[arg(long)]
    pub phi0: Option<String>,
    /// Explicit 2x2 transform as JSON rows, overriding --alpha.
    #[arg(long)]
    pub matrix: Option<String>,
}

pub fn run_canonical(args: &CanonicalArgs, ctx: &Context) -> Result<Outcome> {
    let algebra = Algebra::new(1);
    let metric = parse_metric(&algebra, merged_metric(&args.metric, ctx), merged_metric_params(&args.metric_params, ctx))?;
    let model = parse_model(
        args.potential.as_deref().or(ctx.file.potential.as_deref()),
        1,
        merged_mass(args.mass, ctx),
        args.omega,
        merged_lambda4(args.lambda4, ctx),
    )?;
    let transform = match &args.matrix {
        Some(text) => {
            let rows: Vec<Vec<f64>> = serde_json::from_str(text)?;
            if rows.len() != 2 || rows.iter().any(|r| r.len() != 2) {
                bail!("--matrix expects a 2x2 JSON array");
            }
            let m = Array2::from_shape_fn((2, 2), |(i, j)| rows[i][j]);
            kvn_forms::canonical::LinearCanonical::new(&algebra, m)?
        }
        None => {
            let alpha = args.alpha.or(ctx.file.alpha).unwrap_or(1.0);
            scaling_transform(&algebra, alpha)?
        }
    };
    let phi = match &args.phi0 {
        Some(text) => {
            let vals: std::result::Result<Vec<f64>, _> =
                text.split(',').map(|x| x.trim().parse::<f64>()).collect();
            Array1::from_vec(vals.map_err(|e| anyhow!("bad phi0: {e}"))?)
        }
        None => Array1::from_vec(vec![0.5, -0.3]),
    };
    let report = hermiticity_invariance(&model, &metric, &transform, &phi)?;
    let pushed = pushforward_metric(&metric, &transform)?;
    let sig_before = signature(&metric)?;
    let sig_after = signature(&pushed)?;
    let payload = json!({
        "model": model.kind().to_string(),
        "metric": format!("{:?}", metric.family()),
        "transform": [[transform.matrix()[(0,0)], transform.matrix()[(0,1)]],
                      [transform.matrix()[(1,0)], transform.matrix()[(1,1)]]],
        "residual_before": report.residual_before,
        "residual_after": report.residual_after,
        "lift_condition": report.lift_condition,
        "signature_before": {"plus": sig_before.0, "minus": sig_before.1, "zero": sig_before.2},
        "signature_after": {"plus": sig_after.0, "minus": sig_after.1, "zero": sig_after.2},
    });
    ctx.emit(&serde_json::to_string_pretty(&payload)?)?;
    let scale = report.residual_before.abs().max(1.0) * report.lift_condition.max(1.0);
    if (report.residual_before - report.residual_after).abs() > 1e-8 * scale {
        return Ok(Outcome::AssertionFailed(format!(
            "hermiticity character changed: {} -> {}",
            report.residual_before, report.residual_after
        )));
    }
    if sig_before != sig_after {
        return Ok(Outcome::AssertionFailed("signature changed under pushforward".into()));
    }
    Ok(Outcome::Pass)
}

#[derive(Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub n_theta: Option<usize>,
}

pub fn run_spectrum(args: &SpectrumArgs, ctx: &Context) -> Result<Outcome> {
    let omega = args.omega.or(ctx.file.omega).unwrap_or(1.0);
    let n_theta = args.n_theta.or(ctx.file.n_theta).unwrap_or(32);
    let vals = ring_liouvillian_spectrum(omega, n_theta)?;
    ctx.emit(&spectrum_json(&vals))?;
    // exact Fourier differentiation: every eigenvalue is omega * integer
    let worst = vals
        .iter()
        .map(|v| {
            let k = (v / omega).round();
            (v - omega * k).abs()
        })
        .fold(0.0, f64::max);
    if worst > 1e-9 {
        return Ok(Outcome::AssertionFailed(format!(
            "spectrum deviates from the omega * k grid by {worst:.3e}"
        )));
    }
    Ok(Outcome::Pass)
}
