//! `simulate`: sample the noise, certify a horizon, solve the mild equation
//! by Picard iteration and write snapshots and diagnostics.

use henon_spde::fbm::{HurstParameter, TimeGrid};
use henon_spde::heat::{lq_norm, write_field, SingularWeight};
use henon_spde::mild::{
    certify_pathwise, estimate_existence_time, picard_solve, DerivedExponents, ExistenceCertificate, Metric, PicardMap, PicardOptions,
    ProblemSpec,
};
use henon_spde::noise::{sample_noise_path_with, NoisePath};

use super::{basis, c0_value, exponents, noise_options, number_or, problem, radius_policy};
use crate::config::{key, Config, KeySpec, Kind};
use crate::output::{num, opt, plot_script, write_csv, write_text};
use crate::{RunContext, RunError};

pub(super) fn keys() -> Vec<KeySpec> {
    let mut k = vec![key("seed", Kind::Int, "0")];
    k.extend(super::grid_keys("3", "4", "32"));
    k.extend(super::model_keys());
    k.extend([
        key("time.horizon", Kind::Float, "1"),
        key("time.intervals", Kind::Int, "32"),
        key("time.grid", Kind::Word(&["uniform", "graded"]), "uniform"),
        key("time.grading", Kind::Float, "2"),
    ]);
    k.extend(super::noise_keys());
    k.extend(super::certificate_keys());
    k.extend([
        key("simulate.use_certificate", Kind::Bool, "true"),
        key("picard.tol", Kind::Float, "1e-10"),
        key("picard.max_iter", Kind::Int, "100"),
        key("picard.radius", super::ANY, "auto"),
        key("output.snapshots", Kind::Int, "4"),
    ]);
    k
}

fn time_grid(cfg: &Config, horizon: f64) -> Result<TimeGrid, RunError> {
    let intervals = cfg.count("time.intervals", 1)?;
    Ok(match cfg.word("time.grid")? {
        "graded" => TimeGrid::graded(horizon, intervals, cfg.positive("time.grading")?)?,
        _ => TimeGrid::uniform(horizon, intervals)?,
    })
}

/// The certificate (when requested) and the noise path the solve runs on.
fn noise_and_certificate(
    cfg: &Config,
    spec: &ProblemSpec,
    exps: &DerivedExponents,
    ctx: &mut RunContext,
) -> Result<(Option<ExistenceCertificate>, Option<NoisePath>), RunError> {
    let noisy = cfg.bool("noise.enabled")?;
    let h = HurstParameter::new(spec.hurst)?;
    if !cfg.bool("simulate.use_certificate")? {
        if !noisy {
            return Ok((None, None));
        }
        let b = basis(cfg, spec.grid())?;
        let z = sample_noise_path_with(&b, &time_grid(cfg, spec.horizon_hint)?, h, spec.seed, &noise_options(cfg)?)?;
        return Ok((None, Some(z)));
    }
    let c0 = c0_value(cfg, spec, exps, ctx)?;
    ctx.manifest.set("certificate.c0", c0);
    let policy = radius_policy(cfg)?;
    let b = basis(cfg, spec.grid())?;
    let intervals = cfg.count("time.intervals", 1)?;
    let (cert, z) = if noisy {
        let rounds = cfg.count("certificate.rounds", 1)?;
        let (c, z) = certify_pathwise(spec, exps, &b, &noise_options(cfg)?, intervals, c0, policy.as_ref(), rounds)?;
        (c, Some(z))
    } else {
        let z = NoisePath::zero(&b, &TimeGrid::uniform(spec.horizon_hint, intervals)?, h);
        (estimate_existence_time(spec, exps, &z, c0, policy.as_ref())?, None)
    };
    ctx.manifest.set("certificate.t_star", cert.t_star);
    ctx.manifest.set("certificate.m", cert.m);
    ctx.manifest.set("certificate.k", cert.k_at_t);
    ctx.manifest.set("certificate.binding", cert.binding);
    ctx.manifest.set("certificate.policy", cert.policy);
    Ok((Some(cert), z))
}

const PICARD_PLOT: &str = r#"# Renders picard.csv; run with python3 from this directory.
import csv
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

with open("picard.csv", newline="") as f:
    rows = list(csv.DictReader(f))
fig, (a, b) = plt.subplots(2, 1, figsize=(6, 6))
a.semilogy([int(r["iteration"]) for r in rows], [float(r["distance"]) for r in rows], marker="o")
a.set_xlabel("iteration")
a.set_ylabel("d(u_k+1, u_k)")
pts = [(int(r["iteration"]), float(r["ratio"])) for r in rows if r["ratio"]]
if pts:
    b.plot(*zip(*pts), marker="o")
b.axhline(0.5, linestyle="--", color="grey")
b.set_xlabel("iteration")
b.set_ylabel("contraction ratio")
fig.tight_layout()
fig.savefig("picard.png", dpi=150)
"#;

pub(super) fn run(cfg: &Config, ctx: &mut RunContext) -> Result<(), RunError> {
    let seed = cfg.u64("seed")?;
    let spec = problem(cfg, cfg.positive("time.horizon")?, seed)?;
    let exps = exponents(ctx, &spec)?;
    let (cert, z) = noise_and_certificate(cfg, &spec, &exps, ctx)?;
    let weight = SingularWeight::new(*spec.grid(), spec.gamma)?;
    let map = match (&z, &cert) {
        (Some(z), _) => PicardMap::new(&spec.u0, weight, spec.p, z)?,
        (None, Some(c)) => PicardMap::without_noise(&spec.u0, weight, spec.p, time_grid(cfg, c.t_star)?)?,
        (None, None) => PicardMap::without_noise(&spec.u0, weight, spec.p, time_grid(cfg, spec.horizon_hint)?)?,
    };
    let radius = match cfg.raw("picard.radius") {
        "none" => None,
        "auto" => cert.as_ref().map(|c| c.m),
        _ => Some(number_or(cfg, "picard.radius", "auto")?.filter(|m| *m > 0.0).ok_or_else(|| {
            cfg.invalid("picard.radius", "expected a positive number, `auto` or `none`")
        })?),
    };
    let opts = PicardOptions {
        tol: cfg.positive("picard.tol")?,
        max_iter: cfg.count("picard.max_iter", 1)?,
        radius,
    };
    ctx.manifest.set("picard.radius", opt(radius));
    ctx.manifest.set("picard.horizon", map.times().horizon());
    let metric = Metric {
        q: spec.q,
        r: exps.r,
        sigma: exps.sigma,
    };
    let sol = picard_solve(&map, &metric, &opts, None)?;

    let mut rows = Vec::new();
    for (k, d) in sol.picard_distances.iter().enumerate() {
        let ratio = if k == 0 { None } else { sol.contraction_ratios.get(k - 1).copied() };
        rows.push(vec![(k + 1).to_string(), num(*d), opt(ratio)]);
    }
    write_csv(&ctx.path("picard.csv"), &["iteration", "distance", "ratio"], &rows)?;
    write_text(&ctx.path("plot_picard.py"), PICARD_PLOT)?;

    // constant positive data without weight or noise solves u' = u^p
    let oracle = (spec.gamma == 0.0 && z.is_none() && cfg.word("initial.shape")? == "constant")
        .then(|| cfg.f64("initial.amplitude"))
        .transpose()?
        .filter(|c| *c > 0.0);
    let times = map.times().nodes();
    let fields = sol.trajectory.fields();
    let mut norm_rows = Vec::new();
    let mut worst = 0.0f64;
    for (t, f) in times.iter().zip(fields) {
        let err = oracle.map(|c| {
            let exact = c * (1.0 - (spec.p - 1.0) * c.powf(spec.p - 1.0) * t).powf(-1.0 / (spec.p - 1.0));
            f.values().iter().map(|v| ((v - exact) / exact).abs()).fold(0.0, f64::max)
        });
        if let Some(e) = err {
            worst = worst.max(e);
        }
        let nr = lq_norm(f, metric.r)?;
        norm_rows.push(vec![
            num(*t),
            num(lq_norm(f, spec.q)?),
            num(nr),
            num(if *t > 0.0 { t.powf(metric.sigma) * nr } else { 0.0 }),
            num(f.max_abs()),
            opt(err),
        ]);
    }
    write_csv(
        &ctx.path("norms.csv"),
        &["t", "norm_q", "norm_r", "weighted_norm_r", "max_abs", "oracle_error"],
        &norm_rows,
    )?;
    write_text(
        &ctx.path("plot_norms.py"),
        &plot_script("norms.csv", "t", &["norm_q", "weighted_norm_r"], false, false, "solution norms"),
    )?;
    if oracle.is_some() {
        ctx.manifest.set("oracle.max_relative_error", worst);
    }

    let count = cfg.usize("output.snapshots")?.min(times.len());
    let mut snaps = Vec::new();
    for s in 0..count {
        let j = if count == 1 { times.len() - 1 } else { s * (times.len() - 1) / (count - 1) };
        let name = format!("u_{j:05}.bin");
        write_field(&ctx.path(&name), &fields[j])?;
        snaps.push(vec![j.to_string(), num(times[j]), name]);
    }
    write_csv(&ctx.path("snapshots.csv"), &["node", "t", "file"], &snaps)?;

    ctx.manifest.set("picard.iterations", sol.iterations());
    ctx.manifest.set("picard.converged", sol.converged);
    ctx.manifest.set("picard.residual", sol.residual);
    ctx.manifest.set("picard.max_ratio", sol.max_ratio());
    if !sol.converged {
        return Err(RunError::NotConverged {
            iterations: sol.iterations(),
            distance: sol.picard_distances.last().copied().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}
